#include <Eigen/SVD>

#include "precise.hpp"
#include "steinpoly/completeness.hpp"
#include "steinpoly/errors.hpp"

namespace steinpoly {

std::vector<double> normalized_singular_values(const KernelMatrix& k) {
  if (!k.precise) throw InvalidArgument("kernel has no entries");
  MatrixX50 a = k.precise->entries;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const Real50 norm = a.col(j).norm();
    if (norm > 0) a.col(j) /= norm;
  }
  const Eigen::JacobiSVD<MatrixX50> svd(a);
  const auto& s = svd.singularValues();
  std::vector<double> out;
  for (Eigen::Index i = 0; i < s.size(); ++i) out.push_back(static_cast<double>(s(i)));
  return out;
}

}  // namespace steinpoly
