#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <Eigen/Dense>

#include "steinpoly/completeness.hpp"

namespace steinpoly {

using Real50 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>,
                                             boost::multiprecision::et_off>;
using MatrixX50 = Eigen::Matrix<Real50, Eigen::Dynamic, Eigen::Dynamic>;

struct KernelMatrix::Precise {
  MatrixX50 entries;
};

}  // namespace steinpoly
