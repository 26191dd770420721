#include "steinpoly/completeness.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "precise.hpp"
#include "steinpoly/errors.hpp"
#include "steinpoly/law.hpp"
#include "steinpoly/parallel.hpp"
#include "steinpoly/quadrature.hpp"

namespace steinpoly {

namespace {

const Real50 kNegInf = -std::numeric_limits<Real50>::infinity();

Real50 lgamma50(const Real50& v) { return boost::math::lgamma(v); }

// Log mass at x evaluated at 50 digits from the (double) law parameters.
Real50 log_mass(const Law& law, long x) {
  const Real50 xr = x;
  if (const auto* p = std::get_if<law::Poisson>(&law)) {
    const Real50 r = p->rate;
    if (r == 0) return x == 0 ? Real50(0) : kNegInf;
    return -r + xr * log(r) - lgamma50(xr + 1);
  }
  if (const auto* nb = std::get_if<law::NegBinomial>(&law)) {
    const Real50 a = nb->size;
    const Real50 q = nb->prob;
    return lgamma50(xr + a) - lgamma50(a) - lgamma50(xr + 1) + a * log(q) + xr * log(1 - q);
  }
  const auto& b = std::get<law::Binomial>(law);
  if (x > b.n) return kNegInf;
  const Real50 n = b.n;
  const Real50 p = b.p;
  return lgamma50(n + 1) - lgamma50(xr + 1) - lgamma50(n - xr + 1) + xr * log(p) + (n - xr) * log(1 - p);
}

void finish(KernelMatrix& k, MatrixX50 hp) {
  k.entries.resize(hp.rows(), hp.cols());
  for (Eigen::Index i = 0; i < hp.rows(); ++i)
    for (Eigen::Index j = 0; j < hp.cols(); ++j) k.entries(i, j) = static_cast<double>(hp(i, j));
  k.row_sums.resize(hp.rows());
  for (Eigen::Index i = 0; i < hp.rows(); ++i) k.row_sums(i) = static_cast<double>(hp.row(i).sum());
  auto p = std::make_shared<KernelMatrix::Precise>();
  p->entries = std::move(hp);
  k.precise = std::move(p);
}

}  // namespace

KernelMatrix build_kernel(const CondFamily& fam, const std::vector<double>& z_grid, long x_trunc,
                          const KernelOptions& opt) {
  if (x_trunc < 1) throw InvalidArgument("x_trunc must be positive");
  if (static_cast<long>(z_grid.size()) < x_trunc) {
    throw InvalidArgument("the kernel needs at least x_trunc instrument values");
  }
  if (fam.dim() != 1) throw UnsupportedOperation("the kernel builder handles scalar X only");
  if (opt.fold && !fam.power_series()) throw UnsupportedOperation("folding needs a power-series family");
  if (opt.fold) {
    const auto [from, to] = *opt.fold;
    if (from < 0 || to < 0 || from >= x_trunc || to >= x_trunc || from == to) {
      throw InvalidArgument("fold points must be distinct lattice points below x_trunc");
    }
  }
  const auto rows = static_cast<Eigen::Index>(z_grid.size());
  const auto cols = static_cast<Eigen::Index>(x_trunc);
  KernelMatrix k;
  k.family = std::string(to_string(fam.kind()));
  k.z = z_grid;
  MatrixX50 hp(rows, cols);
  std::vector<double> tails(z_grid.size(), 0.0);

  if (fam.discrete()) {
    for (long x = 0; x < x_trunc; ++x) k.x.push_back(static_cast<double>(x));
    parallel_for(rows, [&](long i) {
      const InstrumentPoint z = InstrumentPoint::scalar(z_grid[static_cast<std::size_t>(i)],
                                                        std::vector<double>(opt.z1));
      const Law law = conditional_law(fam, z);
      Real50 kept = 0;
      for (long x = 0; x < x_trunc; ++x) {
        const Real50 lm = log_mass(law, x);
        hp(i, x) = lm == kNegInf ? Real50(0) : exp(lm);
        kept += hp(i, x);
      }
      tails[static_cast<std::size_t>(i)] = std::max(0.0, static_cast<double>(1 - kept));
      if (opt.fold) {
        const auto [from, to] = *opt.fold;
        // The mass is proportional to base^x; rescaling base by a constant
        // only rescales a column.
        const Real50 base = std::holds_alternative<law::Poisson>(law)
                                ? Real50(std::get<law::Poisson>(law).rate)
                                : 1 - Real50(std::get<law::NegBinomial>(law).prob);
        hp(i, to) *= pow(base, static_cast<long>(from - to));
        const Real50 total = hp.row(i).sum();
        hp.row(i) /= total;
      }
    });
  } else {
    const Law base = base_law(fam, opt.z1);
    const GaussRule rule = law_rule(base, static_cast<int>(x_trunc));
    for (auto v : rule.nodes) k.x.push_back(static_cast<double>(v));
    parallel_for(rows, [&](long i) {
      const Law law = conditional_law(
          fam, InstrumentPoint::scalar(z_grid[static_cast<std::size_t>(i)], std::vector<double>(opt.z1)));
      for (long c = 0; c < x_trunc; ++c) {
        const double x = k.x[static_cast<std::size_t>(c)];
        const double s = pdf(base, x);
        hp(i, c) = s > 0 ? Real50(pdf(law, x)) * Real50(rule.weights[static_cast<std::size_t>(c)]) / s : Real50(0);
      }
    });
  }
  for (std::size_t i = 0; i < tails.size(); ++i) {
    k.max_tail = std::max(k.max_tail, tails[i]);
    if (tails[i] > opt.max_tail) {
      throw TruncationTooSmall("mass " + std::to_string(tails[i]) + " beyond x_trunc = " + std::to_string(x_trunc) +
                               " at z = " + std::to_string(z_grid[i]));
    }
  }
  finish(k, std::move(hp));
  return k;
}

KernelMatrix kernel_from_entries(Eigen::MatrixXd entries, std::string label) {
  if (entries.size() == 0) throw InvalidArgument("kernel is empty");
  if ((entries.array() < 0).any() || !entries.allFinite()) {
    throw InvalidArgument("kernel entries must be finite and nonnegative");
  }
  KernelMatrix k;
  k.family = std::move(label);
  for (Eigen::Index i = 0; i < entries.rows(); ++i) k.z.push_back(static_cast<double>(i));
  for (Eigen::Index j = 0; j < entries.cols(); ++j) k.x.push_back(static_cast<double>(j));
  MatrixX50 hp = entries.cast<Real50>();
  finish(k, std::move(hp));
  return k;
}

InjectivityReport injectivity_report(const KernelMatrix& k, double threshold) {
  const std::vector<double> sv = normalized_singular_values(k);
  InjectivityReport r;
  r.family = k.family;
  r.n = static_cast<long>(k.cols());
  r.max_sv = sv.front();
  r.min_sv = sv.back();
  r.injective = r.min_sv > threshold * r.max_sv;
  r.verdict = r.injective ? "numerically injective at scale " + std::to_string(r.n)
                          : "not injective at scale " + std::to_string(r.n);
  r.note =
      "finite-section certificate only: completeness concerns the infinite-dimensional operator, this checks a "
      "truncated discretization";
  return r;
}

}  // namespace steinpoly
