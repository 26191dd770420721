#include "steinpoly/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "steinpoly/errors.hpp"
#include "steinpoly/law.hpp"
#include "steinpoly/parallel.hpp"

namespace steinpoly {

namespace {

bool integer_instrument(const CondFamily& fam) { return fam.kind() == FamilyKind::BinomialShift; }

std::vector<InstrumentPoint> to_points(const std::vector<double>& z2, std::span<const double> z1) {
  std::vector<InstrumentPoint> out;
  out.reserve(z2.size());
  for (double v : z2) out.push_back(InstrumentPoint::scalar(v, {z1.begin(), z1.end()}));
  return out;
}

std::vector<double> domain_integers(const Interval& dom) {
  std::vector<double> out;
  for (double v = std::ceil(dom.lo); v <= dom.hi; v += 1.0) out.push_back(v);
  return out;
}

long distinct_count(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  long n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == 0 || v[i] - v[i - 1] > 1e-12 * (1.0 + std::abs(v[i]))) ++n;
  }
  return n;
}

struct ScaledFit {
  Eigen::VectorXd coeffs;  // in t = (mu - center) / half
  double residual = 0.0;
};

ScaledFit scaled_fit(const Eigen::VectorXd& t, const Eigen::VectorXd& y, int degree) {
  if (degree < 0) return {Eigen::VectorXd(0), y.cwiseAbs().maxCoeff()};
  const Eigen::Index n = t.size();
  Eigen::MatrixXd v(n, degree + 1);
  v.col(0).setOnes();
  for (int k = 1; k <= degree; ++k) v.col(k) = v.col(k - 1).cwiseProduct(t);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < degree + 1) throw IllConditionedGrid("mu grid collapses the Vandermonde rank");
  ScaledFit f;
  f.coeffs = qr.solve(y);
  f.residual = (v * f.coeffs - y).cwiseAbs().maxCoeff();
  return f;
}

}  // namespace

std::vector<double> project(const EigenBasis& basis, const InstrumentPoint& z, const QuadOptions& opt) {
  const CondFamily& fam = basis.family;
  if (fam.dim() != 1) throw UnsupportedOperation("project needs a univariate family; use mv_project");
  if (z.z1 != basis.z1) throw InvalidArgument("z1 differs from the z1 the basis was built for");
  return expect_polys(conditional_law(fam, z), basis.polys, opt);
}

std::vector<double> chebyshev_nodes(const Interval& dom, int n) {
  if (n < 1) throw InvalidArgument("a Chebyshev grid needs at least one node");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double c = 0.5 * (dom.lo + dom.hi);
  const double h = 0.5 * (dom.hi - dom.lo);
  for (int k = 0; k < n; ++k) {
    const double t = -std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n));
    out[static_cast<std::size_t>(k)] = c + h * t;
  }
  return out;
}

std::vector<InstrumentPoint> default_z_grid(const CondFamily& fam, int J, std::span<const double> z1) {
  if (J < 0) throw InvalidArgument("J must be non-negative");
  if (fam.dim() != 1) throw UnsupportedOperation("default_z_grid needs a univariate family");
  const int want = 4 * (J + 1);
  if (!integer_instrument(fam)) return to_points(chebyshev_nodes(fam.z_domain(), want), z1);
  const std::vector<double> all = domain_integers(fam.z_domain());
  if (static_cast<int>(all.size()) <= want) return to_points(all, z1);
  std::vector<double> pick;
  const double step = static_cast<double>(all.size() - 1) / (want - 1);
  for (int k = 0; k < want; ++k) pick.push_back(all[static_cast<std::size_t>(std::lround(k * step))]);
  pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
  return to_points(pick, z1);
}

std::pair<std::vector<InstrumentPoint>, std::vector<InstrumentPoint>> disjoint_z_grids(const CondFamily& fam, int n,
                                                                                      std::span<const double> z1) {
  if (fam.dim() != 1) throw UnsupportedOperation("disjoint_z_grids needs a univariate family");
  if (!integer_instrument(fam)) {
    return {to_points(chebyshev_nodes(fam.z_domain(), n), z1), to_points(chebyshev_nodes(fam.z_domain(), n + 1), z1)};
  }
  std::vector<double> even;
  std::vector<double> odd;
  for (double v : domain_integers(fam.z_domain())) (std::fmod(std::abs(v), 2.0) == 0.0 ? even : odd).push_back(v);
  return {to_points(even, z1), to_points(odd, z1)};
}

double MuFit::operator()(double mu) const {
  double acc = 0.0;
  for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) acc = acc * mu + coeffs(k);
  return acc;
}

bool MuFit::certified(double fit_tol, double gap) const {
  if (!(residual <= fit_tol)) return false;
  return degree == 0 || lower_residual >= gap * spread;
}

MuFit fit_mu_polynomial(std::span<const double> mu, std::span<const double> values, int degree) {
  if (degree < 0) throw InvalidArgument("degree must be non-negative");
  if (mu.size() != values.size()) throw InvalidArgument("mu and values differ in length");
  const std::vector<double> mv(mu.begin(), mu.end());
  if (distinct_count(mv) < 2L * (degree + 1)) {
    throw IllConditionedGrid("degree " + std::to_string(degree) + " fit needs " + std::to_string(2 * (degree + 1)) +
                             " distinct mu values, got " + std::to_string(distinct_count(mv)));
  }
  const auto n = static_cast<Eigen::Index>(mu.size());
  const auto [lo, hi] = std::minmax_element(mv.begin(), mv.end());
  const double center = 0.5 * (*lo + *hi);
  const double half = 0.5 * (*hi - *lo);
  Eigen::VectorXd t(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i) = (mu[static_cast<std::size_t>(i)] - center) / half;
    y(i) = values[static_cast<std::size_t>(i)];
  }
  const ScaledFit top = scaled_fit(t, y, degree);
  MuFit out;
  out.degree = degree;
  out.residual = top.residual;
  out.lower_residual = scaled_fit(t, y, degree - 1).residual;
  out.spread = y.maxCoeff() - y.minCoeff();
  // sum_k b_k ((mu - center) / half)^k expanded into monomials of mu.
  out.coeffs = Eigen::VectorXd::Zero(degree + 1);
  for (int k = 0; k <= degree; ++k) {
    const double bk = top.coeffs(k) / std::pow(half, k);
    double binom = 1.0;
    for (int i = 0; i <= k; ++i) {
      if (i > 0) binom = binom * (k - i + 1) / i;
      out.coeffs(i) += bk * binom * std::pow(-center, k - i);
    }
  }
  return out;
}

bool ProjectionTable::fits_within(double tol) const {
  for (int j = 0; j <= j_max; ++j) {
    const double scale = values.row(j).cwiseAbs().maxCoeff();
    if (!(fitted[static_cast<std::size_t>(j)].residual <= tol * (1.0 + scale))) return false;
  }
  return true;
}

ProjectionTable build_projection_table(const CondFamily& fam, int J, std::vector<InstrumentPoint> z_grid,
                                       const QuadOptions& opt) {
  if (J < 0) throw InvalidArgument("J must be non-negative");
  if (z_grid.empty()) throw InvalidArgument("z grid is empty");
  auto basis = cached_basis(fam, J, z_grid.front().z1);
  return build_projection_table(std::move(basis), std::move(z_grid), opt);
}

ProjectionTable build_projection_table(std::shared_ptr<const EigenBasis> basis, std::vector<InstrumentPoint> z_grid,
                                       const QuadOptions& opt) {
  if (!basis) throw InvalidArgument("basis is null");
  if (z_grid.empty()) throw InvalidArgument("z grid is empty");
  for (const auto& z : z_grid) {
    if (z.z1 != z_grid.front().z1) throw InvalidArgument("every grid point must share one z1");
  }
  const CondFamily& fam = basis->family;
  const int J = basis->J;
  ProjectionTable t;
  t.basis = std::move(basis);
  t.j_max = J;
  t.z_grid = std::move(z_grid);
  const auto cols = static_cast<long>(t.z_grid.size());
  t.values.resize(J + 1, cols);
  t.mu_grid.resize(static_cast<std::size_t>(cols));
  parallel_for(cols, [&](long c) {
    const auto& z = t.z_grid[static_cast<std::size_t>(c)];
    t.mu_grid[static_cast<std::size_t>(c)] = mu_scalar(fam, z);
    const std::vector<double> p = project(*t.basis, z, opt);
    for (int j = 0; j <= J; ++j) t.values(j, c) = p[static_cast<std::size_t>(j)];
  });
  for (int j = 0; j <= J; ++j) t.fitted.push_back(fit_mu_polynomial(t, j));
  return t;
}

ProjectionTable build_projection_table(const CondFamily& fam, int J, std::span<const double> z1,
                                       const QuadOptions& opt) {
  return build_projection_table(fam, J, default_z_grid(fam, J, z1), opt);
}

MuFit fit_mu_polynomial(const ProjectionTable& table, int j) {
  if (j < 0 || j > table.j_max) throw InvalidArgument("j out of range for the table");
  const Eigen::VectorXd row = table.values.row(j).transpose();
  return fit_mu_polynomial(table.mu_grid, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                           j);
}

RecursionReport recursion_check(const EigenBasis& basis, std::span<const InstrumentPoint> z_grid,
                                const QuadOptions& opt) {
  if (!basis.conditional_coupling) {
    throw UnsupportedOperation("the basis operator of " + std::string(to_string(basis.family.kind())) +
                               " is not coupled to mu under the conditional law");
  }
  std::vector<std::vector<double>> ladders;
  for (int j = 0; j <= basis.J; ++j) {
    std::vector<double> a;
    for (const auto& v : ladder_coefficients(basis, j)) a.push_back(to_double(v));
    ladders.push_back(std::move(a));
  }
  const double c = to_double(basis.coupling);
  RecursionReport rep;
  for (const auto& z : z_grid) {
    const double m = mu_scalar(basis.family, z);
    const std::vector<double> p = project(basis, z, opt);
    for (int j = 1; j <= basis.J; ++j) {
      double sum = 0.0;
      const auto& a = ladders[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * p[i];
      RecursionRow row;
      row.j = j;
      row.mu = m;
      row.lhs = p[static_cast<std::size_t>(j)];
      row.rhs = -c * m * sum / to_double(basis.raw_eigenvalues[static_cast<std::size_t>(j)]);
      row.residual = std::abs(row.lhs - row.rhs);
      rep.max_relative = std::max(rep.max_relative, row.residual / (1.0 + std::abs(row.lhs)));
      rep.rows.push_back(row);
    }
  }
  return rep;
}

double mv_project(const CondFamily& fam, const Exponent& j, const InstrumentPoint& z, int nodes) {
  if (fam.kind() != FamilyKind::MvNormalLoc) throw UnsupportedOperation("mv_project needs MvNormalLoc");
  const int d = fam.dim();
  int order = 0;
  for (int i = 0; i < 3; ++i) {
    const int e = j[static_cast<std::size_t>(i)];
    if (e < 0 || (i >= d && e != 0)) throw InvalidArgument("multi-index does not match the dimension");
    order += e;
  }
  if (order > 6) throw InvalidArgument("mv_project supports |j| <= 6");
  fam.check_z(z);
  const Law law = conditional_law(fam, z);
  const auto& mv = std::get<law::MvNormal>(law);
  // X = mean + L^{-T} xi with M = L L' has covariance M^{-1}.
  const Eigen::LLT<Eigen::MatrixXd> llt(mv.precision);
  if (llt.info() != Eigen::Success) throw InvalidArgument("precision matrix is not positive definite");
  const Eigen::MatrixXd u = llt.matrixU();
  const MultiPoly<double> q = demote<double>(mv_hermite_basis(fam, j));
  const GaussRule rule = gauss_hermite(nodes);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd xi(d);
  long double acc = 0.0L;
  while (true) {
    long double w = 1.0L;
    for (int i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      xi(i) = static_cast<double>(rule.nodes[k]);
      w *= rule.weights[k];
    }
    const Eigen::VectorXd x = mv.mean + u.triangularView<Eigen::Upper>().solve(xi);
    acc += w * q(std::span<const double>(x.data(), static_cast<std::size_t>(d)));
    int pos = 0;
    while (pos < d && ++idx[static_cast<std::size_t>(pos)] == nodes) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == d) break;
  }
  return static_cast<double>(acc);
}

void write_projection_csv(std::ostream& out, const ProjectionTable& table) {
  const std::size_t z1n = table.z_grid.empty() ? 0 : table.z_grid.front().z1.size();
  out << "j";
  for (std::size_t k = 0; k < z1n; ++k) out << ",z1_" << (k + 1);
  out << ",z2,mu,P\n";
  char buf[32];
  auto num = [&](double v) -> const char* {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (int j = 0; j <= table.j_max; ++j) {
    for (std::size_t c = 0; c < table.z_grid.size(); ++c) {
      const auto& z = table.z_grid[c];
      out << j;
      for (double v : z.z1) out << ',' << num(v);
      out << ',' << num(z.z2[0]);
      out << ',' << num(table.mu_grid[c]);
      out << ',' << num(table.values(j, static_cast<Eigen::Index>(c))) << '\n';
    }
  }
}

}  // namespace steinpoly
