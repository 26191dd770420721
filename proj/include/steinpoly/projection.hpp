#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "steinpoly/basis.hpp"
#include "steinpoly/family.hpp"
#include "steinpoly/multipoly.hpp"
#include "steinpoly/quadrature.hpp"

namespace steinpoly {

/// P_j(z) = E[Q_j(X) | Z = z] for j = 0..basis.J, by weight-matched
/// quadrature or lattice summation under the conditional law.
std::vector<double> project(const EigenBasis& basis, const InstrumentPoint& z, const QuadOptions& opt = {});

/// First-kind Chebyshev nodes cos((2k+1) pi / 2n) mapped onto [lo, hi],
/// increasing. Grids with n and n+1 nodes share no point.
std::vector<double> chebyshev_nodes(const Interval& dom, int n);

/// 4(J+1) Chebyshev points over the z-domain, or for integer-valued
/// instruments up to that many distinct integers spread over the domain.
std::vector<InstrumentPoint> default_z_grid(const CondFamily& fam, int J, std::span<const double> z1 = {});

/// Two grids with no point in common: Chebyshev grids of n and n+1 points,
/// or the even and odd integers of the domain for integer instruments.
std::pair<std::vector<InstrumentPoint>, std::vector<InstrumentPoint>> disjoint_z_grids(const CondFamily& fam, int n,
                                                                                      std::span<const double> z1 = {});

/// Least-squares polynomial in mu of a given degree.
struct MuFit {
  int degree = 0;
  /// Monomial coefficients in mu, constant first; length degree + 1.
  Eigen::VectorXd coeffs;
  /// Max absolute residual of the degree fit over the grid.
  double residual = 0.0;
  /// Max absolute residual of the best fit of degree - 1 (max |P| for degree 0).
  double lower_residual = 0.0;
  /// max P - min P over the grid.
  double spread = 0.0;

  double operator()(double mu) const;
  /// residual <= fit_tol and, for degree >= 1, lower_residual >= gap * spread.
  bool certified(double fit_tol = 1e-6, double gap = 1e-2) const;
};

/// Throws IllConditionedGrid when fewer than 2(degree+1) distinct mu values
/// are given or the scaled Vandermonde loses rank.
MuFit fit_mu_polynomial(std::span<const double> mu, std::span<const double> values, int degree);

struct ProjectionTable {
  std::shared_ptr<const EigenBasis> basis;
  int j_max = 0;
  std::vector<InstrumentPoint> z_grid;
  /// Rows j, columns z.
  Eigen::MatrixXd values;
  std::vector<double> mu_grid;
  /// fitted[j] is the degree-j fit of row j.
  std::vector<MuFit> fitted;

  const CondFamily& family() const { return basis->family; }
  /// Whether every fit residual is within tol * (1 + max |P_j|).
  bool fits_within(double tol = 1e-6) const;
};

/// Builds P_j over the grid (parallel over grid columns) and fits every row.
/// All grid points must share one z1.
ProjectionTable build_projection_table(const CondFamily& fam, int J, std::vector<InstrumentPoint> z_grid,
                                       const QuadOptions& opt = {});
ProjectionTable build_projection_table(const CondFamily& fam, int J, std::span<const double> z1 = {},
                                       const QuadOptions& opt = {});
/// Table for a given basis (for example a rescaled one); grid z1 must match
/// basis->z1.
ProjectionTable build_projection_table(std::shared_ptr<const EigenBasis> basis, std::vector<InstrumentPoint> z_grid,
                                       const QuadOptions& opt = {});

MuFit fit_mu_polynomial(const ProjectionTable& table, int j);

/// Residuals of P_j = -(c mu / lambda_j) sum_{i<j} a_i P_i with D Q_j =
/// sum a_i Q_i and raw eigenvalues lambda_j of the basis operator.
struct RecursionRow {
  int j = 0;
  double mu = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};
struct RecursionReport {
  std::vector<RecursionRow> rows;
  /// Largest residual / (1 + |lhs|).
  double max_relative = 0.0;
  bool within(double tol = 1e-7) const { return max_relative <= tol; }
};

/// Throws UnsupportedOperation when the basis operator is not coupled to
/// mu under the conditional law.
RecursionReport recursion_check(const EigenBasis& basis, std::span<const InstrumentPoint> z_grid,
                                const QuadOptions& opt = {});

/// E[Q_j(X) | Z = z] for the multivariate normal by tensor Gauss-Hermite
/// quadrature on the whitened variable. d <= 3 and |j| <= 6.
double mv_project(const CondFamily& fam, const Exponent& j, const InstrumentPoint& z, int nodes = 16);

/// CSV with header "j,z1_1..,z2,mu,P", one row per (j, z), 17 significant
/// digits.
void write_projection_csv(std::ostream& out, const ProjectionTable& table);

}  // namespace steinpoly
