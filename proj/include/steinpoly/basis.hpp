#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "steinpoly/family.hpp"
#include "steinpoly/multipoly.hpp"
#include "steinpoly/poly.hpp"
#include "steinpoly/quadrature.hpp"
#include "steinpoly/stein.hpp"

namespace steinpoly {

enum class SLClass { HermiteLike, LaguerreLike, JacobiLike, Unclassified };
std::string_view to_string(SLClass cls);

/// Coefficients of the second-order equation phi Q'' + psi Q' + lambda Q = 0,
/// with phi = -1/tau' and psi = phi s'/s + phi'.
struct PhiPsi {
  QPoly phi;
  QPoly psi;
  SLClass cls = SLClass::Unclassified;
};

SLClass classify(const QPoly& phi, const QPoly& psi);

/// Continuous univariate families only.
PhiPsi phi_psi(const CondFamily& fam, std::span<const double> z1 = {});

/// Q_j proportional to (1/s) D^j (s phi^j), in its raw Rodrigues scaling.
/// Throws NoPolynomialBasis for unclassified pairs.
std::vector<QPoly> rodrigues_polys(const PhiPsi& pp, int J);

/// lambda with A(D q) = lambda q, read off leading coefficients and verified
/// exactly; throws NotAnEigenfunction otherwise.
Rational eigenvalue_of(const SteinOp& op, const QPoly& q);

QPoly charlier(int j, const Rational& m0);
QPoly krawtchouk(int j, long N, const Rational& p);
/// Orthogonal for the Pascal law C(x+alpha-1, x) p^alpha (1-p)^x.
QPoly meixner(int j, const Rational& alpha, const Rational& p);
/// (a)_j / j! * 2F1(-j, j+a+b-1; a; x), the Jacobi form on (0, 1).
QPoly jacobi_hypergeometric(int j, const Rational& a, const Rational& b);

struct EigenBasis {
  CondFamily family;
  std::vector<double> z1;
  int J = 0;
  std::vector<QPoly> polys;
  /// Reported eigenvalues (Hermite-like pairs are canonicalized to -j).
  std::vector<Rational> eigenvalues;
  /// Eigenvalues of `op` as constructed; eigenvalues = eigenvalue_scale * raw.
  std::vector<Rational> raw_eigenvalues;
  Rational eigenvalue_scale = 1;
  /// Operator whose Stein-Markov form has the polys as eigenfunctions.
  SteinOp op;
  /// E[op g | Z] = -coupling mu(Z) E[g | Z] when conditional_coupling holds.
  Rational coupling = 1;
  /// False when op is only the base-law operator and the conditional law
  /// does not shift it by a multiple of mu (NegBinTilt).
  bool conditional_coupling = true;
  SLClass cls = SLClass::Unclassified;

  const QPoly& operator[](int j) const { return polys.at(static_cast<std::size_t>(j)); }
  double weight(double x) const { return weight_s(family, x, z1); }
  bool discrete() const { return family.discrete(); }
};

EigenBasis rodrigues_basis(const CondFamily& fam, int J, std::span<const double> z1 = {});
/// Charlier, Meixner, Krawtchouk or Meixner-on-Pascal from explicit sums.
EigenBasis discrete_basis(const CondFamily& fam, int J);
/// Dispatches on discreteness.
EigenBasis make_basis(const CondFamily& fam, int J, std::span<const double> z1 = {});
/// Shared, read-mostly cache keyed by family parameters, z1 and J.
std::shared_ptr<const EigenBasis> cached_basis(const CondFamily& fam, int J, std::span<const double> z1 = {});

/// Coefficients a_0..a_{j-1} with D Q_j = sum a_i Q_i, exact.
std::vector<Rational> ladder_coefficients(const EigenBasis& basis, int j);

/// <Q_i, Q_j> under the normalized weight (the base law).
Eigen::MatrixXd gram_matrix(const EigenBasis& basis, const QuadOptions& opt = {});

/// Multivariate Hermite-type polynomial (-1)^|j| e^{x'Mx/2} d^j e^{-x'Mx/2}.
QMultiPoly mv_hermite_basis(const CondFamily& fam, const Exponent& j);

/// Gram matrix of mv_hermite_basis over `indices` under N(0, M^{-1}), by
/// tensor Gauss-Hermite quadrature on the whitened variable.
Eigen::MatrixXd mv_gram(const CondFamily& fam, const std::vector<Exponent>& indices, int nodes = 24);

}  // namespace steinpoly
