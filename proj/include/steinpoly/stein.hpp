#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "steinpoly/family.hpp"
#include "steinpoly/law.hpp"
#include "steinpoly/poly.hpp"
#include "steinpoly/quadrature.hpp"

namespace steinpoly {

enum class SteinForm { ContinuousD1, DiscreteForwardBase, DiscreteBackwardBase, PearsonOrd };

/// First-order Stein operator acting on polynomials in x.
///
///   ContinuousD1          A q = -(phi q' + psi q)
///   DiscreteForwardBase   A h(x) = r(x) nabla h(x) - (m + r(x)) h(x),  r = s(x-1)/s(x), lattice a + Z+
///   DiscreteBackwardBase  A h(x) = -r(x) Delta h(x) - (m + r(x)) h(x), r = s(x+1)/s(x), lattice a - Z+
///   PearsonOrd            A q = phi D*q + (psi + c * shift) q, D* = d/dx or nabla
///
/// The lattice forms pin r(a) = 0 at the lattice edge a.
struct SteinOp {
  SteinForm form = SteinForm::ContinuousD1;
  QPoly phi;
  QPoly psi;
  RationalFunction ratio;
  Rational m = 0;
  Rational c = 0;
  Rational shift = 0;
  bool discrete = false;
  long lattice_edge = 0;

  static SteinOp continuous(QPoly phi, QPoly psi);
  static SteinOp forward_base(RationalFunction ratio, Rational m, long edge = 0);
  static SteinOp backward_base(RationalFunction ratio, Rational m, long edge = 0);
  static SteinOp pearson_ord(QPoly phi, QPoly psi, bool discrete, Rational c = 0);
  /// A_mu = A + c mu for a Pearson/Ord operator.
  SteinOp shifted(const Rational& mu) const;

  bool lattice() const { return form == SteinForm::DiscreteForwardBase || form == SteinForm::DiscreteBackwardBase; }
  /// Whether the Stein-Markov derivative D is the forward difference.
  bool uses_difference() const { return lattice() || (form == SteinForm::PearsonOrd && discrete); }
};

/// D q: the derivative, or the forward difference for lattice operators.
QPoly stein_derivative(const SteinOp& op, const QPoly& q);

/// Exact A q as a rational function (only lattice forms can have a
/// non-trivial denominator).
RationalFunction apply_stein_rational(const SteinOp& op, const QPoly& q);

/// Exact A q; throws OperatorMismatch when the rational part does not cancel
/// or the lattice ratio does not vanish at the lattice edge.
QPoly apply_stein(const SteinOp& op, const QPoly& q);

/// Exact A(D q).
QPoly apply_stein_markov(const SteinOp& op, const QPoly& q);

/// Pointwise (A h)(x) on the lattice for an arbitrary h; honors r(edge) = 0.
Rational apply_stein_at(const SteinOp& op, const std::function<Rational(long)>& h, long x);

/// Lattice ratio value r(x) with the edge convention applied.
Rational lattice_ratio(const SteinOp& op, long x);

/// Checks r(x) s(x) = s(x -/+ 1) at `points` lattice points starting at the
/// edge; returns the largest relative mismatch.
double ratio_consistency(const SteinOp& op, const std::function<double(long)>& weight, int points = 50);

/// Operator of the conditional law: E[A g | Z] = -c mu(Z) E[g | Z] with
/// c = family_coupling(fam). Univariate families only.
SteinOp family_stein_op(const CondFamily& fam, std::span<const double> z1 = {});
Rational family_coupling(const CondFamily& fam);

struct IdentityResidual {
  double residual = 0.0;  // |lhs - rhs|
  double scale = 0.0;     // |E[q | Z = z]|
  double lhs = 0.0;
  double rhs = 0.0;
  bool within(double tol) const { return residual <= tol * (1.0 + scale); }
};

/// |E[A q | Z = z] + c mu(z) E[q | Z = z]|.
IdentityResidual stein_identity_residual(const CondFamily& fam, const QPoly& q, const InstrumentPoint& z,
                                         const QuadOptions& opt = {});

/// |E[A^k q | Z = z] - (-c mu(z))^k E[q | Z = z]|.
IdentityResidual iterated_identity_residual(const CondFamily& fam, const QPoly& q, const InstrumentPoint& z, int k,
                                            const QuadOptions& opt = {});

/// Boundary term |q(x) f(x|z) / tau'(x)| along geometric sequences running
/// into each endpoint of the support (continuous families).
struct BoundaryReport {
  std::vector<double> lower;
  std::vector<double> upper;
  bool vanishes = false;
};
BoundaryReport boundary_guard(const CondFamily& fam, const QPoly& q, const InstrumentPoint& z);

/// A Pearson or Ord base law together with its shifted conditional laws.
struct OrdFamily {
  std::string name;
  QPoly phi;
  QPoly psi;
  bool discrete = true;
  Rational c = 0;
  /// Law of X | Z when mu(Z) = mu; mu = 0 is the base member.
  std::function<Law(double mu)> shifted;
  std::vector<QPoly> eigenpolys;
  std::vector<Rational> eigenvalues;

  SteinOp op() const { return SteinOp::pearson_ord(phi, psi, discrete, c); }
};

/// Ord family for BinomialShift (c = p) and PascalShift (c = 1 - p).
OrdFamily ord_family(const CondFamily& fam, int J);

/// Verifies D[phi f] = psi f on `points` lattice points (or interior points
/// for continuous laws); throws NotPearsonOrd.
void check_pearson_ord(const OrdFamily& fam, int points = 100);

struct OrdRow {
  int j = 0;
  double mu = 0.0;
  double shifted_residual = 0.0;  // |E[A_mu Q_j | Z]|
  double eigen_residual = 0.0;    // |lambda_j E[Q_j | Z] + c mu E[D Q_j | Z]|
  double scale = 0.0;
};
struct PearsonOrdReport {
  std::vector<OrdRow> rows;
  double max_residual = 0.0;
  bool within(double tol) const;
};

PearsonOrdReport pearson_ord_shifted(const OrdFamily& fam, const Rational& c, std::span<const double> mu_values,
                                     const QuadOptions& opt = {});

}  // namespace steinpoly
