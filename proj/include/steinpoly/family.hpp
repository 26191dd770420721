#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "steinpoly/rational.hpp"

namespace steinpoly {

enum class FamilyKind {
  NormalLoc,
  MvNormalLoc,
  GammaShift,
  BetaTilt,
  PoissonTilt,
  NegBinTilt,
  BinomialShift,
  PascalShift,
};

std::string_view to_string(FamilyKind kind);
/// Case-insensitive; throws InvalidArgument for unknown names.
FamilyKind parse_family_kind(std::string_view name);

/// A family parameter that may depend affinely on the included instruments:
/// value(z1) = constant + sum_k slope[k] * z1[k].
struct ZParam {
  Rational constant = 0;
  std::vector<Rational> slope;

  ZParam() = default;
  ZParam(Rational c) : constant(std::move(c)) {}  // NOLINT: implicit by intent
  ZParam(Rational c, std::vector<Rational> s) : constant(std::move(c)), slope(std::move(s)) {}

  Rational at(std::span<const double> z1) const;
  bool depends_on_z1() const;
  friend bool operator==(const ZParam&, const ZParam&) = default;
};

/// Z = (Z1, Z2); z1 may be empty.
struct InstrumentPoint {
  std::vector<double> z1;
  std::vector<double> z2;

  static InstrumentPoint scalar(double z2, std::vector<double> z1 = {}) { return {std::move(z1), {z2}}; }
};

/// Closed interval for the scalar excluded instrument z2 (applied per
/// coordinate for the multivariate normal).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

namespace params {

/// X | Z ~ N(mean_shift(z1) + z2, sigma2(z1)).
struct NormalLoc {
  ZParam sigma2 = Rational(1);
  ZParam mean_shift = Rational(0);
  friend bool operator==(const NormalLoc&, const NormalLoc&) = default;
};

/// X | Z ~ N_d(z2, M^{-1}) with constant precision M, d <= 3.
struct MvNormalLoc {
  std::vector<std::vector<Rational>> precision;
  friend bool operator==(const MvNormalLoc&, const MvNormalLoc&) = default;
};

/// X - g(z1) | Z ~ Gamma(shape r + z2, rate delta).
struct GammaShift {
  ZParam r = Rational(1);
  ZParam delta = Rational(1);
  ZParam g = Rational(0);
  friend bool operator==(const GammaShift&, const GammaShift&) = default;
};

/// X | Z ~ Beta(a + z2, b - z2).
struct BetaTilt {
  Rational a = 1;
  Rational b = 1;
  friend bool operator==(const BetaTilt&, const BetaTilt&) = default;
};

/// X | Z ~ Poisson(m0 + z2); mu = z2 / m0.
struct PoissonTilt {
  Rational m0 = 1;
  friend bool operator==(const PoissonTilt&, const PoissonTilt&) = default;
};

/// P(X = x | Z) proportional to C(x+alpha-1, x) p^alpha (1 - p + z2)^x.
struct NegBinTilt {
  long alpha = 1;
  Rational p = Rational(1, 2);
  friend bool operator==(const NegBinTilt&, const NegBinTilt&) = default;
};

/// X | Z ~ Bin(N + z2, p), z2 integer.
struct BinomialShift {
  long N = 1;
  Rational p = Rational(1, 2);
  friend bool operator==(const BinomialShift&, const BinomialShift&) = default;
};

/// P(X = x | Z) = C(x+alpha+z2-1, x) p^(alpha+z2) (1-p)^x.
struct PascalShift {
  Rational alpha = 1;
  Rational p = Rational(1, 2);
  friend bool operator==(const PascalShift&, const PascalShift&) = default;
};

}  // namespace params

using FamilyParams = std::variant<params::NormalLoc, params::MvNormalLoc, params::GammaShift, params::BetaTilt,
                                  params::PoissonTilt, params::NegBinTilt, params::BinomialShift,
                                  params::PascalShift>;

/// A parameterized conditional law X | Z in either the exponential form
/// t(z) s(x,z1) exp(mu(z) tau(x,z1)) or the power-series form
/// t(z) s(x,z1) (mu(z) - m)^x, or one of the two size-shift laws.
/// Immutable after construction; all invariants are checked there.
class CondFamily {
 public:
  CondFamily(FamilyParams params, Interval z_domain);

  FamilyKind kind() const;
  const FamilyParams& params() const { return params_; }
  template <typename P>
  const P& as() const {
    return std::get<P>(params_);
  }
  const Interval& z_domain() const { return z_domain_; }

  bool discrete() const;
  /// Dimension of X (and of mu).
  int dim() const;
  int z1_dim() const { return z1_dim_; }
  int z2_dim() const { return dim(); }
  /// Families of the form t s (mu - m)^x.
  bool power_series() const;
  /// Base point m of the power-series form; only for power-series families.
  Rational shift_m() const;

  /// Throws DomainError when z is outside the declared domain (or has the
  /// wrong shape).
  void check_z(const InstrumentPoint& z) const;

  friend bool operator==(const CondFamily& a, const CondFamily& b) {
    return a.params_ == b.params_ && a.z_domain_ == b.z_domain_;
  }

 private:
  FamilyParams params_;
  Interval z_domain_;
  int z1_dim_ = 0;
};

/// Canonical text form of kind, exact parameters and domain; equal for
/// equal families. Used as a cache key.
std::string family_key(const CondFamily& fam);

/// Natural-parameter map mu(z); length dim().
std::vector<double> mu(const CondFamily& fam, const InstrumentPoint& z);
double mu_scalar(const CondFamily& fam, const InstrumentPoint& z);

/// Conditional density (Lebesgue) or mass (counting) of X at x given Z = z.
/// Zero outside the support.
double density(const CondFamily& fam, std::span<const double> x, const InstrumentPoint& z);
double density(const CondFamily& fam, double x, const InstrumentPoint& z);

/// Orthogonality weight s(x, z1); zero outside the support.
double weight_s(const CondFamily& fam, std::span<const double> x, std::span<const double> z1);
double weight_s(const CondFamily& fam, double x, std::span<const double> z1 = {});

/// Sufficient statistic tau(x, z1); throws DomainError on or outside the
/// support boundary.
std::vector<double> tau(const CondFamily& fam, std::span<const double> x, std::span<const double> z1);
double tau(const CondFamily& fam, double x, std::span<const double> z1 = {});

/// Normalizer t(z) of the exponential or power-series form.
double t_of_z(const CondFamily& fam, const InstrumentPoint& z);

/// n i.i.d. draws of X | Z = z, one row per draw; deterministic in seed.
Eigen::MatrixXd sample(const CondFamily& fam, const InstrumentPoint& z, long n, std::uint64_t seed);

}  // namespace steinpoly
