#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <variant>

#include "steinpoly/family.hpp"

namespace steinpoly {

/// Concrete, fully resolved probability laws. A CondFamily at a fixed
/// instrument value resolves to one of these.
namespace law {

struct Normal {
  double mean = 0.0;
  double var = 1.0;
};

struct MvNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

/// loc + Gamma(shape, rate).
struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
  double loc = 0.0;
};

struct Beta {
  double a = 1.0;
  double b = 1.0;
};

struct Poisson {
  double rate = 1.0;
};

/// P(X = x) = C(x+size-1, x) prob^size (1-prob)^x on x = 0, 1, ...
struct NegBinomial {
  double size = 1.0;
  double prob = 0.5;
};

struct Binomial {
  long n = 1;
  double p = 0.5;
};

}  // namespace law

using Law = std::variant<law::Normal, law::MvNormal, law::Gamma, law::Beta, law::Poisson, law::NegBinomial,
                         law::Binomial>;

/// The law of X given Z = z. Validates z against the family domain.
Law conditional_law(const CondFamily& fam, const InstrumentPoint& z);

/// The unshifted member whose density is proportional to the orthogonality
/// weight s(x, z1) (the Z2 = 0 member, whether or not 0 is in the z-domain).
Law base_law(const CondFamily& fam, std::span<const double> z1 = {});

bool is_discrete(const Law& law);
int law_dim(const Law& law);

/// Density or mass at x; zero outside the support (and off-lattice for
/// discrete laws).
double pdf(const Law& law, double x);
double pdf(const Law& law, std::span<const double> x);

/// Log mass at lattice point x >= 0 (discrete laws only).
long double log_pmf(const Law& law, long x);

/// First moment of a univariate law (test oracle support).
double law_mean(const Law& law);

Eigen::MatrixXd draw(const Law& law, long n, std::uint64_t seed);

}  // namespace steinpoly
