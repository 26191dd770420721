#pragma once

#include <functional>
#include <span>
#include <vector>

#include "steinpoly/law.hpp"
#include "steinpoly/poly.hpp"

namespace steinpoly {

/// Gauss rule with probability-normalized weights (they sum to one).
struct GaussRule {
  std::vector<long double> nodes;
  std::vector<long double> weights;
};

/// Standard normal weight.
GaussRule gauss_hermite(int n);
/// Gamma(alpha + 1, 1) weight y^alpha e^{-y} on (0, inf).
GaussRule gauss_laguerre(int n, double alpha);
/// Beta(a, b) weight on (0, 1).
GaussRule gauss_jacobi01(int n, double a, double b);

/// The weight-matched rule for a continuous univariate law, mapped onto its
/// support.
GaussRule law_rule(const Law& law, int n);

struct QuadOptions {
  /// Stop doubling once successive estimates agree to rel_tol * max(1, sum w|f|).
  double rel_tol = 1e-12;
  int min_nodes = 8;
  int max_nodes = 512;
  /// Lattice sums stop once the unvisited probability mass is below this.
  double tail_mass = 1e-12;
  long max_terms = 2'000'000;
};

using ScalarFn = std::function<long double(long double)>;

/// E[f_k(X)] for every f_k under a univariate law, sharing one sequence of
/// rules (continuous) or one lattice pass (discrete). Throws NumericalFailure
/// with diagnostics when the caps are hit.
std::vector<double> expect(const Law& law, std::span<const ScalarFn> fs, const QuadOptions& opt = {});
double expect(const Law& law, const ScalarFn& f, const QuadOptions& opt = {});

/// As expect, where noise[k](x) bounds |fs[k](x)| before cancellation (for a
/// polynomial, sum |c_i| |x|^i); successive continuous rules that agree to
/// within the rounding implied by noise count as converged. noise may be
/// empty.
std::vector<double> expect_with_noise(const Law& law, std::span<const ScalarFn> fs, std::span<const ScalarFn> noise,
                                      const QuadOptions& opt = {});

/// E[q_k(X)] for exact polynomials. On lattices the polynomials are
/// evaluated exactly at each integer before weighting.
std::vector<double> expect_polys(const Law& law, std::span<const QPoly> qs, const QuadOptions& opt = {});

/// Visits the lattice points x = 0, 1, ... of a discrete law with their
/// masses until the remaining mass is below opt.tail_mass and the visitor's
/// own tail test (x, mass) returns true. Returns the number of points.
long for_each_lattice_point(const Law& law, const std::function<bool(long x, long double mass)>& visit,
                            const QuadOptions& opt = {});

}  // namespace steinpoly
