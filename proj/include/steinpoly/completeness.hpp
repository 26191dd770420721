#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "steinpoly/family.hpp"

namespace steinpoly {

struct KernelOptions {
  /// Largest probability mass allowed beyond the truncated lattice.
  double max_tail = 1e-6;
  /// Replaces tau(to) by tau(from) so two lattice points share one exponent
  /// (power-series families only); rows are renormalized over the truncated
  /// lattice.
  std::optional<std::pair<long, long>> fold;
  /// Included instruments held fixed across the grid.
  std::vector<double> z1;
};

/// Discretized conditional-expectation operator: rows are instrument values,
/// columns lattice points (discrete) or base-law quadrature nodes
/// (continuous, entries f(x|z) w / s(x)).
struct KernelMatrix {
  std::string family;
  std::vector<double> z;
  std::vector<double> x;
  Eigen::MatrixXd entries;
  Eigen::VectorXd row_sums;
  /// Largest truncated tail mass over the rows (discrete).
  double max_tail = 0.0;

  /// Entries carried at 50 significant digits for the singular values.
  struct Precise;
  std::shared_ptr<const Precise> precise;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// Kernel of E[g(X) | Z] over the scalar instrument grid z_grid and the
/// first x_trunc support points. Requires z_grid.size() >= x_trunc.
/// Throws TruncationTooSmall when a row loses more than opt.max_tail.
KernelMatrix build_kernel(const CondFamily& fam, const std::vector<double>& z_grid, long x_trunc,
                          const KernelOptions& opt = {});

/// Kernel from explicit nonnegative entries (for constructed cases).
KernelMatrix kernel_from_entries(Eigen::MatrixXd entries, std::string label = "custom");

struct InjectivityReport {
  std::string family;
  long n = 0;
  double min_sv = 0.0;
  double max_sv = 0.0;
  bool injective = false;
  std::string verdict;
  std::string note;
};

/// Singular values of the column-normalized kernel at 50 digits; injective
/// when min_sv > threshold * max_sv.
InjectivityReport injectivity_report(const KernelMatrix& k, double threshold = 1e-10);

/// Singular values of the column-normalized kernel, descending.
std::vector<double> normalized_singular_values(const KernelMatrix& k);

}  // namespace steinpoly
