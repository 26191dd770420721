#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "steinpoly/basis.hpp"
#include "steinpoly/family.hpp"
#include "steinpoly/poly.hpp"

namespace steinpoly {

/// Observations (y, x, z1, z2) with scalar x. Row i of z1 and z2 holds the
/// instruments of observation i.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd z1;
  Eigen::MatrixXd z2;

  long n() const { return static_cast<long>(y.size()); }
  InstrumentPoint z(long i) const;
};

/// Expected columns: y, x, then z1 (or z1_1, z1_2, ...), then z2 (or z2_1, ...).
struct CsvSchema {
  int z1_dim = 0;
  int z2_dim = 1;

  static CsvSchema of(const CondFamily& fam) { return {fam.z1_dim(), fam.z2_dim()}; }
  std::vector<std::string> columns() const;
};

struct RowReject {
  long line = 0;
  std::string reason;
};

struct LoadResult {
  Dataset data;
  std::vector<RowReject> rejected;
};

/// Parses a CSV file. Throws SchemaError on a header mismatch, ParseError
/// (with the 1-based line) on a malformed number and EmptyDataset when no
/// data row is present. With a family, rows whose x lies outside the support
/// or whose instruments fall outside the domain are rejected and reported.
LoadResult load_csv(const std::string& path, const CsvSchema& schema, const CondFamily* fam = nullptr);
LoadResult read_csv(std::istream& in, const CsvSchema& schema, const CondFamily* fam = nullptr);

/// Writes a dataset in the load_csv layout with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data);

/// Groups rows by exact z1 value, in order of first appearance.
std::vector<Dataset> split_by_z1(const Dataset& data);

/// Law of the scalar excluded instrument z2.
struct ZLaw {
  enum class Kind { Uniform, Normal, Choice };
  Kind kind = Kind::Uniform;
  double a = 0.0;  // lower bound or mean
  double b = 1.0;  // upper bound or standard deviation
  std::vector<double> values;  // Choice: drawn uniformly
  std::vector<double> z1;      // held fixed

  static ZLaw uniform(double lo, double hi, std::vector<double> z1 = {}) {
    return {Kind::Uniform, lo, hi, {}, std::move(z1)};
  }
  static ZLaw normal(double mean, double sd, std::vector<double> z1 = {}) {
    return {Kind::Normal, mean, sd, {}, std::move(z1)};
  }
  static ZLaw choice(std::vector<double> values, std::vector<double> z1 = {}) {
    return {Kind::Choice, 0.0, 0.0, std::move(values), std::move(z1)};
  }
};

enum class Response {
  /// y = g(x) + eps.
  Structural,
  /// y = E[g(X) | Z] + eps, the reduced form.
  ReducedForm,
};

struct SynthOptions {
  Response response = Response::Structural;
  /// Correlation of eps with the standardized shock X - E[X|Z]; eps stays
  /// mean zero given Z.
  double endogeneity = 0.0;
};

/// Draws z2 from z_law, X | Z from the family and y from g_true plus
/// centered Gaussian noise. Deterministic in seed. Throws DomainError when
/// z_law leaves the family domain.
Dataset synthesize(const CondFamily& fam, const Poly<double>& g_true, const ZLaw& z_law, double noise_sd, long n,
                   std::uint64_t seed, const SynthOptions& opt = {});

/// ceil(n^{1/4}) capped at 10.
int default_truncation(long n);

struct FitDiagnostics {
  double condition = 0.0;  // ratio of extreme singular values of the regressors
  long rank = 0;
  double residual_mean = 0.0;
  double residual_sd = 0.0;
  /// True when P_j were projected at every observation because the mu
  /// polynomial fit did not hold.
  bool direct_projection = false;
};

struct FitResult {
  std::shared_ptr<const EigenBasis> basis;
  Eigen::VectorXd beta;
  int J = 0;
  double ridge = 0.0;
  FitDiagnostics diagnostics;

  /// sum_j beta_j Q_j(x).
  double ghat(double x) const;
};

/// Least squares (ridge >= 0) of y on P_j(mu(z)), j <= J, where the P_j are
/// the degree-j mu polynomials fitted by the projection module. All rows
/// must share one z1 equal to basis->z1. Throws RankDeficiency when the
/// regressors lose rank and ridge is zero.
FitResult fit(const Dataset& data, std::shared_ptr<const EigenBasis> basis, int J, double ridge = 0.0);
/// Uses the cached basis of fam at the data's z1.
FitResult fit(const Dataset& data, const CondFamily& fam, int J, double ridge = 0.0);

double evaluate_ghat(const FitResult& fit, double x);

}  // namespace steinpoly
