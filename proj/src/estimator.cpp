#include "steinpoly/estimator.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "steinpoly/errors.hpp"
#include "steinpoly/law.hpp"
#include "steinpoly/projection.hpp"
#include "steinpoly/quadrature.hpp"

namespace steinpoly {

namespace {

std::vector<double> row_of(const Eigen::MatrixXd& m, long i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) out[static_cast<std::size_t>(k)] = m(i, k);
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Accepts "z1" or "z1_1" for a single column.
bool column_matches(const std::string& got, const std::string& want) {
  if (got == want) return true;
  return (want == "z1" && got == "z1_1") || (want == "z2" && got == "z2_1");
}

bool in_support(const Law& law, double x) {
  if (!std::isfinite(x)) return false;
  if (is_discrete(law)) {
    if (x < 0 || x != std::round(x)) return false;
    if (const auto* b = std::get_if<law::Binomial>(&law)) return x <= static_cast<double>(b->n);
    return true;
  }
  if (const auto* g = std::get_if<law::Gamma>(&law)) return x > g->loc;
  if (std::holds_alternative<law::Beta>(law)) return x > 0.0 && x < 1.0;
  return true;
}

double law_sd(const Law& law) {
  return std::visit(
      [](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, law::Normal>) {
          return std::sqrt(p.var);
        } else if constexpr (std::is_same_v<P, law::Gamma>) {
          return std::sqrt(p.shape) / p.rate;
        } else if constexpr (std::is_same_v<P, law::Beta>) {
          const double s = p.a + p.b;
          return std::sqrt(p.a * p.b / (s * s * (s + 1)));
        } else if constexpr (std::is_same_v<P, law::Poisson>) {
          return std::sqrt(p.rate);
        } else if constexpr (std::is_same_v<P, law::NegBinomial>) {
          return std::sqrt(p.size * (1 - p.prob)) / p.prob;
        } else if constexpr (std::is_same_v<P, law::Binomial>) {
          return std::sqrt(static_cast<double>(p.n) * p.p * (1 - p.p));
        } else {
          throw UnsupportedOperation("scalar X only");
        }
      },
      law);
}

QPoly exact_poly(const Poly<double>& g) {
  std::vector<Rational> c;
  for (double v : g.coeffs()) c.push_back(rational_from_double(v));
  return QPoly(std::move(c));
}

}  // namespace

InstrumentPoint Dataset::z(long i) const { return {row_of(z1, i), row_of(z2, i)}; }

std::vector<std::string> CsvSchema::columns() const {
  std::vector<std::string> out{"y", "x"};
  auto add = [&out](const std::string& stem, int dim) {
    if (dim == 1) {
      out.push_back(stem);
      return;
    }
    for (int k = 1; k <= dim; ++k) out.push_back(stem + "_" + std::to_string(k));
  };
  add("z1", z1_dim);
  add("z2", z2_dim);
  return out;
}

LoadResult load_csv(const std::string& path, const CsvSchema& schema, const CondFamily* fam) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_csv(in, schema, fam);
}

LoadResult read_csv(std::istream& in, const CsvSchema& schema, const CondFamily* fam) {
  const std::vector<std::string> want = schema.columns();
  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw EmptyDataset("the file has no header and no rows");
  for (const std::string& col : {std::string("y"), std::string("x")}) {
    if (std::find(header.begin(), header.end(), col) == header.end()) throw SchemaError("missing column " + col);
  }
  bool match = header.size() == want.size();
  for (std::size_t k = 0; match && k < want.size(); ++k) match = column_matches(header[k], want[k]);
  if (!match) {
    std::string expected;
    for (const auto& w : want) expected += (expected.empty() ? "" : ",") + w;
    throw SchemaError("header does not match the expected columns " + expected);
  }

  const auto cols = want.size();
  std::vector<std::vector<double>> rows;
  LoadResult out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != cols) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> v(cols);
    for (std::size_t k = 0; k < cols; ++k) {
      const char* s = fields[k].c_str();
      char* end = nullptr;
      v[k] = std::strtod(s, &end);
      if (fields[k].empty() || end == s || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ": field " + want[k] + " is not a number: '" +
                             fields[k] + "'",
                         line_no);
      }
    }
    std::string reason;
    for (std::size_t k = 0; k < cols && reason.empty(); ++k) {
      if (!std::isfinite(v[k])) reason = want[k] + " is not finite";
    }
    if (reason.empty() && fam != nullptr) {
      InstrumentPoint z;
      z.z1.assign(v.begin() + 2, v.begin() + 2 + schema.z1_dim);
      z.z2.assign(v.begin() + 2 + schema.z1_dim, v.end());
      try {
        if (fam->dim() != 1) throw UnsupportedOperation("load_csv validates scalar-X families only");
        if (!in_support(conditional_law(*fam, z), v[1])) reason = "x outside the support";
      } catch (const DomainError& e) {
        reason = e.what();
      }
    }
    if (!reason.empty()) {
      out.rejected.push_back({line_no, reason});
      continue;
    }
    rows.push_back(std::move(v));
  }
  if (rows.empty() && out.rejected.empty()) throw EmptyDataset("the file has a header but no rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Dataset& d = out.data;
  d.y.resize(n);
  d.x.resize(n);
  d.z1.resize(n, schema.z1_dim);
  d.z2.resize(n, schema.z2_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.y(i) = r[0];
    d.x(i) = r[1];
    for (int k = 0; k < schema.z1_dim; ++k) d.z1(i, k) = r[2 + static_cast<std::size_t>(k)];
    for (int k = 0; k < schema.z2_dim; ++k) d.z2(i, k) = r[2 + static_cast<std::size_t>(schema.z1_dim + k)];
  }
  return out;
}

void write_csv(std::ostream& out, const Dataset& data) {
  const CsvSchema schema{static_cast<int>(data.z1.cols()), static_cast<int>(data.z2.cols())};
  const auto cols = schema.columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (long i = 0; i < data.n(); ++i) {
    put(data.y(i));
    out << ',';
    put(data.x(i));
    for (Eigen::Index k = 0; k < data.z1.cols(); ++k) {
      out << ',';
      put(data.z1(i, k));
    }
    for (Eigen::Index k = 0; k < data.z2.cols(); ++k) {
      out << ',';
      put(data.z2(i, k));
    }
    out << '\n';
  }
}

std::vector<Dataset> split_by_z1(const Dataset& data) {
  std::map<std::vector<double>, std::size_t> index;
  std::vector<std::vector<long>> groups;
  for (long i = 0; i < data.n(); ++i) {
    const auto key = row_of(data.z1, i);
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::vector<Dataset> out;
  for (const auto& g : groups) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.z1.resize(n, data.z1.cols());
    d.z2.resize(n, data.z2.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const long i = g[static_cast<std::size_t>(r)];
      d.y(r) = data.y(i);
      d.x(r) = data.x(i);
      d.z1.row(r) = data.z1.row(i);
      d.z2.row(r) = data.z2.row(i);
    }
    out.push_back(std::move(d));
  }
  return out;
}

Dataset synthesize(const CondFamily& fam, const Poly<double>& g_true, const ZLaw& z_law, double noise_sd, long n,
                   std::uint64_t seed, const SynthOptions& opt) {
  if (n < 1) throw InvalidArgument("n must be at least 1");
  if (!(noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be non-negative");
  if (!(std::abs(opt.endogeneity) <= 1.0)) throw InvalidArgument("endogeneity must lie in [-1, 1]");
  if (fam.dim() != 1) throw UnsupportedOperation("synthesize handles scalar X only");
  if (z_law.kind == ZLaw::Kind::Choice && z_law.values.empty()) throw InvalidArgument("choice law has no values");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(z_law.a, z_law.b);
  std::normal_distribution<double> gauss(z_law.a, z_law.b);
  std::uniform_int_distribution<std::size_t> pick(0, z_law.values.empty() ? 0 : z_law.values.size() - 1);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const QPoly g_exact = exact_poly(g_true);

  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.z1.resize(n, static_cast<Eigen::Index>(z_law.z1.size()));
  d.z2.resize(n, 1);
  for (long i = 0; i < n; ++i) {
    double z2 = 0.0;
    switch (z_law.kind) {
      case ZLaw::Kind::Uniform: z2 = unif(rng); break;
      case ZLaw::Kind::Normal: z2 = gauss(rng); break;
      case ZLaw::Kind::Choice: z2 = z_law.values[pick(rng)]; break;
    }
    const InstrumentPoint z = InstrumentPoint::scalar(z2, z_law.z1);
    fam.check_z(z);
    const Law law = conditional_law(fam, z);
    const double x = draw(law, 1, rng())(0, 0);
    double eps = noise_sd * std_normal(rng);
    if (opt.endogeneity != 0.0) {
      const double shock = (x - law_mean(law)) / law_sd(law);
      const double rho = opt.endogeneity;
      eps = rho * noise_sd * shock + std::sqrt(1 - rho * rho) * eps;
    }
    const double signal = opt.response == Response::Structural
                              ? g_true(x)
                              : expect_polys(law, std::span<const QPoly>(&g_exact, 1))[0];
    d.y(i) = signal + eps;
    d.x(i) = x;
    for (std::size_t k = 0; k < z_law.z1.size(); ++k) d.z1(i, static_cast<Eigen::Index>(k)) = z_law.z1[k];
    d.z2(i, 0) = z2;
  }
  return d;
}

int default_truncation(long n) {
  if (n < 1) throw InvalidArgument("n must be at least 1");
  const int j = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 0.25) - 1e-12));
  return std::min(10, j);
}

double FitResult::ghat(double x) const {
  double acc = 0.0;
  for (int j = 0; j <= J; ++j) acc += beta(j) * (*basis)[j](x);
  return acc;
}

FitResult fit(const Dataset& data, std::shared_ptr<const EigenBasis> basis, int J, double ridge) {
  if (!basis) throw InvalidArgument("basis is null");
  if (J < 0 || J > basis->J) throw InvalidArgument("J must lie in [0, basis J]");
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be non-negative");
  const long n = data.n();
  if (n < J + 1) throw InvalidArgument("fit needs at least J + 1 observations");
  const CondFamily& fam = basis->family;
  for (long i = 0; i < n; ++i) {
    if (row_of(data.z1, i) != basis->z1) {
      throw InvalidArgument("all rows must share the basis z1; fit one z1 stratum at a time");
    }
  }

  Eigen::MatrixXd r(n, J + 1);
  FitDiagnostics diag;
  std::vector<MuFit> fitted;
  try {
    const ProjectionTable table = build_projection_table(basis, default_z_grid(fam, basis->J, basis->z1));
    if (table.fits_within(1e-6)) fitted = table.fitted;
  } catch (const IllConditionedGrid&) {
  }
  diag.direct_projection = fitted.empty();
  for (long i = 0; i < n; ++i) {
    const InstrumentPoint z = data.z(i);
    if (diag.direct_projection) {
      const std::vector<double> p = project(*basis, z);
      for (int j = 0; j <= J; ++j) r(i, j) = p[static_cast<std::size_t>(j)];
    } else {
      const double m = mu_scalar(fam, z);
      for (int j = 0; j <= J; ++j) r(i, j) = fitted[static_cast<std::size_t>(j)](m);
    }
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = s(0) * 1e-12 * static_cast<double>(std::max<long>(n, J + 1));
  diag.rank = (s.array() > tol).count();
  diag.condition = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (diag.rank < J + 1 && ridge == 0.0) {
    throw RankDeficiency("regressor rank " + std::to_string(diag.rank) + " < J + 1 = " + std::to_string(J + 1) +
                         "; add a ridge penalty or lower J");
  }

  FitResult out;
  out.basis = std::move(basis);
  out.J = J;
  out.ridge = ridge;
  if (ridge == 0.0) {
    out.beta = r.colPivHouseholderQr().solve(data.y);
  } else {
    const Eigen::MatrixXd a = r.transpose() * r + ridge * Eigen::MatrixXd::Identity(J + 1, J + 1);
    out.beta = a.ldlt().solve(r.transpose() * data.y);
  }
  const Eigen::VectorXd res = data.y - r * out.beta;
  diag.residual_mean = res.mean();
  diag.residual_sd = n > 1 ? std::sqrt((res.array() - diag.residual_mean).square().sum() / static_cast<double>(n - 1))
                           : 0.0;
  out.diagnostics = diag;
  return out;
}

FitResult fit(const Dataset& data, const CondFamily& fam, int J, double ridge) {
  if (data.n() < 1) throw EmptyDataset("no observations to fit");
  return fit(data, cached_basis(fam, J, row_of(data.z1, 0)), J, ridge);
}

double evaluate_ghat(const FitResult& fit, double x) { return fit.ghat(x); }

}  // namespace steinpoly
