#include "steinpoly/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "steinpoly/basis.hpp"
#include "steinpoly/completeness.hpp"
#include "steinpoly/errors.hpp"
#include "steinpoly/estimator.hpp"
#include "steinpoly/json_io.hpp"
#include "steinpoly/projection.hpp"
#include "steinpoly/stein.hpp"

namespace steinpoly {

namespace {

namespace fs = std::filesystem;

struct Config {
  std::string family;
  int J = -1;
  std::string z_grid;
  std::vector<double> z1;
  long x_trunc = 21;
  std::vector<long> fold;
  long n = 1000;
  std::uint64_t seed = 1;
  double ridge = 0.0;
  std::optional<double> tol;
  std::string out;
  std::string g = "0,1";
  double noise = 1.0;
  std::string z_law;
  std::string response = "structural";
  double endogeneity = 0.0;
  std::string data;
  std::string x_grid;
};

// Writes an artifact under --out, or to the stream when --out is absent and
// the artifact is the primary one.
class Sink {
 public:
  Sink(const std::string& dir, std::ostream& out) : dir_(dir), out_(out) {
    if (!dir_.empty()) {
      fs::create_directories(dir_);
      const fs::path probe = fs::path(dir_) / ".steinpoly_write_test";
      std::ofstream f(probe);
      if (!f) throw InvalidArgument("output directory " + dir_ + " is not writable");
      f.close();
      fs::remove(probe);
    }
  }
  void write(const std::string& name, const std::string& body, bool primary) {
    if (dir_.empty()) {
      if (primary) out_ << body;
      return;
    }
    std::ofstream f(fs::path(dir_) / name, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + name);
    f << body;
  }

 private:
  std::string dir_;
  std::ostream& out_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number list: '" + s + "'");
    }
  }
  return out;
}

std::vector<double> default_z1(const CondFamily& fam, const std::vector<double>& z1) {
  if (!z1.empty()) {
    if (static_cast<int>(z1.size()) != fam.z1_dim()) throw InvalidArgument("--z1 has the wrong length");
    return z1;
  }
  return std::vector<double>(static_cast<std::size_t>(fam.z1_dim()), 0.0);
}

std::vector<InstrumentPoint> points(const std::vector<double>& z2, const std::vector<double>& z1) {
  std::vector<InstrumentPoint> out;
  for (double v : z2) out.push_back(InstrumentPoint::scalar(v, z1));
  return out;
}

// ---- verify ---------------------------------------------------------------

struct Check {
  Check(std::string n, double v, double t) : name(std::move(n)), value(v), tol(t) {}
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool skipped = false;
  std::string note;
  bool pass() const { return skipped || value <= tol; }
};

Json check_json(const Check& c) {
  Json j{{"name", c.name}, {"max_residual", c.value}, {"tol", c.tol}, {"pass", c.pass()}};
  if (c.skipped) j["skipped"] = true;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

std::vector<Check> verify_univariate(const CondFamily& fam, int J, const std::vector<double>& z1,
                                     const std::optional<double>& tol) {
  auto t = [&](double d) { return tol.value_or(d); };
  std::vector<Check> checks;
  const auto basis = cached_basis(fam, J, z1);

  Check eig{"eigenrelation_exact", 0.0, 0.0};
  for (int j = 0; j <= J; ++j) {
    const QPoly r = apply_stein_markov(basis->op, (*basis)[j]) - basis->raw_eigenvalues[static_cast<std::size_t>(j)] * (*basis)[j];
    if (!r.is_zero()) eig.value += 1.0;
  }
  eig.note = "count of j with a nonzero exact residual";
  checks.push_back(eig);

  const Eigen::MatrixXd g = gram_matrix(*basis);
  Check orth{"orthogonality", 0.0, t(1e-8)};
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index k = 0; k < i; ++k)
      orth.value = std::max(orth.value, std::abs(g(i, k)) / std::sqrt(g(i, i) * g(k, k)));
  checks.push_back(orth);

  std::vector<InstrumentPoint> grid = points(chebyshev_nodes(fam.z_domain(), 10), z1);
  if (fam.kind() == FamilyKind::BinomialShift) {
    grid = default_z_grid(fam, 1, z1);
  }
  Check id{"stein_identity", 0.0, t(1e-8)};
  for (const auto& z : grid)
    for (int j = 0; j <= J; ++j) {
      const IdentityResidual r = stein_identity_residual(fam, (*basis)[j], z);
      id.value = std::max(id.value, r.residual / (1.0 + r.scale));
    }
  checks.push_back(id);

  Check proj{"projection_polynomial_in_mu", 0.0, t(1e-6)};
  try {
    const ProjectionTable table = build_projection_table(fam, J, z1);
    for (int j = 0; j <= J; ++j) {
      const double scale = table.values.row(j).cwiseAbs().maxCoeff();
      proj.value = std::max(proj.value, table.fitted[static_cast<std::size_t>(j)].residual / (1.0 + scale));
    }
  } catch (const IllConditionedGrid& e) {
    proj.skipped = true;
    proj.note = e.what();
  }
  checks.push_back(proj);

  Check rec{"projection_recursion", 0.0, t(1e-7)};
  if (basis->conditional_coupling) {
    rec.value = recursion_check(*basis, grid).max_relative;
  } else {
    rec.skipped = true;
    rec.note = "basis operator not coupled to mu under the conditional law";
  }
  checks.push_back(rec);

  if (fam.kind() == FamilyKind::BinomialShift || fam.kind() == FamilyKind::PascalShift) {
    const OrdFamily ord = ord_family(fam, J);
    std::vector<double> mus;
    for (const auto& z : grid) mus.push_back(mu_scalar(fam, z));
    const PearsonOrdReport r = pearson_ord_shifted(ord, ord.c, mus);
    Check po{"pearson_ord_shift", 0.0, t(1e-8)};
    for (const auto& row : r.rows)
      po.value = std::max({po.value, row.shifted_residual / (1.0 + row.scale), row.eigen_residual / (1.0 + row.scale)});
    checks.push_back(po);
  }
  return checks;
}

std::vector<Check> verify_multivariate(const CondFamily& fam, int J, const std::optional<double>& tol) {
  auto t = [&](double d) { return tol.value_or(d); };
  std::vector<Check> checks;
  const int d = fam.dim();
  const int order = std::min(J, 4);
  std::vector<Exponent> idx;
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b)
      for (int c = 0; a + b + c <= order; ++c) {
        if ((d < 2 && b > 0) || (d < 3 && c > 0)) continue;
        idx.push_back({a, b, c});
      }
  const auto& m = fam.as<params::MvNormalLoc>().precision;
  bool diagonal = true;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t k = 0; k < m.size(); ++k)
      if (i != k && m[i][k] != 0) diagonal = false;
  Check orth{"orthogonality", 0.0, t(1e-6)};
  if (diagonal) {
    const Eigen::MatrixXd g = mv_gram(fam, idx);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index k = 0; k < i; ++k)
        orth.value = std::max(orth.value, std::abs(g(i, k)) / std::sqrt(g(i, i) * g(k, k)));
  } else {
    orth.skipped = true;
    orth.note = "the Hermite-type basis is orthogonal for diagonal precision only";
  }
  checks.push_back(orth);

  Check proj{"projection_product_formula", 0.0, t(1e-6)};
  const std::vector<double> nodes = chebyshev_nodes(fam.z_domain(), 3);
  for (double a : nodes)
    for (double b : nodes) {
      InstrumentPoint z;
      for (int i = 0; i < d; ++i) z.z2.push_back(i == 0 ? a : (i == 1 ? b : 0.5 * (a + b)));
      const std::vector<double> mv = mu(fam, z);
      for (const auto& e : idx) {
        double want = 1.0;
        for (int i = 0; i < d; ++i) want *= std::pow(mv[static_cast<std::size_t>(i)], e[static_cast<std::size_t>(i)]);
        proj.value = std::max(proj.value, std::abs(mv_project(fam, e, z) - want) / (1.0 + std::abs(want)));
      }
    }
  checks.push_back(proj);
  return checks;
}

int cmd_verify(const Config& c, std::ostream& out) {
  const CondFamily fam = load_family(c.family);
  const int J = c.J < 0 ? 10 : c.J;
  const std::vector<Check> checks = fam.dim() == 1 ? verify_univariate(fam, J, default_z1(fam, c.z1), c.tol)
                                                   : verify_multivariate(fam, J, c.tol);
  bool pass = true;
  Json arr = Json::array();
  for (const auto& ch : checks) {
    pass = pass && ch.pass();
    arr.push_back(check_json(ch));
  }
  const Json report{{"family", family_to_json(fam)}, {"J", J}, {"checks", arr}, {"pass", pass}};
  Sink(c.out, out).write("verify.json", dump(report), true);
  return pass ? kExitOk : kExitFailure;
}

// ---- other commands -------------------------------------------------------

int cmd_families(const Config& c, std::ostream& out) {
  Sink sink(c.out, out);
  if (c.family.empty()) {
    Json list = Json::array();
    const std::vector<std::pair<FamilyKind, std::vector<std::string>>> kinds{
        {FamilyKind::NormalLoc, {"sigma2", "mean_shift"}}, {FamilyKind::MvNormalLoc, {"precision"}},
        {FamilyKind::GammaShift, {"r", "delta", "g"}},     {FamilyKind::BetaTilt, {"a", "b"}},
        {FamilyKind::PoissonTilt, {"m0"}},                 {FamilyKind::NegBinTilt, {"alpha", "p"}},
        {FamilyKind::BinomialShift, {"N", "p"}},           {FamilyKind::PascalShift, {"alpha", "p"}}};
    for (const auto& [k, ps] : kinds) list.push_back(Json{{"kind", std::string(to_string(k))}, {"params", ps}});
    sink.write("families.json", dump(list), true);
    return kExitOk;
  }
  const CondFamily fam = load_family(c.family);
  const int J = c.J < 0 ? 4 : c.J;
  Json j{{"family", family_to_json(fam)}, {"discrete", fam.discrete()}};
  if (fam.dim() == 1) {
    const std::vector<double> z1 = default_z1(fam, c.z1);
    if (!fam.discrete()) {
      const PhiPsi pp = phi_psi(fam, z1);
      auto coeffs = [](const QPoly& p) {
        Json a = Json::array();
        for (const auto& v : p.coeffs()) a.push_back(to_string(v));
        return a;
      };
      j["class"] = std::string(to_string(pp.cls));
      j["phi"] = coeffs(pp.phi);
      j["psi"] = coeffs(pp.psi);
    }
    j["basis"] = basis_to_json(*cached_basis(fam, J, z1));
  }
  sink.write("family.json", dump(j), true);
  return kExitOk;
}

int cmd_project(const Config& c, std::ostream& out) {
  const CondFamily fam = load_family(c.family);
  if (fam.dim() != 1) throw InvalidArgument("project handles univariate families; verify covers the multivariate case");
  const int J = c.J < 0 ? 5 : c.J;
  const std::vector<double> z1 = default_z1(fam, c.z1);
  const ProjectionTable table = c.z_grid.empty()
                                    ? build_projection_table(fam, J, z1)
                                    : build_projection_table(fam, J, points(parse_grid(c.z_grid), z1));
  std::ostringstream csv;
  write_projection_csv(csv, table);
  Sink sink(c.out, out);
  sink.write("projection.csv", csv.str(), true);
  sink.write("projection.json", dump(projection_to_json(table)), false);
  return kExitOk;
}

int cmd_complete(const Config& c, std::ostream& out) {
  const CondFamily fam = load_family(c.family);
  std::vector<double> grid = c.z_grid.empty()
                                 ? parse_grid(num(fam.z_domain().lo) + ":" + num(fam.z_domain().hi) + ":" +
                                              std::to_string(c.x_trunc))
                                 : parse_grid(c.z_grid);
  KernelOptions opt;
  opt.z1 = fam.dim() == 1 ? default_z1(fam, c.z1) : std::vector<double>{};
  if (!c.fold.empty()) {
    if (c.fold.size() != 2) throw InvalidArgument("--fold takes two lattice points");
    opt.fold = std::pair<long, long>{c.fold[0], c.fold[1]};
  }
  const KernelMatrix k = build_kernel(fam, grid, c.x_trunc, opt);
  Sink(c.out, out).write("complete.json", dump(injectivity_to_json(injectivity_report(k))), true);
  return kExitOk;
}

ZLaw parse_z_law(const std::string& spec, const CondFamily& fam, const std::vector<double>& z1) {
  if (spec.empty()) return ZLaw::uniform(fam.z_domain().lo, fam.z_domain().hi, z1);
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "choice") return ZLaw::choice(parse_list(rest), z1);
  std::vector<double> ab;
  std::string r = rest;
  std::replace(r.begin(), r.end(), ':', ',');
  ab = parse_list(r);
  if (ab.size() != 2) throw InvalidArgument("z law must be uniform:lo:hi, normal:mean:sd or choice:v1,v2,...");
  if (kind == "uniform") return ZLaw::uniform(ab[0], ab[1], z1);
  if (kind == "normal") return ZLaw::normal(ab[0], ab[1], z1);
  throw InvalidArgument("unknown z law '" + kind + "'");
}

int cmd_simulate(const Config& c, std::ostream& out) {
  const CondFamily fam = load_family(c.family);
  const std::vector<double> z1 = default_z1(fam, c.z1);
  SynthOptions opt;
  if (c.response == "reduced") {
    opt.response = Response::ReducedForm;
  } else if (c.response != "structural") {
    throw InvalidArgument("--response must be structural or reduced");
  }
  opt.endogeneity = c.endogeneity;
  const Dataset d = synthesize(fam, Poly<double>(parse_list(c.g)), parse_z_law(c.z_law, fam, z1), c.noise, c.n,
                               c.seed, opt);
  std::ostringstream csv;
  write_csv(csv, d);
  Sink(c.out, out).write("data.csv", csv.str(), true);
  return kExitOk;
}

int cmd_estimate(const Config& c, std::ostream& out, std::ostream& err) {
  const CondFamily fam = load_family(c.family);
  if (c.data.empty()) throw InvalidArgument("--data is required");
  const LoadResult loaded = load_csv(c.data, CsvSchema::of(fam), &fam);
  for (const auto& r : loaded.rejected) err << "rejected line " << r.line << ": " << r.reason << "\n";
  if (loaded.data.n() == 0) throw EmptyDataset("no valid rows in " + c.data);
  Json fits = Json::array();
  std::ostringstream ghat;
  const bool with_z1 = fam.z1_dim() > 0;
  ghat << (with_z1 ? "z1,x,ghat\n" : "x,ghat\n");
  for (const Dataset& part : split_by_z1(loaded.data)) {
    const int J = c.J < 0 ? default_truncation(part.n()) : c.J;
    const FitResult f = fit(part, fam, J, c.ridge);
    Json j = fit_to_json(f);
    Json z1 = Json::array();
    for (double v : f.basis->z1) z1.push_back(v);
    j["z1"] = z1;
    j["n"] = part.n();
    fits.push_back(j);
    const std::vector<double> xs =
        c.x_grid.empty() ? parse_grid(num(part.x.minCoeff()) + ":" + num(part.x.maxCoeff()) + ":101")
                         : parse_grid(c.x_grid);
    std::string z1s;
    for (double v : f.basis->z1) z1s += (z1s.empty() ? "" : " ") + num(v);
    if (with_z1) z1s += ',';
    for (double x : xs) ghat << z1s << num(x) << ',' << num(f.ghat(x)) << '\n';
  }
  const Json report = fits.size() == 1 ? fits[0] : fits;
  Sink sink(c.out, out);
  sink.write("fit.json", dump(report), true);
  sink.write("ghat.csv", ghat.str(), false);
  return kExitOk;
}

bool usage_error(const Error& e) {
  return dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const DomainError*>(&e) ||
         dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
         dynamic_cast<const EmptyDataset*>(&e) || dynamic_cast<const UnsupportedOperation*>(&e) ||
         dynamic_cast<const TruncationTooSmall*>(&e) || dynamic_cast<const IllConditionedGrid*>(&e);
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::string s = spec;
  if (std::count(s.begin(), s.end(), ':') != 2) throw InvalidArgument("grid must be lo:hi:count, got '" + spec + "'");
  std::replace(s.begin(), s.end(), ':', ',');
  const std::vector<double> v = parse_list(s);
  if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2]) || v[0] > v[1]) {
    throw InvalidArgument("grid must be lo:hi:count with lo <= hi and count >= 1, got '" + spec + "'");
  }
  const auto n = static_cast<long>(v[2]);
  if (n == 1) return {v[0]};
  std::vector<double> out;
  for (long i = 0; i < n; ++i) out.push_back(i == n - 1 ? v[1] : v[0] + (v[1] - v[0]) * static_cast<double>(i) / (n - 1));
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Stein-operator polynomial bases, projections, completeness checks and series IV estimation"};
  app.require_subcommand(1);
  auto family_opt = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--family", c.family, "family JSON file");
    if (required) o->required();
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--z1", c.z1, "included instruments held fixed")->delimiter(',');
  };

  auto* families = app.add_subcommand("families", "list family kinds, or describe one family and its basis");
  family_opt(families, false);
  families->add_option("--J", c.J, "basis degree")->check(CLI::NonNegativeNumber);
  common(families);

  auto* verify = app.add_subcommand("verify", "run the verification suite");
  family_opt(verify, true);
  verify->add_option("--J", c.J, "basis degree (default 10)")->check(CLI::NonNegativeNumber);
  verify->add_option("--tol", c.tol, "override every numerical tolerance")->check(CLI::PositiveNumber);
  common(verify);

  auto* project = app.add_subcommand("project", "tabulate P_j(z) and fit polynomials in mu");
  family_opt(project, true);
  project->add_option("--J", c.J, "basis degree (default 5)")->check(CLI::NonNegativeNumber);
  project->add_option("--z-grid", c.z_grid, "lo:hi:count");
  common(project);

  auto* complete = app.add_subcommand("complete", "singular-value injectivity report of the kernel");
  family_opt(complete, true);
  complete->add_option("--x-trunc", c.x_trunc, "support points kept")->check(CLI::PositiveNumber);
  complete->add_option("--z-grid", c.z_grid, "lo:hi:count (default: x-trunc points over the domain)");
  complete->add_option("--fold", c.fold, "two lattice points sharing one exponent")->delimiter(',');
  common(complete);

  auto* simulate = app.add_subcommand("simulate", "draw a synthetic dataset");
  family_opt(simulate, true);
  simulate->add_option("--n", c.n, "observations")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", c.seed, "random seed");
  simulate->add_option("--g", c.g, "coefficients of g, constant first");
  simulate->add_option("--noise", c.noise, "noise standard deviation")->check(CLI::NonNegativeNumber);
  simulate->add_option("--z-law", c.z_law, "uniform:lo:hi, normal:mean:sd or choice:v1,v2,...");
  simulate->add_option("--response", c.response, "structural or reduced");
  simulate->add_option("--endogeneity", c.endogeneity, "correlation of the error with the X shock");
  common(simulate);

  auto* estimate = app.add_subcommand("estimate", "fit the series estimator to a CSV dataset");
  family_opt(estimate, true);
  estimate->add_option("--data", c.data, "CSV with columns y,x,z1...,z2...")->required();
  estimate->add_option("--J", c.J, "truncation (default ceil(n^(1/4)) capped at 10)")->check(CLI::NonNegativeNumber);
  estimate->add_option("--ridge", c.ridge, "ridge penalty")->check(CLI::NonNegativeNumber);
  estimate->add_option("--x-grid", c.x_grid, "lo:hi:count for the ghat table");
  common(estimate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*families) return cmd_families(c, out);
    if (*verify) return cmd_verify(c, out);
    if (*project) return cmd_project(c, out);
    if (*complete) return cmd_complete(c, out);
    if (*simulate) return cmd_simulate(c, out);
    return cmd_estimate(c, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return usage_error(e) ? kExitUsage : kExitFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace steinpoly
