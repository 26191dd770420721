// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "steinpoly/basis.hpp"
#include "steinpoly/completeness.hpp"
#include "steinpoly/estimator.hpp"
#include "steinpoly/projection.hpp"
#include "steinpoly/stein.hpp"

namespace {

using namespace steinpoly;
using namespace steinpoly::testing;

// Pinned tolerances.
constexpr int kJmax = 10;
constexpr double kRuntime1 = 10.0;
constexpr int kJproj = 8;
constexpr double kProjTol = 1e-6;
constexpr double kFitTol = 1e-6;
constexpr double kGapTol = 1e-2;
constexpr double kInvarianceTol = 1e-6;
constexpr int kIdentityPairs = 50;
constexpr double kIdentityTol = 1e-8;
constexpr double kIteratedTol = 1e-7;
constexpr int kIteratedMaxK = 4;
constexpr double kGramTol = 1e-8;
constexpr double kMvGramTol = 1e-6;
constexpr double kMvProjTol = 1e-6;
constexpr int kMvOrder = 4;
constexpr double kOrdTol = 1e-8;
constexpr int kOrdJ = 6;
constexpr double kFixtureMinSv = 4.0984687668856469e-21;
constexpr double kFixtureTol = 1e-10;
constexpr double kFoldRatio = 1e-12;
constexpr double kInSpanTol = 1e-6;
constexpr double kCoefTol = 0.05;
constexpr int kSeeds = 21;
constexpr long kMcN = 5000;
constexpr double kRuntime10 = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<CondFamily> six_families() {
  return {normal(), gamma_fam(), beta_fam(), poisson(), negbin(), binomial_fam()};
}

Outcome eigenrelation_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  long nonzero = 0;
  for (const auto& fam : six_families()) {
    const EigenBasis b = make_basis(fam, kJmax);
    for (int j = 0; j <= kJmax; ++j) {
      const QPoly r = apply_stein_markov(b.op, b[j]) - b.raw_eigenvalues[static_cast<std::size_t>(j)] * b[j];
      if (!r.is_zero()) ++nonzero;
    }
  }
  const double secs = seconds_since(t0);
  return {nonzero == 0 && secs < kRuntime1,
          std::to_string(nonzero) + " nonzero exact residuals over 6 families, j<=10, " + fmt("%.2fs", secs)};
}

Outcome closed_form_eigenvalues() {
  long mismatches = 0;
  long checked = 0;
  auto expect = [&](const CondFamily& fam, const std::function<Rational(int)>& closed) {
    const EigenBasis b = make_basis(fam, kJmax);
    for (int j = 0; j <= kJmax; ++j) {
      ++checked;
      if (b.eigenvalues[static_cast<std::size_t>(j)] != closed(j)) ++mismatches;
    }
  };
  expect(normal(), [](int j) { return Rational(-j); });
  expect(normal(Rational(3)), [](int j) { return Rational(-j); });
  for (const Rational d : {Rational(1, 2), Rational(1), Rational(2)}) {
    expect(gamma_fam(Rational(2), d), [d](int j) { return Rational(-d * j); });
  }
  for (const auto& [a, b] : {std::pair{1, 1}, std::pair{2, 3}}) {
    expect(beta_fam(a, b), [a = a, b = b](int j) { return Rational(-j * (j + a + b - 1)); });
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(checked) + " eigenvalues"};
}

double falling(double z, int j) {
  double p = 1.0;
  for (int i = 0; i < j; ++i) p *= z - i;
  return p;
}

Outcome projection_closed_forms() {
  double worst = 0.0;
  auto run = [&](const CondFamily& fam, const std::function<double(double, int)>& closed) {
    const auto basis = cached_basis(fam, kJproj);
    for (double z : chebyshev_nodes(fam.z_domain(), 10)) {
      const std::vector<double> p = project(*basis, InstrumentPoint::scalar(z));
      for (int j = 0; j <= kJproj; ++j) {
        const double want = closed(z, j);
        worst = std::max(worst, std::abs(p[static_cast<std::size_t>(j)] - want) / (1.0 + std::abs(want)));
      }
    }
  };
  run(normal(), [](double z, int j) { return std::pow(z, j); });
  run(normal(Rational(2)), [](double z, int j) { return std::pow(z / 2.0, j); });
  run(poisson(), [](double z, int j) { return std::pow(z, j); });
  run(CondFamily(params::PoissonTilt{Rational(5, 2)}, {0.0, 3.0}), [](double z, int j) { return std::pow(z / 2.5, j); });
  run(gamma_fam(), falling);
  run(gamma_fam(Rational(3), Rational(1, 2)), falling);
  return {worst <= kProjTol, "max relative error " + fmt("%.3g", worst)};
}

Outcome degree_certification() {
  struct Case {
    std::string name;
    CondFamily fam;
  };
  const std::vector<Case> cases{{"normal", normal()},     {"gamma", gamma_fam()},     {"beta", beta_fam()},
                                {"poisson", poisson()},   {"negbin", negbin()},       {"binomial", binomial_wide()},
                                {"pascal", pascal()}};
  std::ostringstream fails;
  bool pass = true;
  for (const auto& c : cases) {
    const ProjectionTable t = build_projection_table(c.fam, kJproj);
    const auto [ga, gb] = disjoint_z_grids(c.fam, 2 * (kJproj + 1));
    const ProjectionTable ta = build_projection_table(c.fam, kJproj, ga);
    const ProjectionTable tb = build_projection_table(c.fam, kJproj, gb);
    for (int j = 0; j <= kJproj; ++j) {
      const MuFit& f = t.fitted[static_cast<std::size_t>(j)];
      const Eigen::VectorXd d = ta.fitted[static_cast<std::size_t>(j)].coeffs - tb.fitted[static_cast<std::size_t>(j)].coeffs;
      const double inv = d.cwiseAbs().maxCoeff();
      std::string why;
      if (!(f.residual <= kFitTol)) why += " fit " + fmt("%.2g", f.residual);
      if (j > 0 && !(f.lower_residual >= kGapTol * f.spread)) why += " gap " + fmt("%.2g", f.lower_residual / f.spread);
      if (!(inv <= kInvarianceTol)) why += " drift " + fmt("%.2g", inv);
      if (!why.empty()) {
        pass = false;
        fails << "; " << c.name << " j=" << j << why;
        break;
      }
    }
  }
  return {pass, pass ? "all families certified for j<=8" : "first failure per family" + fails.str().substr(1)};
}

QPoly random_poly(std::mt19937_64& rng, int max_degree) {
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<long> num(-9, 9);
  std::uniform_int_distribution<long> den(1, 5);
  std::vector<Rational> c(static_cast<std::size_t>(deg(rng)) + 1);
  for (auto& v : c) {
    v = Rational(num(rng), den(rng));
    v.canonicalize();
  }
  if (c.back() == 0) c.back() = 1;
  return QPoly(std::move(c));
}

Outcome stein_identity() {
  std::mt19937_64 rng(20240517);
  std::vector<CondFamily> fams = six_families();
  fams.push_back(pascal());
  double worst1 = 0.0;
  double worstk = 0.0;
  for (const auto& fam : fams) {
    const Interval d = fam.z_domain();
    std::uniform_real_distribution<double> uz(d.lo, d.hi);
    auto draw_z = [&] {
      const double z = uz(rng);
      return InstrumentPoint::scalar(fam.kind() == FamilyKind::BinomialShift ? std::round(z) : z);
    };
    for (int t = 0; t < kIdentityPairs; ++t) {
      const QPoly q = random_poly(rng, 6);
      const IdentityResidual r = stein_identity_residual(fam, q, draw_z());
      worst1 = std::max(worst1, r.residual / (1.0 + r.scale));
    }
    for (int k = 1; k <= kIteratedMaxK; ++k) {
      for (int t = 0; t < 5; ++t) {
        const QPoly q = random_poly(rng, 3);
        const IdentityResidual r = iterated_identity_residual(fam, q, draw_z(), k);
        worstk = std::max(worstk, r.residual / (1.0 + r.scale));
      }
    }
  }
  return {worst1 <= kIdentityTol && worstk <= kIteratedTol,
          "identity max " + fmt("%.3g", worst1) + ", iterated k<=4 max " + fmt("%.3g", worstk) +
              " (residual / (1 + |E q|))"};
}

double max_offdiag(const Eigen::MatrixXd& g) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index k = 0; k < i; ++k) m = std::max(m, std::abs(g(i, k)) / std::sqrt(g(i, i) * g(k, k)));
  return m;
}

Outcome orthogonality() {
  double uni = 0.0;
  for (const auto& fam : six_families()) uni = std::max(uni, max_offdiag(gram_matrix(*cached_basis(fam, kJmax))));
  std::vector<Exponent> idx;
  for (int a = 0; a <= kMvOrder; ++a)
    for (int b = 0; a + b <= kMvOrder; ++b) idx.push_back({a, b});
  double mv = 0.0;
  for (const auto& m : {std::vector<std::vector<Rational>>{{1, 0}, {0, 1}},
                        std::vector<std::vector<Rational>>{{2, 0}, {0, Rational(1, 3)}}}) {
    mv = std::max(mv, max_offdiag(mv_gram(mvnormal(m), idx)));
  }
  return {uni <= kGramTol && mv <= kMvGramTol,
          "univariate max relative off-diagonal " + fmt("%.3g", uni) + ", bivariate " + fmt("%.3g", mv)};
}

Outcome mv_product_formula() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (const auto& m : {std::vector<std::vector<Rational>>{{1, 0}, {0, 1}},
                        std::vector<std::vector<Rational>>{{2, 0}, {0, Rational(1, 3)}}}) {
    const CondFamily fam = mvnormal(m);
    std::uniform_real_distribution<double> uz(fam.z_domain().lo, fam.z_domain().hi);
    for (int t = 0; t < 5; ++t) {
      InstrumentPoint z;
      z.z2 = {uz(rng), uz(rng)};
      // M z2 computed from the precision entries directly.
      const double m1 = to_double(m[0][0]) * z.z2[0] + to_double(m[0][1]) * z.z2[1];
      const double m2 = to_double(m[1][0]) * z.z2[0] + to_double(m[1][1]) * z.z2[1];
      for (int a = 0; a <= kMvOrder; ++a)
        for (int b = 0; a + b <= kMvOrder; ++b) {
          const double want = std::pow(m1, a) * std::pow(m2, b);
          worst = std::max(worst, std::abs(mv_project(fam, {a, b}, z) - want) / (1.0 + std::abs(want)));
        }
    }
  }
  return {worst <= kMvProjTol, "max relative error " + fmt("%.3g", worst)};
}

Outcome pearson_ord() {
  double worst = 0.0;
  auto run = [&](const CondFamily& fam, const std::vector<double>& mus) {
    const OrdFamily ord = ord_family(fam, kOrdJ);
    const PearsonOrdReport r = pearson_ord_shifted(ord, ord.c, mus);
    for (const auto& row : r.rows) {
      worst = std::max({worst, row.shifted_residual / (1.0 + row.scale), row.eigen_residual / (1.0 + row.scale)});
    }
  };
  run(binomial_fam(10, Rational(3, 10)), {0, 1, 2, 3});
  run(pascal(2, Rational(1, 2)), {0, 1, 2});
  return {worst <= kOrdTol, "max relative residual " + fmt("%.3g", worst)};
}

Outcome completeness_certificate() {
  const CondFamily fam(params::PoissonTilt{Rational(1)}, {0.0, 2.0});
  std::vector<double> z(21);
  for (int i = 0; i < 21; ++i) z[static_cast<std::size_t>(i)] = 2.0 * i / 20.0;
  const InjectivityReport a = injectivity_report(build_kernel(fam, z, 21));
  const InjectivityReport b = injectivity_report(build_kernel(fam, z, 21));
  KernelOptions fold;
  fold.fold = std::pair<long, long>{1, 20};
  const InjectivityReport f = injectivity_report(build_kernel(fam, z, 21, fold));
  const double drift = std::abs(a.min_sv - kFixtureMinSv) / kFixtureMinSv;
  const bool pass = a.min_sv > 0 && drift <= kFixtureTol && a.min_sv == b.min_sv && f.min_sv < kFoldRatio * f.max_sv;
  return {pass, "min_sv " + fmt("%.17g", a.min_sv) + " (fixture drift " + fmt("%.2g", drift) + "), folded ratio " +
                    fmt("%.3g", f.min_sv / f.max_sv)};
}

// Coefficients of g in the basis by exact back-substitution on leading terms.
std::vector<double> basis_coefficients(const EigenBasis& b, QPoly g) {
  std::vector<double> c(static_cast<std::size_t>(g.degree()) + 1, 0.0);
  for (int j = g.degree(); j >= 0; --j) {
    const Rational cj = g.coeffs()[static_cast<std::size_t>(j)] / b[j].coeffs()[static_cast<std::size_t>(j)];
    c[static_cast<std::size_t>(j)] = to_double(cj);
    g = g - cj * b[j];
  }
  return c;
}

Outcome estimator_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    CondFamily fam;
    ZLaw z;
  };
  const std::vector<Case> cases{{normal(), ZLaw::uniform(-2, 2)},
                                {gamma_fam(), ZLaw::uniform(0, 3)},
                                {beta_fam(), ZLaw::uniform(-1, 1.5)},
                                {poisson(2), ZLaw::uniform(0, 3)},
                                {binomial_fam(), ZLaw::choice({-4, -3, -2, -1, 0, 1, 2, 3, 4, 5})},
                                {pascal(), ZLaw::uniform(-1, 2)},
                                {negbin(), ZLaw::uniform(-0.3, 0.3)}};
  const std::vector<double> c{0.4, -1.2, 0.75, 0.3};
  double in_span = 0.0;
  for (const auto& k : cases) {
    const auto basis = cached_basis(k.fam, 3);
    Poly<double> g;
    for (int j = 0; j <= 3; ++j) g = g + c[static_cast<std::size_t>(j)] * demote<double>((*basis)[j]);
    const Dataset d = synthesize(k.fam, g, k.z, 0.0, 200, 3, {.response = Response::ReducedForm});
    const FitResult r = fit(d, basis, 3);
    for (int j = 0; j <= 3; ++j) in_span = std::max(in_span, std::abs(r.beta(j) - c[static_cast<std::size_t>(j)]));
  }

  const CondFamily fam = normal();
  const auto basis = cached_basis(fam, 2);
  const QPoly gq{Rational(1), Rational(1, 2), Rational(-3, 10)};
  const std::vector<double> truth = basis_coefficients(*basis, gq);
  const Poly<double> g = demote<double>(gq);
  const ZLaw zlaw = ZLaw::uniform(-2, 2);
  const SynthOptions opt{.response = Response::Structural, .endogeneity = 0.5};
  std::vector<std::vector<double>> errs(3);
  std::vector<double> x_eval;
  for (int i = 0; i <= 100; ++i) x_eval.push_back(-2.0 + 4.0 * i / 100.0);
  for (int s = 0; s < kSeeds; ++s) {
    const FitResult r = fit(synthesize(fam, g, zlaw, 1.0, kMcN, 1000 + s, opt), basis, 2);
    for (int j = 0; j <= 2; ++j) errs[static_cast<std::size_t>(j)].push_back(std::abs(r.beta(j) - truth[static_cast<std::size_t>(j)]));
  }
  std::vector<double> med_err;
  for (const auto& e : errs) med_err.push_back(median(e));
  std::vector<double> med_rmse;
  for (long n : {500L, 2000L, 8000L}) {
    std::vector<double> rmse;
    for (int s = 0; s < kSeeds; ++s) {
      const FitResult r = fit(synthesize(fam, g, zlaw, 1.0, n, 5000 + s, opt), basis, 2);
      double ss = 0.0;
      for (double x : x_eval) ss += std::pow(r.ghat(x) - g(x), 2);
      rmse.push_back(std::sqrt(ss / static_cast<double>(x_eval.size())));
    }
    med_rmse.push_back(median(rmse));
  }
  const double secs = seconds_since(t0);
  const bool coef_ok = std::all_of(med_err.begin(), med_err.end(), [](double e) { return e <= kCoefTol; });
  const bool mono = med_rmse[1] <= med_rmse[0] && med_rmse[2] <= med_rmse[1];
  const bool pass = in_span <= kInSpanTol && coef_ok && mono && secs < kRuntime10;
  return {pass, "in-span max error " + fmt("%.3g", in_span) + ", median |beta error| " + fmt("%.3g", med_err[0]) + "/" +
                    fmt("%.3g", med_err[1]) + "/" + fmt("%.3g", med_err[2]) + ", median RMSE " +
                    fmt("%.3g", med_rmse[0]) + " > " + fmt("%.3g", med_rmse[1]) + " > " + fmt("%.3g", med_rmse[2]) +
                    ", " + fmt("%.1fs", secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"eigenrelation exactness", eigenrelation_exactness},
      {"closed-form eigenvalues", closed_form_eigenvalues},
      {"projection closed forms", projection_closed_forms},
      {"degree certification", degree_certification},
      {"stein identity", stein_identity},
      {"orthogonality", orthogonality},
      {"multivariate product formula", mv_product_formula},
      {"pearson-ord shift", pearson_ord},
      {"completeness certificate", completeness_certificate},
      {"estimator oracle", estimator_oracle},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
