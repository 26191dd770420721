#include "steinpoly/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include "steinpoly/errors.hpp"

namespace steinpoly {

namespace {

using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Golub-Welsch nodes (eigenvalues of the Jacobi matrix). Weights come from
// w_i = 1 / sum_k p_k(x_i)^2 with the orthonormal recurrence rather than from
// eigenvector components, which keeps tiny tail weights relatively accurate.
GaussRule golub_welsch(const LVec& diag, const LVec& sub) {
  const auto n = diag.size();
  GaussRule rule;
  if (n == 1) {
    rule.nodes = {diag(0)};
    rule.weights = {1.0L};
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<LMat> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("Golub-Welsch eigen-solve failed");
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long double x = es.eigenvalues()(i);
    long double prev = 0.0L;
    long double cur = 1.0L;
    long double sum = 1.0L;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const long double next = ((x - diag(k)) * cur - (k > 0 ? sub(k - 1) * prev : 0.0L)) / sub(k);
      prev = cur;
      cur = next;
      sum += cur * cur;
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 1.0L / sum;
    total += 1.0L / sum;
  }
  for (auto& w : rule.weights) w /= total;
  return rule;
}

void require_nodes(int n) {
  if (n < 1) throw InvalidArgument("a Gauss rule needs at least one node");
}

using RuleKey = std::tuple<int, int, double, double>;

std::shared_ptr<const GaussRule> cached_rule(int family, int n, double a, double b) {
  static std::mutex mu;
  static std::map<RuleKey, std::shared_ptr<const GaussRule>> cache;
  const RuleKey key{family, n, a, b};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  GaussRule rule = family == 0 ? gauss_hermite(n) : family == 1 ? gauss_laguerre(n, a) : gauss_jacobi01(n, a, b);
  auto ptr = std::make_shared<const GaussRule>(std::move(rule));
  std::lock_guard lock(mu);
  return cache.emplace(key, ptr).first->second;
}

std::string describe(const std::vector<long double>& prev, const std::vector<long double>& cur, int n) {
  std::ostringstream os;
  os.precision(17);
  os << "quadrature did not converge at " << n << " nodes; last estimates:";
  for (std::size_t k = 0; k < cur.size(); ++k) os << " [" << prev[k] << " vs " << cur[k] << "]";
  return os.str();
}

}  // namespace

GaussRule gauss_hermite(int n) {
  require_nodes(n);
  LVec diag = LVec::Zero(n);
  LVec sub(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<long double>(k));
  return golub_welsch(diag, sub);
}

GaussRule gauss_laguerre(int n, double alpha) {
  require_nodes(n);
  if (!(alpha > -1.0)) throw InvalidArgument("Laguerre parameter must exceed -1");
  const long double a = alpha;
  LVec diag(n);
  LVec sub(n > 1 ? n - 1 : 0);
  for (int i = 0; i < n; ++i) diag(i) = 2.0L * i + a + 1.0L;
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(static_cast<long double>(i) * (i + a));
  return golub_welsch(diag, sub);
}

GaussRule gauss_jacobi01(int n, double a, double b) {
  require_nodes(n);
  if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("beta weight needs positive shapes");
  // Jacobi weight (1-t)^al (1+t)^be on [-1, 1]; x = (1+t)/2 has density x^be (1-x)^al.
  const long double al = static_cast<long double>(b) - 1.0L;
  const long double be = static_cast<long double>(a) - 1.0L;
  const long double ab = al + be;
  LVec diag(n);
  LVec sub(n > 1 ? n - 1 : 0);
  diag(0) = (be - al) / (ab + 2.0L);
  for (int k = 1; k < n; ++k) {
    const long double s = 2.0L * k + ab;
    diag(k) = (be * be - al * al) / (s * (s + 2.0L));
  }
  for (int k = 1; k < n; ++k) {
    const long double s = 2.0L * k + ab;
    long double b2;
    if (k == 1) {
      b2 = 4.0L * (1.0L + al) * (1.0L + be) / ((2.0L + ab) * (2.0L + ab) * (3.0L + ab));
    } else {
      b2 = 4.0L * k * (k + al) * (k + be) * (k + ab) / (s * s * (s + 1.0L) * (s - 1.0L));
    }
    sub(k - 1) = std::sqrt(b2);
  }
  GaussRule rule = golub_welsch(diag, sub);
  for (auto& t : rule.nodes) t = (1.0L + t) / 2.0L;
  return rule;
}

GaussRule law_rule(const Law& law, int n) {
  if (const auto* p = std::get_if<law::Normal>(&law)) {
    GaussRule r = *cached_rule(0, n, 0.0, 0.0);
    const long double sd = std::sqrt(static_cast<long double>(p->var));
    for (auto& x : r.nodes) x = p->mean + sd * x;
    return r;
  }
  if (const auto* p = std::get_if<law::Gamma>(&law)) {
    GaussRule r = *cached_rule(1, n, p->shape - 1.0, 0.0);
    for (auto& x : r.nodes) x = p->loc + x / static_cast<long double>(p->rate);
    return r;
  }
  if (const auto* p = std::get_if<law::Beta>(&law)) {
    return *cached_rule(2, n, p->a, p->b);
  }
  throw InvalidArgument("no Gauss rule for this law");
}

long for_each_lattice_point(const Law& law, const std::function<bool(long, long double)>& visit,
                            const QuadOptions& opt) {
  if (!is_discrete(law)) throw InvalidArgument("lattice traversal needs a discrete law");
  const double mean = law_mean(law);
  const long last = std::holds_alternative<law::Binomial>(law) ? std::get<law::Binomial>(law).n : -1;
  long double cum = 0.0L;
  for (long x = 0;; ++x) {
    const long double mass = std::exp(log_pmf(law, x));
    cum += mass;
    const bool negligible = visit(x, mass);
    if (x == last) return x + 1;
    if (last < 0 && static_cast<double>(x) > mean && 1.0L - cum < opt.tail_mass && negligible) return x + 1;
    if (x >= opt.max_terms) {
      throw NumericalFailure("lattice sum did not reach tail mass " + std::to_string(opt.tail_mass) + " within " +
                             std::to_string(opt.max_terms) + " terms");
    }
  }
}

std::vector<double> expect_with_noise(const Law& law, std::span<const ScalarFn> fs, std::span<const ScalarFn> mags,
                                      const QuadOptions& opt) {
  const std::size_t m = fs.size();
  if (law_dim(law) != 1) throw InvalidArgument("expect needs a univariate law");
  if (is_discrete(law)) {
    std::vector<long double> acc(m, 0.0L);
    std::vector<long double> scale(m, 0.0L);
    for_each_lattice_point(
        law,
        [&](long x, long double mass) {
          bool negligible = true;
          for (std::size_t k = 0; k < m; ++k) {
            const long double term = fs[k](static_cast<long double>(x)) * mass;
            acc[k] += term;
            scale[k] += std::fabs(term);
            if (std::fabs(term) > 1e-3L * opt.rel_tol * std::max(1.0L, scale[k])) negligible = false;
          }
          return negligible;
        },
        opt);
    return {acc.begin(), acc.end()};
  }

  std::vector<long double> noise(m, 0.0L);
  auto integrate = [&](int n, std::vector<long double>& value, std::vector<long double>& scale) {
    const GaussRule rule = law_rule(law, n);
    std::fill(value.begin(), value.end(), 0.0L);
    std::fill(scale.begin(), scale.end(), 0.0L);
    std::fill(noise.begin(), noise.end(), 0.0L);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        const long double term = rule.weights[i] * fs[k](rule.nodes[i]);
        value[k] += term;
        scale[k] += std::fabs(term);
        if (!mags.empty()) noise[k] += rule.weights[i] * mags[k](rule.nodes[i]);
      }
    }
  };
  std::vector<long double> prev(m), cur(m), scale(m);
  int n = std::max(1, opt.min_nodes);
  integrate(n, prev, scale);
  std::vector<long double> older = prev;
  while (true) {
    const int next = 2 * n;
    if (next > opt.max_nodes) throw NumericalFailure(describe(older, prev, n));
    integrate(next, cur, scale);
    bool done = true;
    for (std::size_t k = 0; k < m; ++k) {
      if (!std::isfinite(static_cast<double>(cur[k])) ||
          std::fabs(cur[k] - prev[k]) >
              opt.rel_tol * std::max(1.0L, scale[k]) + 64.0L * std::numeric_limits<long double>::epsilon() * noise[k]) {
        done = false;
      }
    }
    if (done) return {cur.begin(), cur.end()};
    older = prev;
    prev = cur;
    n = next;
  }
}

std::vector<double> expect(const Law& law, std::span<const ScalarFn> fs, const QuadOptions& opt) {
  return expect_with_noise(law, fs, {}, opt);
}

double expect(const Law& law, const ScalarFn& f, const QuadOptions& opt) {
  return expect(law, std::span<const ScalarFn>(&f, 1), opt)[0];
}

std::vector<double> expect_polys(const Law& law, std::span<const QPoly> qs, const QuadOptions& opt) {
  std::vector<ScalarFn> fs;
  std::vector<ScalarFn> mags;
  fs.reserve(qs.size());
  if (is_discrete(law)) {
    for (const auto& q : qs) {
      fs.emplace_back([&q](long double x) {
        return static_cast<long double>(to_double(q(Rational(static_cast<long>(x)))));
      });
    }
    return expect(law, fs, opt);
  }
  // Expanding about the center of the law keeps the monomial coefficients
  // small relative to the values, which limits cancellation.
  const double center = law_mean(law);
  const Rational cq = rational_from_double(center);
  for (const auto& q : qs) {
    const auto dq = demote<long double>(poly_shift(q, cq));
    std::vector<long double> absc;
    for (const auto& c : dq.coeffs()) absc.push_back(std::fabs(c));
    const long double c0 = center;
    fs.emplace_back([dq, c0](long double x) { return dq(x - c0); });
    mags.emplace_back([a = Poly<long double>(std::move(absc)), c0](long double x) { return a(std::fabs(x - c0)); });
  }
  return expect_with_noise(law, fs, mags, opt);
}

}  // namespace steinpoly
