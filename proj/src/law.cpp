#include "steinpoly/law.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "steinpoly/errors.hpp"

namespace steinpoly {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double rparam(const ZParam& p, std::span<const double> z1) { return to_double(p.at(z1)); }

Eigen::MatrixXd precision_matrix(const params::MvNormalLoc& p) {
  const auto d = static_cast<Eigen::Index>(p.precision.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      m(i, j) = to_double(p.precision[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return m;
}

Law resolve(const CondFamily& fam, std::span<const double> z1, std::span<const double> z2) {
  return std::visit(
      [&](const auto& p) -> Law {
        using P = std::decay_t<decltype(p)>;
        const double z = z2.empty() ? 0.0 : z2[0];
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          const double var = rparam(p.sigma2, z1);
          if (!(var > 0.0)) throw DomainError("sigma2 is not positive at this z1");
          return law::Normal{rparam(p.mean_shift, z1) + z, var};
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.precision.size()));
          for (std::size_t i = 0; i < z2.size(); ++i) mean(static_cast<Eigen::Index>(i)) = z2[i];
          return law::MvNormal{mean, precision_matrix(p)};
        } else if constexpr (std::is_same_v<P, params::GammaShift>) {
          const double shape = rparam(p.r, z1) + z;
          const double rate = rparam(p.delta, z1);
          if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("gamma shape and rate must be positive");
          return law::Gamma{shape, rate, rparam(p.g, z1)};
        } else if constexpr (std::is_same_v<P, params::BetaTilt>) {
          return law::Beta{to_double(p.a) + z, to_double(p.b) - z};
        } else if constexpr (std::is_same_v<P, params::PoissonTilt>) {
          return law::Poisson{to_double(p.m0) + z};
        } else if constexpr (std::is_same_v<P, params::NegBinTilt>) {
          return law::NegBinomial{static_cast<double>(p.alpha), to_double(p.p) - z};
        } else if constexpr (std::is_same_v<P, params::BinomialShift>) {
          return law::Binomial{p.N + std::lround(z), to_double(p.p)};
        } else {
          return law::NegBinomial{to_double(p.alpha) + z, to_double(p.p)};
        }
      },
      fam.params());
}

}  // namespace

long double log_pmf(const Law& l, long x) {
  if (x < 0) return -INFINITY;
  const long double xv = static_cast<long double>(x);
  return std::visit(
      overloaded{
          [&](const law::Poisson& p) -> long double {
            if (p.rate == 0.0) return x == 0 ? 0.0L : -INFINITY;
            return -static_cast<long double>(p.rate) + xv * std::log(static_cast<long double>(p.rate)) -
                   std::lgamma(xv + 1.0L);
          },
          [&](const law::NegBinomial& p) -> long double {
            const long double s = p.size;
            return std::lgamma(xv + s) - std::lgamma(s) - std::lgamma(xv + 1.0L) +
                   s * std::log(static_cast<long double>(p.prob)) + xv * std::log1p(-static_cast<long double>(p.prob));
          },
          [&](const law::Binomial& p) -> long double {
            if (x > p.n) return -INFINITY;
            const long double n = static_cast<long double>(p.n);
            return std::lgamma(n + 1.0L) - std::lgamma(xv + 1.0L) - std::lgamma(n - xv + 1.0L) +
                   xv * std::log(static_cast<long double>(p.p)) +
                   (n - xv) * std::log1p(-static_cast<long double>(p.p));
          },
          [&](const auto&) -> long double { throw InvalidArgument("not a lattice law"); },
      },
      l);
}

Law conditional_law(const CondFamily& fam, const InstrumentPoint& z) {
  fam.check_z(z);
  return resolve(fam, z.z1, z.z2);
}

Law base_law(const CondFamily& fam, std::span<const double> z1) {
  if (static_cast<int>(z1.size()) < fam.z1_dim()) throw DomainError("z1 has the wrong dimension");
  Law out = resolve(fam, z1, {});
  // The normal weight exp(-x^2 / 2 sigma^2) is centered at zero; the mean
  // shift only enters mu.
  if (auto* n = std::get_if<law::Normal>(&out)) n->mean = 0.0;
  return out;
}

bool is_discrete(const Law& l) {
  return std::holds_alternative<law::Poisson>(l) || std::holds_alternative<law::NegBinomial>(l) ||
         std::holds_alternative<law::Binomial>(l);
}

int law_dim(const Law& l) {
  if (const auto* mv = std::get_if<law::MvNormal>(&l)) return static_cast<int>(mv->mean.size());
  return 1;
}

double pdf(const Law& l, double x) {
  if (law_dim(l) != 1) throw InvalidArgument("univariate pdf called on a multivariate law");
  if (std::isnan(x)) return 0.0;
  if (is_discrete(l)) {
    if (x < 0.0 || x != std::floor(x)) return 0.0;
    return static_cast<double>(std::exp(log_pmf(l, static_cast<long>(x))));
  }
  return std::visit(
      overloaded{
          [&](const law::Normal& p) {
            const double u = x - p.mean;
            return std::exp(-u * u / (2.0 * p.var)) / std::sqrt(2.0 * std::numbers::pi * p.var);
          },
          [&](const law::Gamma& p) {
            const double u = x - p.loc;
            if (!(u > 0.0)) return 0.0;
            return std::exp(p.shape * std::log(p.rate) + (p.shape - 1.0) * std::log(u) - p.rate * u -
                            std::lgamma(p.shape));
          },
          [&](const law::Beta& p) {
            if (!(x > 0.0 && x < 1.0)) return 0.0;
            return std::exp(std::lgamma(p.a + p.b) - std::lgamma(p.a) - std::lgamma(p.b) +
                            (p.a - 1.0) * std::log(x) + (p.b - 1.0) * std::log1p(-x));
          },
          [&](const auto&) -> double { throw InvalidArgument("unexpected law"); },
      },
      l);
}

double pdf(const Law& l, std::span<const double> x) {
  if (const auto* mv = std::get_if<law::MvNormal>(&l)) {
    const auto d = mv->mean.size();
    if (static_cast<Eigen::Index>(x.size()) != d) throw InvalidArgument("x has the wrong dimension");
    Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(x.data(), d) - mv->mean;
    const double quad = u.dot(mv->precision * u);
    return std::sqrt(mv->precision.determinant() / std::pow(2.0 * std::numbers::pi, static_cast<double>(d))) *
           std::exp(-0.5 * quad);
  }
  if (x.size() != 1) throw InvalidArgument("x has the wrong dimension");
  return pdf(l, x[0]);
}

double law_mean(const Law& l) {
  return std::visit(overloaded{
                        [](const law::Normal& p) { return p.mean; },
                        [](const law::Gamma& p) { return p.loc + p.shape / p.rate; },
                        [](const law::Beta& p) { return p.a / (p.a + p.b); },
                        [](const law::Poisson& p) { return p.rate; },
                        [](const law::NegBinomial& p) { return p.size * (1.0 - p.prob) / p.prob; },
                        [](const law::Binomial& p) { return static_cast<double>(p.n) * p.p; },
                        [](const law::MvNormal&) -> double {
                          throw InvalidArgument("law_mean is univariate");
                        },
                    },
                    l);
}

Eigen::MatrixXd draw(const Law& l, long n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample size must be at least 1");
  std::mt19937_64 rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd out(rows, law_dim(l));
  std::visit(overloaded{
                 [&](const law::Normal& p) {
                   std::normal_distribution<double> d(p.mean, std::sqrt(p.var));
                   for (Eigen::Index i = 0; i < rows; ++i) out(i, 0) = d(rng);
                 },
                 [&](const law::MvNormal& p) {
                   // X = mean + L^{-T} xi with M = L L^T gives Cov X = M^{-1}.
                   Eigen::LLT<Eigen::MatrixXd> llt(p.precision);
                   std::normal_distribution<double> d(0.0, 1.0);
                   Eigen::VectorXd xi(p.mean.size());
                   for (Eigen::Index i = 0; i < rows; ++i) {
                     for (Eigen::Index k = 0; k < xi.size(); ++k) xi(k) = d(rng);
                     out.row(i) = (p.mean + llt.matrixU().solve(xi)).transpose();
                   }
                 },
                 [&](const law::Gamma& p) {
                   std::gamma_distribution<double> d(p.shape, 1.0 / p.rate);
                   for (Eigen::Index i = 0; i < rows; ++i) out(i, 0) = p.loc + d(rng);
                 },
                 [&](const law::Beta& p) {
                   std::gamma_distribution<double> ga(p.a, 1.0);
                   std::gamma_distribution<double> gb(p.b, 1.0);
                   for (Eigen::Index i = 0; i < rows; ++i) {
                     const double u = ga(rng);
                     const double v = gb(rng);
                     out(i, 0) = u / (u + v);
                   }
                 },
                 [&](const law::Poisson& p) {
                   std::poisson_distribution<long> d(p.rate);
                   for (Eigen::Index i = 0; i < rows; ++i) out(i, 0) = static_cast<double>(d(rng));
                 },
                 [&](const law::NegBinomial& p) {
                   // Gamma-Poisson mixture; valid for non-integer size.
                   std::gamma_distribution<double> g(p.size, (1.0 - p.prob) / p.prob);
                   for (Eigen::Index i = 0; i < rows; ++i) {
                     const double lambda = g(rng);
                     if (!(lambda > 0.0)) {
                       out(i, 0) = 0.0;
                       continue;
                     }
                     std::poisson_distribution<long> d(lambda);
                     out(i, 0) = static_cast<double>(d(rng));
                   }
                 },
                 [&](const law::Binomial& p) {
                   std::binomial_distribution<long> d(p.n, p.p);
                   for (Eigen::Index i = 0; i < rows; ++i) out(i, 0) = static_cast<double>(d(rng));
                 },
             },
             l);
  return out;
}

}  // namespace steinpoly
