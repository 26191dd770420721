#include <gtest/gtest.h>

#include <boost/math/distributions/poisson.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <Eigen/LU>

#include <cmath>
#include <cstdlib>

#include "catalog.hpp"
#include "steinpoly/completeness.hpp"
#include "steinpoly/errors.hpp"

namespace steinpoly {
namespace {

using namespace steinpoly::testing;
namespace bm = boost::math;
using Real100 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>,
                                              boost::multiprecision::et_off>;

// Frozen 50-digit values for PoissonTilt(m0 = 1), 21 equispaced z on [0, 2],
// x_trunc = 21.
constexpr double kPoissonMinSv = 4.0984687668856469e-21;
constexpr double kPoissonMaxSv = 4.1148995236568213;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return g;
}

// Smallest singular value of the column-normalized Poisson kernel from the
// eigenvalues of K'K at 100 digits, with the masses built term by term.
double poisson_min_sv_oracle(const std::vector<double>& rates, int n) {
  using M = Eigen::Matrix<Real100, Eigen::Dynamic, Eigen::Dynamic>;
  M k(static_cast<Eigen::Index>(rates.size()), n);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const Real100 r = rates[i];
    Real100 term = exp(-r);
    for (int x = 0; x < n; ++x) {
      k(static_cast<Eigen::Index>(i), x) = term;
      term = term * r / (x + 1);
    }
  }
  for (Eigen::Index j = 0; j < k.cols(); ++j) k.col(j) /= k.col(j).norm();
  const M g = k.transpose() * k;
  // Inverse iteration converges to the smallest eigenvalue of K'K.
  const Eigen::PartialPivLU<M> lu(g);
  M v = M::Constant(n, 1, Real100(1));
  Real100 growth = 0;
  for (int it = 0; it < 200; ++it) {
    const M w = lu.solve(v);
    growth = w.norm() / v.norm();
    v = w / w.norm();
  }
  return static_cast<double>(sqrt(1 / growth));
}

TEST(Completeness, PoissonKernelMatchesPmf) {
  const auto k = build_kernel(poisson(1), linspace(0, 2, 21), 21);
  ASSERT_EQ(k.rows(), 21);
  ASSERT_EQ(k.cols(), 21);
  for (Eigen::Index i = 0; i < 21; ++i) {
    const bm::poisson_distribution<double> law(1 + k.z[static_cast<std::size_t>(i)]);
    for (Eigen::Index x = 0; x < 21; ++x) {
      const double want = bm::pdf(law, static_cast<double>(x));
      EXPECT_NEAR(k.entries(i, x), want, 1e-14 * want + 1e-300);
    }
    EXPECT_GE(k.row_sums(i), 1 - 1e-6);
    EXPECT_LE(k.row_sums(i), 1.0);
  }
  EXPECT_TRUE((k.entries.array() >= 0).all());
  EXPECT_LT(k.max_tail, 1e-6);
}

TEST(Completeness, BinomialExactSupport) {
  const auto k = build_kernel(binomial_fam(), std::vector<double>(11, 0.0), 11);
  for (Eigen::Index i = 0; i < k.rows(); ++i) EXPECT_EQ(k.row_sums(i), 1.0);
  EXPECT_EQ(k.max_tail, 0.0);
  std::vector<double> zs;
  for (int z = -5; z <= 0; ++z) zs.insert(zs.end(), {double(z), double(z)});
  const auto shifted = build_kernel(binomial_fam(), zs, 11);
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) EXPECT_EQ(shifted.row_sums(i), 1.0);
}

TEST(Completeness, PreconditionsAndTruncation) {
  EXPECT_THROW(build_kernel(poisson(1), linspace(0, 2, 21), 6), TruncationTooSmall);
  EXPECT_THROW(build_kernel(poisson(1), linspace(0, 2, 5), 6), InvalidArgument);
  KernelOptions fold;
  fold.fold = std::pair<long, long>{1, 2};
  EXPECT_THROW(build_kernel(binomial_fam(), std::vector<double>(4, 0.0), 4, fold), UnsupportedOperation);
  fold.fold = std::pair<long, long>{1, 30};
  EXPECT_THROW(build_kernel(poisson(1), linspace(0, 2, 21), 21, fold), InvalidArgument);
  EXPECT_THROW(kernel_from_entries(Eigen::MatrixXd::Constant(2, 2, -1.0)), InvalidArgument);
}

TEST(Completeness, PoissonFixture) {
  const auto k = build_kernel(poisson(1), linspace(0, 2, 21), 21);
  const auto r = injectivity_report(k);
  EXPECT_GT(r.min_sv, 0.0);
  EXPECT_NEAR(r.min_sv, kPoissonMinSv, 1e-10 * kPoissonMinSv);
  EXPECT_NEAR(r.max_sv, kPoissonMaxSv, 1e-10 * kPoissonMaxSv);
  EXPECT_EQ(r.n, 21);
  std::vector<double> rates;
  for (double z : linspace(0, 2, 21)) rates.push_back(1 + z);
  EXPECT_NEAR(r.min_sv, poisson_min_sv_oracle(rates, 21), 1e-10 * kPoissonMinSv);
}

TEST(Completeness, SmallSectionIsInjective) {
  const auto k = build_kernel(poisson(1), linspace(0, 2, 8), 8, {.max_tail = 1.0});
  const auto r = injectivity_report(k);
  EXPECT_TRUE(r.injective);
  EXPECT_NE(r.verdict.find("injective at scale 8"), std::string::npos);
  EXPECT_FALSE(r.note.empty());
  std::vector<double> rates;
  for (double z : linspace(0, 2, 8)) rates.push_back(1 + z);
  EXPECT_NEAR(r.min_sv, poisson_min_sv_oracle(rates, 8), 1e-10 * r.min_sv);
}

TEST(Completeness, IdenticalColumnsAreDetected) {
  Eigen::MatrixXd e(3, 3);
  e << 0.2, 0.3, 0.2, 0.5, 0.1, 0.5, 0.7, 0.9, 0.7;
  const auto r = injectivity_report(kernel_from_entries(e));
  EXPECT_LT(r.min_sv, 1e-12 * r.max_sv);
  EXPECT_FALSE(r.injective);
}

TEST(Completeness, ScalarKernel) {
  const auto r = injectivity_report(kernel_from_entries(Eigen::MatrixXd::Constant(1, 1, 1.0)));
  EXPECT_DOUBLE_EQ(r.min_sv, 1.0);
  EXPECT_TRUE(r.injective);
  // Column normalization makes any positive scalar kernel unit.
  const auto s = injectivity_report(kernel_from_entries(Eigen::MatrixXd::Constant(1, 1, 0.37)));
  EXPECT_DOUBLE_EQ(s.min_sv, 1.0);
  EXPECT_TRUE(s.injective);
}

TEST(Completeness, RepeatedInstrumentBoundsRank) {
  // Rates 0.05..0.25 keep the mass beyond 6 under 1e-6.
  const CondFamily fam(params::PoissonTilt{Rational(1)}, {-0.99, 1});
  std::vector<double> z = linspace(-0.95, -0.75, 5);
  z.push_back(z[2]);
  const auto r = injectivity_report(build_kernel(fam, z, 6));
  EXPECT_LT(r.min_sv, 1e-40 * r.max_sv);
  z.back() = -0.775;
  EXPECT_GT(injectivity_report(build_kernel(fam, z, 6)).min_sv, 1e-20);
}

TEST(Completeness, MonotoneDegradation) {
  // The truncation guard is relaxed: the property concerns the finite
  // sections themselves.
  const KernelOptions loose{.max_tail = 1.0};
  double prev_square = INFINITY;
  double prev_tall = INFINITY;
  for (int n : {6, 11, 16, 21}) {
    const double sq = injectivity_report(build_kernel(poisson(1), linspace(0, 2, n), n, loose)).min_sv;
    const double tall = injectivity_report(build_kernel(poisson(1), linspace(0, 2, 21), n, loose)).min_sv;
    EXPECT_LE(sq, prev_square) << n;
    EXPECT_LE(tall, prev_tall) << n;
    EXPECT_GT(sq, 0.0);
    prev_square = sq;
    prev_tall = tall;
  }
}

TEST(Completeness, FoldedExponentIsDetected) {
  const auto grid = linspace(0, 2, 21);
  const double plain = injectivity_report(build_kernel(poisson(1), grid, 21)).min_sv;
  for (auto [from, to] : {std::pair<long, long>{3, 5}, {0, 1}, {10, 2}}) {
    KernelOptions opt;
    opt.fold = std::pair<long, long>{from, to};
    const auto r = injectivity_report(build_kernel(poisson(1), grid, 21, opt));
    EXPECT_LT(r.min_sv, 1e-12 * r.max_sv);
    EXPECT_LT(r.min_sv, 1e-20 * plain);
    EXPECT_FALSE(r.injective);
  }
  KernelOptions opt;
  opt.fold = std::pair<long, long>{1, 2};
  const auto nb = injectivity_report(build_kernel(negbin(), linspace(-0.3, 0.0, 30), 30, opt));
  EXPECT_LT(nb.min_sv, 1e-12 * nb.max_sv);
}

TEST(Completeness, ContinuousCollocation) {
  const auto k = build_kernel(normal(), linspace(-1, 1, 20), 20);
  EXPECT_EQ(k.cols(), 20);
  for (Eigen::Index i = 0; i < k.rows(); ++i) EXPECT_NEAR(k.row_sums(i), 1.0, 1e-10);
  EXPECT_TRUE((k.entries.array() >= 0).all());
  EXPECT_GT(injectivity_report(k).min_sv, 0.0);
}

TEST(Completeness, ParallelAssemblyIsDeterministic) {
  ::setenv("STEINPOLY_THREADS", "3", 1);
  const auto a = build_kernel(poisson(1), linspace(0, 2, 21), 21);
  ::unsetenv("STEINPOLY_THREADS");
  EXPECT_EQ(injectivity_report(a).min_sv, kPoissonMinSv);
}

}  // namespace
}  // namespace steinpoly
