#include <gtest/gtest.h>

#include <random>

#include "steinpoly/multipoly.hpp"
#include "steinpoly/poly.hpp"

namespace steinpoly {
namespace {

QPoly q(std::initializer_list<long> c) {
  std::vector<Rational> v;
  for (long x : c) v.emplace_back(x);
  return QPoly(std::move(v));
}

Rational random_rational(std::mt19937_64& rng) {
  std::uniform_int_distribution<long> num(-50, 50);
  std::uniform_int_distribution<long> den(1, 17);
  Rational r(num(rng), den(rng));
  r.canonicalize();
  return r;
}

QPoly random_poly(std::mt19937_64& rng, int max_degree) {
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::vector<Rational> c(static_cast<std::size_t>(deg(rng)) + 1);
  for (auto& v : c) v = random_rational(rng);
  return QPoly(std::move(c));
}

TEST(Poly, TrimsTrailingZeros) {
  EXPECT_EQ(q({1, 2, 0, 0}).degree(), 1);
  EXPECT_TRUE(q({0}).is_zero());
  EXPECT_EQ(QPoly().degree(), -1);
}

TEST(Poly, AddExamples) {
  EXPECT_EQ(poly_add(q({1, 1}), q({0, 0, 1})), q({1, 1, 1}));
  const QPoly p = q({3, -1, 4});
  EXPECT_EQ(poly_add(p, QPoly()), p);
  EXPECT_TRUE(poly_add(q({1, 1}), q({-1, -1})).is_zero());
}

TEST(Poly, MulExamples) {
  EXPECT_EQ(poly_mul(q({1, 1}), q({1, -1})), q({1, 0, -1}));
  const QPoly p = q({2, 0, 5});
  EXPECT_EQ(poly_mul(p, q({1})), p);
  EXPECT_EQ(poly_mul(q({0, 1}), q({0, 0, 1})), q({0, 0, 0, 1}));
}

TEST(Poly, DiffExamples) {
  EXPECT_EQ(poly_diff(q({-1, 0, 1})), q({0, 2}));
  EXPECT_TRUE(poly_diff(q({7})).is_zero());
  EXPECT_EQ(poly_diff(q({0, 1, 0, 1})), q({1, 0, 3}));
}

TEST(Poly, ForwardDiffExamples) {
  EXPECT_EQ(poly_forward_diff(q({0, 0, 1})), q({1, 2}));
  EXPECT_TRUE(poly_forward_diff(q({5})).is_zero());
  EXPECT_EQ(poly_forward_diff(q({0, 1})), q({1}));
}

TEST(Poly, BackwardDiffExamples) {
  EXPECT_EQ(poly_backward_diff(q({0, 0, 1})), q({-1, 2}));
  EXPECT_TRUE(poly_backward_diff(q({5})).is_zero());
  EXPECT_EQ(poly_backward_diff(q({0, 1})), q({1}));
}

TEST(Poly, EvalExamples) {
  EXPECT_EQ(poly_eval(q({-1, 0, 1}), Rational(2)), Rational(3));
  const QPoly p = q({9, 4, 1});
  EXPECT_EQ(poly_eval(p, Rational(0)), Rational(9));
  EXPECT_EQ(poly_eval(q({1, -2}), Rational(1, 2)), Rational(0));
  EXPECT_DOUBLE_EQ(poly_eval(demote<double>(q({1, -2})), 0.5), 0.0);
}

TEST(Poly, DegreeDropsUnderDiffAndDelta) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    QPoly p = random_poly(rng, 12);
    if (p.degree() < 1) continue;
    EXPECT_EQ(poly_diff(p).degree(), p.degree() - 1);
    EXPECT_EQ(poly_forward_diff(p).degree(), p.degree() - 1);
    EXPECT_EQ(poly_backward_diff(p).degree(), p.degree() - 1);
  }
}

TEST(Poly, ForwardDiffMatchesPointwiseDifferenceExactly) {
  std::mt19937_64 rng(12);
  const QPoly p = random_poly(rng, 9) + QPoly::monomial(10, Rational(3, 7));
  const QPoly d = poly_forward_diff(p);
  for (int t = 0; t < 100; ++t) {
    const Rational x = random_rational(rng);
    EXPECT_EQ(poly_eval(d, x), poly_eval(p, Rational(x + 1)) - poly_eval(p, x));
  }
}

TEST(Poly, BackwardDiffMatchesPointwiseDifferenceExactly) {
  std::mt19937_64 rng(13);
  const QPoly p = random_poly(rng, 10);
  const QPoly d = poly_backward_diff(p);
  for (int t = 0; t < 100; ++t) {
    const Rational x = random_rational(rng);
    EXPECT_EQ(poly_eval(d, x), poly_eval(p, x) - poly_eval(p, Rational(x - 1)));
  }
}

TEST(Poly, MulCommutesAndDistributes) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 100; ++t) {
    const QPoly a = random_poly(rng, 8);
    const QPoly b = random_poly(rng, 8);
    const QPoly c = random_poly(rng, 8);
    EXPECT_EQ(a * b, b * a);
    EXPECT_EQ(a * (b + c), a * b + a * c);
  }
}

TEST(Poly, DivmodReconstructs) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 50; ++t) {
    const QPoly a = random_poly(rng, 9);
    QPoly b = random_poly(rng, 4);
    if (b.is_zero()) b = q({1});
    auto [quot, rem] = poly_divmod(a, b);
    EXPECT_EQ(quot * b + rem, a);
    EXPECT_LT(rem.degree(), b.degree() == 0 ? 0 : b.degree());
  }
  EXPECT_THROW(poly_divmod(q({1}), QPoly()), InvalidArgument);
}

TEST(Poly, ShiftAgreesWithEvaluation) {
  std::mt19937_64 rng(16);
  const QPoly p = random_poly(rng, 10);
  const Rational h(-5, 3);
  const QPoly s = poly_shift(p, h);
  for (int t = 0; t < 20; ++t) {
    const Rational x = random_rational(rng);
    EXPECT_EQ(s(x), p(Rational(x + h)));
  }
}

TEST(Poly, FactorialPolynomials) {
  EXPECT_EQ(falling_factorial_poly(3), q({0, 2, -3, 1}));
  EXPECT_EQ(rising_factorial_poly(Rational(1), 2), q({2, 3, 1}));
  EXPECT_EQ(poly_forward_diff(falling_factorial_poly(4)), Rational(4) * falling_factorial_poly(3));
}

TEST(Poly, ExpandInBasisIsExact) {
  const std::vector<QPoly> basis{q({1}), q({-1, 1}), q({1, -3, 1})};
  const QPoly p = q({4, 5, 6});
  const auto a = expand_in_basis(p, basis);
  QPoly back;
  for (std::size_t i = 0; i < a.size(); ++i) back = back + a[i] * basis[i];
  EXPECT_EQ(back, p);
  EXPECT_THROW(expand_in_basis(q({0, 0, 0, 1}), basis), InvalidArgument);
}

TEST(MultiPoly, PartialExamples) {
  const auto x1 = QMultiPoly::variable(2, 0);
  const auto x2 = QMultiPoly::variable(2, 1);
  EXPECT_EQ(multipoly_partial(x1 * x2, 0), x2);
  EXPECT_TRUE(multipoly_partial(QMultiPoly::constant(2, Rational(5)), 0).is_zero());
  EXPECT_EQ(multipoly_partial(x1 * x1, 0), Rational(2) * x1);
  EXPECT_THROW(multipoly_partial(x1, 2), InvalidArgument);
  EXPECT_THROW(multipoly_partial(x1, -1), InvalidArgument);
}

TEST(MultiPoly, NoZeroTermsStored) {
  const auto x1 = QMultiPoly::variable(3, 0);
  const auto p = x1 - x1;
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.total_degree(), -1);
  EXPECT_THROW(QMultiPoly(4), InvalidArgument);
  EXPECT_THROW(QMultiPoly(1, {{Exponent{0, 1, 0}, Rational(1)}}), InvalidArgument);
}

TEST(MultiPoly, PartialMatchesCentralDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> e(0, 3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int t = 0; t < 20; ++t) {
    QMultiPoly::Terms terms;
    for (int k = 0; k < 6; ++k) terms[Exponent{e(rng), e(rng), e(rng)}] += random_rational(rng);
    const QMultiPoly p(3, terms);
    const auto pd = demote<double>(p);
    for (int axis = 0; axis < 3; ++axis) {
      const auto dd = demote<double>(multipoly_partial(p, axis));
      std::array<double, 3> x{u(rng), u(rng), u(rng)};
      const double h = 1e-5;
      auto xp = x;
      auto xm = x;
      xp[static_cast<std::size_t>(axis)] += h;
      xm[static_cast<std::size_t>(axis)] -= h;
      const double fd =
          (pd(std::span<const double>(xp)) - pd(std::span<const double>(xm))) / (2.0 * h);
      const double exact = dd(std::span<const double>(x));
      EXPECT_LE(std::fabs(fd - exact), 1e-6 * std::max(1.0, std::fabs(exact)));
    }
  }
}

}  // namespace
}  // namespace steinpoly
