#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "catalog.hpp"
#include "steinpoly/errors.hpp"
#include "steinpoly/json_io.hpp"

namespace steinpoly {
namespace {

using namespace steinpoly::testing;

TEST(JsonIo, RationalsFromNumbersAndStrings) {
  EXPECT_EQ(rational_from_json(Json(0.3)), Rational(3, 10));
  EXPECT_EQ(rational_from_json(Json(-2)), Rational(-2));
  EXPECT_EQ(rational_from_json(Json("3/10")), Rational(3, 10));
  EXPECT_EQ(rational_from_json(Json(1e-3)), Rational(1, 1000));
  EXPECT_THROW(rational_from_json(Json::array()), InvalidArgument);
  EXPECT_THROW(rational_from_json(Json("x/2")), InvalidArgument);
}

TEST(JsonIo, FamilyRoundTrip) {
  const std::vector<CondFamily> fams{normal(2),      gamma_fam(2, Rational(1, 2)), beta_fam(), poisson(3),
                                     negbin(),       binomial_fam(),               pascal(),   normal_z1(),
                                     gamma_z1(),     mvnormal({{2, 0}, {0, Rational(1, 2)}})};
  for (const auto& f : fams) {
    const Json j = family_to_json(f);
    const CondFamily back = family_from_json(Json::parse(dump(j)));
    EXPECT_EQ(family_to_json(back), j) << dump(j);
    EXPECT_EQ(back.kind(), f.kind());
    EXPECT_EQ(back.z_domain().lo, f.z_domain().lo);
    EXPECT_EQ(back.z_domain().hi, f.z_domain().hi);
  }
}

TEST(JsonIo, DefaultsFillMissingParams) {
  const CondFamily f = family_from_json(Json::parse(R"({"kind":"PoissonTilt","z_domain":[0,2]})"));
  EXPECT_EQ(f.as<params::PoissonTilt>().m0, Rational(1));
}

TEST(JsonIo, MalformedFamiliesThrow) {
  EXPECT_THROW(family_from_json(Json::parse(R"({"kind":"Weibull","z_domain":[0,1]})")), InvalidArgument);
  EXPECT_THROW(family_from_json(Json::parse(R"({"kind":"NormalLoc"})")), InvalidArgument);
  EXPECT_THROW(family_from_json(Json::parse(R"({"kind":"NormalLoc","z_domain":[0]})")), InvalidArgument);
  EXPECT_THROW(family_from_json(Json::parse(R"({"kind":7,"z_domain":[0,1]})")), InvalidArgument);
  EXPECT_THROW(family_from_json(Json::parse("[1,2]")), InvalidArgument);
  EXPECT_THROW(family_from_json(Json::parse(R"({"kind":"BinomialShift","params":{"N":2.5},"z_domain":[0,1]})")),
               InvalidArgument);
}

TEST(JsonIo, LoadFamilyFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "steinpoly_family.json";
  std::ofstream(path) << R"({"kind":"BetaTilt","params":{"a":2,"b":"3"},"z_domain":[-1,1]})";
  const CondFamily f = load_family(path.string());
  EXPECT_EQ(f.as<params::BetaTilt>().b, Rational(3));
  EXPECT_THROW(load_family("/nonexistent/family.json"), InvalidArgument);
}

// Hermite ratios: He_2 = x^2 - 1, He_3 = x^3 - 3x.
TEST(JsonIo, BasisJsonCarriesExactCoefficients) {
  const auto b = cached_basis(normal(), 3, {});
  const Json j = basis_to_json(*b);
  ASSERT_EQ(j.size(), 4u);
  auto coef = [&](int deg, int k) { return parse_rational(j[static_cast<std::size_t>(deg)]["coeffs"][static_cast<std::size_t>(k)].get<std::string>()); };
  EXPECT_EQ(coef(2, 0) / coef(2, 2), Rational(-1));
  EXPECT_EQ(coef(2, 1), Rational(0));
  EXPECT_EQ(coef(3, 1) / coef(3, 3), Rational(-3));
  for (int d = 0; d <= 3; ++d) {
    EXPECT_EQ(j[static_cast<std::size_t>(d)]["j"], d);
    EXPECT_EQ(parse_rational(j[static_cast<std::size_t>(d)]["lambda"].get<std::string>()), b->eigenvalues[static_cast<std::size_t>(d)]);
  }
}

TEST(JsonIo, DumpRoundTripsDoubles) {
  const double v = 0.1 + 0.2;
  const Json j{{"v", v}};
  EXPECT_EQ(Json::parse(dump(j))["v"].get<double>(), v);
  EXPECT_EQ(dump(j).back(), '\n');
}

}  // namespace
}  // namespace steinpoly
