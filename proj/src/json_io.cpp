#include "steinpoly/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "steinpoly/errors.hpp"

namespace steinpoly {

namespace {

const Json& field(const Json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) throw InvalidArgument(std::string("missing field '") + name + "'");
  return obj.at(name);
}

ZParam zparam_from_json(const Json& v) {
  if (!v.is_object()) return ZParam(rational_from_json(v));
  ZParam p(rational_from_json(field(v, "constant")));
  if (v.contains("slope")) {
    if (!v.at("slope").is_array()) throw InvalidArgument("slope must be an array");
    for (const auto& s : v.at("slope")) p.slope.push_back(rational_from_json(s));
  }
  return p;
}

Json rational_json(const Rational& r) { return to_string(r); }

Json zparam_json(const ZParam& p) {
  if (p.slope.empty()) return rational_json(p.constant);
  Json slope = Json::array();
  for (const auto& s : p.slope) slope.push_back(rational_json(s));
  return Json{{"constant", rational_json(p.constant)}, {"slope", slope}};
}

long integer_from_json(const Json& v, const char* name) {
  const Rational r = rational_from_json(v);
  if (r.get_den() != 1) throw InvalidArgument(std::string(name) + " must be an integer");
  return r.get_num().get_si();
}

}  // namespace

Rational rational_from_json(const Json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InvalidArgument("non-finite number");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, d);
    return parse_rational(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
  }
  throw InvalidArgument("expected a number or a rational string");
}

CondFamily family_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("family must be a JSON object");
  const Json& kind_v = field(j, "kind");
  if (!kind_v.is_string()) throw InvalidArgument("kind must be a string");
  const FamilyKind kind = parse_family_kind(kind_v.get<std::string>());
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  if (!params.is_object()) throw InvalidArgument("params must be an object");
  const Json& dom = field(j, "z_domain");
  if (!dom.is_array() || dom.size() != 2 || !dom[0].is_number() || !dom[1].is_number()) {
    throw InvalidArgument("z_domain must be [lo, hi]");
  }
  const Interval z_domain{dom[0].get<double>(), dom[1].get<double>()};
  auto get = [&](const char* name, const Rational& fallback) {
    return params.contains(name) ? rational_from_json(params.at(name)) : fallback;
  };
  auto get_z = [&](const char* name, const ZParam& fallback) {
    return params.contains(name) ? zparam_from_json(params.at(name)) : fallback;
  };
  switch (kind) {
    case FamilyKind::NormalLoc:
      return CondFamily(params::NormalLoc{get_z("sigma2", Rational(1)), get_z("mean_shift", Rational(0))}, z_domain);
    case FamilyKind::MvNormalLoc: {
      params::MvNormalLoc p;
      const Json& m = field(params, "precision");
      if (!m.is_array()) throw InvalidArgument("precision must be an array of rows");
      for (const auto& row : m) {
        if (!row.is_array()) throw InvalidArgument("precision must be an array of rows");
        std::vector<Rational> r;
        for (const auto& v : row) r.push_back(rational_from_json(v));
        p.precision.push_back(std::move(r));
      }
      return CondFamily(p, z_domain);
    }
    case FamilyKind::GammaShift:
      return CondFamily(
          params::GammaShift{get_z("r", Rational(1)), get_z("delta", Rational(1)), get_z("g", Rational(0))}, z_domain);
    case FamilyKind::BetaTilt:
      return CondFamily(params::BetaTilt{get("a", 1), get("b", 1)}, z_domain);
    case FamilyKind::PoissonTilt:
      return CondFamily(params::PoissonTilt{get("m0", 1)}, z_domain);
    case FamilyKind::NegBinTilt:
      return CondFamily(params::NegBinTilt{params.contains("alpha") ? integer_from_json(params.at("alpha"), "alpha") : 1,
                                           get("p", Rational(1, 2))},
                        z_domain);
    case FamilyKind::BinomialShift:
      return CondFamily(
          params::BinomialShift{params.contains("N") ? integer_from_json(params.at("N"), "N") : 1, get("p", Rational(1, 2))},
          z_domain);
    case FamilyKind::PascalShift:
      return CondFamily(params::PascalShift{get("alpha", 1), get("p", Rational(1, 2))}, z_domain);
  }
  throw InvalidArgument("unknown family kind");
}

Json family_to_json(const CondFamily& fam) {
  Json params = Json::object();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          params["sigma2"] = zparam_json(p.sigma2);
          params["mean_shift"] = zparam_json(p.mean_shift);
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          Json m = Json::array();
          for (const auto& row : p.precision) {
            Json r = Json::array();
            for (const auto& v : row) r.push_back(rational_json(v));
            m.push_back(r);
          }
          params["precision"] = m;
        } else if constexpr (std::is_same_v<P, params::GammaShift>) {
          params["r"] = zparam_json(p.r);
          params["delta"] = zparam_json(p.delta);
          params["g"] = zparam_json(p.g);
        } else if constexpr (std::is_same_v<P, params::BetaTilt>) {
          params["a"] = rational_json(p.a);
          params["b"] = rational_json(p.b);
        } else if constexpr (std::is_same_v<P, params::PoissonTilt>) {
          params["m0"] = rational_json(p.m0);
        } else if constexpr (std::is_same_v<P, params::NegBinTilt>) {
          params["alpha"] = p.alpha;
          params["p"] = rational_json(p.p);
        } else if constexpr (std::is_same_v<P, params::BinomialShift>) {
          params["N"] = p.N;
          params["p"] = rational_json(p.p);
        } else {
          params["alpha"] = rational_json(p.alpha);
          params["p"] = rational_json(p.p);
        }
      },
      fam.params());
  return Json{{"kind", std::string(to_string(fam.kind()))},
              {"params", params},
              {"z_domain", Json::array({fam.z_domain().lo, fam.z_domain().hi})}};
}

CondFamily load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open family file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("family file " + path + " is not valid JSON: " + e.what());
  }
  return family_from_json(j);
}

Json basis_to_json(const EigenBasis& basis) {
  Json out = Json::array();
  for (int j = 0; j <= basis.J; ++j) {
    Json coeffs = Json::array();
    for (const auto& c : basis[j].coeffs()) coeffs.push_back(rational_json(c));
    out.push_back(Json{{"j", j}, {"lambda", rational_json(basis.eigenvalues[static_cast<std::size_t>(j)])},
                       {"coeffs", coeffs}});
  }
  return out;
}

Json projection_to_json(const ProjectionTable& table) {
  Json fitted = Json::array();
  for (int j = 0; j <= table.j_max; ++j) {
    const MuFit& f = table.fitted[static_cast<std::size_t>(j)];
    Json c = Json::array();
    for (Eigen::Index k = 0; k < f.coeffs.size(); ++k) c.push_back(f.coeffs(k));
    fitted.push_back(Json{{"j", j},
                          {"coeffs", c},
                          {"residual", f.residual},
                          {"lower_residual", f.lower_residual},
                          {"spread", f.spread},
                          {"certified", f.certified()}});
  }
  Json z1 = Json::array();
  for (double v : table.basis->z1) z1.push_back(v);
  return Json{{"family", family_to_json(table.family())},
              {"J", table.j_max},
              {"z1", z1},
              {"points", table.z_grid.size()},
              {"fitted", fitted}};
}

Json injectivity_to_json(const InjectivityReport& r) {
  return Json{{"family", r.family}, {"n", r.n},           {"min_sv", r.min_sv},  {"max_sv", r.max_sv},
              {"verdict", r.verdict}, {"injective", r.injective}, {"note", r.note}};
}

Json fit_to_json(const FitResult& fit) {
  Json beta = Json::array();
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j) beta.push_back(fit.beta(j));
  const auto& d = fit.diagnostics;
  return Json{{"beta", beta},
              {"J", fit.J},
              {"ridge", fit.ridge},
              {"diagnostics",
               {{"condition", std::isfinite(d.condition) ? Json(d.condition) : Json("inf")},
                {"rank", d.rank},
                {"residual_mean", d.residual_mean},
                {"residual_sd", d.residual_sd},
                {"direct_projection", d.direct_projection}}}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace steinpoly
