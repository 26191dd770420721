#pragma once

#include <json.hpp>

#include <string>

#include "steinpoly/basis.hpp"
#include "steinpoly/completeness.hpp"
#include "steinpoly/estimator.hpp"
#include "steinpoly/family.hpp"
#include "steinpoly/projection.hpp"

namespace steinpoly {

using Json = nlohmann::ordered_json;

/// Exact rational from a JSON number (read as its shortest decimal form, so
/// 0.3 is 3/10) or a string such as "3/10".
Rational rational_from_json(const Json& v);

/// {"kind": ..., "params": {...}, "z_domain": [lo, hi]}. Parameters that
/// may move with z1 accept a scalar or {"constant": c, "slope": [...]}.
/// Throws InvalidArgument on unknown kinds or malformed fields.
CondFamily family_from_json(const Json& j);
Json family_to_json(const CondFamily& fam);
CondFamily load_family(const std::string& path);

/// [{"j", "lambda", "coeffs"}, ...] with exact rationals as strings.
Json basis_to_json(const EigenBasis& basis);

/// Fitted mu polynomials of a projection table.
Json projection_to_json(const ProjectionTable& table);

/// {family, n, min_sv, max_sv, verdict, injective, note}.
Json injectivity_to_json(const InjectivityReport& report);

/// {beta, J, ridge, diagnostics}.
Json fit_to_json(const FitResult& fit);

/// Serialized form used for every artifact: two-space indent, trailing
/// newline, shortest round-trip doubles.
std::string dump(const Json& j);

}  // namespace steinpoly
