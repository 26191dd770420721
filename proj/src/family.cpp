#include "steinpoly/family.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include "steinpoly/errors.hpp"
#include "steinpoly/law.hpp"

namespace steinpoly {

namespace {

constexpr std::array<std::pair<FamilyKind, std::string_view>, 8> kKindNames{{
    {FamilyKind::NormalLoc, "NormalLoc"},
    {FamilyKind::MvNormalLoc, "MvNormalLoc"},
    {FamilyKind::GammaShift, "GammaShift"},
    {FamilyKind::BetaTilt, "BetaTilt"},
    {FamilyKind::PoissonTilt, "PoissonTilt"},
    {FamilyKind::NegBinTilt, "NegBinTilt"},
    {FamilyKind::BinomialShift, "BinomialShift"},
    {FamilyKind::PascalShift, "PascalShift"},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

int slope_dim(const ZParam& p) { return static_cast<int>(p.slope.size()); }

void require_positive(const ZParam& p, const char* name) {
  if (!p.depends_on_z1() && p.constant <= 0) throw InvalidArgument(std::string(name) + " must be positive");
}

double positive_at(const ZParam& p, std::span<const double> z1, const char* name) {
  double v = to_double(p.at(z1));
  if (!(v > 0.0)) throw DomainError(std::string(name) + " is not positive at this z1");
  return v;
}

bool in_unit_open(const Rational& p) { return p > 0 && p < 1; }

/// Exact positive-definiteness of a small symmetric rational matrix via
/// leading principal minors.
bool positive_definite(const std::vector<std::vector<Rational>>& m) {
  const std::size_t d = m.size();
  auto det = [&](std::size_t k) {
    // Fraction-free elimination on the leading k x k block.
    std::vector<std::vector<Rational>> a(k, std::vector<Rational>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) a[i][j] = m[i][j];
    Rational out = 1;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t piv = c;
      while (piv < k && a[piv][c] == 0) ++piv;
      if (piv == k) return Rational(0);
      if (piv != c) {
        std::swap(a[piv], a[c]);
        out = -out;
      }
      out *= a[c][c];
      for (std::size_t r = c + 1; r < k; ++r) {
        Rational f = a[r][c] / a[c][c];
        for (std::size_t j = c; j < k; ++j) a[r][j] -= f * a[c][j];
      }
    }
    return out;
  };
  for (std::size_t k = 1; k <= d; ++k) {
    if (det(k) <= 0) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

FamilyKind parse_family_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (iequals(n, name)) return k;
  }
  throw InvalidArgument("unknown family kind '" + std::string(name) + "'");
}

Rational ZParam::at(std::span<const double> z1) const {
  if (slope.size() > z1.size()) throw InvalidArgument("parameter depends on more z1 coordinates than supplied");
  Rational v = constant;
  for (std::size_t k = 0; k < slope.size(); ++k) {
    if (slope[k] != 0) v += slope[k] * rational_from_double(z1[k]);
  }
  return v;
}

bool ZParam::depends_on_z1() const {
  return std::any_of(slope.begin(), slope.end(), [](const Rational& s) { return s != 0; });
}

CondFamily::CondFamily(FamilyParams params, Interval z_domain) : params_(std::move(params)), z_domain_(z_domain) {
  if (!std::isfinite(z_domain_.lo) || !std::isfinite(z_domain_.hi) || z_domain_.lo > z_domain_.hi) {
    throw InvalidArgument("z_domain must be a finite interval with lo <= hi");
  }
  const double lo = z_domain_.lo;
  const double hi = z_domain_.hi;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          require_positive(p.sigma2, "sigma2");
          z1_dim_ = std::max(slope_dim(p.sigma2), slope_dim(p.mean_shift));
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          const std::size_t d = p.precision.size();
          if (d == 0) throw InvalidArgument("precision matrix is empty");
          if (d > 3) throw UnsupportedOperation("MvNormalLoc supports d <= 3");
          for (const auto& row : p.precision) {
            if (row.size() != d) throw InvalidArgument("precision matrix must be square");
          }
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < i; ++j)
              if (p.precision[i][j] != p.precision[j][i]) throw InvalidArgument("precision matrix must be symmetric");
          if (!positive_definite(p.precision)) throw InvalidArgument("precision matrix must be positive definite");
        } else if constexpr (std::is_same_v<P, params::GammaShift>) {
          require_positive(p.r, "r");
          require_positive(p.delta, "delta");
          z1_dim_ = std::max({slope_dim(p.r), slope_dim(p.delta), slope_dim(p.g)});
          if (!p.r.depends_on_z1() && !(lo > -to_double(p.r.constant))) {
            throw InvalidArgument("GammaShift z_domain must satisfy r + z > 0");
          }
        } else if constexpr (std::is_same_v<P, params::BetaTilt>) {
          if (p.a <= 0 || p.b <= 0) throw InvalidArgument("beta shapes must be positive");
          if (!(lo > -to_double(p.a)) || !(hi < to_double(p.b))) {
            throw InvalidArgument("BetaTilt z_domain must lie inside (-a, b)");
          }
        } else if constexpr (std::is_same_v<P, params::PoissonTilt>) {
          if (p.m0 <= 0) throw InvalidArgument("m0 must be positive");
          if (!(lo > -to_double(p.m0))) throw InvalidArgument("PoissonTilt z_domain must satisfy mu(z) - m > 0");
        } else if constexpr (std::is_same_v<P, params::NegBinTilt>) {
          if (p.alpha < 1) throw InvalidArgument("alpha must be an integer >= 1");
          if (!in_unit_open(p.p)) throw InvalidArgument("p must lie in (0, 1)");
          const double pd = to_double(p.p);
          if (!(lo > pd - 1.0) || !(hi < pd)) {
            throw InvalidArgument("NegBinTilt z_domain must lie inside (p - 1, p)");
          }
        } else if constexpr (std::is_same_v<P, params::BinomialShift>) {
          if (p.N < 0) throw InvalidArgument("N must be a non-negative integer");
          if (!in_unit_open(p.p)) throw InvalidArgument("p must lie in (0, 1)");
          if (lo < -static_cast<double>(p.N)) throw InvalidArgument("BinomialShift z_domain must satisfy N + z >= 0");
        } else if constexpr (std::is_same_v<P, params::PascalShift>) {
          if (p.alpha <= 0) throw InvalidArgument("alpha must be positive");
          if (!in_unit_open(p.p)) throw InvalidArgument("p must lie in (0, 1)");
          if (!(lo > -to_double(p.alpha))) throw InvalidArgument("PascalShift z_domain must satisfy alpha + z > 0");
        }
      },
      params_);
}

FamilyKind CondFamily::kind() const { return static_cast<FamilyKind>(params_.index()); }

bool CondFamily::discrete() const {
  switch (kind()) {
    case FamilyKind::PoissonTilt:
    case FamilyKind::NegBinTilt:
    case FamilyKind::BinomialShift:
    case FamilyKind::PascalShift:
      return true;
    default:
      return false;
  }
}

int CondFamily::dim() const {
  if (const auto* mv = std::get_if<params::MvNormalLoc>(&params_)) return static_cast<int>(mv->precision.size());
  return 1;
}

bool CondFamily::power_series() const {
  return kind() == FamilyKind::PoissonTilt || kind() == FamilyKind::NegBinTilt;
}

Rational CondFamily::shift_m() const {
  if (kind() == FamilyKind::PoissonTilt) return -1;
  if (const auto* nb = std::get_if<params::NegBinTilt>(&params_)) return nb->p - 1;
  throw UnsupportedOperation(std::string(to_string(kind())) + " is not a power-series family");
}

void CondFamily::check_z(const InstrumentPoint& z) const {
  if (static_cast<int>(z.z2.size()) != dim()) throw DomainError("z2 has the wrong dimension");
  if (static_cast<int>(z.z1.size()) != z1_dim_) throw DomainError("z1 has the wrong dimension");
  for (double v : z.z2) {
    if (!std::isfinite(v) || !z_domain_.contains(v)) throw DomainError("z2 outside the family z_domain");
  }
  for (double v : z.z1) {
    if (!std::isfinite(v)) throw DomainError("z1 is not finite");
  }
  if (kind() == FamilyKind::BinomialShift && z.z2[0] != std::round(z.z2[0])) {
    throw DomainError("BinomialShift requires an integer z2");
  }
}

std::string family_key(const CondFamily& fam) {
  std::string out(to_string(fam.kind()));
  auto add = [&out](const Rational& r) {
    out += ' ';
    out += to_string(r);
  };
  auto add_z = [&](const ZParam& p) {
    add(p.constant);
    out += " [";
    for (const auto& s : p.slope) add(s);
    out += " ]";
  };
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          add_z(p.sigma2);
          add_z(p.mean_shift);
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          for (const auto& row : p.precision)
            for (const auto& v : row) add(v);
        } else if constexpr (std::is_same_v<P, params::GammaShift>) {
          add_z(p.r);
          add_z(p.delta);
          add_z(p.g);
        } else if constexpr (std::is_same_v<P, params::BetaTilt>) {
          add(p.a);
          add(p.b);
        } else if constexpr (std::is_same_v<P, params::PoissonTilt>) {
          add(p.m0);
        } else if constexpr (std::is_same_v<P, params::NegBinTilt>) {
          add(Rational(p.alpha));
          add(p.p);
        } else if constexpr (std::is_same_v<P, params::BinomialShift>) {
          add(Rational(p.N));
          add(p.p);
        } else {
          add(p.alpha);
          add(p.p);
        }
      },
      fam.params());
  add(rational_from_double(fam.z_domain().lo));
  add(rational_from_double(fam.z_domain().hi));
  return out;
}

std::vector<double> mu(const CondFamily& fam, const InstrumentPoint& z) {
  fam.check_z(z);
  const double z2 = z.z2[0];
  return std::visit(
      [&](const auto& p) -> std::vector<double> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          const double s2 = positive_at(p.sigma2, z.z1, "sigma2");
          return {(to_double(p.mean_shift.at(z.z1)) + z2) / s2};
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          const std::size_t d = p.precision.size();
          std::vector<double> out(d, 0.0);
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) out[i] += to_double(p.precision[i][j]) * z.z2[j];
          return out;
        } else if constexpr (std::is_same_v<P, params::PoissonTilt>) {
          return {z2 / to_double(p.m0)};
        } else {
          return {z2};
        }
      },
      fam.params());
}

double mu_scalar(const CondFamily& fam, const InstrumentPoint& z) {
  if (fam.dim() != 1) throw UnsupportedOperation("mu_scalar requires a univariate family");
  return mu(fam, z)[0];
}

double density(const CondFamily& fam, std::span<const double> x, const InstrumentPoint& z) {
  return pdf(conditional_law(fam, z), x);
}

double density(const CondFamily& fam, double x, const InstrumentPoint& z) {
  return pdf(conditional_law(fam, z), x);
}

double weight_s(const CondFamily& fam, std::span<const double> x, std::span<const double> z1) {
  if (static_cast<int>(x.size()) != fam.dim()) throw InvalidArgument("x has the wrong dimension");
  const double v = x[0];
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          const double s2 = positive_at(p.sigma2, z1, "sigma2");
          return std::exp(-v * v / (2.0 * s2));
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          double q = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j) q += x[i] * to_double(p.precision[i][j]) * x[j];
          return std::exp(-0.5 * q);
        } else if constexpr (std::is_same_v<P, params::GammaShift>) {
          const double r = positive_at(p.r, z1, "r");
          const double delta = positive_at(p.delta, z1, "delta");
          const double u = v - to_double(p.g.at(z1));
          if (!(u > 0.0)) return 0.0;
          return std::exp((r - 1.0) * std::log(u) - delta * u);
        } else if constexpr (std::is_same_v<P, params::BetaTilt>) {
          if (!(v > 0.0 && v < 1.0)) return 0.0;
          return std::exp((to_double(p.a) - 1.0) * std::log(v) + (to_double(p.b) - 1.0) * std::log1p(-v));
        } else {
          if (v < 0.0 || v != std::floor(v)) return 0.0;
          if constexpr (std::is_same_v<P, params::PoissonTilt>) {
            const double m0 = to_double(p.m0);
            return std::exp(-m0 + v * std::log(m0) - std::lgamma(v + 1.0));
          } else if constexpr (std::is_same_v<P, params::NegBinTilt>) {
            const double a = static_cast<double>(p.alpha);
            return std::exp(std::lgamma(v + a) - std::lgamma(a) - std::lgamma(v + 1.0) + a * std::log(to_double(p.p)));
          } else {
            // Size-shift families: the weight is the unshifted law itself.
            return pdf(base_law(fam, z1), v);
          }
        }
      },
      fam.params());
}

double weight_s(const CondFamily& fam, double x, std::span<const double> z1) {
  return weight_s(fam, std::span<const double>(&x, 1), z1);
}

std::vector<double> tau(const CondFamily& fam, std::span<const double> x, std::span<const double> z1) {
  if (static_cast<int>(x.size()) != fam.dim()) throw InvalidArgument("x has the wrong dimension");
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("x is not finite");
  }
  const double v = x[0];
  switch (fam.kind()) {
    case FamilyKind::NormalLoc:
    case FamilyKind::MvNormalLoc:
      return {x.begin(), x.end()};
    case FamilyKind::GammaShift: {
      const double u = v - to_double(fam.as<params::GammaShift>().g.at(z1));
      if (!(u > 0.0)) throw DomainError("x must lie strictly above g(z1)");
      return {std::log(u)};
    }
    case FamilyKind::BetaTilt:
      if (!(v > 0.0 && v < 1.0)) throw DomainError("x must lie strictly inside (0, 1)");
      return {std::log(v) - std::log1p(-v)};
    default:
      if (v < 0.0 || v != std::floor(v)) throw DomainError("x must be a non-negative integer");
      return {v};
  }
}

double tau(const CondFamily& fam, double x, std::span<const double> z1) {
  return tau(fam, std::span<const double>(&x, 1), z1)[0];
}

double t_of_z(const CondFamily& fam, const InstrumentPoint& z) {
  fam.check_z(z);
  const double z2 = z.z2[0];
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, params::NormalLoc>) {
          const double s2 = positive_at(p.sigma2, z.z1, "sigma2");
          const double m = to_double(p.mean_shift.at(z.z1)) + z2;
          return std::exp(-m * m / (2.0 * s2)) / std::sqrt(2.0 * std::numbers::pi * s2);
        } else if constexpr (std::is_same_v<P, params::MvNormalLoc>) {
          const std::size_t d = p.precision.size();
          Eigen::MatrixXd m(d, d);
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) m(i, j) = to_double(p.precision[i][j]);
          Eigen::Map<const Eigen::VectorXd> zz(z.z2.data(), static_cast<Eigen::Index>(d));
          const double quad = zz.dot(m * zz);
          return std::sqrt(m.determinant() / std::pow(2.0 * std::numbers::pi, static_cast<double>(d))) *
                 std::exp(-0.5 * quad);
        } else if constexpr (std::is_same_v<P, params::GammaShift>) {
          const double shape = positive_at(p.r, z.z1, "r") + z2;
          const double delta = positive_at(p.delta, z.z1, "delta");
          if (!(shape > 0.0)) throw DomainError("r + z2 must be positive");
          return std::exp(shape * std::log(delta) - std::lgamma(shape));
        } else if constexpr (std::is_same_v<P, params::BetaTilt>) {
          const double a = to_double(p.a) + z2;
          const double b = to_double(p.b) - z2;
          return std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b));
        } else if constexpr (std::is_same_v<P, params::PoissonTilt>) {
          return std::exp(-z2);
        } else if constexpr (std::is_same_v<P, params::NegBinTilt>) {
          // Closed form of the normalizer: sum_x C(x+a-1,x) (1-p+z)^x = (p-z)^-a.
          const double pd = to_double(p.p);
          return std::pow((pd - z2) / pd, static_cast<double>(p.alpha));
        } else {
          throw UnsupportedOperation(std::string(to_string(fam.kind())) +
                                     " is a size-shift law with no t(z) factorization");
        }
      },
      fam.params());
}

Eigen::MatrixXd sample(const CondFamily& fam, const InstrumentPoint& z, long n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample size must be at least 1");
  return draw(conditional_law(fam, z), n, seed);
}

}  // namespace steinpoly
