#include "steinpoly/stein.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "steinpoly/basis.hpp"
#include "steinpoly/errors.hpp"

namespace steinpoly {

namespace {

QPoly x_poly() { return QPoly::identity(); }

QPoly shifted_poly(const QPoly& q, long h) { return poly_shift(q, Rational(h)); }

void require_univariate(const CondFamily& fam) {
  if (fam.dim() != 1) throw UnsupportedOperation("Stein operators here act on univariate families only");
}

// Edge convention: the lattice ratio must vanish at the edge, with a finite
// denominator there.
void check_edge(const SteinOp& op) {
  const Rational a(op.lattice_edge);
  if (op.ratio.den(a) == 0) throw OperatorMismatch("lattice ratio has a pole at the lattice edge");
  if (op.ratio.num(a) != 0) throw OperatorMismatch("lattice ratio does not vanish at the lattice edge");
}

double rel_gap(long double a, long double b) {
  const long double scale = std::max({std::fabs(a), std::fabs(b), 1e-300L});
  return static_cast<double>(std::fabs(a - b) / scale);
}

}  // namespace

SteinOp SteinOp::continuous(QPoly phi, QPoly psi) {
  SteinOp op;
  op.form = SteinForm::ContinuousD1;
  op.phi = std::move(phi);
  op.psi = std::move(psi);
  return op;
}

SteinOp SteinOp::forward_base(RationalFunction ratio, Rational m, long edge) {
  if (ratio.den.is_zero()) throw InvalidArgument("lattice ratio has a zero denominator");
  SteinOp op;
  op.form = SteinForm::DiscreteForwardBase;
  op.ratio = std::move(ratio);
  op.m = std::move(m);
  op.discrete = true;
  op.lattice_edge = edge;
  return op;
}

SteinOp SteinOp::backward_base(RationalFunction ratio, Rational m, long edge) {
  SteinOp op = forward_base(std::move(ratio), std::move(m), edge);
  op.form = SteinForm::DiscreteBackwardBase;
  return op;
}

SteinOp SteinOp::pearson_ord(QPoly phi, QPoly psi, bool discrete, Rational c) {
  SteinOp op;
  op.form = SteinForm::PearsonOrd;
  op.phi = std::move(phi);
  op.psi = std::move(psi);
  op.discrete = discrete;
  op.c = std::move(c);
  return op;
}

SteinOp SteinOp::shifted(const Rational& mu) const {
  if (form != SteinForm::PearsonOrd) throw UnsupportedOperation("only Pearson/Ord operators have a shifted form");
  SteinOp op = *this;
  op.shift = mu;
  return op;
}

QPoly stein_derivative(const SteinOp& op, const QPoly& q) {
  return op.uses_difference() ? poly_forward_diff(q) : poly_diff(q);
}

RationalFunction apply_stein_rational(const SteinOp& op, const QPoly& q) {
  switch (op.form) {
    case SteinForm::ContinuousD1:
      return {-(op.phi * poly_diff(q) + op.psi * q), QPoly::constant(1)};
    case SteinForm::PearsonOrd: {
      const QPoly dq = op.discrete ? poly_backward_diff(q) : poly_diff(q);
      return {op.phi * dq + (op.psi + QPoly::constant(op.c * op.shift)) * q, QPoly::constant(1)};
    }
    case SteinForm::DiscreteForwardBase:
      return {-(op.ratio.num * shifted_poly(q, -1)) - op.m * (op.ratio.den * q), op.ratio.den};
    case SteinForm::DiscreteBackwardBase:
      return {-(op.ratio.num * shifted_poly(q, 1)) - op.m * (op.ratio.den * q), op.ratio.den};
  }
  throw InvalidArgument("unknown Stein form");
}

QPoly apply_stein(const SteinOp& op, const QPoly& q) {
  if (op.lattice()) check_edge(op);
  const RationalFunction r = apply_stein_rational(op, q);
  auto [quot, rem] = poly_divmod(r.num, r.den);
  if (!rem.is_zero()) throw OperatorMismatch("rational part of A q does not cancel");
  return quot;
}

QPoly apply_stein_markov(const SteinOp& op, const QPoly& q) { return apply_stein(op, stein_derivative(op, q)); }

Rational lattice_ratio(const SteinOp& op, long x) {
  if (!op.lattice()) throw InvalidArgument("lattice_ratio needs a lattice operator");
  if (x == op.lattice_edge) return 0;
  const Rational xv(x);
  const Rational den = op.ratio.den(xv);
  if (den == 0) throw OperatorMismatch("lattice ratio has a pole at x = " + std::to_string(x));
  return op.ratio.num(xv) / den;
}

Rational apply_stein_at(const SteinOp& op, const std::function<Rational(long)>& h, long x) {
  switch (op.form) {
    case SteinForm::DiscreteForwardBase: {
      const Rational r = lattice_ratio(op, x);
      Rational out = -op.m * h(x);
      if (r != 0) out -= r * h(x - 1);
      return out;
    }
    case SteinForm::DiscreteBackwardBase: {
      const Rational r = lattice_ratio(op, x);
      Rational out = -op.m * h(x);
      if (r != 0) out -= r * h(x + 1);
      return out;
    }
    case SteinForm::PearsonOrd: {
      if (!op.discrete) break;
      const Rational xv(x);
      const Rational hx = h(x);
      return op.phi(xv) * (hx - h(x - 1)) + (op.psi(xv) + op.c * op.shift) * hx;
    }
    case SteinForm::ContinuousD1:
      break;
  }
  throw UnsupportedOperation("pointwise application needs a discrete operator");
}

double ratio_consistency(const SteinOp& op, const std::function<double(long)>& weight, int points) {
  if (!op.lattice()) throw InvalidArgument("ratio_consistency needs a lattice operator");
  const long step = op.form == SteinForm::DiscreteForwardBase ? -1 : 1;
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const long x = op.lattice_edge - step * k;
    // s beyond the edge is zero by convention.
    const long double neighbour = k == 0 ? 0.0L : weight(x + step);
    const long double lhs = static_cast<long double>(to_double(lattice_ratio(op, x))) * weight(x);
    worst = std::max(worst, rel_gap(lhs, neighbour));
  }
  return worst;
}

SteinOp family_stein_op(const CondFamily& fam, std::span<const double> z1) {
  require_univariate(fam);
  switch (fam.kind()) {
    case FamilyKind::NormalLoc:
    case FamilyKind::GammaShift:
    case FamilyKind::BetaTilt: {
      PhiPsi pp = phi_psi(fam, z1);
      return SteinOp::continuous(std::move(pp.phi), std::move(pp.psi));
    }
    case FamilyKind::PoissonTilt: {
      const Rational& m0 = fam.as<params::PoissonTilt>().m0;
      return SteinOp::forward_base({QPoly{Rational(0), Rational(1) / m0}, QPoly::constant(1)}, Rational(-1));
    }
    case FamilyKind::NegBinTilt: {
      const auto& p = fam.as<params::NegBinTilt>();
      // s(x-1)/s(x) = x / (x + alpha - 1) for s = C(x+alpha-1, x) p^alpha.
      return SteinOp::forward_base({x_poly(), QPoly{Rational(p.alpha - 1), Rational(1)}}, p.p - 1);
    }
    case FamilyKind::BinomialShift: {
      const auto& p = fam.as<params::BinomialShift>();
      return SteinOp::pearson_ord(QPoly{Rational(0), 1 - p.p}, QPoly{p.p * p.N, Rational(-1)}, true, p.p);
    }
    case FamilyKind::PascalShift: {
      const auto& p = fam.as<params::PascalShift>();
      return SteinOp::pearson_ord(x_poly(), QPoly{(1 - p.p) * p.alpha, -p.p}, true, 1 - p.p);
    }
    case FamilyKind::MvNormalLoc:
      break;
  }
  throw UnsupportedOperation("no univariate Stein operator for this family");
}

Rational family_coupling(const CondFamily& fam) {
  switch (fam.kind()) {
    case FamilyKind::BinomialShift:
      return fam.as<params::BinomialShift>().p;
    case FamilyKind::PascalShift:
      return 1 - fam.as<params::PascalShift>().p;
    default:
      return 1;
  }
}

namespace {

// Streams the lattice law once, keeping exact values of q and of A^i q for
// i = 1..k at the current and previous lattice point.
IdentityResidual lattice_identity(const CondFamily& fam, const SteinOp& op, const QPoly& q,
                                  const InstrumentPoint& z, int k, const QuadOptions& opt) {
  if (op.form != SteinForm::DiscreteForwardBase) {
    throw UnsupportedOperation("lattice identity is implemented for forward lattices from 0");
  }
  const Law law = conditional_law(fam, z);
  const auto K = static_cast<std::size_t>(k);
  std::vector<Rational> prev(K + 1, Rational(0));
  std::vector<Rational> cur(K + 1);
  long double eq = 0.0L;
  long double eak = 0.0L;
  long double seen = 0.0L;
  for_each_lattice_point(
      law,
      [&](long x, long double mass) {
        const Rational r = lattice_ratio(op, x);
        cur[0] = q(Rational(x));
        for (std::size_t i = 0; i < K; ++i) cur[i + 1] = -r * prev[i] - op.m * cur[i];
        const long double v0 = static_cast<long double>(to_double(cur[0]));
        const long double vk = static_cast<long double>(to_double(cur[K]));
        eq += mass * v0;
        eak += mass * vk;
        const long double term = std::max(std::fabs(mass * v0), std::fabs(mass * vk));
        seen = std::max(seen, term);
        std::swap(prev, cur);
        return term <= 1e-3L * opt.rel_tol * std::max(1.0L, seen);
      },
      opt);
  IdentityResidual out;
  const double rhs_factor = std::pow(-to_double(family_coupling(fam)) * mu_scalar(fam, z), k);
  out.lhs = static_cast<double>(eak);
  out.rhs = rhs_factor * static_cast<double>(eq);
  out.residual = std::fabs(out.lhs - out.rhs);
  out.scale = std::fabs(static_cast<double>(eq));
  return out;
}

}  // namespace

IdentityResidual stein_identity_residual(const CondFamily& fam, const QPoly& q, const InstrumentPoint& z,
                                         const QuadOptions& opt) {
  return iterated_identity_residual(fam, q, z, 1, opt);
}

IdentityResidual iterated_identity_residual(const CondFamily& fam, const QPoly& q, const InstrumentPoint& z, int k,
                                            const QuadOptions& opt) {
  if (k < 1) throw InvalidArgument("iteration count k must be at least 1");
  fam.check_z(z);
  const SteinOp op = family_stein_op(fam, z.z1);
  if (q.is_zero()) return {};
  if (op.lattice()) {
    IdentityResidual out = lattice_identity(fam, op, q, z, k, opt);
    if (k > 1) out.scale = std::max(out.scale, std::fabs(out.lhs));
    return out;
  }
  const Law law = conditional_law(fam, z);
  // The Pearson/Ord families carry the conditional shift inside A_mu, so the
  // identity is checked on the unshifted operator with coupling c.
  QPoly h = q;
  for (int i = 0; i < k; ++i) h = apply_stein(op, h);
  const std::vector<QPoly> qs{q, h};
  const auto e = expect_polys(law, qs, opt);
  IdentityResidual out;
  const double factor = std::pow(-to_double(family_coupling(fam)) * mu_scalar(fam, z), k);
  out.lhs = e[1];
  out.rhs = factor * e[0];
  out.residual = std::fabs(out.lhs - out.rhs);
  out.scale = std::fabs(e[0]);
  if (k > 1) out.scale = std::max(out.scale, std::fabs(out.lhs));
  return out;
}

namespace {

// log|p(e + sign d)| accurate for tiny d through the lowest-order term of the
// re-expansion of p about e.
double log_abs_near(const QPoly& p, const Rational& e, int sign, double d, double logd) {
  const QPoly local = poly_shift(p, e);
  if (local.is_zero()) return -INFINITY;
  if (std::isfinite(d) && d >= 1e-280) {
    const double v = std::fabs(demote<double>(local)(sign * d));
    if (v > 0.0) return std::log(v);
  }
  for (int k = 0; k <= local.degree(); ++k) {
    if (local.coeff(k) != 0) return std::log(std::fabs(to_double(local.coeff(k)))) + k * logd;
  }
  return -INFINITY;
}

struct Endpoint {
  bool finite = false;
  Rational at = 0;
  int sign = 1;  // direction from the endpoint into the support
};

// Log density of a continuous law at the point endpoint + sign * d, written in
// terms of log d so that points arbitrarily close to a finite endpoint stay
// representable.
double log_density_near(const Law& law, const Endpoint& ep, double d, double logd) {
  if (const auto* n = std::get_if<law::Normal>(&law)) {
    const double x = ep.sign * d;
    return -0.5 * (x - n->mean) * (x - n->mean) / n->var - 0.5 * std::log(2.0 * std::numbers::pi * n->var);
  }
  if (const auto* g = std::get_if<law::Gamma>(&law)) {
    return g->shape * std::log(g->rate) + (g->shape - 1.0) * logd - g->rate * d - std::lgamma(g->shape);
  }
  if (const auto* b = std::get_if<law::Beta>(&law)) {
    const double lnorm = std::lgamma(b->a + b->b) - std::lgamma(b->a) - std::lgamma(b->b);
    const double near = ep.sign > 0 ? b->a : b->b;
    const double far = ep.sign > 0 ? b->b : b->a;
    return lnorm + (near - 1.0) * logd + (far - 1.0) * std::log1p(-d);
  }
  throw UnsupportedOperation("boundary guard needs a continuous univariate law");
}

}  // namespace

BoundaryReport boundary_guard(const CondFamily& fam, const QPoly& q, const InstrumentPoint& z) {
  if (fam.discrete()) throw UnsupportedOperation("boundary guard applies to continuous families");
  const Law law = conditional_law(fam, z);
  const PhiPsi pp = phi_psi(fam, z.z1);
  Endpoint lo;
  Endpoint hi;
  hi.sign = -1;
  if (const auto* g = std::get_if<law::Gamma>(&law)) {
    lo.finite = true;
    lo.at = rational_from_double(g->loc);
  } else if (std::holds_alternative<law::Beta>(law)) {
    lo.finite = true;
    hi.finite = true;
    hi.at = 1;
  }
  // Gamma densities are written in the distance from the location.
  const double base_offset = std::holds_alternative<law::Gamma>(law) ? std::get<law::Gamma>(law).loc : 0.0;
  auto run = [&](const Endpoint& ep) {
    std::vector<double> seq;
    constexpr int steps = 80;
    for (int k = 1; k <= steps; ++k) {
      double d;
      double logd;
      Rational base;
      if (ep.finite) {
        // d = 2^{-50k}, handled in log space below the double range.
        logd = -50.0 * k * std::numbers::ln2;
        d = std::exp(logd);
        base = ep.at;
      } else {
        d = std::ldexp(1.0, k / 2) * (k % 2 ? std::numbers::sqrt2 : 1.0);
        logd = std::log(d);
        base = 0;
      }
      double lterm;
      if (ep.finite) {
        lterm = log_abs_near(q, base, ep.sign, d, logd) + log_density_near(law, ep, d, logd) +
                log_abs_near(pp.phi, base, ep.sign, d, logd);
      } else {
        const double x = base_offset + ep.sign * d;
        lterm = std::log(std::fabs(demote<double>(q)(x))) + log_density_near(law, ep, d, logd) +
                std::log(std::fabs(demote<double>(pp.phi)(x)));
      }
      seq.push_back(std::isnan(lterm) ? 0.0 : std::exp(lterm));
    }
    return seq;
  };
  BoundaryReport rep;
  if (std::holds_alternative<law::Normal>(law)) {
    Endpoint minus;
    minus.sign = -1;
    Endpoint plus;
    plus.sign = 1;
    rep.lower = run(minus);
    rep.upper = run(plus);
  } else if (std::holds_alternative<law::Gamma>(law)) {
    Endpoint up;
    up.sign = 1;
    rep.lower = run(lo);
    rep.upper = run(up);
  } else {
    rep.lower = run(lo);
    rep.upper = run(hi);
  }
  auto vanishing = [](const std::vector<double>& s) {
    const double peak = *std::max_element(s.begin(), s.end());
    return s.back() <= 1e-12 * std::max(1.0, peak);
  };
  rep.vanishes = vanishing(rep.lower) && vanishing(rep.upper);
  return rep;
}

OrdFamily ord_family(const CondFamily& fam, int J) {
  if (J < 0) throw InvalidArgument("J must be non-negative");
  OrdFamily out;
  const SteinOp op = family_stein_op(fam);
  if (op.form != SteinForm::PearsonOrd) throw UnsupportedOperation("family is not a shifted Pearson/Ord family");
  out.phi = op.phi;
  out.psi = op.psi;
  out.discrete = true;
  out.c = op.c;
  if (fam.kind() == FamilyKind::BinomialShift) {
    const auto p = fam.as<params::BinomialShift>();
    out.name = "binomial";
    out.shifted = [p](double mu) -> Law { return law::Binomial{p.N + std::lround(mu), to_double(p.p)}; };
    for (int j = 0; j <= J; ++j) out.eigenpolys.push_back(krawtchouk(j, p.N, p.p));
  } else {
    const auto p = fam.as<params::PascalShift>();
    out.name = "pascal";
    out.shifted = [p](double mu) -> Law { return law::NegBinomial{to_double(p.alpha) + mu, to_double(p.p)}; };
    for (int j = 0; j <= J; ++j) out.eigenpolys.push_back(meixner(j, p.alpha, p.p));
  }
  for (const auto& q : out.eigenpolys) out.eigenvalues.push_back(eigenvalue_of(out.op(), q));
  return out;
}

void check_pearson_ord(const OrdFamily& fam, int points) {
  const Law base = fam.shifted(0.0);
  const auto phi = demote<long double>(fam.phi);
  const auto psi = demote<long double>(fam.psi);
  if (fam.discrete) {
    auto f = [&](long x) -> long double { return x < 0 ? 0.0L : std::exp(log_pmf(base, x)); };
    // x = -1 carries the boundary condition phi(0) f(0) = 0.
    for (long x = -1; x < points - 1; ++x) {
      const long double a = phi(static_cast<long double>(x + 1)) * f(x + 1);
      const long double b = phi(static_cast<long double>(x)) * f(x);
      const long double rhs = psi(static_cast<long double>(x)) * f(x);
      const long double scale = std::fabs(a) + std::fabs(b) + std::fabs(rhs);
      if (std::fabs(a - b - rhs) > 1e-9L * scale + 1e-300L) {
        throw NotPearsonOrd("difference equation fails at x = " + std::to_string(x) + " for " + fam.name);
      }
    }
    return;
  }
  double lo = 0.0;
  double hi = 1.0;
  if (const auto* n = std::get_if<law::Normal>(&base)) {
    lo = n->mean - 5.0 * std::sqrt(n->var);
    hi = n->mean + 5.0 * std::sqrt(n->var);
  } else if (const auto* g = std::get_if<law::Gamma>(&base)) {
    lo = g->loc;
    hi = g->loc + 10.0 * (g->shape + 1.0) / g->rate;
  }
  for (int i = 1; i <= points; ++i) {
    const double x = lo + (hi - lo) * i / (points + 1.0);
    const double h = 1e-5 * (hi - lo);
    auto pf = [&](double t) { return static_cast<double>(phi(t)) * pdf(base, t); };
    const double lhs = (pf(x + h) - pf(x - h)) / (2.0 * h);
    const double rhs = static_cast<double>(psi(x)) * pdf(base, x);
    if (std::fabs(lhs - rhs) > 1e-5 * (std::fabs(rhs) + std::fabs(pf(x)) / (hi - lo) + 1e-300)) {
      throw NotPearsonOrd("differential equation fails at x = " + std::to_string(x) + " for " + fam.name);
    }
  }
}

bool PearsonOrdReport::within(double tol) const {
  return std::all_of(rows.begin(), rows.end(), [tol](const OrdRow& r) {
    return r.shifted_residual <= tol * (1.0 + r.scale) && r.eigen_residual <= tol * (1.0 + r.scale);
  });
}

PearsonOrdReport pearson_ord_shifted(const OrdFamily& fam, const Rational& c, std::span<const double> mu_values,
                                     const QuadOptions& opt) {
  check_pearson_ord(fam);
  PearsonOrdReport rep;
  const SteinOp base = SteinOp::pearson_ord(fam.phi, fam.psi, fam.discrete, c);
  for (const double mu : mu_values) {
    const Law law = fam.shifted(mu);
    const Rational mu_q = rational_from_double(mu);
    const SteinOp op = base.shifted(mu_q);
    for (std::size_t j = 0; j < fam.eigenpolys.size(); ++j) {
      const QPoly& q = fam.eigenpolys[j];
      const std::vector<QPoly> qs{q, apply_stein(op, q), stein_derivative(op, q)};
      const auto e = expect_polys(law, qs, opt);
      const double lam = to_double(fam.eigenvalues[j]);
      const double cmu = to_double(c) * mu;
      OrdRow row;
      row.j = static_cast<int>(j);
      row.mu = mu;
      row.shifted_residual = std::fabs(e[1]);
      row.eigen_residual = std::fabs(lam * e[0] + cmu * e[2]);
      row.scale = std::max({std::fabs(lam * e[0]), std::fabs(cmu * e[2]), std::fabs(e[0])});
      rep.max_residual = std::max({rep.max_residual, row.shifted_residual, row.eigen_residual});
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace steinpoly
