#include "steinpoly/basis.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include "steinpoly/errors.hpp"
#include "steinpoly/law.hpp"

namespace steinpoly {

namespace {

int sign_of(const Rational& v) { return sgn(v); }

// Root of a nonconstant linear polynomial.
Rational linear_root(const QPoly& p) { return -p.coeff(0) / p.coeff(1); }

void require_j(int J) {
  if (J < 0) throw InvalidArgument("truncation J must be non-negative");
}

// C(y, k) with y = shift + slope * x, as a polynomial in x.
QPoly binomial_poly(const Rational& shift, const Rational& slope, int k) {
  QPoly out = QPoly::constant(1);
  for (int i = 0; i < k; ++i) out = out * QPoly{Rational(shift - i), slope};
  Rational fact = 1;
  for (int i = 2; i <= k; ++i) fact *= i;
  return Rational(1 / fact) * out;
}

Rational pow_q(const Rational& b, int e) {
  Rational out = 1;
  for (int i = 0; i < e; ++i) out *= b;
  return out;
}

}  // namespace

std::string_view to_string(SLClass cls) {
  switch (cls) {
    case SLClass::HermiteLike:
      return "HermiteLike";
    case SLClass::LaguerreLike:
      return "LaguerreLike";
    case SLClass::JacobiLike:
      return "JacobiLike";
    case SLClass::Unclassified:
      break;
  }
  return "Unclassified";
}

SLClass classify(const QPoly& phi, const QPoly& psi) {
  if (psi.degree() != 1 || phi.is_zero()) return SLClass::Unclassified;
  const int s_phi = sign_of(phi.lead());
  const int s_psi = sign_of(psi.lead());
  const Rational r_psi = linear_root(psi);
  switch (phi.degree()) {
    case 0:
      return s_psi == -s_phi ? SLClass::HermiteLike : SLClass::Unclassified;
    case 1: {
      const Rational r_phi = linear_root(phi);
      if (r_phi == r_psi) return SLClass::Unclassified;
      const bool same = s_phi == s_psi;
      return same == (r_psi < r_phi) ? SLClass::LaguerreLike : SLClass::Unclassified;
    }
    case 2: {
      const Rational disc = phi.coeff(1) * phi.coeff(1) - 4 * phi.coeff(2) * phi.coeff(0);
      if (disc <= 0) return SLClass::Unclassified;
      // Strictly between the roots the quadratic has the sign opposite to its
      // leading coefficient.
      const bool between = sign_of(phi(r_psi)) == -s_phi;
      return between && s_phi == s_psi ? SLClass::JacobiLike : SLClass::Unclassified;
    }
    default:
      return SLClass::Unclassified;
  }
}

PhiPsi phi_psi(const CondFamily& fam, std::span<const double> z1) {
  if (fam.discrete()) throw UnsupportedOperation("phi/psi are defined for continuous families");
  if (fam.dim() != 1) throw UnsupportedOperation("phi/psi are defined for univariate families");
  if (static_cast<int>(z1.size()) < fam.z1_dim()) throw DomainError("z1 has the wrong dimension");
  // tau' and s'/s as exact rational functions of x.
  RationalFunction dtau;
  RationalFunction dlog_s;
  if (fam.kind() == FamilyKind::NormalLoc) {
    const Rational s2 = fam.as<params::NormalLoc>().sigma2.at(z1);
    if (s2 <= 0) throw DomainError("sigma2 is not positive at this z1");
    dtau = {QPoly::constant(1), QPoly::constant(1)};
    dlog_s = {QPoly{Rational(0), -1 / s2}, QPoly::constant(1)};
  } else if (fam.kind() == FamilyKind::GammaShift) {
    const auto& p = fam.as<params::GammaShift>();
    const Rational r = p.r.at(z1);
    const Rational delta = p.delta.at(z1);
    const Rational g = p.g.at(z1);
    const QPoly u{-g, Rational(1)};
    dtau = {QPoly::constant(1), u};
    dlog_s = {QPoly::constant(r - 1) - delta * u, u};
  } else {
    const auto& p = fam.as<params::BetaTilt>();
    const QPoly x = QPoly::identity();
    const QPoly one_minus_x{Rational(1), Rational(-1)};
    dtau = {QPoly::constant(1), x * one_minus_x};
    dlog_s = {Rational(p.a - 1) * one_minus_x - Rational(p.b - 1) * x, x * one_minus_x};
  }
  // phi = -1/tau', which must be a polynomial.
  auto [phi, rem] = poly_divmod(-dtau.den, dtau.num);
  if (!rem.is_zero()) throw NoPolynomialBasis("-1/tau' is not a polynomial");
  auto [psi_part, rem2] = poly_divmod(phi * dlog_s.num, dlog_s.den);
  if (!rem2.is_zero()) throw NoPolynomialBasis("phi s'/s is not a polynomial");
  PhiPsi out;
  out.psi = psi_part + poly_diff(phi);
  out.phi = std::move(phi);
  out.cls = classify(out.phi, out.psi);
  return out;
}

std::vector<QPoly> rodrigues_polys(const PhiPsi& pp, int J) {
  require_j(J);
  if (pp.cls == SLClass::Unclassified) throw NoPolynomialBasis("(phi, psi) matches no sufficient condition");
  const QPoly dphi = poly_diff(pp.phi);
  std::vector<QPoly> out;
  out.reserve(static_cast<std::size_t>(J) + 1);
  for (int j = 0; j <= J; ++j) {
    // D(s phi^k p) = s phi^{k-1} (psi p + (k-1) phi' p + phi p'), since
    // phi s'/s = psi - phi'.
    QPoly p = QPoly::constant(1);
    for (int k = j; k >= 1; --k) p = pp.psi * p + Rational(k - 1) * (dphi * p) + pp.phi * poly_diff(p);
    if (p.degree() != j) throw NoPolynomialBasis("Rodrigues output has the wrong degree at j = " + std::to_string(j));
    out.push_back(std::move(p));
  }
  return out;
}

Rational eigenvalue_of(const SteinOp& op, const QPoly& q) {
  if (q.is_zero()) throw InvalidArgument("the zero polynomial has no eigenvalue");
  const QPoly aq = apply_stein_markov(op, q);
  if (aq.degree() > q.degree()) throw NotAnEigenfunction("A D q has higher degree than q");
  const Rational lambda = aq.coeff(q.degree()) / q.lead();
  if (!(aq - lambda * q).is_zero()) throw NotAnEigenfunction("A D q is not proportional to q");
  return lambda;
}

QPoly charlier(int j, const Rational& m0) {
  require_j(j);
  QPoly out;
  for (int r = 0; r <= j; ++r) {
    const Rational c = binomial(j, r) * ((j - r) % 2 ? -1 : 1) / pow_q(m0, r);
    out = out + c * falling_factorial_poly(r);
  }
  return out;
}

QPoly krawtchouk(int j, long N, const Rational& p) {
  require_j(j);
  QPoly out;
  for (int l = 0; l <= j; ++l) {
    const Rational c = Rational((j - l) % 2 ? -1 : 1) * pow_q(p, j - l) * pow_q(1 - p, l);
    out = out + c * (binomial_poly(Rational(N), Rational(-1), j - l) * binomial_poly(0, 1, l));
  }
  return out;
}

QPoly meixner(int j, const Rational& alpha, const Rational& p) {
  require_j(j);
  QPoly out;
  for (int k = 0; k <= j; ++k) {
    const Rational c = binomial(j, k) * (k % 2 ? -1 : 1) / pow_q(1 - p, k);
    out = out + c * (falling_factorial_poly(k) * rising_factorial_poly(alpha, j - k));
  }
  return out;
}

QPoly jacobi_hypergeometric(int j, const Rational& a, const Rational& b) {
  require_j(j);
  std::vector<Rational> c(static_cast<std::size_t>(j) + 1);
  Rational kfact = 1;
  for (int k = 0; k <= j; ++k) {
    if (k > 0) kfact *= k;
    c[static_cast<std::size_t>(k)] =
        rising_factorial(Rational(-j), k) * rising_factorial(j + a + b - 1, k) / (rising_factorial(a, k) * kfact);
  }
  Rational jfact = 1;
  for (int i = 2; i <= j; ++i) jfact *= i;
  return Rational(rising_factorial(a, j) / jfact) * QPoly(std::move(c));
}

namespace {

void fill_eigenvalues(EigenBasis& b) {
  for (int j = 0; j <= b.J; ++j) {
    const Rational raw = eigenvalue_of(b.op, b[j]);
    if (j == 0 && raw != 0) throw NotAnEigenfunction("constant eigenfunction with nonzero eigenvalue");
    if (j > 0 && raw == 0) throw NotAnEigenfunction("zero eigenvalue at j = " + std::to_string(j));
    b.raw_eigenvalues.push_back(raw);
    b.eigenvalues.push_back(b.eigenvalue_scale * raw);
  }
}

}  // namespace

EigenBasis rodrigues_basis(const CondFamily& fam, int J, std::span<const double> z1) {
  require_j(J);
  PhiPsi pp = phi_psi(fam, z1);
  EigenBasis b{fam, {z1.begin(), z1.end()}, J, rodrigues_polys(pp, J), {}, {}, 1,
               SteinOp::continuous(pp.phi, pp.psi)};
  b.cls = pp.cls;
  // Hermite-like pairs are reported with phi normalized so that lambda_j = -j.
  if (pp.cls == SLClass::HermiteLike) b.eigenvalue_scale = 1 / abs(pp.psi.lead());
  fill_eigenvalues(b);
  return b;
}

EigenBasis discrete_basis(const CondFamily& fam, int J) {
  require_j(J);
  if (!fam.discrete()) throw UnsupportedOperation("discrete_basis needs a lattice family");
  EigenBasis b{fam, {}, J, {}, {}, {}, 1, family_stein_op(fam)};
  b.coupling = family_coupling(fam);
  for (int j = 0; j <= J; ++j) {
    switch (fam.kind()) {
      case FamilyKind::PoissonTilt:
        b.polys.push_back(charlier(j, fam.as<params::PoissonTilt>().m0));
        break;
      case FamilyKind::BinomialShift: {
        const auto& p = fam.as<params::BinomialShift>();
        b.polys.push_back(krawtchouk(j, p.N, p.p));
        break;
      }
      case FamilyKind::PascalShift: {
        const auto& p = fam.as<params::PascalShift>();
        b.polys.push_back(meixner(j, p.alpha, p.p));
        break;
      }
      case FamilyKind::NegBinTilt: {
        const auto& p = fam.as<params::NegBinTilt>();
        b.polys.push_back(meixner(j, Rational(p.alpha), p.p));
        break;
      }
      default:
        throw UnsupportedOperation("no explicit discrete basis for this family");
    }
  }
  if (fam.kind() == FamilyKind::NegBinTilt) {
    // The tilt changes the odds of the Pascal law rather than its size, so the
    // eigen-operator is the base law's Ord operator and the conditional
    // expectation is not a polynomial shift of it.
    const auto& p = fam.as<params::NegBinTilt>();
    b.op = SteinOp::pearson_ord(QPoly::identity(), QPoly{(1 - p.p) * p.alpha, -p.p}, true, 1 - p.p);
    b.coupling = 1 - p.p;
    b.conditional_coupling = false;
  }
  fill_eigenvalues(b);
  return b;
}

EigenBasis make_basis(const CondFamily& fam, int J, std::span<const double> z1) {
  if (fam.dim() != 1) throw UnsupportedOperation("use mv_hermite_basis for the multivariate normal");
  return fam.discrete() ? discrete_basis(fam, J) : rodrigues_basis(fam, J, z1);
}

std::shared_ptr<const EigenBasis> cached_basis(const CondFamily& fam, int J, std::span<const double> z1) {
  static std::shared_mutex mu;
  static std::map<std::string, std::shared_ptr<const EigenBasis>> cache;
  std::ostringstream key;
  key.precision(17);
  key << family_key(fam) << " | J=" << J << " | z1=";
  if (!fam.discrete()) {
    for (double v : z1) key << v << ',';
  }
  const std::string k = key.str();
  {
    std::shared_lock lock(mu);
    if (auto it = cache.find(k); it != cache.end()) return it->second;
  }
  auto made = std::make_shared<const EigenBasis>(make_basis(fam, J, z1));
  std::unique_lock lock(mu);
  return cache.emplace(k, std::move(made)).first->second;
}

std::vector<Rational> ladder_coefficients(const EigenBasis& basis, int j) {
  if (j < 0 || j > basis.J) throw InvalidArgument("ladder index out of range");
  const QPoly d = stein_derivative(basis.op, basis[j]);
  std::vector<QPoly> lower(basis.polys.begin(), basis.polys.begin() + j);
  std::vector<Rational> a = expand_in_basis(d, lower);
  a.resize(static_cast<std::size_t>(j), Rational(0));
  return a;
}

Eigen::MatrixXd gram_matrix(const EigenBasis& basis, const QuadOptions& opt) {
  const Law law = base_law(basis.family, basis.z1);
  const auto n = static_cast<std::size_t>(basis.J) + 1;
  std::vector<double> e;
  if (is_discrete(law)) {
    std::vector<QPoly> products;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) products.push_back(basis.polys[i] * basis.polys[j]);
    e = expect_polys(law, products, opt);
  } else {
    // Each factor is evaluated on its own about the center of the law; the
    // expanded products would cancel far more.
    const long double c0 = law_mean(law);
    const Rational cq = rational_from_double(law_mean(law));
    std::vector<Poly<long double>> q;
    std::vector<Poly<long double>> qa;
    for (const auto& p : basis.polys) {
      q.push_back(demote<long double>(poly_shift(p, cq)));
      std::vector<long double> a;
      for (const auto& c : q.back().coeffs()) a.push_back(std::fabs(c));
      qa.emplace_back(std::move(a));
    }
    std::vector<ScalarFn> fs;
    std::vector<ScalarFn> noise;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        fs.emplace_back([&q, i, j, c0](long double x) { return q[i](x - c0) * q[j](x - c0); });
        noise.emplace_back([&qa, i, j, c0](long double x) {
          const long double u = std::fabs(x - c0);
          return qa[i](u) * qa[j](u);
        });
      }
    }
    e = expect_with_noise(law, fs, noise, opt);
  }
  Eigen::MatrixXd g(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j, ++k) {
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e[k];
      g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = e[k];
    }
  }
  return g;
}

QMultiPoly mv_hermite_basis(const CondFamily& fam, const Exponent& j) {
  if (fam.kind() != FamilyKind::MvNormalLoc) throw UnsupportedOperation("mv_hermite_basis needs MvNormalLoc");
  const auto& m = fam.as<params::MvNormalLoc>().precision;
  const int d = static_cast<int>(m.size());
  if (d > 3) throw UnsupportedOperation("multivariate bases support d <= 3");
  int total = 0;
  for (int i = 0; i < 3; ++i) {
    const int e = j[static_cast<std::size_t>(i)];
    if (e < 0) throw InvalidArgument("negative multi-index");
    if (i >= d && e != 0) throw InvalidArgument("multi-index exceeds the dimension");
    total += e;
  }
  if (total > 10) throw InvalidArgument("multi-index order above 10");
  // d_i (p e^{-x'Mx/2}) = (d_i p - (Mx)_i p) e^{-x'Mx/2}; with the (-1)^|j|
  // sign each step is p <- (Mx)_i p - d_i p.
  QMultiPoly p = QMultiPoly::constant(d, Rational(1));
  for (int i = 0; i < d; ++i) {
    QMultiPoly mx(d);
    for (int k = 0; k < d; ++k) {
      mx = mx + m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * QMultiPoly::variable(d, k);
    }
    for (int s = 0; s < j[static_cast<std::size_t>(i)]; ++s) p = mx * p - multipoly_partial(p, i);
  }
  return p;
}

Eigen::MatrixXd mv_gram(const CondFamily& fam, const std::vector<Exponent>& indices, int nodes) {
  if (fam.kind() != FamilyKind::MvNormalLoc) throw UnsupportedOperation("mv_gram needs MvNormalLoc");
  const auto& mq = fam.as<params::MvNormalLoc>().precision;
  const int d = static_cast<int>(mq.size());
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) m(i, k) = to_double(mq[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
  // X = L^{-T} xi with M = L L' has covariance M^{-1}.
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument("precision matrix is not positive definite");
  const Eigen::MatrixXd u = llt.matrixU();
  const GaussRule rule = gauss_hermite(nodes);
  std::vector<MultiPoly<double>> qs;
  for (const auto& e : indices) qs.push_back(demote<double>(mv_hermite_basis(fam, e)));
  const auto n = static_cast<Eigen::Index>(qs.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd xi(d);
  std::vector<double> vals(qs.size());
  while (true) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      xi(i) = static_cast<double>(rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
      w *= static_cast<double>(rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
    }
    const Eigen::VectorXd x = u.triangularView<Eigen::Upper>().solve(xi);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
    for (std::size_t a = 0; a < qs.size(); ++a) vals[a] = qs[a](xs);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        g(a, b) += w * vals[static_cast<std::size_t>(a)] * vals[static_cast<std::size_t>(b)];
    int pos = 0;
    while (pos < d && ++idx[static_cast<std::size_t>(pos)] == nodes) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == d) break;
  }
  return g;
}

}  // namespace steinpoly
