#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "steinpoly/errors.hpp"
#include "steinpoly/rational.hpp"

namespace steinpoly {

/// Dense univariate polynomial; coeffs()[k] multiplies x^k.
///
/// The coefficient vector never carries trailing zeros, so the zero
/// polynomial is the empty vector and degree() == coeffs().size() - 1
/// otherwise. Values are immutable once built; all arithmetic returns a new
/// polynomial.
template <typename Scalar>
class Poly {
 public:
  using scalar_type = Scalar;

  Poly() = default;
  explicit Poly(std::vector<Scalar> coeffs) : c_(std::move(coeffs)) { trim(); }
  Poly(std::initializer_list<Scalar> coeffs) : c_(coeffs) { trim(); }

  static Poly constant(const Scalar& value) { return Poly(std::vector<Scalar>{value}); }
  static Poly monomial(int k, const Scalar& value = Scalar(1)) {
    std::vector<Scalar> c(static_cast<std::size_t>(k) + 1, Scalar(0));
    c.back() = value;
    return Poly(std::move(c));
  }
  static Poly identity() { return monomial(1); }

  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const std::vector<Scalar>& coeffs() const { return c_; }
  Scalar coeff(int k) const {
    return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(k)] : Scalar(0);
  }
  Scalar lead() const { return c_.empty() ? Scalar(0) : c_.back(); }

  /// Horner evaluation in the argument's type.
  template <typename T>
  T operator()(const T& x) const {
    T acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + scalar_cast<T>(*it);
    return acc;
  }

  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == Scalar(0)) c_.pop_back();
  }
  std::vector<Scalar> c_;
};

using QPoly = Poly<Rational>;
using DPoly = Poly<double>;

template <typename Scalar>
Poly<Scalar> operator+(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  const auto& ac = a.coeffs();
  const auto& bc = b.coeffs();
  std::vector<Scalar> c(std::max(ac.size(), bc.size()), Scalar(0));
  for (std::size_t i = 0; i < ac.size(); ++i) c[i] += ac[i];
  for (std::size_t i = 0; i < bc.size(); ++i) c[i] += bc[i];
  return Poly<Scalar>(std::move(c));
}

template <typename Scalar>
Poly<Scalar> operator-(const Poly<Scalar>& a) {
  std::vector<Scalar> c(a.coeffs());
  for (auto& v : c) v = -v;
  return Poly<Scalar>(std::move(c));
}

template <typename Scalar>
Poly<Scalar> operator-(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  return a + (-b);
}

template <typename Scalar>
Poly<Scalar> operator*(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  if (a.is_zero() || b.is_zero()) return {};
  const auto& ac = a.coeffs();
  const auto& bc = b.coeffs();
  std::vector<Scalar> c(ac.size() + bc.size() - 1, Scalar(0));
  for (std::size_t i = 0; i < ac.size(); ++i) {
    for (std::size_t j = 0; j < bc.size(); ++j) c[i + j] += ac[i] * bc[j];
  }
  return Poly<Scalar>(std::move(c));
}

template <typename Scalar>
Poly<Scalar> operator*(const Scalar& s, const Poly<Scalar>& a) {
  std::vector<Scalar> c(a.coeffs());
  for (auto& v : c) v = s * v;
  return Poly<Scalar>(std::move(c));
}

template <typename Scalar>
Poly<Scalar> operator*(const Poly<Scalar>& a, const Scalar& s) {
  return s * a;
}

template <typename Scalar>
Poly<Scalar> poly_add(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  return a + b;
}

template <typename Scalar>
Poly<Scalar> poly_mul(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
Poly<Scalar> poly_diff(const Poly<Scalar>& p) {
  const auto& c = p.coeffs();
  if (c.size() <= 1) return {};
  std::vector<Scalar> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = Scalar(static_cast<long>(k)) * c[k];
  return Poly<Scalar>(std::move(d));
}

/// Coefficients of p(x + h), by binomial re-expansion of each power.
template <typename Scalar>
Poly<Scalar> poly_shift(const Poly<Scalar>& p, const Scalar& h) {
  const auto& c = p.coeffs();
  const std::size_t n = c.size();
  std::vector<Scalar> out(n, Scalar(0));
  // Pascal-row walk: row k holds C(k, i) h^(k-i).
  std::vector<Scalar> row{Scalar(1)};
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      std::vector<Scalar> next(k + 1, Scalar(0));
      for (std::size_t i = 0; i < k; ++i) {
        next[i] += row[i] * h;
        next[i + 1] += row[i];
      }
      row = std::move(next);
    }
    for (std::size_t i = 0; i <= k; ++i) out[i] += c[k] * row[i];
  }
  return Poly<Scalar>(std::move(out));
}

/// Delta p(x) = p(x+1) - p(x).
template <typename Scalar>
Poly<Scalar> poly_forward_diff(const Poly<Scalar>& p) {
  return poly_shift(p, Scalar(1)) - p;
}

/// Nabla p(x) = p(x) - p(x-1).
template <typename Scalar>
Poly<Scalar> poly_backward_diff(const Poly<Scalar>& p) {
  return p - poly_shift(p, Scalar(-1));
}

template <typename Scalar, typename T>
T poly_eval(const Poly<Scalar>& p, const T& x) {
  return p(x);
}

/// Euclidean division a = q*b + r with deg r < deg b. Exact for Rational.
template <typename Scalar>
std::pair<Poly<Scalar>, Poly<Scalar>> poly_divmod(const Poly<Scalar>& a, const Poly<Scalar>& b) {
  if (b.is_zero()) throw InvalidArgument("polynomial division by zero");
  std::vector<Scalar> rem(a.coeffs());
  const auto& bc = b.coeffs();
  const int db = b.degree();
  if (a.degree() < db) return {Poly<Scalar>{}, a};
  std::vector<Scalar> quot(static_cast<std::size_t>(a.degree() - db + 1), Scalar(0));
  for (int k = a.degree(); k >= db; --k) {
    Scalar f = rem[static_cast<std::size_t>(k)] / bc.back();
    quot[static_cast<std::size_t>(k - db)] = f;
    for (int i = 0; i <= db; ++i) rem[static_cast<std::size_t>(k - db + i)] -= f * bc[static_cast<std::size_t>(i)];
  }
  rem.resize(static_cast<std::size_t>(db));
  return {Poly<Scalar>(std::move(quot)), Poly<Scalar>(std::move(rem))};
}

/// Float demotion for quadrature consumers.
template <typename To, typename From>
Poly<To> demote(const Poly<From>& p) {
  std::vector<To> c;
  c.reserve(p.coeffs().size());
  for (const auto& v : p.coeffs()) c.push_back(scalar_cast<To>(v));
  return Poly<To>(std::move(c));
}

/// Falling factorial x (x-1) ... (x-k+1) as a polynomial in x.
inline QPoly falling_factorial_poly(int k) {
  QPoly out = QPoly::constant(1);
  for (int i = 0; i < k; ++i) out = out * QPoly{Rational(-i), Rational(1)};
  return out;
}

/// Rising factorial (x + a)(x + a + 1) ... (x + a + k - 1) as a polynomial in x.
inline QPoly rising_factorial_poly(const Rational& a, int k) {
  QPoly out = QPoly::constant(1);
  for (int i = 0; i < k; ++i) out = out * QPoly{Rational(a + i), Rational(1)};
  return out;
}

/// Quotient of two exact polynomials; used for lattice weight ratios
/// s(x-1)/s(x) and for derivative ratios like s'/s.
struct RationalFunction {
  QPoly num;
  QPoly den = QPoly::constant(1);

  template <typename T>
  T operator()(const T& x) const {
    return num(x) / den(x);
  }
  /// Exact polynomial form, if den divides num.
  bool is_polynomial() const { return poly_divmod(num, den).second.is_zero(); }
};

/// Expands p in the triangular family {basis[0..k]} (deg basis[i] == i).
/// Returns coefficients a with p == sum a_i basis[i]; throws if p is not in
/// the span.
inline std::vector<Rational> expand_in_basis(const QPoly& p, const std::vector<QPoly>& basis) {
  std::vector<Rational> a(static_cast<std::size_t>(std::max(p.degree() + 1, 0)), Rational(0));
  QPoly rem = p;
  while (!rem.is_zero()) {
    const int d = rem.degree();
    if (d >= static_cast<int>(basis.size())) throw InvalidArgument("polynomial degree exceeds basis");
    const QPoly& b = basis[static_cast<std::size_t>(d)];
    if (b.degree() != d) throw InvalidArgument("basis is not degree-graded");
    Rational f = rem.lead() / b.lead();
    a[static_cast<std::size_t>(d)] = f;
    rem = rem - f * b;
  }
  return a;
}

}  // namespace steinpoly
