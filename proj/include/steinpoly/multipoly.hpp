#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <utility>

#include "steinpoly/errors.hpp"
#include "steinpoly/rational.hpp"

namespace steinpoly {

/// Multi-index (j_1, ..., j_d); unused trailing slots stay zero.
using Exponent = std::array<int, 3>;

/// Sparse polynomial in d <= 3 variables. No stored term is exactly zero.
template <typename Scalar>
class MultiPoly {
 public:
  using scalar_type = Scalar;
  using Terms = std::map<Exponent, Scalar>;

  explicit MultiPoly(int dim = 1) : dim_(dim) { check_dim(dim); }
  MultiPoly(int dim, Terms terms) : dim_(dim), terms_(std::move(terms)) {
    check_dim(dim);
    for (auto it = terms_.begin(); it != terms_.end();) {
      validate(it->first);
      it = (it->second == Scalar(0)) ? terms_.erase(it) : std::next(it);
    }
  }

  static MultiPoly constant(int dim, const Scalar& c) { return MultiPoly(dim, Terms{{Exponent{0, 0, 0}, c}}); }
  /// The coordinate function x_axis.
  static MultiPoly variable(int dim, int axis) {
    if (axis < 0 || axis >= dim) throw InvalidArgument("axis out of range");
    Exponent e{0, 0, 0};
    e[static_cast<std::size_t>(axis)] = 1;
    return MultiPoly(dim, Terms{{e, Scalar(1)}});
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int total_degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
  }
  Scalar coeff(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  template <typename T>
  T operator()(std::span<const T> x) const {
    if (static_cast<int>(x.size()) != dim_) throw InvalidArgument("point dimension mismatch");
    T acc(0);
    for (const auto& [e, c] : terms_) {
      T term = scalar_cast<T>(c);
      for (int i = 0; i < dim_; ++i) {
        for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k) term *= x[static_cast<std::size_t>(i)];
      }
      acc += term;
    }
    return acc;
  }

  friend bool operator==(const MultiPoly& a, const MultiPoly& b) { return a.dim_ == b.dim_ && a.terms_ == b.terms_; }

  friend MultiPoly operator+(const MultiPoly& a, const MultiPoly& b) {
    require_same_dim(a, b);
    Terms t = a.terms_;
    for (const auto& [e, c] : b.terms_) t[e] += c;
    return MultiPoly(a.dim_, std::move(t));
  }
  friend MultiPoly operator-(const MultiPoly& a) {
    Terms t = a.terms_;
    for (auto& [e, c] : t) c = -c;
    return MultiPoly(a.dim_, std::move(t));
  }
  friend MultiPoly operator-(const MultiPoly& a, const MultiPoly& b) { return a + (-b); }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    require_same_dim(a, b);
    Terms t;
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        Exponent e{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]};
        t[e] += ca * cb;
      }
    }
    return MultiPoly(a.dim_, std::move(t));
  }
  friend MultiPoly operator*(const Scalar& s, const MultiPoly& a) {
    Terms t = a.terms_;
    for (auto& [e, c] : t) c = s * c;
    return MultiPoly(a.dim_, std::move(t));
  }

 private:
  static void check_dim(int dim) {
    if (dim < 1 || dim > 3) throw InvalidArgument("MultiPoly supports 1 <= dim <= 3");
  }
  void validate(const Exponent& e) const {
    for (int i = 0; i < 3; ++i) {
      if (e[static_cast<std::size_t>(i)] < 0) throw InvalidArgument("negative exponent");
      if (i >= dim_ && e[static_cast<std::size_t>(i)] != 0) throw InvalidArgument("exponent exceeds dimension");
    }
  }
  static void require_same_dim(const MultiPoly& a, const MultiPoly& b) {
    if (a.dim_ != b.dim_) throw InvalidArgument("MultiPoly dimension mismatch");
  }

  int dim_;
  Terms terms_;
};

using QMultiPoly = MultiPoly<Rational>;

template <typename Scalar>
MultiPoly<Scalar> multipoly_partial(const MultiPoly<Scalar>& p, int axis) {
  if (axis < 0 || axis >= p.dim()) throw InvalidArgument("axis out of range for partial derivative");
  typename MultiPoly<Scalar>::Terms t;
  const auto a = static_cast<std::size_t>(axis);
  for (const auto& [e, c] : p.terms()) {
    if (e[a] == 0) continue;
    Exponent d = e;
    d[a] -= 1;
    t[d] += Scalar(e[a]) * c;
  }
  return MultiPoly<Scalar>(p.dim(), std::move(t));
}

template <typename To, typename From>
MultiPoly<To> demote(const MultiPoly<From>& p) {
  typename MultiPoly<To>::Terms t;
  for (const auto& [e, c] : p.terms()) t[e] = scalar_cast<To>(c);
  return MultiPoly<To>(p.dim(), std::move(t));
}

}  // namespace steinpoly
