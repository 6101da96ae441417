#pragma once

/// Exact multivariate polynomials in the coordinates x_i and, for angular
/// coordinates, in cos(x_i) and sin(x_i). The set is closed under sums,
/// products and partial derivatives, which is all that Lie brackets and
/// field Jacobians need.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "horizon/errors.hpp"

namespace horizon {

/// Exponents of one monomial: x_i^pow[i] * cos(x_i)^cos[i] * sin(x_i)^sin[i].
struct Monomial {
  std::vector<int> pow;
  std::vector<int> cos;
  std::vector<int> sin;

  explicit Monomial(std::size_t n = 0) : pow(n, 0), cos(n, 0), sin(n, 0) {}

  std::size_t dim() const { return pow.size(); }

  bool has_trig() const {
    for (std::size_t i = 0; i < dim(); ++i)
      if (cos[i] != 0 || sin[i] != 0) return true;
    return false;
  }

  friend bool operator<(const Monomial& a, const Monomial& b) {
    if (a.pow != b.pow) return a.pow < b.pow;
    if (a.cos != b.cos) return a.cos < b.cos;
    return a.sin < b.sin;
  }
  friend bool operator==(const Monomial& a, const Monomial& b) = default;

  friend Monomial operator*(const Monomial& a, const Monomial& b) {
    Monomial m(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
      m.pow[i] = a.pow[i] + b.pow[i];
      m.cos[i] = a.cos[i] + b.cos[i];
      m.sin[i] = a.sin[i] + b.sin[i];
    }
    return m;
  }
};

class Polynomial {
public:
  explicit Polynomial(std::size_t n = 0) : n_(n) {}

  static Polynomial constant(std::size_t n, double c) {
    Polynomial p(n);
    p.add_term(Monomial(n), c);
    return p;
  }

  /// The coordinate x_i.
  static Polynomial variable(std::size_t n, std::size_t i) {
    Monomial m(n);
    m.pow.at(i) = 1;
    Polynomial p(n);
    p.add_term(m, 1.0);
    return p;
  }

  static Polynomial cosine(std::size_t n, std::size_t i) {
    Monomial m(n);
    m.cos.at(i) = 1;
    Polynomial p(n);
    p.add_term(m, 1.0);
    return p;
  }

  static Polynomial sine(std::size_t n, std::size_t i) {
    Monomial m(n);
    m.sin.at(i) = 1;
    Polynomial p(n);
    p.add_term(m, 1.0);
    return p;
  }

  /// coef * prod x_i^exponents[i]
  static Polynomial monomial(double coef, std::span<const int> exponents) {
    Monomial m(exponents.size());
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      if (exponents[i] < 0) throw InvalidArgument("negative polynomial exponent");
      m.pow[i] = exponents[i];
    }
    Polynomial p(exponents.size());
    p.add_term(m, coef);
    return p;
  }

  std::size_t dim() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Monomial, double>& terms() const { return terms_; }

  bool has_trig() const {
    for (const auto& [m, c] : terms_)
      if (m.has_trig()) return true;
    return false;
  }

  void add_term(const Monomial& m, double coef) {
    if (m.dim() != n_) throw InvalidArgument("monomial dimension mismatch");
    if (coef == 0.0) return;
    auto [it, inserted] = terms_.emplace(m, coef);
    if (!inserted) {
      it->second += coef;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_dim(b);
    Polynomial r(a.n_);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
    return r;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.n_ == b.n_ && a.terms_ == b.terms_;
  }

  Polynomial derivative(std::size_t i) const {
    if (i >= n_) throw InvalidArgument("derivative index out of range");
    Polynomial r(n_);
    for (const auto& [m, c] : terms_) {
      if (m.pow[i] > 0) {
        Monomial d = m;
        d.pow[i] -= 1;
        r.add_term(d, c * m.pow[i]);
      }
      // d/dx cos^a = -a cos^(a-1) sin
      if (m.cos[i] > 0) {
        Monomial d = m;
        d.cos[i] -= 1;
        d.sin[i] += 1;
        r.add_term(d, -c * m.cos[i]);
      }
      // d/dx sin^b = b sin^(b-1) cos
      if (m.sin[i] > 0) {
        Monomial d = m;
        d.sin[i] -= 1;
        d.cos[i] += 1;
        r.add_term(d, c * m.sin[i]);
      }
    }
    return r;
  }

  double operator()(std::span<const double> x) const {
    if (x.size() != n_) throw InvalidArgument("point dimension mismatch");
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
      double v = c;
      for (std::size_t i = 0; i < n_; ++i) {
        if (m.pow[i]) v *= std::pow(x[i], m.pow[i]);
        if (m.cos[i]) v *= std::pow(std::cos(x[i]), m.cos[i]);
        if (m.sin[i]) v *= std::pow(std::sin(x[i]), m.sin[i]);
      }
      total += v;
    }
    return total;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << c;
      for (std::size_t i = 0; i < n_; ++i) {
        if (m.pow[i]) os << "*x" << i + 1 << (m.pow[i] > 1 ? "^" + std::to_string(m.pow[i]) : "");
        if (m.cos[i]) os << "*cos(x" << i + 1 << ")" << (m.cos[i] > 1 ? "^" + std::to_string(m.cos[i]) : "");
        if (m.sin[i]) os << "*sin(x" << i + 1 << ")" << (m.sin[i] > 1 ? "^" + std::to_string(m.sin[i]) : "");
      }
    }
    return os.str();
  }

private:
  void check_dim(const Polynomial& o) const {
    if (o.n_ != n_) throw InvalidArgument("polynomial dimension mismatch");
  }

  std::size_t n_;
  std::map<Monomial, double> terms_;
};

namespace detail {

/// Flattened polynomial for fast repeated evaluation. Factors are
/// (coordinate, kind, exponent) with kind 0 = x, 1 = cos x, 2 = sin x.
class CompiledPolynomial {
public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) {
      Term t{c, {}};
      for (std::size_t i = 0; i < m.dim(); ++i) {
        if (m.pow[i]) t.factors.push_back({static_cast<int>(i), 0, m.pow[i]});
        if (m.cos[i]) t.factors.push_back({static_cast<int>(i), 1, m.cos[i]});
        if (m.sin[i]) t.factors.push_back({static_cast<int>(i), 2, m.sin[i]});
      }
      terms_.push_back(std::move(t));
    }
  }

  bool empty() const { return terms_.empty(); }

  /// `base` holds x, cos x, sin x as three consecutive blocks of length n.
  double eval(const double* base, std::size_t n) const {
    double total = 0.0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (const auto& f : t.factors) {
        const double b = base[static_cast<std::size_t>(f.kind) * n + static_cast<std::size_t>(f.var)];
        double pw = b;
        for (int e = 1; e < f.exp; ++e) pw *= b;
        v *= pw;
      }
      total += v;
    }
    return total;
  }

private:
  struct Factor {
    int var;
    int kind;
    int exp;
  };
  struct Term {
    double coef;
    std::vector<Factor> factors;
  };
  std::vector<Term> terms_;
};

}  // namespace detail
}  // namespace horizon
