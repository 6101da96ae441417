#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "horizon/errors.hpp"
#include "horizon/polynomial.hpp"

namespace horizon {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace detail {

/// x, cos x, sin x laid out contiguously for CompiledPolynomial::eval.
class PointBase {
public:
  PointBase(std::span<const double> x, bool trig) : n_(x.size()) {
    data_.resize(3 * n_);
    for (std::size_t i = 0; i < n_; ++i) data_[i] = x[i];
    if (trig) {
      for (std::size_t i = 0; i < n_; ++i) {
        data_[n_ + i] = std::cos(x[i]);
        data_[2 * n_ + i] = std::sin(x[i]);
      }
    }
  }
  const double* data() const { return data_.data(); }
  std::size_t dim() const { return n_; }

private:
  std::size_t n_;
  std::vector<double> data_;
};

}  // namespace detail

/// A smooth vector field on a coordinate chart of R^n.
///
/// Symbolic fields carry exact polynomial components (in x and, for angular
/// coordinates, cos x / sin x); their Jacobians and second derivatives are
/// derived symbolically once at construction. Callable fields wrap user code
/// for value and Jacobian and cannot be bracketed.
class VectorField {
public:
  using ValueFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;

  VectorField() = default;

  static VectorField zero(std::size_t n) { return VectorField(std::vector<Polynomial>(n, Polynomial(n))); }

  explicit VectorField(std::vector<Polynomial> components) {
    auto impl = std::make_shared<Impl>();
    impl->n = components.size();
    for (const auto& c : components)
      if (c.dim() != impl->n) throw InvalidArgument("vector field component dimension mismatch");
    const std::size_t n = impl->n;
    impl->symbolic = true;
    impl->components = std::move(components);
    impl->jacobian.resize(n * n, Polynomial(n));
    impl->second.resize(n * n * n, Polynomial(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ci = impl->components[i];
      impl->trig = impl->trig || ci.has_trig();
      impl->value_c.emplace_back(ci);
      for (std::size_t j = 0; j < n; ++j) {
        auto dij = ci.derivative(j);
        for (std::size_t k = 0; k < n; ++k) impl->second[(i * n + j) * n + k] = dij.derivative(k);
        impl->jacobian[i * n + j] = std::move(dij);
      }
    }
    for (const auto& p : impl->jacobian) impl->jacobian_c.emplace_back(p);
    impl_ = std::move(impl);
  }

  static VectorField from_callable(std::size_t n, ValueFn value, JacobianFn jacobian) {
    VectorField f;
    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->symbolic = false;
    impl->value_fn = std::move(value);
    impl->jacobian_fn = std::move(jacobian);
    f.impl_ = std::move(impl);
    return f;
  }

  std::size_t dim() const { return impl_ ? impl_->n : 0; }
  bool is_symbolic() const { return impl_ && impl_->symbolic; }
  bool uses_trig() const { return impl_ && impl_->trig; }

  /// Syntactic zero test (all component polynomials empty).
  bool is_zero() const {
    if (!is_symbolic()) return false;
    for (const auto& c : impl_->components)
      if (!c.is_zero()) return false;
    return true;
  }

  const std::vector<Polynomial>& components() const {
    require_symbolic("components");
    return impl_->components;
  }

  Vec value(const Vec& x) const {
    check_point(x);
    if (!impl_->symbolic) return impl_->value_fn(x);
    detail::PointBase base({x.data(), static_cast<std::size_t>(x.size())}, impl_->trig);
    Vec out(static_cast<Eigen::Index>(impl_->n));
    value_into(base, out.data());
    return out;
  }

  Mat jacobian(const Vec& x) const {
    check_point(x);
    if (!impl_->symbolic) return impl_->jacobian_fn(x);
    detail::PointBase base({x.data(), static_cast<std::size_t>(x.size())}, impl_->trig);
    const auto n = static_cast<Eigen::Index>(impl_->n);
    Mat out(n, n);
    jacobian_into(base, out.data());
    return out;
  }

  /// Second derivative as one symmetric n x n Hessian per component.
  std::vector<Mat> second_derivative(const Vec& x) const {
    require_symbolic("second_derivative");
    check_point(x);
    const std::size_t n = impl_->n;
    std::vector<Mat> out(n, Mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    std::span<const double> xs(x.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          out[i](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = impl_->second[(i * n + j) * n + k](xs);
    return out;
  }

  /// Writes the value into `out` (length n). Symbolic fields only.
  void value_into(const detail::PointBase& base, double* out) const {
    const std::size_t n = impl_->n;
    for (std::size_t i = 0; i < n; ++i) out[i] = impl_->value_c[i].eval(base.data(), n);
  }

  /// Accumulates scale * Jacobian into the column-major n x n buffer `out`.
  void jacobian_into(const detail::PointBase& base, double* out, double scale = 1.0, bool accumulate = false) const {
    const std::size_t n = impl_->n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto& p = impl_->jacobian_c[i * n + j];
        const double v = p.empty() ? 0.0 : scale * p.eval(base.data(), n);
        if (accumulate)
          out[j * n + i] += v;
        else
          out[j * n + i] = v;
      }
  }

  std::string to_string() const {
    if (!is_symbolic()) return "<callable field>";
    std::string s = "(";
    for (std::size_t i = 0; i < impl_->n; ++i) {
      if (i) s += ", ";
      s += impl_->components[i].to_string();
    }
    return s + ")";
  }

  friend bool operator==(const VectorField& a, const VectorField& b) {
    if (!a.is_symbolic() || !b.is_symbolic()) return a.impl_ == b.impl_;
    return a.impl_->components == b.impl_->components;
  }

private:
  struct Impl {
    std::size_t n = 0;
    bool symbolic = true;
    bool trig = false;
    std::vector<Polynomial> components;
    std::vector<Polynomial> jacobian;  // row-major (i, j) = d comp_i / d x_j
    std::vector<Polynomial> second;    // (i, j, k)
    std::vector<detail::CompiledPolynomial> value_c;
    std::vector<detail::CompiledPolynomial> jacobian_c;
    ValueFn value_fn;
    JacobianFn jacobian_fn;
  };

  void check_point(const Vec& x) const {
    if (!impl_) throw InvalidArgument("empty vector field");
    if (static_cast<std::size_t>(x.size()) != impl_->n) throw InvalidArgument("point dimension mismatch");
  }
  void require_symbolic(const char* what) const {
    if (!is_symbolic())
      throw Unsupported(std::string(what) + " requires a symbolic (polynomial or catalog) field representation");
  }

  std::shared_ptr<const Impl> impl_;
};

/// [f, g] = (dg) f - (df) g, computed symbolically.
inline VectorField lie_bracket(const VectorField& f, const VectorField& g) {
  if (!f.is_symbolic() || !g.is_symbolic())
    throw Unsupported("lie_bracket requires symbolic field representations");
  if (f.dim() != g.dim()) throw InvalidArgument("lie_bracket: fields over different charts");
  const std::size_t n = f.dim();
  const auto& fc = f.components();
  const auto& gc = g.components();
  std::vector<Polynomial> out(n, Polynomial(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!fc[j].is_zero()) out[i] += gc[i].derivative(j) * fc[j];
      if (!gc[j].is_zero()) out[i] -= fc[i].derivative(j) * gc[j];
    }
  return VectorField(std::move(out));
}

}  // namespace horizon
