#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "horizon/errors.hpp"
#include "horizon/vector_field.hpp"

namespace horizon {

/// Piecewise-constant R^d-valued control on [0, T] with explicit breakpoints
/// 0 = t_0 < t_1 < ... < t_m = T. Row k of values() is the value on
/// [t_k, t_{k+1}). A signal with no segments is the zero control on [0, 0].
class ControlSignal {
public:
  explicit ControlSignal(int d = 1) : breakpoints_{0.0}, values_(0, d) {
    if (d < 1) throw InvalidArgument("control signal needs d >= 1");
  }

  ControlSignal(std::vector<double> breakpoints, Mat values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    validate();
  }

  /// Constant value on [0, horizon].
  static ControlSignal constant(const Vec& value, double horizon = 1.0) {
    if (horizon <= 0.0) return ControlSignal(static_cast<int>(value.size()));
    return ControlSignal({0.0, horizon}, value.transpose());
  }

  /// m equal segments on [0, horizon]; row k of `values` is segment k.
  static ControlSignal uniform(const Mat& values, double horizon = 1.0) {
    const auto m = values.rows();
    std::vector<double> bp(static_cast<std::size_t>(m) + 1);
    for (Eigen::Index k = 0; k <= m; ++k) bp[static_cast<std::size_t>(k)] = horizon * static_cast<double>(k) / static_cast<double>(m);
    bp.back() = horizon;
    return ControlSignal(std::move(bp), values);
  }

  static ControlSignal zero(int d, double horizon = 1.0) { return constant(Vec::Zero(d), horizon); }

  int d() const { return static_cast<int>(values_.cols()); }
  int segments() const { return static_cast<int>(values_.rows()); }
  double horizon() const { return breakpoints_.back(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const Mat& values() const { return values_; }
  double start(int k) const { return breakpoints_[static_cast<std::size_t>(k)]; }
  double end(int k) const { return breakpoints_[static_cast<std::size_t>(k) + 1]; }
  double length(int k) const { return end(k) - start(k); }
  Vec value(int k) const { return values_.row(k).transpose(); }

  /// Segment lengths as a vector (the L^2 weights of the segment basis).
  Vec lengths() const {
    Vec w(segments());
    for (int k = 0; k < segments(); ++k) w[k] = length(k);
    return w;
  }

  /// Value at time t (right-continuous; zero outside [0, T)).
  Vec at(double t) const {
    if (t < 0.0 || t >= horizon() || segments() == 0) return Vec::Zero(d());
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const int k = std::clamp(static_cast<int>(it - breakpoints_.begin()) - 1, 0, segments() - 1);
    return value(k);
  }

  /// Same breakpoints, new values.
  ControlSignal with_values(Mat values) const { return ControlSignal(breakpoints_, std::move(values)); }

  /// Values flattened segment-major: index k * d + i.
  Vec flat() const {
    Vec out(segments() * d());
    for (int k = 0; k < segments(); ++k)
      for (int i = 0; i < d(); ++i) out[k * d() + i] = values_(k, i);
    return out;
  }

  ControlSignal with_flat(const Vec& flat) const {
    if (flat.size() != segments() * d()) throw InvalidArgument("flat vector size mismatch");
    Mat v(segments(), d());
    for (int k = 0; k < segments(); ++k)
      for (int i = 0; i < d(); ++i) v(k, i) = flat[k * d() + i];
    return with_values(std::move(v));
  }

  ControlSignal& operator*=(double s) {
    values_ *= s;
    return *this;
  }
  friend ControlSignal operator*(ControlSignal a, double s) { return a *= s; }
  friend ControlSignal operator*(double s, ControlSignal a) { return a *= s; }

  friend bool operator==(const ControlSignal& a, const ControlSignal& b) {
    return a.breakpoints_ == b.breakpoints_ && a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

private:
  void validate() const {
    if (breakpoints_.empty()) throw InvalidArgument("signal needs at least one breakpoint");
    if (breakpoints_.front() != 0.0) throw InvalidArgument("signal must start at t = 0");
    if (values_.cols() < 1) throw InvalidArgument("signal needs d >= 1");
    if (static_cast<std::size_t>(values_.rows()) + 1 != breakpoints_.size())
      throw InvalidArgument("signal needs one value row per segment");
    for (std::size_t k = 1; k < breakpoints_.size(); ++k)
      if (!(breakpoints_[k] > breakpoints_[k - 1]) || !std::isfinite(breakpoints_[k]))
        throw InvalidArgument("breakpoints must be finite and strictly increasing (no zero-length segments)");
    if (!values_.allFinite()) throw InvalidArgument("signal values must be finite");
  }

  std::vector<double> breakpoints_;
  Mat values_;
};

/// How the p-energy combines the d components at one instant.
enum class EnergyNorm {
  componentwise,  // J_p(u) = sum_i ||u_i||_p^p
  vector,         // J_p(u) = int |u(t)|^p dt, Euclidean |.|
};

/// Exponent bookkeeping: p in (1, inf), q = p / (p - 1), 0 < beta < q.
struct EnergyParams {
  double p = 2.0;
  double beta = 1.0;

  EnergyParams() = default;
  EnergyParams(double p_, double beta_ = 1.0) : p(p_), beta(beta_) { validate(); }

  double q() const { return p / (p - 1.0); }

  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must lie in (1, inf)");
    if (!(beta > 0.0) || !(beta < q()))
      throw InvalidArgument("beta must lie in (0, p/(p-1)) = (0, " + std::to_string(q()) + ")");
  }
};

namespace detail {

inline void check_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must lie in (1, inf)");
}

/// Union of two breakpoint lists, both starting at 0.
inline std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  const double scale = std::max({1.0, a.back(), b.back()});
  std::vector<double> uniq;
  for (double t : out)
    if (uniq.empty() || t - uniq.back() > 1e-14 * scale) uniq.push_back(t);
  return uniq;
}

/// Resample onto a finer breakpoint set (values beyond the horizon are zero).
inline Mat values_on(const ControlSignal& s, const std::vector<double>& bp) {
  Mat v(static_cast<Eigen::Index>(bp.size()) - 1, s.d());
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) v.row(static_cast<Eigen::Index>(k)) = s.at(0.5 * (bp[k] + bp[k + 1])).transpose();
  return v;
}

inline double pos_pow(double a, double e) { return a == 0.0 ? 0.0 : std::pow(a, e); }

/// Drops segments that collapsed to zero length under rounding.
inline ControlSignal compact(std::vector<double> bp, const Mat& vals) {
  std::vector<double> keep_bp{bp.front()};
  std::vector<Eigen::Index> rows;
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    if (!(bp[k + 1] > keep_bp.back())) continue;
    keep_bp.push_back(bp[k + 1]);
    rows.push_back(static_cast<Eigen::Index>(k));
  }
  if (rows.size() + 1 == bp.size()) return ControlSignal(std::move(bp), vals);
  Mat v(static_cast<Eigen::Index>(rows.size()), vals.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) v.row(static_cast<Eigen::Index>(r)) = vals.row(rows[r]);
  if (rows.empty()) return ControlSignal(static_cast<int>(vals.cols()));
  keep_bp.back() = bp.back();
  return ControlSignal(std::move(keep_bp), std::move(v));
}

}  // namespace detail

/// J_p(u), exact for piecewise-constant u.
inline double energy(const ControlSignal& u, double p, EnergyNorm norm = EnergyNorm::componentwise) {
  detail::check_p(p);
  double total = 0.0;
  for (int k = 0; k < u.segments(); ++k) {
    const auto row = u.values().row(k);
    const double seg = norm == EnergyNorm::componentwise ? row.array().abs().pow(p).sum()
                                                         : detail::pos_pow(row.norm(), p);
    total += u.length(k) * seg;
  }
  return total;
}

inline double lp_norm(const ControlSignal& u, double p, EnergyNorm norm = EnergyNorm::componentwise) {
  return std::pow(energy(u, p, norm), 1.0 / p);
}

/// d_u J_p as a dual signal: p u |u|^{p-2} (componentwise or with |u| the
/// Euclidean norm). Zero values map to zero.
inline ControlSignal energy_gradient(const ControlSignal& u, double p, EnergyNorm norm = EnergyNorm::componentwise) {
  detail::check_p(p);
  Mat g = u.values();
  for (int k = 0; k < u.segments(); ++k) {
    if (norm == EnergyNorm::componentwise) {
      for (int i = 0; i < u.d(); ++i) {
        const double v = g(k, i);
        g(k, i) = v == 0.0 ? 0.0 : p * v * std::pow(std::abs(v), p - 2.0);
      }
    } else {
      const double r = g.row(k).norm();
      g.row(k) *= r == 0.0 ? 0.0 : p * std::pow(r, p - 2.0);
    }
  }
  return u.with_values(std::move(g));
}

/// Inverse Nemitski map L^q -> L^p: z -> z |z|^{(2-p)/(p-1)}. Undoes
/// energy_gradient(., p) / p.
inline ControlSignal dual_map(const ControlSignal& z, double p, EnergyNorm norm = EnergyNorm::componentwise) {
  detail::check_p(p);
  const double e = (2.0 - p) / (p - 1.0);
  Mat v = z.values();
  for (int k = 0; k < z.segments(); ++k) {
    if (norm == EnergyNorm::componentwise) {
      for (int i = 0; i < z.d(); ++i) {
        const double a = v(k, i);
        v(k, i) = a == 0.0 ? 0.0 : a * std::pow(std::abs(a), e);
      }
    } else {
      const double r = v.row(k).norm();
      v.row(k) *= r == 0.0 ? 0.0 : std::pow(r, e);
    }
  }
  return z.with_values(std::move(v));
}

/// L^q norm of a dual signal (same component convention as the energy).
inline double lq_norm(const ControlSignal& z, double q, EnergyNorm norm = EnergyNorm::componentwise) {
  return lp_norm(z, q, norm);
}

/// <a, b> = int a(t) . b(t) dt over the common breakpoint refinement.
inline double pairing(const ControlSignal& a, const ControlSignal& b) {
  if (a.d() != b.d()) throw InvalidArgument("pairing: dimension mismatch");
  if (a.breakpoints() == b.breakpoints()) return (a.lengths().asDiagonal() * a.values()).cwiseProduct(b.values()).sum();
  const auto bp = detail::merge_breakpoints(a.breakpoints(), b.breakpoints());
  const Mat va = detail::values_on(a, bp), vb = detail::values_on(b, bp);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < bp.size(); ++k)
    total += (bp[k + 1] - bp[k]) * va.row(static_cast<Eigen::Index>(k)).dot(vb.row(static_cast<Eigen::Index>(k)));
  return total;
}

/// a - b on the common refinement (the shorter signal is extended by zero).
inline ControlSignal difference(const ControlSignal& a, const ControlSignal& b) {
  if (a.d() != b.d()) throw InvalidArgument("difference: dimension mismatch");
  if (a.segments() == 0 && b.segments() == 0) return ControlSignal(a.d());
  const auto bp = detail::merge_breakpoints(a.breakpoints(), b.breakpoints());
  return ControlSignal(bp, detail::values_on(a, bp) - detail::values_on(b, bp));
}

inline double lp_distance(const ControlSignal& a, const ControlSignal& b, double p,
                          EnergyNorm norm = EnergyNorm::componentwise) {
  return lp_norm(difference(a, b), p, norm);
}

/// v restricted to [0, T]; requires v defined at least up to T.
inline ControlSignal restrict_to(const ControlSignal& v, double T) {
  if (T < 0.0) throw InvalidArgument("restrict_to: negative horizon");
  if (T == 0.0) return ControlSignal(v.d());
  const double tol = 1e-12 * std::max(1.0, T);
  if (v.horizon() < T - tol) throw InvalidArgument("signal is shorter than the requested horizon");
  std::vector<double> bp{0.0};
  std::vector<Eigen::Index> rows;
  for (int k = 0; k < v.segments() && v.start(k) < T - tol; ++k) {
    bp.push_back(std::min(v.end(k), T));
    rows.push_back(k);
  }
  bp.back() = T;
  Mat vals(static_cast<Eigen::Index>(rows.size()), v.d());
  for (std::size_t r = 0; r < rows.size(); ++r) vals.row(static_cast<Eigen::Index>(r)) = v.values().row(rows[r]);
  return ControlSignal(std::move(bp), std::move(vals));
}

/// Ordinary concatenation u * v on [0, T_u + T_v].
inline ControlSignal concatenate(const ControlSignal& u, const ControlSignal& v) {
  if (u.d() != v.d()) throw InvalidArgument("concatenate: dimension mismatch");
  std::vector<double> bp = u.breakpoints();
  for (int k = 0; k < v.segments(); ++k) bp.push_back(u.horizon() + v.end(k));
  Mat vals(u.segments() + v.segments(), u.d());
  vals << u.values(), v.values();
  return detail::compact(std::move(bp), vals);
}

/// rho_j(r): zero if r_j = 0, else height r_j |r_j|^{-beta} on
/// [|r_{j-1}|^beta, |r_{j-1}|^beta + |r_j|^beta] (r_0 = 0). j is 1-based.
/// Returned as a scalar signal whose horizon is the end of that interval.
inline ControlSignal rho(std::span<const double> r, int j, const EnergyParams& params) {
  params.validate();
  if (j < 1 || static_cast<std::size_t>(j) > r.size()) throw InvalidArgument("rho: index out of range");
  const double rj = r[static_cast<std::size_t>(j) - 1];
  if (rj == 0.0) return ControlSignal(1);
  const double offset = j >= 2 ? detail::pos_pow(std::abs(r[static_cast<std::size_t>(j) - 2]), params.beta) : 0.0;
  const double len = std::pow(std::abs(rj), params.beta);
  const double height = rj * std::pow(std::abs(rj), -params.beta);
  Mat vals(offset > 0.0 ? 2 : 1, 1);
  std::vector<double> bp{0.0};
  if (offset > 0.0) {
    bp.push_back(offset);
    vals(0, 0) = 0.0;
  }
  bp.push_back(offset + len);
  vals(vals.rows() - 1, 0) = height;
  return ControlSignal(std::move(bp), std::move(vals));
}

/// Rescaled concatenation: (T+1) u(t (T+1)) on [0, 1/(T+1)), then
/// (T+1) v((T+1) t - 1) up to 1. Running the result for time 1 reaches the
/// same point as running u for time 1 and then v for time T.
inline ControlSignal concatenate_rescaled(const ControlSignal& u, const ControlSignal& v, double T) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidArgument("concatenate_rescaled: T must be >= 0");
  if (u.d() != v.d()) throw InvalidArgument("concatenate_rescaled: dimension mismatch");
  if (std::abs(u.horizon() - 1.0) > 1e-12) throw InvalidArgument("concatenate_rescaled: u must live on [0, 1]");
  if (T == 0.0) return u;
  const ControlSignal vt = restrict_to(v, T);
  const double s = T + 1.0;
  std::vector<double> bp;
  bp.reserve(static_cast<std::size_t>(u.segments() + vt.segments()) + 1);
  for (double t : u.breakpoints()) bp.push_back(t / s);
  for (int k = 0; k < vt.segments(); ++k) bp.push_back((1.0 + vt.end(k)) / s);
  bp.back() = 1.0;
  Mat vals(u.segments() + vt.segments(), u.d());
  vals << s * u.values(), s * vt.values();
  return detail::compact(std::move(bp), vals);
}

}  // namespace horizon
