#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "horizon/errors.hpp"
#include "horizon/signal.hpp"
#include "horizon/system.hpp"

namespace horizon {

struct IntegrationOptions {
  int substeps = 64;           // RK4 steps per breakpoint interval
  double blowup_bound = 1e6;   // state norm beyond which the control left the domain
};

/// Sampled solution of the control system plus, optionally, the fundamental
/// matrix M_u(t) of the variational equation M' = A_u M, M(0) = I.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Mat> fundamental;  // empty unless requested

  const Vec& final_state() const { return states.back(); }
};

/// d_u F on the signal's segment basis. Column k*d + i is the image of the
/// indicator of segment k in control direction i, i.e. the integral of
/// N_u(s) B_u(s) e_i over that segment with N_u(s) = M_u(T) M_u(s)^{-1}.
struct EndpointDifferential {
  Vec endpoint;
  Mat matrix;                       // n x (m d)
  std::vector<double> breakpoints;  // of the signal the differential was taken at
  int d = 0;
  Vec singular_values;              // of matrix * W^{-1/2}: the operator on L^2
  int rank = 0;

  /// Row j as a dual signal: the L^2 projection of w_j onto the segment basis.
  std::vector<ControlSignal> rows_w;
  /// Optional grid samples of w_j(t): rows of N_u(t) B_u(t) (n x d per time).
  std::vector<double> sample_times;
  std::vector<Mat> samples;

  int n() const { return static_cast<int>(matrix.rows()); }
  int segments() const { return static_cast<int>(breakpoints.size()) - 1; }

  Vec weights() const {
    Vec w(segments() * d);
    for (int k = 0; k < segments(); ++k)
      w.segment(k * d, d).setConstant(breakpoints[static_cast<std::size_t>(k) + 1] - breakpoints[static_cast<std::size_t>(k)]);
    return w;
  }

  /// (d_u F) h for h on the same breakpoints.
  Vec apply(const ControlSignal& h) const {
    check_basis(h);
    return matrix * h.flat();
  }

  /// sum_j lambda_j w_j as a dual signal.
  ControlSignal covector_signal(const Vec& lambda) const {
    const Vec flat = weights().cwiseInverse().asDiagonal() * (matrix.transpose() * lambda);
    Mat v(segments(), d);
    for (int k = 0; k < segments(); ++k) v.row(k) = flat.segment(k * d, d).transpose();
    return ControlSignal(breakpoints, std::move(v));
  }

  void check_basis(const ControlSignal& h) const {
    if (h.d() != d || h.breakpoints() != breakpoints)
      throw InvalidArgument("signal is not on the differential's segment basis");
  }
};

namespace detail {

/// One fixed-step RK4 sweep over a piecewise-constant control. When
/// `sensitivities` is set, also propagates Z = [M | S] with
/// Z' = A_u Z + [0 | B_u] using the same stage points, so that the returned
/// per-segment transition Phi_k and control sensitivity S_k are the exact
/// derivatives of the discrete map.
struct Sweep {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Mat> step_transition;  // one per RK4 step (sensitivities only)
  std::vector<Mat> segment_transition;
  std::vector<Mat> segment_sensitivity;
};

inline void check_state(const Vec& x, double bound, double t) {
  if (!x.allFinite() || x.norm() > bound) {
    std::ostringstream os;
    os << "state norm exceeded " << bound << " at t = " << t;
    throw DomainEscape(os.str());
  }
}

inline Sweep sweep(const ControlSystem& sys, const Vec& x0, const ControlSignal& u, const IntegrationOptions& opt,
                   bool sensitivities, bool keep_states) {
  if (opt.substeps < 1) throw InvalidArgument("substeps must be >= 1");
  if (x0.size() != sys.n()) throw InvalidArgument("initial point dimension mismatch");
  if (u.d() != sys.d()) throw InvalidArgument("control dimension does not match the system rank");
  if (!x0.allFinite()) throw InvalidArgument("initial point not finite");
  const int n = sys.n(), d = sys.d();
  Sweep out;
  Vec x = x0;
  if (keep_states) {
    out.times.push_back(0.0);
    out.states.push_back(x);
  }
  Vec k1(n), k2(n), k3(n), k4(n), xs(n);
  Mat A1(n, n), A2(n, n), A3(n, n), A4(n, n);
  Mat B1(n, d), B2(n, d), B3(n, d), B4(n, d);
  Mat Z(n, n + d), K1(n, n + d), K2(n, n + d), K3(n, n + d), K4(n, n + d), Zs(n, n + d);
  Mat Phi(n, n), S(n, d);

  auto stage = [&](const Vec& at, const double* uk, Vec& k, Mat& A, Mat& B) {
    A.setZero();
    sys.evaluate(at.data(), uk, k.data(), sensitivities ? A.data() : nullptr, sensitivities ? B.data() : nullptr);
  };
  auto dz = [&](const Mat& A, const Mat& B, const Mat& Zin, Mat& K) {
    K.noalias() = A * Zin;
    K.rightCols(d) += B;
  };

  for (int seg = 0; seg < u.segments(); ++seg) {
    const Vec uk = u.value(seg);
    const double h = u.length(seg) / opt.substeps;
    if (sensitivities) {
      Phi.setIdentity();
      S.setZero();
    }
    for (int s = 0; s < opt.substeps; ++s) {
      const double t0 = u.start(seg) + s * h;
      stage(x, uk.data(), k1, A1, B1);
      xs = x + 0.5 * h * k1;
      stage(xs, uk.data(), k2, A2, B2);
      xs = x + 0.5 * h * k2;
      stage(xs, uk.data(), k3, A3, B3);
      xs = x + h * k3;
      stage(xs, uk.data(), k4, A4, B4);
      if (sensitivities) {
        Z.setZero();
        Z.leftCols(n).setIdentity();
        dz(A1, B1, Z, K1);
        Zs = Z + 0.5 * h * K1;
        dz(A2, B2, Zs, K2);
        Zs = Z + 0.5 * h * K2;
        dz(A3, B3, Zs, K3);
        Zs = Z + h * K3;
        dz(A4, B4, Zs, K4);
        Z += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        const Mat step = Z.leftCols(n);
        S = step * S + Z.rightCols(d);
        Phi = step * Phi;
        if (keep_states) out.step_transition.push_back(step);
      }
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double t1 = (s + 1 == opt.substeps) ? u.end(seg) : t0 + h;
      check_state(x, opt.blowup_bound, t1);
      if (keep_states) {
        out.times.push_back(t1);
        out.states.push_back(x);
      }
    }
    if (sensitivities) {
      out.segment_transition.push_back(Phi);
      out.segment_sensitivity.push_back(S);
    }
  }
  if (!keep_states) out.states.push_back(x);
  return out;
}

}  // namespace detail

/// Fixed-step RK4 on every breakpoint interval split into `substeps` steps.
inline Trajectory integrate(const ControlSystem& system, const Vec& x, const ControlSignal& u,
                            const IntegrationOptions& opt = {}, bool with_fundamental = false) {
  auto sw = detail::sweep(system, x, u, opt, with_fundamental, true);
  Trajectory tr;
  tr.times = std::move(sw.times);
  tr.states = std::move(sw.states);
  if (with_fundamental) {
    const int n = system.n();
    Mat M = Mat::Identity(n, n);
    tr.fundamental.push_back(M);
    for (const auto& step : sw.step_transition) {
      M = step * M;
      tr.fundamental.push_back(M);
    }
  }
  return tr;
}

namespace detail {

/// Column block k is P_k S_k with P_k the transition from the end of segment k to T.
inline Mat assemble(const Sweep& sw, int n, int d, int m) {
  Mat out(n, m * d);
  Mat P = Mat::Identity(n, n);
  for (int k = m - 1; k >= 0; --k) {
    out.middleCols(k * d, d).noalias() = P * sw.segment_sensitivity[static_cast<std::size_t>(k)];
    P = P * sw.segment_transition[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace detail

/// Endpoint and the bare n x (m d) differential matrix, without the SVD and
/// row signals of `differential`.
inline std::pair<Vec, Mat> endpoint_jacobian(const ControlSystem& system, const Vec& x, const ControlSignal& u,
                                             const IntegrationOptions& opt = {}) {
  auto sw = detail::sweep(system, x, u, opt, true, false);
  return {sw.states.back(), detail::assemble(sw, system.n(), system.d(), u.segments())};
}

/// F_x^T(u): final state after running u over its whole horizon.
inline Vec endpoint(const ControlSystem& system, const Vec& x, const ControlSignal& u,
                    const IntegrationOptions& opt = {}) {
  return detail::sweep(system, x, u, opt, false, false).states.back();
}

/// d_u F assembled from the discrete variational equation. With
/// `sample_rows`, also stores w_j(t) = rows of M_u(T) M_u(t)^{-1} B_u(t) on
/// the integration grid.
inline EndpointDifferential differential(const ControlSystem& system, const Vec& x, const ControlSignal& u,
                                         const IntegrationOptions& opt = {}, bool sample_rows = false,
                                         double rank_tol = 1e-8) {
  auto sw = detail::sweep(system, x, u, opt, true, sample_rows);
  const int n = system.n(), d = system.d();
  EndpointDifferential D;
  D.endpoint = sw.states.back();
  D.breakpoints = u.breakpoints();
  D.d = d;
  D.matrix = detail::assemble(sw, n, d, u.segments());
  if (u.segments() > 0) {
    const Mat scaled = D.matrix * D.weights().cwiseSqrt().cwiseInverse().asDiagonal();
    D.singular_values = Eigen::JacobiSVD<Mat>(scaled).singularValues();
  } else {
    D.singular_values = Vec::Zero(n);
  }
  const double smax = D.singular_values.size() ? D.singular_values[0] : 0.0;
  D.rank = 0;
  for (Eigen::Index i = 0; i < D.singular_values.size(); ++i)
    if (smax > 0.0 && D.singular_values[i] > rank_tol * smax) ++D.rank;
  for (int j = 0; j < n; ++j) D.rows_w.push_back(D.covector_signal(Vec::Unit(n, j)));

  if (sample_rows) {
    // N at grid points by backward products of the step transitions.
    const std::size_t steps = sw.step_transition.size();
    std::vector<Mat> N(steps + 1);
    N[steps] = Mat::Identity(n, n);
    for (std::size_t g = steps; g-- > 0;) N[g] = N[g + 1] * sw.step_transition[g];
    Vec rhs(n);
    Mat B(n, d);
    std::vector<double> zeros(static_cast<std::size_t>(d), 0.0);
    for (std::size_t g = 0; g <= steps; ++g) {
      system.evaluate(sw.states[g].data(), zeros.data(), rhs.data(), nullptr, B.data());
      D.sample_times.push_back(sw.times[g]);
      D.samples.push_back(N[g] * B);
    }
  }
  return D;
}

/// N(t_g) = M_u(T) M_u(t_g)^{-1} on the integration grid, obtained by
/// integrating N' = -N A_u backwards from N(T) = I with RK4.
inline std::vector<Mat> adjoint_transition(const ControlSystem& system, const Vec& x, const ControlSignal& u,
                                           const IntegrationOptions& opt = {}) {
  const Trajectory tr = integrate(system, x, u, opt);
  const int n = system.n(), d = system.d();
  std::vector<Mat> N(tr.states.size(), Mat::Identity(n, n));
  Vec f(n), k1(n), k2(n), k3(n), xs(n);
  Mat A0(n, n), Am(n, n), A1(n, n);
  auto jac = [&](const Vec& at, const Vec& uk, Mat& A) {
    A.setZero();
    system.evaluate(at.data(), uk.data(), f.data(), A.data(), nullptr);
  };
  std::size_t g = tr.states.size() - 1;
  for (int seg = u.segments() - 1; seg >= 0; --seg) {
    const Vec uk = u.value(seg);
    const double h = u.length(seg) / opt.substeps;
    for (int s = opt.substeps - 1; s >= 0; --s, --g) {
      const Vec& xa = tr.states[g - 1];
      // midpoint state by a half RK4 step from the left grid point
      const double hh = 0.5 * h;
      jac(xa, uk, A0);
      k1 = f;
      xs = xa + 0.5 * hh * k1;
      system.evaluate(xs.data(), uk.data(), k2.data());
      xs = xa + 0.5 * hh * k2;
      system.evaluate(xs.data(), uk.data(), k3.data());
      xs = xa + hh * k3;
      Vec k4(n);
      system.evaluate(xs.data(), uk.data(), k4.data());
      const Vec xm = xa + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      jac(xm, uk, Am);
      jac(tr.states[g], uk, A1);
      const Mat& Nb = N[g];
      const Mat K1 = Nb * A1;
      const Mat K2 = (Nb + 0.5 * h * K1) * Am;
      const Mat K3 = (Nb + 0.5 * h * K2) * Am;
      const Mat K4 = (Nb + h * K3) * A0;
      N[g - 1] = Nb + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
    }
  }
  return N;
}

struct RegularityReport {
  bool regular = false;
  int rank = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// u is a regular point iff d_u F is onto: sigma_min > tol * sigma_max with rank n.
inline RegularityReport regular_value_test(const ControlSystem& system, const Vec& x, const ControlSignal& u,
                                           double tol = 1e-8, const IntegrationOptions& opt = {}) {
  const auto D = differential(system, x, u, opt, false, tol);
  RegularityReport r;
  r.rank = D.rank;
  const auto& sv = D.singular_values;
  if (sv.size() > 0) {
    r.sigma_max = sv[0];
    r.sigma_min = sv.size() >= system.n() ? sv[system.n() - 1] : 0.0;
  }
  r.regular = sv.size() >= system.n() && r.sigma_max > 0.0 && r.sigma_min > tol * r.sigma_max;
  return r;
}

/// L^2-orthogonal projection of h onto ker d_u F = span{w_j}^perp.
inline ControlSignal fiber_project(const EndpointDifferential& D, const ControlSignal& h) {
  D.check_basis(h);
  if (D.rank < D.n()) throw SingularFiber("rank " + std::to_string(D.rank) + " < n = " + std::to_string(D.n()));
  const Vec winv = D.weights().cwiseInverse();
  const Mat G = D.matrix * winv.asDiagonal() * D.matrix.transpose();
  const Vec flat = h.flat();
  const Vec coef = G.ldlt().solve(D.matrix * flat);
  return h.with_flat(flat - winv.asDiagonal() * (D.matrix.transpose() * coef));
}

}  // namespace horizon
