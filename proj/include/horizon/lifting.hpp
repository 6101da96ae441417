#pragma once

#include <algorithm>
#include <sstream>
#include <vector>

#include "horizon/endpoint.hpp"
#include "horizon/errors.hpp"
#include "horizon/signal.hpp"
#include "horizon/steering.hpp"
#include "horizon/system.hpp"

namespace horizon {

/// Sampled target path g(s_k), 0 = s_0 < ... < s_K = 1.
struct TargetPath {
  std::vector<double> s;
  std::vector<Vec> y;

  /// K + 1 equally spaced samples of g on [0, 1].
  template <class G>
  static TargetPath sample(G&& g, int K) {
    if (K < 1) throw InvalidArgument("a path needs at least two samples");
    TargetPath path;
    for (int k = 0; k <= K; ++k) {
      const double s = static_cast<double>(k) / K;
      path.s.push_back(s);
      path.y.push_back(g(s));
    }
    path.s.back() = 1.0;
    return path;
  }

  std::size_t size() const { return s.size(); }

  void validate(int n) const {
    if (s.size() < 2 || s.size() != y.size()) throw InvalidArgument("path needs matching s and y samples (at least two)");
    if (s.front() != 0.0 || s.back() != 1.0) throw InvalidArgument("path parameter must run from 0 to 1");
    for (std::size_t k = 1; k < s.size(); ++k)
      if (!(s[k] > s[k - 1])) throw InvalidArgument("path parameter must be strictly increasing");
    for (const auto& v : y)
      if (v.size() != n || !v.allFinite()) throw InvalidArgument("path target has wrong dimension or is not finite");
  }
};

struct LiftOptions {
  SteeringOptions steering;
  double lift_tol = 1e-6;
  int max_reanchors = 64;
};

struct LiftResult {
  std::vector<double> s;
  std::vector<ControlSignal> controls;
  std::vector<double> endpoint_residuals;
  std::vector<double> steer_times;  // T(anchor, g(s_k))
  std::vector<int> anchors;          // index of the anchor sample used for each s_k
  int reanchors = 0;
  double lp_modulus = 0.0;
};

struct ModulusTable {
  std::vector<double> ds;
  std::vector<double> modulus;
  std::vector<double> ratio;  // modulus / ds
  double max_modulus = 0.0;
  double max_ratio = 0.0;
};

/// ||u(s_{k+1}) - u(s_k)||_p against |s_{k+1} - s_k|.
inline ModulusTable continuity_report(const LiftResult& result, double p) {
  ModulusTable t;
  for (std::size_t k = 0; k + 1 < result.controls.size(); ++k) {
    const double ds = result.s[k + 1] - result.s[k];
    const double m = lp_distance(result.controls[k + 1], result.controls[k], p);
    t.ds.push_back(ds);
    t.modulus.push_back(m);
    t.ratio.push_back(m / ds);
    t.max_modulus = std::max(t.max_modulus, m);
    t.max_ratio = std::max(t.max_ratio, m / ds);
  }
  return t;
}

/// u(s) = C(u_anchor, sigma(g_anchor, g(s)), T(g_anchor, g(s))). When the
/// chart around the anchor cannot reach g(s_k), the lift re-anchors at the
/// last lifted sample and continues from there.
inline LiftResult lift_path(const ControlSystem& system, const Vec& x, const ControlSignal& u0, const TargetPath& path,
                            const EnergyParams& params, const LiftOptions& opt = {}) {
  params.validate();
  path.validate(system.n());
  if (u0.d() != system.d()) throw InvalidArgument("anchor control has wrong dimension");
  if (std::abs(u0.horizon() - 1.0) > 1e-12) throw InvalidArgument("anchor control must live on [0, 1]");
  const auto io = opt.steering.integration();
  const double r0 = system.displacement(path.y.front(), endpoint(system, x, u0, io)).norm();
  if (r0 > opt.lift_tol) {
    std::ostringstream msg;
    msg << "anchor control does not reach g(0): residual " << r0;
    throw InvalidArgument(msg.str());
  }
  check_admissible(system, path.y.front(), params.p);
  if (!system.driftless())
    throw Unsupported("path lifting by rescaled concatenation needs a driftless system (time rescaling also rescales X0)");

  LiftResult res;
  res.s = path.s;
  res.controls.push_back(u0);
  res.endpoint_residuals.push_back(r0);
  res.steer_times.push_back(0.0);
  res.anchors.push_back(0);
  std::size_t anchor = 0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    for (;;) {
      const ControlSignal& ua = res.controls[anchor];
      const Vec& ya = path.y[anchor];
      try {
        const auto plan = cross_section(system, ya, path.y[k], params, opt.steering);
        ControlSignal u = concatenate_rescaled(ua, plan.sigma, plan.T);
        const double r = system.displacement(path.y[k], endpoint(system, x, u, io)).norm();
        if (r > opt.lift_tol) {
          std::ostringstream msg;
          msg << "lift residual " << r << " at s = " << path.s[k];
          throw ChartRadiusExceeded(msg.str());
        }
        res.controls.push_back(std::move(u));
        res.endpoint_residuals.push_back(r);
        res.steer_times.push_back(plan.T);
        res.anchors.push_back(static_cast<int>(anchor));
        break;
      } catch (const ChartRadiusExceeded&) {
        if (anchor + 1 >= k || res.reanchors >= opt.max_reanchors) throw;
        anchor = k - 1;
        ++res.reanchors;
      }
    }
  }
  const auto table = continuity_report(res, params.p);
  res.lp_modulus = table.max_modulus;
  return res;
}

}  // namespace horizon
