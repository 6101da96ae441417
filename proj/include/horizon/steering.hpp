#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "horizon/endpoint.hpp"
#include "horizon/errors.hpp"
#include "horizon/signal.hpp"
#include "horizon/system.hpp"

namespace horizon {

/// One elementary exponential e^{c X_field} of the chart product. Its
/// coefficient is sign * |phi_coordinate|^{1/power}, and the carrier factors
/// additionally take the sign that makes the word's leading term +phi.
struct FlowFactor {
  int coordinate = 0;  // which phi entry
  int field = 1;       // 1..d
  int sign = 1;
  int power = 1;       // word length nu
  bool carrier = false;

  friend bool operator==(const FlowFactor&, const FlowFactor&) = default;
};

/// Local chart around `base`: the product over frame words of the commutator
/// flows P^nu, expanded into elementary single-field exponentials.
struct SteeringChart {
  Vec base;
  std::vector<BracketWord> words;
  Mat frame;  // word fields at base, one column per phi coordinate
  std::vector<FlowFactor> factors;
  int step = 0;

  int factor_count() const { return static_cast<int>(factors.size()); }

  /// Signed flow time of each factor for the given phi.
  std::vector<double> coefficients(const Vec& phi) const {
    std::vector<double> c;
    c.reserve(factors.size());
    for (const auto& f : factors) {
      const double a = phi[f.coordinate];
      double r = f.power == 1 ? std::abs(a) : std::pow(std::abs(a), 1.0 / f.power);
      if (f.carrier) {
        const int lead = f.power == 1 ? 1 : (f.power % 2 == 0 ? 1 : -1);
        r *= (lead * a < 0.0) ? -1.0 : 1.0;
      }
      c.push_back(f.sign * r);
    }
    return c;
  }
};

struct SteeringOptions {
  int max_depth = 4;
  double rank_tol = 1e-8;
  int substeps = 64;
  double newton_tol = 1e-12;
  double steer_tol = 1e-8;
  int max_iter = 60;
  double fd_step = 1e-7;
  int refinements = 2;

  IntegrationOptions integration() const { return {.substeps = substeps}; }
};

struct SteeringPlan {
  ControlSignal sigma{1};
  double T = 0.0;
  Vec phi;
  double residual = 0.0;
  int factor_count = 0;
  int iterations = 0;
  double beta = 1.0;
  SteeringChart chart;
};

struct PhiSolution {
  Vec phi;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Q^nu in time order as (position k of Y_k, sign). Q^1 = e^{Y1};
/// Q^nu = e^{Y_nu} o Q^{nu-1} o e^{-Y_nu} o (Q^{nu-1})^{-1}, applied right to left.
inline std::vector<std::pair<int, int>> q_layout(int nu) {
  std::vector<std::pair<int, int>> q{{1, 1}};
  for (int k = 2; k <= nu; ++k) {
    std::vector<std::pair<int, int>> next;
    for (auto it = q.rbegin(); it != q.rend(); ++it) next.emplace_back(it->first, -it->second);
    next.emplace_back(k, -1);
    next.insert(next.end(), q.begin(), q.end());
    next.emplace_back(k, 1);
    q = std::move(next);
  }
  return q;
}

/// Field index of Y_k for a right-normed word with the given leaves, chosen so
/// that ad Y_nu ... ad Y_2 Y_1 is the word up to the sign (-1)^nu.
inline int y_field(const std::vector<int>& leaves, int k) {
  const int nu = static_cast<int>(leaves.size());
  if (nu == 1) return leaves[0];
  if (k == 1) return leaves[static_cast<std::size_t>(nu - 2)];
  if (k == 2) return leaves[static_cast<std::size_t>(nu - 1)];
  return leaves[static_cast<std::size_t>(nu - k)];
}

inline std::string fraction(int num, int den) { return std::to_string(num) + "/" + std::to_string(den); }

inline double inf() { return std::numeric_limits<double>::infinity(); }

}  // namespace detail

/// Chart over the controlled fields at x.
inline SteeringChart build_chart(const ControlSystem& system, const Vec& x, int max_depth = 4, double rank_tol = 1e-8) {
  const auto frame = bracket_frame(system, x, max_depth, rank_tol, true);
  SteeringChart chart;
  chart.base = x;
  chart.words = frame.words;
  chart.frame = frame.matrix;
  chart.step = frame.step;
  for (std::size_t w = 0; w < frame.words.size(); ++w) {
    const auto leaves = frame.words[w].leaves();
    const int nu = static_cast<int>(leaves.size());
    for (const auto& [k, s] : detail::q_layout(nu))
      chart.factors.push_back({static_cast<int>(w), detail::y_field(leaves, k), s, nu, k == 1});
  }
  return chart;
}

/// Factor k becomes a segment of length |c_k|^beta and height c_k |c_k|^{-beta}
/// on its field; zero factors are dropped.
inline ControlSignal chart_signal(const SteeringChart& chart, const Vec& phi, int d, double beta) {
  std::vector<double> bp{0.0};
  std::vector<std::pair<int, double>> rows;
  const auto cs = chart.coefficients(phi);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double c = cs[i];
    if (c == 0.0) continue;
    const double len = std::pow(std::abs(c), beta);
    const double end = bp.back() + len;
    if (!(end > bp.back())) continue;  // below time resolution
    bp.push_back(end);
    rows.emplace_back(chart.factors[i].field - 1, c / len);
  }
  if (rows.empty()) return ControlSignal(d);
  Mat vals = Mat::Zero(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t k = 0; k < rows.size(); ++k) vals(static_cast<Eigen::Index>(k), rows[k].first) = rows[k].second;
  return ControlSignal(std::move(bp), std::move(vals));
}

/// Damped Newton for the chart coordinates of y, against the integrated flow
/// product. The start is the leading-order guess frame^{-1} (y - x).
inline PhiSolution solve_phi_unchecked(const ControlSystem& system, const SteeringChart& chart, const Vec& y,
                                       double beta, const SteeringOptions& opt = {}, const Vec* start = nullptr) {
  const int n = system.n(), d = system.d();
  const Vec& x = chart.base;
  const auto io = opt.integration();
  auto G = [&](const Vec& phi) -> Vec {
    const auto s = chart_signal(chart, phi, d, beta);
    return system.displacement(y, s.segments() ? endpoint(system, x, s, io) : x);
  };
  auto G_safe = [&](const Vec& phi, Vec& out) {
    try {
      out = G(phi);
      return out.allFinite();
    } catch (const DomainEscape&) {
      return false;
    }
  };

  PhiSolution sol;
  const Vec disp = system.displacement(x, y);
  if (disp.isZero(0.0)) {
    sol.phi = Vec::Zero(n);
    sol.converged = true;
    return sol;
  }
  sol.phi = start ? *start : Vec(chart.frame.colPivHouseholderQr().solve(disp));
  Vec r;
  if (!G_safe(sol.phi, r)) {
    sol.phi.setZero();
    r = G(sol.phi);
  }
  double rn = r.norm();
  Mat J(n, n);
  Vec gp, gm, trial_r;
  for (; sol.iterations < opt.max_iter && rn > opt.newton_tol; ++sol.iterations) {
    const double h = opt.fd_step * std::max(1.0, sol.phi.lpNorm<Eigen::Infinity>());
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      Vec pp = sol.phi, pm = sol.phi;
      pp[j] += h;
      pm[j] -= h;
      ok = G_safe(pp, gp) && G_safe(pm, gm);
      if (ok) J.col(j) = (gp - gm) / (2.0 * h);
    }
    if (!ok) break;
    const Vec delta = J.colPivHouseholderQr().solve(-r);
    if (!delta.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    while (t >= 1.0 / 1024.0) {
      const Vec cand = sol.phi + t * delta;
      if (G_safe(cand, trial_r) && trial_r.norm() < (1.0 - 1e-4 * t) * rn) {
        sol.phi = cand;
        r = trial_r;
        rn = r.norm();
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  sol.residual = rn;
  sol.converged = rn <= opt.newton_tol;
  return sol;
}

/// As solve_phi_unchecked, but raises when the residual exceeds steer_tol.
inline PhiSolution solve_phi(const ControlSystem& system, const SteeringChart& chart, const Vec& y, double beta = 1.0,
                             const SteeringOptions& opt = {}) {
  auto sol = solve_phi_unchecked(system, chart, y, beta, opt);
  if (sol.residual > opt.steer_tol) {
    std::ostringstream msg;
    msg << "chart Newton stalled at residual " << sol.residual << " after " << sol.iterations << " iterations";
    throw ChartRadiusExceeded(msg.str());
  }
  return sol;
}

/// Lower bound for the critical exponent: infinite without drift, else
/// sigma/(sigma-1) with sigma the step of the full bracket frame at x.
inline double critical_exponent(const ControlSystem& system, const Vec& x, int max_depth = 6) {
  if (system.driftless()) return detail::inf();
  const int sigma = bracket_frame(system, x, max_depth).step;
  if (sigma <= 1) return detail::inf();
  return static_cast<double>(sigma) / (sigma - 1);
}

inline int drift_step(const ControlSystem& system, const Vec& x, int max_depth = 6) {
  return bracket_frame(system, x, max_depth).step;
}

/// Raises Inadmissible when p is at or beyond the critical exponent bound.
inline void check_admissible(const ControlSystem& system, const Vec& x, double p, int max_depth = 6) {
  detail::check_p(p);
  if (system.driftless()) return;
  const int sigma = drift_step(system, x, max_depth);
  if (sigma <= 1) return;
  const double pc = static_cast<double>(sigma) / (sigma - 1);
  if (p >= pc) {
    std::ostringstream msg;
    msg << "p = " << p << " is not admissible for " << system.name() << ": systems with drift need p < sigma/(sigma-1) = "
        << detail::fraction(sigma, sigma - 1) << " (step sigma = " << sigma << ")";
    throw Inadmissible(msg.str());
  }
}

/// Midpoint of the admissible window sigma/2 < alpha < p / (2 (p - 1)).
inline double default_alpha(const ControlSystem& system, const Vec& x, double p, int max_depth = 6) {
  check_admissible(system, x, p, max_depth);
  const int sigma = std::max(1, drift_step(system, x, max_depth));
  const double lo = 0.5 * sigma;
  const double hi = p / (2.0 * (p - 1.0));
  if (!std::isfinite(hi)) return lo + 0.5;
  return 0.5 * (lo + hi);
}

namespace detail {

inline SteeringPlan assemble_plan(const ControlSystem& system, const Vec& x, const Vec& y, double beta,
                                  const SteeringOptions& opt, int max_step) {
  SteeringPlan plan;
  plan.beta = beta;
  plan.phi = Vec::Zero(system.n());
  plan.sigma = ControlSignal(system.d());
  if (system.displacement(x, y).isZero(0.0)) return plan;
  plan.chart = build_chart(system, x, opt.max_depth, opt.rank_tol);
  if (plan.chart.step > max_step)
    throw Unsupported("drift steering is implemented for charts of step <= " + std::to_string(max_step) +
                      "; controlled step at this point is " + std::to_string(plan.chart.step));
  plan.factor_count = plan.chart.factor_count();
  auto sol = solve_phi_unchecked(system, plan.chart, y, beta, opt);
  // refinement: restart Newton from the current phi with a tighter difference step
  SteeringOptions retry = opt;
  for (int k = 0; k < opt.refinements && sol.residual > opt.steer_tol; ++k) {
    retry.fd_step *= 0.1;
    auto again = solve_phi_unchecked(system, plan.chart, y, beta, retry, &sol.phi);
    if (again.residual < sol.residual) sol = again;
  }
  plan.phi = sol.phi;
  plan.iterations = sol.iterations;
  plan.sigma = chart_signal(plan.chart, plan.phi, system.d(), beta);
  plan.T = plan.sigma.horizon();
  const Vec reached = plan.sigma.segments() ? endpoint(system, x, plan.sigma, opt.integration()) : x;
  plan.residual = system.displacement(y, reached).norm();
  if (plan.residual > opt.steer_tol) {
    std::ostringstream msg;
    msg << "steering residual " << plan.residual << " exceeds tolerance " << opt.steer_tol;
    throw ChartRadiusExceeded(msg.str());
  }
  return plan;
}

}  // namespace detail

/// Drift steering: same factor layout with segment lengths |c|^{2 alpha}.
/// Requires alpha > sigma/2 and p < 2 alpha / (2 alpha - 1).
inline SteeringPlan cross_section_drift(const ControlSystem& system, const Vec& x, const Vec& y, double alpha, double p,
                                        const SteeringOptions& opt = {}) {
  detail::check_p(p);
  const int sigma = system.driftless() ? bracket_frame(system, x, opt.max_depth, opt.rank_tol).step
                                       : drift_step(system, x, std::max(opt.max_depth, 6));
  if (!(alpha > 0.5 * sigma)) {
    std::ostringstream msg;
    msg << "alpha = " << alpha << " must exceed sigma/2 = " << 0.5 * sigma;
    throw Inadmissible(msg.str());
  }
  const double bound = 2.0 * alpha / (2.0 * alpha - 1.0);
  if (!(p < bound)) {
    std::ostringstream msg;
    msg << "p = " << p << " is not admissible with alpha = " << alpha << ": need p < 2 alpha/(2 alpha - 1) = " << bound;
    throw Inadmissible(msg.str());
  }
  return detail::assemble_plan(system, x, y, 2.0 * alpha, opt, 2);
}

/// Steering cross-section (sigma(x, y), T(x, y)) with F_x^T(sigma) = y.
/// Systems with drift are routed through cross_section_drift with the
/// default alpha for p.
inline SteeringPlan cross_section(const ControlSystem& system, const Vec& x, const Vec& y, const EnergyParams& params,
                                  const SteeringOptions& opt = {}) {
  params.validate();
  if (x.size() != system.n() || y.size() != system.n()) throw InvalidArgument("cross_section: point dimension mismatch");
  if (!system.driftless()) return cross_section_drift(system, x, y, default_alpha(system, x, params.p), params.p, opt);
  return detail::assemble_plan(system, x, y, params.beta, opt, std::numeric_limits<int>::max());
}

}  // namespace horizon
