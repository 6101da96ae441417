#pragma once

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "horizon/endpoint.hpp"
#include "horizon/errors.hpp"
#include "horizon/signal.hpp"
#include "horizon/system.hpp"

namespace horizon {

struct GeodesicOptions {
  EnergyNorm norm = EnergyNorm::componentwise;
  int substeps = 4;
  int descent_iter = 0;       // feasibility + projected-gradient rounds (minimum-seeking)
  int feasibility_iter = 20;  // further feasibility-only rounds
  int newton_iter = 40;    // Lagrange-Newton (Levenberg-Marquardt) iterations
  double stat_tol = 1e-6;  // relative to max(1, ||d_u J||_q)
  double end_tol = 1e-6;
  double polish = 1e-3;    // Lagrange-Newton keeps going to this fraction of the tolerances while it improves
  double ridge = 1e-10;
  double merit_mu = 10.0;
  double descent_gate = 1e-6;  // fiber miss below which gradient rounds run
  double hess_step = 1e-6;
  double rank_tol = 1e-10;

  IntegrationOptions integration() const { return {.substeps = substeps}; }
};

struct GeodesicRecord {
  ControlSignal u{1};
  Vec lambda;
  double p = 2.0;
  EnergyNorm norm = EnergyNorm::componentwise;
  double energy = 0.0;
  double stationarity_residual = 0.0;
  double stationarity_tol = 0.0;  // absolute threshold used for `converged`
  double endpoint_residual = 0.0;
  Vec speed_profile;              // |u| per segment, Euclidean
  double speed_variation = 0.0;   // (max - min) / mean of the speed profile
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;    // d_u F lost rank along the iterates
  std::vector<double> gradient_history;  // ||projected gradient||_q per round
  std::vector<double> step_history;      // ||u_{k+1} - u_k||_p per round
};

namespace detail {

inline Vec flat_weights(const ControlSignal& u) {
  Vec w(u.segments() * u.d());
  for (int k = 0; k < u.segments(); ++k) w.segment(k * u.d(), u.d()).setConstant(u.length(k));
  return w;
}

/// d/dU of the flat energy gradient values (block diagonal per segment).
inline Mat gradient_jacobian(const ControlSignal& u, double p, EnergyNorm norm) {
  const int d = u.d(), m = u.segments();
  Mat H = Mat::Zero(m * d, m * d);
  for (int k = 0; k < m; ++k) {
    const Vec v = u.value(k);
    if (norm == EnergyNorm::componentwise) {
      for (int i = 0; i < d; ++i) H(k * d + i, k * d + i) = p * (p - 1.0) * pos_pow(std::abs(v[i]), p - 2.0);
    } else {
      const double r = v.norm();
      if (r == 0.0) {
        if (p == 2.0) H.block(k * d, k * d, d, d) = 2.0 * Mat::Identity(d, d);
        continue;
      }
      H.block(k * d, k * d, d, d) =
          p * std::pow(r, p - 2.0) * (Mat::Identity(d, d) + (p - 2.0) * v * v.transpose() / (r * r));
    }
  }
  return H;
}

inline Vec speeds(const ControlSignal& u) {
  Vec s(u.segments());
  for (int k = 0; k < u.segments(); ++k) s[k] = u.values().row(k).norm();
  return s;
}

inline double speed_variation(const Vec& s, const Vec& lengths) {
  if (s.size() == 0) return 0.0;
  const double mean = s.dot(lengths) / lengths.sum();
  if (mean <= 0.0) return 0.0;
  return (s.maxCoeff() - s.minCoeff()) / mean;
}

/// Least-squares multiplier: sum_j lambda_j w_j closest to g in L^2.
inline Vec ls_multiplier(const Mat& D, const Vec& winv, const Vec& g_flat, double ridge) {
  const Mat G = D * winv.asDiagonal() * D.transpose();
  const double scale = std::max(G.trace() / std::max<Eigen::Index>(1, G.rows()), 1e-300);
  return (G + ridge * scale * Mat::Identity(G.rows(), G.cols())).ldlt().solve(D * g_flat);
}

inline bool rank_deficient(const Mat& D, const Vec& winv, double tol) {
  const Mat G = D * winv.asDiagonal() * D.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  const Vec ev = es.eigenvalues();
  return ev.size() == 0 || ev.maxCoeff() <= 0.0 || ev.minCoeff() <= tol * tol * ev.maxCoeff();
}

}  // namespace detail

/// || sum_j lambda_j w_j(.; u) - d_u J_p ||_q.
inline double lagrange_residual(const ControlSystem& system, const Vec& x, const ControlSignal& u, const Vec& lambda,
                                double p, EnergyNorm norm = EnergyNorm::componentwise,
                                const IntegrationOptions& opt = {.substeps = 4}) {
  if (u.segments() == 0) return 0.0;
  const auto [F, D] = endpoint_jacobian(system, x, u, opt);
  const Vec winv = detail::flat_weights(u).cwiseInverse();
  const Vec dual = winv.asDiagonal() * (D.transpose() * lambda);
  const Vec g = energy_gradient(u, p, norm).flat();
  return lp_norm(u.with_flat(dual - g), p / (p - 1.0), norm);
}

namespace detail {

struct Iterate {
  ControlSignal u;
  Vec F;
  Mat D;
  Vec w, winv;
  Vec g;  // flat energy gradient values (dual signal)
};

inline Iterate evaluate_iterate(const ControlSystem& system, const Vec& x, const ControlSignal& u, double p,
                                const GeodesicOptions& opt) {
  Iterate it{u, {}, {}, {}, {}, {}};
  auto [F, D] = endpoint_jacobian(system, x, u, opt.integration());
  it.F = std::move(F);
  it.D = std::move(D);
  it.w = flat_weights(u);
  it.winv = it.w.cwiseInverse();
  it.g = energy_gradient(u, p, opt.norm).flat();
  return it;
}

}  // namespace detail

/// Critical point of J_p restricted to the fiber F_x(u) = y, starting at u_init.
/// Phase 1 alternates a minimal-norm Newton correction toward the fiber with a
/// projected, dual-mapped gradient step; phase 2 solves the Lagrange system
/// (stationarity plus endpoint) by Levenberg-Marquardt with a finite-difference
/// constraint Hessian, so saddle-type critical points are reachable.
inline GeodesicRecord solve_critical(const ControlSystem& system, const Vec& x, const Vec& y, double p,
                                     const ControlSignal& u_init, const GeodesicOptions& opt = {}) {
  detail::check_p(p);
  if (u_init.d() != system.d()) throw InvalidArgument("initial control has wrong dimension");
  if (u_init.segments() == 0) throw InvalidArgument("initial control needs at least one segment");
  const int n = system.n();
  const double q = p / (p - 1.0);
  GeodesicRecord rec;
  rec.p = p;
  rec.norm = opt.norm;

  auto it = detail::evaluate_iterate(system, x, u_init, p, opt);
  auto disp = [&](const Vec& F) { return system.displacement(y, F); };
  // exact l2 penalty; the weight follows the multiplier estimate
  double mu = opt.merit_mu;
  auto merit = [&](const ControlSignal& u, const Vec& F) {
    return energy(u, p, opt.norm) + mu * disp(F).norm();
  };
  auto try_eval = [&](const ControlSignal& u, detail::Iterate& out) {
    try {
      out = detail::evaluate_iterate(system, x, u, p, opt);
      return out.F.allFinite();
    } catch (const DomainEscape&) {
      return false;
    }
  };

  // phase 1
  int descents = 0;
  for (int k = 0; k < opt.descent_iter + opt.feasibility_iter; ++k, ++rec.iterations) {
    if (detail::rank_deficient(it.D, it.winv, opt.rank_tol)) {
      rec.rank_deficient = true;
      break;
    }
    const Mat G = it.D * it.winv.asDiagonal() * it.D.transpose();
    Eigen::LDLT<Mat> Gf(G);
    const ControlSignal before = it.u;
    // (a) minimal-norm correction toward the fiber
    Vec r = -disp(it.F);
    if (r.norm() > opt.end_tol) {
      const Vec v = it.winv.asDiagonal() * (it.D.transpose() * Gf.solve(r));
      double t = 1.0;
      detail::Iterate cand;
      while (t > 1e-4) {
        if (try_eval(it.u.with_flat(it.u.flat() + t * v), cand) && disp(cand.F).norm() < (1.0 - 0.1 * t) * r.norm()) {
          it = std::move(cand);
          break;
        }
        t *= 0.5;
      }
    }
    // descend only once (nearly) on the fiber; away from it u = 0 can win the merit
    const double miss = disp(it.F).norm();
    if (descents >= opt.descent_iter || miss > opt.descent_gate) {
      rec.step_history.push_back(lp_distance(it.u, before, p, opt.norm));
      if (descents >= opt.descent_iter && miss <= opt.end_tol) break;
      continue;
    }
    ++descents;
    // (b, c) multiplier by least squares, projected gradient, dual map
    const Vec lambda = detail::ls_multiplier(it.D, it.winv, it.g, opt.ridge);
    const Vec pg = it.g - it.winv.asDiagonal() * (it.D.transpose() * lambda);
    const double pg_norm = lp_norm(it.u.with_flat(pg), q, opt.norm);
    rec.gradient_history.push_back(pg_norm);
    ControlSignal dir = dual_map(it.u.with_flat(-pg / p), p, opt.norm);
    // keep the direction tangent to the fiber
    const Vec df = dir.flat();
    const Mat Gn = it.D * it.winv.asDiagonal() * it.D.transpose();
    const Vec tangent = df - it.winv.asDiagonal() * (it.D.transpose() * Gn.ldlt().solve(it.D * df));
    mu = std::max(mu, 2.0 * lambda.norm());
    const double m0 = merit(it.u, it.F);
    const double slope = it.g.cwiseProduct(it.w).dot(tangent);
    if (slope < 0.0) {
      double t = 1.0;
      detail::Iterate cand;
      while (t > 1e-6) {
        if (try_eval(it.u.with_flat(it.u.flat() + t * tangent), cand) && merit(cand.u, cand.F) <= m0 + 1e-4 * t * slope) {
          it = std::move(cand);
          break;
        }
        t *= 0.5;
      }
    }
    rec.step_history.push_back(lp_distance(it.u, before, p, opt.norm));
    if (pg_norm <= 1e-3 * std::max(1.0, lp_norm(it.u.with_flat(it.g), q, opt.norm)) && disp(it.F).norm() <= 1e-3) break;
  }

  // phase 2: Levenberg-Marquardt on the Lagrange system
  Vec lambda = detail::ls_multiplier(it.D, it.winv, it.g, opt.ridge);
  const int md = static_cast<int>(it.g.size());
  auto residual = [&](const detail::Iterate& s, const Vec& lam) {
    Vec R(md + n);
    R.head(md) = s.w.cwiseSqrt().cwiseProduct(s.g - s.winv.asDiagonal() * (s.D.transpose() * lam));
    R.tail(n) = disp(s.F);
    return R;
  };
  auto stat = [&](const detail::Iterate& s, const Vec& lam) {
    return lp_norm(s.u.with_flat(s.g - s.winv.asDiagonal() * (s.D.transpose() * lam)), q, opt.norm);
  };
  auto tol_for = [&](const detail::Iterate& s) {
    return opt.stat_tol * std::max(1.0, lp_norm(s.u.with_flat(s.g), q, opt.norm));
  };
  auto done = [&](const detail::Iterate& s, const Vec& lam) {
    return stat(s, lam) <= opt.polish * tol_for(s) && disp(s.F).norm() <= opt.polish * opt.end_tol;
  };
  double damping = 1e-3;
  Vec R = residual(it, lambda);
  for (int k = 0; k < opt.newton_iter && !done(it, lambda); ++k, ++rec.iterations) {
    if (detail::rank_deficient(it.D, it.winv, opt.rank_tol)) rec.rank_deficient = true;
    // constraint Hessian columns d(D^T lambda)/dU_j by central differences
    const Vec U = it.u.flat();
    Mat Hc(md, md);
    bool ok = true;
    for (int j = 0; j < md && ok; ++j) {
      const double h = opt.hess_step * std::max(1.0, std::abs(U[j]));
      Vec up = U, um = U;
      up[j] += h;
      um[j] -= h;
      try {
        const Mat Dp = endpoint_jacobian(system, x, it.u.with_flat(up), opt.integration()).second;
        const Mat Dm = endpoint_jacobian(system, x, it.u.with_flat(um), opt.integration()).second;
        Hc.col(j) = (Dp - Dm).transpose() * lambda / (2.0 * h);
      } catch (const DomainEscape&) {
        ok = false;
      }
    }
    if (!ok) break;
    const Vec sw = it.w.cwiseSqrt();
    Mat J = Mat::Zero(md + n, md + n);
    J.topLeftCorner(md, md) =
        sw.asDiagonal() * (detail::gradient_jacobian(it.u, p, opt.norm) - it.winv.asDiagonal() * Hc);
    J.topRightCorner(md, n) = -(Vec(sw.cwiseProduct(it.winv)).asDiagonal() * it.D.transpose());
    J.bottomLeftCorner(n, md) = it.D;
    const Mat JtJ = J.transpose() * J;
    const Vec JtR = J.transpose() * R;
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Mat A = JtJ;
      A.diagonal() += damping * (JtJ.diagonal().array() + 1e-12).matrix();
      const Vec delta = A.ldlt().solve(-JtR);
      if (!delta.allFinite()) {
        damping *= 10.0;
        continue;
      }
      detail::Iterate cand;
      const Vec lam_c = lambda + delta.tail(n);
      if (try_eval(it.u.with_flat(U + delta.head(md)), cand)) {
        const Vec Rc = residual(cand, lam_c);
        if (Rc.norm() < R.norm()) {
          rec.step_history.push_back(lp_distance(cand.u, it.u, p, opt.norm));
          it = std::move(cand);
          lambda = lam_c;
          R = Rc;
          damping = std::max(damping / 5.0, 1e-12);
          accepted = true;
          break;
        }
      }
      damping *= 8.0;
    }
    rec.gradient_history.push_back(stat(it, lambda));
    if (!accepted) break;
  }

  // prefer the least-squares multiplier if it certifies better
  const Vec lambda_ls = detail::ls_multiplier(it.D, it.winv, it.g, opt.ridge);
  if (stat(it, lambda_ls) < stat(it, lambda)) lambda = lambda_ls;
  rec.u = it.u;
  rec.lambda = lambda;
  rec.energy = energy(it.u, p, opt.norm);
  rec.stationarity_residual = stat(it, lambda);
  rec.stationarity_tol = tol_for(it);
  rec.endpoint_residual = disp(it.F).norm();
  rec.speed_profile = detail::speeds(it.u);
  rec.speed_variation = detail::speed_variation(rec.speed_profile, it.u.lengths());
  rec.converged = rec.stationarity_residual <= rec.stationarity_tol && rec.endpoint_residual <= opt.end_tol;
  return rec;
}

struct MultistartOptions {
  int m_seed = 32;
  int workers = 1;
  double amp_lo = 0.5;   // seed amplitudes are log-uniform in [amp_lo, amp_hi]
  double amp_hi = 12.0;
  int max_frequency = 4;
  double noise = 0.2;
  double dedup_energy_tol = 1e-3;
  double dedup_lambda_tol = 1e-2;
  GeodesicOptions solver;
};

struct EnergyCluster {
  double energy = 0.0;  // mean
  double min = 0.0, max = 0.0;
  int count = 0;
};

struct SeedOutcome {
  int seed = 0;
  bool converged = false;
  double energy = 0.0;
  double stationarity_residual = 0.0;
  double endpoint_residual = 0.0;
  double speed_variation = 0.0;
  int cluster = -1;  // index into records, -1 when not converged
};

struct MultistartReport {
  std::vector<GeodesicRecord> records;  // deduplicated, sorted by energy
  std::vector<EnergyCluster> energy_clusters;
  std::vector<SeedOutcome> seeds;
  int seeds_tried = 0;
  int converged = 0;
  int dedup_clusters = 0;
};

/// Random low-frequency seed sampled per segment: a log-scaled amplitude times
/// a random trigonometric polynomial, deterministic in (rng_seed, index).
inline ControlSignal multistart_seed(int d, std::uint64_t rng_seed, int index, const MultistartOptions& opt) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32),
                    static_cast<std::uint32_t>(index), 0x9e3779b9u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double amp = std::exp(std::log(opt.amp_lo) + unit(rng) * (std::log(opt.amp_hi) - std::log(opt.amp_lo)));
  // one dominant frequency, weaker noise on the others
  const int fmax = opt.max_frequency;
  const int dominant = 1 + std::min(fmax - 1, static_cast<int>(unit(rng) * fmax));
  Mat coef(d, 2 * fmax + 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < coef.cols(); ++j) {
      const int f = (j + 1) / 2;
      coef(i, j) = gauss(rng) * (f == dominant ? 1.0 : opt.noise / (1.0 + f));
    }
  Mat vals(opt.m_seed, d);
  for (int k = 0; k < opt.m_seed; ++k) {
    const double t = (k + 0.5) / opt.m_seed;
    for (int i = 0; i < d; ++i) {
      double v = 0.3 * coef(i, 0);
      for (int f = 1; f <= fmax; ++f)
        v += coef(i, 2 * f - 1) * std::cos(2 * std::numbers::pi * f * t) + coef(i, 2 * f) * std::sin(2 * std::numbers::pi * f * t);
      vals(k, i) = amp * v;
    }
  }
  return ControlSignal::uniform(vals);
}

namespace detail {

inline bool same_record(const GeodesicRecord& a, const GeodesicRecord& b, double etol, double ltol) {
  const double scale = std::max({std::abs(a.energy), std::abs(b.energy), 1e-12});
  if (std::abs(a.energy - b.energy) > etol * scale) return false;
  const Vec la = a.lambda / std::max(a.energy, 1e-12), lb = b.lambda / std::max(b.energy, 1e-12);
  return (la - lb).norm() <= ltol * std::max({la.norm(), lb.norm(), 1e-12});
}

}  // namespace detail

/// Solve from n_seeds random seeds (in parallel), keep converged records,
/// deduplicate, and group energies. Results do not depend on the worker count.
inline MultistartReport multistart(const ControlSystem& system, const Vec& x, const Vec& y, double p, int n_seeds,
                                   std::uint64_t rng_seed, const MultistartOptions& opt = {}) {
  if (n_seeds < 1) throw InvalidArgument("multistart needs at least one seed");
  if (opt.m_seed < 1) throw InvalidArgument("m_seed must be >= 1");
  std::vector<GeodesicRecord> results(static_cast<std::size_t>(n_seeds));
  std::vector<char> failed(static_cast<std::size_t>(n_seeds), 0);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next.fetch_add(1)) < n_seeds;) {
      try {
        results[static_cast<std::size_t>(i)] =
            solve_critical(system, x, y, p, multistart_seed(system.d(), rng_seed, i, opt), opt.solver);
      } catch (const Error&) {
        failed[static_cast<std::size_t>(i)] = 1;
      }
    }
  };
  const int workers = std::clamp(opt.workers, 1, n_seeds);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  MultistartReport rep;
  rep.seeds_tried = n_seeds;
  std::vector<int> order;
  for (int i = 0; i < n_seeds; ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    SeedOutcome s;
    s.seed = i;
    if (!failed[static_cast<std::size_t>(i)]) {
      s.converged = r.converged;
      s.energy = r.energy;
      s.stationarity_residual = r.stationarity_residual;
      s.endpoint_residual = r.endpoint_residual;
      s.speed_variation = r.speed_variation;
    }
    rep.seeds.push_back(s);
    if (s.converged) order.push_back(i);
  }
  rep.converged = static_cast<int>(order.size());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return results[static_cast<std::size_t>(a)].energy < results[static_cast<std::size_t>(b)].energy;
  });
  std::vector<int> owner(static_cast<std::size_t>(n_seeds), -1);
  for (int i : order) {
    const auto& r = results[static_cast<std::size_t>(i)];
    int found = -1;
    for (std::size_t c = 0; c < rep.records.size() && found < 0; ++c)
      if (detail::same_record(rep.records[c], r, opt.dedup_energy_tol, opt.dedup_lambda_tol)) found = static_cast<int>(c);
    if (found < 0) {
      rep.records.push_back(r);
      found = static_cast<int>(rep.records.size()) - 1;
    }
    rep.seeds[static_cast<std::size_t>(i)].cluster = found;
  }
  rep.dedup_clusters = static_cast<int>(rep.records.size());
  for (int i : order) {
    const double e = results[static_cast<std::size_t>(i)].energy;
    if (rep.energy_clusters.empty() ||
        e - rep.energy_clusters.back().max > opt.dedup_energy_tol * std::max(std::abs(e), 1e-12)) {
      rep.energy_clusters.push_back({e, e, e, 0});
    }
    auto& c = rep.energy_clusters.back();
    c.energy = (c.energy * c.count + e) / (c.count + 1);
    c.max = e;
    ++c.count;
  }
  return rep;
}

struct CoincidenceReport {
  double speed = 0.0;       // mean |u|
  Vec eta;                  // lambda / (p c^{p-2})
  double residual_p = 0.0;  // Lagrange residual at the record's p
  double residual_2 = 0.0;  // p = 2 residual with multiplier 2 eta
  bool coincident = false;
  bool indeterminate = false;
};

/// Checks that a J_p critical point also satisfies the J_2 Lagrange condition
/// after rescaling the multiplier by its (constant) speed.
inline CoincidenceReport coincidence_check(const GeodesicRecord& rec, const ControlSystem& system, const Vec& x,
                                           const GeodesicOptions& opt = {}, double tol = 1e-6) {
  CoincidenceReport out;
  const Vec s = detail::speeds(rec.u);
  out.speed = rec.u.segments() ? s.dot(rec.u.lengths()) / rec.u.horizon() : 0.0;
  out.eta = Vec::Zero(rec.lambda.size());
  if (out.speed == 0.0) {
    out.indeterminate = rec.energy > 0.0 || rec.lambda.norm() > 0.0;
    out.coincident = !out.indeterminate;
    return out;
  }
  out.eta = rec.lambda / (rec.p * std::pow(out.speed, rec.p - 2.0));
  out.residual_p = lagrange_residual(system, x, rec.u, rec.lambda, rec.p, rec.norm, opt.integration());
  out.residual_2 = lagrange_residual(system, x, rec.u, 2.0 * out.eta, 2.0, EnergyNorm::componentwise, opt.integration());
  out.coincident = out.residual_2 <= tol * std::max(1.0, 2.0 * lp_norm(rec.u, 2.0));
  return out;
}

struct FiberEnergy {
  double energy = std::numeric_limits<double>::quiet_NaN();  // least converged energy
  int converged = 0;
  int seeds_tried = 0;
};

/// Least J_p over converged minimum-seeking solves on the fiber over y.
inline FiberEnergy infimal_fiber_energy(const ControlSystem& system, const Vec& x, const Vec& y, double p, int n_seeds,
                                        std::uint64_t rng_seed, MultistartOptions opt = {}) {
  if (opt.solver.descent_iter == 0) opt.solver.descent_iter = 25;
  const auto rep = multistart(system, x, y, p, n_seeds, rng_seed, opt);
  FiberEnergy out;
  out.seeds_tried = rep.seeds_tried;
  out.converged = rep.converged;
  if (!rep.records.empty()) out.energy = rep.records.front().energy;
  return out;
}

/// infimal_fiber_energy along a sequence of targets, with continuation: each
/// target is also solved from the previous target's best control.
inline std::vector<FiberEnergy> fiber_energy_sweep(const ControlSystem& system, const Vec& x,
                                                   const std::vector<Vec>& targets, double p, int n_seeds,
                                                   std::uint64_t rng_seed, MultistartOptions opt = {}) {
  if (opt.solver.descent_iter == 0) opt.solver.descent_iter = 25;
  std::vector<FiberEnergy> out;
  std::optional<ControlSignal> warm;
  for (const Vec& y : targets) {
    const auto rep = multistart(system, x, y, p, n_seeds, rng_seed, opt);
    FiberEnergy f;
    f.seeds_tried = rep.seeds_tried;
    f.converged = rep.converged;
    std::optional<ControlSignal> best;
    if (!rep.records.empty()) {
      f.energy = rep.records.front().energy;
      best = rep.records.front().u;
    }
    if (warm) {
      ++f.seeds_tried;
      try {
        const auto r = solve_critical(system, x, y, p, *warm, opt.solver);
        if (r.converged) {
          ++f.converged;
          if (!(r.energy >= f.energy)) {
            f.energy = r.energy;
            best = r.u;
          }
        }
      } catch (const Error&) {
      }
    }
    if (best) warm = best;
    out.push_back(f);
  }
  return out;
}

}  // namespace horizon
