// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "heisenberg_ladder.hpp"
#include "horizon/horizon.hpp"
#include "horizon/io.hpp"
#include "test_util.hpp"

using namespace horizon;
using horizon::testing::random_point;
using horizon::testing::random_signal;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double loglog_slope(const std::vector<double>& a, const std::vector<double>& b) {
  Mat A(static_cast<Eigen::Index>(a.size()), 2);
  Vec rhs(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    A(static_cast<Eigen::Index>(i), 0) = std::log(a[i]);
    A(static_cast<Eigen::Index>(i), 1) = 1.0;
    rhs[static_cast<Eigen::Index>(i)] = std::log(b[i]);
  }
  return A.colPivHouseholderQr().solve(rhs)[0];
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  if (!out.pass) ++failures;
  std::printf("%s %d %s:%s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.str().c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

void differential_correctness(Outcome& out) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const double eps = 1e-5;
  double worst = 0.0;
  for (const std::string name : {"heisenberg", "martinet", "unicycle", "agrachev_lee(3)"}) {
    const auto sys = catalog_load(name);
    for (int c = 0; c < 10; ++c) {
      const Vec x = random_point(rng, sys.n(), -0.5, 0.5);
      const auto u = random_signal(rng, sys.d(), 6, 1.5);
      const auto D = differential(sys, x, u);
      for (int dir = 0; dir < 20; ++dir) {
        const auto h = u.with_values(random_signal(rng, sys.d(), 6).values());
        const Vec fd = (endpoint(sys, x, u.with_values(u.values() + eps * h.values())) -
                        endpoint(sys, x, u.with_values(u.values() - eps * h.values()))) /
                       (2.0 * eps);
        const Vec exact = D.apply(h);
        worst = std::max(worst, (fd - exact).norm() / std::max(1e-3, exact.norm()));
      }
    }
  }
  out.require(worst <= 1e-5, "rel err <= 1e-5");
  // remainder |F(u + e h) - F(u) - e dF(h)| = O(e^2)
  double min_slope = detail::inf();
  for (const std::string name : {"heisenberg", "martinet", "unicycle", "agrachev_lee(3)"}) {
    const auto sys = catalog_load(name);
    const Vec x = random_point(rng, sys.n(), -0.5, 0.5);
    const auto u = random_signal(rng, sys.d(), 6, 1.5);
    const auto h = u.with_values(random_signal(rng, sys.d(), 6).values());
    const auto D = differential(sys, x, u);
    std::vector<double> es, rs;
    for (double e : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
      es.push_back(e);
      rs.push_back((endpoint(sys, x, u.with_values(u.values() + e * h.values())) - D.endpoint - e * D.apply(h)).norm());
    }
    min_slope = std::min(min_slope, loglog_slope(es, rs));
  }
  out.require(min_slope >= 1.9, "remainder slope >= 1.9");
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 60.0, "runtime < 1 min");
  out.detail << " max rel err " << worst << ", min remainder slope " << min_slope << ", " << elapsed << " s";
}

void semigroup(Outcome& out) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto sys = catalog_load("heisenberg");
  double worst = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_point(rng, 3);
    const double T = 2.0 * unit(rng);
    const auto u = random_signal(rng, 2, 1 + trial % 6, 1.5);
    const auto v = random_signal(rng, 2, 1 + trial % 4, 1.5, T + 0.5 * unit(rng));
    const auto c = concatenate_rescaled(u, v, T);
    worst = std::max(worst, (endpoint(sys, x, c) - endpoint(sys, endpoint(sys, x, u), restrict_to(v, T))).norm());
    for (double p : {1.5, 2.0, 3.0}) {
      const double rhs = std::pow(T + 1.0, p - 1.0) * (energy(u, p) + energy(restrict_to(v, T), p));
      worst_norm = std::max(worst_norm, std::abs(energy(c, p) - rhs) / std::max(1.0, rhs));
    }
  }
  out.require(worst <= 1e-8, "endpoint identity <= 1e-8");
  out.require(worst_norm <= 1e-12, "norm identity <= 1e-12");
  out.detail << " max endpoint gap " << worst << ", max norm gap " << worst_norm;
}

void rho_law(Outcome& out) {
  for (auto [p, beta] : {std::pair{2.0, 1.0}, {3.0, 1.0}, {1.5, 2.0}}) {
    const EnergyParams params(p, beta);
    std::vector<double> rs, norms;
    for (double r : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
      const std::vector<double> rv{0.3, -r};
      rs.push_back(r);
      norms.push_back(lp_norm(rho(rv, 2, params), p));
    }
    const double expected = (beta + p - beta * p) / p, slope = loglog_slope(rs, norms);
    out.require(std::abs(slope - expected) <= 0.01 * std::abs(expected), "slope within 1%");
    out.detail << " (p=" << p << ",beta=" << beta << ") slope " << slope << " vs " << expected << ";";
  }
}

void steering(Outcome& out) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (const std::string name : {"heisenberg", "unicycle"}) {
    const auto sys = catalog_load(name);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec x = random_point(rng, 3, -0.5, 0.5);
      const Vec y = x + 0.1 * unit(rng) * random_point(rng, 3).normalized();
      const auto plan = cross_section(sys, x, y, EnergyParams(2.0));
      worst = std::max({worst, plan.residual, sys.displacement(y, endpoint(sys, x, plan.sigma)).norm()});
    }
  }
  out.require(worst <= 1e-6, "residual <= 1e-6");
  const auto heis = catalog_load("heisenberg");
  const Vec x0{{0.2, -0.1, 0.3}};
  const auto zero = cross_section(heis, x0, x0, EnergyParams(2.0));
  const bool exact_zero = zero.T == 0.0 && zero.phi.cwiseAbs().maxCoeff() == 0.0 && lp_norm(zero.sigma, 2.0) == 0.0;
  out.require(exact_zero, "sigma(x, x) = 0 exactly");
  int monotone = 0;
  for (const std::string name : {"heisenberg", "unicycle"}) {
    const auto sys = catalog_load(name);
    for (int dir = 0; dir < 5; ++dir) {
      const Vec v = random_point(rng, 3).normalized();
      double prev = detail::inf();
      bool decreasing = true;
      for (double t : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) {
        const auto plan = cross_section(sys, x0, x0 + t * v, EnergyParams(2.0));
        const double size = lp_norm(plan.sigma, 2.0) + plan.T;
        if (!(size < prev)) decreasing = false;
        prev = size;
      }
      if (decreasing) ++monotone;
    }
  }
  out.require(monotone == 10, "|sigma|_p + T decreases monotonically");
  out.detail << " max residual " << worst << " over 100 targets; zero plan " << (exact_zero ? "exact" : "not exact")
             << "; " << monotone << "/10 approach directions monotone";
}

void lifting(Outcome& out) {
  const auto heis = catalog_load("heisenberg");
  const Vec o3 = Vec::Zero(3);
  const auto u0 = ControlSignal::constant(Vec{{1.0, 0.0}});
  auto path = [](int K) {
    return TargetPath::sample([](double s) { return Vec{{1.0 + 0.2 * s, 0.3 * s * s, 0.05 * std::sin(3.0 * s)}}; }, K);
  };
  double worst = 0.0;
  std::vector<double> moduli;
  for (int K : {8, 16, 32}) {
    const auto res = lift_path(heis, o3, u0, path(K), EnergyParams(2.0));
    for (double r : res.endpoint_residuals) worst = std::max(worst, r);
    moduli.push_back(res.lp_modulus);
  }
  out.require(worst <= 1e-6, "lift residuals <= 1e-6");
  out.require(moduli[1] < moduli[0] && moduli[2] < moduli[1], "modulus decreases under refinement");
  out.detail << " max residual " << worst << ", modulus K=8,16,32: " << moduli[0] << ", " << moduli[1] << ", "
             << moduli[2] << ";";

  const auto al = catalog_load("agrachev_lee(3)");
  MultistartOptions opt;
  opt.amp_hi = 4.0;
  opt.workers = workers();
  const std::vector<double> ss{0.1, 0.05, 0.02, 0.01};
  std::vector<Vec> targets;
  for (double s : ss) targets.push_back(Vec{{0.0, -s}});
  std::vector<double> floor;
  const auto sweep = fiber_energy_sweep(al, Vec::Zero(2), targets, 2.0, 16, 17, opt);
  for (std::size_t k = 0; k < ss.size(); ++k) {
    floor.push_back(sweep[k].energy);
    out.detail << " J2(" << ss[k] << ") = " << sweep[k].energy;
  }
  bool positive = true;
  for (double e : floor) positive = positive && std::isfinite(e) && e > 0.0;
  out.require(positive, "infimal J2 found and positive");
  out.require(positive && floor.back() >= 0.5 * floor.front(), "J2(0.01) >= 0.5 J2(0.1)");
}

void admissibility(Outcome& out) {
  int rejected = 0, accepted = 0, total_drift = 0, total_driftless = 0;
  for (const std::string name : {"agrachev_lee(3)", "agrachev_lee(4)"}) {
    const auto sys = catalog_load(name);
    const double pc = critical_exponent(sys, Vec::Zero(2));
    out.require(pc == 1.5, name + " has p_c = 3/2 (drift brackets reach step 3)");
    for (double p : {pc, 1.5, 2.0, 3.0, 10.0}) {
      ++total_drift;
      try {
        check_admissible(sys, Vec::Zero(2), p);
      } catch (const Inadmissible&) {
        ++rejected;
      }
    }
    try {
      check_admissible(sys, Vec::Zero(2), 0.95 * pc);
    } catch (const Inadmissible&) {
      out.require(false, name + " rejects p below the bound");
    }
  }
  for (const std::string name : {"heisenberg", "unicycle", "grushin", "free_step2_rank2"}) {
    const auto sys = catalog_load(name);
    for (double p : {1.5, 2.0, 3.0, 10.0}) {
      ++total_driftless;
      check_admissible(sys, Vec::Constant(sys.n(), 0.1), p);
      ++accepted;
    }
  }
  // a driftless lift at each p
  const auto heis = catalog_load("heisenberg");
  for (double p : {1.5, 2.0, 3.0, 10.0}) {
    const auto res = lift_path(heis, Vec::Zero(3), ControlSignal::constant(Vec{{1.0, 0.0}}),
                               TargetPath::sample([](double s) { return Vec{{1.0, 0.1 * s, 0.0}}; }, 4),
                               EnergyParams(p, 1.0));
    out.require(res.endpoint_residuals.back() <= 1e-6, "driftless lift at p");
  }
  out.require(rejected == total_drift, "all p >= sigma/(sigma-1) rejected");
  out.require(accepted == total_driftless, "driftless systems accept all p");
  out.detail << " drift rejections " << rejected << "/" << total_drift << ", driftless acceptances " << accepted << "/"
             << total_driftless;
}

MultistartReport ladder_report;

void ladder(Outcome& out) {
  const auto t0 = Clock::now();
  const auto& row = oracle::kHeisenbergLadder[0];
  MultistartOptions opt;
  opt.m_seed = 64;
  opt.workers = workers();
  ladder_report = multistart(catalog_load("heisenberg"), Vec::Zero(3), Vec{{0.0, 0.0, row.h}}, 2.0, 64, 7, opt);
  const auto& clusters = ladder_report.energy_clusters;
  int matched = 0;
  for (std::size_t k = 0; k < clusters.size() && k < row.energies.size(); ++k) {
    const double rel = clusters[k].energy / row.energies[k] - 1.0;
    out.detail << " E" << k + 1 << " = " << clusters[k].energy << " (oracle " << row.energies[k] << ", " << 100 * rel
               << "%, x" << clusters[k].count << ");";
    if (std::abs(rel) <= 0.01) ++matched;
    else break;
  }
  const double elapsed = seconds_since(t0);
  out.require(matched >= 3, ">= 3 clusters within 1% of the oracle");
  out.require(elapsed < 300.0, "runtime < 5 min");
  out.detail << " " << ladder_report.converged << "/" << ladder_report.seeds_tried << " converged, " << elapsed << " s";
}

void stationarity(Outcome& out) {
  const auto heis = catalog_load("heisenberg");
  const Vec o3 = Vec::Zero(3);
  std::vector<GeodesicRecord> records = ladder_report.records;
  GeodesicOptions vec_opt;
  vec_opt.norm = EnergyNorm::vector;
  MultistartOptions opt;
  opt.workers = workers();
  opt.solver = vec_opt;
  const auto p3 = multistart(heis, o3, Vec{{0.0, 0.0, 0.5}}, 3.0, 8, 11, opt);
  const auto p3_line = multistart(heis, o3, Vec{{1.0, 0.0, 0.0}}, 3.0, 4, 12, opt);
  std::vector<GeodesicRecord> p3_records = p3.records;
  p3_records.insert(p3_records.end(), p3_line.records.begin(), p3_line.records.end());
  records.insert(records.end(), p3_records.begin(), p3_records.end());
  double worst_stat = 0.0, worst_speed = 0.0, worst_coin = 0.0;
  int coincident = 0, checked = 0;
  for (const auto& r : records) {
    worst_stat = std::max(worst_stat, r.stationarity_residual / (r.stationarity_tol / 1e-6));
    worst_speed = std::max(worst_speed, r.speed_variation);
    ++checked;
    const auto c = coincidence_check(r, heis, o3, GeodesicOptions{.norm = r.norm});
    worst_coin = std::max(worst_coin, c.residual_2);
    if (c.coincident) ++coincident;
  }
  out.require(!ladder_report.records.empty() && !p3_records.empty(), "records at p = 2 and p = 3");
  out.require(worst_stat <= 1e-6, "relative stationarity <= 1e-6");
  out.require(worst_speed <= 1e-3, "speed variation <= 1e-3");
  out.require(coincident == checked, "coincidence at p = 2 and 3");
  out.detail << " " << checked << " records (" << p3_records.size() << " at p=3); max rel stationarity " << worst_stat
             << ", max speed variation " << worst_speed << ", coincident " << coincident << "/" << checked
             << ", max J2 residual " << worst_coin;
}

void determinism(Outcome& out) {
  const auto heis = catalog_load("heisenberg");
  MultistartOptions opt;
  opt.m_seed = 32;
  std::vector<std::string> dumps;
  for (int w : {1, 2, 4}) {
    opt.workers = w;
    const auto rep = multistart(heis, Vec::Zero(3), Vec{{0.0, 0.0, 0.5}}, 2.0, 12, 31, opt);
    dumps.push_back(io::to_json(rep).dump() + io::report_csv(rep) + io::ladder_csv(rep));
  }
  out.require(dumps[0] == dumps[1] && dumps[0] == dumps[2], "byte-identical reports");
  out.detail << " workers 1/2/4, " << dumps[0].size() << " bytes each";
}

}  // namespace

int main() {
  criterion(1, "differential correctness", differential_correctness);
  criterion(2, "semigroup identity", semigroup);
  criterion(3, "rho norm law", rho_law);
  criterion(4, "steering exactness", steering);
  criterion(5, "lifting and obstruction witness", lifting);
  criterion(6, "admissibility gate", admissibility);
  criterion(7, "geodesic ladder", ladder);
  criterion(8, "stationarity and geometry", stationarity);
  criterion(9, "determinism", determinism);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
