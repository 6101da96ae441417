// horizon: command-line front end for endpoint maps, steering, path lifting
// and geodesic enumeration on affine control systems.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "horizon/horizon.hpp"
#include "horizon/io.hpp"

namespace fs = std::filesystem;
using namespace horizon;
using io::json;

namespace {

struct Globals {
  double p = 2.0;
  double beta = 1.0;
  double alpha = 0.0;  // 0: default for the system
  int substeps = 64;
  std::uint64_t seed = 1;
  int workers = 0;     // 0: HORIZON_WORKERS or 1
  std::string out = "out";
};

int resolve_workers(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("HORIZON_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("HORIZON_WORKERS must be a positive integer, got \"") + env + "\"");
  }
  return 1;
}

Vec to_vec(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n)
    throw InvalidArgument(std::string(what) + " needs " + std::to_string(n) + " coordinates");
  return Eigen::Map<const Vec>(v.data(), n);
}

void emit(const Globals& g, const std::string& file, const json& j) {
  io::write_json(fs::path(g.out) / file, j);
  std::cout << j.dump(2) << "\n";
}

int cmd_catalog(const std::string& name) {
  if (name.empty()) {
    for (const auto& n : catalog_names()) std::cout << n << "\n";
    return 0;
  }
  std::cout << io::to_json(catalog_load(name)).dump(2) << "\n";
  return 0;
}

int cmd_endpoint(const Globals& g, const std::string& sys_spec, const std::vector<double>& xv,
                 const std::string& control) {
  const auto sys = io::load_system(sys_spec);
  const Vec x = to_vec(xv, sys.n(), "--x");
  const auto u = io::signal_from_json(io::read_json(control));
  const auto tr = integrate(sys, x, u, {.substeps = g.substeps});
  io::write_text(fs::path(g.out) / "trajectory.csv", io::trajectory_csv(tr));
  emit(g, "endpoint.json", {{"system", sys.name()}, {"x", io::to_json(x)}, {"endpoint", io::to_json(tr.final_state())}});
  return 0;
}

int cmd_jacobian(const Globals& g, const std::string& sys_spec, const std::vector<double>& xv,
                 const std::string& control) {
  const auto sys = io::load_system(sys_spec);
  const Vec x = to_vec(xv, sys.n(), "--x");
  const auto u = io::signal_from_json(io::read_json(control));
  emit(g, "differential.json", io::to_json(differential(sys, x, u, {.substeps = g.substeps})));
  return 0;
}

int cmd_steer(const Globals& g, const std::string& sys_spec, const std::vector<double>& xv,
              const std::vector<double>& yv) {
  const auto sys = io::load_system(sys_spec);
  const Vec x = to_vec(xv, sys.n(), "--x"), y = to_vec(yv, sys.n(), "--y");
  SteeringOptions opt;
  opt.substeps = g.substeps;
  SteeringPlan plan;
  if (!sys.driftless()) {
    check_admissible(sys, x, g.p);
    plan = cross_section_drift(sys, x, y, g.alpha > 0 ? g.alpha : default_alpha(sys, x, g.p), g.p, opt);
  } else {
    plan = cross_section(sys, x, y, EnergyParams(g.p, g.beta), opt);
  }
  emit(g, "plan.json", io::to_json(plan));
  return 0;
}

int cmd_lift(const Globals& g, const std::string& sys_spec, const std::vector<double>& xv, const std::string& anchor,
             const std::string& path_file) {
  const auto sys = io::load_system(sys_spec);
  const Vec x = to_vec(xv, sys.n(), "--x");
  const auto u0 = io::signal_from_json(io::read_json(anchor));
  const auto path = io::path_from_json(io::read_json(path_file));
  LiftOptions opt;
  opt.steering.substeps = g.substeps;
  const EnergyParams params(g.p, g.beta);
  const auto res = lift_path(sys, x, u0, path, params, opt);
  for (std::size_t k = 0; k < res.controls.size(); ++k)
    io::write_json(fs::path(g.out) / "controls" / ("u_" + std::to_string(k) + ".json"), io::to_json(res.controls[k]));
  const auto table = continuity_report(res, g.p);
  io::write_text(fs::path(g.out) / "moduli.csv", io::modulus_csv(table));
  emit(g, "lift.json",
       {{"s", res.s},
        {"endpoint_residuals", res.endpoint_residuals},
        {"steer_times", res.steer_times},
        {"anchors", res.anchors},
        {"reanchors", res.reanchors},
        {"lp_modulus", res.lp_modulus}});
  return 0;
}

int cmd_geodesics(const Globals& g, const std::string& sys_spec, const std::vector<double>& xv,
                  const std::vector<double>& yv, int seeds, int m_seed, bool vector_norm) {
  const auto sys = io::load_system(sys_spec);
  const Vec x = to_vec(xv, sys.n(), "--x"), y = to_vec(yv, sys.n(), "--y");
  MultistartOptions opt;
  opt.m_seed = m_seed;
  opt.workers = resolve_workers(g.workers);
  opt.solver.substeps = g.substeps;
  if (vector_norm) opt.solver.norm = EnergyNorm::vector;
  const auto rep = multistart(sys, x, y, g.p, seeds, g.seed, opt);
  io::write_json(fs::path(g.out) / "report.json", io::to_json(rep));
  io::write_text(fs::path(g.out) / "seeds.csv", io::report_csv(rep));
  io::write_text(fs::path(g.out) / "ladder.csv", io::ladder_csv(rep));
  std::cout << io::ladder_csv(rep);
  if (rep.converged == 0) throw NonConvergence("no seed converged");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Endpoint maps, steering, path lifting and geodesics for affine control systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--p", g.p, "energy exponent p > 1");
  app.add_option("--beta", g.beta, "reparametrization exponent, 0 < beta < p/(p-1)");
  app.add_option("--alpha", g.alpha, "drift steering exponent (default: midpoint of the admissible range)");
  app.add_option("--substeps", g.substeps, "RK4 steps per control segment")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "multistart rng seed");
  app.add_option("--workers", g.workers, "worker threads (overrides HORIZON_WORKERS)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output directory");

  std::string catalog_name;
  auto* catalog = app.add_subcommand("catalog", "list built-in systems, or print one as JSON");
  catalog->add_option("name", catalog_name);

  std::string sys_spec, control, anchor, path_file;
  std::vector<double> xv, yv;
  auto add_system = [&](CLI::App* c) {
    c->add_option("--system", sys_spec, "catalog name or system JSON file")->required();
    c->add_option("--x", xv, "start point, comma separated")->required()->delimiter(',')->allow_extra_args(false);
  };
  auto* endpoint_cmd = app.add_subcommand("endpoint", "integrate a control; trajectory CSV and endpoint JSON");
  add_system(endpoint_cmd);
  endpoint_cmd->add_option("--control", control, "signal JSON")->required();

  auto* jacobian_cmd = app.add_subcommand("jacobian", "endpoint differential on the control's segment basis");
  add_system(jacobian_cmd);
  jacobian_cmd->add_option("--control", control, "signal JSON")->required();

  auto* steer_cmd = app.add_subcommand("steer", "steering plan from x to a nearby y");
  add_system(steer_cmd);
  steer_cmd->add_option("--y", yv, "target point, comma separated")->required()->delimiter(',')->allow_extra_args(false);

  auto* lift_cmd = app.add_subcommand("lift", "lift a sampled path of endpoints to controls");
  add_system(lift_cmd);
  lift_cmd->add_option("--anchor-control", anchor, "signal JSON reaching the path start")->required();
  lift_cmd->add_option("--path", path_file, "path JSON {\"s\": [...], \"y\": [[...]...]}")->required();

  int seeds = 16, m_seed = 32;
  bool vector_norm = false;
  auto* geo_cmd = app.add_subcommand("geodesics", "multistart enumeration of critical points on a fiber");
  add_system(geo_cmd);
  geo_cmd->add_option("--y", yv, "target point, comma separated")->required()->delimiter(',')->allow_extra_args(false);
  geo_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  geo_cmd->add_option("--m-seed", m_seed, "segments per seed control")->check(CLI::PositiveNumber);
  geo_cmd->add_flag("--vector-norm", vector_norm, "use the energy with the Euclidean norm of u");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*catalog) return cmd_catalog(catalog_name);
    if (*endpoint_cmd) return cmd_endpoint(g, sys_spec, xv, control);
    if (*jacobian_cmd) return cmd_jacobian(g, sys_spec, xv, control);
    if (*steer_cmd) return cmd_steer(g, sys_spec, xv, yv);
    if (*lift_cmd) return cmd_lift(g, sys_spec, xv, anchor, path_file);
    if (*geo_cmd) return cmd_geodesics(g, sys_spec, xv, yv, seeds, m_seed, vector_norm);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
