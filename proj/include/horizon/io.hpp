#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "horizon/endpoint.hpp"
#include "horizon/errors.hpp"
#include "horizon/geodesic.hpp"
#include "horizon/lifting.hpp"
#include "horizon/signal.hpp"
#include "horizon/steering.hpp"
#include "horizon/system.hpp"

namespace horizon::io {

using json = nlohmann::json;

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<int> int_list(const json& j, const char* key, std::size_t n) {
  if (!j.contains(key)) return std::vector<int>(n, 0);
  auto v = j.at(key).get<std::vector<int>>();
  if (v.size() != n) throw InvalidArgument(std::string("term \"") + key + "\" needs one entry per coordinate");
  for (int e : v)
    if (e < 0) throw InvalidArgument("negative exponent in system JSON");
  return v;
}

inline Polynomial poly_from_json(const json& terms, std::size_t n) {
  if (!terms.is_array()) throw InvalidArgument("polynomial must be an array of terms");
  Polynomial p(n);
  for (const auto& t : terms) {
    Monomial m(n);
    m.pow = int_list(t, "exponents", n);
    m.cos = int_list(t, "cos", n);
    m.sin = int_list(t, "sin", n);
    p.add_term(m, t.at("coef").get<double>());
  }
  return p;
}

inline json poly_to_json(const Polynomial& p) {
  json out = json::array();
  for (const auto& [m, c] : p.terms()) {
    json t{{"coef", c}, {"exponents", m.pow}};
    if (m.has_trig()) {
      t["cos"] = m.cos;
      t["sin"] = m.sin;
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline json field_to_json(const VectorField& f) {
  json out = json::array();
  for (const auto& c : f.components()) out.push_back(poly_to_json(c));
  return out;
}

inline VectorField field_from_json(const json& j, std::size_t n) {
  if (!j.is_array() || j.size() != n) throw InvalidArgument("vector field needs one polynomial per coordinate");
  std::vector<Polynomial> comps;
  for (const auto& c : j) comps.push_back(poly_from_json(c, n));
  return VectorField(std::move(comps));
}

template <class F>
auto parse_guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

inline json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec vec_from_json(const json& j) {
  return detail::parse_guard([&] {
    const auto v = j.get<std::vector<double>>();
    return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  });
}

inline json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vec(m.row(i).transpose())));
  return out;
}

// ---- systems

inline json to_json(const ControlSystem& sys) {
  if (!sys.symbolic()) throw Unsupported("only symbolic systems have a JSON form");
  json fields = json::array();
  for (const auto& f : sys.controlled()) fields.push_back(detail::field_to_json(f));
  return {{"name", sys.name()},
          {"n", sys.n()},
          {"d", sys.d()},
          {"drift", detail::field_to_json(sys.drift())},
          {"fields", fields},
          {"periodic", sys.periodic()}};
}

inline ControlSystem system_from_json(const json& j) {
  return detail::parse_guard([&] {
    const auto n = j.at("n").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    const auto& fj = j.at("fields");
    if (!fj.is_array() || fj.size() != d) throw InvalidArgument("system JSON: \"fields\" must hold d fields");
    std::vector<VectorField> fields;
    for (const auto& f : fj) fields.push_back(detail::field_from_json(f, n));
    VectorField drift = j.contains("drift") ? detail::field_from_json(j.at("drift"), n) : VectorField::zero(n);
    std::vector<bool> periodic;
    if (j.contains("periodic")) periodic = j.at("periodic").get<std::vector<bool>>();
    return ControlSystem(j.value("name", std::string("custom")), std::move(drift), std::move(fields), periodic);
  });
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return detail::parse_guard([&] { return json::parse(in); });
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Catalog name, or a path to a system JSON file.
inline ControlSystem load_system(const std::string& spec) {
  if (std::filesystem::exists(spec) && std::filesystem::is_regular_file(spec)) return system_from_json(read_json(spec));
  return catalog_load(spec);
}

// ---- signals

inline json to_json(const ControlSignal& u) {
  return {{"breakpoints", u.breakpoints()}, {"values", to_json(u.values())}};
}

inline ControlSignal signal_from_json(const json& j) {
  return detail::parse_guard([&] {
    auto bp = j.at("breakpoints").get<std::vector<double>>();
    const auto rows = j.at("values").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw InvalidArgument("signal JSON needs at least one value row");
    Mat vals(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != rows.front().size()) throw InvalidArgument("signal JSON rows differ in length");
      for (std::size_t i = 0; i < rows[k].size(); ++i)
        vals(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[k][i];
    }
    ControlSignal u(std::move(bp), std::move(vals));
    return u;
  });
}

/// t_start, t_end, u_1..u_d
inline std::string signal_csv(const ControlSignal& u) {
  std::ostringstream out;
  out << "t_start,t_end";
  for (int i = 1; i <= u.d(); ++i) out << ",u_" << i;
  out << "\n";
  for (int k = 0; k < u.segments(); ++k) {
    out << detail::num(u.start(k)) << "," << detail::num(u.end(k));
    for (int i = 0; i < u.d(); ++i) out << "," << detail::num(u.values()(k, i));
    out << "\n";
  }
  return out.str();
}

// ---- endpoint

/// t, x_1..x_n
inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream out;
  out << "t";
  const auto n = tr.states.empty() ? 0 : tr.states.front().size();
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  out << "\n";
  for (std::size_t g = 0; g < tr.times.size(); ++g) {
    out << detail::num(tr.times[g]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << detail::num(tr.states[g][i]);
    out << "\n";
  }
  return out.str();
}

inline json to_json(const EndpointDifferential& D) {
  return {{"endpoint", to_json(D.endpoint)},
          {"matrix", to_json(D.matrix)},
          {"breakpoints", D.breakpoints},
          {"d", D.d},
          {"singular_values", to_json(D.singular_values)},
          {"rank", D.rank}};
}

// ---- steering and lifting

inline json to_json(const SteeringPlan& plan) {
  return {{"phi", to_json(plan.phi)},
          {"T", plan.T},
          {"sigma", to_json(plan.sigma)},
          {"residual", plan.residual},
          {"factor_count", plan.factor_count},
          {"iterations", plan.iterations},
          {"beta", plan.beta}};
}

inline TargetPath path_from_json(const json& j) {
  return detail::parse_guard([&] {
    TargetPath path;
    path.s = j.at("s").get<std::vector<double>>();
    for (const auto& y : j.at("y")) path.y.push_back(vec_from_json(y));
    return path;
  });
}

/// ds, modulus, ratio
inline std::string modulus_csv(const ModulusTable& t) {
  std::ostringstream out;
  out << "ds,modulus,ratio\n";
  for (std::size_t k = 0; k < t.ds.size(); ++k)
    out << detail::num(t.ds[k]) << "," << detail::num(t.modulus[k]) << "," << detail::num(t.ratio[k]) << "\n";
  return out.str();
}

// ---- geodesics

inline json to_json(const GeodesicRecord& r) {
  return {{"u", to_json(r.u)},
          {"lambda", to_json(r.lambda)},
          {"p", r.p},
          {"norm", r.norm == EnergyNorm::vector ? "vector" : "componentwise"},
          {"energy", r.energy},
          {"stationarity_residual", r.stationarity_residual},
          {"stationarity_tol", r.stationarity_tol},
          {"endpoint_residual", r.endpoint_residual},
          {"speed_profile", to_json(r.speed_profile)},
          {"speed_variation", r.speed_variation},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"rank_deficient", r.rank_deficient}};
}

inline json to_json(const MultistartReport& rep) {
  json records = json::array();
  for (const auto& r : rep.records) records.push_back(to_json(r));
  json clusters = json::array();
  for (const auto& c : rep.energy_clusters)
    clusters.push_back({{"energy", c.energy}, {"min", c.min}, {"max", c.max}, {"count", c.count}});
  return {{"records", records},
          {"energy_clusters", clusters},
          {"seeds_tried", rep.seeds_tried},
          {"converged", rep.converged},
          {"dedup_clusters", rep.dedup_clusters}};
}

/// seed, converged, energy, stationarity_residual, endpoint_residual, speed_variation, cluster_id
inline std::string report_csv(const MultistartReport& rep) {
  std::ostringstream out;
  out << "seed,converged,energy,stationarity_residual,endpoint_residual,speed_variation,cluster_id\n";
  for (const auto& s : rep.seeds)
    out << s.seed << "," << (s.converged ? 1 : 0) << "," << detail::num(s.energy) << ","
        << detail::num(s.stationarity_residual) << "," << detail::num(s.endpoint_residual) << ","
        << detail::num(s.speed_variation) << "," << s.cluster << "\n";
  return out.str();
}

/// level, energy, min, max, count
inline std::string ladder_csv(const MultistartReport& rep) {
  std::ostringstream out;
  out << "level,energy,min,max,count\n";
  for (std::size_t k = 0; k < rep.energy_clusters.size(); ++k) {
    const auto& c = rep.energy_clusters[k];
    out << k + 1 << "," << detail::num(c.energy) << "," << detail::num(c.min) << "," << detail::num(c.max) << ","
        << c.count << "\n";
  }
  return out.str();
}

}  // namespace horizon::io
