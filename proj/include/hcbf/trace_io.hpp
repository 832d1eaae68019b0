#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcbf/config_io.hpp"
#include "hcbf/sim.hpp"
#include "hcbf/tuner.hpp"

namespace hcbf {

// Locale-independent, 9 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(const std::string& data) {
  std::ostringstream os;
  os << std::hex << fnv1a64(data);
  return os.str();
}

// Fixed column layout, one row per step:
// t, p, v, p_ref, v_ref, u_star, u, delta_<k>..., h_1..h_m, status, heading
inline std::string trace_csv(const SimTrace& trace, const ScenarioConfig& sc) {
  const int m = sc.filter.barrier_count();
  const int n_delta =
      trace.records.empty() ? 0 : static_cast<int>(trace.records[0].delta.size());
  std::string out;
  out += "t,px,py,vx,vy,pdx,pdy,vdx,vdy,ustar_x,ustar_y,ux,uy";
  for (int k = 0; k < n_delta; ++k)
    out += ",delta_" + std::to_string(sc.filter.strict_count + k + 1);
  for (int k = 0; k < m; ++k) out += ",h_" + std::to_string(k + 1);
  out += ",status,heading\n";

  for (const auto& r : trace.records) {
    out += format_double(r.t);
    const double nums[] = {r.x.pos(0),  r.x.pos(1),  r.x.vel(0), r.x.vel(1),
                           r.p_ref(0),  r.p_ref(1),  r.v_ref(0), r.v_ref(1),
                           r.u_star(0), r.u_star(1), r.u(0),     r.u(1)};
    for (double v : nums) {
      out += ',';
      out += format_double(v);
    }
    for (int k = 0; k < n_delta; ++k) {
      out += ',';
      out += format_double(r.delta(k));
    }
    for (int k = 0; k < m; ++k) {
      out += ',';
      out += format_double(r.h(k));
    }
    out += r.held ? ",held," : ",ok,";
    out += format_double(r.heading);
    out += '\n';
  }
  return out;
}

inline json summary_to_json(const SimTrace& trace, const ScenarioConfig& sc,
                            const TuneWeights& weights = {}) {
  const auto& s = trace.summary;
  json j;
  j["scenario"] = sc.name;
  j["mode"] = mode_to_string(sc.filter.mode);
  j["complete"] = trace.complete;
  j["records"] = trace.records.size();
  j["final_error"] = s.final_error;
  j["mean_error"] = s.mean_error;
  j["delta_abs_sum"] = s.delta_abs_sum;
  j["infeasible_steps"] = s.infeasible_steps;
  for (int k = 0; k < s.min_h.size(); ++k) {
    const std::string key = "h_" + std::to_string(k + 1);
    j["min_h"][key] = s.min_h(k);
    j["violation_integral"][key] = s.violation_integral(k);
  }
  if (trace.complete) j["cost"] = trajectory_cost(trace, weights);
  j["cost_weights"] = {{"tracking", weights.tracking},
                       {"final_goal", weights.final_goal},
                       {"relaxation", weights.relaxation}};
  return j;
}

// Columnar panels for external plotting.
inline std::string plot_trajectory_csv(const SimTrace& trace) {
  std::string out = "t,px,py,pdx,pdy\n";
  for (const auto& r : trace.records) {
    out += format_double(r.t) + ',' + format_double(r.x.pos(0)) + ',' +
           format_double(r.x.pos(1)) + ',' + format_double(r.p_ref(0)) + ',' +
           format_double(r.p_ref(1)) + '\n';
  }
  return out;
}

inline std::string plot_barriers_csv(const SimTrace& trace, int m) {
  std::string out = "t";
  for (int k = 0; k < m; ++k) out += ",h_" + std::to_string(k + 1);
  out += '\n';
  for (const auto& r : trace.records) {
    out += format_double(r.t);
    for (int k = 0; k < m; ++k) {
      out += ',';
      out += format_double(r.h(k));
    }
    out += '\n';
  }
  return out;
}

inline std::string plot_error_csv(const SimTrace& trace) {
  std::string out = "t,err,err_x,err_y\n";
  for (const auto& r : trace.records) {
    const Vec2 e = r.p_ref - r.x.pos;
    out += format_double(r.t) + ',' + format_double(e.norm()) + ',' +
           format_double(e(0)) + ',' + format_double(e(1)) + '\n';
  }
  return out;
}

inline std::string costmap_csv(const std::vector<TuneSample>& rows) {
  std::string out = "gamma0,delta_gamma,cost,cost_offset\n";
  for (const auto& s : rows) {
    out += format_double(s.gamma0) + ',' + format_double(s.delta_gamma) + ',' +
           format_double(s.cost) + ',' + format_double(s.cost_offset) + '\n';
  }
  return out;
}

inline json tune_report_to_json(const TuneReport& rep) {
  json j;
  j["best_index"] = rep.best_index;
  j["best_pair"] = {{"gamma0", rep.best_pair(0)},
                    {"delta_gamma", rep.best_pair(1)}};
  j["samples"] = json::array();
  for (const auto& s : rep.samples) {
    json e;
    e["gamma0"] = s.gamma0;
    e["delta_gamma"] = s.delta_gamma;
    e["cost"] = s.failed ? json("inf") : json(s.cost);
    e["cost_offset"] = s.failed ? json("inf") : json(s.cost_offset);
    e["failed"] = s.failed;
    if (!s.failed) {
      e["final_error"] = s.summary.final_error;
      e["mean_error"] = s.summary.mean_error;
      e["delta_abs_sum"] = s.summary.delta_abs_sum;
    }
    j["samples"].push_back(e);
  }
  return j;
}

}  // namespace hcbf
