#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hcbf/errors.hpp"
#include "hcbf/sim.hpp"
#include "hcbf/tuner.hpp"

// JSON schema for scenario and tune configuration files. A config file is an
// object with a "scenario" block and, for tuning, a "tune" block; the
// scenario block may start from a catalog entry via "builtin" and override
// individual fields. Keys are documented in the README.

namespace hcbf {

using json = nlohmann::json;

inline std::string mode_to_string(FilterMode m) {
  switch (m) {
    case FilterMode::Single: return "single";
    case FilterMode::MultiStrict: return "multi-strict";
    case FilterMode::Relaxed: return "relaxed";
    case FilterMode::Hierarchical: return "hierarchical";
    case FilterMode::ImplicitHierarchical: return "implicit-hierarchical";
    case FilterMode::ExplicitHierarchical: return "explicit-hierarchical";
  }
  throw InvalidConfig("unknown filter mode value");
}

inline FilterMode mode_from_string(const std::string& s) {
  if (s == "single") return FilterMode::Single;
  if (s == "multi-strict") return FilterMode::MultiStrict;
  if (s == "relaxed") return FilterMode::Relaxed;
  if (s == "hierarchical") return FilterMode::Hierarchical;
  if (s == "implicit-hierarchical") return FilterMode::ImplicitHierarchical;
  if (s == "explicit-hierarchical") return FilterMode::ExplicitHierarchical;
  throw InvalidConfig("unknown filter mode '" + s + "'");
}

namespace config_detail {

inline Vec2 vec2_from(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 2)
    throw InvalidConfig(std::string(field) + " must be a 2-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json vec2_to(const Vec2& v) { return json::array({v(0), v(1)}); }

inline Mat2 mat2_from(const json& j, const char* field) {
  // Either a 2-element diagonal or a full 2x2 row-major array.
  if (j.is_array() && j.size() == 2 && j.at(0).is_number()) {
    Mat2 m = Mat2::Zero();
    m(0, 0) = j.at(0).get<double>();
    m(1, 1) = j.at(1).get<double>();
    return m;
  }
  if (j.is_array() && j.size() == 2 && j.at(0).is_array()) {
    Mat2 m;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
  }
  throw InvalidConfig(std::string(field) + " must be [d1,d2] or [[..],[..]]");
}

inline json mat2_to(const Mat2& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}),
                      json::array({m(1, 0), m(1, 1)})});
}

}  // namespace config_detail

inline json barrier_to_json(const BarrierSpec& b) {
  json j;
  if (const auto* hp = std::get_if<AffineHalfplane>(&b.shape)) {
    j["type"] = "halfplane";
    j["a"] = config_detail::vec2_to(hp->a);
    j["b"] = hp->b;
  } else {
    const auto& c = std::get<CircularExclusion>(b.shape);
    j["type"] = "circle";
    j["center"] = config_detail::vec2_to(c.center);
    j["radius"] = c.radius;
  }
  j["alpha"] = json::array({b.alpha.phi1, b.alpha.phi2, b.alpha.phi3});
  return j;
}

inline BarrierSpec barrier_from_json(const json& j) {
  ClassKeParams k;
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    if (!a.is_array() || a.size() != 3)
      throw InvalidConfig("barrier alpha must be [phi1,phi2,phi3]");
    k = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "halfplane")
    return BarrierSpec::halfplane(config_detail::vec2_from(j.at("a"), "a"),
                                  j.at("b").get<double>(), k);
  if (type == "circle")
    return BarrierSpec::circle(config_detail::vec2_from(j.at("center"), "center"),
                               j.at("radius").get<double>(), k);
  throw InvalidConfig("unknown barrier type '" + type + "'");
}

inline json filter_to_json(const FilterConfig& f) {
  json j;
  j["mode"] = mode_to_string(f.mode);
  j["lambda_u"] = f.lambda_u;
  j["strict_count"] = f.strict_count;
  j["velocity_gain"] = f.velocity_gain;
  j["input_box"] = {{"lo", config_detail::vec2_to(f.input_box.lo)},
                    {"hi", config_detail::vec2_to(f.input_box.hi)}};
  j["schedules"] = json::array();
  for (const auto& s : f.schedules)
    j["schedules"].push_back(
        {{"gamma0", s.gamma0}, {"delta_gamma", s.delta_gamma}});
  if (f.fixed_lambda_delta) j["fixed_lambda_delta"] = *f.fixed_lambda_delta;
  j["barriers"] = json::array();
  for (const auto& b : f.barriers) j["barriers"].push_back(barrier_to_json(b));
  return j;
}

inline void filter_merge_json(FilterConfig& f, const json& j) {
  if (j.contains("mode")) f.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("lambda_u")) f.lambda_u = j.at("lambda_u").get<double>();
  if (j.contains("strict_count")) f.strict_count = j.at("strict_count").get<int>();
  if (j.contains("velocity_gain"))
    f.velocity_gain = j.at("velocity_gain").get<double>();
  if (j.contains("input_box")) {
    const auto& b = j.at("input_box");
    if (b.is_number()) {
      f.input_box = InputBox::symmetric(b.get<double>());
    } else {
      f.input_box.lo = config_detail::vec2_from(b.at("lo"), "input_box.lo");
      f.input_box.hi = config_detail::vec2_from(b.at("hi"), "input_box.hi");
    }
  }
  if (j.contains("schedules")) {
    f.schedules.clear();
    for (const auto& s : j.at("schedules"))
      f.schedules.push_back(WeightSchedule{s.at("gamma0").get<double>(),
                                           s.at("delta_gamma").get<double>()});
  }
  if (j.contains("fixed_lambda_delta"))
    f.fixed_lambda_delta = j.at("fixed_lambda_delta").get<double>();
  if (j.contains("barriers")) {
    f.barriers.clear();
    for (const auto& b : j.at("barriers"))
      f.barriers.push_back(barrier_from_json(b));
  }
}

inline json scenario_to_json(const ScenarioConfig& sc) {
  json j;
  j["name"] = sc.name;
  j["duration"] = sc.duration;
  j["dt"] = sc.dt;
  j["start"] = config_detail::vec2_to(sc.start);
  j["goal"] = config_detail::vec2_to(sc.goal);
  j["x0"] = {{"pos", config_detail::vec2_to(sc.x0.pos)},
             {"vel", config_detail::vec2_to(sc.x0.vel)}};
  j["kp"] = config_detail::mat2_to(sc.kp);
  j["kd"] = config_detail::mat2_to(sc.kd);
  j["seed"] = sc.seed;
  j["filter"] = filter_to_json(sc.filter);
  return j;
}

inline ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig sc;
  bool have_x0 = false;
  if (j.contains("builtin"))
    sc = builtin_scenario(j.at("builtin").get<std::string>());
  if (j.contains("name")) sc.name = j.at("name").get<std::string>();
  if (j.contains("duration")) sc.duration = j.at("duration").get<double>();
  if (j.contains("dt")) sc.dt = j.at("dt").get<double>();
  if (j.contains("start"))
    sc.start = config_detail::vec2_from(j.at("start"), "start");
  if (j.contains("goal")) sc.goal = config_detail::vec2_from(j.at("goal"), "goal");
  if (j.contains("x0")) {
    sc.x0.pos = config_detail::vec2_from(j.at("x0").at("pos"), "x0.pos");
    sc.x0.vel = config_detail::vec2_from(j.at("x0").at("vel"), "x0.vel");
    have_x0 = true;
  }
  if (j.contains("kp")) sc.kp = config_detail::mat2_from(j.at("kp"), "kp");
  if (j.contains("kd")) sc.kd = config_detail::mat2_from(j.at("kd"), "kd");
  if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("filter")) filter_merge_json(sc.filter, j.at("filter"));
  if (!j.contains("builtin") && !have_x0) sc.x0 = State{sc.start, Vec2::Zero()};
  return sc;
}

inline json tune_to_json(const TuneConfig& t) {
  json j;
  j["mu"] = config_detail::vec2_to(t.mu);
  j["sigma"] = config_detail::mat2_to(t.sigma);
  j["sample_count"] = t.sample_count;
  j["gamma0_range"] = config_detail::vec2_to(t.gamma0_range);
  j["delta_gamma_range"] = config_detail::vec2_to(t.delta_gamma_range);
  j["weights"] = {{"tracking", t.weights.tracking},
                  {"final_goal", t.weights.final_goal},
                  {"relaxation", t.weights.relaxation}};
  j["seed"] = t.seed;
  j["costmap_grid"] = json::array({t.costmap_grid(0), t.costmap_grid(1)});
  j["workers"] = t.workers;
  return j;
}

inline TuneConfig tune_from_json(const json& j, const ScenarioConfig& base) {
  TuneConfig t;
  t.base = base;
  if (j.contains("mu")) t.mu = config_detail::vec2_from(j.at("mu"), "mu");
  if (j.contains("sigma")) t.sigma = config_detail::mat2_from(j.at("sigma"), "sigma");
  if (j.contains("sample_count")) t.sample_count = j.at("sample_count").get<int>();
  if (j.contains("gamma0_range"))
    t.gamma0_range = config_detail::vec2_from(j.at("gamma0_range"), "gamma0_range");
  if (j.contains("delta_gamma_range"))
    t.delta_gamma_range =
        config_detail::vec2_from(j.at("delta_gamma_range"), "delta_gamma_range");
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.contains("tracking")) t.weights.tracking = w.at("tracking").get<double>();
    if (w.contains("final_goal"))
      t.weights.final_goal = w.at("final_goal").get<double>();
    if (w.contains("relaxation"))
      t.weights.relaxation = w.at("relaxation").get<double>();
  }
  if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("costmap_grid")) {
    t.costmap_grid(0) = j.at("costmap_grid").at(0).get<int>();
    t.costmap_grid(1) = j.at("costmap_grid").at(1).get<int>();
  }
  if (j.contains("workers")) t.workers = j.at("workers").get<int>();
  return t;
}

// Field-for-field equality, used by the round-trip checks.

inline bool operator==(const ClassKeParams& a, const ClassKeParams& b) {
  return a.phi1 == b.phi1 && a.phi2 == b.phi2 && a.phi3 == b.phi3;
}
inline bool operator==(const BarrierSpec& a, const BarrierSpec& b) {
  if (!(a.alpha == b.alpha)) return false;
  if (a.shape.index() != b.shape.index()) return false;
  if (const auto* ha = std::get_if<AffineHalfplane>(&a.shape)) {
    const auto& hb = std::get<AffineHalfplane>(b.shape);
    return ha->a == hb.a && ha->b == hb.b;
  }
  const auto& ca = std::get<CircularExclusion>(a.shape);
  const auto& cb = std::get<CircularExclusion>(b.shape);
  return ca.center == cb.center && ca.radius == cb.radius;
}
inline bool operator==(const WeightSchedule& a, const WeightSchedule& b) {
  return a.gamma0 == b.gamma0 && a.delta_gamma == b.delta_gamma;
}
inline bool operator==(const InputBox& a, const InputBox& b) {
  return a.lo == b.lo && a.hi == b.hi;
}
inline bool operator==(const FilterConfig& a, const FilterConfig& b) {
  return a.barriers == b.barriers && a.strict_count == b.strict_count &&
         a.lambda_u == b.lambda_u && a.schedules == b.schedules &&
         a.fixed_lambda_delta == b.fixed_lambda_delta &&
         a.input_box == b.input_box && a.mode == b.mode &&
         a.velocity_gain == b.velocity_gain;
}
inline bool operator==(const State& a, const State& b) {
  return a.pos == b.pos && a.vel == b.vel;
}
inline bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return a.name == b.name && a.duration == b.duration && a.dt == b.dt &&
         a.x0 == b.x0 && a.start == b.start && a.goal == b.goal &&
         a.kp == b.kp && a.kd == b.kd && a.filter == b.filter &&
         a.seed == b.seed;
}

}  // namespace hcbf
