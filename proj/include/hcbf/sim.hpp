#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcbf/errors.hpp"
#include "hcbf/filters.hpp"
#include "hcbf/rom.hpp"

namespace hcbf {

struct ScenarioConfig {
  std::string name = "custom";
  double duration = 20.0;
  double dt = 0.01;
  State x0;
  Vec2 start{Vec2::Zero()};
  Vec2 goal{Vec2::Zero()};
  Mat2 kp{4.0 * Mat2::Identity()};
  Mat2 kd{4.0 * Mat2::Identity()};
  FilterConfig filter;
  std::uint64_t seed = 0;

  int steps() const { return static_cast<int>(std::llround(duration / dt)); }

  void validate() const {
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    const int n = steps();
    if (n < 1 || std::abs(n * dt - duration) > 1e-9 * std::max(1.0, duration))
      throw InvalidConfig("duration must be a positive multiple of dt");
    auto check_spd = [](const Mat2& m, const char* what) {
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidConfig(std::string(what) + " must be symmetric");
      Eigen::SelfAdjointEigenSolver<Mat2> es(m, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw InvalidConfig(std::string(what) + " must be positive definite");
    };
    check_spd(kp, "Kp");
    check_spd(kd, "Kd");
    if (!x0.finite()) throw InvalidConfig("x0 must be finite");
    filter.validate();
  }
};

struct SimRecord {
  double t = 0.0;
  State x;
  Vec2 p_ref{Vec2::Zero()};
  Vec2 v_ref{Vec2::Zero()};
  Vec2 u_star{Vec2::Zero()};
  Vec2 u{Vec2::Zero()};
  Eigen::VectorXd delta;  // one per relaxed barrier
  Eigen::VectorXd h;      // plain barrier values
  FilterStatus filter_status = FilterStatus::Ok;
  bool held = false;      // previous input reused after an infeasible solve
  double heading = 0.0;   // atan2(vy, vx), derived plot column
};

struct SimSummary {
  double final_error = 0.0;  // |p_ref(T) - p(T)|
  double mean_error = 0.0;
  Eigen::VectorXd min_h;
  Eigen::VectorXd violation_integral;  // trapezoidal int max(0, -h_k) dt
  double delta_abs_sum = 0.0;          // sum over records of sum_k |delta_k|
  int infeasible_steps = 0;
};

struct SimTrace {
  std::vector<SimRecord> records;
  SimSummary summary;
  bool complete = false;
};

struct NumericalBlowup : std::runtime_error {
  explicit NumericalBlowup(const std::string& what, SimTrace partial_trace = {})
      : std::runtime_error(what), partial(std::move(partial_trace)) {}
  SimTrace partial;
};

// Cubic between the waypoints with zero endpoint velocity; out-of-range
// times clamp to the endpoints.
inline std::pair<Vec2, Vec2> reference_trajectory(double t,
                                                  const ScenarioConfig& sc) {
  const double tau = std::clamp(t, 0.0, sc.duration) / sc.duration;
  const double s = tau * tau * (3.0 - 2.0 * tau);
  const double sdot = 6.0 * tau * (1.0 - tau) / sc.duration;
  const Vec2 span = sc.goal - sc.start;
  return {sc.start + s * span, sdot * span};
}

inline Vec2 pd_control(const State& x, const Vec2& p_ref, const Vec2& v_ref,
                       const Mat2& kp, const Mat2& kd) {
  return kp * (p_ref - x.pos) + kd * (v_ref - x.vel);
}

// RK4 step of xdot = f(x) + g(x) u with the input held over dt. Exact for
// the double integrator up to rounding.
inline State step(const RomDynamics& dyn, const State& x, const Vec2& u,
                  double dt) {
  if (!x.finite() || !u.allFinite() || !std::isfinite(dt))
    throw NumericalBlowup("non-finite state or input");
  auto deriv = [&](const State& s) -> Vec4 {
    return dyn.drift(s) + dyn.input_matrix(s) * u;
  };
  const Vec4 x0 = x.vec();
  const Vec4 k1 = deriv(x);
  const Vec4 k2 = deriv(State::from_vec(x0 + 0.5 * dt * k1));
  const Vec4 k3 = deriv(State::from_vec(x0 + 0.5 * dt * k2));
  const Vec4 k4 = deriv(State::from_vec(x0 + dt * k3));
  const State out =
      State::from_vec(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  if (!out.finite()) throw NumericalBlowup("state diverged");
  return out;
}

namespace sim_detail {

inline void finalize_summary(SimTrace& trace, const ScenarioConfig& sc) {
  const int m = sc.filter.barrier_count();
  auto& s = trace.summary;
  s.min_h = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  s.violation_integral = Eigen::VectorXd::Zero(m);
  s.delta_abs_sum = 0.0;
  s.infeasible_steps = 0;
  double err_sum = 0.0;
  const size_t n = trace.records.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& rec = trace.records[i];
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    for (int k = 0; k < m; ++k) {
      s.min_h(k) = std::min(s.min_h(k), rec.h(k));
      s.violation_integral(k) += w * sc.dt * std::max(0.0, -rec.h(k));
    }
    s.delta_abs_sum += rec.delta.cwiseAbs().sum();
    if (rec.filter_status == FilterStatus::StrictInfeasible) ++s.infeasible_steps;
    err_sum += (rec.p_ref - rec.x.pos).norm();
  }
  if (n > 0) {
    s.mean_error = err_sum / static_cast<double>(n);
    const auto& last = trace.records.back();
    s.final_error = (last.p_ref - last.x.pos).norm();
  }
}

}  // namespace sim_detail

// Deterministic closed loop: reference -> PD -> safety filter -> RK4.
// A filter that reports StrictInfeasible keeps the previous input for that
// step. Divergence raises NumericalBlowup carrying the partial trace.
inline SimTrace run_scenario(const ScenarioConfig& sc) {
  sc.validate();
  const RomDynamics dyn = double_integrator();
  const int n_steps = sc.steps();
  const int m = sc.filter.barrier_count();

  SimTrace trace;
  trace.records.reserve(static_cast<size_t>(n_steps) + 1);
  State x = sc.x0;
  Vec2 u_prev = Vec2::Zero();

  for (int i = 0; i <= n_steps; ++i) {
    const double t = i * sc.dt;
    const auto [p_ref, v_ref] = reference_trajectory(t, sc);
    const Vec2 u_star = pd_control(x, p_ref, v_ref, sc.kp, sc.kd);

    SimRecord rec;
    rec.t = t;
    rec.x = x;
    rec.p_ref = p_ref;
    rec.v_ref = v_ref;
    rec.u_star = u_star;
    rec.h.resize(m);
    for (int k = 0; k < m; ++k)
      rec.h(k) = eval_h(sc.filter.barriers[size_t(k)], x);

    const FilterResult fr = apply_filter(dyn, u_star, x, sc.filter);
    rec.filter_status = fr.status;
    rec.delta = fr.delta;
    if (fr.status == FilterStatus::Ok) {
      rec.u = fr.u;
    } else {
      rec.u = u_prev;
      rec.held = true;
    }
    rec.heading = std::atan2(x.vel(1), x.vel(0));
    trace.records.push_back(std::move(rec));

    if (i < n_steps) {
      try {
        x = step(dyn, x, trace.records.back().u, sc.dt);
      } catch (NumericalBlowup&) {
        sim_detail::finalize_summary(trace, sc);
        throw NumericalBlowup("simulation diverged at t=" + std::to_string(t),
                              std::move(trace));
      }
      u_prev = trace.records.back().u;
    }
  }
  trace.complete = true;
  sim_detail::finalize_summary(trace, sc);
  return trace;
}

// Scenario catalog: desk-scale navigation between two exclusion discs with
// workspace halfplanes, in simulation and experiment geometry.
inline ScenarioConfig builtin_scenario(const std::string& name) {
  const ClassKeParams alpha{1.0, 0.5, 0.1};
  ScenarioConfig sc;
  sc.name = name;
  sc.duration = 20.0;
  sc.dt = 0.01;
  sc.kp = 4.0 * Mat2::Identity();
  sc.kd = 4.0 * Mat2::Identity();
  sc.filter.lambda_u = 1.0;
  sc.filter.schedules = {WeightSchedule{5.0, 1.3}};
  sc.filter.input_box = InputBox::symmetric(5.0);
  sc.filter.mode = FilterMode::Hierarchical;
  sc.filter.velocity_gain = 1.0;
  sc.filter.strict_count = 3;

  if (name == "sim-paper") {
    sc.start = {0.0, 0.0};
    sc.goal = {-12.0, 10.0};
    sc.filter.barriers = {
        BarrierSpec::halfplane({1.0, 0.0}, 0.2, alpha),
        BarrierSpec::halfplane({0.0, 1.0}, 0.2, alpha),
        BarrierSpec::circle({-1.0, 5.5}, 4.0, alpha),
        BarrierSpec::circle({-1.0, 4.5}, 5.0, alpha),
    };
  } else if (name == "exp-paper") {
    sc.start = {0.0, 0.0};
    sc.goal = {-4.0, 3.34};
    sc.filter.barriers = {
        BarrierSpec::halfplane({1.0, 0.0}, 0.2, alpha),
        BarrierSpec::halfplane({0.0, 1.0}, 0.2, alpha),
        BarrierSpec::circle({-1.7, 1.5}, 1.7, alpha),
        BarrierSpec::circle({-0.35, 1.8}, 1.34, alpha),
    };
  } else {
    throw UnknownScenario("no builtin scenario named '" + name + "'");
  }
  sc.x0 = State{sc.start, Vec2::Zero()};
  return sc;
}

inline std::vector<std::string> builtin_scenario_names() {
  return {"sim-paper", "exp-paper"};
}

}  // namespace hcbf
