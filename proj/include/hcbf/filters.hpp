#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hcbf/barriers.hpp"
#include "hcbf/errors.hpp"
#include "hcbf/qp.hpp"
#include "hcbf/rom.hpp"

namespace hcbf {

enum class FilterMode {
  Single,                // one CBF constraint
  MultiStrict,           // every constraint hard; may be infeasible
  Relaxed,               // one slack on the lowest-priority constraint
  Hierarchical,          // slack tied to the stand-alone solution rate
  ImplicitHierarchical,  // all slacks in one coupled program
  ExplicitHierarchical   // sequential stages, earlier slacks frozen
};

enum class FilterStatus { Ok, StrictInfeasible };

// lambda_delta(h2) = gamma0 above the boundary, growing linearly with the
// violation depth below it.
struct WeightSchedule {
  double gamma0 = 5.0;
  double delta_gamma = 1.3;

  void validate() const {
    if (!(gamma0 > 0.0) || !(delta_gamma > 0.0))
      throw InvalidConfig("weight schedule parameters must be positive");
  }
};

inline double lambda_delta(double h2_val, const WeightSchedule& s) {
  if (h2_val > 0.0) return s.gamma0;
  return s.gamma0 * (1.0 + s.delta_gamma * std::abs(h2_val));
}

// Barriers are listed in priority order. The first strict_count of them are
// enforced exactly; the remainder are relaxable, highest priority first.
//
// Slack weighting: the relaxed program is the plain baseline (gamma0), the
// hierarchical programs scale it with the violation depth. A fixed override
// replaces both, which the limit checks (lambda_delta = 0) rely on.
struct FilterConfig {
  std::vector<BarrierSpec> barriers;
  int strict_count = 1;
  double lambda_u = 1.0;
  std::vector<WeightSchedule> schedules;  // one per relaxed barrier, or one shared
  std::optional<double> fixed_lambda_delta;
  InputBox input_box;
  FilterMode mode = FilterMode::Hierarchical;
  double velocity_gain = 1.0;  // k_v of the velocity-augmented barrier

  int barrier_count() const { return static_cast<int>(barriers.size()); }
  int relaxed_count() const { return barrier_count() - strict_count; }

  const WeightSchedule& schedule_for(int relaxed_idx) const {
    if (schedules.empty()) throw InvalidConfig("no weight schedule configured");
    if (schedules.size() == 1) return schedules.front();
    return schedules.at(static_cast<size_t>(relaxed_idx));
  }

  // Weight on the slack of relaxed barrier j at barrier value h.
  double relaxation_weight(int j, double h, bool depth_scaled) const {
    if (fixed_lambda_delta) return *fixed_lambda_delta;
    const WeightSchedule& s = schedule_for(j);
    return depth_scaled ? lambda_delta(h, s) : s.gamma0;
  }

  void validate() const {
    if (barriers.empty()) throw InvalidConfig("filter needs at least one barrier");
    for (const auto& b : barriers) b.validate();
    if (strict_count < 1 || strict_count > barrier_count())
      throw InvalidConfig("strict_count out of range");
    if (!(lambda_u >= 0.0)) throw InvalidConfig("lambda_u must be >= 0");
    if (!(velocity_gain > 0.0)) throw InvalidConfig("velocity_gain must be > 0");
    switch (mode) {
      case FilterMode::Single:
        if (barrier_count() != 1) throw InvalidConfig("Single mode needs one barrier");
        break;
      case FilterMode::MultiStrict:
        if (barrier_count() < 2)
          throw InvalidConfig("MultiStrict mode needs at least two barriers");
        break;
      case FilterMode::Relaxed:
      case FilterMode::Hierarchical:
        if (relaxed_count() != 1)
          throw InvalidConfig("Relaxed/Hierarchical modes need exactly one relaxed barrier");
        break;
      case FilterMode::ImplicitHierarchical:
      case FilterMode::ExplicitHierarchical:
        if (relaxed_count() < 1)
          throw InvalidConfig("hierarchical chains need at least one relaxed barrier");
        break;
    }
    if (fixed_lambda_delta && !(*fixed_lambda_delta >= 0.0))
      throw InvalidConfig("fixed_lambda_delta must be >= 0");
    if (relaxed_count() > 0 && mode != FilterMode::Single &&
        mode != FilterMode::MultiStrict && !fixed_lambda_delta) {
      if (schedules.size() != 1 &&
          schedules.size() != static_cast<size_t>(relaxed_count()))
        throw InvalidConfig("schedule count must be 1 or the relaxed barrier count");
      for (const auto& s : schedules) s.validate();
    }
  }
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

struct FilterResult {
  Vec2 u{Vec2::Zero()};
  Eigen::VectorXd delta;  // one slack per relaxed barrier
  Eigen::VectorXd hdot;   // augmented-barrier rates at the returned input
  FilterStatus status = FilterStatus::StrictInfeasible;
  bool uhat_fallback = false;  // a stand-alone subproblem hit the input box
  bool stage_aborted = false;  // explicit chain stopped early
  SolveStats stats;
};

namespace filter_detail {

inline std::vector<CbfRow> all_rows(const FilterConfig& cfg,
                                    const RomDynamics& dyn, const State& x) {
  std::vector<CbfRow> rows;
  rows.reserve(cfg.barriers.size());
  for (const auto& b : cfg.barriers)
    rows.push_back(cbf_row(b, dyn, x, cfg.velocity_gain));
  return rows;
}

inline Eigen::VectorXd rates_at(const std::vector<CbfRow>& rows, const Vec2& u) {
  Eigen::VectorXd hd(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) hd(static_cast<int>(i)) = rows[i].hdot(u);
  return hd;
}

// Cost blocks for variables (u, slack_1..slack_k).
inline QpProblem deviation_program(double lambda_u, const Vec2& u_star,
                                   const Eigen::VectorXd& slack_weights,
                                   const InputBox& box) {
  const int k = static_cast<int>(slack_weights.size());
  const int n = 2 + k;
  QpProblem qp;
  qp.H = Eigen::MatrixXd::Zero(n, n);
  qp.H(0, 0) = qp.H(1, 1) = 2.0 * lambda_u;
  for (int j = 0; j < k; ++j) qp.H(2 + j, 2 + j) = 2.0 * slack_weights(j);
  qp.f = Eigen::VectorXd::Zero(n);
  qp.f.head<2>() = -2.0 * lambda_u * u_star;
  constexpr double inf = std::numeric_limits<double>::infinity();
  qp.lb = Eigen::VectorXd::Constant(n, -inf);
  qp.ub = Eigen::VectorXd::Constant(n, inf);
  qp.lb.head<2>() = box.lo;
  qp.ub.head<2>() = box.hi;
  return qp;
}

inline FilterStatus to_status(QpStatus s) {
  return s == QpStatus::Optimal ? FilterStatus::Ok : FilterStatus::StrictInfeasible;
}

}  // namespace filter_detail

// Pointwise-closest safe input under a single CBF constraint and the box.
inline FilterResult cbf_qp_single(const RomDynamics& dyn, const Vec2& u_star,
                                  const State& x, const BarrierSpec& barrier,
                                  const FilterConfig& cfg) {
  const CbfRow row = cbf_row(barrier, dyn, x, cfg.velocity_gain);
  QpProblem qp = QpProblem::least_deviation(u_star);
  qp.A_in.resize(1, 2);
  qp.A_in.row(0) = row.lg;
  qp.b_in.resize(1);
  qp.b_in(0) = row.rhs();
  qp.lb = cfg.input_box.lo;
  qp.ub = cfg.input_box.hi;
  const QpSolution s = solve_qp(qp);

  FilterResult res;
  res.u = cfg.input_box.clamp(Vec2(s.z));
  res.delta.resize(0);
  res.hdot.resize(1);
  res.hdot(0) = row.hdot(res.u);
  res.status = filter_detail::to_status(s.status);
  res.stats = {s.iterations, s.kkt_residual};
  return res;
}

// Every barrier enforced jointly; infeasibility is the expected outcome on
// conflicting states.
inline FilterResult cbf_qp_multi(const RomDynamics& dyn, const Vec2& u_star,
                                 const State& x, const FilterConfig& cfg) {
  const int m = cfg.barrier_count();
  if (m < 2) throw InvalidConfig("cbf_qp_multi needs at least two barriers");
  const auto rows = filter_detail::all_rows(cfg, dyn, x);

  QpProblem qp = QpProblem::least_deviation(u_star);
  qp.A_in.resize(m, 2);
  qp.b_in.resize(m);
  for (int i = 0; i < m; ++i) {
    qp.A_in.row(i) = rows[size_t(i)].lg;
    qp.b_in(i) = rows[size_t(i)].rhs();
  }
  qp.lb = cfg.input_box.lo;
  qp.ub = cfg.input_box.hi;
  const QpSolution s = solve_qp(qp);

  FilterResult res;
  res.u = cfg.input_box.clamp(Vec2(s.z));
  res.delta.resize(0);
  res.hdot = filter_detail::rates_at(rows, res.u);
  res.status = filter_detail::to_status(s.status);
  res.stats = {s.iterations, s.kkt_residual};
  return res;
}

// Strict tier enforced exactly; the relaxed constraint receives a
// non-negative slack weighted by the schedule.
inline FilterResult r_cbf_qp(const RomDynamics& dyn, const Vec2& u_star,
                             const State& x, const FilterConfig& cfg) {
  if (cfg.relaxed_count() != 1)
    throw InvalidConfig("r_cbf_qp needs exactly one relaxed barrier");
  const auto rows = filter_detail::all_rows(cfg, dyn, x);
  const int s_cnt = cfg.strict_count;
  const int rel = s_cnt;  // index of the relaxed barrier

  const double w = cfg.relaxation_weight(
      0, eval_h(cfg.barriers[size_t(rel)], x), /*depth_scaled=*/false);
  QpProblem qp = filter_detail::deviation_program(
      cfg.lambda_u, u_star, Eigen::VectorXd::Constant(1, w), cfg.input_box);
  qp.A_in.setZero(s_cnt + 1, 3);
  qp.b_in.resize(s_cnt + 1);
  for (int i = 0; i < s_cnt; ++i) {
    qp.A_in.block<1, 2>(i, 0) = rows[size_t(i)].lg;
    qp.b_in(i) = rows[size_t(i)].rhs();
  }
  qp.A_in.block<1, 2>(s_cnt, 0) = rows[size_t(rel)].lg;
  qp.A_in(s_cnt, 2) = 1.0;  // hdot_2 + delta >= -alpha_2
  qp.b_in(s_cnt) = rows[size_t(rel)].rhs();
  qp.lb(2) = 0.0;

  const QpSolution s = solve_qp(qp);
  FilterResult res;
  res.u = cfg.input_box.clamp(Vec2(s.z.head<2>()));
  res.delta = Eigen::VectorXd::Constant(1, std::max(0.0, s.z(2)));
  res.hdot = filter_detail::rates_at(rows, res.u);
  res.status = filter_detail::to_status(s.status);
  res.stats = {s.iterations, s.kkt_residual};
  return res;
}

namespace filter_detail {

// Shared body of the hierarchical programs. Stand-alone solutions u_hat_k
// anchor equality rows  Lg_k u + delta_k = Lg_k u_hat_k; frozen stages pin
// their slack at the already-optimized value.
struct HierarchyStage {
  Eigen::RowVector2d lg;
  double rhs;  // Lg u_hat - frozen slack (if any)
};

inline FilterResult solve_hierarchy(const FilterConfig& cfg,
                                    const RomDynamics& dyn, const Vec2& u_star,
                                    const State& x, bool explicit_chain) {
  if (cfg.relaxed_count() < 1)
    throw InvalidConfig("hierarchical filters need a relaxed barrier");
  const auto rows = all_rows(cfg, dyn, x);
  const int s_cnt = cfg.strict_count;
  const int k_rel = cfg.relaxed_count();

  FilterResult res;
  res.delta = Eigen::VectorXd::Zero(k_rel);
  int iters = 0;

  // Stand-alone targets for every relaxed barrier.
  Eigen::VectorXd target(k_rel);
  Eigen::VectorXd weights(k_rel);
  for (int j = 0; j < k_rel; ++j) {
    const int bi = s_cnt + j;
    const FilterResult uhat =
        cbf_qp_single(dyn, u_star, x, cfg.barriers[size_t(bi)], cfg);
    if (uhat.status != FilterStatus::Ok) res.uhat_fallback = true;
    target(j) = rows[size_t(bi)].lg.dot(uhat.u);
    weights(j) = cfg.relaxation_weight(j, eval_h(cfg.barriers[size_t(bi)], x),
                                       /*depth_scaled=*/true);
    iters += uhat.stats.iterations;
  }

  auto strict_block = [&](QpProblem& qp, int nvars) {
    qp.A_in.setZero(s_cnt, nvars);
    qp.b_in.resize(s_cnt);
    for (int i = 0; i < s_cnt; ++i) {
      qp.A_in.block<1, 2>(i, 0) = rows[size_t(i)].lg;
      qp.b_in(i) = rows[size_t(i)].rhs();
    }
  };

  if (!explicit_chain) {
    // One coupled program over (u, delta_1..delta_k).
    QpProblem qp = deviation_program(cfg.lambda_u, u_star, weights, cfg.input_box);
    strict_block(qp, 2 + k_rel);
    qp.A_eq.setZero(k_rel, 2 + k_rel);
    qp.b_eq.resize(k_rel);
    for (int j = 0; j < k_rel; ++j) {
      qp.A_eq.block<1, 2>(j, 0) = rows[size_t(s_cnt + j)].lg;
      qp.A_eq(j, 2 + j) = 1.0;
      qp.b_eq(j) = target(j);
    }
    const QpSolution s = solve_qp(qp);
    res.u = cfg.input_box.clamp(Vec2(s.z.head<2>()));
    res.delta = s.z.tail(k_rel);
    res.status = to_status(s.status);
    res.stats = {iters + s.iterations, s.kkt_residual};
    res.hdot = rates_at(rows, res.u);
    return res;
  }

  // Sequential stages with earlier slacks frozen.
  std::vector<HierarchyStage> frozen;
  Vec2 u_cur = Vec2::Zero();
  FilterStatus status = FilterStatus::StrictInfeasible;
  double residual = std::numeric_limits<double>::infinity();
  int completed = 0;
  for (int j = 0; j < k_rel; ++j) {
    QpProblem qp = deviation_program(
        cfg.lambda_u, u_star, Eigen::VectorXd::Constant(1, weights(j)),
        cfg.input_box);
    strict_block(qp, 3);
    const int n_eq = static_cast<int>(frozen.size()) + 1;
    qp.A_eq.setZero(n_eq, 3);
    qp.b_eq.resize(n_eq);
    for (int i = 0; i < n_eq - 1; ++i) {
      qp.A_eq.block<1, 2>(i, 0) = frozen[size_t(i)].lg;
      qp.b_eq(i) = frozen[size_t(i)].rhs;
    }
    qp.A_eq.block<1, 2>(n_eq - 1, 0) = rows[size_t(s_cnt + j)].lg;
    qp.A_eq(n_eq - 1, 2) = 1.0;
    qp.b_eq(n_eq - 1) = target(j);

    const QpSolution s = solve_qp(qp);
    iters += s.iterations;
    if (s.status != QpStatus::Optimal) {
      if (j == 0) {
        // even the first stage failed: strict tier itself is blocked
        res.u = cfg.input_box.clamp(Vec2(s.z.head<2>()));
        res.status = FilterStatus::StrictInfeasible;
        res.stats = {iters, s.kkt_residual};
        res.hdot = rates_at(rows, res.u);
        return res;
      }
      res.stage_aborted = true;
      break;
    }
    u_cur = cfg.input_box.clamp(Vec2(s.z.head<2>()));
    res.delta(j) = s.z(2);
    frozen.push_back({rows[size_t(s_cnt + j)].lg, target(j) - res.delta(j)});
    status = FilterStatus::Ok;
    residual = s.kkt_residual;
    completed = j + 1;
  }
  // slacks implied by the final input for stages that never ran
  for (int j = completed; j < k_rel; ++j)
    res.delta(j) = target(j) - rows[size_t(s_cnt + j)].lg.dot(u_cur);
  res.u = u_cur;
  res.status = status;
  res.stats = {iters, residual};
  res.hdot = rates_at(rows, res.u);
  return res;
}

}  // namespace filter_detail

// Slack tied to the stand-alone rate of the relaxed barrier (free sign).
inline FilterResult h_cbf_qp(const RomDynamics& dyn, const Vec2& u_star,
                             const State& x, const FilterConfig& cfg) {
  if (cfg.relaxed_count() != 1)
    throw InvalidConfig("h_cbf_qp needs exactly one relaxed barrier");
  return filter_detail::solve_hierarchy(cfg, dyn, u_star, x, false);
}

inline FilterResult ih_cbf_qp(const RomDynamics& dyn, const Vec2& u_star,
                              const State& x, const FilterConfig& cfg) {
  return filter_detail::solve_hierarchy(cfg, dyn, u_star, x, false);
}

inline FilterResult eh_cbf_qp(const RomDynamics& dyn, const Vec2& u_star,
                              const State& x, const FilterConfig& cfg) {
  return filter_detail::solve_hierarchy(cfg, dyn, u_star, x, true);
}

inline FilterResult apply_filter(const RomDynamics& dyn, const Vec2& u_star,
                                 const State& x, const FilterConfig& cfg) {
  cfg.validate();
  switch (cfg.mode) {
    case FilterMode::Single:
      return cbf_qp_single(dyn, u_star, x, cfg.barriers.front(), cfg);
    case FilterMode::MultiStrict:
      return cbf_qp_multi(dyn, u_star, x, cfg);
    case FilterMode::Relaxed:
      return r_cbf_qp(dyn, u_star, x, cfg);
    case FilterMode::Hierarchical:
      return h_cbf_qp(dyn, u_star, x, cfg);
    case FilterMode::ImplicitHierarchical:
      return ih_cbf_qp(dyn, u_star, x, cfg);
    case FilterMode::ExplicitHierarchical:
      return eh_cbf_qp(dyn, u_star, x, cfg);
  }
  throw InvalidConfig("unknown filter mode");
}

}  // namespace hcbf
