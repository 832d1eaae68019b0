#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "hcbf/errors.hpp"
#include "hcbf/sim.hpp"

namespace hcbf {

struct TuneWeights {
  double tracking = 1.0;     // w_i
  double final_goal = 1000.0;  // w_f
  double relaxation = 0.5;   // w_delta

  void validate() const {
    if (!(final_goal > tracking) || !(tracking > 0.0) || !(relaxation > 0.0))
      throw InvalidConfig("tune weights need w_f > w_i > 0 and w_delta > 0");
  }
};

struct TuneConfig {
  Vec2 mu{3.0, 1.5};
  Mat2 sigma{Mat2::Identity()};
  int sample_count = 50;
  Vec2 gamma0_range{0.0, 5.0};
  Vec2 delta_gamma_range{0.0, 2.5};
  TuneWeights weights;
  std::uint64_t seed = 0;
  ScenarioConfig base;
  Eigen::Vector2i costmap_grid{0, 0};  // zero disables the grid
  int workers = 1;

  void validate() const {
    weights.validate();
    if (sample_count < 1) throw InvalidConfig("sample_count must be positive");
    if (!(gamma0_range(0) < gamma0_range(1)) ||
        !(delta_gamma_range(0) < delta_gamma_range(1)))
      throw InvalidConfig("clip ranges must be non-empty");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw InvalidConfig("sigma must be symmetric");
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
    base.validate();
  }
};

struct TuneSample {
  double gamma0 = 0.0;
  double delta_gamma = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  double cost_offset = std::numeric_limits<double>::infinity();  // cost - min
  SimSummary summary;
  bool failed = false;
};

struct TuneReport {
  std::vector<TuneSample> samples;
  int best_index = -1;
  Vec2 best_pair{Vec2::Zero()};
  std::vector<TuneSample> costmap;  // optional regular-grid sweep
};

// r = sum_{i=1}^{N-1} w_i |e(i dt)| + w_f |e(T)| + w_delta sum_{i=1}^{N} d(i dt)
// with e the position tracking error and d the summed slack magnitudes.
inline double trajectory_cost(const SimTrace& trace, const TuneWeights& w) {
  if (!trace.complete || trace.records.size() < 2)
    throw InvalidTrace("trajectory cost needs a complete trace");
  const size_t n_rec = trace.records.size();  // N + 1 records
  double r = 0.0;
  for (size_t i = 1; i + 1 < n_rec; ++i)
    r += w.tracking *
         (trace.records[i].p_ref - trace.records[i].x.pos).norm();
  const auto& last = trace.records.back();
  r += w.final_goal * (last.p_ref - last.x.pos).norm();
  double dsum = 0.0;
  for (size_t i = 1; i < n_rec; ++i)
    dsum += trace.records[i].delta.cwiseAbs().sum();
  return r + w.relaxation * dsum;
}

namespace tune_detail {

// Lower Cholesky factor of a 2x2 PSD matrix, tolerant of semidefiniteness.
inline Mat2 chol2(const Mat2& sigma) {
  const double s11 = sigma(0, 0), s21 = sigma(1, 0), s22 = sigma(1, 1);
  constexpr double tol = 1e-12;
  if (s11 < -tol || s22 < -tol) throw InvalidConfig("sigma not PSD");
  Mat2 l = Mat2::Zero();
  l(0, 0) = std::sqrt(std::max(0.0, s11));
  if (l(0, 0) > tol) {
    l(1, 0) = s21 / l(0, 0);
  } else if (std::abs(s21) > tol) {
    throw InvalidConfig("sigma not PSD");
  }
  const double rem = s22 - l(1, 0) * l(1, 0);
  if (rem < -tol) throw InvalidConfig("sigma not PSD");
  l(1, 1) = std::sqrt(std::max(0.0, rem));
  return l;
}

// Box-Muller pair from 64-bit draws; avoids log(0) by shifting into (0,1].
inline Vec2 standard_normal_pair(std::mt19937_64& rng) {
  const double u1 =
      (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  const double mag = std::sqrt(-2.0 * std::log(u1));
  constexpr double two_pi = 6.283185307179586476925286766559;
  return {mag * std::cos(two_pi * u2), mag * std::sin(two_pi * u2)};
}

template <typename Fn>
inline void parallel_for(int count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(workers, count);
  pool.reserve(static_cast<size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

}  // namespace tune_detail

// Seeded draws from N(mu, sigma), clipped into the configured ranges.
inline std::vector<Vec2> sample_weights(const TuneConfig& cfg) {
  cfg.validate();
  const Mat2 l = tune_detail::chol2(cfg.sigma);
  std::mt19937_64 rng(cfg.seed);
  std::vector<Vec2> out;
  out.reserve(static_cast<size_t>(cfg.sample_count));
  for (int i = 0; i < cfg.sample_count; ++i) {
    const Vec2 z = tune_detail::standard_normal_pair(rng);
    Vec2 s = cfg.mu + l * z;
    s(0) = std::clamp(s(0), cfg.gamma0_range(0), cfg.gamma0_range(1));
    s(1) = std::clamp(s(1), cfg.delta_gamma_range(0), cfg.delta_gamma_range(1));
    out.push_back(s);
  }
  return out;
}

namespace tune_detail {

inline TuneSample evaluate_pair(const TuneConfig& cfg, double gamma0,
                                double delta_gamma) {
  TuneSample s;
  s.gamma0 = gamma0;
  s.delta_gamma = delta_gamma;
  ScenarioConfig sc = cfg.base;
  sc.filter.schedules = {WeightSchedule{gamma0, delta_gamma}};
  try {
    const SimTrace trace = run_scenario(sc);
    s.cost = trajectory_cost(trace, cfg.weights);
    s.summary = trace.summary;
  } catch (const NumericalBlowup&) {
    s.failed = true;
    s.cost = std::numeric_limits<double>::infinity();
  }
  return s;
}

inline void eliminate_offset(std::vector<TuneSample>& samples) {
  double rmin = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) rmin = std::min(rmin, s.cost);
  for (auto& s : samples)
    s.cost_offset = std::isfinite(s.cost)
                        ? s.cost - rmin
                        : std::numeric_limits<double>::infinity();
}

}  // namespace tune_detail

// One simulation per sampled pair; the argmin after offset elimination is
// the tuned weighting. Evaluation may fan out to a worker pool; results are
// ordered by sample index, so the report does not depend on scheduling.
inline TuneReport tune(const TuneConfig& cfg) {
  cfg.validate();
  if (cfg.base.filter.mode == FilterMode::Single ||
      cfg.base.filter.mode == FilterMode::MultiStrict)
    throw InvalidConfig("tuning needs a scheduled filter mode");

  const std::vector<Vec2> pairs = sample_weights(cfg);
  TuneReport report;
  report.samples.resize(pairs.size());
  tune_detail::parallel_for(
      static_cast<int>(pairs.size()), cfg.workers, [&](int i) {
        report.samples[size_t(i)] =
            tune_detail::evaluate_pair(cfg, pairs[size_t(i)](0), pairs[size_t(i)](1));
      });
  tune_detail::eliminate_offset(report.samples);

  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < report.samples.size(); ++i) {
    if (report.samples[i].cost < best) {
      best = report.samples[i].cost;
      report.best_index = static_cast<int>(i);
    }
  }
  if (report.best_index >= 0) {
    const auto& b = report.samples[size_t(report.best_index)];
    report.best_pair = {b.gamma0, b.delta_gamma};
  }

  if (cfg.costmap_grid(0) > 1 && cfg.costmap_grid(1) > 1) {
    const int n0 = cfg.costmap_grid(0);
    const int n1 = cfg.costmap_grid(1);
    report.costmap.resize(static_cast<size_t>(n0) * static_cast<size_t>(n1));
    tune_detail::parallel_for(n0 * n1, cfg.workers, [&](int idx) {
      const int i = idx / n1;
      const int j = idx % n1;
      const double g0 = cfg.gamma0_range(0) +
                        (cfg.gamma0_range(1) - cfg.gamma0_range(0)) * i /
                            (n0 - 1);
      const double dg = cfg.delta_gamma_range(0) +
                        (cfg.delta_gamma_range(1) - cfg.delta_gamma_range(0)) *
                            j / (n1 - 1);
      report.costmap[size_t(idx)] = tune_detail::evaluate_pair(cfg, g0, dg);
    });
    tune_detail::eliminate_offset(report.costmap);
  }
  return report;
}

}  // namespace hcbf
