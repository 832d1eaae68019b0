// Test-only reference implementations, kept independent of the library's
// solve path: active-set enumeration for small QPs, refined grid search over
// the input box, bisection for minimal slacks, and finite differences for
// barrier gradients.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "hcbf/barriers.hpp"
#include "hcbf/qp.hpp"
#include "hcbf/rom.hpp"

namespace oracle {

using hcbf::Vec2;

// Platform-stable uniforms from raw mt19937_64 draws.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

struct EnumResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd z;
};

// Global minimum by enumerating candidate active sets (size <= n) and
// solving the corresponding KKT systems. Exponential and tiny on purpose.
inline EnumResult enumerate_qp(const hcbf::QpProblem& p, double tol = 1e-7) {
  const int n = p.vars();

  // canonical inequality rows: A_in, then finite lb, then finite ub
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < p.A_in.rows(); ++i) {
    rows.push_back(p.A_in.row(i));
    rhs.push_back(p.b_in(i));
  }
  for (int j = 0; j < n; ++j)
    if (p.lb.size() > 0 && std::isfinite(p.lb(j))) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r(j) = 1.0;
      rows.push_back(r);
      rhs.push_back(p.lb(j));
    }
  for (int j = 0; j < n; ++j)
    if (p.ub.size() > 0 && std::isfinite(p.ub(j))) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r(j) = -1.0;
      rows.push_back(r);
      rhs.push_back(-p.ub(j));
    }
  const int m = static_cast<int>(rows.size());
  const int me = static_cast<int>(p.A_eq.rows());

  EnumResult best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k > n) continue;

    Eigen::MatrixXd A(me + k, n);
    Eigen::VectorXd b(me + k);
    if (me > 0) {
      A.topRows(me) = p.A_eq;
      b.head(me) = p.b_eq;
    }
    int at = me;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) {
        A.row(at) = rows[size_t(i)];
        b(at) = rhs[size_t(i)];
        ++at;
      }

    const int ma = me + k;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + ma, n + ma);
    K.topLeftCorner(n, n) = p.H;
    if (ma > 0) {
      K.topRightCorner(n, ma) = A.transpose();
      K.bottomLeftCorner(ma, n) = A;
    }
    Eigen::VectorXd r(n + ma);
    r.head(n) = -p.f;
    r.tail(ma) = b;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
    const Eigen::VectorXd sol = cod.solve(r);
    if ((K * sol - r).cwiseAbs().maxCoeff() > tol) continue;  // inconsistent set
    const Eigen::VectorXd z = sol.head(n);
    const Eigen::VectorXd mult = -sol.tail(ma);

    bool ok = true;
    for (int i = 0; i < m && ok; ++i)
      if (rows[size_t(i)].dot(z) < rhs[size_t(i)] - tol) ok = false;
    if (me > 0 && (p.A_eq * z - p.b_eq).cwiseAbs().maxCoeff() > tol) ok = false;
    for (int i = 0; i < k && ok; ++i)
      if (mult(me + i) < -tol) ok = false;
    if (!ok) continue;

    const double obj = 0.5 * z.dot(p.H * z) + p.f.dot(z);
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
      best.z = z;
    }
  }
  return best;
}

// 41x41 feasibility scan of the joint constraint rows over the box.
inline bool grid_feasible(const std::vector<hcbf::CbfRow>& rows,
                          const hcbf::InputBox& box, int pts = 41,
                          double tol = 1e-9) {
  for (int i = 0; i < pts; ++i) {
    for (int j = 0; j < pts; ++j) {
      Vec2 u{box.lo(0) + (box.hi(0) - box.lo(0)) * i / (pts - 1),
             box.lo(1) + (box.hi(1) - box.lo(1)) * j / (pts - 1)};
      bool ok = true;
      for (const auto& r : rows)
        if (r.lg.dot(u) < r.rhs() - tol) {
          ok = false;
          break;
        }
      if (ok) return true;
    }
  }
  return false;
}

// Grid argmin of |u_star - u|^2 subject to the rows, refined around the best
// cell a few times. Resolution after three 41-point levels: ~2.5e-3 of the
// original span.
inline std::optional<Vec2> grid_project(const Vec2& u_star,
                                        const std::vector<hcbf::CbfRow>& rows,
                                        const hcbf::InputBox& box,
                                        int levels = 3, int pts = 41) {
  Vec2 lo = box.lo, hi = box.hi;
  std::optional<Vec2> best;
  for (int lvl = 0; lvl < levels; ++lvl) {
    double best_cost = std::numeric_limits<double>::infinity();
    std::optional<Vec2> found;
    for (int i = 0; i < pts; ++i) {
      for (int j = 0; j < pts; ++j) {
        Vec2 u{lo(0) + (hi(0) - lo(0)) * i / (pts - 1),
               lo(1) + (hi(1) - lo(1)) * j / (pts - 1)};
        if (!box.contains(u, 1e-12)) continue;
        bool ok = true;
        for (const auto& r : rows)
          if (r.lg.dot(u) < r.rhs() - 1e-9) {
            ok = false;
            break;
          }
        if (!ok) continue;
        const double c = (u - u_star).squaredNorm();
        if (c < best_cost) {
          best_cost = c;
          found = u;
        }
      }
    }
    if (!found) return best;  // nothing feasible at this refinement
    best = found;
    const Vec2 span = (hi - lo) / (pts - 1);
    lo = (*found - 2.0 * span).cwiseMax(box.lo);
    hi = (*found + 2.0 * span).cwiseMin(box.hi);
  }
  return best;
}

// Smallest slack d >= 0 making {strict rows, relaxed row + d, box} feasible,
// by bisection over a zero-cost feasibility program.
inline double bisect_min_slack(const std::vector<hcbf::CbfRow>& strict_rows,
                               const hcbf::CbfRow& relaxed,
                               const hcbf::InputBox& box,
                               double d_hi = 1e4, double width = 1e-9) {
  auto feasible = [&](double d) {
    hcbf::QpProblem qp;
    const int m = static_cast<int>(strict_rows.size()) + 1;
    qp.H = Eigen::MatrixXd::Zero(2, 2);
    qp.f = Eigen::VectorXd::Zero(2);
    qp.A_in.resize(m, 2);
    qp.b_in.resize(m);
    for (int i = 0; i + 1 < m; ++i) {
      qp.A_in.row(i) = strict_rows[size_t(i)].lg;
      qp.b_in(i) = strict_rows[size_t(i)].rhs();
    }
    qp.A_in.row(m - 1) = relaxed.lg;
    qp.b_in(m - 1) = relaxed.rhs() - d;
    qp.lb = box.lo;
    qp.ub = box.hi;
    return hcbf::solve_qp(qp).status == hcbf::QpStatus::Optimal;
  };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0, hi = d_hi;
  if (!feasible(hi)) return std::numeric_limits<double>::infinity();
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Central finite differences of h over the full state, step 1e-6.
inline Eigen::RowVector4d fd_gradient(const hcbf::BarrierSpec& b,
                                      const hcbf::State& x,
                                      double step = 1e-6) {
  Eigen::RowVector4d g;
  const Eigen::Vector4d xv = x.vec();
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d hi_v = xv, lo_v = xv;
    hi_v(i) += step;
    lo_v(i) -= step;
    g(i) = (hcbf::eval_h(b, hcbf::State::from_vec(hi_v)) -
            hcbf::eval_h(b, hcbf::State::from_vec(lo_v))) /
           (2.0 * step);
  }
  return g;
}

// Same differencing for the velocity-augmented surrogate.
inline Eigen::RowVector4d fd_gradient_ext(const hcbf::BarrierSpec& b,
                                          const hcbf::State& x, double k_v,
                                          double step = 1e-6) {
  Eigen::RowVector4d g;
  const Eigen::Vector4d xv = x.vec();
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d hi_v = xv, lo_v = xv;
    hi_v(i) += step;
    lo_v(i) -= step;
    g(i) = (hcbf::eval_h_ext(b, hcbf::State::from_vec(hi_v), k_v) -
            hcbf::eval_h_ext(b, hcbf::State::from_vec(lo_v), k_v)) /
           (2.0 * step);
  }
  return g;
}

}  // namespace oracle
