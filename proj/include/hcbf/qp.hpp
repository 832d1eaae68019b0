#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hcbf/errors.hpp"

namespace hcbf {

enum class QpStatus { Optimal, Infeasible, MaxIter };

//   min 0.5 z'Hz + f'z
//   s.t. A_in z >= b_in,  A_eq z = b_eq,  lb <= z <= ub
//
// H must be symmetric PSD. Empty matrices/vectors stand for "no such
// constraints"; lb/ub entries may be +-inf.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int vars() const { return static_cast<int>(H.rows()); }

  static QpProblem least_deviation(const Eigen::VectorXd& target) {
    QpProblem p;
    const int n = static_cast<int>(target.size());
    p.H = 2.0 * Eigen::MatrixXd::Identity(n, n);
    p.f = -2.0 * target;
    return p;
  }
};

// Multipliers are stacked as [A_in rows; A_eq rows; finite lb entries in
// ascending variable order; finite ub entries likewise].
struct QpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;
  QpStatus status = QpStatus::Infeasible;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

namespace qp_detail {

constexpr double kSymTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kFeasTol = 1e-9;     // infeasibility declared beyond this
constexpr double kEnterTol = 1e-10;   // violation needed to activate a row
constexpr double kDepRatio = 1e-11;   // normal treated as dependent below this
constexpr double kRegFloor = 1e-9;    // eigenvalue floor after regularization
constexpr int kMaxIter = 200;

// All inequalities (general rows first, then finite lb rows, then finite ub
// rows) in the form C z >= d. This ordering is also the multiplier layout
// after the equality block is spliced in.
struct Canonical {
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
};

inline Canonical canonical_inequalities(const QpProblem& p) {
  const int n = p.vars();
  const int mi = static_cast<int>(p.A_in.rows());
  std::vector<int> lo_idx, hi_idx;
  if (p.lb.size() > 0)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(p.lb(j))) lo_idx.push_back(j);
  if (p.ub.size() > 0)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(p.ub(j))) hi_idx.push_back(j);

  Canonical c;
  const int m = mi + static_cast<int>(lo_idx.size() + hi_idx.size());
  c.C.setZero(m, n);
  c.d.setZero(m);
  if (mi > 0) {
    c.C.topRows(mi) = p.A_in;
    c.d.head(mi) = p.b_in;
  }
  int r = mi;
  for (int j : lo_idx) {
    c.C(r, j) = 1.0;
    c.d(r) = p.lb(j);
    ++r;
  }
  for (int j : hi_idx) {
    c.C(r, j) = -1.0;
    c.d(r) = -p.ub(j);
    ++r;
  }
  return c;
}

inline void validate(const QpProblem& p) {
  const int n = p.vars();
  if (p.H.cols() != n || p.f.size() != n)
    throw InvalidProblem("qp: H/f dimension mismatch");
  if (p.A_in.rows() != p.b_in.size())
    throw InvalidProblem("qp: A_in rows != b_in size");
  if (p.A_in.rows() > 0 && p.A_in.cols() != n)
    throw InvalidProblem("qp: A_in column count != n");
  if (p.A_eq.rows() != p.b_eq.size())
    throw InvalidProblem("qp: A_eq rows != b_eq size");
  if (p.A_eq.rows() > 0 && p.A_eq.cols() != n)
    throw InvalidProblem("qp: A_eq column count != n");
  if (p.lb.size() > 0 && p.lb.size() != n)
    throw InvalidProblem("qp: lb size != n");
  if (p.ub.size() > 0 && p.ub.size() != n)
    throw InvalidProblem("qp: ub size != n");
  if (p.lb.size() > 0 && p.ub.size() > 0)
    for (int j = 0; j < n; ++j)
      if (p.lb(j) > p.ub(j)) throw InvalidProblem("qp: lb > ub");

  const double hmax = n > 0 ? p.H.cwiseAbs().maxCoeff() : 0.0;
  const double scale = std::max(1.0, hmax);
  if (n > 0) {
    if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
      throw InvalidProblem("qp: H not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (p.H + p.H.transpose()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTol * scale)
      throw InvalidProblem("qp: H indefinite");
  }
}

}  // namespace qp_detail

// Max of stationarity norm, primal feasibility violation, dual feasibility
// violation, and complementarity products. Zero exactly at a KKT point.
inline double kkt_residual(const QpProblem& p, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& lambda) {
  using namespace qp_detail;
  const int n = p.vars();
  if (z.size() != n) throw InvalidProblem("kkt: z size != n");
  const Canonical cano = canonical_inequalities(p);
  const int mc = static_cast<int>(cano.C.rows());
  const int mi = static_cast<int>(p.A_in.rows());
  const int me = static_cast<int>(p.A_eq.rows());
  if (lambda.size() != mc + me)
    throw InvalidProblem("kkt: lambda size mismatch");

  // lambda layout: [A_in; A_eq; lb; ub] -> canonical rows are [A_in; lb; ub]
  Eigen::VectorXd lam_c(mc);
  lam_c.head(mi) = lambda.head(mi);
  lam_c.tail(mc - mi) = lambda.tail(mc - mi);
  const Eigen::VectorXd lam_e = lambda.segment(mi, me);

  Eigen::VectorXd grad = p.H * z + p.f;
  if (mc > 0) grad -= cano.C.transpose() * lam_c;
  if (me > 0) grad -= p.A_eq.transpose() * lam_e;
  double res = grad.norm();

  if (me > 0)
    res = std::max(res, (p.A_eq * z - p.b_eq).cwiseAbs().maxCoeff());
  if (mc > 0) {
    const Eigen::VectorXd slack = cano.C * z - cano.d;
    res = std::max(res, std::max(0.0, -slack.minCoeff()));
    res = std::max(res, std::max(0.0, -lam_c.minCoeff()));
    res = std::max(res, (lam_c.array() * slack.array()).abs().maxCoeff());
  }
  return res;
}

namespace qp_detail {

struct Reduced {
  Eigen::VectorXd z0;   // particular solution of the equalities
  Eigen::MatrixXd N;    // null-space basis, n x r
  bool consistent = true;
};

inline Reduced eliminate_equalities(const QpProblem& p) {
  Reduced red;
  const int n = p.vars();
  if (p.A_eq.rows() == 0) {
    red.z0 = Eigen::VectorXd::Zero(n);
    red.N = Eigen::MatrixXd::Identity(n, n);
    return red;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(p.A_eq);
  red.z0 = cod.solve(p.b_eq);
  const double scale =
      std::max(1.0, p.b_eq.size() > 0 ? p.b_eq.cwiseAbs().maxCoeff() : 0.0);
  if ((p.A_eq * red.z0 - p.b_eq).cwiseAbs().maxCoeff() > kFeasTol * scale) {
    red.consistent = false;
    return red;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(p.A_eq);
  const int r = static_cast<int>(lu.dimensionOfKernel());
  if (r == 0) {
    red.N.resize(n, 0);
  } else {
    red.N = lu.kernel();
    for (int c = 0; c < red.N.cols(); ++c) red.N.col(c).normalize();
  }
  return red;
}

// Equality multipliers from stationarity, least squares.
inline Eigen::VectorXd recover_eq_multipliers(const QpProblem& p,
                                              const Eigen::VectorXd& z,
                                              const Canonical& cano,
                                              const Eigen::VectorXd& lam_c) {
  if (p.A_eq.rows() == 0) return Eigen::VectorXd();
  Eigen::VectorXd g = p.H * z + p.f;
  if (cano.C.rows() > 0) g -= cano.C.transpose() * lam_c;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
      Eigen::MatrixXd(p.A_eq.transpose()));
  return cod.solve(g);
}

inline Eigen::VectorXd assemble_lambda(const QpProblem& p,
                                       const Eigen::VectorXd& lam_c,
                                       const Eigen::VectorXd& lam_e) {
  const int mi = static_cast<int>(p.A_in.rows());
  const int me = static_cast<int>(p.A_eq.rows());
  const int mc = static_cast<int>(lam_c.size());
  Eigen::VectorXd out(mc + me);
  out.head(mi) = lam_c.head(mi);
  if (me > 0) out.segment(mi, me) = lam_e;
  out.tail(mc - mi) = lam_c.tail(mc - mi);
  return out;
}

// Re-solve the KKT system on the final active set with the unregularized
// Hessian; adopted only when it is feasible with valid multipliers and does
// not worsen the residual.
inline bool polish(const QpProblem& p, const Canonical& cano,
                   const std::vector<int>& active, QpSolution& sol) {
  const int n = p.vars();
  const int me = static_cast<int>(p.A_eq.rows());
  const int k = static_cast<int>(active.size());
  const int m = me + k;

  Eigen::MatrixXd K(n + m, n + m);
  K.setZero();
  K.topLeftCorner(n, n) = 0.5 * (p.H + p.H.transpose());
  Eigen::MatrixXd A_act(m, n);
  Eigen::VectorXd b_act(m);
  if (me > 0) {
    A_act.topRows(me) = p.A_eq;
    b_act.head(me) = p.b_eq;
  }
  for (int i = 0; i < k; ++i) {
    A_act.row(me + i) = cano.C.row(active[size_t(i)]);
    b_act(me + i) = cano.d(active[size_t(i)]);
  }
  if (m > 0) {
    K.topRightCorner(n, m) = A_act.transpose();
    K.bottomLeftCorner(m, n) = A_act;
  }
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = -p.f;
  rhs.tail(m) = b_act;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
  const Eigen::VectorXd sol_vec = cod.solve(rhs);
  const Eigen::VectorXd z = sol_vec.head(n);
  const Eigen::VectorXd mult = -sol_vec.tail(m);

  const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
  if (me > 0 &&
      (p.A_eq * z - p.b_eq).cwiseAbs().maxCoeff() > kFeasTol * scale)
    return false;
  if (cano.C.rows() > 0 &&
      ((cano.C * z - cano.d).minCoeff() < -kFeasTol * scale))
    return false;
  Eigen::VectorXd lam_c = Eigen::VectorXd::Zero(cano.C.rows());
  for (int i = 0; i < k; ++i) {
    const double li = mult(me + i);
    if (li < -kFeasTol) return false;
    lam_c(active[size_t(i)]) = std::max(0.0, li);
  }
  const Eigen::VectorXd lam_e = mult.head(me);
  const Eigen::VectorXd lambda = assemble_lambda(p, lam_c, lam_e);
  const double res = kkt_residual(p, z, lambda);
  if (res <= sol.kkt_residual) {
    sol.z = z;
    sol.lambda = lambda;
    sol.kkt_residual = res;
    return true;
  }
  return false;
}

}  // namespace qp_detail

// Dense dual active-set solve. Equalities are eliminated through a
// null-space basis; inequalities are activated one at a time, always the
// most violated row (lowest index on ties). An incompatible row whose dual
// step is unbounded is an exact infeasibility certificate.
inline QpSolution solve_qp(const QpProblem& p) {
  using namespace qp_detail;
  validate(p);

  const int n = p.vars();
  const Canonical cano = canonical_inequalities(p);
  const int mc = static_cast<int>(cano.C.rows());
  QpSolution sol;

  const Reduced red = eliminate_equalities(p);
  if (!red.consistent) {
    sol.status = QpStatus::Infeasible;
    sol.z = Eigen::VectorXd::Zero(n);
    sol.lambda = Eigen::VectorXd::Zero(mc + p.A_eq.rows());
    return sol;
  }
  const int r = static_cast<int>(red.N.cols());

  // Equalities pin the point entirely: feasibility check only.
  if (r == 0) {
    sol.z = red.z0;
    const double scale = std::max(1.0, sol.z.cwiseAbs().maxCoeff());
    if (mc > 0 && (cano.C * sol.z - cano.d).minCoeff() < -kFeasTol * scale) {
      sol.status = QpStatus::Infeasible;
      sol.lambda = Eigen::VectorXd::Zero(mc + p.A_eq.rows());
      return sol;
    }
    const Eigen::VectorXd lam_c = Eigen::VectorXd::Zero(mc);
    const Eigen::VectorXd lam_e = recover_eq_multipliers(p, sol.z, cano, lam_c);
    sol.lambda = assemble_lambda(p, lam_c, lam_e);
    sol.status = QpStatus::Optimal;
    sol.kkt_residual = kkt_residual(p, sol.z, sol.lambda);
    return sol;
  }

  // Reduced strictly convex problem; a singular reduced Hessian (zero-cost
  // feasibility programs, zero-weight variables) gets an eigenvalue floor.
  Eigen::MatrixXd Hr = red.N.transpose() * (0.5 * (p.H + p.H.transpose())) *
                       red.N;
  Hr = 0.5 * (Hr + Hr.transpose());
  const Eigen::VectorXd fr = red.N.transpose() * (p.H * red.z0 + p.f);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hr,
                                                      Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double floor = kRegFloor * std::max(1.0, lmax);
    if (lmin < floor)
      Hr += (floor - lmin) * Eigen::MatrixXd::Identity(r, r);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Hr);
  const Eigen::MatrixXd Cr = mc > 0 ? Eigen::MatrixXd(cano.C * red.N)
                                    : Eigen::MatrixXd(0, r);
  const Eigen::VectorXd dr =
      mc > 0 ? Eigen::VectorXd(cano.d - cano.C * red.z0) : Eigen::VectorXd();

  Eigen::VectorXd y = -llt.solve(fr);
  std::vector<int> W;        // active rows, ascending
  Eigen::VectorXd lamW(0);   // multipliers aligned with W
  int iter = 0;

  auto map_back = [&](QpStatus status) {
    sol.status = status;
    sol.z = red.z0 + red.N * y;
    Eigen::VectorXd lam_c = Eigen::VectorXd::Zero(mc);
    for (size_t i = 0; i < W.size(); ++i)
      lam_c(W[i]) = std::max(0.0, lamW(static_cast<int>(i)));
    const Eigen::VectorXd lam_e = recover_eq_multipliers(p, sol.z, cano, lam_c);
    sol.lambda = assemble_lambda(p, lam_c, lam_e);
    sol.iterations = iter;
    if (status != QpStatus::Infeasible)
      sol.kkt_residual = kkt_residual(p, sol.z, sol.lambda);
  };

  const double dscale =
      std::max(1.0, mc > 0 ? dr.cwiseAbs().maxCoeff() : 0.0);

  for (;;) {
    // most violated inactive row
    int enter = -1;
    double worst = -kEnterTol * dscale;
    if (mc > 0) {
      const Eigen::VectorXd s = Cr * y - dr;
      for (int i = 0; i < mc; ++i) {
        if (std::binary_search(W.begin(), W.end(), i)) continue;
        if (s(i) < worst) {
          worst = s(i);
          enter = i;
        }
      }
    }
    if (enter < 0) {
      map_back(QpStatus::Optimal);
      polish(p, cano, W, sol);
      return sol;
    }

    const Eigen::VectorXd cp = Cr.row(enter).transpose();
    double lam_p = 0.0;
    for (;;) {
      if (++iter > kMaxIter) {
        map_back(QpStatus::MaxIter);
        return sol;
      }
      const int k = static_cast<int>(W.size());
      const Eigen::VectorXd u = llt.solve(cp);
      Eigen::VectorXd zdir = u;
      Eigen::VectorXd rdir(k);
      if (k > 0) {
        Eigen::MatrixXd CW(k, r);
        for (int i = 0; i < k; ++i) CW.row(i) = Cr.row(W[size_t(i)]);
        const Eigen::MatrixXd V = llt.solve(CW.transpose());
        const Eigen::MatrixXd B = CW * V;
        rdir = B.ldlt().solve(CW * u);
        zdir = u - V * rdir;
      }
      const double czp = cp.dot(zdir);
      const double cup = cp.dot(u);
      const bool independent = czp > kDepRatio * std::max(1.0, cup);

      // max dual step before an active multiplier hits zero
      double t1 = std::numeric_limits<double>::infinity();
      int block = -1;
      for (int i = 0; i < k; ++i) {
        if (rdir(i) > kDepRatio) {
          const double ti = lamW(i) / rdir(i);
          if (ti < t1) {
            t1 = ti;
            block = i;
          }
        }
      }

      if (!independent) {
        if (!std::isfinite(t1)) {
          map_back(QpStatus::Infeasible);
          return sol;
        }
        lamW -= t1 * rdir;
        lam_p += t1;
        W.erase(W.begin() + block);
        Eigen::VectorXd nl(k - 1);
        for (int i = 0, j = 0; i < k; ++i)
          if (i != block) nl(j++) = lamW(i);
        lamW = nl;
        continue;
      }

      const double sp = cp.dot(y) - dr(enter);
      const double t2 = -sp / czp;
      const double t = std::min(t1, t2);
      y += t * zdir;
      if (k > 0) lamW -= t * rdir;
      lam_p += t;

      if (t2 <= t1) {
        // activate the entering row, keep W sorted
        const auto pos = std::lower_bound(W.begin(), W.end(), enter);
        const int at = static_cast<int>(pos - W.begin());
        W.insert(pos, enter);
        Eigen::VectorXd nl(k + 1);
        nl.head(at) = lamW.head(at);
        nl(at) = lam_p;
        nl.tail(k - at) = lamW.tail(k - at);
        lamW = nl;
        break;
      }
      W.erase(W.begin() + block);
      Eigen::VectorXd nl(k - 1);
      for (int i = 0, j = 0; i < k; ++i)
        if (i != block) nl(j++) = lamW(i);
      lamW = nl;
    }
  }
}

}  // namespace hcbf
