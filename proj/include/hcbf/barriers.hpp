#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "hcbf/errors.hpp"
#include "hcbf/qp.hpp"
#include "hcbf/rom.hpp"

namespace hcbf {

// Parameters of the piecewise-log extended class-K function
//   a(h) = phi1*log(phi2*h + phi3) - phi1*log(phi3)   for h >= 0,
// odd-reflected for h < 0. All parameters strictly positive.
struct ClassKeParams {
  double phi1 = 1.0;
  double phi2 = 0.5;
  double phi3 = 0.1;

  void validate() const {
    if (!(phi1 > 0.0) || !(phi2 > 0.0) || !(phi3 > 0.0))
      throw InvalidConfig("class-K parameters must be strictly positive");
  }
};

inline double class_ke(const ClassKeParams& k, double h) {
  const double m = k.phi1 * std::log1p(k.phi2 * std::abs(h) / k.phi3);
  return h < 0.0 ? -m : m;
}

struct AffineHalfplane {
  Vec2 a{1.0, 0.0};  // h = a.p + b
  double b = 0.0;
};

struct CircularExclusion {
  Vec2 center{Vec2::Zero()};  // h = |p - center| - radius
  double radius = 1.0;
};

// One barrier h(p) over the position components, paired with its class-K
// decay bound.
struct BarrierSpec {
  std::variant<AffineHalfplane, CircularExclusion> shape;
  ClassKeParams alpha;

  static BarrierSpec halfplane(const Vec2& a, double b,
                               const ClassKeParams& k = {}) {
    return {AffineHalfplane{a, b}, k};
  }
  static BarrierSpec circle(const Vec2& center, double radius,
                            const ClassKeParams& k = {}) {
    return {CircularExclusion{center, radius}, k};
  }

  void validate() const {
    alpha.validate();
    if (const auto* hp = std::get_if<AffineHalfplane>(&shape)) {
      if (!(hp->a.norm() > 0.0))
        throw InvalidConfig("halfplane barrier with zero normal");
    } else {
      if (!(std::get<CircularExclusion>(shape).radius > 0.0))
        throw InvalidConfig("circular barrier with non-positive radius");
    }
  }
};

namespace barrier_detail {
constexpr double kCenterTol = 1e-9;
constexpr double kBoundaryTol = 1e-9;
}  // namespace barrier_detail

inline double eval_h(const BarrierSpec& b, const State& x) {
  if (const auto* hp = std::get_if<AffineHalfplane>(&b.shape))
    return hp->a.dot(x.pos) + hp->b;
  const auto& c = std::get<CircularExclusion>(b.shape);
  return (x.pos - c.center).norm() - c.radius;
}

// dh/dp; singular at a circle center.
inline Vec2 position_gradient(const BarrierSpec& b, const State& x) {
  if (const auto* hp = std::get_if<AffineHalfplane>(&b.shape)) return hp->a;
  const auto& c = std::get<CircularExclusion>(b.shape);
  const Vec2 rel = x.pos - c.center;
  const double d = rel.norm();
  if (d <= barrier_detail::kCenterTol)
    throw SingularGradient("barrier gradient at circle center");
  return rel / d;
}

// d2h/dp2; zero for halfplanes.
inline Mat2 position_hessian(const BarrierSpec& b, const State& x) {
  if (std::holds_alternative<AffineHalfplane>(b.shape)) return Mat2::Zero();
  const auto& c = std::get<CircularExclusion>(b.shape);
  const Vec2 rel = x.pos - c.center;
  const double d = rel.norm();
  if (d <= barrier_detail::kCenterTol)
    throw SingularGradient("barrier hessian at circle center");
  const Vec2 n = rel / d;
  return (Mat2::Identity() - n * n.transpose()) / d;
}

// Full-state gradient [dh/dp, 0, 0]; barriers depend on position only.
inline Eigen::RowVector4d eval_grad(const BarrierSpec& b, const State& x) {
  Eigen::RowVector4d g = Eigen::RowVector4d::Zero();
  g.head<2>() = position_gradient(b, x).transpose();
  return g;
}

struct LieDerivatives {
  double Lf = 0.0;
  Eigen::RowVector2d Lg{Eigen::RowVector2d::Zero()};
  double hdot(const Vec2& u) const { return Lf + Lg.dot(u); }
};

inline LieDerivatives lie_from_grad(const Eigen::RowVector4d& grad,
                                    const RomDynamics& dyn, const State& x) {
  LieDerivatives ld;
  ld.Lf = grad * dyn.drift(x);
  ld.Lg = grad * dyn.input_matrix(x);
  return ld;
}

inline LieDerivatives lie_derivatives(const BarrierSpec& b,
                                      const RomDynamics& dyn, const State& x) {
  return lie_from_grad(eval_grad(b, x), dyn, x);
}

// Velocity-augmented surrogate h_e = h + k_v * dh/dp . v. Position-only
// barriers have relative degree two under the double integrator; the
// surrogate restores input influence (L_g h_e = k_v * dh/dp for that model)
// and h_e >= 0 keeps h(t) >= exp(-t/k_v) h(0) along closed-loop solutions.
inline double eval_h_ext(const BarrierSpec& b, const State& x, double k_v) {
  return eval_h(b, x) + k_v * position_gradient(b, x).dot(x.vel);
}

inline Eigen::RowVector4d eval_grad_ext(const BarrierSpec& b, const State& x,
                                        double k_v) {
  const Vec2 gp = position_gradient(b, x);
  const Mat2 hess = position_hessian(b, x);
  Eigen::RowVector4d g;
  g.head<2>() = (gp + k_v * hess * x.vel).transpose();
  g.tail<2>() = k_v * gp.transpose();
  return g;
}

inline LieDerivatives lie_derivatives_ext(const BarrierSpec& b,
                                          const RomDynamics& dyn,
                                          const State& x, double k_v) {
  return lie_from_grad(eval_grad_ext(b, x, k_v), dyn, x);
}

// One filter constraint  Lg u >= -alpha(h_e) - Lf  built from the
// velocity-augmented barrier.
struct CbfRow {
  Eigen::RowVector2d lg{Eigen::RowVector2d::Zero()};
  double lf = 0.0;
  double alpha_he = 0.0;
  double rhs() const { return -alpha_he - lf; }
  double hdot(const Vec2& u) const { return lf + lg.dot(u); }
};

inline CbfRow cbf_row(const BarrierSpec& b, const RomDynamics& dyn,
                      const State& x, double k_v) {
  const LieDerivatives ld = lie_derivatives_ext(b, dyn, x, k_v);
  return {ld.Lg, ld.Lf, class_ke(b.alpha, eval_h_ext(b, x, k_v))};
}

enum class SetRegion {
  InteriorBoth,   // h1 > 0 and h2 > 0
  C1MinusCap,     // h1 > 0, h2 < 0 (the conflict regime)
  C2MinusCap,     // h1 < 0, h2 > 0
  OutsideUnion,   // both negative
  Boundary        // either value within tolerance of zero
};

inline SetRegion set_membership(const State& x, const BarrierSpec& h1,
                                const BarrierSpec& h2) {
  const double v1 = eval_h(h1, x);
  const double v2 = eval_h(h2, x);
  if (std::abs(v1) <= barrier_detail::kBoundaryTol ||
      std::abs(v2) <= barrier_detail::kBoundaryTol)
    return SetRegion::Boundary;
  if (v1 > 0.0) return v2 > 0.0 ? SetRegion::InteriorBoth : SetRegion::C1MinusCap;
  return v2 > 0.0 ? SetRegion::C2MinusCap : SetRegion::OutsideUnion;
}

// Smallest constant c >= 0 with h2(x) + c >= 0, defined on C1.
inline double epsilon_min(const State& x, const BarrierSpec& h1,
                          const BarrierSpec& h2) {
  if (eval_h(h1, x) < 0.0)
    throw EmptyConstantSet("epsilon_min outside C1");
  return std::max(0.0, -eval_h(h2, x));
}

struct CertificateResult {
  bool compatible = false;
  Vec2 witness{Vec2::Zero()};  // meaningful only when compatible
};

// Joint feasibility of all CBF constraints over the input box, decided by a
// zero-cost QP. Compatible comes with a feasible input witness.
inline CertificateResult conflict_certificate(const State& x,
                                              std::span<const BarrierSpec> bs,
                                              const RomDynamics& dyn,
                                              const InputBox& box,
                                              double k_v = 1.0) {
  if (bs.empty()) throw InvalidConfig("certificate needs at least one barrier");
  QpProblem qp;
  qp.H = Eigen::MatrixXd::Zero(2, 2);
  qp.f = Eigen::VectorXd::Zero(2);
  const int m = static_cast<int>(bs.size());
  qp.A_in.resize(m, 2);
  qp.b_in.resize(m);
  for (int i = 0; i < m; ++i) {
    const CbfRow row = cbf_row(bs[size_t(i)], dyn, x, k_v);
    qp.A_in.row(i) = row.lg;
    qp.b_in(i) = row.rhs();
  }
  qp.lb = box.lo;
  qp.ub = box.hi;
  const QpSolution s = solve_qp(qp);
  if (s.status == QpStatus::Optimal)
    return {true, Vec2(s.z)};
  return {false, Vec2::Zero()};
}

}  // namespace hcbf
