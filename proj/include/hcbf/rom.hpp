#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

namespace hcbf {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

// Planar second-order state x = [p; v].
struct State {
  Vec2 pos{Vec2::Zero()};
  Vec2 vel{Vec2::Zero()};

  Vec4 vec() const {
    Vec4 x;
    x << pos, vel;
    return x;
  }
  static State from_vec(const Vec4& x) { return {x.head<2>(), x.tail<2>()}; }
  bool finite() const { return pos.allFinite() && vel.allFinite(); }
};

// Per-axis input bounds, +-inf for unbounded axes.
struct InputBox {
  Vec2 lo{-std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  Vec2 hi{std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};

  static InputBox symmetric(double m) { return {{-m, -m}, {m, m}}; }
  static InputBox unbounded() { return {}; }

  bool contains(const Vec2& u, double tol = 0.0) const {
    return u(0) >= lo(0) - tol && u(0) <= hi(0) + tol &&
           u(1) >= lo(1) - tol && u(1) <= hi(1) + tol;
  }
  Vec2 clamp(const Vec2& u) const {
    return u.cwiseMax(lo).cwiseMin(hi);
  }
  bool bounded() const { return lo.allFinite() && hi.allFinite(); }
};

// Control-affine model xdot = f(x) + g(x) u.
struct RomDynamics {
  std::function<Vec4(const State&)> drift;          // f
  std::function<Mat42(const State&)> input_matrix;  // g
};

// f(x) = [v; 0], g(x) = [0; I2].
inline RomDynamics double_integrator() {
  RomDynamics dyn;
  dyn.drift = [](const State& x) {
    Vec4 f;
    f << x.vel, 0.0, 0.0;
    return f;
  };
  dyn.input_matrix = [](const State&) {
    Mat42 g = Mat42::Zero();
    g.block<2, 2>(2, 0) = Mat2::Identity();
    return g;
  };
  return dyn;
}

}  // namespace hcbf
