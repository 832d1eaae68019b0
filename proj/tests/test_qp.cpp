#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hcbf/qp.hpp"
#include "support/oracles.hpp"

using namespace hcbf;
using Catch::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem norm_min_2d() {
  // min |z|^2  ==  0.5 z' (2I) z
  QpProblem p;
  p.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  p.f = Eigen::VectorXd::Zero(2);
  return p;
}

double objective(const QpProblem& p, const Eigen::VectorXd& z) {
  return 0.5 * z.dot(p.H * z) + p.f.dot(z);
}

// Shape pinned by the oracle suite: n <= 4, up to 4 general rows, box
// bounds, feasible by construction.
QpProblem random_boxed_qp(std::mt19937_64& rng) {
  const int n = 1 + static_cast<int>(oracle::uniform01(rng) * 3.999);
  const int mi = static_cast<int>(oracle::uniform01(rng) * 4.999);
  QpProblem p;
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = oracle::uniform(rng, -1.0, 1.0);
  p.H = r.transpose() * r;
  Eigen::VectorXd zf(n);
  for (int i = 0; i < n; ++i) zf(i) = oracle::uniform(rng, -2.0, 2.0);
  if (oracle::uniform01(rng) < 0.5) {
    p.H += oracle::uniform(rng, 0.05, 1.0) * Eigen::MatrixXd::Identity(n, n);
    p.f.resize(n);
    for (int i = 0; i < n; ++i) p.f(i) = oracle::uniform(rng, -2.0, 2.0);
  } else {
    p.f = p.H * zf;  // keeps rank-deficient objectives bounded
  }
  p.A_in.resize(mi, n);
  p.b_in.resize(mi);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) p.A_in(i, j) = oracle::uniform(rng, -1.0, 1.0);
    p.b_in(i) = p.A_in.row(i).dot(zf) - oracle::uniform(rng, 0.0, 2.0);
  }
  p.lb.resize(n);
  p.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    p.lb(i) = zf(i) - oracle::uniform(rng, 0.1, 2.0);
    p.ub(i) = zf(i) + oracle::uniform(rng, 0.1, 2.0);
  }
  return p;
}

}  // namespace

TEST_CASE("projection onto a halfspace matches the hand KKT point") {
  QpProblem p = norm_min_2d();
  p.A_in.resize(1, 2);
  p.A_in << 1.0, 0.0;
  p.b_in.resize(1);
  p.b_in << 1.0;

  const QpSolution s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(s.z(0) == Approx(1.0).margin(1e-10));
  CHECK(s.z(1) == Approx(0.0).margin(1e-10));
  CHECK(s.lambda(0) == Approx(2.0).margin(1e-9));
  CHECK(s.kkt_residual <= 1e-8);

  // the same point evaluated through the public residual
  Eigen::VectorXd lam(1);
  lam << 2.0;
  Eigen::VectorXd z(2);
  z << 1.0, 0.0;
  CHECK(kkt_residual(p, z, lam) <= 1e-12);
}

TEST_CASE("unconstrained projection returns the target") {
  Eigen::VectorXd target(3);
  target << 0.3, -1.2, 4.0;
  const QpProblem p = QpProblem::least_deviation(target);
  const QpSolution s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK((s.z - target).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(kkt_residual(p, target, Eigen::VectorXd()) == 0.0);

  Eigen::VectorXd off = target;
  off(0) += 1.0;
  CHECK(kkt_residual(p, off, Eigen::VectorXd()) == Approx(2.0).margin(1e-12));
}

TEST_CASE("opposing halfspaces are reported infeasible") {
  QpProblem p = norm_min_2d();
  p.A_in.resize(2, 2);
  p.A_in << 1.0, 0.0, -1.0, 0.0;  // z1 >= 1 and z1 <= 0
  p.b_in.resize(2);
  p.b_in << 1.0, 0.0;
  CHECK(solve_qp(p).status == QpStatus::Infeasible);
}

TEST_CASE("problem validation rejects malformed data") {
  QpProblem p = norm_min_2d();
  p.f.resize(3);
  CHECK_THROWS_AS(solve_qp(p), InvalidProblem);

  p = norm_min_2d();
  p.H(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(solve_qp(p), InvalidProblem);

  p = norm_min_2d();
  p.H = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(solve_qp(p), InvalidProblem);

  p = norm_min_2d();
  p.lb = Eigen::VectorXd::Constant(2, 1.0);
  p.ub = Eigen::VectorXd::Constant(2, -1.0);
  CHECK_THROWS_AS(solve_qp(p), InvalidProblem);

  p = norm_min_2d();
  p.A_in.resize(1, 2);
  p.A_in << 1.0, 0.0;
  p.b_in.resize(2);  // row mismatch
  CHECK_THROWS_AS(solve_qp(p), InvalidProblem);
}

TEST_CASE("equality constraints are eliminated exactly") {
  // min |z - (2, 0)|^2 s.t. z1 + z2 = 1  ->  z = (1.5, -0.5)
  Eigen::VectorXd target(2);
  target << 2.0, 0.0;
  QpProblem p = QpProblem::least_deviation(target);
  p.A_eq.resize(1, 2);
  p.A_eq << 1.0, 1.0;
  p.b_eq.resize(1);
  p.b_eq << 1.0;
  const QpSolution s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(s.z(0) == Approx(1.5).margin(1e-9));
  CHECK(s.z(1) == Approx(-0.5).margin(1e-9));
  CHECK(s.kkt_residual <= 1e-8);

  // inconsistent equalities
  p.A_eq.resize(2, 2);
  p.A_eq << 1.0, 1.0, 1.0, 1.0;
  p.b_eq.resize(2);
  p.b_eq << 1.0, 2.0;
  CHECK(solve_qp(p).status == QpStatus::Infeasible);

  // equalities that pin the point entirely
  p.A_eq << 1.0, 0.0, 0.0, 1.0;
  p.b_eq << 0.25, -0.5;
  const QpSolution pinned = solve_qp(p);
  REQUIRE(pinned.status == QpStatus::Optimal);
  CHECK(pinned.z(0) == Approx(0.25));
  CHECK(pinned.z(1) == Approx(-0.5));
  CHECK(pinned.kkt_residual <= 1e-8);

  // pinned point conflicting with an inequality
  p.A_in.resize(1, 2);
  p.A_in << 1.0, 0.0;
  p.b_in.resize(1);
  p.b_in << 1.0;
  CHECK(solve_qp(p).status == QpStatus::Infeasible);
}

TEST_CASE("oracle equivalence over 500 random boxed QPs") {
  std::mt19937_64 rng(20240817);
  int solved = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const QpProblem p = random_boxed_qp(rng);
    const QpSolution s = solve_qp(p);
    const oracle::EnumResult ref = oracle::enumerate_qp(p);
    INFO("trial " << trial);
    REQUIRE(ref.feasible);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK(objective(p, s.z) == Approx(ref.objective).margin(1e-6));
    CHECK(s.kkt_residual <= 1e-8);
    ++solved;
  }
  CHECK(solved == 500);
}

TEST_CASE("argmin is invariant to positive cost scaling") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    QpProblem p = random_boxed_qp(rng);
    p.H += 0.1 * Eigen::MatrixXd::Identity(p.vars(), p.vars());
    const QpSolution a = solve_qp(p);
    QpProblem q = p;
    const double c = 137.5;
    q.H *= c;
    q.f *= c;
    const QpSolution b = solve_qp(q);
    REQUIRE(a.status == QpStatus::Optimal);
    REQUIRE(b.status == QpStatus::Optimal);
    CHECK((a.z - b.z).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("kkt_residual rejects mismatched multiplier vectors") {
  QpProblem p = norm_min_2d();
  p.A_in.resize(1, 2);
  p.A_in << 1.0, 0.0;
  p.b_in.resize(1);
  p.b_in << 1.0;
  Eigen::VectorXd z(2);
  z << 1.0, 0.0;
  Eigen::VectorXd lam(3);
  lam.setZero();
  CHECK_THROWS_AS(kkt_residual(p, z, lam), InvalidProblem);
}

TEST_CASE("zero-cost feasibility programs succeed through regularization") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(2, 2);
  p.f = Eigen::VectorXd::Zero(2);
  p.A_in.resize(2, 2);
  p.A_in << 1.0, 0.0, 0.0, 1.0;
  p.b_in.resize(2);
  p.b_in << 1.0, -3.0;
  p.lb = Eigen::VectorXd::Constant(2, -5.0);
  p.ub = Eigen::VectorXd::Constant(2, 5.0);
  const QpSolution s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(s.z(0) >= 1.0 - 1e-9);
  CHECK(s.z(1) >= -3.0 - 1e-9);
}
