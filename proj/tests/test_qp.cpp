#include "dgopt/qp.hpp"

#include <gtest/gtest.h>

#include <cstring>

namespace dgopt {
namespace {

const Mat kNoRowsA = Mat::Zero(0, 1);
const Vec kNoB = Vec::Zero(0);

TEST(Qp, LinearOverInterval) {
  // min x over [0, 1] -> 0.
  const auto r = solve_qp_polytope(Mat::Zero(1, 1), Vec::Ones(1), kNoRowsA,
                                   kNoB, kNoRowsA, kNoB, Vec::Zero(1),
                                   Vec::Ones(1));
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.x(0), 0.0, 1e-7);
  EXPECT_NEAR(r.objective, 0.0, 1e-7);
}

TEST(Qp, LpDegenerateFaceLandsAtAnalyticCenter) {
  // min x1 + x2 s.t. x1 + x2 >= 1 over [0,1]^2. Objective 1.0; the whole
  // face is optimal and the interior-point iterates settle at its analytic
  // center (0.5, 0.5).
  Mat a(1, 2);
  a << -1, -1;
  Vec b(1);
  b << -1;
  const auto r = solve_qp_polytope(Mat::Zero(2, 2), Vec::Ones(2), a, b,
                                   Mat::Zero(0, 2), kNoB, Vec::Zero(2),
                                   Vec::Ones(2));
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-7);
  EXPECT_NEAR(r.x(0), 0.5, 1e-4);
  EXPECT_NEAR(r.x(1), 0.5, 1e-4);
}

TEST(Qp, ClampedParabola) {
  // min (x-3)^2 over [0,1] -> x = 1.
  const auto r = solve_qp_polytope(Mat::Constant(1, 1, 2.0),
                                   Vec::Constant(1, -6.0), kNoRowsA, kNoB,
                                   kNoRowsA, kNoB, Vec::Zero(1), Vec::Ones(1));
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
}

TEST(Qp, EqualityConstrainedToy) {
  // min x1^2 + x2^2 s.t. x1 + x2 = 1 over [0,1]^2: optimum 0.5 at (0.5, 0.5)
  // with equality multiplier -1 (stationarity 2x + y = 0).
  Mat c(1, 2);
  c << 1, 1;
  Vec d(1);
  d << 1;
  const auto r = solve_qp_polytope(2.0 * Mat::Identity(2, 2), Vec::Zero(2),
                                   Mat::Zero(0, 2), kNoB, c, d, Vec::Zero(2),
                                   Vec::Ones(2));
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective, 0.5, 1e-8);
  EXPECT_NEAR(r.x(0), 0.5, 1e-8);
  EXPECT_NEAR(r.y(0), -1.0, 1e-6);
}

TEST(Qp, CertifiesInfeasibility) {
  // x1 + x2 = 3 over [0,1]^2: the box forces the sum <= 2.
  Mat c(1, 2);
  c << 1, 1;
  Vec d(1);
  d << 3;
  const auto r = solve_qp_polytope(Mat::Zero(2, 2), Vec::Zero(2),
                                   Mat::Zero(0, 2), kNoB, c, d, Vec::Zero(2),
                                   Vec::Ones(2));
  EXPECT_EQ(r.status, SolveStatus::kInfeasible);
}

TEST(Qp, DeterministicBitwise) {
  Mat a(1, 3);
  a << 1, -2, 0.5;
  Vec b(1);
  b << 0.3;
  const Mat q = (Mat(3, 3) << 2, 0.1, 0, 0.1, 1, 0, 0, 0, 0.5).finished();
  const Vec c = (Vec(3) << -1, 0.2, 0.7).finished();
  const auto r1 = solve_qp_polytope(q, c, a, b, Mat::Zero(0, 3), kNoB,
                                    Vec::Constant(3, -2.0), Vec::Constant(3, 2.0));
  const auto r2 = solve_qp_polytope(q, c, a, b, Mat::Zero(0, 3), kNoB,
                                    Vec::Constant(3, -2.0), Vec::Constant(3, 2.0));
  ASSERT_EQ(r1.status, SolveStatus::kOptimal);
  EXPECT_EQ(0, std::memcmp(r1.x.data(), r2.x.data(), sizeof(double) * 3));
}

TEST(Qp, KktResidualsReported) {
  const auto r = solve_qp_polytope(Mat::Constant(1, 1, 2.0),
                                   Vec::Constant(1, -1.0), kNoRowsA, kNoB,
                                   kNoRowsA, kNoB, Vec::Zero(1), Vec::Ones(1));
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.x(0), 0.5, 1e-8);
  EXPECT_LT(r.stationarity, 1e-7);
  EXPECT_LT(r.mu, 1e-7);
}

}  // namespace
}  // namespace dgopt
