#include "sgraphs/evaluation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace sgraphs;

namespace {

Trajectory line_traj(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 3.0);
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({0.5 * i, Pose3::from_yaw(0.01 * i, Vec3(d(rng), d(rng), 0.3 * d(rng)))});
  return t;
}

// Closed-form rigid alignment via the unit quaternion of the largest
// eigenvalue of the 4x4 cross-covariance matrix.
Pose3 horn_alignment(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  Vec3 ms = Vec3::Zero(), md = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) ms += src[i], md += dst[i];
  ms /= src.size();
  md /= dst.size();
  Mat3 S = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) S += (src[i] - ms) * (dst[i] - md).transpose();
  Eigen::Matrix4d N;
  N << S(0, 0) + S(1, 1) + S(2, 2), S(1, 2) - S(2, 1), S(2, 0) - S(0, 2), S(0, 1) - S(1, 0),
      S(1, 2) - S(2, 1), S(0, 0) - S(1, 1) - S(2, 2), S(0, 1) + S(1, 0), S(2, 0) + S(0, 2),
      S(2, 0) - S(0, 2), S(0, 1) + S(1, 0), -S(0, 0) + S(1, 1) - S(2, 2), S(1, 2) + S(2, 1),
      S(0, 1) - S(1, 0), S(2, 0) + S(0, 2), S(1, 2) + S(2, 1), -S(0, 0) - S(1, 1) + S(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  const Eigen::Quaterniond q(v(0), v(1), v(2), v(3));
  return {q.normalized(), md - q.normalized() * ms};
}

}  // namespace

TEST(Ate, IdenticalIsZero) {
  std::mt19937_64 rng(51);
  const auto t = line_traj(50, rng);
  EXPECT_LT(ate(t, t).rmse, 1e-12);
}

TEST(Ate, RigidTransformAbsorbed) {
  std::mt19937_64 rng(52);
  const auto truth = line_traj(50, rng);
  const Pose3 T = Pose3::from_rotation_translation(Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Vec3(0.3, 0.2, 1).normalized())),
                                                   Vec3(4, -3, 2));
  Trajectory est = truth;
  for (auto& p : est) p.pose = compose(T, p.pose);
  const auto rep = ate(est, truth);
  EXPECT_LT(rep.rmse, 1e-9);
  EXPECT_LT((rep.alignment.matrix() - inverse(T).matrix()).norm(), 1e-9);
}

TEST(Ate, MatchesHornOracleUnderNoise) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n(0.0, 0.1);
  const auto truth = line_traj(1000, rng);
  Trajectory est = truth;
  for (auto& p : est) p.pose.translation += Vec3(n(rng), n(rng), n(rng));
  std::vector<Vec3> s, d;
  for (std::size_t i = 0; i < est.size(); ++i) s.push_back(est[i].pose.translation), d.push_back(truth[i].pose.translation);
  const Pose3 A = horn_alignment(s, d);
  double se = 0;
  for (std::size_t i = 0; i < s.size(); ++i) se += (A.transform_point(s[i]) - d[i]).squaredNorm();
  const double oracle = std::sqrt(se / s.size());
  const auto rep = ate(est, truth);
  EXPECT_NEAR(rep.rmse, oracle, 1e-9);
  // Roughly sigma * sqrt(3).
  EXPECT_NEAR(rep.rmse, 0.1 * std::sqrt(3.0), 0.1 * 0.1 * std::sqrt(3.0));
}

TEST(Ate, TimestampAssociation) {
  std::mt19937_64 rng(54);
  const auto truth = line_traj(20, rng);
  Trajectory est;
  for (std::size_t i = 0; i < truth.size(); i += 2) est.push_back({truth[i].timestamp + 0.01, truth[i].pose});
  est.push_back({1000.0, Pose3::from_yaw(0, Vec3(100, 100, 100))});  // no partner, ignored
  const auto rep = ate(est, truth);
  EXPECT_EQ(rep.errors.size(), 10u);
  EXPECT_LT(rep.rmse, 1e-9);
  EXPECT_THROW(ate(Trajectory(est.begin(), est.begin() + 2), truth), std::invalid_argument);
}

TEST(Align, UmeyamaVsHorn) {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> s, d;
    const Pose3 T = test::random_pose(rng);
    for (int i = 0; i < 30; ++i) {
      s.emplace_back(n(rng), n(rng), n(rng));
      d.push_back(T.transform_point(s.back()) + 0.05 * Vec3(n(rng), n(rng), n(rng)));
    }
    EXPECT_LT((align_rigid(s, d).matrix() - horn_alignment(s, d).matrix()).norm(), 1e-9);
  }
}

TEST(MapRmse, IdenticalAndShifted) {
  std::vector<Vec3> plane;
  for (double y = 0; y <= 5; y += 0.02)
    for (double z = 0; z <= 2; z += 0.02) plane.emplace_back(1.0, y, z);
  const auto same = map_rmse(plane, plane);
  ASSERT_TRUE(same.rmse);
  EXPECT_EQ(*same.rmse, 0.0);
  EXPECT_EQ(same.matched_fraction, 1.0);
  std::vector<Vec3> shifted;
  for (const auto& p : plane) shifted.push_back(p + Vec3(0.05, 0, 0));
  const auto rep = map_rmse(shifted, plane);
  ASSERT_TRUE(rep.rmse);
  EXPECT_NEAR(*rep.rmse, 0.05, 0.005);
}

TEST(MapRmse, CapAndBruteForce) {
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> u(0, 4);
  std::vector<Vec3> truth, est;
  for (int i = 0; i < 300; ++i) truth.emplace_back(u(rng), u(rng), u(rng));
  for (int i = 0; i < 200; ++i) est.emplace_back(u(rng) * 1.5, u(rng), u(rng));
  const double cap = 0.3;
  double se = 0;
  int matched = 0;
  for (const auto& p : est) {
    double best = 1e9;
    for (const auto& q : truth) best = std::min(best, (p - q).norm());
    if (best <= cap) se += best * best, ++matched;
  }
  const auto rep = map_rmse(est, truth, cap);
  ASSERT_TRUE(rep.rmse);
  EXPECT_NEAR(*rep.rmse, std::sqrt(se / matched), 1e-12);
  EXPECT_NEAR(rep.matched_fraction, matched / 200.0, 1e-12);
  const std::vector<Vec3> far{{100, 100, 100}};
  EXPECT_FALSE(map_rmse(far, truth, cap).rmse);
  EXPECT_THROW(map_rmse(std::vector<Vec3>{}, truth), std::invalid_argument);
}

TEST(RoomPr, Counting) {
  std::vector<TruthRoom> truth{{"A", RoomKind::FourWall, Vec2(0, 0), {}},
                               {"B", RoomKind::FourWall, Vec2(5, 0), {}},
                               {"C", RoomKind::TwoWallX, Vec2(10, 0), {}}};
  std::vector<DetectedRoom> det{{RoomKind::FourWall, Vec2(0.2, 0)},
                                {RoomKind::FourWall, Vec2(0.4, 0)},    // duplicate of A
                                {RoomKind::FourWall, Vec2(10.1, 0)},   // wrong kind for C
                                {RoomKind::TwoWallY, Vec2(10.2, 0.1)}};
  const auto rep = room_pr(det, truth);
  EXPECT_EQ(rep.overall.true_positives, 2);
  EXPECT_EQ(rep.overall.false_positives, 2);
  EXPECT_EQ(rep.overall.false_negatives, 1);
  EXPECT_EQ(rep.four_wall.true_positives, 1);
  EXPECT_EQ(rep.two_wall.true_positives, 1);
  EXPECT_DOUBLE_EQ(rep.overall.precision(), 0.5);
  EXPECT_DOUBLE_EQ(rep.overall.recall(), 2.0 / 3.0);
  ASSERT_EQ(rep.matches.size(), 2u);
  EXPECT_EQ(rep.matches[0].detected, 0);
  EXPECT_EQ(rep.matches[0].truth, 0);
}

TEST(RoomPr, EmptyIsPerfect) {
  const auto rep = room_pr(std::vector<DetectedRoom>{}, std::vector<TruthRoom>{});
  EXPECT_EQ(rep.overall.precision(), 1.0);
  EXPECT_EQ(rep.overall.recall(), 1.0);
}

TEST(Timing, ReportAndWindows) {
  TimingRecorder t;
  t.add("backend", 1.0);
  t.add("backend", 3.0);
  t.add("custom", 5.0);
  const auto rows = timing_report(t);
  ASSERT_GE(rows.size(), 4u);
  for (const auto& r : rows) {
    if (r.stage == "backend") {
      EXPECT_EQ(r.count, 2u);
      EXPECT_DOUBLE_EQ(*r.mean_ms, 2.0);
    } else if (r.stage == "room_segmentation") {
      EXPECT_EQ(r.count, 0u);
      EXPECT_FALSE(r.mean_ms);
    }
  }
  EXPECT_TRUE(t.samples("nothing").empty());
  const std::vector<double> s{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(window_means(s, 3), (std::vector<double>{2, 5}));
  EXPECT_TRUE(window_means(s, 10).empty());
}

TEST(Percentage, Improvement) {
  EXPECT_DOUBLE_EQ(percentage_improvement(0.2, 0.1), 50.0);
  EXPECT_DOUBLE_EQ(percentage_improvement(0.1, 0.2), -100.0);
}
