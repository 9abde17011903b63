#include <doctest.h>

#include <set>
#include <sstream>

#include "edgeloc/pose_solver.hpp"
#include "support.hpp"

using namespace edgeloc;
using testing::rotationGapDeg;
using testing::translationGap;

namespace {

const CameraModeld kCam = testing::pinhole(500, 640, 480);
const RigidTransformd kTruth = RigidTransformd::FromRotationVector({0.2, -0.3, 0.1}, {15, -10, 420});

std::vector<Correspondence> exactCorrespondences(int n, std::mt19937_64& rng, const CameraModeld& cam = kCam) {
  std::uniform_real_distribution<double> u(-80, 80);
  std::vector<Correspondence> out;
  while (static_cast<int>(out.size()) < n) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng) * 0.5);
    const auto px = cam.project(kTruth * p);
    if (px && cam.inImage(*px)) out.push_back({p, *px, static_cast<int>(out.size())});
  }
  return out;
}

void addOutliers(std::vector<Correspondence>& c, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> x(0, 639), y(0, 479), u(-80, 80);
  for (int i = 0; i < n; ++i) c.push_back({{u(rng), u(rng), u(rng) * 0.5}, {x(rng), y(rng)}, -1});
}

}  // namespace

TEST_CASE("pnp_refine: fixed point, perturbed start and too few points") {
  std::mt19937_64 rng(1);
  const auto corrs = exactCorrespondences(6, rng);
  const RigidTransformd at = pnpRefine(corrs, kCam, kTruth);
  CHECK(translationGap(at, kTruth) < 1e-9);
  CHECK(rotationGapDeg(at, kTruth) < 1e-9);

  const RigidTransformd init = kTruth * perturbation({3, -2, 1.5}, {20, -12, 8});
  const RigidTransformd est = pnpRefine(corrs, kCam, init);
  CHECK(translationGap(est, kTruth) < 1e-6);
  CHECK(rotationGapDeg(est, kTruth) < 1e-6);

  CHECK_THROWS_AS(pnpRefine(std::span(corrs).first(3), kCam, kTruth), PreconditionError);
}

TEST_CASE("pnp_refine reports rank-deficient configurations") {
  std::vector<Correspondence> same(5, Correspondence{{1, 2, 3}, *kCam.project(kTruth * Eigen::Vector3d(1, 2, 3)), 0});
  CHECK_THROWS_AS(pnpRefine(same, kCam, kTruth), DegenerateConfigurationError);
}

TEST_CASE("pnp_refine works in distorted pixel space") {
  CameraModeld cam = kCam;
  cam.k1 = 0.1;
  cam.p2 = 0.002;
  std::mt19937_64 rng(2);
  const auto corrs = exactCorrespondences(12, rng, cam);
  const RigidTransformd est = pnpRefine(corrs, cam, kTruth * perturbation({2, 2, -2}, {10, 10, -10}));
  CHECK(translationGap(est, kTruth) < 1e-6);
  CHECK(rotationGapDeg(est, kTruth) < 1e-6);
}

TEST_CASE("pnp_refine never ends above its starting cost") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    auto corrs = exactCorrespondences(10, rng);
    addOutliers(corrs, 3, rng);
    const RigidTransformd init = kTruth * samplePosePerturbation(UncertaintyBox::Uniform(20, 3), rng());
    const auto cost = [&](const RigidTransformd& p) {
      double s = 0;
      for (const auto& c : corrs) s += std::pow(reprojectionError(c, kCam, p), 2);
      return s;
    };
    for (int iters : {1, 2, 5, 100}) CHECK(cost(pnpRefine(corrs, kCam, init, {iters, 1e-10})) <= cost(init) + 1e-9);
  }
}

TEST_CASE("reprojection error is infinite behind the camera") {
  const Correspondence c{{0, 0, -1000}, {320, 240}, 0};
  CHECK(std::isinf(reprojectionError(c, kCam, kTruth)));
}

TEST_CASE("ransac_pnp: outlier-free input") {
  std::mt19937_64 rng(4);
  const auto corrs = exactCorrespondences(40, rng);
  const PnpResult r = ransacPnp(corrs, kCam, kTruth * perturbation({1, -1, 2}, {8, 5, -6}));
  CHECK(r.inliers.size() == 40);
  CHECK(translationGap(r.pose, kTruth) < 1e-6);
  CHECK(rotationGapDeg(r.pose, kTruth) < 1e-6);
}

TEST_CASE("ransac_pnp: planted inliers among random outliers") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    auto corrs = exactCorrespondences(40, rng);
    addOutliers(corrs, 20, rng);
    RansacOptions opt;
    opt.rng_seed = seed;
    const RigidTransformd start = kTruth * samplePosePerturbation(UncertaintyBox::Uniform(30, 5), seed + 1000);
    const PnpResult r = ransacPnp(corrs, kCam, start, opt);
    const std::set<int> in(r.inliers.begin(), r.inliers.end());
    for (int i = 0; i < 40; ++i) CHECK(in.count(i) == 1);
    CHECK(translationGap(r.pose, kTruth) < 0.1);
    CHECK(rotationGapDeg(r.pose, kTruth) < 0.01);
  }
}

TEST_CASE("ransac_pnp rejects a consensus far outside the box") {
  std::mt19937_64 rng(5);
  const auto corrs = exactCorrespondences(40, rng);
  const RigidTransformd seed = kTruth * RigidTransformd::Translation({60, 0, 0});
  RansacOptions opt;
  opt.box = UncertaintyBox::Uniform(30, 5);
  CHECK_THROWS_AS(ransacPnp(corrs, kCam, seed, opt), NoConsensusError);
  CHECK_THROWS_AS(ransacPnp(std::span(corrs).first(3), kCam, kTruth), PreconditionError);
}

TEST_CASE("ransac_pnp needs max(6, 25%) inliers") {
  std::mt19937_64 rng(6);
  auto few = exactCorrespondences(5, rng);
  CHECK_THROWS_AS(ransacPnp(few, kCam, kTruth), NoConsensusError);
  auto sparse = exactCorrespondences(10, rng);
  addOutliers(sparse, 40, rng);
  CHECK_THROWS_AS(ransacPnp(sparse, kCam, kTruth), NoConsensusError);
}

TEST_CASE("ransac_pnp results honor the inlier bound, are reproducible and refit exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 77);
    auto corrs = exactCorrespondences(30, rng);
    std::normal_distribution<double> g(0, 0.7);
    for (auto& c : corrs) c.pixel += Eigen::Vector2d(g(rng), g(rng));
    addOutliers(corrs, 15, rng);
    RansacOptions opt;
    opt.rng_seed = seed;
    opt.reprojection_threshold_px = 3;
    const RigidTransformd start = kTruth * samplePosePerturbation(UncertaintyBox::Uniform(20, 3), seed);
    const PnpResult a = ransacPnp(corrs, kCam, start, opt), b = ransacPnp(corrs, kCam, start, opt);
    CHECK(a.pose.rotation().coeffs() == b.pose.rotation().coeffs());
    CHECK(a.pose.translation() == b.pose.translation());
    CHECK(a.inliers == b.inliers);
    const std::set<int> in(a.inliers.begin(), a.inliers.end());
    double sum = 0;
    for (int i = 0; i < static_cast<int>(corrs.size()); ++i) {
      const double e = reprojectionError(corrs[i], kCam, a.pose);
      if (in.count(i)) {
        CHECK(e <= opt.reprojection_threshold_px);
        sum += e;
      } else {
        CHECK(e > opt.reprojection_threshold_px);
      }
    }
    CHECK(a.mean_reprojection_error == doctest::Approx(sum / in.size()));
    CHECK(a.inliers.size() >= 6);
    // The refit on all inliers is at least as good as any four of them alone.
    const std::vector<Correspondence> four = {corrs[a.inliers[0]], corrs[a.inliers[1]], corrs[a.inliers[2]],
                                              corrs[a.inliers[3]]};
    const RigidTransformd minimal = pnpRefine(four, kCam, start, {25, 1e-10});
    double minimal_sum = 0;
    int minimal_n = 0;
    for (int i : a.inliers) {
      const double e = reprojectionError(corrs[i], kCam, minimal);
      if (e <= opt.reprojection_threshold_px) {
        minimal_sum += e;
        ++minimal_n;
      }
    }
    if (minimal_n == static_cast<int>(a.inliers.size())) CHECK(a.mean_reprojection_error <= minimal_sum / minimal_n + 1e-9);
  }
}

TEST_CASE("correspondence CSV dump") {
  const std::vector<Correspondence> c = {{{1, 2, 3}, {4.5, 6.25}, 7}};
  std::ostringstream s;
  writeCorrespondencesCsv(s, c);
  CHECK(s.str().find("x,y,X,Y,Z,template_index") == 0);
  CHECK(s.str().find("4.5,6.25,1,2,3,7") != std::string::npos);
}
