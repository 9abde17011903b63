#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>

#include <Eigen/Geometry>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/localizer.hpp"
#include "edgeloc/matcher.hpp"
#include "edgeloc/mesh.hpp"
#include "edgeloc/rigid_transform.hpp"
#include "edgeloc/types.hpp"

namespace testing {

using namespace edgeloc;

inline std::filesystem::path dataDir() { return EDGELOC_TEST_DATA_DIR; }

inline CameraModeld pinhole(double f, int width, int height) {
  CameraModeld c;
  c.fx = c.fy = f;
  c.cx = (width - 1) / 2.0;
  c.cy = (height - 1) / 2.0;
  c.width = width;
  c.height = height;
  return c;
}

/// Camera-from-station pose looking at the station origin from `eye`.
inline RigidTransformd lookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ()) {
  const Eigen::Vector3d z = (-eye).normalized();
  const Eigen::Vector3d x = z.cross(up).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return RigidTransformd(r, -r * eye);
}

inline double translationGap(const RigidTransformd& a, const RigidTransformd& b) {
  return (a.inverse() * b).translation().norm();
}
inline double rotationGapDeg(const RigidTransformd& a, const RigidTransformd& b) {
  return (a.inverse() * b).angle() * kRadToDeg;
}

inline EdgeMap randomEdges(int rows, int cols, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution on(density);
  EdgeMap m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = on(rng) ? 1 : 0;
  return m;
}

/// The reference scene the end-to-end checks run on: the bracket at 357 mm
/// under a 512 x 512 camera, viewed so that no face is near grazing.
struct BracketScene {
  TriangleMesh mesh = makeBracket();
  CameraModeld camera = pinhole(500.0, 512, 512);
  RigidTransformd truth{
      Eigen::Matrix3d(RigidTransformd::FromRotationVector(Eigen::Vector3d(0.65, 0.7, 0.0), Eigen::Vector3d::Zero())
                          .rotationMatrix() *
                      Eigen::Vector3d(1, -1, -1).asDiagonal()),
      Eigen::Vector3d(0, 0, 357)};
  RigidTransformd camera_from_ee = RigidTransformd::Translation(Eigen::Vector3d(20, 0, 327));

  static LocalizerConfig config() {
    LocalizerConfig cfg;
    cfg.templates.size = 32;
    cfg.templates.max_count = 80;
    cfg.templates.min_spacing = 14;
    cfg.ransac_max_iterations = 2000;
    return cfg;
  }
};

}  // namespace testing
