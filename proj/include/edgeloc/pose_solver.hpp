#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/rigid_transform.hpp"
#include "edgeloc/uncertainty.hpp"

namespace edgeloc {

/// Station-frame point matched to a test-image pixel.
struct Correspondence {
  Eigen::Vector3d point3d = Eigen::Vector3d::Zero();
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  int source_template = -1;
};

struct PnpResult {
  RigidTransformd pose;  // camera_from_station
  std::vector<int> inliers;
  double mean_reprojection_error = 0.0;
};

/// Reprojection error in px, +inf when the point falls behind the camera.
double reprojectionError(const Correspondence& c, const CameraModeld& camera, const RigidTransformd& pose);

struct RefineOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
};

/// Levenberg-Marquardt on the summed squared reprojection error (distorted
/// pixel space), starting at `init`. Accepted steps never increase the cost.
/// Throws PreconditionError for fewer than 4 correspondences and
/// DegenerateConfigurationError when the normal equations are rank deficient.
RigidTransformd pnpRefine(std::span<const Correspondence> corrs, const CameraModeld& camera,
                          const RigidTransformd& init, const RefineOptions& options = {});

struct RansacOptions {
  double reprojection_threshold_px = 8.0;
  /// Hypotheses farther than box * (1 + box_margin) from the seed are rejected.
  UncertaintyBox box = UncertaintyBox::Uniform(30.0, 5.0);
  double box_margin = 0.2;
  int max_iterations = 500;
  double confidence = 0.999;
  std::uint64_t rng_seed = 0;
  int hypothesis_iterations = 25;
};

/// Minimal sets of four, each refined from the seed; the largest consensus
/// set (ties: lower mean error, then earlier iteration) is refit on all its
/// inliers. Throws NoConsensusError when fewer than max(6, 25%) inliers remain.
PnpResult ransacPnp(std::span<const Correspondence> corrs, const CameraModeld& camera,
                    const RigidTransformd& seed_pose, const RansacOptions& options = {});

/// CSV dump: x,y,X,Y,Z,template_index.
void writeCorrespondencesCsv(std::ostream& out, std::span<const Correspondence> corrs);

}  // namespace edgeloc
