#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/image_pipeline.hpp"
#include "edgeloc/matcher.hpp"
#include "edgeloc/mesh.hpp"
#include "edgeloc/pose_solver.hpp"
#include "edgeloc/rigid_transform.hpp"
#include "edgeloc/uncertainty.hpp"

namespace edgeloc {

struct LocalizerConfig {
  int n_max = 10;
  /// Per-iteration correction bounds that must hold on two consecutive iterations.
  double convergence_translation_mm = 0.5;
  double convergence_rotation_deg = 0.5;
  UncertaintyBox initial_box = UncertaintyBox::Uniform(30.0, 5.0);
  int box_halvings = 2;
  double reprojection_threshold_px = 8.0;
  int reprojection_halvings = 2;
  TemplateOptions templates;
  Metric metric = Metric::WHS;
  /// Parabolic sub-pixel refinement of each best match.
  bool subpixel = true;
  double normal_threshold_deg = 30.0;
  double depth_threshold_mm = 5.0;
  /// Tolerance on the box for hypothesis rejection and early failure.
  double box_margin = 0.2;
  int ransac_max_iterations = 500;
  double ransac_confidence = 0.999;
  std::uint64_t rng_seed = 0;
  CannyParams canny;
  /// Multi-seed sweep: seeds rotated by k * increment about `seed_axis`
  /// (camera frame, through the station origin) for |k * increment| <= half range.
  double seed_increment_deg = 20.0;
  double seed_sweep_half_range_deg = 180.0;
  Eigen::Vector3d seed_axis = Eigen::Vector3d::UnitZ();

  /// Throws PreconditionError when a field is out of range.
  void validate() const;
  /// Uncertainty box used at iteration k (0-based): halved box_halvings times, then held.
  UncertaintyBox boxAt(int k) const;
  double reprojectionThresholdAt(int k) const;
};

enum class LocalizerStatus { Converged, MaxIterations, EarlyFailure, NoConsensus };

std::string toString(LocalizerStatus status);
LocalizerStatus statusFromString(const std::string& name);

struct IterationDiagnostics {
  RigidTransformd pose;  // estimate after this iteration
  double correction_translation_mm = 0.0;
  double correction_rotation_deg = 0.0;
  int template_count = 0;
  int correspondence_count = 0;
  int inlier_count = 0;
  double mean_reprojection_error_px = 0.0;
  UncertaintyBox box;
  double reprojection_threshold_px = 0.0;
  std::vector<Correspondence> correspondences;
  std::vector<int> inliers;  // indices into correspondences
};

struct LocalizerResult {
  /// Final camera-from-station estimate. EarlyFailure falls back to the seed;
  /// NoConsensus keeps the last valid estimate.
  RigidTransformd pose;
  LocalizerStatus status = LocalizerStatus::MaxIterations;
  std::vector<IterationDiagnostics> diagnostics;
  /// Seed the run started from (differs from the input for multi-seed runs).
  RigidTransformd seed;
  std::string message;

  int iterations() const { return static_cast<int>(diagnostics.size()); }
};

/// Render-and-compare from a grayscale test image (equalized, then Canny).
LocalizerResult localize(const GrayImage& test, const RigidTransformd& seed, const TriangleMesh& mesh,
                         const CameraModeld& camera, const LocalizerConfig& cfg);

/// Render-and-compare against a ready-made binary test edge map.
LocalizerResult localizeEdges(const EdgeMap& test_edges, const RigidTransformd& seed, const TriangleMesh& mesh,
                              const CameraModeld& camera, const LocalizerConfig& cfg);

/// Seed rotated by `angle_deg` about `axis_camera` through the station origin.
RigidTransformd rotateSeed(const RigidTransformd& seed, const Eigen::Vector3d& axis_camera, double angle_deg);

/// Runs one iteration from every rotated seed, keeps the one with the most
/// inliers (ties keep the seed closest to the original), and finishes a full
/// localization from it.
LocalizerResult multiSeedLocalize(const GrayImage& test, const RigidTransformd& seed, const TriangleMesh& mesh,
                                  const CameraModeld& camera, const LocalizerConfig& cfg);
LocalizerResult multiSeedLocalizeEdges(const EdgeMap& test_edges, const RigidTransformd& seed,
                                       const TriangleMesh& mesh, const CameraModeld& camera,
                                       const LocalizerConfig& cfg);

}  // namespace edgeloc
