#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/localizer.hpp"
#include "edgeloc/mesh.hpp"
#include "edgeloc/rigid_transform.hpp"
#include "edgeloc/uncertainty.hpp"

namespace edgeloc {

/// End-effector error from camera-from-station estimate and ground truth.
///
/// With C the true camera, Ĉ the estimated one and `camera_from_ee` the
/// fixed camera/end-effector mounting (end-effector coordinates to camera
/// coordinates): T_C->Ĉ = truth * est^-1, and the result is
/// camera_from_ee^-1 * T_C->Ĉ * camera_from_ee.
RigidTransformd endEffectorError(const RigidTransformd& est, const RigidTransformd& truth,
                                 const RigidTransformd& camera_from_ee);

struct ErrorDecomposition {
  double normal_mm = 0.0;
  double tangential_mm = 0.0;
  /// Angle between the depth axis and its image under the error rotation.
  double tilt_deg = 0.0;
};

/// Splits an error transform along `camera_axis` (unit, in the error's frame).
ErrorDecomposition decompose(const RigidTransformd& err, const Eigen::Vector3d& camera_axis);

struct Requirements {
  double max_translation_mm = 0.4;
  double max_rotation_deg = 0.25;

  bool satisfiedBy(const ErrorDecomposition& e) const {
    return e.normal_mm <= max_translation_mm && e.tangential_mm <= max_translation_mm &&
           e.tilt_deg <= max_rotation_deg;
  }
};

/// Edge-map degradations applied to the ideal ground-truth edges.
struct EdgeNoise {
  double spurious = 0.0;  // per background pixel probability of a false edge
  double dropout = 0.0;   // per true edge pixel probability of removal
  double jitter = 0.0;    // per surviving edge pixel probability of a 1 px shift
};

enum class ScenarioMode { Edges, Intensity };

struct ScenarioSpec {
  std::string mesh_path;
  TriangleMesh mesh;
  CameraModeld camera;
  RigidTransformd ground_truth;  // camera_from_station
  /// Seeds are `ground_truth * delta^-1` with delta drawn uniformly from this box.
  UncertaintyBox perturbation_box = UncertaintyBox::Uniform(30.0, 5.0);
  /// When set, deltas inside this box are redrawn (adversarial campaigns).
  std::optional<UncertaintyBox> exclusion_box;
  /// Extra seed rotation about the sweep axis (LocalizerConfig::seed_axis), degrees.
  double seed_rotation_deg = 0.0;
  EdgeNoise noise;
  double intensity_noise_sigma = 2.0;
  ScenarioMode mode = ScenarioMode::Edges;
  bool multi_seed = false;
  RigidTransformd camera_from_ee;
  Requirements requirements;
  std::uint64_t rng_seed = 0;
  int trials = 0;
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  int workers = 0;

  void validate() const;
};

struct TrialRecord {
  int trial = 0;
  LocalizerStatus status = LocalizerStatus::MaxIterations;
  int iterations = 0;
  ErrorDecomposition input_error;
  ErrorDecomposition final_error;
  double final_translation_mm = 0.0;  // norm of the end-effector translation error
  double in_plane_deg = 0.0;          // rotation about the depth axis, reported only
  bool completed = false;
  bool successful = false;
  bool false_positive = false;
  /// Final estimate lies outside the uncertainty box around the truth.
  bool beyond_box = false;
};

struct CampaignReport {
  std::string metric;
  std::vector<TrialRecord> trials;
  double completion_rate = 0.0;
  double success_rate = 0.0;
  int false_positives = 0;
  int converged_beyond_box = 0;
  double median_iterations = 0.0;
};

/// Test edge map with the noise model applied; deterministic for a seed.
EdgeMap applyEdgeNoise(const EdgeMap& clean, const EdgeNoise& noise, std::uint64_t rng_seed);

/// Runs every trial: ground-truth render as the test input, noise, in-box
/// seed, localization, error decomposition. Per-trial randomness comes from
/// rng_seed XOR trial index.
CampaignReport runScenarios(const ScenarioSpec& spec, const LocalizerConfig& cfg);

TrialRecord runTrial(const ScenarioSpec& spec, const LocalizerConfig& cfg, int trial);

void writeReportJson(std::ostream& out, const CampaignReport& report);
void writeReportCsv(std::ostream& out, const CampaignReport& report);

}  // namespace edgeloc
