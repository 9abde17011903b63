#include "edgeloc/localizer.hpp"

#include <cmath>

#include "edgeloc/pose_solver.hpp"
#include "edgeloc/rasterizer.hpp"

namespace edgeloc {

void LocalizerConfig::validate() const {
  if (n_max < 1) throw PreconditionError("n_max must be at least 1");
  if (!(convergence_translation_mm > 0) || !(convergence_rotation_deg > 0))
    throw PreconditionError("convergence thresholds must be positive");
  if (!initial_box.valid()) throw PreconditionError("uncertainty box half-widths must be non-negative");
  if (box_halvings < 0 || reprojection_halvings < 0) throw PreconditionError("halving counts must be non-negative");
  if (!(reprojection_threshold_px > 0)) throw PreconditionError("reprojection threshold must be positive");
  if (!(normal_threshold_deg > 0) || !(depth_threshold_mm > 0))
    throw PreconditionError("salient edge thresholds must be positive");
  if (box_margin < 0) throw PreconditionError("box margin must be non-negative");
  if (ransac_max_iterations < 1) throw PreconditionError("RANSAC needs at least one iteration");
  if (!(seed_increment_deg > 0)) throw PreconditionError("seed increment must be positive");
}

UncertaintyBox LocalizerConfig::boxAt(int k) const {
  return initial_box.scaled(std::ldexp(1.0, -std::min(k, box_halvings)));
}

double LocalizerConfig::reprojectionThresholdAt(int k) const {
  return reprojection_threshold_px * std::ldexp(1.0, -std::min(k, reprojection_halvings));
}

std::string toString(LocalizerStatus status) {
  switch (status) {
    case LocalizerStatus::Converged: return "Converged";
    case LocalizerStatus::MaxIterations: return "MaxIterations";
    case LocalizerStatus::EarlyFailure: return "EarlyFailure";
    case LocalizerStatus::NoConsensus: return "NoConsensus";
  }
  return "MaxIterations";
}

LocalizerStatus statusFromString(const std::string& name) {
  for (auto s : {LocalizerStatus::Converged, LocalizerStatus::MaxIterations, LocalizerStatus::EarlyFailure,
                 LocalizerStatus::NoConsensus})
    if (toString(s) == name) return s;
  throw PreconditionError("unknown localizer status '" + name + "'");
}

namespace {

struct IterationOutcome {
  std::vector<Correspondence> correspondences;
  int template_count = 0;
};

IterationOutcome matchTemplates(const EdgeMap& test_edges, const RigidTransformd& pose, const TriangleMesh& mesh,
                                const CameraModeld& camera, const LocalizerConfig& cfg, const UncertaintyBox& box) {
  const GeometryBuffer buf = rasterize(mesh, pose, camera);
  const SalientEdges baseline = salientEdges(buf, cfg.normal_threshold_deg, cfg.depth_threshold_mm);
  const std::vector<Template> templates =
      extractTemplates(baseline.edges, baseline.render_mask, buf, camera, pose, cfg.templates);
  IterationOutcome out;
  out.template_count = static_cast<int>(templates.size());
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const Template& t = templates[i];
    SearchWindow window;
    try {
      window = searchWindow(t.anchor3d, pose, box, camera, cfg.templates.size);
    } catch (const WindowClippedError&) {
      continue;
    }
    const ScoreMatrix scores = scoreTemplate(cfg.metric, t, crop(test_edges, window));
    Match m = bestMatch(scores, window);
    if (cfg.subpixel) {
      m = refinePeak(scores, m, window);
      m.pixel -= selfPeakOffset(cfg.metric, t, baseline.edges);
    }
    out.correspondences.push_back({t.anchor3d, m.pixel, static_cast<int>(i)});
  }
  return out;
}

}  // namespace

LocalizerResult localizeEdges(const EdgeMap& test_edges, const RigidTransformd& seed, const TriangleMesh& mesh,
                              const CameraModeld& camera, const LocalizerConfig& cfg) {
  cfg.validate();
  if (mesh.empty()) throw EmptyMeshError("cannot localize against an empty mesh");
  if (test_edges.rows() != camera.height || test_edges.cols() != camera.width)
    throw SizeMismatchError("test image size does not match the camera model");

  LocalizerResult result;
  result.seed = seed;
  result.pose = seed;
  const RigidTransformd seed_inverse = seed.inverse();
  RigidTransformd pose = seed;
  int small_corrections = 0;

  for (int k = 0; k < cfg.n_max; ++k) {
    const UncertaintyBox box = cfg.boxAt(k);
    IterationDiagnostics diag;
    diag.box = box;
    diag.reprojection_threshold_px = cfg.reprojectionThresholdAt(k);

    PnpResult pnp;
    try {
      const IterationOutcome matched = matchTemplates(test_edges, pose, mesh, camera, cfg, box);
      diag.template_count = matched.template_count;
      diag.correspondence_count = static_cast<int>(matched.correspondences.size());
      diag.correspondences = matched.correspondences;
      RansacOptions ransac;
      ransac.reprojection_threshold_px = diag.reprojection_threshold_px;
      ransac.box = box;
      ransac.box_margin = cfg.box_margin;
      ransac.max_iterations = cfg.ransac_max_iterations;
      ransac.confidence = cfg.ransac_confidence;
      ransac.rng_seed = cfg.rng_seed + static_cast<std::uint64_t>(k);
      pnp = ransacPnp(matched.correspondences, camera, pose, ransac);
    } catch (const Error& e) {
      // No usable consensus this iteration: keep the last valid estimate.
      diag.pose = pose;
      result.diagnostics.push_back(diag);
      result.status = LocalizerStatus::NoConsensus;
      result.pose = pose;
      result.message = e.what();
      return result;
    }

    const RigidTransformd correction = pose.inverse() * pnp.pose;
    diag.pose = pnp.pose;
    diag.correction_translation_mm = correction.translation().norm();
    diag.correction_rotation_deg = correction.angle() * kRadToDeg;
    diag.inlier_count = static_cast<int>(pnp.inliers.size());
    diag.inliers = pnp.inliers;
    diag.mean_reprojection_error_px = pnp.mean_reprojection_error;
    result.diagnostics.push_back(diag);

    if (!withinBox(seed_inverse * pnp.pose, cfg.initial_box, cfg.box_margin)) {
      result.status = LocalizerStatus::EarlyFailure;
      result.pose = seed;
      result.message = "cumulative correction left the initial uncertainty box";
      return result;
    }
    pose = pnp.pose;
    const bool small = diag.correction_translation_mm <= cfg.convergence_translation_mm &&
                       diag.correction_rotation_deg <= cfg.convergence_rotation_deg;
    small_corrections = small ? small_corrections + 1 : 0;
    if (small_corrections >= 2) {
      result.status = LocalizerStatus::Converged;
      result.pose = pose;
      return result;
    }
  }
  result.status = LocalizerStatus::MaxIterations;
  result.pose = pose;
  return result;
}

LocalizerResult localize(const GrayImage& test, const RigidTransformd& seed, const TriangleMesh& mesh,
                         const CameraModeld& camera, const LocalizerConfig& cfg) {
  return localizeEdges(detectTestEdges(test, cfg.canny), seed, mesh, camera, cfg);
}

RigidTransformd rotateSeed(const RigidTransformd& seed, const Eigen::Vector3d& axis_camera, double angle_deg) {
  if (std::fmod(angle_deg, 360.0) == 0.0) return seed;
  const Eigen::Quaterniond r(Eigen::AngleAxisd(angle_deg * kDegToRad, axis_camera.normalized()));
  return RigidTransformd(r * seed.rotation(), seed.translation());
}

LocalizerResult multiSeedLocalizeEdges(const EdgeMap& test_edges, const RigidTransformd& seed,
                                       const TriangleMesh& mesh, const CameraModeld& camera,
                                       const LocalizerConfig& cfg) {
  cfg.validate();
  std::vector<double> angles = {0.0};
  for (int k = 1;; ++k) {
    const double a = k * cfg.seed_increment_deg;
    if (a > cfg.seed_sweep_half_range_deg + 1e-9) break;
    angles.push_back(a);
    if (a < 180.0 - 1e-9 && a <= cfg.seed_sweep_half_range_deg + 1e-9) angles.push_back(-a);
  }

  LocalizerConfig probe_cfg = cfg;
  probe_cfg.n_max = 1;
  RigidTransformd best_seed = seed;
  int best_inliers = -1;
  for (double angle : angles) {
    const RigidTransformd candidate = rotateSeed(seed, cfg.seed_axis, angle);
    const LocalizerResult probe = localizeEdges(test_edges, candidate, mesh, camera, probe_cfg);
    const int inliers = probe.status == LocalizerStatus::NoConsensus || probe.diagnostics.empty()
                            ? 0
                            : probe.diagnostics.front().inlier_count;
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_seed = candidate;
    }
  }
  return localizeEdges(test_edges, best_seed, mesh, camera, cfg);
}

LocalizerResult multiSeedLocalize(const GrayImage& test, const RigidTransformd& seed, const TriangleMesh& mesh,
                                  const CameraModeld& camera, const LocalizerConfig& cfg) {
  return multiSeedLocalizeEdges(detectTestEdges(test, cfg.canny), seed, mesh, camera, cfg);
}

}  // namespace edgeloc
