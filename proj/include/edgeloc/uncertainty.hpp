#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "edgeloc/rigid_transform.hpp"

namespace edgeloc {

/// Per-axis half-widths of the pose uncertainty around a seed.
///
/// A perturbation is a rigid motion of the station frame: the true
/// camera-from-station map is `seed * delta` with `delta` built from a
/// rotation vector (per-axis components, degrees) and a translation (mm),
/// both expressed in station coordinates.
struct UncertaintyBox {
  Eigen::Vector3d translation_mm = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_deg = Eigen::Vector3d::Zero();

  static UncertaintyBox Uniform(double translation_mm, double rotation_deg) {
    return {Eigen::Vector3d::Constant(translation_mm), Eigen::Vector3d::Constant(rotation_deg)};
  }

  UncertaintyBox scaled(double factor) const { return {translation_mm * factor, rotation_deg * factor}; }

  bool valid() const { return (translation_mm.array() >= 0).all() && (rotation_deg.array() >= 0).all(); }
};

/// Perturbation from station-frame rotation vector components (deg) and translation (mm).
RigidTransformd perturbation(const Eigen::Vector3d& rotation_deg, const Eigen::Vector3d& translation_mm);

/// Per-axis magnitude of a perturbation, in the box's units.
struct PerturbationMagnitude {
  Eigen::Vector3d translation_mm;
  Eigen::Vector3d rotation_deg;
};

PerturbationMagnitude magnitude(const RigidTransformd& delta);

/// True when every axis of `delta` lies within `box` enlarged by (1 + margin).
bool withinBox(const RigidTransformd& delta, const UncertaintyBox& box, double margin = 0.0);

/// Uniform sample per axis inside the box; deterministic for a given seed.
RigidTransformd samplePosePerturbation(const UncertaintyBox& box, std::uint64_t rng_seed);

/// The 2^6 extreme perturbations of the box.
std::array<RigidTransformd, 64> boxCorners(const UncertaintyBox& box);

}  // namespace edgeloc
