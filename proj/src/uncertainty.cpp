#include "edgeloc/uncertainty.hpp"

#include <cmath>
#include <random>

namespace edgeloc {

RigidTransformd perturbation(const Eigen::Vector3d& rotation_deg, const Eigen::Vector3d& translation_mm) {
  return RigidTransformd::FromRotationVector(rotation_deg * kDegToRad, translation_mm);
}

PerturbationMagnitude magnitude(const RigidTransformd& delta) {
  return {delta.translation().cwiseAbs(), delta.rotationVector().cwiseAbs() * kRadToDeg};
}

bool withinBox(const RigidTransformd& delta, const UncertaintyBox& box, double margin) {
  const PerturbationMagnitude m = magnitude(delta);
  const double scale = 1.0 + margin;
  return (m.translation_mm.array() <= box.translation_mm.array() * scale).all() &&
         (m.rotation_deg.array() <= box.rotation_deg.array() * scale).all();
}

RigidTransformd samplePosePerturbation(const UncertaintyBox& box, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::Vector3d rot, trans;
  for (int i = 0; i < 3; ++i) rot[i] = unit(rng) * box.rotation_deg[i];
  for (int i = 0; i < 3; ++i) trans[i] = unit(rng) * box.translation_mm[i];
  return perturbation(rot, trans);
}

std::array<RigidTransformd, 64> boxCorners(const UncertaintyBox& box) {
  std::array<RigidTransformd, 64> corners;
  for (int mask = 0; mask < 64; ++mask) {
    Eigen::Vector3d rot, trans;
    for (int i = 0; i < 3; ++i) {
      trans[i] = (mask >> i & 1) ? box.translation_mm[i] : -box.translation_mm[i];
      rot[i] = (mask >> (i + 3) & 1) ? box.rotation_deg[i] : -box.rotation_deg[i];
    }
    corners[mask] = perturbation(rot, trans);
  }
  return corners;
}

}  // namespace edgeloc
