#include "edgeloc/pose_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "edgeloc/types.hpp"

namespace edgeloc {

double reprojectionError(const Correspondence& c, const CameraModeld& camera, const RigidTransformd& pose) {
  const auto px = camera.project(pose * c.point3d);
  if (!px) return std::numeric_limits<double>::infinity();
  return (*px - c.pixel).norm();
}

namespace {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

double totalCost(std::span<const Correspondence> corrs, const CameraModeld& camera, const RigidTransformd& pose) {
  double cost = 0;
  for (const Correspondence& c : corrs) {
    const auto px = camera.project(pose * c.point3d);
    if (!px) return std::numeric_limits<double>::infinity();
    cost += (*px - c.pixel).squaredNorm();
  }
  return cost;
}

// Update applied on the camera side: x_cam -> exp(w) x_cam + v.
RigidTransformd applyUpdate(const Vector6& delta, const RigidTransformd& pose) {
  return RigidTransformd::FromRotationVector(delta.head<3>(), delta.tail<3>()) * pose;
}

bool rankDeficient(const Matrix6& h) {
  const Vector6 d = h.diagonal();
  if ((d.array() <= 0).any()) return true;
  const Vector6 scale = d.array().rsqrt();
  const Matrix6 normalized = scale.asDiagonal() * h * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix6> eig(normalized, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0) < 1e-10 * eig.eigenvalues()(5);
}

}  // namespace

RigidTransformd pnpRefine(std::span<const Correspondence> corrs, const CameraModeld& camera,
                          const RigidTransformd& init, const RefineOptions& options) {
  if (corrs.size() < 4) throw PreconditionError("PnP needs at least 4 correspondences");
  RigidTransformd pose = init;
  double cost = totalCost(corrs, camera, pose);
  if (!std::isfinite(cost)) throw DegenerateConfigurationError("correspondence behind the camera at the initial pose");
  double lambda = 1e-3;

  for (int it = 0; it < options.max_iterations; ++it) {
    Matrix6 h = Matrix6::Zero();
    Vector6 g = Vector6::Zero();
    for (const Correspondence& c : corrs) {
      const Eigen::Vector3d xc = pose * c.point3d;
      const Eigen::Vector2d r = *camera.project(xc) - c.pixel;
      Eigen::Matrix<double, 3, 6> dx;
      dx.leftCols<3>() << 0, xc.z(), -xc.y(), -xc.z(), 0, xc.x(), xc.y(), -xc.x(), 0;
      dx.rightCols<3>().setIdentity();
      const Eigen::Matrix<double, 2, 6> j = camera.projectJacobian(xc) * dx;
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * r;
    }
    if (it == 0 && rankDeficient(h)) throw DegenerateConfigurationError("PnP normal equations are rank deficient");

    bool accepted = false;
    Vector6 step = Vector6::Zero();
    while (!accepted) {
      Matrix6 damped = h;
      damped.diagonal() *= 1.0 + lambda;
      step = damped.ldlt().solve(-g);
      const RigidTransformd candidate = applyUpdate(step, pose);
      const double candidate_cost = totalCost(corrs, camera, candidate);
      if (candidate_cost <= cost) {
        pose = candidate;
        cost = candidate_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12 || step.norm() < options.step_tolerance) return pose;
      }
    }
    if (step.norm() < options.step_tolerance) break;
  }
  return pose;
}

PnpResult ransacPnp(std::span<const Correspondence> corrs, const CameraModeld& camera,
                    const RigidTransformd& seed_pose, const RansacOptions& options) {
  const int n = static_cast<int>(corrs.size());
  if (n < 4) throw PreconditionError("RANSAC PnP needs at least 4 correspondences");
  const RigidTransformd seed_inverse = seed_pose.inverse();
  const auto inBox = [&](const RigidTransformd& pose) {
    return withinBox(seed_inverse * pose, options.box, options.box_margin);
  };
  const auto evaluate = [&](const RigidTransformd& pose, std::vector<int>& inliers, double& mean) {
    inliers.clear();
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const double e = reprojectionError(corrs[i], camera, pose);
      if (e <= options.reprojection_threshold_px) {
        inliers.push_back(i);
        sum += e;
      }
    }
    mean = inliers.empty() ? std::numeric_limits<double>::infinity() : sum / inliers.size();
  };

  std::mt19937_64 rng(options.rng_seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  PnpResult best;
  best.mean_reprojection_error = std::numeric_limits<double>::infinity();
  bool found = false;
  long needed = options.max_iterations;
  const RefineOptions hypothesis_options{options.hypothesis_iterations, 1e-10};
  std::vector<int> inliers;
  for (long it = 0; it < std::min<long>(needed, options.max_iterations); ++it) {
    std::array<int, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      int candidate;
      do {
        candidate = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + k, candidate) != idx.begin() + k);
      idx[k] = candidate;
    }
    const std::array<Correspondence, 4> sample = {corrs[idx[0]], corrs[idx[1]], corrs[idx[2]], corrs[idx[3]]};
    RigidTransformd hypothesis;
    try {
      hypothesis = pnpRefine(sample, camera, seed_pose, hypothesis_options);
    } catch (const DegenerateConfigurationError&) {
      continue;
    }
    if (!inBox(hypothesis)) continue;
    double mean = 0;
    evaluate(hypothesis, inliers, mean);
    const int count = static_cast<int>(inliers.size());
    const int best_count = static_cast<int>(best.inliers.size());
    if (count > best_count || (count == best_count && count > 0 && mean < best.mean_reprojection_error)) {
      best.pose = hypothesis;
      best.inliers = inliers;
      best.mean_reprojection_error = mean;
      found = true;
      const double ratio = static_cast<double>(count) / n;
      const double all_inlier_prob = std::pow(ratio, 4);
      if (all_inlier_prob >= 1.0) needed = it + 1;
      else if (all_inlier_prob > 0)
        needed = std::min<long>(needed, static_cast<long>(std::ceil(std::log(1.0 - options.confidence) /
                                                                   std::log(1.0 - all_inlier_prob))));
    }
  }

  const int required = std::max(6, static_cast<int>(std::ceil(0.25 * n)));
  if (!found || static_cast<int>(best.inliers.size()) < required)
    throw NoConsensusError("RANSAC found " + std::to_string(best.inliers.size()) + " inliers, " +
                           std::to_string(required) + " required");

  // Refit on the consensus set; kept only if it stays in the box and does not
  // worsen the mean inlier error.
  std::vector<Correspondence> consensus;
  for (int i : best.inliers) consensus.push_back(corrs[i]);
  try {
    const RigidTransformd refit = pnpRefine(consensus, camera, best.pose);
    double mean = 0;
    evaluate(refit, inliers, mean);
    if (inBox(refit) && static_cast<int>(inliers.size()) >= required && mean <= best.mean_reprojection_error) {
      best.pose = refit;
      best.inliers = inliers;
      best.mean_reprojection_error = mean;
    }
  } catch (const DegenerateConfigurationError&) {
  }
  return best;
}

void writeCorrespondencesCsv(std::ostream& out, std::span<const Correspondence> corrs) {
  out << "x,y,X,Y,Z,template_index\n" << std::setprecision(10);
  for (const Correspondence& c : corrs)
    out << c.pixel.x() << ',' << c.pixel.y() << ',' << c.point3d.x() << ',' << c.point3d.y() << ','
        << c.point3d.z() << ',' << c.source_template << '\n';
}

}  // namespace edgeloc
