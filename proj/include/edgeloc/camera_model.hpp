#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Core>
#include <Eigen/LU>

namespace edgeloc {

/// Pinhole camera with Brown-Conrady radial-tangential distortion
/// (k1, k2, k3 radial; p1, p2 tangential).
///
/// Pixel centers sit at integer coordinates; (0, 0) is the center of the
/// top-left pixel. Points are in the camera frame (z forward, mm).
template <typename Scalar_>
struct CameraModel {
  using Scalar = Scalar_;
  using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
  using Matrix23 = Eigen::Matrix<Scalar, 2, 3>;

  Scalar fx{1}, fy{1};
  Scalar cx{0}, cy{0};
  Scalar k1{0}, k2{0}, k3{0};
  Scalar p1{0}, p2{0};
  int width{0}, height{0};

  bool hasDistortion() const {
    return k1 != Scalar(0) || k2 != Scalar(0) || k3 != Scalar(0) || p1 != Scalar(0) || p2 != Scalar(0);
  }

  bool inImage(const Vector2& px) const {
    return px.x() >= Scalar(-0.5) && px.y() >= Scalar(-0.5) && px.x() < Scalar(width) - Scalar(0.5) &&
           px.y() < Scalar(height) - Scalar(0.5);
  }

  /// Applies distortion to normalized image coordinates.
  Vector2 distort(const Vector2& p) const {
    const Scalar x = p.x(), y = p.y();
    const Scalar r2 = x * x + y * y;
    const Scalar radial = Scalar(1) + r2 * (k1 + r2 * (k2 + r2 * k3));
    return {x * radial + Scalar(2) * p1 * x * y + p2 * (r2 + Scalar(2) * x * x),
            y * radial + p1 * (r2 + Scalar(2) * y * y) + Scalar(2) * p2 * x * y};
  }

  Matrix2 distortJacobian(const Vector2& p) const {
    const Scalar x = p.x(), y = p.y();
    const Scalar r2 = x * x + y * y;
    const Scalar radial = Scalar(1) + r2 * (k1 + r2 * (k2 + r2 * k3));
    const Scalar dradial = k1 + r2 * (Scalar(2) * k2 + Scalar(3) * k3 * r2);  // d radial / d r2
    Matrix2 j;
    j(0, 0) = radial + Scalar(2) * x * x * dradial + Scalar(2) * p1 * y + Scalar(6) * p2 * x;
    j(0, 1) = Scalar(2) * x * y * dradial + Scalar(2) * p1 * x + Scalar(2) * p2 * y;
    j(1, 0) = Scalar(2) * x * y * dradial + Scalar(2) * p1 * x + Scalar(2) * p2 * y;
    j(1, 1) = radial + Scalar(2) * y * y * dradial + Scalar(6) * p1 * y + Scalar(2) * p2 * x;
    return j;
  }

  /// Inverts distort() by Newton iteration.
  Vector2 undistort(const Vector2& distorted) const {
    if (!hasDistortion()) return distorted;
    using std::abs;
    Vector2 p = distorted;
    for (int it = 0; it < 50; ++it) {
      const Vector2 residual = distort(p) - distorted;
      const Vector2 step = distortJacobian(p).lu().solve(residual);
      p -= step;
      if (abs(step.x()) + abs(step.y()) < Scalar(1e-15)) break;
    }
    return p;
  }

  Vector2 normalizedToPixel(const Vector2& normalized) const {
    const Vector2 d = distort(normalized);
    return {fx * d.x() + cx, fy * d.y() + cy};
  }

  Vector2 pixelToNormalized(const Vector2& px) const {
    return undistort(Vector2((px.x() - cx) / fx, (px.y() - cy) / fy));
  }

  /// Projects a camera-frame point. Empty when the point is not in front of the camera.
  std::optional<Vector2> project(const Vector3& point) const {
    if (!(point.z() > Scalar(0))) return std::nullopt;
    return normalizedToPixel(Vector2(point.x() / point.z(), point.y() / point.z()));
  }

  /// d pixel / d point, for a point in front of the camera.
  Matrix23 projectJacobian(const Vector3& point) const {
    const Scalar inv_z = Scalar(1) / point.z();
    const Vector2 n(point.x() * inv_z, point.y() * inv_z);
    Matrix23 dn;
    dn << inv_z, Scalar(0), -n.x() * inv_z, Scalar(0), inv_z, -n.y() * inv_z;
    Matrix2 f = Matrix2::Zero();
    f(0, 0) = fx;
    f(1, 1) = fy;
    return f * distortJacobian(n) * dn;
  }

  /// Viewing ray through a pixel, scaled so that z = 1.
  Vector3 ray(const Vector2& px) const {
    const Vector2 n = pixelToNormalized(px);
    return {n.x(), n.y(), Scalar(1)};
  }

  /// Camera-frame point at the given depth (z) along the ray through px.
  Vector3 backproject(const Vector2& px, Scalar depth) const { return ray(px) * depth; }
};

using CameraModeld = CameraModel<double>;

}  // namespace edgeloc
