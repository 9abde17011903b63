#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace edgeloc {

/// Proper rigid motion x -> R x + t, translation in millimetres.
///
/// The rotation is held as a unit quaternion and renormalized after every
/// composition so that long chains of updates do not drift off SO(3).
template <typename Scalar_>
class RigidTransform {
 public:
  using Scalar = Scalar_;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Quaternion = Eigen::Quaternion<Scalar>;

  RigidTransform() : rotation_(Quaternion::Identity()), translation_(Vector3::Zero()) {}

  RigidTransform(const Quaternion& rotation, const Vector3& translation)
      : rotation_(rotation.normalized()), translation_(translation) {
    canonicalize();
  }

  RigidTransform(const Matrix3& rotation, const Vector3& translation)
      : RigidTransform(Quaternion(rotation), translation) {}

  static RigidTransform Identity() { return RigidTransform(); }

  static RigidTransform Translation(const Vector3& t) { return RigidTransform(Quaternion::Identity(), t); }

  /// Rotation given as a rotation vector (axis * angle, radians) followed by a translation.
  static RigidTransform FromRotationVector(const Vector3& rotation_vector, const Vector3& translation) {
    const Scalar angle = rotation_vector.norm();
    if (angle == Scalar(0)) return RigidTransform(Quaternion::Identity(), translation);
    return RigidTransform(Quaternion(Eigen::AngleAxis<Scalar>(angle, rotation_vector / angle)), translation);
  }

  const Quaternion& rotation() const { return rotation_; }
  Matrix3 rotationMatrix() const { return rotation_.toRotationMatrix(); }
  const Vector3& translation() const { return translation_; }

  /// Rotation vector (axis * angle) with angle in [0, pi].
  Vector3 rotationVector() const {
    const Eigen::AngleAxis<Scalar> aa(rotation_);
    return aa.axis() * aa.angle();
  }

  /// Rotation angle in radians, in [0, pi].
  Scalar angle() const {
    using std::atan2;
    return Scalar(2) * atan2(rotation_.vec().norm(), rotation_.w());
  }

  Vector3 operator*(const Vector3& point) const { return rotation_ * point + translation_; }

  /// Composition: (a * b)(x) = a(b(x)).
  RigidTransform operator*(const RigidTransform& other) const {
    return RigidTransform(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }

  RigidTransform inverse() const {
    const Quaternion inv = rotation_.conjugate();
    return RigidTransform(inv, -(inv * translation_));
  }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return RigidTransform<Other>(rotation_.template cast<Other>(), translation_.template cast<Other>());
  }

 private:
  // w >= 0 so that equal rotations have equal coefficients.
  void canonicalize() {
    if (rotation_.w() < Scalar(0)) rotation_.coeffs() = -rotation_.coeffs();
  }

  Quaternion rotation_;
  Vector3 translation_;
};

using RigidTransformd = RigidTransform<double>;

template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& t) {
  return t.inverse();
}

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRadToDeg = 57.29577951308232;

}  // namespace edgeloc
