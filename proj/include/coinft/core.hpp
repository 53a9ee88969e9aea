#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "coinft/errors.hpp"

namespace coinft {

/// Fixed-size 3-vector. Units depend on context (m, m/s, N).
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Standard gravity magnitude [m/s^2]. World frame is z-up.
inline constexpr double kGravity = 9.81;
inline const Vec3 kGravityVector{0.0, 0.0, -kGravity};

/// Six-axis load. Forces in N, moments in mN*m.
struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;
  double mx = 0.0;  // mN*m
  double my = 0.0;  // mN*m
  double mz = 0.0;  // mN*m

  static Wrench from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  std::array<double, 6> to_array() const { return {fx, fy, fz, mx, my, mz}; }
  double operator[](int axis) const { return to_array()[static_cast<std::size_t>(axis)]; }

  bool is_finite() const {
    for (double v : to_array()) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
  Vec3 force() const { return {fx, fy, fz}; }

  friend bool operator==(const Wrench&, const Wrench&) = default;
};

inline constexpr std::array<const char*, 6> kAxisNames{"Fx", "Fy", "Fz", "Mx", "My", "Mz"};

/// Rotation stored as a unit quaternion. Every constructor normalizes, so
/// the norm is 1 to within rounding.
class UnitQuaternion {
 public:
  UnitQuaternion() : q_(1.0, 0.0, 0.0, 0.0) {}

  /// Normalizes (w, x, y, z). Throws InvalidArgument for a zero or
  /// non-finite input.
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Eigen::Quaterniond& q)
      : UnitQuaternion(q.w(), q.x(), q.y(), q.z()) {}

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  /// Quaternion of a proper rotation matrix with columns (x, y, z).
  static UnitQuaternion from_basis(const Vec3& x, const Vec3& y, const Vec3& z);

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  const Eigen::Quaterniond& eigen() const { return q_; }

  Mat3 rotation() const { return q_.toRotationMatrix(); }
  UnitQuaternion slerp(double fraction, const UnitQuaternion& target) const;

 private:
  Eigen::Quaterniond q_;
};

struct Basis {
  Vec3 x;
  Vec3 y;
  Vec3 z;
};

/// Columns of the rotation matrix of q. Rejects quaternions whose norm
/// deviates from one by more than 1e-6 (only reachable through a raw
/// Eigen quaternion).
Basis quat_to_basis(const UnitQuaternion& q);
Basis quat_to_basis(const Eigen::Quaterniond& q);

inline constexpr double kParallelEpsilon = 1e-8;

/// (a x b) / |a x b|. Throws DegenerateOrientation when |a x b| <= 1e-8.
Vec3 cross_normalize(const Vec3& a, const Vec3& b);

inline bool is_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace coinft
