#include "coinft/core.hpp"

#include <string>

namespace coinft {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    throw InvalidArgument("quaternion must be finite and non-zero");
  }
  q_ = Eigen::Quaterniond(w / n, x / n, y / n, z / n);
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(angle)) {
    throw InvalidArgument("axis-angle needs a non-zero axis and finite angle");
  }
  return UnitQuaternion(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis / n)));
}

UnitQuaternion UnitQuaternion::from_basis(const Vec3& x, const Vec3& y, const Vec3& z) {
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  if (!((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6) ||
      !(r.determinant() > 0.0)) {
    throw InvalidArgument("basis is not a proper orthonormal frame");
  }
  return UnitQuaternion(Eigen::Quaterniond(r));
}

UnitQuaternion UnitQuaternion::slerp(double fraction, const UnitQuaternion& target) const {
  return UnitQuaternion(q_.slerp(fraction, target.q_));
}

Basis quat_to_basis(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!(std::abs(n - 1.0) <= 1e-6)) {
    throw InvalidArgument("quat_to_basis: quaternion norm " + std::to_string(n) +
                          " is not 1");
  }
  const Mat3 r = q.toRotationMatrix();
  return {r.col(0), r.col(1), r.col(2)};
}

Basis quat_to_basis(const UnitQuaternion& q) { return quat_to_basis(q.eigen()); }

Vec3 cross_normalize(const Vec3& a, const Vec3& b) {
  const Vec3 c = a.cross(b);
  const double n = c.norm();
  if (!(n > kParallelEpsilon)) {
    throw DegenerateOrientation("cross product of near-parallel vectors");
  }
  return c / n;
}

}  // namespace coinft
