#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace adcs {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Body-frame angular velocity, rad/s.
using AngularVelocity = Vec3;
/// Body-frame moment, N·m.
using Torque = Vec3;

/// Attitude quaternion, scalar last: (q1, q2, q3) = e sin(θ/2), q4 = cos(θ/2).
struct Quaternion {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double q4 = 1.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_vec4(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

  Vec4 vec4() const { return {q1, q2, q3, q4}; }
  Vec3 vector_part() const { return {q1, q2, q3}; }
  double norm() const;
  /// Throws DomainError for a zero or non-finite quaternion.
  Quaternion normalized() const;
  Quaternion operator-() const { return {-q1, -q2, -q3, -q4}; }
  double dot(const Quaternion& o) const { return q1 * o.q1 + q2 * o.q2 + q3 * o.q3 + q4 * o.q4; }
};

/// Principal moments of inertia, kg·m².
class InertiaTensor {
 public:
  InertiaTensor(double i1, double i2, double i3);
  explicit InertiaTensor(const Vec3& moments) : InertiaTensor(moments[0], moments[1], moments[2]) {}

  const Vec3& moments() const { return moments_; }
  double operator[](int axis) const { return moments_[axis]; }
  /// Ii + Ij >= Ik for every permutation.
  bool is_physical() const;

 private:
  Vec3 moments_;
};

struct BodyState {
  Quaternion q;
  AngularVelocity w = AngularVelocity::Zero();
};

/// 3-2-1 (yaw ψ, pitch θ, roll φ) Euler angles in degrees.
struct EulerAngles {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;

  double operator[](int axis) const { return axis == 0 ? phi : (axis == 1 ? theta : psi); }
};

/// Rigid-body Euler equations: returns dω/dt in rad/s².
Vec3 dynamics_rhs(const BodyState& state, const InertiaTensor& inertia, const Torque& mc,
                  const Torque& md);

/// Quaternion kinematics dq/dt = ½ Ω(ω) q.
Vec4 kinematics_rhs(const Quaternion& q, const AngularVelocity& w);

/// One classical RK4 step of the coupled attitude equations followed by
/// quaternion renormalization. Throws DivergedError on a non-finite result.
BodyState integrate_step(const BodyState& state, const InertiaTensor& inertia, const Torque& mc,
                         const Torque& md, double dt);

/// Direction cosine matrix C_I^B (inertial to body).
Mat3 quat_to_dcm(const Quaternion& q);

/// Inverse of quat_to_dcm; returns the representative with q4 >= 0.
Quaternion dcm_to_quat(const Mat3& dcm);

Quaternion euler_to_quat(const EulerAngles& e);

/// Within this many degrees of ±90° pitch the roll/yaw split is ambiguous.
inline constexpr double kGimbalLockMarginDeg = 0.01;

/// Converts to 3-2-1 angles. Near gimbal lock ψ is set to 0 and
/// `gimbal_lock` (when given) is set.
EulerAngles quat_to_euler(const Quaternion& q, bool* gimbal_lock = nullptr);

/// Error quaternion between the current attitude q and the commanded
/// attitude qc; (0,0,0,1) when they coincide.
Quaternion quaternion_error(const Quaternion& q, const Quaternion& qc);

/// Wraps an angle in degrees to (-180, 180].
double wrap_degrees(double deg);

/// Rotational kinetic energy ½ ωᵀIω.
double kinetic_energy(const BodyState& state, const InertiaTensor& inertia);
/// |Iω|.
double angular_momentum_norm(const BodyState& state, const InertiaTensor& inertia);

}  // namespace adcs
