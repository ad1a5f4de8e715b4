#include "adcs/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "adcs/errors.hpp"

namespace adcs {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool finite(const Vec4& v) { return v.allFinite(); }

struct Derivative {
  Vec4 dq;
  Vec3 dw;
};

Derivative rhs(const Vec4& q, const Vec3& w, const InertiaTensor& inertia, const Torque& torque) {
  const BodyState s{Quaternion::from_vec4(q), w};
  return {kinematics_rhs(s.q, w), dynamics_rhs(s, inertia, torque, Torque::Zero())};
}

}  // namespace

double Quaternion::norm() const { return std::sqrt(q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite quaternion");
  return {q1 / n, q2 / n, q3 / n, q4 / n};
}

InertiaTensor::InertiaTensor(double i1, double i2, double i3) : moments_(i1, i2, i3) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(moments_[i]) || moments_[i] <= 0.0)
      throw DomainError("principal moments of inertia must be finite and positive");
  }
  if (!is_physical()) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      spdlog::warn("inertia ({}, {}, {}) violates the triangle inequality", i1, i2, i3);
  }
}

bool InertiaTensor::is_physical() const {
  const auto& m = moments_;
  return m[0] + m[1] >= m[2] && m[1] + m[2] >= m[0] && m[0] + m[2] >= m[1];
}

Vec3 dynamics_rhs(const BodyState& state, const InertiaTensor& inertia, const Torque& mc,
                  const Torque& md) {
  const Vec3& w = state.w;
  const Vec3& I = inertia.moments();
  return {(mc[0] + md[0] - (I[2] - I[1]) * w[1] * w[2]) / I[0],
          (mc[1] + md[1] - (I[0] - I[2]) * w[0] * w[2]) / I[1],
          (mc[2] + md[2] - (I[1] - I[0]) * w[1] * w[0]) / I[2]};
}

Vec4 kinematics_rhs(const Quaternion& q, const AngularVelocity& w) {
  Eigen::Matrix4d omega;
  // clang-format off
  omega <<     0.0,  w[2], -w[1], w[0],
             -w[2],   0.0,  w[0], w[1],
              w[1], -w[0],   0.0, w[2],
             -w[0], -w[1], -w[2],  0.0;
  // clang-format on
  return 0.5 * omega * q.vec4();
}

BodyState integrate_step(const BodyState& state, const InertiaTensor& inertia, const Torque& mc,
                         const Torque& md, double dt) {
  if (!(dt > 0.0)) throw DomainError("integration step must be positive");
  const Torque torque = mc + md;
  const Vec4 q0 = state.q.vec4();
  const Vec3 w0 = state.w;

  const Derivative k1 = rhs(q0, w0, inertia, torque);
  const Derivative k2 = rhs(q0 + 0.5 * dt * k1.dq, w0 + 0.5 * dt * k1.dw, inertia, torque);
  const Derivative k3 = rhs(q0 + 0.5 * dt * k2.dq, w0 + 0.5 * dt * k2.dw, inertia, torque);
  const Derivative k4 = rhs(q0 + dt * k3.dq, w0 + dt * k3.dw, inertia, torque);

  const Vec4 q = q0 + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
  const Vec3 w = w0 + dt / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  if (!finite(q) || !w.allFinite() || q.norm() == 0.0)
    throw DivergedError("attitude integration produced a non-finite state");
  return {Quaternion::from_vec4(q / q.norm()), w};
}

Mat3 quat_to_dcm(const Quaternion& q) {
  const double q1 = q.q1, q2 = q.q2, q3 = q.q3, q4 = q.q4;
  Mat3 c;
  // clang-format off
  c << 1.0 - 2.0 * (q2 * q2 + q3 * q3), 2.0 * (q1 * q2 + q3 * q4),       2.0 * (q1 * q3 - q2 * q4),
       2.0 * (q2 * q1 - q3 * q4),       1.0 - 2.0 * (q1 * q1 + q3 * q3), 2.0 * (q2 * q3 + q1 * q4),
       2.0 * (q3 * q1 + q2 * q4),       2.0 * (q3 * q2 - q1 * q4),       1.0 - 2.0 * (q1 * q1 + q2 * q2);
  // clang-format on
  return c;
}

Quaternion dcm_to_quat(const Mat3& c) {
  // Shepperd: pivot on the largest of the four squared components.
  const double tr = c.trace();
  const std::array<double, 4> s{1.0 + 2.0 * c(0, 0) - tr, 1.0 + 2.0 * c(1, 1) - tr,
                                1.0 + 2.0 * c(2, 2) - tr, 1.0 + tr};
  int k = 0;
  for (int i = 1; i < 4; ++i)
    if (s[i] > s[k]) k = i;
  const double r = std::sqrt(s[k]);
  const double f = 0.5 / r;
  Quaternion q;
  switch (k) {
    case 0:
      q = {0.5 * r, f * (c(0, 1) + c(1, 0)), f * (c(0, 2) + c(2, 0)), f * (c(1, 2) - c(2, 1))};
      break;
    case 1:
      q = {f * (c(0, 1) + c(1, 0)), 0.5 * r, f * (c(1, 2) + c(2, 1)), f * (c(2, 0) - c(0, 2))};
      break;
    case 2:
      q = {f * (c(0, 2) + c(2, 0)), f * (c(1, 2) + c(2, 1)), 0.5 * r, f * (c(0, 1) - c(1, 0))};
      break;
    default:
      q = {f * (c(1, 2) - c(2, 1)), f * (c(2, 0) - c(0, 2)), f * (c(0, 1) - c(1, 0)), 0.5 * r};
      break;
  }
  if (q.q4 < 0.0) q = -q;
  return q.normalized();
}

Quaternion euler_to_quat(const EulerAngles& e) {
  const double cf = std::cos(0.5 * e.phi * kDeg), sf = std::sin(0.5 * e.phi * kDeg);
  const double ct = std::cos(0.5 * e.theta * kDeg), st = std::sin(0.5 * e.theta * kDeg);
  const double cp = std::cos(0.5 * e.psi * kDeg), sp = std::sin(0.5 * e.psi * kDeg);
  return Quaternion{sf * ct * cp - cf * st * sp, cf * st * cp + sf * ct * sp,
                    cf * ct * sp - sf * st * cp, cf * ct * cp + sf * st * sp}
      .normalized();
}

EulerAngles quat_to_euler(const Quaternion& q, bool* gimbal_lock) {
  const Mat3 c = quat_to_dcm(q);
  const double theta = -std::asin(std::clamp(c(0, 2), -1.0, 1.0)) / kDeg;
  const bool locked = std::abs(theta) > 90.0 - kGimbalLockMarginDeg;
  if (gimbal_lock) *gimbal_lock = locked;
  EulerAngles e;
  e.theta = theta;
  if (locked) {
    e.psi = 0.0;
    e.phi = (theta > 0.0 ? std::atan2(c(1, 0), c(1, 1)) : std::atan2(-c(1, 0), c(1, 1))) / kDeg;
  } else {
    e.phi = std::atan2(c(1, 2), c(2, 2)) / kDeg;
    e.psi = std::atan2(c(0, 1), c(0, 0)) / kDeg;
  }
  e.phi = wrap_degrees(e.phi);
  e.psi = wrap_degrees(e.psi);
  return e;
}

Quaternion quaternion_error(const Quaternion& q, const Quaternion& qc) {
  Eigen::Matrix4d m;
  // clang-format off
  m <<  qc.q4,  qc.q3, -qc.q2, -qc.q1,
       -qc.q3,  qc.q4,  qc.q1, -qc.q2,
        qc.q2, -qc.q1,  qc.q4, -qc.q3,
        qc.q1,  qc.q2,  qc.q3,  qc.q4;
  // clang-format on
  return Quaternion::from_vec4(m * q.vec4()).normalized();
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

double kinetic_energy(const BodyState& state, const InertiaTensor& inertia) {
  return 0.5 * state.w.dot(inertia.moments().cwiseProduct(state.w));
}

double angular_momentum_norm(const BodyState& state, const InertiaTensor& inertia) {
  return inertia.moments().cwiseProduct(state.w).norm();
}

}  // namespace adcs
