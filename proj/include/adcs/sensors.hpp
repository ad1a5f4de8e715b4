#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "adcs/dynamics.hpp"

namespace adcs {

/// Every stochastic component draws from one of these, explicitly passed.
using Rng = std::mt19937_64;

/// UT calendar instant. The ephemeris formulas are valid for 1900–2100.
struct CalendarInstant {
  int year = 2000;
  int month = 1;
  int day = 1;
  int hour = 12;
  int minute = 0;
  double second = 0.0;

  /// Throws DomainError for an invalid date or one outside the window.
  void validate() const;
};

struct GeoPosition {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_km = 500.0;

  void validate() const;
};

/// Unit 3-vector.
using DirectionVector = Vec3;

struct NoiseSpec {
  double sigma_mag = 1e-3;
  double sigma_sun = 1e-3;
  double sigma_gyro = 1e-4;  // rad/s
  std::uint64_t seed = 0;

  static NoiseSpec off() { return {0.0, 0.0, 0.0, 0}; }
  void validate() const;
};

struct SensorReading {
  DirectionVector mag_body = DirectionVector::UnitX();
  DirectionVector sun_body = DirectionVector::UnitY();
  AngularVelocity gyro = AngularVelocity::Zero();
  DirectionVector mag_inertial = DirectionVector::UnitX();
  DirectionVector sun_inertial = DirectionVector::UnitY();
  double t = 0.0;
};

/// Julian date; INT is truncation toward zero.
double julian_date(const CalendarInstant& instant);

/// Intermediate quantities of the low-precision solar ephemeris (degrees).
struct SunEphemeris {
  double centuries = 0.0;  // T, Julian centuries since J2000
  double mean_longitude_deg = 0.0;
  double mean_anomaly_deg = 0.0;
  double ecliptic_longitude_deg = 0.0;
  double obliquity_deg = 0.0;
  DirectionVector direction = DirectionVector::UnitX();
};

SunEphemeris sun_ephemeris(double jd);
DirectionVector sun_direction_inertial(double jd);

/// Source of the inertial-frame geomagnetic field vector (nT).
class MagneticFieldModel {
 public:
  virtual ~MagneticFieldModel() = default;
  virtual Vec3 field_inertial(const GeoPosition& pos, const CalendarInstant& instant) const = 0;
};

/// Centered dipole tilted away from the rotation axis. The dipole pole sits
/// at colatitude `tilt_deg` and east longitude `pole_longitude_deg`.
class TiltedDipoleField final : public MagneticFieldModel {
 public:
  static constexpr double kEarthRadiusKm = 6371.2;

  explicit TiltedDipoleField(double reference_field_nt = 30000.0, double tilt_deg = 11.5,
                             double pole_longitude_deg = -72.6);

  Vec3 field_inertial(const GeoPosition& pos, const CalendarInstant& instant) const override;
  /// Same field in Earth-fixed coordinates.
  Vec3 field_earth_fixed(const GeoPosition& pos) const;
  /// Unit dipole axis in Earth-fixed coordinates (points to the boreal pole).
  const Vec3& axis() const { return axis_; }
  double reference_field() const { return b0_; }

 private:
  double b0_;
  Vec3 axis_;
};

Vec3 magnetic_field_inertial(const GeoPosition& pos, const CalendarInstant& instant,
                             const MagneticFieldModel& model = TiltedDipoleField{});

/// Rotates the inertial field into the body, adds per-axis white noise of
/// standard deviation σ_mag·|B| and normalizes. Throws DomainError on a
/// zero field.
DirectionVector magnetometer_reading(const Vec3& b_inertial, const Quaternion& q,
                                     const NoiseSpec& noise, Rng& rng);

DirectionVector sun_sensor_reading(const DirectionVector& sun_inertial, const Quaternion& q,
                                   const NoiseSpec& noise, Rng& rng);

AngularVelocity gyro_reading(const AngularVelocity& w, const NoiseSpec& noise, Rng& rng);

/// Bundles a fixed satellite position and epoch with the sensor noise.
/// Inertial reference directions are evaluated once at the epoch.
class SensorSuite {
 public:
  SensorSuite(const GeoPosition& geo, const CalendarInstant& epoch, const NoiseSpec& noise,
              std::shared_ptr<const MagneticFieldModel> field = nullptr);

  SensorReading sample(const BodyState& truth, double t, Rng& rng) const;

  const DirectionVector& mag_inertial() const { return mag_inertial_; }
  const DirectionVector& sun_inertial() const { return sun_inertial_; }
  const NoiseSpec& noise() const { return noise_; }

 private:
  NoiseSpec noise_;
  Vec3 mag_field_;  // nT
  Vec3 sun_raw_;
  DirectionVector mag_inertial_;
  DirectionVector sun_inertial_;
};

/// Deterministic two-vector attitude solution; the magnetometer is the
/// primary vector. Returns the q4 >= 0 representative.
Quaternion triad_attitude(const SensorReading& reading);

}  // namespace adcs
