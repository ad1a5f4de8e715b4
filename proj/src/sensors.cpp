#include "adcs/sensors.hpp"

#include <cmath>
#include <numbers>

#include "adcs/errors.hpp"

namespace adcs {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double reduce_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  return r;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

Vec3 add_noise(const Vec3& v, double sigma, Rng& rng) {
  if (sigma == 0.0) return v;
  std::normal_distribution<double> n(0.0, sigma);
  // Draw order is fixed (x, y, z) so sequences are reproducible.
  const double nx = n(rng);
  const double ny = n(rng);
  const double nz = n(rng);
  return v + Vec3(nx, ny, nz);
}

DirectionVector unit(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("direction measurement has zero length");
  return v / n;
}

/// Greenwich mean sidereal angle, degrees.
double gmst_degrees(double jd) {
  return reduce_degrees(280.46061837 + 360.98564736629 * (jd - 2451545.0));
}

}  // namespace

void CalendarInstant::validate() const {
  if (year < 1900 || year > 2100) throw DomainError("calendar year outside 1900-2100");
  if (month < 1 || month > 12) throw DomainError("month must be in 1-12");
  if (day < 1 || day > days_in_month(year, month)) throw DomainError("day out of range for month");
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0.0 || second >= 61.0)
    throw DomainError("time of day out of range");
}

void GeoPosition::validate() const {
  if (!(std::abs(latitude_deg) <= 90.0)) throw DomainError("latitude must be within ±90°");
  if (!(longitude_deg > -180.0 && longitude_deg <= 180.0))
    throw DomainError("longitude must be within (-180°, 180°]");
  if (!(altitude_km >= 0.0)) throw DomainError("altitude must be nonnegative");
}

void NoiseSpec::validate() const {
  if (!(sigma_mag >= 0.0) || !(sigma_sun >= 0.0) || !(sigma_gyro >= 0.0))
    throw DomainError("noise standard deviations must be nonnegative");
}

double julian_date(const CalendarInstant& in) {
  in.validate();
  const double y = in.year;
  const double m = in.month;
  const double jd_day = 367.0 * y - std::trunc(7.0 * (y + std::trunc((m + 9.0) / 12.0)) / 4.0) +
                        std::trunc(275.0 * m / 9.0) + in.day + 1721013.5;
  return jd_day + ((in.second / 60.0 + in.minute) / 60.0 + in.hour) / 24.0;
}

SunEphemeris sun_ephemeris(double jd) {
  if (!(jd >= 2415020.5 && jd < 2488434.5))
    throw DomainError("Julian date outside the 1900-2100 ephemeris window");
  SunEphemeris s;
  s.centuries = (jd - 2451545.0) / 36525.0;
  const double t = s.centuries;
  s.mean_longitude_deg = reduce_degrees(280.4606184 + 36000.77005361 * t);
  s.mean_anomaly_deg = reduce_degrees(357.5277233 + 35999.05034 * t);
  const double m = s.mean_anomaly_deg * kDeg;
  s.ecliptic_longitude_deg = reduce_degrees(s.mean_longitude_deg + 1.914666471 * std::sin(m) +
                                            0.019994643 * std::sin(2.0 * m));
  s.obliquity_deg = 23.439291 - 0.0130042 * t;
  const double lam = s.ecliptic_longitude_deg * kDeg;
  const double eps = s.obliquity_deg * kDeg;
  s.direction = unit(Vec3(std::cos(lam), std::cos(eps) * std::sin(lam), std::sin(eps) * std::sin(lam)));
  return s;
}

DirectionVector sun_direction_inertial(double jd) { return sun_ephemeris(jd).direction; }

TiltedDipoleField::TiltedDipoleField(double reference_field_nt, double tilt_deg,
                                     double pole_longitude_deg)
    : b0_(reference_field_nt) {
  if (!(b0_ > 0.0)) throw DomainError("reference field strength must be positive");
  const double colat = tilt_deg * kDeg;
  const double lon = pole_longitude_deg * kDeg;
  axis_ = Vec3(std::sin(colat) * std::cos(lon), std::sin(colat) * std::sin(lon), std::cos(colat));
}

Vec3 TiltedDipoleField::field_earth_fixed(const GeoPosition& pos) const {
  pos.validate();
  const double lat = pos.latitude_deg * kDeg;
  const double lon = pos.longitude_deg * kDeg;
  const Vec3 rhat(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
  const double ratio = kEarthRadiusKm / (kEarthRadiusKm + pos.altitude_km);
  // Earth's dipole moment points toward the austral pole, hence the sign.
  return -b0_ * ratio * ratio * ratio * (3.0 * axis_.dot(rhat) * rhat - axis_);
}

Vec3 TiltedDipoleField::field_inertial(const GeoPosition& pos, const CalendarInstant& instant) const {
  const Vec3 b = field_earth_fixed(pos);
  const double g = gmst_degrees(julian_date(instant)) * kDeg;
  const double c = std::cos(g), s = std::sin(g);
  return {c * b[0] - s * b[1], s * b[0] + c * b[1], b[2]};
}

Vec3 magnetic_field_inertial(const GeoPosition& pos, const CalendarInstant& instant,
                             const MagneticFieldModel& model) {
  return model.field_inertial(pos, instant);
}

DirectionVector magnetometer_reading(const Vec3& b_inertial, const Quaternion& q,
                                     const NoiseSpec& noise, Rng& rng) {
  const double magnitude = b_inertial.norm();
  if (!(magnitude > 0.0)) throw DomainError("magnetometer reading requires a nonzero field");
  return unit(add_noise(quat_to_dcm(q) * b_inertial, noise.sigma_mag * magnitude, rng));
}

DirectionVector sun_sensor_reading(const DirectionVector& sun_inertial, const Quaternion& q,
                                   const NoiseSpec& noise, Rng& rng) {
  const double magnitude = sun_inertial.norm();
  if (!(magnitude > 0.0)) throw DomainError("sun sensor reading requires a nonzero direction");
  return unit(add_noise(quat_to_dcm(q) * sun_inertial, noise.sigma_sun * magnitude, rng));
}

AngularVelocity gyro_reading(const AngularVelocity& w, const NoiseSpec& noise, Rng& rng) {
  return add_noise(w, noise.sigma_gyro, rng);
}

SensorSuite::SensorSuite(const GeoPosition& geo, const CalendarInstant& epoch,
                         const NoiseSpec& noise, std::shared_ptr<const MagneticFieldModel> field)
    : noise_(noise) {
  noise_.validate();
  if (!field) field = std::make_shared<TiltedDipoleField>();
  // References and body readings go through the same normalization, so a
  // noiseless identity attitude reproduces the references bit for bit.
  mag_field_ = field->field_inertial(geo, epoch);
  sun_raw_ = sun_direction_inertial(julian_date(epoch));
  mag_inertial_ = unit(mag_field_);
  sun_inertial_ = unit(sun_raw_);
}

SensorReading SensorSuite::sample(const BodyState& truth, double t, Rng& rng) const {
  SensorReading r;
  r.t = t;
  r.mag_inertial = mag_inertial_;
  r.sun_inertial = sun_inertial_;
  r.mag_body = magnetometer_reading(mag_field_, truth.q, noise_, rng);
  r.sun_body = sun_sensor_reading(sun_raw_, truth.q, noise_, rng);
  r.gyro = gyro_reading(truth.w, noise_, rng);
  return r;
}

Quaternion triad_attitude(const SensorReading& r) {
  const auto frame = [](const Vec3& primary, const Vec3& secondary) {
    Mat3 m;
    const Vec3 t1 = primary.normalized();
    const Vec3 t2 = unit(primary.cross(secondary));
    m.col(0) = t1;
    m.col(1) = t2;
    m.col(2) = t1.cross(t2);
    return m;
  };
  const Mat3 body = frame(r.mag_body, r.sun_body);
  const Mat3 inertial = frame(r.mag_inertial, r.sun_inertial);
  return dcm_to_quat(body * inertial.transpose());
}

}  // namespace adcs
