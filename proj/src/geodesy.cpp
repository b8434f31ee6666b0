#include "cteskf/geodesy.h"

#include "cteskf/ins.h"

#include <cmath>

namespace cteskf::ins {

namespace {
constexpr double kE2 = kWgs84F * (2.0 - kWgs84F);
}

Vec3 geodeticToEcef(const Geodetic& llh) {
  const double s = std::sin(llh.lat);
  const double c = std::cos(llh.lat);
  const double n = kWgs84A / std::sqrt(1.0 - kE2 * s * s);
  return {(n + llh.height) * c * std::cos(llh.lon), (n + llh.height) * c * std::sin(llh.lon),
          (n * (1.0 - kE2) + llh.height) * s};
}

Geodetic ecefToGeodetic(const Vec3& r) {
  const double p = std::hypot(r.x(), r.y());
  Geodetic out;
  out.lon = std::atan2(r.y(), r.x());
  double lat = std::atan2(r.z(), p * (1.0 - kE2));
  double h = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double s = std::sin(lat);
    const double n = kWgs84A / std::sqrt(1.0 - kE2 * s * s);
    h = p / std::cos(lat) - n;
    lat = std::atan2(r.z(), p * (1.0 - kE2 * n / (n + h)));
  }
  out.lat = lat;
  out.height = h;
  return out;
}

Mat3 nedToEcef(double lat, double lon) {
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  Mat3 c;
  c << -sl * co, -so, -cl * co,
       -sl * so, co, -cl * so,
       cl, 0.0, -sl;
  return c;
}

double normalGravity(double lat, double height) {
  constexpr double ge = 9.7803253359;
  constexpr double k = 0.00193185265241;
  constexpr double m = 0.00344978650684;
  const double s2 = std::sin(lat) * std::sin(lat);
  const double g0 = ge * (1.0 + k * s2) / std::sqrt(1.0 - kE2 * s2);
  return g0 * (1.0 - 2.0 / kWgs84A * (1.0 + kWgs84F + m - 2.0 * kWgs84F * s2) * height +
               3.0 * height * height / (kWgs84A * kWgs84A));
}

}  // namespace cteskf::ins
