#pragma once

#include "cteskf/types.h"

namespace cteskf::ins {

struct Geodetic {
  double lat = 0.0;     // rad
  double lon = 0.0;     // rad
  double height = 0.0;  // m above the WGS-84 ellipsoid
};

Vec3 geodeticToEcef(const Geodetic& llh);
Geodetic ecefToGeodetic(const Vec3& r);

/// C_n^e for a north-east-down frame at the given latitude and longitude.
Mat3 nedToEcef(double lat, double lon);

/// Somigliana normal gravity magnitude with the second-order free-air correction, m/s^2.
double normalGravity(double lat, double height);

}  // namespace cteskf::ins
