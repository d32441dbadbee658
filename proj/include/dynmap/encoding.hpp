#pragma once

#include <array>
#include <cmath>

#include "dynmap/dataset.hpp"

namespace dynmap {

// WGS84 ellipsoid
inline constexpr double kWgs84SemiMajorM = 6378137.0;
inline constexpr double kWgs84Flattening = 1.0 / 298.257223563;
inline constexpr double kWgs84E2 = kWgs84Flattening * (2.0 - kWgs84Flattening);

struct ContextInputs {
    std::array<double, 2> time_vec{};  // entries in [-1, 1]
    std::array<double, 3> loc_vec{};   // ECEF / a, norm in [b/a, 1]
    OverheadFeature overhead;
};

// [month, hour] each mapped linearly onto [-1, 1]. Note the representation is
// not cyclic: December/January and 23h/0h are maximally distant.
inline std::array<double, 2> encode_time(const TimeOfCapture& t) {
    return {2.0 * (t.month - 1) / 11.0 - 1.0, 2.0 * t.hour / 23.0 - 1.0};
}

// ECEF at height 0 on the WGS84 ellipsoid, scaled by the semi-major axis so
// every output lies in the unit ball.
inline std::array<double, 3> encode_location(const GeoLocation& loc) {
    const double phi = loc.lat_deg * M_PI / 180.0;
    const double lam = loc.lon_deg * M_PI / 180.0;
    const double sin_phi = std::sin(phi);
    const double cos_phi = std::cos(phi);
    const double n = kWgs84SemiMajorM / std::sqrt(1.0 - kWgs84E2 * sin_phi * sin_phi);
    const double x = n * cos_phi * std::cos(lam);
    const double y = n * cos_phi * std::sin(lam);
    const double z = n * (1.0 - kWgs84E2) * sin_phi;
    return {x / kWgs84SemiMajorM, y / kWgs84SemiMajorM, z / kWgs84SemiMajorM};
}

inline ContextInputs build_context_inputs(const SampleRecord& r) {
    ContextInputs in;
    in.time_vec = encode_time(r.time);
    in.loc_vec = encode_location(r.location);
    in.overhead = r.overhead;
    return in;
}

}  // namespace dynmap
