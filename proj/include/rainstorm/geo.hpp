// Spherical geometry helpers: lat/lon <-> unit vectors, great-circle
// distance, precipitation-weighted centers of gravity on the sphere.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace rainstorm {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

struct LatLon {
    double lat = 0.0;  // degrees
    double lon = 0.0;  // degrees
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline Eigen::Vector3d to_unit_vector(const LatLon& p) {
    const double lat = deg2rad(p.lat), lon = deg2rad(p.lon);
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

inline LatLon to_latlon(const Eigen::Vector3d& v) {
    return {rad2deg(std::asin(std::clamp(v.z() / v.norm(), -1.0, 1.0))),
            rad2deg(std::atan2(v.y(), v.x()))};
}

inline double great_circle_km(const LatLon& a, const LatLon& b) {
    // haversine
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1, dlam = deg2rad(b.lon - a.lon);
    const double s = std::sin(dphi / 2), t = std::sin(dlam / 2);
    const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double chordal_km(const LatLon& a, const LatLon& b) {
    return (to_unit_vector(a) - to_unit_vector(b)).norm() * kEarthRadiusKm;
}

// Weighted mean of unit vectors, renormalized back onto the sphere.
// Invariant to rotation of all inputs. Degenerate (near-antipodal) input
// with vanishing resultant is an error.
inline LatLon spherical_weighted_mean(std::span<const LatLon> points,
                                      std::span<const double> weights) {
    if (points.empty() || points.size() != weights.size())
        throw std::invalid_argument("spherical_weighted_mean: empty or mismatched inputs");
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double wtot = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        sum += weights[i] * to_unit_vector(points[i]);
        wtot += weights[i];
    }
    if (wtot <= 0.0)
        throw std::invalid_argument("spherical_weighted_mean: nonpositive total weight");
    sum /= wtot;
    if (sum.norm() < 1e-9)
        throw std::domain_error("spherical_weighted_mean: degenerate (antipodal) configuration");
    return to_latlon(sum);
}

}  // namespace rainstorm
