#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace vucoord {

/// Polar complex quantity in per-unit. Angle is kept in radians and
/// normalized to (-pi, pi]; scenario files carry degrees.
struct Phasor {
    double magnitude = 0.0;
    double angle = 0.0;

    static double normalize_angle(double rad) {
        const double two_pi = 2.0 * std::numbers::pi;
        double a = std::remainder(rad, two_pi);
        if (a <= -std::numbers::pi) a += two_pi;
        return a;
    }

    static Phasor from_degrees(double mag, double deg) {
        return Phasor{mag, normalize_angle(deg * std::numbers::pi / 180.0)};
    }

    double degrees() const { return angle * 180.0 / std::numbers::pi; }

    std::complex<double> to_complex() const {
        return std::polar(magnitude, angle);
    }
};

} // namespace vucoord
