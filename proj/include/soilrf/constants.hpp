#pragma once

namespace soilrf::constants {

// CODATA 2018 values, shared by every module that touches propagation math.
inline constexpr double kSpeedOfLight = 299792458.0;          // m/s
inline constexpr double kVacuumPermeability = 1.25663706212e-6;  // H/m
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Magnitude floor applied before log10 and before reference division so deep
// nulls never produce -inf or NaN downstream.
inline constexpr double kMagnitudeFloor = 1e-12;

}  // namespace soilrf::constants
