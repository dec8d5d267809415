#pragma once

namespace iontrap {

// CODATA 2018 values, SI units throughout.
namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double elementary_charge = 1.602176634e-19;  // C (exact)
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double epsilon0 = 8.8541878128e-12;          // F/m
inline constexpr double electron_volt = 1.602176634e-19;      // J (exact)
} // namespace constants

// All public interfaces carry lengths in micrometres; internal field and
// energy computations are done in SI.
inline constexpr double um_to_m = 1e-6;
inline constexpr double m_to_um = 1e6;

inline constexpr double two_pi = 2.0 * constants::pi;

} // namespace iontrap
