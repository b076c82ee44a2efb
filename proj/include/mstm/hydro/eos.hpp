#pragma once

#include <cmath>

namespace mstm::hydro {

/// Ideal-gas closure: p = (gamma - 1) * rho * e, with a linear temperature
/// relation T = e / cv on top for the recorded temperature field.
struct IdealGas {
    double gamma = 1.4;
    double cv = 1.0;

    /// Pressure from density and internal energy per unit volume (rho * e).
    double pressure(double /*rho*/, double internal_energy_density) const {
        return (gamma - 1.0) * internal_energy_density;
    }

    double sound_speed(double rho, double p) const { return std::sqrt(gamma * p / rho); }

    /// Temperature from specific internal energy.
    double temperature(double e_specific) const { return e_specific / cv; }
};

/// Porosity from the density of the fully dense material; input clamped to
/// the physical band 0 <= rho <= rho_solid.
inline double porosity_of(double rho, double rho_solid) {
    if (rho < 0.0) rho = 0.0;
    if (rho > rho_solid) rho = rho_solid;
    return 1.0 - rho / rho_solid;
}

}  // namespace mstm::hydro
