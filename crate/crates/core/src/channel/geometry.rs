use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Earth's gravitational parameter, m^3/s^2.
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Mean Earth radius, m.
pub const R_EARTH: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationGeometry {
    /// Orbital altitude, m.
    pub altitude: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Largest Doppler shift, Hz; geometric values are clipped to it.
    pub nu_max: f64,
}

impl Default for ConstellationGeometry {
    fn default() -> Self {
        Self {
            altitude: 550e3,
            carrier_freq: 10e9,
            nu_max: 178.2e3,
        }
    }
}

impl ConstellationGeometry {
    /// Circular orbital speed `sqrt(mu / (R_E + h))`.
    pub fn orbital_speed(&self) -> f64 {
        (MU_EARTH / (R_EARTH + self.altitude)).sqrt()
    }
}

/// Doppler shift of a terminal seeing the satellite at `elevation` (rad)
/// for an in-plane pass, ignoring Earth rotation.
///
/// The line-of-sight component of the orbital velocity is
/// `v R_E cos(elevation) / (R_E + h)`; the result is clipped to
/// `[0, nu_max]`.
pub fn doppler_from_geometry(elevation: f64, geo: &ConstellationGeometry) -> Result<f64> {
    if !(elevation > 0.0 && elevation <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::Config(format!("elevation {elevation} rad outside (0, pi/2]")));
    }
    let v = geo.orbital_speed();
    let cos_contact = R_EARTH * elevation.cos() / (R_EARTH + geo.altitude);
    let nu = geo.carrier_freq / SPEED_OF_LIGHT * v * cos_contact;
    Ok(nu.clamp(0.0, geo.nu_max))
}
