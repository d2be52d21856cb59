//! J2 secular RAAN drift and the contact periods it induces between
//! constellation planes and parking orbits.
//!
//! All rates are expressed in rad/day and all periods in days so that they
//! line up with the daily Markov time step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6378.137;
pub const EARTH_J2: f64 = 1.08263e-3;
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Circular orbit description used for the secular drift computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitGeometry {
    /// km
    pub semi_major_axis: f64,
    /// rad
    pub inclination: f64,
    /// km
    #[serde(default = "default_earth_radius")]
    pub earth_radius: f64,
    #[serde(default = "default_j2")]
    pub j2: f64,
    /// km^3/s^2
    #[serde(default = "default_mu")]
    pub mu_earth: f64,
}

fn default_earth_radius() -> f64 {
    EARTH_RADIUS_KM
}
fn default_j2() -> f64 {
    EARTH_J2
}
fn default_mu() -> f64 {
    EARTH_MU_KM3_S2
}

impl OrbitGeometry {
    /// Orbit with the standard Earth constants.
    pub fn new(semi_major_axis: f64, inclination: f64) -> Self {
        Self {
            semi_major_axis,
            inclination,
            earth_radius: EARTH_RADIUS_KM,
            j2: EARTH_J2,
            mu_earth: EARTH_MU_KM3_S2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.semi_major_axis,
            self.inclination,
            self.earth_radius,
            self.j2,
            self.mu_earth,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("orbit", "non-finite orbit parameter"));
        }
        if self.earth_radius <= 0.0 || self.mu_earth <= 0.0 {
            return Err(Error::invalid(
                "orbit",
                "earth radius and gravitational parameter must be positive",
            ));
        }
        if self.semi_major_axis <= self.earth_radius {
            return Err(Error::invalid(
                "semi_major_axis",
                format!(
                    "{} km does not exceed the Earth radius {} km",
                    self.semi_major_axis, self.earth_radius
                ),
            ));
        }
        if !(0.0..=PI).contains(&self.inclination) {
            return Err(Error::invalid(
                "inclination",
                format!("{} rad is outside [0, pi]", self.inclination),
            ));
        }
        Ok(())
    }
}

/// Secular RAAN drift rate in rad/day.
pub fn raan_drift_rate(orbit: &OrbitGeometry) -> Result<f64> {
    orbit.validate()?;
    let a = orbit.semi_major_axis;
    let mean_motion = (orbit.mu_earth / (a * a * a)).sqrt();
    let per_second = -1.5 * mean_motion * orbit.earth_radius.powi(2) * orbit.j2 / (a * a)
        * orbit.inclination.cos();
    Ok(per_second * SECONDS_PER_DAY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactGeometry {
    pub n_planes: usize,
    pub n_park: usize,
    pub plane_orbit: OrbitGeometry,
    pub park_orbit: OrbitGeometry,
}

/// Time between successive contacts, seen from a plane and from a parking orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPeriods {
    /// Days between a plane's contacts with successive parking orbits.
    pub t_plane: f64,
    /// Days between a parking orbit's contacts with successive planes.
    pub t_park: f64,
}

/// Contact periods from a relative drift rate `|dΩ_plane - dΩ_park|` in rad/day.
pub fn contact_periods_from_drift(
    n_planes: usize,
    n_park: usize,
    relative_drift: f64,
) -> Result<ContactPeriods> {
    if n_planes == 0 {
        return Err(Error::invalid("n_planes", "must be at least 1"));
    }
    if n_park == 0 {
        return Err(Error::invalid("n_park", "must be at least 1"));
    }
    let drift = relative_drift.abs();
    if !drift.is_finite() {
        return Err(Error::invalid("relative_drift", "must be finite"));
    }
    if drift == 0.0 {
        return Err(Error::NoRelativeDrift);
    }
    // Both periods share the synodic period 2π/|ΔΩ̇|, so the ratio
    // t_plane/t_park = n_planes/n_park holds up to one rounding each.
    let synodic = 2.0 * PI / drift;
    Ok(ContactPeriods {
        t_plane: synodic / n_park as f64,
        t_park: synodic / n_planes as f64,
    })
}

/// Contact periods derived from the plane and parking orbit geometry.
pub fn contact_periods(geom: &ContactGeometry) -> Result<ContactPeriods> {
    let plane_rate = raan_drift_rate(&geom.plane_orbit)?;
    let park_rate = raan_drift_rate(&geom.park_orbit)?;
    if (geom.plane_orbit.inclination - geom.park_orbit.inclination).abs() > 1e-12 {
        return Err(Error::invalid(
            "park_orbit.inclination",
            "parking orbits must share the constellation inclination",
        ));
    }
    if geom.plane_orbit.semi_major_axis == geom.park_orbit.semi_major_axis {
        return Err(Error::NoRelativeDrift);
    }
    contact_periods_from_drift(geom.n_planes, geom.n_park, plane_rate - park_rate)
}

/// Relative drift that produces the requested parking contact period.
pub fn relative_drift_for_park_period(n_planes: usize, t_park: f64) -> f64 {
    2.0 * PI / (n_planes as f64 * t_park)
}
