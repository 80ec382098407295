//! Received-power arithmetic and the synthetic path-loss model.
//!
//! All powers are linear watts. Decibels appear only at the edges
//! (reports, maps, tests against quoted dB figures): dB values do not add,
//! so combining signals always goes through the linear domain.

use thiserror::Error;

use crate::scenario::{ReceivingPoint, ReceptionLink, Transmitter};

/// Mean Earth radius used for great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Colocated points are treated as this far apart.
pub const MIN_DISTANCE_KM: f64 = 0.001;

#[derive(Debug, Error, PartialEq)]
pub enum PropagationError {
    #[error("decibel conversion requires a positive value, got {0}")]
    NonPositive(f64),
    #[error("cannot combine an empty list of powers")]
    Empty,
}

pub fn db_from_linear(x: f64) -> Result<f64, PropagationError> {
    if x > 0.0 && x.is_finite() {
        Ok(10.0 * x.log10())
    } else {
        Err(PropagationError::NonPositive(x))
    }
}

pub fn linear_from_db(d: f64) -> f64 {
    10f64.powf(d / 10.0)
}

/// Non-coherent sum of powers given in dB: `10·log10(Σ 10^(v/10))`.
///
/// Values are scaled by the largest entry before exponentiation so that
/// very large or very small dB figures do not overflow.
pub fn combine_powers_db(values: &[f64]) -> Result<f64, PropagationError> {
    if values.is_empty() {
        return Err(PropagationError::Empty);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = values.iter().map(|v| 10f64.powf((v - max) / 10.0)).sum();
    Ok(max + 10.0 * sum.log10())
}

/// Useful power `a_rt · p_t · y_t`, watts.
pub fn received_useful_power(link: &ReceptionLink, p_t: f64, y_t: f64) -> f64 {
    link.a_useful * p_t * y_t
}

/// Interfering power `ā_rt · PR · p_t · y_t`, watts.
pub fn received_interfering_power(
    link: &ReceptionLink,
    p_t: f64,
    y_t: f64,
    protection_ratio: f64,
) -> f64 {
    link.a_interf * protection_ratio * p_t * y_t
}

/// Power-law attenuation with a hard range limit.
///
/// `a_useful = min(1, reference_loss / d^exponent)` for `d ≤ cutoff_km`,
/// zero beyond; the interfering coefficient is the useful one inflated by
/// `interference_margin` and clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Linear fading at 1 km.
    pub reference_loss: f64,
    pub exponent: f64,
    pub interference_margin: f64,
    pub cutoff_km: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            reference_loss: 1e-7,
            exponent: 3.5,
            interference_margin: 1.0,
            cutoff_km: 150.0,
        }
    }
}

impl PathLossModel {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.reference_loss > 0.0 && self.reference_loss <= 1.0) {
            out.push("path model: reference_loss must lie in (0,1]".to_string());
        }
        if !(self.exponent >= 2.0) {
            out.push("path model: exponent must be at least 2".to_string());
        }
        if !(self.interference_margin >= 1.0) {
            out.push("path model: interference_margin must be at least 1".to_string());
        }
        if !(self.cutoff_km > 0.0) {
            out.push("path model: cutoff_km must be positive".to_string());
        }
        out
    }

    /// `(a_useful, a_interf)` at distance `d_km`.
    pub fn fading_at(&self, d_km: f64) -> (f64, f64) {
        if d_km > self.cutoff_km {
            return (0.0, 0.0);
        }
        let d = d_km.max(MIN_DISTANCE_KM);
        let useful = (self.reference_loss / d.powf(self.exponent)).min(1.0);
        let interf = (self.interference_margin * useful).min(1.0);
        (useful, interf)
    }
}

/// Haversine distance on a spherical Earth, km.
pub fn great_circle_km(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn path_fading(tx: &Transmitter, rx: &ReceivingPoint, model: &PathLossModel) -> (f64, f64) {
    model.fading_at(great_circle_km(tx.lon, tx.lat, rx.lon, rx.lat))
}
