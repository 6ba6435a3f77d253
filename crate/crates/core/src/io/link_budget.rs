//! Chamber link budget: `P_rx = EIRP + G_rx - path loss - cable loss`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light, m/s.
const C: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Receive (horn) antenna gain, dBi.
    pub g_rx_dbi: f64,
    pub path_loss_db: f64,
    pub cable_loss_db: f64,
}

impl LinkBudget {
    pub fn new(g_rx_dbi: f64, path_loss_db: f64, cable_loss_db: f64) -> Result<Self> {
        let lb = Self { g_rx_dbi, path_loss_db, cable_loss_db };
        lb.validate()?;
        Ok(lb)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.g_rx_dbi, self.path_loss_db, self.cable_loss_db].iter().all(|v| v.is_finite()) {
            return Err(Error::config("link budget terms must be finite"));
        }
        if self.path_loss_db < 0.0 || self.cable_loss_db < 0.0 {
            return Err(Error::config("path and cable losses must be non-negative"));
        }
        Ok(())
    }

    /// Budget for a free-space range of `distance_m` at `freq_hz`.
    pub fn free_space(g_rx_dbi: f64, distance_m: f64, freq_hz: f64, cable_loss_db: f64) -> Result<Self> {
        if !(distance_m > 0.0 && freq_hz > 0.0) {
            return Err(Error::config("distance and frequency must be positive"));
        }
        Self::new(g_rx_dbi, friis_path_loss_db(distance_m, freq_hz), cable_loss_db)
    }
}

/// `20 log10(4 pi d / lambda)`.
pub fn friis_path_loss_db(distance_m: f64, freq_hz: f64) -> f64 {
    let wavelength = C / freq_hz;
    20.0 * (4.0 * std::f64::consts::PI * distance_m / wavelength).log10()
}

pub fn eirp_from_prx(prx_dbm: f64, lb: &LinkBudget) -> f64 {
    prx_dbm - lb.g_rx_dbi + lb.path_loss_db + lb.cable_loss_db
}

pub fn prx_from_eirp(eirp_dbm: f64, lb: &LinkBudget) -> f64 {
    eirp_dbm + lb.g_rx_dbi - lb.path_loss_db - lb.cable_loss_db
}
