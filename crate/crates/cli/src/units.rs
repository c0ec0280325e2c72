//! Conversion between user-facing values and reduced units.

use anyhow::{bail, Context, Result};
use ptcs_core::physical_model::{PhysicalConfig, Units};

/// User I/O is in the config's physical units when `si` is set, and in
/// reduced units (`L = pi`, `hbar = 1`, `E0 = 1`) otherwise.
#[derive(Clone, Copy, Debug)]
pub struct Boundary {
    pub config: PhysicalConfig,
    pub si: bool,
}

impl Boundary {
    pub fn new(config: Option<PhysicalConfig>, units: Option<Units>, nu: Option<f64>) -> Result<Self> {
        let units = units.or(config.map(|c| c.units())).unwrap_or(Units::Natural);
        let si = units == Units::Si;
        let base = match (config, si) {
            (Some(c), _) => c,
            (None, true) => bail!("--units SI needs --config with the well width and particle mass"),
            (None, false) => PhysicalConfig::reduced(0.0)?,
        };
        let nu = nu.unwrap_or(base.nu());
        let config = base.with_nu(nu).context("invalid --nu")?;
        Ok(Self { config, si })
    }

    pub fn nu(&self) -> f64 {
        self.config.nu()
    }

    pub fn position_in(&self, q: f64) -> Result<f64> {
        if self.si {
            Ok(self.config.position_to_reduced(q)?)
        } else {
            Ok(q)
        }
    }

    pub fn momentum_in(&self, p: f64) -> f64 {
        if self.si {
            self.config.momentum_to_reduced(p)
        } else {
            p
        }
    }

    pub fn energy_in(&self, e: f64) -> f64 {
        if self.si {
            self.config.energy_to_reduced(e)
        } else {
            e
        }
    }

    pub fn time_in(&self, t: f64) -> f64 {
        if self.si {
            self.config.time_to_reduced(t)
        } else {
            t
        }
    }

    pub fn position_out(&self, x: f64) -> f64 {
        if self.si {
            self.config.position_from_reduced(x)
        } else {
            x
        }
    }

    pub fn momentum_out(&self, p: f64) -> f64 {
        if self.si {
            self.config.momentum_from_reduced(p)
        } else {
            p
        }
    }

    pub fn energy_out(&self, e: f64) -> f64 {
        if self.si {
            self.config.energy_from_reduced(e)
        } else {
            e
        }
    }

    pub fn time_out(&self, t: f64) -> f64 {
        if self.si {
            self.config.time_from_reduced(t)
        } else {
            t
        }
    }

    pub fn wavefunction_scale(&self) -> f64 {
        if self.si {
            self.config.wavefunction_scale()
        } else {
            1.0
        }
    }

    pub fn density_scale(&self) -> f64 {
        if self.si {
            self.config.density_scale()
        } else {
            1.0
        }
    }

    pub fn unit_label(&self) -> &'static str {
        if self.si {
            "SI"
        } else {
            "reduced"
        }
    }

    /// Metadata lines shared by every output file.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("units".to_string(), self.unit_label().to_string()),
            ("nu".to_string(), self.nu().to_string()),
        ];
        if self.si {
            m.push(("L".into(), self.config.length().to_string()));
            m.push(("mass".into(), self.config.mass().to_string()));
            m.push(("hbar".into(), self.config.hbar().to_string()));
            m.push(("E0".into(), self.config.e0().to_string()));
        }
        m
    }
}
