//! Physical parameters and the dimensionless representation used by the rest
//! of the crate.
//!
//! Every numerical routine works with the reduced variables
//!
//! * position `xt = pi x / L`, so the well is `[0, pi]`,
//! * momentum `pt = p L / (pi hbar)`,
//! * energy `Et = E / E0` with `E0 = hbar^2 pi^2 / (2 m L^2)`,
//! * time `tt = t E0 / hbar`.
//!
//! In these units the kinetic operator is `-d^2/dxt^2`, the phase-space
//! measure `dq dp / (2 pi hbar)` becomes `dxt dpt / (2 pi)` and the infinite
//! well revives at `tt = 2 pi`. SI values only appear at the edges.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// CODATA 2018 reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// CODATA 2018 electron mass, kg.
pub const ELECTRON_MASS_SI: f64 = 9.109_383_701_5e-31;
/// Joules per electron-volt.
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
pub const ANGSTROM: f64 = 1e-10;

/// Default distance kept from the walls, as a fraction of `L`.
pub const DEFAULT_MARGIN_FRACTION: f64 = 1e-6;

/// Default wall margin in reduced units.
pub const DEFAULT_Q_MARGIN: f64 = DEFAULT_MARGIN_FRACTION * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Units {
    #[serde(rename = "SI", alias = "si")]
    Si,
    #[default]
    #[serde(rename = "natural")]
    Natural,
}

impl std::str::FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SI" | "si" => Ok(Units::Si),
            "natural" => Ok(Units::Natural),
            other => Err(Error::Unknown {
                kind: "unit system",
                name: other.to_owned(),
            }),
        }
    }
}

/// Well width, particle mass, action unit and potential strength.
///
/// Immutable after construction; `e0` is always derived from the other fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicalConfig {
    length: f64,
    mass: f64,
    hbar: f64,
    nu: f64,
    e0: f64,
    units: Units,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(invalid(name, format!("{value} is not finite")));
    }
    if value <= 0.0 {
        return Err(invalid(name, format!("{value} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if !nu.is_finite() || nu < 0.0 {
        return Err(invalid("nu", format!("{nu} must be finite and >= 0")));
    }
    Ok(())
}

impl PhysicalConfig {
    pub fn new(length: f64, mass: f64, hbar: f64, nu: f64) -> Result<Self> {
        check_positive("L", length)?;
        check_positive("mass", mass)?;
        check_positive("hbar", hbar)?;
        check_nu(nu)?;
        let e0 = hbar * hbar * PI * PI / (2.0 * mass * length * length);
        if !e0.is_finite() || e0 <= 0.0 {
            return Err(invalid("E0", format!("derived ground-scale energy {e0} is not usable")));
        }
        Ok(Self {
            length,
            mass,
            hbar,
            nu,
            e0,
            units: Units::Natural,
        })
    }

    /// An electron in a well of the given width (metres), SI units.
    pub fn electron(length: f64, nu: f64) -> Result<Self> {
        Ok(Self::new(length, ELECTRON_MASS_SI, HBAR_SI, nu)?.with_units(Units::Si))
    }

    /// `L = pi`, `m = 1/2`, `hbar = 1`: reduced and physical values coincide.
    pub fn reduced(nu: f64) -> Result<Self> {
        Self::new(PI, 0.5, 1.0, nu)
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn with_nu(self, nu: f64) -> Result<Self> {
        Ok(Self::new(self.length, self.mass, self.hbar, nu)?.with_units(self.units))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Ground-state energy of the infinite well of the same width.
    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn units(&self) -> Units {
        self.units
    }

    /// `pi hbar / L`, the momentum unit of the reduced representation.
    pub fn momentum_unit(&self) -> f64 {
        PI * self.hbar / self.length
    }

    pub fn position_to_reduced(&self, q: f64) -> Result<f64> {
        if !(0.0..=self.length).contains(&q) {
            return Err(Error::OutOfDomain {
                value: q,
                range: format!("[0, {}]", self.length),
            });
        }
        Ok(PI * q / self.length)
    }

    pub fn position_from_reduced(&self, xt: f64) -> f64 {
        xt * self.length / PI
    }

    pub fn momentum_to_reduced(&self, p: f64) -> f64 {
        p / self.momentum_unit()
    }

    pub fn momentum_from_reduced(&self, pt: f64) -> f64 {
        pt * self.momentum_unit()
    }

    pub fn energy_to_reduced(&self, e: f64) -> f64 {
        e / self.e0
    }

    pub fn energy_from_reduced(&self, et: f64) -> f64 {
        et * self.e0
    }

    pub fn time_to_reduced(&self, t: f64) -> f64 {
        t * self.e0 / self.hbar
    }

    pub fn time_from_reduced(&self, tt: f64) -> f64 {
        tt * self.hbar / self.e0
    }

    /// Factor turning a reduced wavefunction (normalized on `[0, pi]`) into one
    /// normalized on `[0, L]`.
    pub fn wavefunction_scale(&self) -> f64 {
        (PI / self.length).sqrt()
    }

    /// Factor turning a reduced phase-space density into a density with
    /// respect to `dq dp`.
    pub fn density_scale(&self) -> f64 {
        1.0 / self.hbar
    }

    pub fn to_reduced(&self, point: PhysicalPoint) -> Result<DimensionlessPoint> {
        Ok(DimensionlessPoint {
            xt: self.position_to_reduced(point.q)?,
            pt: self.momentum_to_reduced(point.p),
            et: self.energy_to_reduced(point.energy),
            tt: self.time_to_reduced(point.time),
        })
    }

    pub fn from_reduced(&self, point: DimensionlessPoint) -> PhysicalPoint {
        PhysicalPoint {
            q: self.position_from_reduced(point.xt),
            p: self.momentum_from_reduced(point.pt),
            energy: self.energy_from_reduced(point.et),
            time: self.time_from_reduced(point.tt),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text)?;
        file.into_config()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }
}

/// Position, momentum, energy and time in the units of a [`PhysicalConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PhysicalPoint {
    pub q: f64,
    pub p: f64,
    pub energy: f64,
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
pub struct DimensionlessPoint {
    pub xt: f64,
    pub pt: f64,
    pub et: f64,
    pub tt: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "L")]
    length: f64,
    mass: Option<f64>,
    hbar: Option<f64>,
    #[serde(default)]
    nu: f64,
    units: Option<Units>,
    particle: Option<String>,
}

impl ConfigFile {
    fn into_config(self) -> Result<PhysicalConfig> {
        let particle_mass = match self.particle.as_deref() {
            None => None,
            Some("electron") => Some(ELECTRON_MASS_SI),
            Some(other) => {
                return Err(Error::Unknown {
                    kind: "particle",
                    name: other.to_owned(),
                })
            }
        };
        let units = self.units.unwrap_or(if particle_mass.is_some() {
            Units::Si
        } else {
            Units::Natural
        });
        if particle_mass.is_some() && units != Units::Si {
            return Err(invalid("particle", "named particles require SI units"));
        }
        let mass = match (self.mass, particle_mass) {
            (Some(_), Some(_)) => return Err(invalid("mass", "given together with `particle`")),
            (Some(m), None) => m,
            (None, Some(m)) => m,
            (None, None) => return Err(invalid("mass", "missing (or give `particle`)")),
        };
        let hbar = self.hbar.unwrap_or(match units {
            Units::Si => HBAR_SI,
            Units::Natural => 1.0,
        });
        Ok(PhysicalConfig::new(self.length, mass, hbar, self.nu)?.with_units(units))
    }
}

/// Rectangular sampling of the phase-space strip, in reduced units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    q_count: usize,
    p_count: usize,
    p_max: f64,
    q_margin: f64,
}

impl GridSpec {
    pub fn new(q_count: usize, p_count: usize, p_max: f64, q_margin: f64) -> Result<Self> {
        if q_count < 2 || p_count < 2 {
            return Err(invalid("grid", format!("counts {q_count}x{p_count} must be >= 2")));
        }
        check_positive("p_max", p_max)?;
        if !(q_margin > 0.0 && q_margin < PI / 4.0) {
            return Err(invalid("q_margin", format!("{q_margin} must lie in (0, pi/4)")));
        }
        Ok(Self {
            q_count,
            p_count,
            p_max,
            q_margin,
        })
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn p_count(&self) -> usize {
        self.p_count
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn q_margin(&self) -> f64 {
        self.q_margin
    }

    pub fn q_step(&self) -> f64 {
        (PI - 2.0 * self.q_margin) / (self.q_count - 1) as f64
    }

    pub fn p_step(&self) -> f64 {
        2.0 * self.p_max / (self.p_count - 1) as f64
    }

    pub fn q_values(&self) -> Vec<f64> {
        let h = self.q_step();
        (0..self.q_count)
            .map(|i| {
                if i + 1 == self.q_count {
                    PI - self.q_margin
                } else {
                    self.q_margin + i as f64 * h
                }
            })
            .collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        let h = self.p_step();
        (0..self.p_count)
            .map(|j| {
                if j + 1 == self.p_count {
                    self.p_max
                } else {
                    -self.p_max + j as f64 * h
                }
            })
            .collect()
    }
}

impl Default for GridSpec {
    /// 256 x 256 over `q in [0.01 L, 0.99 L]`, `pt in [-12, 12]`.
    fn default() -> Self {
        Self {
            q_count: 256,
            p_count: 256,
            p_max: 12.0,
            q_margin: 0.01 * PI,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_scale_energy() {
        let c = PhysicalConfig::new(PI, 1.0, 1.0, 0.0).unwrap();
        assert!((c.e0() - 0.5).abs() < 1e-15);
        let c = PhysicalConfig::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((c.e0() - PI * PI / 2.0).abs() < 1e-14);
        // hbar^2 pi^2 / (2 m L^2) for an electron in 20 angstrom, by hand:
        // 1.11212e-68 * 9.86960 / (2 * 9.10938e-31 * 4e-18) J = 1.50617e-20 J = 0.094007 eV
        let c = PhysicalConfig::electron(20.0 * ANGSTROM, 0.0).unwrap();
        let ev = c.e0() / ELECTRON_VOLT;
        assert!((ev - 0.094_007).abs() < 2e-6, "{ev}");
    }

    #[test]
    fn e0_scales_inverse_square() {
        let a = PhysicalConfig::new(1.7, 2.0, 0.3, 1.0).unwrap();
        let b = PhysicalConfig::new(3.4, 2.0, 0.3, 1.0).unwrap();
        assert_eq!(a.e0(), 4.0 * b.e0());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PhysicalConfig::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalConfig::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(PhysicalConfig::new(1.0, 1.0, f64::NAN, 0.0).is_err());
        assert!(PhysicalConfig::new(1.0, 1.0, 1.0, -0.1).is_err());
        assert!(PhysicalConfig::new(f64::INFINITY, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn reduced_conversions() {
        let c = PhysicalConfig::new(2.5, 0.7, 1.3, 0.0).unwrap();
        assert!((c.position_to_reduced(1.25).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((c.momentum_to_reduced(4.0 * PI * 1.3 / 2.5) - 4.0).abs() < 1e-14);
        assert_eq!(c.energy_to_reduced(c.e0()), 1.0);
        assert!(c.position_to_reduced(2.6).is_err());
        assert!(c.position_to_reduced(-1e-9).is_err());
    }

    #[test]
    fn json_config() {
        let c = PhysicalConfig::from_json_str(r#"{"L": 2e-9, "particle": "electron"}"#).unwrap();
        assert_eq!(c.units(), Units::Si);
        assert_eq!(c.mass(), ELECTRON_MASS_SI);
        assert_eq!(c.hbar(), HBAR_SI);
        let c = PhysicalConfig::from_json_str(r#"{"L": 3, "mass": 0.5, "nu": 1.5}"#).unwrap();
        assert_eq!(c.units(), Units::Natural);
        assert_eq!(c.hbar(), 1.0);
        assert_eq!(c.nu(), 1.5);
        assert!(PhysicalConfig::from_json_str(r#"{"L": 3}"#).is_err());
        assert!(PhysicalConfig::from_json_str(r#"{"L": 3, "particle": "muon"}"#).is_err());
        assert!(PhysicalConfig::from_json_str(r#"{"L": 3, "mass": 1, "colour": 2}"#).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 4, 1.0, 0.1).is_err());
        assert!(GridSpec::new(4, 4, 0.0, 0.1).is_err());
        assert!(GridSpec::new(4, 4, 1.0, 1.0).is_err());
        let g = GridSpec::new(3, 5, 2.0, 0.1).unwrap();
        assert_eq!(g.q_values(), vec![0.1, PI / 2.0, PI - 0.1]);
        assert_eq!(g.p_values(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
