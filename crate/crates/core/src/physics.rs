//! Laboratory parameters to dimensionless model quantities.

use serde::{Deserialize, Serialize};

use crate::ermakov::BreathingEnvelope;
use crate::error::{invalid, Error, Result};
use crate::shell::ShellSpec;

/// SI constants (CODATA 2018 exact/recommended values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub hbar: f64,
    pub elementary_charge: f64,
    pub electron_rest_energy_ev: f64,
    pub speed_of_light: f64,
}

pub const CODATA: Constants = Constants {
    hbar: 1.054_571_817e-34,
    elementary_charge: 1.602_176_634e-19,
    electron_rest_energy_ev: 510_998.95,
    speed_of_light: 299_792_458.0,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Physical inputs of one run. Units are part of the key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(rename = "B0_tesla")]
    pub b0_field: f64,
    #[serde(rename = "B_tip_tesla")]
    pub b_tip: f64,
    #[serde(rename = "R_c_meter")]
    pub r_c: f64,
    #[serde(rename = "L_oct_meter")]
    pub l_oct: f64,
    #[serde(rename = "kinetic_energy_eV")]
    pub kinetic_energy_ev: f64,
    pub j: u32,
    pub delta_rad: f64,
    /// Entry breathing radius; 1 means no breathing.
    #[serde(default = "one")]
    pub b0: f64,
    #[serde(default)]
    pub b0_prime: f64,
}

fn one() -> f64 {
    1.0
}

pub const PRESET_STATIC: &str = include_str!("../presets/paper-static.toml");
pub const PRESET_BREATHING: &str = include_str!("../presets/paper-breathing.toml");

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Built-in presets by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-static" => Self::from_toml(PRESET_STATIC),
            "paper-breathing" => Self::from_toml(PRESET_BREATHING),
            _ => Err(Error::Scenario(format!(
                "unknown preset '{name}' (available: paper-static, paper-breathing)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let positive = [
            ("B0_tesla", self.b0_field),
            ("B_tip_tesla", self.b_tip),
            ("R_c_meter", self.r_c),
            ("L_oct_meter", self.l_oct),
            ("kinetic_energy_eV", self.kinetic_energy_ev),
            ("b0", self.b0),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Scenario(format!("{k} must be positive, got {v}")));
            }
        }
        if self.j == 0 {
            return Err(Error::Scenario("j must be at least 1".into()));
        }
        if !(0.0..std::f64::consts::PI).contains(&self.delta_rad) {
            return Err(Error::Scenario(format!(
                "delta_rad must lie in [0, pi), got {}",
                self.delta_rad
            )));
        }
        if !self.b0_prime.is_finite() {
            return Err(Error::Scenario("b0_prime must be finite".into()));
        }
        Ok(())
    }

    pub fn is_breathing(&self) -> bool {
        self.b0 != 1.0 || self.b0_prime != 0.0
    }

    pub fn envelope(&self) -> Result<Option<BreathingEnvelope>> {
        if self.is_breathing() {
            Ok(Some(BreathingEnvelope::new(self.b0, self.b0_prime)?))
        } else {
            Ok(None)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Landau radius `sqrt(2 hbar / (e B0))` in meters.
    pub rho_h: f64,
    /// Momentum times c, in eV.
    pub pc_ev: f64,
    /// Wavenumber `pc / (hbar c)` in 1/m.
    pub k: f64,
    /// Length unit `k rho_H^2` of the dimensionless `z`, in meters.
    pub z_unit: f64,
    /// `B_tip L / R_c` in tesla.
    pub kappa_n: f64,
    pub mu0: f64,
    pub mu: f64,
    pub j: u32,
}

impl DerivedScales {
    pub fn shell(&self) -> Result<ShellSpec> {
        ShellSpec::new(2 * self.j, self.mu0)
    }
}

pub fn derive_scales(s: &Scenario) -> Result<DerivedScales> {
    derive_scales_with(s, &CODATA)
}

pub fn derive_scales_with(s: &Scenario, c: &Constants) -> Result<DerivedScales> {
    s.validate()?;
    let rho_h = (2.0 * c.hbar / (c.elementary_charge * s.b0_field)).sqrt();
    let t = s.kinetic_energy_ev;
    let pc_ev = (t * t + 2.0 * t * c.electron_rest_energy_ev).sqrt();
    let hbar_c_ev_m = c.hbar * c.speed_of_light / c.elementary_charge;
    let k = pc_ev / hbar_c_ev_m;
    let kappa_n = s.b_tip * s.l_oct / s.r_c;
    let mu0 = 12.0 * kappa_n * rho_h * rho_h / (s.b0_field * s.r_c * s.r_c);
    Ok(DerivedScales {
        rho_h,
        pc_ev,
        k,
        z_unit: k * rho_h * rho_h,
        kappa_n,
        mu0,
        mu: s.j as f64 * mu0 / 2.0,
        j: s.j,
    })
}

/// Dimensionless distance to meters.
pub fn flip_distance_physical(z_flip: f64, scales: &DerivedScales) -> Result<f64> {
    if !(z_flip >= 0.0 && z_flip.is_finite()) {
        return invalid(format!("z_flip must be non-negative, got {z_flip}"));
    }
    Ok(z_flip * scales.z_unit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowVerdict {
    BelowWindow,
    InWindow,
    AboveWindow,
}

/// Lower margin factor on `j^-1/2` and upper cap of the seed window.
pub const WINDOW_FACTOR: f64 = 3.0;
pub const WINDOW_CAP: f64 = 0.3;

/// `3 j^-1/2 <= delta <= 0.3`.
pub fn delta_window_check(j: f64, delta: f64) -> Result<WindowVerdict> {
    if !(j >= 1.0) {
        return invalid(format!("window check needs j >= 1, got {j}"));
    }
    Ok(if delta < WINDOW_FACTOR / j.sqrt() {
        WindowVerdict::BelowWindow
    } else if delta > WINDOW_CAP {
        WindowVerdict::AboveWindow
    } else {
        WindowVerdict::InWindow
    })
}

/// Round to `n` significant figures.
pub fn round_sig(x: f64, n: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let p = n - 1 - x.abs().log10().floor() as i32;
    let f = 10f64.powi(p);
    (x * f).round() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_scenario() -> Scenario {
        Scenario::preset("paper-static").unwrap()
    }

    #[test]
    fn landau_radius_at_8_mt() {
        let d = derive_scales(&static_scenario()).unwrap();
        assert_eq!(round_sig(d.rho_h, 2), 4.1e-7);
        assert_eq!(round_sig(d.mu0, 2), 2.5e-3);
        assert_eq!(round_sig(d.mu, 2), 1.2);
        assert_eq!(d.mu, 1000.0 * d.mu0 / 2.0);
    }

    #[test]
    fn breathing_preset_values() {
        let s = Scenario::preset("paper-breathing").unwrap();
        let d = derive_scales(&s).unwrap();
        assert_eq!(round_sig(d.rho_h, 2), 5.1e-8);
        assert_eq!(round_sig(d.mu, 2), 1.5e-7);
        assert_eq!(round_sig(flip_distance_physical(82.0, &d).unwrap(), 2), 0.37);
        let low = Scenario {
            kinetic_energy_ev: 1e4,
            ..s
        };
        let d = derive_scales(&low).unwrap();
        assert_eq!(round_sig(flip_distance_physical(82.0, &d).unwrap(), 2), 0.11);
        assert_eq!(flip_distance_physical(0.0, &d).unwrap(), 0.0);
        assert!(flip_distance_physical(-1.0, &d).is_err());
    }

    #[test]
    fn nonrelativistic_limit_of_wavenumber() {
        let s = Scenario {
            kinetic_energy_ev: 1.0,
            ..static_scenario()
        };
        let d = derive_scales(&s).unwrap();
        let c = CODATA;
        let m = c.electron_rest_energy_ev * c.elementary_charge / (c.speed_of_light.powi(2));
        let k_nr = (2.0 * m * 1.0 * c.elementary_charge).sqrt() / c.hbar;
        assert!((d.k / k_nr - 1.0).abs() < 1e-6);
    }

    #[test]
    fn window_verdicts() {
        assert_eq!(delta_window_check(1000.0, 0.1).unwrap(), WindowVerdict::InWindow);
        assert_eq!(delta_window_check(4.0, 0.1).unwrap(), WindowVerdict::BelowWindow);
        assert_eq!(delta_window_check(1000.0, 0.5).unwrap(), WindowVerdict::AboveWindow);
        assert!(delta_window_check(0.5, 0.1).is_err());
    }

    #[test]
    fn unknown_keys_and_bad_versions_rejected() {
        let mut text = PRESET_STATIC.to_string();
        text.push_str("\nfoo = 1\n");
        assert!(matches!(Scenario::from_toml(&text), Err(Error::Scenario(_))));
        let text = PRESET_STATIC.replace("schema_version = 1", "schema_version = 2");
        assert!(Scenario::from_toml(&text).is_err());
        let text = PRESET_STATIC.replace("B0_tesla = 0.008", "B0_tesla = -0.008");
        assert!(Scenario::from_toml(&text).is_err());
        assert!(Scenario::preset("nope").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::preset("paper-breathing").unwrap();
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn rounding_helper() {
        assert_eq!(round_sig(0.40571, 2), 0.41);
        assert_eq!(round_sig(1.46e-7, 2), 1.5e-7);
    }
}
