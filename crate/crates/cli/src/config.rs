//! Run configuration loaded from `--config FILE`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use heisenwave::profile::DyadicProfile;
use heisenwave::spectral::GroupParams;
use heisenwave::verifier::{default_expectations, Expectations, Interval, VerifierConfig};
use heisenwave::{Error, Result};

pub const J_LIMIT: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// j values of the t-slope fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_list: Option<Vec<i32>>,
    /// `[t_min, t_max]` of the scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_window: Option<[f64; 2]>,
    /// Largest scanned radius in units of `2^{-j}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Speed bound used to size the scanned s-window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_n() -> usize {
    1
}

fn default_sharpness() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_sharpness")]
    pub transition_sharpness: f64,
    /// Overrides of the expected interval per claim id.
    #[serde(default)]
    pub tolerances: BTreeMap<String, Interval>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: default_n(),
            transition_sharpness: default_sharpness(),
            tolerances: BTreeMap::new(),
            grids: Grids::default(),
            output: Output::default(),
        }
    }
}

pub fn check_j(j: i32) -> Result<()> {
    if j.abs() > J_LIMIT {
        return Err(Error::InvalidParam(format!("j = {j} outside [-{J_LIMIT}, {J_LIMIT}]")));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParam(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<GroupParams> {
        GroupParams::new(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        if !(self.transition_sharpness > 0.0 && self.transition_sharpness.is_finite()) {
            return Err(Error::InvalidParam("transition_sharpness must be positive".into()));
        }
        let known = default_expectations(params);
        for (id, iv) in &self.tolerances {
            if !known.contains_key(id) {
                return Err(Error::InvalidParam(format!("unknown claim id '{id}'")));
            }
            if iv.lo > iv.hi || iv.lo.is_nan() || iv.hi.is_nan() {
                return Err(Error::InvalidParam(format!("empty interval for '{id}'")));
            }
        }
        if let Some(js) = &self.grids.j_list {
            js.iter().try_for_each(|&j| check_j(j))?;
        }
        if let Some([a, b]) = self.grids.t_window {
            if !(a > 0.0 && b > a && b.is_finite()) {
                return Err(Error::InvalidParam("t_window must satisfy 0 < t_min < t_max".into()));
            }
        }
        for (name, v) in [("r_max", self.grids.r_max), ("sigma_max", self.grids.sigma_max)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::InvalidParam(format!("{name} must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> DyadicProfile {
        DyadicProfile::new(self.transition_sharpness)
    }

    pub fn expectations(&self) -> Result<Expectations> {
        let mut e = default_expectations(self.params()?);
        e.extend(self.tolerances.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(e)
    }

    pub fn verifier(&self, seed: u64) -> Result<VerifierConfig> {
        let mut v = VerifierConfig::new(self.params()?);
        v.profile = self.profile();
        v.expectations = self.expectations()?;
        v.seed = seed;
        v.speed_override = self.grids.sigma_max;
        if let Some(r) = self.grids.r_max {
            v.r_rel = vec![0.0, 0.25 * r, 0.5 * r, r];
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_claims_and_wide_j() {
        let c: RunConfig = serde_json::from_str(r#"{"tolerances": {"nope": [0, 1]}}"#).unwrap();
        assert!(c.validate().is_err());
        let c: RunConfig = serde_json::from_str(r#"{"grids": {"j_list": [0, 7]}}"#).unwrap();
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn overrides_reach_the_verifier() {
        let c: RunConfig =
            serde_json::from_str(r#"{"tolerances": {"dispersive.t_slope": [null, -0.3]}, "grids": {"r_max": 2}}"#).unwrap();
        c.validate().unwrap();
        let v = c.verifier(7).unwrap();
        assert_eq!(v.expectations["dispersive.t_slope"], Interval::at_most(-0.3));
        assert_eq!(v.r_rel, vec![0.0, 0.5, 1.0, 2.0]);
        assert_eq!(v.seed, 7);
    }
}
