//! TOML system definitions.
//!
//! ```toml
//! name = "SYS-M"
//!
//! [[maps]]
//! family = "affine"
//! slope = 0.5
//! intercept = 0.1
//!
//! [[maps]]
//! family = "reflected"
//! inner = { family = "affine", slope = 0.5, intercept = 0.1 }
//!
//! [chain]
//! p = [0.5, 0.5]
//! transition = [[0.5, 0.5], [0.5, 0.5]]
//!
//! [numerics]
//! n_bins = 2048
//! seed = 7
//! ```

use std::path::Path;

use serde::Deserialize;
use skewlab::{FiberMap, MarkovChain, MarkovChainSpec, StepSkewSystem};

use crate::CliError;

pub const FAMILIES: [&str; 3] = ["affine", "anchored", "reflected"];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    /// Optional cross-check of `maps.len()`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_true")]
    pub absorbing: bool,
    pub maps: Vec<MapConfig>,
    /// Defaults to the uniform Bernoulli chain.
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    /// Hand-built strips over the extended alphabet `{1..2N}`.
    #[serde(default)]
    pub strips: Vec<StripConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub family: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub slopes: Option<Vec<f64>>,
    pub inner: Option<Box<MapConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub p: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub fibers: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n_bins: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_strip: Option<f64>,
    pub margin_floor: f64,
    pub seed: Option<u64>,
    pub depth: usize,
    pub n_pasts: usize,
    pub n_orbits: usize,
    pub n_steps: usize,
    pub burn_in: usize,
    pub cluster_tol: f64,
    pub stability_tau: f64,
    pub heteroclinic_tau: f64,
    pub cycle_tau: f64,
    pub max_alphabet: usize,
    pub semiconjugacy_samples: usize,
    pub census_radius: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_bins: 2048,
            tol: 1e-9,
            max_iter: 10_000,
            eps_strip: None,
            margin_floor: skewlab::strips::DEFAULT_MARGIN_FLOOR,
            seed: None,
            depth: 60,
            n_pasts: 1000,
            n_orbits: 200,
            n_steps: 600,
            burn_in: 100,
            cluster_tol: skewlab::hyperbolicity::DEFAULT_CLUSTER_TOL,
            stability_tau: skewlab::genericity::DEFAULT_STABILITY_TAU,
            heteroclinic_tau: skewlab::genericity::DEFAULT_CYCLE_TAU,
            cycle_tau: skewlab::genericity::DEFAULT_CYCLE_TAU,
            max_alphabet: skewlab::genericity::DEFAULT_MAX_ALPHABET,
            semiconjugacy_samples: 10_000,
            census_radius: 3,
        }
    }
}

fn default_true() -> bool {
    true
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub system: StepSkewSystem,
    pub chain: MarkovChain,
    pub numerics: Numerics,
    pub strips: Vec<StripConfig>,
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Loaded, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)?.build()
    }

    pub fn build(&self) -> Result<Loaded, CliError> {
        if self.maps.is_empty() {
            return Err(CliError::Config("maps: at least one map is required".into()));
        }
        if let Some(n) = self.n {
            if n != self.maps.len() {
                return Err(CliError::Config(format!("n: declared {n} but {} maps given", self.maps.len())));
            }
        }
        let maps =
            self.maps.iter().enumerate().map(|(k, m)| m.build(&format!("maps[{k}]"))).collect::<Result<Vec<_>, _>>()?;
        let system = StepSkewSystem::new(maps, self.absorbing).map_err(|e| CliError::Config(format!("maps: {e}")))?;
        let n = system.n();
        let chain = match &self.chain {
            None => MarkovChain::bernoulli(vec![1.0 / n as f64; n]),
            Some(c) => {
                if c.p.len() != n {
                    return Err(CliError::Config(format!("chain.p: {} entries for {n} maps", c.p.len())));
                }
                MarkovChain::new(MarkovChainSpec { p: c.p.clone(), transition: c.transition.clone(), support: None })
            }
        }
        .map_err(|e| CliError::Config(format!("chain: {e}")))?;
        let num = &self.numerics;
        if num.n_bins < 16 {
            return Err(CliError::Config(format!("numerics.n_bins: need at least 16, got {}", num.n_bins)));
        }
        if !(num.tol > 0.0) || !(num.cluster_tol > 0.0) {
            return Err(CliError::Config("numerics.tol and numerics.cluster_tol must be positive".into()));
        }
        if num.eps_strip.is_some_and(|e| !(e >= 0.0)) {
            return Err(CliError::Config("numerics.eps_strip must be nonnegative".into()));
        }
        for (k, s) in self.strips.iter().enumerate() {
            if s.fibers.len() != 2 * n {
                return Err(CliError::Config(format!(
                    "strips[{k}].fibers: need {} intervals (one per extended symbol), got {}",
                    2 * n,
                    s.fibers.len()
                )));
            }
        }
        Ok(Loaded { name: self.name.clone(), system, chain, numerics: num.clone(), strips: self.strips.clone() })
    }
}

impl MapConfig {
    fn build(&self, path: &str) -> Result<FiberMap, CliError> {
        let used: &[&str] = match self.family.as_str() {
            "affine" => &["slope", "intercept"],
            "anchored" => &["x", "y", "slopes"],
            "reflected" => &["inner"],
            other => {
                return Err(CliError::Config(format!(
                    "{path}.family: unknown family `{other}`, expected one of {}",
                    FAMILIES.join(", ")
                )))
            }
        };
        let present = [
            ("slope", self.slope.is_some()),
            ("intercept", self.intercept.is_some()),
            ("x", self.x.is_some()),
            ("y", self.y.is_some()),
            ("slopes", self.slopes.is_some()),
            ("inner", self.inner.is_some()),
        ];
        for (key, here) in present {
            if here && !used.contains(&key) {
                return Err(CliError::Config(format!("{path}.{key}: not a parameter of family `{}`", self.family)));
            }
            if !here && used.contains(&key) {
                return Err(CliError::Config(format!("{path}.{key}: required by family `{}`", self.family)));
            }
        }
        let invalid = |e: skewlab::Error| CliError::Config(format!("{path}: {e}"));
        match self.family.as_str() {
            "affine" => {
                FiberMap::affine(self.slope.unwrap_or_default(), self.intercept.unwrap_or_default()).map_err(invalid)
            }
            "anchored" => FiberMap::anchored(
                self.x.clone().unwrap_or_default(),
                self.y.clone().unwrap_or_default(),
                self.slopes.clone().unwrap_or_default(),
            )
            .map_err(invalid),
            _ => Ok(FiberMap::reflected(self.inner.as_ref().expect("checked above").build(&format!("{path}.inner"))?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYS_M: &str = r#"
name = "SYS-M"
[[maps]]
family = "affine"
slope = 0.5
intercept = 0.1
[[maps]]
family = "reflected"
inner = { family = "affine", slope = 0.5, intercept = 0.1 }
"#;

    #[test]
    fn parses_and_builds() {
        let loaded = SystemConfig::from_toml_str(SYS_M).unwrap().build().unwrap();
        assert_eq!(loaded.system.n(), 2);
        assert_eq!(loaded.system.reversing_symbols(), vec![2]);
        assert_eq!(loaded.chain.p(), &[0.5, 0.5]);
        assert_eq!(loaded.numerics.n_bins, 2048);
    }

    #[test]
    fn rejects_unknown_keys_and_families() {
        let bad = SYS_M.replace("name = \"SYS-M\"", "name = \"x\"\ncolour = 1");
        assert!(matches!(SystemConfig::from_toml_str(&bad), Err(CliError::Config(m)) if m.contains("colour")));
        let bad = SYS_M.replacen("family = \"affine\"", "family = \"quadratic\"", 1);
        let err = SystemConfig::from_toml_str(&bad).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("maps[0].family"), "{err}");
        let bad = SYS_M.replacen("intercept = 0.1", "intercept = 0.1\nx = [0.0, 1.0]", 1);
        assert!(SystemConfig::from_toml_str(&bad).unwrap().build().unwrap_err().to_string().contains("maps[0].x"));
        let bad = format!("{SYS_M}\n[numerics]\nbins = 3\n");
        assert!(SystemConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn rejects_invalid_maps_and_chains() {
        let bad = SYS_M.replacen("slope = 0.5", "slope = 1.5", 1);
        assert!(SystemConfig::from_toml_str(&bad).unwrap().build().is_err());
        let bad = format!("{SYS_M}\n[chain]\np = [0.5, 0.5]\ntransition = [[0.9, 0.2], [0.5, 0.5]]\n");
        assert!(SystemConfig::from_toml_str(&bad).unwrap().build().unwrap_err().to_string().starts_with("chain"));
        let bad = format!("n = 3\n{SYS_M}");
        assert!(SystemConfig::from_toml_str(&bad).unwrap().build().is_err());
    }
}
