//! JSON run configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernel::{default_zeta, Kernel, KernelKind};
use crate::mesh::{BallNorm, PerturbationSpec};
use crate::problems::{case_by_name, ManufacturedCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Constant,
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormName {
    #[default]
    Euclidean,
    Max,
}

/// Thickness of the weight-construction layer: `0` or `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionMode {
    Zero,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshMode {
    #[default]
    Uniform,
    Perturbed {
        epsilon: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub kernel: KernelName,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub ball_norm: NormName,
    pub case: String,
    /// `δ/h`.
    #[serde(deserialize_with = "positive_integer")]
    pub m: usize,
    /// Explicit mesh sizes.
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    /// Coarsest mesh size for a halving ladder.
    #[serde(default)]
    pub h0: Option<f64>,
    /// Number of halving levels from `h0` (default 4).
    #[serde(default)]
    pub levels: Option<usize>,
    pub extension: ExtensionMode,
    #[serde(default)]
    pub outer_points: Option<usize>,
    #[serde(default)]
    pub body_points: Option<usize>,
    #[serde(default)]
    pub inner_points_per_radius: Option<usize>,
    #[serde(default)]
    pub mesh: MeshMode,
    /// Gauss points per element for the error norms (default `8^d`).
    #[serde(default)]
    pub error_points: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub dump_solutions: bool,
    #[serde(default)]
    pub dump_mesh: bool,
    /// Wall-clock columns in the report; off by default so reports are reproducible byte for byte.
    #[serde(default)]
    pub record_timings: bool,
}

fn default_true() -> bool {
    true
}

fn positive_integer<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let v = f64::deserialize(d)?;
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(serde::de::Error::custom(format!("m = delta/h must be a positive integer, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dimension != 1 && self.dimension != 2 {
            return bad(format!("dimension must be 1 or 2, got {}", self.dimension));
        }
        let case = case_by_name(&self.case)?;
        if case.dim() != self.dimension {
            return bad(format!("case `{}` is {}-dimensional but dimension is {}", self.case, case.dim(), self.dimension));
        }
        if let Some(z) = self.zeta {
            if !(z > 0.0) || !z.is_finite() {
                return bad(format!("zeta must be positive, got {z}"));
            }
        }
        for (name, v) in [
            ("outer_points", self.outer_points),
            ("body_points", self.body_points),
            ("inner_points_per_radius", self.inner_points_per_radius),
            ("error_points", self.error_points),
            ("levels", self.levels),
        ] {
            if v == Some(0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.dimension == 2 {
            for (name, v) in
                [("outer_points", self.outer_points()), ("body_points", self.body_points()), ("error_points", self.error_points())]
            {
                let r = (v as f64).sqrt().round() as usize;
                if r * r != v {
                    return bad(format!("{name} must be a perfect square in 2D (n×n collapsed rule), got {v}"));
                }
            }
        }
        if let MeshMode::Perturbed { epsilon, .. } = self.mesh {
            PerturbationSpec::new(epsilon, 0).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.h.is_some() && (self.h0.is_some() || self.levels.is_some()) {
            return bad("give either `h` or `h0`/`levels`, not both".into());
        }
        if self.h.is_none() && self.h0.is_none() {
            return bad("one of `h` or `h0` is required".into());
        }
        let hs = self.mesh_sizes_unchecked();
        if hs.is_empty() {
            return bad("the list of mesh sizes is empty".into());
        }
        for h in &hs {
            if !(*h > 0.0) || !h.is_finite() {
                return bad(format!("mesh size must be positive, got {h}"));
            }
            let n = 1.0 / h;
            if (n - n.round()).abs() > 1e-9 * n.round().max(1.0) {
                return bad(format!("1/h must be an integer so that elements tile the unit box, got h = {h}"));
            }
        }
        if hs.windows(2).any(|w| w[1] >= w[0]) {
            return bad("mesh sizes must be strictly decreasing".into());
        }
        Ok(())
    }

    fn mesh_sizes_unchecked(&self) -> Vec<f64> {
        match (&self.h, self.h0) {
            (Some(list), _) => list.clone(),
            (None, Some(h0)) => (0..self.levels.unwrap_or(4)).map(|k| h0 / (1u64 << k) as f64).collect(),
            _ => Vec::new(),
        }
    }

    /// Mesh sizes, coarsest first, snapped to `1/n`.
    pub fn mesh_sizes(&self) -> Vec<f64> {
        self.mesh_sizes_unchecked().iter().map(|h| 1.0 / (1.0 / h).round()).collect()
    }

    pub fn case(&self) -> ManufacturedCase {
        case_by_name(&self.case).expect("validated case name")
    }

    pub fn kernel_kind(&self) -> KernelKind {
        match self.kernel {
            KernelName::Constant => KernelKind::Constant,
            KernelName::Rational => KernelKind::Rational,
        }
    }

    pub fn ball_norm(&self) -> BallNorm {
        match self.ball_norm {
            NormName::Euclidean => BallNorm::Euclidean,
            NormName::Max => BallNorm::Max,
        }
    }

    pub fn kernel(&self, horizon: f64) -> Result<Kernel> {
        let kind = self.kernel_kind();
        let zeta = match self.zeta {
            Some(z) => z,
            None => default_zeta(kind, self.dimension)?,
        };
        Kernel::new(kind, self.dimension, horizon, zeta, self.ball_norm())
    }

    pub fn outer_points(&self) -> usize {
        self.outer_points.unwrap_or(if self.dimension == 1 { 40 } else { 16 })
    }

    pub fn body_points(&self) -> usize {
        self.body_points.unwrap_or_else(|| self.outer_points())
    }

    pub fn inner_points_per_radius(&self) -> usize {
        self.inner_points_per_radius.unwrap_or(if self.dimension == 1 { 10 } else { 4 })
    }

    pub fn error_points(&self) -> usize {
        self.error_points.unwrap_or(8usize.pow(self.dimension as u32))
    }

    pub fn extension_for(&self, horizon: f64) -> f64 {
        match self.extension {
            ExtensionMode::Zero => 0.0,
            ExtensionMode::Delta => horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"dimension":1,"kernel":"rational","case":"sin1d","m":2,"h":[0.01],"extension":"delta"}"#;

    #[test]
    fn minimal_config_and_defaults() {
        let c = RunConfig::from_json(BASE).unwrap();
        assert_eq!(c.outer_points(), 40);
        assert_eq!(c.inner_points_per_radius(), 10);
        assert_eq!(c.error_points(), 8);
        assert_eq!(c.mesh, MeshMode::Uniform);
        assert!(c.dump_solutions && !c.record_timings && !c.dump_mesh);
        assert_eq!(c.mesh_sizes(), vec![0.01]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = BASE.replace("\"extension\"", "\"te\":0,\"extension\"");
        assert!(matches!(RunConfig::from_json(&text), Err(Error::Config(_))));
        let text = BASE.replace("}", r#","mesh":{"mode":"perturbed","epsilon":0.1,"seed":3,"sigma":1}}"#);
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn ladder_and_validation() {
        let text = r#"{"dimension":2,"kernel":"constant","case":"sin2d","m":2,"h0":0.125,"levels":3,"extension":"delta",
                      "mesh":{"mode":"perturbed","epsilon":0.1,"seed":12345}}"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.mesh_sizes(), vec![0.125, 0.0625, 0.03125]);
        assert_eq!(c.outer_points(), 16);
        for bad in [
            BASE.replace("[0.01]", "[]"),
            BASE.replace("[0.01]", "[0.01, 0.02]"),
            BASE.replace("[0.01]", "[0.03]"),
            BASE.replace("\"m\":2", "\"m\":1.5"),
            BASE.replace("\"m\":2", "\"m\":0"),
            BASE.replace("sin1d", "sin2d"),
            BASE.replace("}", r#","h0":0.1}"#),
        ] {
            assert!(RunConfig::from_json(&bad).is_err(), "{bad}");
        }
        let msg = RunConfig::from_json(&BASE.replace("\"m\":2", "\"m\":1.5")).unwrap_err().to_string();
        assert!(msg.contains("m = delta/h must be a positive integer"), "{msg}");
        let square = text.replace("\"levels\":3", "\"levels\":3,\"outer_points\":15");
        assert!(RunConfig::from_json(&square).is_err());
    }
}
