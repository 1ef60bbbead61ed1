//! Experiment configuration documents.
//!
//! A config is one JSON object whose `operation` field names the subcommand.
//! Unknown keys anywhere in the document are rejected.

use serde::{Deserialize, Serialize};
use subreg_core::maps::{Body, ParamRule, Rule};
use subreg_core::moduli::ProfileMode;
use subreg_core::pathfollow::{FollowOptions, PathRule};
use subreg_core::serde_ext::strict_from_value;
use subreg_core::uniformize::{SamplePoint, UniformizeOptions};
use subreg_core::Norm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Estimate(EstimateConfig),
    Certify(CertifyConfig),
    Uniformize(UniformizeConfig),
    Follow(FollowConfig),
    Counterexample(CounterexampleConfig),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        strict_from_value(value)
    }

    pub fn operation(&self) -> &'static str {
        match self {
            ExperimentConfig::Estimate(_) => "estimate",
            ExperimentConfig::Certify(_) => "certify",
            ExperimentConfig::Uniformize(_) => "uniformize",
            ExperimentConfig::Follow(_) => "follow",
            ExperimentConfig::Counterexample(_) => "counterexample",
        }
    }

    #[cfg(test)]
    pub fn to_canonical(&self) -> String {
        serde_json::to_string(self).expect("configs always serialize")
    }
}

fn default_eta() -> f64 {
    subreg_core::certificates::DEFAULT_ETA
}

fn default_safety() -> f64 {
    subreg_core::certificates::DEFAULT_SAFETY
}

fn one() -> f64 {
    1.0
}

fn default_floor() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub map: Body,
    #[serde(default)]
    pub norm: Norm,
    pub center: Vec<f64>,
    pub value: Vec<f64>,
    pub estimates: Vec<EstimateRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimateRequest {
    SubregAt {
        radius: f64,
        step: f64,
    },
    StrongAt {
        radius: f64,
        step: f64,
    },
    StrongAround {
        a: f64,
        b: f64,
        r0: Option<f64>,
        step: f64,
    },
    /// The map must be a single-valued catalog rule.
    Calmness {
        radius: f64,
        step: f64,
    },
    Lipschitz {
        radius: f64,
        step: f64,
    },
    IsolatedCalmness {
        anchor: Vec<f64>,
        radius: f64,
        step: f64,
    },
    DivergenceProfile {
        radii: Vec<f64>,
        per_radius: usize,
        #[serde(default)]
        mode: ProfileMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub map: Body,
    #[serde(default)]
    pub norm: Norm,
    pub center: Vec<f64>,
    pub value: Vec<f64>,
    pub base: BaseSpec,
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub validation: ValidationSpec,
    /// Factor applied to the final constant before validation.
    #[serde(default = "one")]
    pub kappa_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    pub step: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

/// Certificate of `F`; estimated by brute force when `kappa` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    StrongAt {
        alpha: f64,
        kappa: Option<f64>,
        step: Option<f64>,
    },
    StrongAround {
        a: f64,
        b: f64,
        r0: Option<f64>,
        kappa: Option<f64>,
        step: Option<f64>,
    },
}

/// Perturbation certificate; estimated by brute force when `mu` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    Calm {
        g: Rule,
        radius: f64,
        mu: Option<f64>,
        step: Option<f64>,
    },
    Lipschitz {
        g: Rule,
        radius: f64,
        mu: Option<f64>,
        step: Option<f64>,
    },
    SetValued {
        map: Body,
        anchor: Vec<f64>,
        beta: f64,
        mu: Option<f64>,
        step: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    Points { points: Vec<SamplePoint> },
    /// `count` equally spaced scalar parameters on `[lo, hi]`, all at state `x`.
    ParamGrid { lo: f64, hi: f64, count: usize, x: Vec<f64> },
}

impl SampleSpec {
    pub fn points(&self) -> Vec<SamplePoint> {
        match self {
            SampleSpec::Points { points } => points.clone(),
            SampleSpec::ParamGrid { lo, hi, count, x } => (0..*count)
                .map(|i| {
                    let t = if *count == 1 {
                        *lo
                    } else if i + 1 == *count {
                        *hi
                    } else {
                        lo + (hi - lo) * i as f64 / (*count - 1) as f64
                    };
                    SamplePoint { t: vec![t], x: x.clone() }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformMode {
    #[default]
    Around,
    At,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformizeConfig {
    pub f: ParamRule,
    #[serde(rename = "F")]
    pub inner: Body,
    #[serde(default)]
    pub norm: Norm,
    pub sample: SampleSpec,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub options: UniformizeOptions,
    #[serde(default)]
    pub mode: UniformMode,
    /// Grid step of the final brute-force check; `options.step` when absent.
    pub validation_step: Option<f64>,
    #[serde(default = "one")]
    pub kappa_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowConfig {
    pub f: ParamRule,
    #[serde(rename = "F")]
    pub inner: Body,
    #[serde(default)]
    pub norm: Norm,
    pub p: PathRule,
    pub horizon: f64,
    pub t_steps: usize,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub follow: FollowOptions,
    #[serde(default = "yes")]
    pub certify: bool,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub options: UniformizeOptions,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_per_radius")]
    pub per_radius: usize,
}

fn default_radii() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

fn default_per_radius() -> usize {
    100
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            radii: default_radii(),
            per_radius: default_per_radius(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOLLOW: &str = r#"{
        "operation": "follow",
        "f": {"type": "static", "g": {"type": "identity"}},
        "F": {"type": "normal_cone_box", "box": [[0, 1]]},
        "p": {"type": "sine", "amplitude": [1.5], "frequency": 1.0, "phase": 0.0},
        "horizon": 6.283185307179586,
        "t_steps": 200,
        "x0": [0.0],
        "follow": {"tol": 1e-8, "trust_radius": 0.5}
    }"#;

    #[test]
    fn canonical_round_trip() {
        let c = ExperimentConfig::parse(FOLLOW).unwrap();
        assert_eq!(c.operation(), "follow");
        let canon = c.to_canonical();
        let again = ExperimentConfig::parse(&canon).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_canonical(), canon);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = FOLLOW.replace("\"t_steps\"", "\"stray\": 1, \"t_steps\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let nested = FOLLOW.replace("\"tol\": 1e-8", "\"tol\": 1e-8, \"bogus\": true");
        assert!(ExperimentConfig::parse(&nested).is_err());
        assert!(ExperimentConfig::parse(r#"{"operation": "nothing"}"#).is_err());
        assert!(ExperimentConfig::parse("{").is_err());
    }

    #[test]
    fn param_grid_hits_both_ends() {
        let s = SampleSpec::ParamGrid {
            lo: 0.0,
            hi: 1.0,
            count: 11,
            x: vec![0.0],
        };
        let pts = s.points();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[10].t, vec![1.0]);
        assert_eq!(pts[3].t, vec![0.3]);
    }
}
