//! Experiment configuration. A JSON file overrides the per-experiment
//! preset field by field.

use serde::{Deserialize, Serialize};

use super::DriverError;
use crate::assembly::PenaltyParams;
use crate::discretization::VolumeKind;
use crate::driver::SolverKind;
use crate::geometry::{make_circle, make_kite, BoundaryCurve, CurveKind, Coefficients, Point, ScalarField, SubdomainPartition};
use crate::norms::{BoundaryRealization, MassWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Converge,
    Quasiopt,
    Garding,
    Continuity,
    Filters,
    Jumps,
    Calderon,
    Adjoint,
    Inverse,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Converge,
        Experiment::Quasiopt,
        Experiment::Garding,
        Experiment::Continuity,
        Experiment::Filters,
        Experiment::Jumps,
        Experiment::Calderon,
        Experiment::Adjoint,
        Experiment::Inverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::Quasiopt => "quasiopt",
            Experiment::Garding => "garding",
            Experiment::Continuity => "continuity",
            Experiment::Filters => "filters",
            Experiment::Jumps => "jumps",
            Experiment::Calderon => "calderon",
            Experiment::Adjoint => "adjoint",
            Experiment::Inverse => "inverse",
        }
    }

    pub fn from_name(s: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryPreset {
    Disk { radius: f64 },
    Kite { scale: f64 },
}

impl GeometryPreset {
    pub fn curve(&self) -> Result<BoundaryCurve, DriverError> {
        match *self {
            GeometryPreset::Disk { radius } => make_circle(radius, [0.0, 0.0]).map_err(|e| DriverError::Config(e.to_string())),
            GeometryPreset::Kite { scale } if scale > 0.0 => Ok(BoundaryCurve { kind: CurveKind::Kite { scale }, ..make_kite() }),
            GeometryPreset::Kite { scale } => Err(DriverError::Config(format!("kite scale {scale}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientPreset {
    /// nu = I, constant n0; the disk reference solution is the Mie series.
    Homogeneous { n0: f64 },
    /// constant symmetric nu, constant n0
    Anisotropic { nu: [[f64; 2]; 2], n0: f64 },
    /// nu = I, n = c0 + amp exp(-|x|^2 / width^2)
    Bump { c0: f64, amp: f64, width: f64 },
}

impl CoefficientPreset {
    pub fn partition(&self) -> SubdomainPartition {
        let c = match *self {
            CoefficientPreset::Homogeneous { n0 } => Coefficients::isotropic(n0),
            CoefficientPreset::Anisotropic { nu, n0 } => Coefficients { nu, n: ScalarField::Constant(n0) },
            CoefficientPreset::Bump { c0, amp, width } => Coefficients {
                nu: [[1.0, 0.0], [0.0, 1.0]],
                n: ScalarField::Bump { c0, amp, center: [0.0, 0.0], width },
            },
        };
        SubdomainPartition::trivial(c)
    }
}

/// p = fixed, or p = max(p_min, ceil(c2 ln k) + offset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum DegreeRule {
    Fixed { p: usize },
    Log { p_min: usize, c2: f64, offset: usize },
}

impl DegreeRule {
    pub fn degree(&self, k: f64) -> usize {
        match *self {
            DegreeRule::Fixed { p } => p,
            DegreeRule::Log { p_min, c2, offset } => {
                let l = (c2 * k.ln()).ceil().max(0.0) as usize;
                p_min.max(l + offset).max(1)
            }
        }
    }
}

/// The coarsest level in `levels` with k h / p <= c1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub c1: f64,
}

/// Under-resolved comparison run: fixed p, the level whose k h / p is
/// closest to `kh_over_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRun {
    pub k: f64,
    pub p: usize,
    pub kh_over_p: f64,
}

/// Pass/fail thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Criteria {
    pub residual_max: f64,
    pub eoc_range: [f64; 2],
    pub best_factor: f64,
    pub ratio_max: f64,
    pub garding_ratio_max: f64,
    pub exponent_theta_max: f64,
    pub exponent_t_max: f64,
    pub jump_max: f64,
    pub calderon_max: f64,
    pub adjoint_max: f64,
    pub filter_identity_max: f64,
    pub filter_mean_max: f64,
    pub filter_stability_max: f64,
    pub inverse_level_variation: f64,
    pub inverse_degree_variation: f64,
}

impl Default for Criteria {
    fn default() -> Self {
        Criteria {
            residual_max: 1e-10,
            eoc_range: [1.7, 2.3],
            best_factor: 3.0,
            ratio_max: 5.0,
            garding_ratio_max: 2.0,
            exponent_theta_max: 0.3,
            exponent_t_max: 4.3,
            jump_max: 1e-3,
            calderon_max: 1e-4,
            adjoint_max: 1e-10,
            filter_identity_max: 1e-13,
            filter_mean_max: 1e-13,
            filter_stability_max: 2.0,
            inverse_level_variation: 0.25,
            inverse_degree_variation: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub formulations: Vec<VolumeKind>,
    pub geometry: GeometryPreset,
    pub coefficients: CoefficientPreset,
    pub ks: Vec<f64>,
    pub levels: Vec<usize>,
    pub degree: DegreeRule,
    pub resolution: Option<Resolution>,
    pub control: Option<ControlRun>,
    pub penalties: PenaltyParams,
    pub realization: BoundaryRealization,
    pub mass_weight: MassWeight,
    pub solver: SolverKind,
    pub incident: Point,
    /// extra degree sweep (inverse inequality) on `degree_level`
    pub degrees: Vec<usize>,
    pub degree_level: usize,
    /// random samples (adjoint check, filter test functions)
    pub samples: usize,
    /// filter parameter eta and the Sobolev orders (s, s')
    pub eta: f64,
    pub filter_orders: [f64; 2],
    /// candidate epsilons for the DG Garding search, refined by golden section
    pub epsilons: Vec<f64>,
    /// evaluation distance for the jump relations, in panel lengths
    pub jump_offset: f64,
    pub calderon_modes: usize,
    pub output_dir: Option<String>,
    pub seed: u64,
    pub criteria: Criteria,
}

impl ExperimentConfig {
    /// The acceptance setting of each experiment.
    pub fn preset(experiment: Experiment) -> ExperimentConfig {
        let base = ExperimentConfig {
            experiment,
            formulations: vec![VolumeKind::Conforming, VolumeKind::Dg],
            geometry: GeometryPreset::Disk { radius: 0.4 },
            coefficients: CoefficientPreset::Homogeneous { n0: 1.5 },
            ks: vec![4.0],
            levels: vec![1, 2, 3, 4],
            degree: DegreeRule::Fixed { p: 2 },
            resolution: None,
            control: None,
            penalties: PenaltyParams::default(),
            realization: BoundaryRealization::Fourier,
            mass_weight: MassWeight::Index,
            solver: SolverKind::Schur,
            incident: [1.0, 0.0],
            degrees: vec![],
            degree_level: 2,
            samples: 20,
            eta: 1.0,
            filter_orders: [1.5, 0.5],
            epsilons: vec![0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6],
            jump_offset: 0.1,
            calderon_modes: 4,
            output_dir: None,
            seed: 0,
            criteria: Criteria::default(),
        };
        match experiment {
            Experiment::Converge => base,
            Experiment::Quasiopt => ExperimentConfig {
                ks: vec![2.0, 4.0, 8.0, 16.0],
                levels: vec![1, 2, 3, 4],
                degree: DegreeRule::Log { p_min: 2, c2: 1.0, offset: 1 },
                resolution: Some(Resolution { c1: 0.5 }),
                control: Some(ControlRun { k: 16.0, p: 1, kh_over_p: 2.0 }),
                ..base
            },
            Experiment::Garding | Experiment::Continuity => {
                ExperimentConfig { ks: vec![2.0, 4.0, 8.0, 16.0], levels: vec![1], ..base }
            }
            Experiment::Filters => ExperimentConfig { ks: vec![4.0, 8.0, 16.0], levels: vec![1], eta: 0.5, ..base },
            Experiment::Jumps | Experiment::Calderon => ExperimentConfig {
                formulations: vec![VolumeKind::Conforming],
                coefficients: CoefficientPreset::Homogeneous { n0: 1.0 },
                ks: vec![2.0],
                levels: vec![1, 2, 3],
                degree: DegreeRule::Fixed { p: 3 },
                ..base
            },
            Experiment::Adjoint => ExperimentConfig { formulations: vec![VolumeKind::Dg], levels: vec![2], ..base },
            Experiment::Inverse => ExperimentConfig {
                formulations: vec![VolumeKind::Conforming],
                levels: vec![1, 2, 3],
                degrees: vec![1, 2, 3, 4],
                ..base
            },
        }
    }

    /// Preset of `experiment` overridden by the fields of `json`.
    pub fn from_json(experiment: Experiment, json: &str) -> Result<ExperimentConfig, DriverError> {
        let over: serde_json::Value = serde_json::from_str(json).map_err(|e| DriverError::Config(e.to_string()))?;
        let mut base = serde_json::to_value(ExperimentConfig::preset(experiment)).expect("serializable");
        merge(&mut base, over);
        let cfg: ExperimentConfig = serde_json::from_value(base).map_err(|e| DriverError::Config(e.to_string()))?;
        if cfg.experiment != experiment {
            return Err(DriverError::Config(format!("config is for {}, not {}", cfg.experiment.name(), experiment.name())));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |s: String| Err(DriverError::Config(s));
        if self.ks.is_empty() || self.ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return bad(format!("wavenumbers {:?}", self.ks));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| l > 6) {
            return bad(format!("levels {:?}", self.levels));
        }
        if self.formulations.is_empty() {
            return bad("no formulation".into());
        }
        if let DegreeRule::Fixed { p: 0 } = self.degree {
            return bad("p = 0".into());
        }
        if let Some(r) = self.resolution {
            if !(r.c1 > 0.0) {
                return bad(format!("c1 = {}", r.c1));
            }
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta = {}", self.eta));
        }
        if (self.incident[0].hypot(self.incident[1]) - 1.0).abs() > 1e-12 {
            return bad("incident direction must be a unit vector".into());
        }
        self.geometry.curve()?;
        Ok(())
    }
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (key, v) in o {
                // tagged enums are replaced as a whole
                let tagged = v.get("kind").is_some() || v.get("rule").is_some();
                match b.get_mut(&key) {
                    Some(slot) if slot.is_object() && !tagged => merge(slot, v),
                    _ => {
                        b.insert(key, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
