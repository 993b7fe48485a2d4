//! Scenario configuration: typed blocks, exhaustive validation, emission.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use adaptctl::adapt_ct::{DisturbanceEntry, RobustMod};
use adaptctl::adapt_dt::{BurstScenario, StrState};
use adaptctl::estimate::{RegressorSource, SaNormalizer, SaStepSize};
use adaptctl::model::TransferFunction;
use adaptctl::sim::{DisturbanceSpec, MetricSpec, Signal};

use crate::families::{MinMaxFamily, SgFamily};

pub type Matrix = Vec<Vec<f64>>;

/// Scalar or matrix adaptation gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Scalar(f64),
    Matrix(Matrix),
}

/// `ẋ = Ax + bu`, optionally `y = Cx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiBlock {
    pub a: Matrix,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBlock {
    pub a_m: Matrix,
    pub b_m: Vec<f64>,
}

/// Transfer function by ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfBlock {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TfBlock {
    pub fn transfer(&self) -> adaptctl::Result<TransferFunction> {
        TransferFunction::from_coeffs(&self.num, &self.den)
    }
}

fn one() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MracBlock {
    pub gamma: GainSpec,
    pub gamma_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub k0: f64,
    #[serde(default = "one")]
    pub sign_k: f64,
    /// `Q` of the Lyapunov equation; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Matrix>,
    #[serde(default)]
    pub robust: RobustMod,
    #[serde(default)]
    pub entry: DisturbanceEntry,
    #[serde(default, skip_serializing_if = "is_false")]
    pub freeze_k: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationBlock {
    pub u_max: f64,
    pub u_r_max: f64,
    pub tau: f64,
    pub gamma_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprBlock {
    pub lambda: Matrix,
    pub ell: Vec<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub k0: f64,
    #[serde(default = "one")]
    pub sign_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotBlock {
    /// Filter pole of `(s + a)^p`.
    pub a: f64,
    pub lambda: Matrix,
    pub ell: Vec<f64>,
    pub mu: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<Vec<f64>>,
}

/// Exogenous regressor and true parameter of the error model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelBlock {
    pub theta_star: Vec<f64>,
    pub omega: Vec<Signal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedBlock {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    /// Constant normalizer `m`; `1/(1 + ζᵀζ)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassificationBlock {
    pub g: Vec<f64>,
    pub gamma: GainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
}

/// Scalar plant `ẋ = a x + θ*·φ(x) + u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgPlantBlock {
    pub family: SgFamily,
    pub a: f64,
    pub theta_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// `½θ²`: identical to the plain law with `Γ = 1`.
    Quadratic,
    /// `θ ln θ`, Hessian `1/θ`; needs `θ > 0`.
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BregmanBlock {
    pub generator: Generator,
    #[serde(default)]
    pub scaling: adaptctl::adapt_ct::BregmanScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgBlock {
    pub gamma: f64,
    /// Stabilizing gain in `u = −k x − θφ(x)`.
    pub k: f64,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bregman: Option<BregmanBlock>,
}

/// Scalar plant `ẋ = a_p x + f(x, θ*) + u` with `θ* ∈ [theta_lo, theta_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxPlantBlock {
    pub a_p: f64,
    pub family: MinMaxFamily,
    pub theta_star: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxReferenceBlock {
    pub a_m: f64,
}

fn odd_one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxBlock {
    pub epsilon: f64,
    pub gamma_alpha: f64,
    pub gamma_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default)]
    pub alpha0: f64,
    #[serde(default = "odd_one")]
    pub s_exponent: u32,
}

/// `y_k = Σa_i y_{k−i} + Σb_j u_{k−d−j} + Σc_i w_{k−i}`; empty `c` means `C = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaxBlock {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c: Vec<f64>,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrBlock {
    pub gamma: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub beta0_sign: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderBlock {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstControllerBlock {
    pub theta0: [f64; 2],
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseBlock {
    pub step: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverBlock {
    pub lambda: Matrix,
    pub ell: Vec<f64>,
    pub gamma: GainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionBlock {
    pub theta_star: Vec<f64>,
    pub regressor: RegressorSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Sa,
    Rls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorBlock {
    pub estimator: EstimatorKind,
    /// SA gain, or the initial RLS covariance `γ·I`.
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub normalizer: SaNormalizer,
    #[serde(default)]
    pub step_size: SaStepSize,
}

/// Initial conditions; zero when absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xm0: Option<Vec<f64>>,
    #[serde(default)]
    pub up0: f64,
}

impl InitialBlock {
    fn is_empty(&self) -> bool {
        self == &InitialBlock::default()
    }
}

/// Scenario kind with its kind-specific blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    MracState {
        plant: LtiBlock,
        reference: ReferenceBlock,
        controller: MracBlock,
        input: Signal,
    },
    MracOutputSpr {
        plant: TfBlock,
        reference: TfBlock,
        controller: SprBlock,
        input: Signal,
    },
    AugmentedError {
        plant: ErrorModelBlock,
        reference: TfBlock,
        controller: AugmentedBlock,
    },
    HotOutput {
        plant: TfBlock,
        /// Closed-loop reference `W_cl`.
        reference: TfBlock,
        controller: HotBlock,
        input: Signal,
    },
    Passification {
        plant: LtiBlock,
        controller: PassificationBlock,
    },
    SpeedGradient {
        plant: SgPlantBlock,
        controller: SgBlock,
    },
    MinmaxNlp {
        plant: MinMaxPlantBlock,
        reference: MinMaxReferenceBlock,
        controller: MinMaxBlock,
        input: Signal,
    },
    SaturatedMrac {
        plant: LtiBlock,
        reference: ReferenceBlock,
        controller: MracBlock,
        saturation: SaturationBlock,
        input: Signal,
    },
    Str {
        plant: ArmaxBlock,
        controller: StrBlock,
        input: Signal,
    },
    Bursting {
        plant: FirstOrderBlock,
        controller: BurstControllerBlock,
        input: Signal,
        pulse: PulseBlock,
    },
    Observer {
        plant: TfBlock,
        controller: ObserverBlock,
        input: Signal,
    },
    #[serde(alias = "estimator-only")]
    EstimatorOnly {
        plant: RegressionBlock,
        controller: EstimatorBlock,
    },
}

pub const KINDS: [&str; 12] = [
    "mrac_state",
    "mrac_output_spr",
    "augmented_error",
    "hot_output",
    "passification",
    "speed_gradient",
    "minmax_nlp",
    "saturated_mrac",
    "str",
    "bursting",
    "observer",
    "estimator_only",
];

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::MracState { .. } => "mrac_state",
            Scenario::MracOutputSpr { .. } => "mrac_output_spr",
            Scenario::AugmentedError { .. } => "augmented_error",
            Scenario::HotOutput { .. } => "hot_output",
            Scenario::Passification { .. } => "passification",
            Scenario::SpeedGradient { .. } => "speed_gradient",
            Scenario::MinmaxNlp { .. } => "minmax_nlp",
            Scenario::SaturatedMrac { .. } => "saturated_mrac",
            Scenario::Str { .. } => "str",
            Scenario::Bursting { .. } => "bursting",
            Scenario::Observer { .. } => "observer",
            Scenario::EstimatorOnly { .. } => "estimator_only",
        }
    }

    /// Sampled kinds count `sim.horizon` in steps and ignore `sim.step`.
    pub fn is_discrete(&self) -> bool {
        matches!(self, Scenario::Str { .. } | Scenario::Bursting { .. } | Scenario::EstimatorOnly { .. })
    }
}

fn default_limit() -> f64 {
    adaptctl::sim::DIVERGENCE_LIMIT
}

fn default_decimate() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimBlock {
    /// Time units, or steps for sampled kinds.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Replaces the seed of every noise source when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_decimate")]
    pub decimate: usize,
    #[serde(default = "default_limit")]
    pub divergence_limit: f64,
}

/// Certificate computed alongside a run; each gets a pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "certificate", rename_all = "snake_case")]
pub enum Certificate {
    /// `A_mᵀP + PA_m = −Q` for the reference model.
    Lyapunov,
    /// SPR test of the reference transfer function.
    Spr,
    /// KYL pair for the reference transfer function.
    Kyl,
    /// Hyperminimum-phase test of the plant.
    HyperminimumPhase,
    /// Passifying gain for `(A, b, C, g)`.
    Passification,
    /// Zeros of `B` inside the unit circle.
    MinimumPhase,
    /// Frozen-parameter closed loop at the initial and final estimates.
    ClosedLoopGain,
    /// Measured `ε0` of the listed channels against the required
    /// `2λmax(P)/λmin(Q)·vmax`.
    PeRobustness {
        channels: Vec<String>,
        t0: f64,
        /// Inner window length; the whole window `t0` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta0: Option<f64>,
        #[serde(default)]
        from: f64,
    },
}

impl Certificate {
    pub fn name(&self) -> &'static str {
        match self {
            Certificate::Lyapunov => "lyapunov",
            Certificate::Spr => "spr",
            Certificate::Kyl => "kyl",
            Certificate::HyperminimumPhase => "hyperminimum_phase",
            Certificate::Passification => "passification",
            Certificate::MinimumPhase => "minimum_phase",
            Certificate::ClosedLoopGain => "closed_loop_gain",
            Certificate::PeRobustness { .. } => "pe_robustness",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBlock {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

/// Metric with a pass condition `value op threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    #[serde(flatten)]
    pub metric: MetricSpec,
    pub op: Comparison,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default, skip_serializing_if = "InitialBlock::is_empty")]
    pub initial: InitialBlock,
    pub sim: SimBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub criteria: Vec<Criterion>,
}

const TOP_LEVEL: [&str; 14] = [
    "name",
    "description",
    "kind",
    "plant",
    "reference",
    "controller",
    "saturation",
    "input",
    "pulse",
    "disturbance",
    "initial",
    "sim",
    "analysis",
    "criteria",
];

/// Dotted paths every config of `kind` must carry.
fn required_paths(kind: &str) -> &'static [&'static str] {
    match kind {
        "mrac_state" => &[
            "plant.a", "plant.b", "reference.a_m", "reference.b_m", "controller.gamma", "controller.gamma_k", "input",
        ],
        "saturated_mrac" => &[
            "plant.a",
            "plant.b",
            "reference.a_m",
            "reference.b_m",
            "controller.gamma",
            "controller.gamma_k",
            "saturation.u_max",
            "saturation.u_r_max",
            "saturation.tau",
            "saturation.gamma_s",
            "input",
        ],
        "mrac_output_spr" => &[
            "plant.num",
            "plant.den",
            "reference.num",
            "reference.den",
            "controller.lambda",
            "controller.ell",
            "controller.gamma",
            "input",
        ],
        "augmented_error" => &[
            "plant.theta_star",
            "plant.omega",
            "reference.num",
            "reference.den",
            "controller.gamma",
        ],
        "hot_output" => &[
            "plant.num",
            "plant.den",
            "reference.num",
            "reference.den",
            "controller.a",
            "controller.lambda",
            "controller.ell",
            "controller.mu",
            "input",
        ],
        "passification" => &["plant.a", "plant.b", "plant.c", "controller.g", "controller.gamma"],
        "speed_gradient" => &["plant.family", "plant.a", "plant.theta_star", "controller.gamma", "controller.k"],
        "minmax_nlp" => &[
            "plant.a_p",
            "plant.family",
            "plant.theta_star",
            "plant.theta_lo",
            "plant.theta_hi",
            "reference.a_m",
            "controller.epsilon",
            "controller.gamma_alpha",
            "controller.gamma_theta",
            "input",
        ],
        "str" => &["plant.a", "plant.b", "plant.d", "controller.gamma", "controller.c", "input"],
        "bursting" => &["plant.a", "plant.b", "controller.theta0", "input", "pulse.step", "pulse.amplitude"],
        "observer" => &["plant.num", "plant.den", "controller.lambda", "controller.ell", "controller.gamma", "input"],
        "estimator_only" | "estimator-only" => &[
            "plant.theta_star",
            "plant.regressor",
            "controller.estimator",
            "controller.gamma",
        ],
        _ => &[],
    }
}

fn block<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, errors: &mut Vec<String>) {
    if let Some(v) = obj.get(key).filter(|v| !v.is_null()) {
        match T::deserialize(v) {
            // Required paths were already checked; anything else missing
            // surfaces when the whole config is typed.
            Err(e) if !e.to_string().starts_with("missing field") => {
                errors.push(format!("ill-typed `{key}`: {e}"));
            }
            _ => {}
        }
    }
}

/// Types every block on its own so that ill-typed fields in different blocks
/// are all reported.
fn block_errors(obj: &Map<String, Value>, kind: Option<&str>, errors: &mut Vec<String>) {
    block::<String>(obj, "description", errors);
    block::<SimBlock>(obj, "sim", errors);
    block::<DisturbanceSpec>(obj, "disturbance", errors);
    block::<InitialBlock>(obj, "initial", errors);
    block::<AnalysisBlock>(obj, "analysis", errors);
    match obj.get("criteria") {
        Some(Value::Array(items)) => {
            for (i, c) in items.iter().enumerate() {
                if let Err(e) = Criterion::deserialize(c) {
                    errors.push(format!("ill-typed `criteria[{i}]`: {e}"));
                }
            }
        }
        Some(Value::Null) | None => {}
        Some(_) => errors.push("`criteria` must be a list".into()),
    }
    let e = errors;
    match kind {
        Some("mrac_state") => {
            block::<LtiBlock>(obj, "plant", e);
            block::<ReferenceBlock>(obj, "reference", e);
            block::<MracBlock>(obj, "controller", e);
        }
        Some("saturated_mrac") => {
            block::<LtiBlock>(obj, "plant", e);
            block::<ReferenceBlock>(obj, "reference", e);
            block::<MracBlock>(obj, "controller", e);
            block::<SaturationBlock>(obj, "saturation", e);
        }
        Some("mrac_output_spr") => {
            block::<TfBlock>(obj, "plant", e);
            block::<TfBlock>(obj, "reference", e);
            block::<SprBlock>(obj, "controller", e);
        }
        Some("augmented_error") => {
            block::<ErrorModelBlock>(obj, "plant", e);
            block::<TfBlock>(obj, "reference", e);
            block::<AugmentedBlock>(obj, "controller", e);
        }
        Some("hot_output") => {
            block::<TfBlock>(obj, "plant", e);
            block::<TfBlock>(obj, "reference", e);
            block::<HotBlock>(obj, "controller", e);
        }
        Some("passification") => {
            block::<LtiBlock>(obj, "plant", e);
            block::<PassificationBlock>(obj, "controller", e);
        }
        Some("speed_gradient") => {
            block::<SgPlantBlock>(obj, "plant", e);
            block::<SgBlock>(obj, "controller", e);
        }
        Some("minmax_nlp") => {
            block::<MinMaxPlantBlock>(obj, "plant", e);
            block::<MinMaxReferenceBlock>(obj, "reference", e);
            block::<MinMaxBlock>(obj, "controller", e);
        }
        Some("str") => {
            block::<ArmaxBlock>(obj, "plant", e);
            block::<StrBlock>(obj, "controller", e);
        }
        Some("bursting") => {
            block::<FirstOrderBlock>(obj, "plant", e);
            block::<BurstControllerBlock>(obj, "controller", e);
            block::<PulseBlock>(obj, "pulse", e);
        }
        Some("observer") => {
            block::<TfBlock>(obj, "plant", e);
            block::<ObserverBlock>(obj, "controller", e);
        }
        Some("estimator_only" | "estimator-only") => {
            block::<RegressionBlock>(obj, "plant", e);
            block::<EstimatorBlock>(obj, "controller", e);
        }
        _ => {}
    }
    block::<Signal>(obj, "input", e);
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |node, key| node.get(key))
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> Result<ScenarioConfig, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    validate_str(&text)
}

/// Validates config text, reporting every problem found rather than the
/// first.
pub fn validate_str(text: &str) -> Result<ScenarioConfig, Vec<String>> {
    let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
    validate_value(&value)
}

pub fn validate_value(value: &Value) -> Result<ScenarioConfig, Vec<String>> {
    let mut errors = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    for key in obj.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) {
            errors.push(format!("unknown field `{key}`"));
        }
    }
    match obj.get("name") {
        Some(Value::String(s)) if !s.is_empty() => {
            if s.contains(['/', '\\']) || s == "." || s == ".." {
                errors.push(format!("name `{s}` must be usable as a directory name"));
            }
        }
        Some(_) => errors.push("`name` must be a nonempty string".into()),
        None => errors.push("missing field `name`".into()),
    }
    let kind = match obj.get("kind") {
        Some(Value::String(k)) if KINDS.contains(&k.as_str()) || k == "estimator-only" => Some(k.as_str()),
        Some(Value::String(k)) => {
            errors.push(format!("unknown scenario kind `{k}` (expected one of {})", KINDS.join(", ")));
            None
        }
        Some(_) => {
            errors.push("`kind` must be a string".into());
            None
        }
        None => {
            errors.push("missing field `kind`".into());
            None
        }
    };
    let mut required: Vec<&str> = vec!["sim.horizon"];
    if let Some(k) = kind {
        required.extend(required_paths(k));
        if !matches!(k, "str" | "bursting" | "estimator_only" | "estimator-only") {
            required.push("sim.step");
        }
    }
    for path in required {
        if lookup(value, path).is_none_or(Value::is_null) {
            errors.push(format!("missing field `{path}`"));
        }
    }
    block_errors(obj, kind, &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    let config: ScenarioConfig = match serde_json::from_value(value.clone()) {
        Ok(c) => c,
        Err(e) => return Err(vec![format!("ill-typed field: {e}")]),
    };
    let errors = semantic_errors(&config);
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

/// Serialized form accepted back by [`validate_str`].
pub fn emit(config: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

fn positive(errors: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0) || !v.is_finite() {
        errors.push(format!("`{name}` must be positive, got {v}"));
    }
}

/// Bounds and feasibility checks that need typed values. Component
/// constructors are tried independently so their errors accumulate.
fn semantic_errors(cfg: &ScenarioConfig) -> Vec<String> {
    let mut errors = Vec::new();
    let sim = &cfg.sim;
    positive(&mut errors, "sim.horizon", sim.horizon);
    positive(&mut errors, "sim.divergence_limit", sim.divergence_limit);
    if sim.decimate == 0 {
        errors.push("`sim.decimate` must be at least 1".into());
    }
    if cfg.scenario.is_discrete() {
        if sim.horizon.fract() != 0.0 {
            errors.push(format!("`sim.horizon` counts steps for this kind, got {}", sim.horizon));
        }
    } else if let Some(h) = sim.step {
        positive(&mut errors, "sim.step", h);
        if h > 0.0 && sim.horizon / h > 5e7 {
            errors.push(format!("horizon/step = {:.0} steps exceeds the 5e7 limit", sim.horizon / h));
        }
    }
    if let Err(e) = cfg.disturbance.validate() {
        errors.push(format!("disturbance: {e}"));
    }
    for c in &cfg.criteria {
        if !c.threshold.is_finite() {
            errors.push(format!("criterion `{}` has a non-finite threshold", c.metric.name()));
        }
    }
    let mut names: Vec<&str> = cfg.criteria.iter().map(|c| c.metric.name()).collect();
    names.sort_unstable();
    for w in names.windows(2) {
        if w[0] == w[1] {
            errors.push(format!("criterion name `{}` is used twice", w[0]));
        }
    }
    kind_errors(cfg, &mut errors);
    for cert in &cfg.analysis.certificates {
        if let Err(e) = crate::certify::applicable(cert, cfg) {
            errors.push(format!("certificate `{}`: {e}", cert.name()));
        }
    }
    if errors.is_empty() {
        if let Err(e) = crate::build::assemble(cfg) {
            errors.push(format!("scenario cannot be assembled: {e}"));
        }
    }
    errors
}

fn kind_errors(cfg: &ScenarioConfig, errors: &mut Vec<String>) {
    let mut check = |label: &str, r: adaptctl::Result<()>| {
        if let Err(e) = r {
            errors.push(format!("{label}: {e}"));
        }
    };
    match &cfg.scenario {
        Scenario::MracState { input, controller, .. } | Scenario::SaturatedMrac { input, controller, .. } => {
            check("input", input.validate());
            check("controller.robust", controller.robust.validate());
            if controller.sign_k.abs() != 1.0 {
                check("controller.sign_k", Err(adaptctl::Error::InvalidParameter("must be ±1".into())));
            }
            if let Scenario::SaturatedMrac { saturation: s, .. } = &cfg.scenario {
                check(
                    "saturation",
                    adaptctl::adapt_ct::SaturationLimits::scalar(s.u_max, s.u_r_max, s.tau).map(|_| ()),
                );
                if !(s.gamma_s > 0.0) {
                    check("saturation.gamma_s", Err(adaptctl::Error::InvalidParameter(format!("must be positive, got {}", s.gamma_s))));
                }
            }
        }
        Scenario::MracOutputSpr { reference, input, .. } => {
            check("input", input.validate());
            spr_required(reference, "reference", &mut check);
        }
        Scenario::AugmentedError { plant, reference, .. } => {
            for (i, s) in plant.omega.iter().enumerate() {
                check(&format!("plant.omega[{i}]"), s.validate());
            }
            check("reference", reference.transfer().map(|_| ()));
        }
        Scenario::HotOutput { input, .. } | Scenario::Observer { input, .. } => check("input", input.validate()),
        Scenario::MinmaxNlp { input, plant, .. } => {
            check("input", input.validate());
            check("plant.family", plant.family.check_box(plant.theta_lo, plant.theta_hi));
        }
        Scenario::Str { controller, input, .. } => {
            check("input", input.validate());
            check(
                "controller",
                StrState::new(1, 0, 1, nalgebra::DVector::zeros(2), controller.gamma, controller.c).map(|_| ()),
            );
        }
        Scenario::Bursting { controller, input, plant, .. } => {
            if !matches!(input, Signal::Constant { .. }) {
                check("input", Err(adaptctl::Error::InvalidParameter("bursting needs a constant setpoint".into())));
            }
            if plant.b == 0.0 {
                check("plant.b", Err(adaptctl::Error::InvalidParameter("b must be nonzero".into())));
            }
            check(
                "controller",
                StrState::new(1, 0, 1, nalgebra::DVector::zeros(2), controller.gamma, controller.c).map(|_| ()),
            );
        }
        Scenario::EstimatorOnly { plant, .. } => check("plant.regressor", plant.regressor.validate()),
        Scenario::Passification { .. } | Scenario::SpeedGradient { .. } => {}
    }
}

fn spr_required(tf: &TfBlock, label: &str, check: &mut impl FnMut(&str, adaptctl::Result<()>)) {
    match tf.transfer().and_then(|w| adaptctl::analysis::spr_check(&w)) {
        Ok(r) if r.is_spr => {}
        Ok(r) => {
            let rd = tf.transfer().map(|w| w.relative_degree()).unwrap_or(0);
            check(
                label,
                Err(adaptctl::Error::Infeasible(format!(
                    "W_m must be SPR, but relative degree is {rd} and min Re W = {:.3e}",
                    r.margin
                ))),
            )
        }
        Err(e) => check(label, Err(e)),
    }
}

/// `BurstScenario` equivalent of a bursting config.
pub fn burst_scenario(cfg: &ScenarioConfig) -> Option<BurstScenario> {
    let Scenario::Bursting { plant, controller, input, pulse } = &cfg.scenario else {
        return None;
    };
    Some(BurstScenario {
        a: plant.a,
        b: plant.b,
        setpoint: input.eval(0.0),
        theta0: controller.theta0,
        gamma: controller.gamma,
        c: controller.c,
        noise: cfg.disturbance.clone(),
        pulse_step: pulse.step,
        pulse_amplitude: pulse.amplitude,
        steps: cfg.sim.horizon as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_walks_dotted_paths() {
        let v: Value = serde_json::json!({"a": {"b": 1}});
        assert_eq!(lookup(&v, "a.b"), Some(&Value::from(1)));
        assert!(lookup(&v, "a.c").is_none());
    }
}
