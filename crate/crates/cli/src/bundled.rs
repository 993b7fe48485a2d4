//! Scenario library shipped with the binary.

use crate::config::{validate_str, ScenarioConfig};

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        /// `(name, config text)` of every bundled scenario.
        pub const BUNDLED: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../scenarios/", $name, ".json")))),*
        ];
    };
}

bundled!(
    "convergence",
    "convergence_step",
    "drift",
    "drift_sigma",
    "pe_robust",
    "bursting",
    "saturation",
    "minmax",
    "observer",
    "str",
    "spr_output",
    "augmented",
    "hot",
    "passification",
    "speed_gradient",
    "estimator_sa",
    "estimator_rls",
);

pub fn text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parsed bundled scenario.
pub fn load(name: &str) -> Option<Result<ScenarioConfig, Vec<String>>> {
    text(name).map(validate_str)
}

/// One-line description of each bundled scenario.
pub fn list() -> Vec<(&'static str, String)> {
    BUNDLED
        .iter()
        .map(|(n, t)| {
            let desc = serde_json::from_str::<serde_json::Value>(t)
                .ok()
                .and_then(|v| v.get("description").and_then(|d| d.as_str()).map(String::from))
                .unwrap_or_default();
            (*n, desc)
        })
        .collect()
}
