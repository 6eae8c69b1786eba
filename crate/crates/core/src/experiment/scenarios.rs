//! Bundled example configurations.

use super::spec::{parse_config, ExperimentSpec};
use super::ExperimentError;

pub const SCENARIOS: [(&str, &str); 5] = [
    (
        "taylor-green-decay",
        include_str!("../../scenarios/taylor-green-decay.toml"),
    ),
    ("forced-2d", include_str!("../../scenarios/forced-2d.toml")),
    (
        "stability-smoke",
        include_str!("../../scenarios/stability-smoke.toml"),
    ),
    (
        "stability-theorem",
        include_str!("../../scenarios/stability-theorem.toml"),
    ),
    (
        "hypothesis-violation",
        include_str!("../../scenarios/hypothesis-violation.toml"),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|s| s.0)
}

pub fn text(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|s| s.0 == name).map(|s| s.1)
}

pub fn require(name: &str) -> Result<&'static str, ExperimentError> {
    text(name).ok_or_else(|| {
        ExperimentError::Invalid(format!(
            "unknown scenario `{name}` (available: {})",
            names().collect::<Vec<_>>().join(", ")
        ))
    })
}

pub fn load(name: &str) -> Result<ExperimentSpec, ExperimentError> {
    parse_config(require(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_parses_and_round_trips() {
        for name in names() {
            let spec = load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(spec.name, name);
            assert_eq!(parse_config(&spec.to_toml()).unwrap(), spec);
        }
        assert!(load("nope").is_err());
    }
}
