use crate::config::{parse_config, ScenarioConfig};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: [Preset; 7] = [
    Preset {
        name: "eq6_ou",
        description: "momentum-space Ornstein-Uhlenbeck relaxation, classical backend",
        text: include_str!("../presets/eq6_ou.toml"),
    },
    Preset {
        name: "eq7_smoluchowski",
        description: "overdamped position-space relaxation, classical backend",
        text: include_str!("../presets/eq7_smoluchowski.toml"),
    },
    Preset {
        name: "eq8_response",
        description: "mean response decaying with quantum friction b z coth z",
        text: include_str!("../presets/eq8_response.toml"),
    },
    Preset {
        name: "eq9_phase",
        description: "quantum phase-space relaxation, canonical backend",
        text: include_str!("../presets/eq9_phase.toml"),
    },
    Preset {
        name: "eq10_equilibrium",
        description: "phase-space Gibbs density at beta = 50",
        text: include_str!("../presets/eq10_equilibrium.toml"),
    },
    Preset {
        name: "eq11_kramers",
        description: "classical phase-space relaxation to Maxwell-Boltzmann",
        text: include_str!("../presets/eq11_kramers.toml"),
    },
    Preset {
        name: "coth_sweep",
        description: "eigen-expansion Gibbs variance against the coth law",
        text: include_str!("../presets/coth_sweep.toml"),
    },
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Parsed preset. Presets are part of the build, so a parse failure is a bug.
pub fn preset_config(name: &str) -> Option<ScenarioConfig> {
    find_preset(name)
        .map(|p| parse_config(p.text).unwrap_or_else(|e| panic!("preset {name} is invalid: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_is_named_after_itself() {
        for p in &PRESETS {
            let c = preset_config(p.name).unwrap();
            assert_eq!(c.name, p.name);
        }
        assert!(find_preset("eq12").is_none());
    }
}
