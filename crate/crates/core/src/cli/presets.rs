//! Figure presets. Each preset is an ordinary [`Config`], so its manifest
//! reruns through `run --config`.

use super::config::{
    Config, ExperimentConfig, InitialSpec, IntegratorConfig, ModelSection, Regime, SqueezingSection,
    DEFAULT_SAMPLES,
};

pub const PRESET_NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "figA"];

/// Atom numbers used by the N-variation figures.
pub const ATOM_NUMBERS: [u64; 3] = [5_000, 10_000, 20_000];
pub const KAPPA: f64 = 100.0;

fn model(n_atoms: u64) -> ModelSection {
    ModelSection {
        n_atoms,
        kappa: KAPPA,
        detuning: 0.0,
        chi: 0.0,
        g: 1.0,
        photon_dim: None,
        atomic_dim: None,
    }
}

fn occupations(occ: &[usize]) -> Option<InitialSpec> {
    Some(InitialSpec {
        occupations: Some(occ.to_vec()),
        dark: None,
    })
}

fn open(name: String, regime: Regime, n_atoms: u64, init: &[usize], observables: &[&str]) -> ExperimentConfig {
    ExperimentConfig {
        output: Some(format!("{name}.csv")),
        name,
        regime,
        t_final: 1.0,
        n_samples: DEFAULT_SAMPLES,
        observables: observables.iter().map(|s| s.to_string()).collect(),
        initial: occupations(init),
        model: Some(model(n_atoms)),
        squeezing: None,
        steady_state: None,
    }
}

/// Unresolved config of a named preset.
pub fn preset(name: &str) -> Option<Config> {
    let experiments: Vec<ExperimentConfig> = match name {
        "fig2" => ATOM_NUMBERS
            .iter()
            .map(|&n| open(format!("fig2_N{n}"), Regime::Strong, n, &[0, 1], &["n_a", "n_b"]))
            .collect(),
        "fig3" => ATOM_NUMBERS
            .iter()
            .map(|&n| open(format!("fig3_N{n}"), Regime::Weak, n, &[0, 1, 0], &["n_a", "n_c", "n_d"]))
            .collect(),
        "fig4" => ATOM_NUMBERS
            .iter()
            .map(|&n| open(format!("fig4_N{n}"), Regime::Weak, n, &[0, 1, 0], &["W", "E_N"]))
            .collect(),
        "fig5" => (1..=3)
            .map(|k| {
                let mut e = open(format!("fig5_n{k}"), Regime::Weak, 5_000, &[0, k, 0], &["W", "E_N"]);
                e.steady_state = Some(Default::default());
                e
            })
            .collect(),
        "figA" => [1.0, 5.0, 10.0]
            .iter()
            .map(|&u: &f64| {
                let name = format!("figA_UggN{u}");
                ExperimentConfig {
                    output: Some(format!("{name}.csv")),
                    name,
                    regime: Regime::Squeezing,
                    t_final: 10.0,
                    n_samples: DEFAULT_SAMPLES,
                    observables: vec!["n_f".into(), "n_f_numeric".into()],
                    initial: None,
                    model: None,
                    squeezing: Some(SqueezingSection {
                        j_g: 1.0,
                        ugg_n: u,
                        dim: None,
                    }),
                    steady_state: None,
                }
            })
            .collect(),
        _ => return None,
    };
    Some(Config {
        integrator: IntegratorConfig::default(),
        experiments,
    })
}
