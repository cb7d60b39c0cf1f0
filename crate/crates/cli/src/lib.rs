//! Scenario configuration and the `params`, `evolve`, `times` and `check`
//! commands behind the `tunnelsplit` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_check, cmd_evolve, cmd_params, cmd_times, CheckItem, CheckReport, CheckStatus, EvolveOutput};
pub use config::{Scenario, ScenarioConfig, PRESETS};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tunnelsplit::Error),

    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown preset {name:?} (known: {known})")]
    UnknownPreset { name: String, known: String },
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}
