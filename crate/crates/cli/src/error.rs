use std::path::Path;

use serde::Serialize;

/// Failure reported to the caller as a JSON object on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: String,
    /// Dotted path of the offending config field, when there is one.
    #[serde(skip_serializing_if = "String::is_empty")]
    pub path: String,
    pub message: String,
    #[serde(skip)]
    pub exit_code: i32,
}

impl CliError {
    pub fn config(kind: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), path: path.into(), message: message.into(), exit_code: 2 }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self { kind: "io".into(), path: String::new(), message: format!("{}: {err}", path.display()), exit_code: 3 }
    }

    pub fn runtime(err: sympcool::Error) -> Self {
        Self { kind: "simulation".into(), path: String::new(), message: err.to_string(), exit_code: 1 }
    }

    /// A core validation error raised while checking config section `section`.
    pub fn at(section: &str, err: sympcool::Error) -> Self {
        use sympcool::Error as E;
        let (kind, path) = match &err {
            E::InvalidParameter { name, .. } => ("invalid_value", format!("{section}.{name}")),
            E::ZigZagInstability { .. } => ("zigzag_instability", "trap.radial_com_freq_hz".to_string()),
            E::WeakParticipation { .. } => ("weak_participation", "cooling.coolant".to_string()),
            E::BurstExceedsPeriod { .. } => ("burst_exceeds_period", "schedule.pulses_per_burst".to_string()),
            _ => ("invalid_value", section.to_string()),
        };
        Self::config(kind, path, err.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.kind, self.message)
        } else {
            write!(f, "{} at `{}`: {}", self.kind, self.path, self.message)
        }
    }
}
