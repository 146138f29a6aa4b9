//! Command-line layer: configuration, result cache, and the subcommands that
//! write CSV, JSON, and plot data.

mod cache;
mod commands;
mod config;

use std::path::{Path, PathBuf};

pub use cache::{Cache, CacheKey, SCHEMA_VERSION};
pub use commands::{
    cmd_asymptotics, cmd_convergence, cmd_geometry_check, cmd_numrange, cmd_spectrum, sample_pairs, truncation_sequence,
    Command, ASYMPTOTICS_HEADER,
    CONVERGENCE_HEADER, NUMRANGE_HEADER, SPECTRUM_HEADER,
};
pub use config::{Overrides, RunConfig, CACHE_ENV, MAX_INDEX};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numerical(#[from] crate::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

/// What a successful command produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Rows or blocks whose computation did not meet its tolerance.
    pub unconverged: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.unconverged > 0 {
            1
        } else {
            0
        }
    }
}

/// Runs `command` and maps the result to a process exit code, reporting
/// failures on stderr.
pub fn run(command: Command, config: &RunConfig) -> i32 {
    match command.execute(config) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.unconverged > 0 {
                eprintln!("{} result(s) did not converge", outcome.unconverged);
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 26.5347679971839, 5e-324, f64::MAX, 1.0 + f64::EPSILON] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::io(Path::new("/x"), std::io::Error::other("y")).exit_code(), 3);
        assert_eq!(CliError::Numerical(crate::Error::Eigen { iterations: 1 }).exit_code(), 1);
        assert_eq!(Outcome { files: vec![], unconverged: 2 }.exit_code(), 1);
    }

    proptest::proptest! {
        #[test]
        fn any_finite_float_round_trips(bits in proptest::num::u64::ANY) {
            let x = f64::from_bits(bits);
            if x.is_finite() {
                proptest::prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
            }
        }
    }
}
