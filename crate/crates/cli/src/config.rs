//! Run configuration: JSON file, inline flags and the `GSLAB_OUT` override.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gslab_core::oracle::DEFAULT_SEED;
use gslab_core::radial_ode::DEFAULT_STEP;
use gslab_core::{FamilyName, ProfileSpec};
use serde::{Deserialize, Serialize};

pub const OUT_ENV: &str = "GSLAB_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_TOL: f64 = 1e-6;
pub const MAX_STEP: f64 = 1e-2;
pub const T_MAX_RANGE: (f64, f64) = (10.0, 60.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    SolveZ,
    Oscillation,
    Stability,
    Oracle,
    Example,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::SolveZ => "solve-z",
            Command::Oscillation => "oscillation",
            Command::Stability => "stability",
            Command::Oracle => "oracle",
            Command::Example => "example",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Contents of a `--config` file. Profile parameters may be given either in
/// a nested `profile` object or at the top level.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub profile: Option<ProfileSpec>,
    pub family: Option<FamilyName>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "A", alias = "a")]
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub path: Option<String>,
    pub n: Option<usize>,
    pub t_max: Option<f64>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub which: Option<u8>,
    pub seed: Option<u64>,
}

/// Inline flags; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Profile family: zero, const, ex1_pos, ex1_neg, ex2, ex3 or table
    #[arg(long, value_parser = parse_family)]
    pub family: Option<FamilyName>,
    /// Exponent for ex1_pos and ex1_neg
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Exponent for ex2
    #[arg(long)]
    pub beta: Option<f64>,
    /// EX3 amplitude A
    #[arg(long = "a", short = 'A')]
    pub a: Option<f64>,
    /// Value of the constant profile
    #[arg(long)]
    pub c: Option<f64>,
    /// CSV table of (t, g) rows
    #[arg(long)]
    pub path: Option<String>,
    /// Space dimension (2 or 3)
    #[arg(long)]
    pub n: Option<usize>,
    /// Inner cutoff in t = -log r, within [10, 60]
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Integration step in t, at most 1e-2
    #[arg(long)]
    pub step: Option<f64>,
    /// Relative tolerance of the comparison monotonicity check
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory (GSLAB_OUT takes precedence)
    #[arg(long = "out")]
    pub out_dir: Option<PathBuf>,
    /// Output formats; repeat to select several (default: both)
    #[arg(long = "format", value_enum)]
    pub formats: Vec<Format>,
    /// Example number for the `example` command (1, 2 or 3)
    #[arg(long)]
    pub which: Option<u8>,
    /// Seed for random boundary data
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_family(s: &str) -> Result<FamilyName, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown family {s:?}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: Command,
    pub profile: ProfileSpec,
    pub n: usize,
    pub step: f64,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub json: bool,
    pub csv: bool,
    pub seed: u64,
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

pub fn load_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

/// Best-effort output directory, used to place the error report when the
/// configuration itself is invalid.
pub fn fallback_out_dir(flags: &Flags, env_out: Option<PathBuf>) -> PathBuf {
    env_out
        .or_else(|| flags.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn resolve(
    command: Command,
    flags: &Flags,
    file: &RunConfig,
    env_out: Option<PathBuf>,
) -> Result<Settings, ConfigError> {
    let bad = |m: String| Err(ConfigError::Invalid(m));
    if let Some(c) = file.command {
        if c != command {
            return bad(format!(
                "config file is for command {:?} but {:?} was requested",
                c.as_str(),
                command.as_str()
            ));
        }
    }

    let mut profile = file.profile.clone().unwrap_or_default();
    let overlay = |p: &mut ProfileSpec, family: Option<FamilyName>, gamma: Option<f64>, beta: Option<f64>, a: Option<f64>, c: Option<f64>, path: Option<String>| {
        if family.is_some() {
            p.family = family;
        }
        p.gamma = gamma.or(p.gamma);
        p.beta = beta.or(p.beta);
        p.a = a.or(p.a);
        p.c = c.or(p.c);
        if path.is_some() {
            p.path = path;
        }
    };
    overlay(&mut profile, file.family, file.gamma, file.beta, file.a, file.c, file.path.clone());
    overlay(&mut profile, flags.family, flags.gamma, flags.beta, flags.a, flags.c, flags.path.clone());

    let n = pick(&flags.n, &file.n).or(profile.n).unwrap_or(2);
    if n != 2 && n != 3 {
        return bad(format!("n must be 2 or 3, got {n}"));
    }
    if let Some(t_max) = pick(&flags.t_max, &file.t_max) {
        if !(t_max >= T_MAX_RANGE.0 && t_max <= T_MAX_RANGE.1) {
            return bad(format!("t_max must lie in [{}, {}], got {t_max}", T_MAX_RANGE.0, T_MAX_RANGE.1));
        }
        profile.t_max = Some(t_max);
    }
    let step = pick(&flags.step, &file.step).unwrap_or(DEFAULT_STEP);
    if !(step > 0.0 && step <= MAX_STEP) {
        return bad(format!("step must lie in (0, {MAX_STEP}], got {step}"));
    }
    let tol = pick(&flags.tol, &file.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return bad(format!("tol must be positive, got {tol}"));
    }

    if command == Command::Example {
        let which = pick(&flags.which, &file.which)
            .ok_or_else(|| ConfigError::Invalid("example needs \"which\" (1, 2 or 3)".into()))?;
        let family = match which {
            1 => match profile.family {
                Some(FamilyName::Ex1Neg) => FamilyName::Ex1Neg,
                _ => FamilyName::Ex1Pos,
            },
            2 => FamilyName::Ex2,
            3 => FamilyName::Ex3,
            other => return bad(format!("which must be 1, 2 or 3, got {other}")),
        };
        profile.family = Some(family);
    }
    if profile.family.is_none() {
        return bad("no profile family given".into());
    }
    if profile.family == Some(FamilyName::Ex3) && profile.n.is_none() {
        profile.n = Some(n);
    }

    let formats = if !flags.formats.is_empty() {
        flags.formats.clone()
    } else {
        file.formats.clone().unwrap_or_else(|| vec![Format::Json, Format::Csv])
    };
    let out_dir = env_out
        .or_else(|| pick(&flags.out_dir, &file.out_dir))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let base_dir = flags
        .config
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf));

    Ok(Settings {
        command,
        profile,
        n,
        step,
        tol,
        out_dir,
        json: formats.contains(&Format::Json),
        csv: formats.contains(&Format::Csv),
        seed: pick(&flags.seed, &file.seed).unwrap_or(DEFAULT_SEED),
        base_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(json: &str) -> RunConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn flags_override_file_and_env_overrides_out() {
        let f = file(r#"{"family": "ex1_pos", "gamma": 0.5, "out_dir": "a"}"#);
        let flags = Flags { gamma: Some(0.75), out_dir: Some("b".into()), ..Default::default() };
        let s = resolve(Command::Classify, &flags, &f, None).unwrap();
        assert_eq!(s.profile.gamma, Some(0.75));
        assert_eq!(s.out_dir, PathBuf::from("b"));
        let s = resolve(Command::Classify, &flags, &f, Some("c".into())).unwrap();
        assert_eq!(s.out_dir, PathBuf::from("c"));
        assert!(s.json && s.csv);
        assert_eq!(s.seed, 42);
    }

    #[test]
    fn example_config() {
        let f = file(r#"{"command": "example", "which": 3, "A": 10, "n": 2}"#);
        let s = resolve(Command::Example, &Flags::default(), &f, None).unwrap();
        assert_eq!(s.profile.family, Some(FamilyName::Ex3));
        assert_eq!(s.profile.a, Some(10.0));
        assert_eq!(s.profile.n, Some(2));
    }

    #[test]
    fn nested_profile() {
        let f = file(r#"{"profile": {"family": "zero"}, "n": 3}"#);
        let s = resolve(Command::SolveZ, &Flags::default(), &f, None).unwrap();
        assert_eq!(s.profile.family, Some(FamilyName::Zero));
        assert_eq!(s.n, 3);
    }

    #[test]
    fn validation() {
        let cases = [
            r#"{"family": "zero", "n": 4}"#,
            r#"{"family": "zero", "t_max": 5}"#,
            r#"{"family": "zero", "step": 0.1}"#,
            r#"{"family": "zero", "step": 0}"#,
            r#"{"gamma": 1}"#,
        ];
        for c in cases {
            assert!(resolve(Command::Classify, &Flags::default(), &file(c), None).is_err(), "{c}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        let f = file(r#"{"command": "oracle", "family": "zero"}"#);
        assert!(resolve(Command::Classify, &Flags::default(), &f, None).is_err());
    }

    #[test]
    fn family_flag_parsing() {
        assert_eq!(parse_family("ex1_pos"), Ok(FamilyName::Ex1Pos));
        assert_eq!(parse_family("EX2"), Ok(FamilyName::Ex2));
        assert!(parse_family("ex9").is_err());
    }
}
