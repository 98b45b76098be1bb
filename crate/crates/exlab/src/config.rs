//! Experiment configuration: a flat `key = value` map plus the subcommand
//! name, with a canonical text form and its SHA-256 digest.

use std::collections::BTreeMap;
use std::fmt;

use exlab_core::{ParticleConfig, Point};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown subcommand `{0}`")]
    UnknownCommand(String),
    #[error("`{command}` does not take a `{key}` parameter")]
    UnknownKey { command: &'static str, key: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config file is for `{found}`, not `{expected}`")]
    CommandMismatch { expected: &'static str, found: String },
    #[error("bad value for `{key}`: {message}")]
    Value { key: String, message: String },
}

macro_rules! commands {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Command { $($variant),* }

        impl Command {
            pub const ALL: &'static [Command] = &[$(Command::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Command::$variant => $name),* }
            }

            pub fn from_name(s: &str) -> Result<Command, ConfigError> {
                match s {
                    $($name => Ok(Command::$variant),)*
                    _ => Err(ConfigError::UnknownCommand(s.to_string())),
                }
            }
        }
    };
}

commands! {
    SimulateSsep => "simulate-ssep",
    KernelExact => "kernel-exact",
    KernelMc => "kernel-mc",
    GradBound => "grad-bound",
    TvSum => "tv-sum",
    RwGradSum => "rw-grad-sum",
    CompareRw => "compare-rw",
    DiffSum => "diff-sum",
    Cumulants => "cumulants",
    Fluctuation => "fluctuation",
    RenormConst => "renorm-const",
    Pam => "pam",
    ProbeConvergence => "probe-convergence",
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters accepted by each subcommand, with defaults.
pub fn parameters(command: Command) -> &'static [(&'static str, &'static str)] {
    use Command::*;
    match command {
        SimulateSsep => &[("d", "1"), ("L", "16"), ("rho", "0.5"), ("T", "1"), ("snapshots", "4"), ("seed", "1")],
        KernelExact => &[("d", "1"), ("L", "6"), ("k", "2"), ("x", "0;1"), ("t", "1"), ("threshold", "0")],
        KernelMc => &[
            ("d", "1"),
            ("L", "6"),
            ("k", "2"),
            ("x", "0;1"),
            ("t", "1"),
            ("samples", "20000"),
            ("z_max", "5"),
            ("seed", "1"),
        ],
        GradBound => &[("d", "2"), ("L", "8"), ("k", "2"), ("theta", "0.5"), ("times", "0.25,1,4,16"), ("pairs", "origin")],
        TvSum => &[("d", "2"), ("L", "16"), ("k", "2"), ("x", "0,0;0,1"), ("times", "1,2,5,10,20,50,100")],
        RwGradSum => &[("d", "1"), ("k", "2"), ("x", "0;1"), ("times", "1,10,100,1000")],
        CompareRw => &[
            ("d", "1"),
            ("L", "6"),
            ("k", "2"),
            ("x", "0;1"),
            ("y", ""),
            ("t", "1"),
            ("tol", "1e-8"),
            ("threshold", "1e-6"),
        ],
        DiffSum => &[("d", "2"), ("L", "8"), ("k", "2"), ("x", "0,0;1,0"), ("times", "1,4,16")],
        Cumulants => &[
            ("d", "2"),
            ("N", "2,3,4"),
            ("rho", "0.5"),
            ("points", "0:0,0;0:0,0|0:0,0;0.0625:0,0|0:0,0;0.0625:0.25,0"),
            ("samples", "100000"),
            ("batches", "100"),
            ("spacing", "1"),
            ("seed", "1"),
        ],
        Fluctuation => &[("d", "1"), ("N", "4,5,6"), ("rho", "0.5"), ("f", "cosine:1"), ("samples", "2000"), ("z_max", "5"), ("seed", "1")],
        RenormConst => &[("d", "2"), ("N", "3..8"), ("T", "1")],
        Pam => &[
            ("d", "1"),
            ("N", "4"),
            ("rho", "0.5"),
            ("T", "1"),
            ("dt", "auto"),
            ("initial", "constant:1"),
            ("renorm", "computed"),
            ("env", "ssep"),
            ("snapshots", "4"),
            ("seed", "1"),
        ],
        ProbeConvergence => &[
            ("d", "1"),
            ("N", "3"),
            ("rho", "0.5"),
            ("T", "0.25"),
            ("dt", "auto"),
            ("eta", "0.5"),
            ("replicas", "32"),
            ("env", "ssep"),
            ("seed", "1"),
        ],
    }
}

/// A fully resolved configuration: every parameter of the subcommand has a
/// value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    command: Command,
    values: BTreeMap<String, String>,
}

fn parse_lines(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: n + 1 });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let values = parameters(command).iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig { command, values }
    }

    /// Layers defaults, then the file, then `EXLAB_SEED`, then CLI
    /// overrides.
    pub fn resolve(
        command: Command,
        file: Option<&str>,
        env_seed: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(command);
        if let Some(text) = file {
            for (k, v) in parse_lines(text)? {
                if k == "command" {
                    if v != command.name() {
                        return Err(ConfigError::CommandMismatch { expected: command.name(), found: v });
                    }
                    continue;
                }
                cfg.set(&k, &v)?;
            }
        }
        if let Some(seed) = env_seed {
            if cfg.values.contains_key("seed") {
                cfg.set("seed", seed)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        if cfg.values.contains_key("seed") {
            cfg.u64("seed")?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(ConfigError::UnknownKey { command: self.command.name(), key: key.to_string() }),
        }
    }

    pub fn command(&self) -> Command {
        self.command
    }

    /// Canonical text: `command = …` then the parameters sorted by key.
    pub fn to_text(&self) -> String {
        let mut s = format!("command = {}\n", self.command.name());
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Inverse of [`to_text`](Self::to_text).
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let lines = parse_lines(text)?;
        let name = lines
            .iter()
            .find(|(k, _)| k == "command")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| ConfigError::UnknownCommand(String::new()))?;
        let command = Command::from_name(&name)?;
        Self::resolve(command, Some(text), None, &[])
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).unwrap_or_else(|| panic!("`{key}` is not a parameter of {}", self.command))
    }

    fn bad(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value { key: key.to_string(), message: message.into() }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, s: &str) -> Result<T, ConfigError> {
        s.trim().parse().map_err(|_| self.bad(key, format!("cannot parse `{s}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(key, self.str(key))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(key, "must be finite"))
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.parse(key, self.str(key))
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.parse(key, self.str(key))
    }

    pub fn u32(&self, key: &str) -> Result<u32, ConfigError> {
        self.parse(key, self.str(key))
    }

    pub fn i64(&self, key: &str) -> Result<i64, ConfigError> {
        self.parse(key, self.str(key))
    }

    /// Comma-separated reals.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let s = self.str(key);
        if s.is_empty() {
            return Err(self.bad(key, "empty list"));
        }
        s.split(',').map(|p| self.parse::<f64>(key, p)).collect()
    }

    /// `a..b` (inclusive) or a comma-separated list.
    pub fn u32_list(&self, key: &str) -> Result<Vec<u32>, ConfigError> {
        let s = self.str(key);
        if let Some((a, b)) = s.split_once("..") {
            let (a, b): (u32, u32) = (self.parse(key, a)?, self.parse(key, b)?);
            if a > b {
                return Err(self.bad(key, "empty range"));
            }
            return Ok((a..=b).collect());
        }
        s.split(',').map(|p| self.parse::<u32>(key, p)).collect()
    }

    /// Points separated by `;`, coordinates by `,`.
    pub fn particles(&self, key: &str) -> Result<ParticleConfig, ConfigError> {
        parse_particles(self.str(key)).map_err(|m| self.bad(key, m))
    }
}

pub fn parse_particles(s: &str) -> Result<ParticleConfig, String> {
    let points = s
        .split(';')
        .map(|p| {
            let coords: Vec<i64> =
                p.split(',').map(|c| c.trim().parse::<i64>().map_err(|_| format!("bad coordinate `{c}`"))).collect::<Result<_, _>>()?;
            Point::new(&coords).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    ParticleConfig::new(points).map_err(|e| e.to_string())
}

/// `a;b;c` with coordinates comma separated, rendered back.
pub fn format_particles(c: &ParticleConfig) -> String {
    c.positions()
        .iter()
        .map(|p| p.coords().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}
