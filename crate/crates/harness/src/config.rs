//! Experiment configuration files.
//!
//! A config is a small TOML document: a few top-level keys, a `[map]`
//! section selecting the system, one optional section per experiment, and an
//! `[output]` section. Unknown keys anywhere are rejected, and every error
//! names the offending key and its line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use singhyp_core::flow::SingularityParams;
use singhyp_core::maps::{LorenzModelParams, MapFamily};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, " at line {l}, key `{k}`")?,
            (Some(l), None) => write!(f, " at line {l}")?,
            (None, Some(k)) => write!(f, " at key `{k}`")?,
            (None, None) => {}
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Ulam,
    Convergence,
    Correlations,
    LoglawMap,
    Dimension,
    FlowLoglaw,
    NormsAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Ulam,
        Experiment::Convergence,
        Experiment::Correlations,
        Experiment::LoglawMap,
        Experiment::Dimension,
        Experiment::FlowLoglaw,
        Experiment::NormsAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ulam => "ulam",
            Experiment::Convergence => "convergence",
            Experiment::Correlations => "correlations",
            Experiment::LoglawMap => "loglaw-map",
            Experiment::Dimension => "dimension",
            Experiment::FlowLoglaw => "flow-loglaw",
            Experiment::NormsAudit => "norms-audit",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!(
                    "unknown experiment `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Doubling,
    Tent,
    LorenzBase,
    Lorenz,
    AffineSkew,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub family: FamilyName,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub contraction: Option<f64>,
}

impl MapSection {
    fn family(&self) -> Result<MapFamily, (&'static str, String)> {
        let d = LorenzModelParams::default();
        let unused = |keys: &[(&'static str, bool)]| -> Result<(), (&'static str, String)> {
            for &(k, set) in keys {
                if set {
                    return Err((k, format!("`{k}` does not apply to this map family")));
                }
            }
            Ok(())
        };
        let a = self.alpha.is_some();
        let b = self.beta.is_some();
        let k = self.kappa.is_some();
        let c = self.contraction.is_some();
        Ok(match self.family {
            FamilyName::Doubling | FamilyName::Tent => {
                unused(&[("alpha", a), ("beta", b), ("kappa", k), ("contraction", c)])?;
                if self.family == FamilyName::Doubling {
                    MapFamily::Doubling
                } else {
                    MapFamily::Tent
                }
            }
            FamilyName::LorenzBase => {
                unused(&[("beta", b), ("kappa", k), ("contraction", c)])?;
                MapFamily::LorenzBase {
                    alpha: self.alpha.unwrap_or(d.alpha),
                }
            }
            FamilyName::Lorenz => {
                unused(&[("contraction", c)])?;
                MapFamily::Lorenz(LorenzModelParams {
                    alpha: self.alpha.unwrap_or(d.alpha),
                    beta: self.beta.unwrap_or(d.beta),
                    kappa: self.kappa.unwrap_or(d.kappa),
                })
            }
            FamilyName::AffineSkew => {
                unused(&[("alpha", a), ("beta", b), ("kappa", k)])?;
                MapFamily::AffineSkew {
                    contraction: self.contraction.unwrap_or(1.0 / 3.0),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UlamSection {
    pub bins: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for UlamSection {
    fn default() -> Self {
        Self {
            bins: 1024,
            tol: 1e-13,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialDensity {
    /// `1 + (x - 1/2)`.
    Linear,
    /// `2·1[0, 1/2)`.
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    Identity,
    Cos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub bins: usize,
    pub horizon: usize,
    pub initial: InitialDensity,
    pub observable: TestFunction,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            bins: 1024,
            horizon: 40,
            initial: InitialDensity::Linear,
            observable: TestFunction::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    /// Tent bump of given center and radius.
    Bump,
    /// The base coordinate.
    X,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationsSection {
    pub length: usize,
    pub burn_in: usize,
    pub max_lag: usize,
    pub observable: ObservableKind,
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for CorrelationsSection {
    fn default() -> Self {
        Self {
            length: 10_000_000,
            burn_in: 10_000,
            max_lag: 40,
            observable: ObservableKind::Bump,
            center: [0.5, 0.5],
            radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoglawSection {
    /// Explicit target; otherwise the orbit point at `target_index`.
    pub target: Option<[f64; 2]>,
    pub target_index: usize,
    pub r_max: f64,
    pub ratio: f64,
    pub count: usize,
    pub samples: usize,
    pub horizon: u64,
    pub burn_in: usize,
}

impl Default for LoglawSection {
    fn default() -> Self {
        Self {
            target: None,
            target_index: 100_003,
            r_max: 0.0625,
            ratio: 0.5,
            count: 7,
            samples: 200,
            horizon: 100_000_000,
            burn_in: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionMode {
    /// Ball counts on a stored orbit of `length` points.
    Stored,
    /// Ball counts accumulated over `steps` without storing the orbit.
    Streamed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionSection {
    pub mode: DimensionMode,
    pub length: usize,
    pub points: usize,
    pub r_max: f64,
    pub ratio: f64,
    pub count: usize,
    pub steps: u64,
    pub chains: usize,
    pub burn_in: usize,
}

impl Default for DimensionSection {
    fn default() -> Self {
        Self {
            mode: DimensionMode::Stored,
            length: 10_000_000,
            points: 5,
            r_max: 0.1,
            ratio: 0.5,
            count: 10,
            steps: 200_000_000,
            chains: 8,
            burn_in: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoofKind {
    Constant,
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub roof: RoofKind,
    pub height: f64,
    pub tau0: f64,
    /// Eigenvalues `(λ₁, λ₂, λ₃)` of the singularity.
    pub lambda: [f64; 3],
    pub target: Option<[f64; 2]>,
    pub target_index: usize,
    pub target_height: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub count: usize,
    pub samples: usize,
    pub horizon: u64,
    pub burn_in: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            roof: RoofKind::Constant,
            height: 1.0,
            tau0: 1.0,
            lambda: [1.0, -2.0, -0.75],
            target: None,
            target_index: 100_003,
            target_height: 0.5,
            r_max: 0.0625,
            ratio: 0.5,
            count: 7,
            samples: 200,
            horizon: 10_000_000,
            burn_in: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsSection {
    pub grid: usize,
    pub n_max: usize,
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            grid: 512,
            n_max: 3,
            center: [0.5, 0.5],
            radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub map: MapSection,
    #[serde(default)]
    pub ulam: UlamSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub correlations: CorrelationsSection,
    #[serde(default, rename = "loglaw-map")]
    pub loglaw: LoglawSection,
    #[serde(default)]
    pub dimension: DimensionSection,
    #[serde(default, rename = "flow-loglaw")]
    pub flow: FlowSection,
    #[serde(default, rename = "norms-audit")]
    pub norms: NormsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A parsed config together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub family: MapFamily,
    pub text: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| from_toml_error(text, &e))?;
        let family = config
            .map
            .family()
            .map_err(|(key, message)| at_key(text, Some("map"), key, message))?;
        let loaded = LoadedConfig {
            config,
            family,
            text: text.to_owned(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Range checks for the knobs of every section.
    fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let t = self.text.as_str();
        let check = |ok: bool, section: &'static str, key: &'static str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(at_key(
                    t,
                    Some(section),
                    key,
                    format!("`{key}` must be {what}"),
                ))
            }
        };
        let radii = |section, r_max: f64, ratio: f64, count: usize| -> Result<(), ConfigError> {
            check(r_max > 0.0 && r_max < 1.0, section, "r_max", "in (0, 1)")?;
            check(ratio > 0.0 && ratio < 1.0, section, "ratio", "in (0, 1)")?;
            check(
                (5..=40).contains(&count),
                section,
                "count",
                "between 5 and 40",
            )
        };

        check(
            (2..=1 << 16).contains(&c.ulam.bins),
            "ulam",
            "bins",
            "between 2 and 65536",
        )?;
        check(
            c.ulam.tol > 0.0 && c.ulam.tol < 1e-3,
            "ulam",
            "tol",
            "in (0, 1e-3)",
        )?;
        check(c.ulam.max_iter >= 1, "ulam", "max_iter", "at least 1")?;

        check(
            (2..=1 << 16).contains(&c.convergence.bins),
            "convergence",
            "bins",
            "between 2 and 65536",
        )?;
        check(
            (3..=1000).contains(&c.convergence.horizon),
            "convergence",
            "horizon",
            "between 3 and 1000",
        )?;

        let cs = &c.correlations;
        check(
            (1..=1000).contains(&cs.max_lag),
            "correlations",
            "max_lag",
            "between 1 and 1000",
        )?;
        check(
            cs.length >= 100 * cs.max_lag + cs.max_lag,
            "correlations",
            "length",
            "at least 101 times max_lag",
        )?;
        check(cs.radius > 0.0, "correlations", "radius", "positive")?;
        check(
            in_square(cs.center),
            "correlations",
            "center",
            "inside the unit square",
        )?;

        let l = &c.loglaw;
        radii("loglaw-map", l.r_max, l.ratio, l.count)?;
        check(l.samples >= 100, "loglaw-map", "samples", "at least 100")?;
        check(l.horizon >= 1, "loglaw-map", "horizon", "at least 1")?;
        if let Some(p) = l.target {
            check(
                in_square(p),
                "loglaw-map",
                "target",
                "inside the unit square",
            )?;
        }

        let d = &c.dimension;
        radii("dimension", d.r_max, d.ratio, d.count)?;
        check(
            (1..=100).contains(&d.points),
            "dimension",
            "points",
            "between 1 and 100",
        )?;
        check(d.length >= 1000, "dimension", "length", "at least 1000")?;
        check(d.chains >= 1, "dimension", "chains", "at least 1")?;
        check(d.steps >= 1000, "dimension", "steps", "at least 1000")?;

        let f = &c.flow;
        radii("flow-loglaw", f.r_max, f.ratio, f.count)?;
        check(f.samples >= 100, "flow-loglaw", "samples", "at least 100")?;
        check(f.height > 0.0, "flow-loglaw", "height", "positive")?;
        check(f.tau0 > 0.0, "flow-loglaw", "tau0", "positive")?;
        check(
            f.target_height >= 0.0,
            "flow-loglaw",
            "target_height",
            "nonnegative",
        )?;
        if let Some(p) = f.target {
            check(
                in_square(p),
                "flow-loglaw",
                "target",
                "inside the unit square",
            )?;
        }
        if f.roof == RoofKind::Singular {
            let params = SingularityParams::new(f.lambda[0], f.lambda[1], f.lambda[2])
                .map_err(|e| at_key(t, Some("flow-loglaw"), "lambda", e.to_string()))?;
            if let MapFamily::Lorenz(m) = &self.family {
                let consistent = (params.alpha() - m.alpha).abs() < 1e-12
                    && (params.beta() - m.beta).abs() < 1e-12;
                check(
                    consistent,
                    "flow-loglaw",
                    "lambda",
                    "consistent with the map's alpha = -λ₃/λ₁ and beta = -λ₂/λ₁",
                )?;
            }
        }

        let n = &c.norms;
        check(
            (8..=4096).contains(&n.grid),
            "norms-audit",
            "grid",
            "between 8 and 4096",
        )?;
        check(
            (1..=6).contains(&n.n_max),
            "norms-audit",
            "n_max",
            "between 1 and 6",
        )?;
        check(n.radius > 0.0, "norms-audit", "radius", "positive")?;
        Ok(())
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.config.output.dir.as_deref()
    }
}

fn in_square(p: [f64; 2]) -> bool {
    p.iter().all(|v| (0.0..=1.0).contains(v))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn from_toml_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let message = e.message().trim().to_owned();
    let line = e.span().map(|s| line_of(text, s.start));
    let quoted = ["unknown field `", "missing field `", "duplicate key `"]
        .iter()
        .find_map(|p| {
            let rest = &message[message.find(p)? + p.len()..];
            Some(rest[..rest.find('`')?].to_owned())
        });
    let key = quoted.or_else(|| {
        let l = line?;
        let src = text.lines().nth(l - 1)?;
        let (k, _) = src.split_once('=')?;
        Some(k.trim().trim_matches('"').to_owned())
    });
    ConfigError { line, key, message }
}

/// An error attached to `key`, with the line where it appears in `section`
/// when the key is present in the text.
fn at_key(text: &str, section: Option<&str>, key: &str, message: String) -> ConfigError {
    let mut current: Option<String> = None;
    let mut line = None;
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = Some(name.trim().trim_matches('"').to_owned());
            continue;
        }
        let Some((k, _)) = s.split_once('=') else {
            continue;
        };
        if k.trim().trim_matches('"') == key && current.as_deref() == section {
            line = Some(i + 1);
            break;
        }
    }
    ConfigError {
        line,
        key: Some(match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_owned(),
        }),
        message,
    }
}
