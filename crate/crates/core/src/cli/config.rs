//! TOML run configuration and matrix-file parsing.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use super::CliError;
use crate::bcc::{CovarianceSplit, TraceConfig};
use crate::dmc::{CodeParams, DistGrid, DmcWiretapSpec, JointAuxDist, SimConfig};
use crate::linalg::{matrix_from_rows, SymMatrix};
use crate::oracle::OracleConfig;
use crate::wiretap::PowerConstraint;
use crate::OptimizerConfig;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub base: Option<String>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub power: PowerSection,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub bcc: BccSection,
    #[serde(default)]
    pub dmc: DmcSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Directory that relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub h_r: Option<Rows>,
    pub h_r_file: Option<PathBuf>,
    pub h_e: Option<Rows>,
    pub h_e_file: Option<PathBuf>,
    pub h1: Option<Rows>,
    pub h1_file: Option<PathBuf>,
    pub h2: Option<Rows>,
    pub h2_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub s: Option<Rows>,
    pub s_file: Option<PathBuf>,
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BccSection {
    /// Common-rate target in nats.
    pub r0: Option<f64>,
    /// Common-rate target as a fraction of `R0_max`.
    pub r0_fraction: Option<f64>,
    pub lambda: Option<[f64; 2]>,
    pub beta: Option<[f64; 2]>,
    pub b0: Option<Rows>,
    pub b1: Option<Rows>,
    /// JSON file with `b0`, `b1` (top level or under `split`) and optionally
    /// `lambda`, `beta`, `r0_target`, and a top-level `base` for the rate.
    pub split_file: Option<PathBuf>,
    /// Entry of a `samples` array in `split_file` (as written by the region
    /// commands in JSON mode).
    pub sample_index: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmcSection {
    /// Crossover probabilities `[main, eavesdropper]` of a BSC pair.
    pub bsc: Option<[f64; 2]>,
    pub p_y_given_x: Option<Rows>,
    pub p_z_given_x: Option<Rows>,
    pub p_yz_given_x: Option<Vec<Rows>>,
    /// Auxiliary chain; when absent, the region corner found with `grid`.
    pub dist: Option<DistSection>,
    #[serde(default)]
    pub code: CodeParams,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub grid: DistGrid,
    /// Runs one report per block length, overriding `code.n`.
    pub block_lengths: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSection {
    pub p_u: Vec<f64>,
    pub p_v_given_u: Rows,
    pub p_x_given_v: Rows,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub kkt: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kkt: 1e-4, oracle: 1e-3 }
    }
}

/// Split plus optional multipliers read from a split file or the config.
#[derive(Debug, Clone)]
pub struct SplitInput {
    pub split: CovarianceSplit,
    pub lambda: Option<[f64; 2]>,
    pub beta: Option<[f64; 2]>,
    pub r0_target: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct SplitFile {
    b0: Option<SymMatrix>,
    b1: Option<SymMatrix>,
    split: Option<CovarianceSplit>,
    lambda: Option<[f64; 2]>,
    beta: Option<[f64; 2]>,
    r0_target: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn matrix(&self, name: &str, inline: &Option<Rows>, file: &Option<PathBuf>) -> Result<Option<Rows>, CliError> {
        match (inline, file) {
            (Some(_), Some(_)) => Err(CliError::Config(format!("give either {name} or {name}_file, not both"))),
            (Some(rows), None) => Ok(Some(rows.clone())),
            (None, Some(path)) => read_matrix_file(&self.resolve(path)).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn required(&self, section: &str, name: &str, inline: &Option<Rows>, file: &Option<PathBuf>) -> Result<DMatrix<f64>, CliError> {
        let rows = self
            .matrix(name, inline, file)?
            .ok_or_else(|| CliError::Config(format!("missing [{section}] {name} (or {name}_file)")))?;
        matrix_from_rows(&rows).map_err(|e| CliError::Config(format!("[{section}] {name}: {e}")))
    }

    pub fn receiver_channel(&self) -> Result<DMatrix<f64>, CliError> {
        let c = &self.channel;
        self.required("channel", "h_r", &c.h_r, &c.h_r_file)
    }

    /// `(H_r, H_e)` of the wiretap channel.
    pub fn wiretap_channel(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), CliError> {
        let c = &self.channel;
        Ok((self.required("channel", "h_r", &c.h_r, &c.h_r_file)?, self.required("channel", "h_e", &c.h_e, &c.h_e_file)?))
    }

    /// `(H1, H2)` of the broadcast channel, falling back to `h_r`, `h_e`.
    pub fn broadcast_channel(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), CliError> {
        let c = &self.channel;
        let has_bcc = c.h1.is_some() || c.h1_file.is_some() || c.h2.is_some() || c.h2_file.is_some();
        if has_bcc {
            Ok((self.required("channel", "h1", &c.h1, &c.h1_file)?, self.required("channel", "h2", &c.h2, &c.h2_file)?))
        } else {
            self.wiretap_channel()
        }
    }

    pub fn power_constraint(&self) -> Result<PowerConstraint, CliError> {
        let p = &self.power;
        let s = self.matrix("s", &p.s, &p.s_file)?;
        match (s, p.trace) {
            (Some(rows), None) => Ok(PowerConstraint::MatrixS(
                SymMatrix::from_rows(&rows).map_err(|e| CliError::Config(format!("[power] s: {e}")))?,
            )),
            (None, Some(t)) => Ok(PowerConstraint::TraceP(t)),
            (None, None) => Err(CliError::Config("missing power constraint: set [power] s, s_file or trace".into())),
            (Some(_), Some(_)) => Err(CliError::Config("give exactly one power constraint kind in [power]".into())),
        }
    }

    /// The covariance constraint `S`; errors for a trace budget.
    pub fn matrix_constraint(&self, command: &str) -> Result<SymMatrix, CliError> {
        match self.power_constraint()? {
            PowerConstraint::MatrixS(s) => Ok(s),
            PowerConstraint::TraceP(_) => Err(CliError::Config(format!("{command} needs a matrix constraint [power] s"))),
        }
    }

    pub fn split_input(&self) -> Result<SplitInput, CliError> {
        let b = &self.bcc;
        let inline = match (&b.b0, &b.b1) {
            (Some(b0), Some(b1)) => Some(CovarianceSplit::new(
                SymMatrix::from_rows(b0).map_err(|e| CliError::Config(format!("[bcc] b0: {e}")))?,
                SymMatrix::from_rows(b1).map_err(|e| CliError::Config(format!("[bcc] b1: {e}")))?,
            )),
            (None, None) => None,
            _ => return Err(CliError::Config("[bcc] needs both b0 and b1".into())),
        };
        let file = match &b.split_file {
            Some(path) => Some(read_split_file(&self.resolve(path), b.sample_index)?),
            None => None,
        };
        let from_file = file.as_ref().and_then(|f| match (&f.split, &f.b0, &f.b1) {
            (Some(s), _, _) => Some(s.clone()),
            (None, Some(b0), Some(b1)) => Some(CovarianceSplit::new(b0.clone(), b1.clone())),
            _ => None,
        });
        let split = match (inline, from_file) {
            (Some(_), Some(_)) => return Err(CliError::Config("split given both inline and in split_file".into())),
            (Some(s), None) | (None, Some(s)) => s,
            (None, None) => return Err(CliError::Config("missing split: set [bcc] b0/b1 or split_file".into())),
        };
        Ok(SplitInput {
            split,
            lambda: b.lambda.or(file.as_ref().and_then(|f| f.lambda)),
            beta: b.beta.or(file.as_ref().and_then(|f| f.beta)),
            r0_target: b.r0.or(file.as_ref().and_then(|f| f.r0_target)),
        })
    }

    pub fn dmc_spec(&self) -> Result<DmcWiretapSpec, CliError> {
        let d = &self.dmc;
        let spec = match (&d.bsc, &d.p_y_given_x, &d.p_z_given_x, &d.p_yz_given_x) {
            (Some([a, b]), None, None, None) => DmcWiretapSpec::bsc_pair(*a, *b),
            (None, Some(py), Some(pz), None) => DmcWiretapSpec::from_marginals(py, pz),
            (None, None, None, Some(t)) => DmcWiretapSpec::new(t.clone()),
            (None, None, None, None) => {
                return Err(CliError::Config("missing [dmc] channel: bsc, p_y_given_x + p_z_given_x, or p_yz_given_x".into()))
            }
            _ => return Err(CliError::Config("give exactly one [dmc] channel description".into())),
        };
        spec.map_err(|e| CliError::Config(format!("[dmc] channel: {e}")))
    }

    pub fn dmc_dist(&self) -> Result<Option<JointAuxDist>, CliError> {
        self.dmc
            .dist
            .as_ref()
            .map(|d| {
                JointAuxDist::new(d.p_u.clone(), d.p_v_given_u.clone(), d.p_x_given_v.clone())
                    .map_err(|e| CliError::Config(format!("[dmc.dist] {e}")))
            })
            .transpose()
    }
}

/// Whitespace- or comma-separated rows, one per line; `#` starts a comment.
pub fn parse_matrix_text(text: &str, origin: &str) -> Result<Rows, CliError> {
    let mut rows: Rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let mut row = Vec::new();
        let mut col = 0;
        for piece in body.split(|c: char| c == ',' || c.is_whitespace()) {
            let start = col;
            col += piece.chars().count() + 1;
            if piece.is_empty() {
                continue;
            }
            let v: f64 = piece.parse().map_err(|_| {
                CliError::Config(format!("{origin}:{}:{}: cannot parse '{piece}' as a number", ln + 1, start + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::Config(format!("{origin}:{}:{}: non-finite entry '{piece}'", ln + 1, start + 1)));
            }
            row.push(v);
        }
        if row.is_empty() {
            continue;
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::Config(format!(
                    "{origin}:{}:1: row has {} entries, expected {}",
                    ln + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{origin}: no matrix rows found")));
    }
    Ok(rows)
}

fn read_split_file(path: &Path, index: Option<usize>) -> Result<SplitFile, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(&e))?;
    let root: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
    let bits = root.get("base").and_then(|b| b.as_str()) == Some("bits");
    let entry = match root.get("samples").and_then(|s| s.as_array()) {
        Some(samples) => {
            let i = index.unwrap_or(0);
            samples.get(i).cloned().ok_or_else(|| bad(&format!("no sample {i} ({} present)", samples.len())))?
        }
        None => root,
    };
    let mut f: SplitFile = serde_json::from_value(entry).map_err(|e| bad(&e))?;
    if bits {
        f.r0_target = f.r0_target.map(|r| r * std::f64::consts::LN_2);
    }
    Ok(f)
}

pub fn read_matrix_file(path: &Path) -> Result<Rows, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_matrix_text(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators() {
        let rows = parse_matrix_text("# comment\n1.8, 2.0\n\n1 3  # trailing\n", "m").unwrap();
        assert_eq!(rows, vec![vec![1.8, 2.0], vec![1.0, 3.0]]);
    }

    #[test]
    fn reports_line_and_column() {
        match parse_matrix_text("1 2\n3 x4\n", "m.txt") {
            Err(CliError::Config(msg)) => assert_eq!(msg, "m.txt:2:3: cannot parse 'x4' as a number"),
            other => panic!("{other:?}"),
        }
        match parse_matrix_text("1 2\n3\n", "m.txt") {
            Err(CliError::Config(msg)) => assert!(msg.starts_with("m.txt:2:1: row has 1 entries"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(parse_matrix_text("\n# only comments\n", "m").is_err());
    }

    #[test]
    fn power_constraint_needs_exactly_one_kind() {
        let mut cfg = RunConfig::default();
        assert!(cfg.power_constraint().is_err());
        cfg.power.trace = Some(1.0);
        assert!(matches!(cfg.power_constraint(), Ok(PowerConstraint::TraceP(_))));
        cfg.power.s = Some(vec![vec![1.0]]);
        assert!(cfg.power_constraint().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[power]\nS = [[1.0]]\n").is_err());
        let cfg: RunConfig = toml::from_str("seed = 3\n[power]\ntrace = 2.0\n[optimizer]\nn_starts = 2\n").unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.optimizer.n_starts, 2);
    }
}
