//! Flat `key = value` configuration files.
//!
//! One assignment per line; blank lines and `#` comments (full-line or
//! trailing) are ignored. Unknown and duplicate keys are errors, and every
//! diagnostic carries the file and line it came from. Keys that are left out
//! fall back to the defaults of the corresponding parameter struct.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::SimulationParams;
use crate::sweep::SweepSpec;
use crate::theory::SimplifiedParams;

struct RawConfig {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
    key_lines: BTreeMap<String, usize>,
}

impl RawConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigFile {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.split_once('#') {
                Some((before, _)) => before,
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected `key = value`, got `{}`", raw_line.trim()),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: "missing key before `=`".into(),
                });
            }
            if let Some((first_line, _)) = entries.get(&key) {
                return Err(Error::Config {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("duplicate key `{key}` (first set on line {first_line})"),
                });
            }
            entries.insert(key, (line_no, value));
        }
        Ok(RawConfig {
            path: path.to_path_buf(),
            entries,
            key_lines: BTreeMap::new(),
        })
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn take<T>(&mut self, key: &str, slot: &mut T) -> Result<()>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some((line, value)) = self.entries.remove(key) {
            *slot = value
                .parse()
                .map_err(|e| self.err(line, format!("invalid value for `{key}`: {e}")))?;
            self.key_lines.insert(key.to_string(), line);
        }
        Ok(())
    }

    fn take_list<T>(&mut self, key: &str, slot: &mut Vec<T>) -> Result<()>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some((line, value)) = self.entries.remove(key) {
            let mut parsed = Vec::new();
            for piece in value.split(',') {
                let piece = piece.trim();
                if piece.is_empty() {
                    return Err(self.err(line, format!("empty element in list `{key}`")));
                }
                parsed.push(
                    piece
                        .parse()
                        .map_err(|e| self.err(line, format!("invalid value for `{key}`: {e}")))?,
                );
            }
            *slot = parsed;
            self.key_lines.insert(key.to_string(), line);
        }
        Ok(())
    }

    fn take_path(&mut self, key: &str, slot: &mut Option<PathBuf>) -> Result<()> {
        if let Some((line, value)) = self.entries.remove(key) {
            if value.is_empty() {
                return Err(self.err(line, format!("empty value for `{key}`")));
            }
            *slot = Some(PathBuf::from(value));
            self.key_lines.insert(key.to_string(), line);
        }
        Ok(())
    }

    /// Error out if any keys were never consumed.
    fn finish(self) -> Result<BTreeMap<String, usize>> {
        let earliest = self.entries.into_iter().min_by_key(|(_, (line, _))| *line);
        if let Some((key, (line, _))) = earliest {
            return Err(Error::Config {
                path: self.path,
                line,
                msg: format!("unknown key `{key}`"),
            });
        }
        Ok(self.key_lines)
    }
}

/// Point a validation failure back at the config line that set the key, or
/// at the file as a whole when the default was at fault.
fn blame(err: Error, path: &Path, key_lines: &BTreeMap<String, usize>) -> Error {
    match err {
        Error::InvalidParam { key, msg } => match key_lines.get(key) {
            Some(&line) => Error::Config {
                path: path.to_path_buf(),
                line,
                msg: format!("invalid value for `{key}`: {msg}"),
            },
            None => Error::ConfigFile {
                path: path.to_path_buf(),
                msg: format!("invalid parameter `{key}`: {msg}"),
            },
        },
        other => other,
    }
}

/// Load full-model simulation parameters.
pub fn load_simulation_params(path: &Path) -> Result<SimulationParams> {
    let mut raw = RawConfig::load(path)?;
    let mut p = SimulationParams::default();
    raw.take("n_users", &mut p.n_users)?;
    raw.take("n_iterations", &mut p.n_iterations)?;
    raw.take("dim", &mut p.dim)?;
    raw.take("move_factor", &mut p.move_factor)?;
    raw.take("p_produce", &mut p.p_produce)?;
    raw.take("noise_sigma", &mut p.noise_sigma)?;
    raw.take("decay_lambda", &mut p.decay_lambda)?;
    raw.take("creator_fraction", &mut p.creator_fraction)?;
    raw.take("role_churn_prob", &mut p.role_churn_prob)?;
    raw.take("frac_min", &mut p.frac_min)?;
    raw.take("frac_max", &mut p.frac_max)?;
    raw.take("prune_threshold", &mut p.prune_threshold)?;
    raw.take("dbscan_eps", &mut p.dbscan_eps)?;
    raw.take("dbscan_min_pts", &mut p.dbscan_min_pts)?;
    raw.take("master_seed", &mut p.master_seed)?;
    let key_lines = raw.finish()?;
    p.validate().map_err(|e| blame(e, path, &key_lines))?;
    Ok(p)
}

/// Load a sweep grid. Swept keys take comma-separated lists; everything else
/// matches the simulation keys and applies to every run.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    let mut raw = RawConfig::load(path)?;
    let mut spec = SweepSpec::default();
    raw.take_list("n_users", &mut spec.n_users)?;
    raw.take_list("move_factor", &mut spec.move_factor)?;
    raw.take_list("p_produce", &mut spec.p_produce)?;
    raw.take_list("noise_sigma", &mut spec.noise_sigma)?;
    raw.take("replications", &mut spec.replications)?;
    raw.take("base_seed", &mut spec.base_seed)?;
    raw.take_path("output_dir", &mut spec.output_dir)?;
    raw.take("n_iterations", &mut spec.base.n_iterations)?;
    raw.take("dim", &mut spec.base.dim)?;
    raw.take("decay_lambda", &mut spec.base.decay_lambda)?;
    raw.take("creator_fraction", &mut spec.base.creator_fraction)?;
    raw.take("role_churn_prob", &mut spec.base.role_churn_prob)?;
    raw.take("frac_min", &mut spec.base.frac_min)?;
    raw.take("frac_max", &mut spec.base.frac_max)?;
    raw.take("prune_threshold", &mut spec.base.prune_threshold)?;
    raw.take("dbscan_eps", &mut spec.base.dbscan_eps)?;
    raw.take("dbscan_min_pts", &mut spec.base.dbscan_min_pts)?;
    let key_lines = raw.finish()?;
    spec.validate().map_err(|e| blame(e, path, &key_lines))?;
    Ok(spec)
}

/// Load parameters for the simplified 1-D regime. `creator_positions` takes
/// a comma-separated list.
pub fn load_simplified_params(path: &Path) -> Result<SimplifiedParams> {
    let mut raw = RawConfig::load(path)?;
    let mut p = SimplifiedParams::default();
    raw.take_list("creator_positions", &mut p.creator_positions)?;
    raw.take("n_users", &mut p.n_users)?;
    raw.take("rho", &mut p.rho)?;
    raw.take("alpha", &mut p.alpha)?;
    raw.take("n_iterations", &mut p.n_iterations)?;
    raw.take("noise_sigma", &mut p.noise_sigma)?;
    raw.take("decay_lambda", &mut p.decay_lambda)?;
    raw.take("init_mu", &mut p.init_mu)?;
    raw.take("init_sigma", &mut p.init_sigma)?;
    raw.take("master_seed", &mut p.master_seed)?;
    let key_lines = raw.finish()?;
    p.validate().map_err(|e| blame(e, path, &key_lines))?;
    Ok(p)
}
