//! Run configuration: defaults per command, then flags, then a JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use windstat::correlators::{Estimator, UNFOLD_NS_HALF};
use windstat::ensembles::SymmetryClass;
use windstat::loops::LoopFunctions;
use windstat::winding::{DEFAULT_GRID, QUANTIZATION_TOL};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Winding,
    Dist,
    Corr,
    Unfold,
    Gen,
    Kitaev,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Winding => "winding",
            Self::Dist => "dist",
            Self::Corr => "corr",
            Self::Unfold => "unfold",
            Self::Gen => "gen",
            Self::Kitaev => "kitaev",
        }
    }
}

/// Thresholds used by the verdict checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Distance of the contour value from an integer.
    pub quantization: f64,
    /// Allowed `|MC − exact| / stderr`.
    pub z_score: f64,
    /// Total-variation distance between exact and sampled PMFs.
    pub tv: f64,
    /// Allowed `|variance ratio − 1|` at `N ≥ 400`.
    pub variance_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quantization: QUANTIZATION_TOL, z_score: 4.0, tv: 0.01, variance_ratio: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KitaevSweep {
    pub t: Vec<f64>,
    pub mu: f64,
    pub delta: f64,
    /// `[mu_lo, mu_hi, steps]`.
    pub scan: Option<(f64, f64, usize)>,
}

impl Default for KitaevSweep {
    fn default() -> Self {
        Self { t: vec![0.25, 0.5, 1.0], mu: 1.0, delta: 1.0, scan: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub n: Vec<usize>,
    pub class: SymmetryClass,
    #[serde(rename = "loop")]
    pub loop_fns: LoopFunctions,
    pub trials: u64,
    pub seed: u64,
    pub streams: u64,
    /// Contour grid (winding), δ samples (unfold) or k-grid (kitaev).
    pub grid: usize,
    pub alpha: f64,
    /// Separation window `[lo, hi]` for unfolding.
    pub delta_range: (f64, f64),
    /// Point sets for correlators, or `p` sets for generators.
    pub points: Vec<Vec<f64>>,
    /// `q` sets for generators; a single set is reused for every `p` set.
    pub q: Vec<Vec<f64>>,
    pub estimator: Estimator,
    pub kitaev: KitaevSweep,
    /// Also write the spectra of every draw (winding).
    pub spectra: bool,
    /// Largest N that gets a sampled histogram (dist).
    pub histogram_max_n: usize,
    pub tolerances: Tolerances,
    /// Not part of the hashed configuration.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::defaults(Command::Winding)
    }
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let (n, trials, grid) = match command {
            Command::Winding => (vec![4], 100, DEFAULT_GRID),
            Command::Dist => (vec![1, 6, 10, 50, 100, 400], 10_000, 0),
            Command::Corr => (vec![4], 100_000, 0),
            Command::Unfold => (UNFOLD_NS_HALF.to_vec(), 0, 91),
            Command::Gen => (vec![4], 100_000, 0),
            Command::Kitaev => (vec![], 0, windstat::kitaev::DEFAULT_K_GRID),
        };
        let (points, q) = match command {
            Command::Corr => (vec![vec![1.2, 0.4], vec![2.0, 0.4], vec![2.5, 0.4]], vec![]),
            Command::Gen => (vec![vec![0.65], vec![1.05], vec![1.45], vec![2.25]], vec![vec![0.35]]),
            _ => (vec![], vec![]),
        };
        Self {
            command,
            n,
            class: SymmetryClass::AIII,
            loop_fns: LoopFunctions::Trig,
            trials,
            seed: 1,
            streams: 16,
            grid,
            alpha: 0.5,
            delta_range: (0.5, 5.0),
            points,
            q,
            estimator: Estimator::Plain,
            kitaev: KitaevSweep::default(),
            spectra: false,
            histogram_max_n: 10,
            tolerances: Tolerances::default(),
            out_dir: PathBuf::from("windstat-out"),
        }
    }

    /// Applies the keys of a JSON object on top of this configuration.
    pub fn merge_json(&self, overrides: &Value) -> Result<Self, CliError> {
        let Value::Object(_) = overrides else {
            return Err(CliError::Usage("config file must hold a JSON object".into()));
        };
        let mut base = serde_json::to_value(self).expect("config serializes");
        merge(&mut base, overrides);
        let merged: Self = serde_json::from_value(base).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        if merged.command != self.command {
            return Err(CliError::Usage(format!(
                "config file is for `{}`, not `{}`",
                merged.command.name(),
                self.command.name()
            )));
        }
        Ok(merged)
    }

    pub fn merge_file(&self, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        self.merge_json(&value)
    }

    /// The configuration as recorded in outputs: everything except `out_dir`.
    pub fn provenance(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("out_dir");
        }
        v
    }

    /// SHA-256 of the compact provenance JSON, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.provenance().to_string().as_bytes());
        format!("{digest:x}")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.command != Command::Kitaev && self.n.is_empty() {
            return usage("--n needs at least one value".into());
        }
        if self.n.contains(&0) {
            return usage("N must be positive".into());
        }
        if self.streams == 0 {
            return usage("--streams must be positive".into());
        }
        match self.command {
            Command::Winding if self.trials == 0 => usage("--trials must be positive".into()),
            Command::Corr | Command::Gen if self.trials == 0 => usage("--trials must be positive".into()),
            Command::Corr if self.points.is_empty() => usage("--points needs at least one point set".into()),
            Command::Gen if self.points.is_empty() || self.q.is_empty() => usage("--points and --q are required".into()),
            Command::Gen if self.q.len() != 1 && self.q.len() != self.points.len() => {
                usage(format!("{} q sets for {} p sets", self.q.len(), self.points.len()))
            }
            Command::Dist if self.class != SymmetryClass::AIII => usage("dist covers the AIII class only".into()),
            Command::Unfold if self.grid < 2 => usage("--grid must be at least 2".into()),
            Command::Unfold if !(self.delta_range.0 < self.delta_range.1) => usage("empty separation window".into()),
            Command::Kitaev if self.kitaev.t.is_empty() && self.kitaev.scan.is_none() => {
                usage("nothing to do: give --t or --scan".into())
            }
            _ => Ok(()),
        }
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// `"0.3,1.0;0.5,2.0"` → `[[0.3, 1.0], [0.5, 2.0]]`.
pub fn parse_point_sets(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .filter(|set| !set.trim().is_empty())
        .map(|set| set.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect())
        .collect()
}

/// `plain`, `circle` or `shift:K`.
pub fn parse_estimator(s: &str) -> Result<Estimator, String> {
    match s {
        "plain" => Ok(Estimator::Plain),
        "circle" => Ok(Estimator::CircleAverage),
        _ => match s.strip_prefix("shift:").map(str::parse::<usize>) {
            Some(Ok(shifts)) if shifts > 0 => Ok(Estimator::ShiftAverage { shifts }),
            _ => Err(format!("unknown estimator {s:?}; expected plain, circle or shift:K")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_overrides_nested_keys() {
        let base = RunConfig::defaults(Command::Dist);
        let merged = base.merge_json(&json!({"n": [3], "tolerances": {"tv": 0.05}})).unwrap();
        assert_eq!(merged.n, vec![3]);
        assert_eq!(merged.tolerances.tv, 0.05);
        assert_eq!(merged.tolerances.z_score, 4.0);
        assert!(base.merge_json(&json!({"bogus": 1})).is_err());
        assert!(base.merge_json(&json!({"command": "corr"})).is_err());
    }

    #[test]
    fn hash_ignores_out_dir() {
        let a = RunConfig::defaults(Command::Winding);
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_point_sets("0.3,1;2").unwrap(), vec![vec![0.3, 1.0], vec![2.0]]);
        assert!(parse_point_sets("x").is_err());
        assert_eq!(parse_estimator("shift:8").unwrap(), Estimator::ShiftAverage { shifts: 8 });
        assert!(parse_estimator("shift:0").is_err());
    }

    #[test]
    fn roundtrip() {
        for c in [Command::Winding, Command::Dist, Command::Corr, Command::Unfold, Command::Gen, Command::Kitaev] {
            let cfg = RunConfig::defaults(c);
            let back: RunConfig = serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
            assert_eq!(cfg, back);
            assert!(cfg.validate().is_ok());
        }
    }
}
