//! Experiment configuration, read from JSON and overridden by flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ppcm_core::{ConvexSet, TopologyKind};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, BenchError, Result};

pub const DESK_M: usize = 2000;
pub const DESK_N: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Lsq { m: usize, n: usize, seed: u64 },
    Toy,
    /// A directory holding `instance_B.txt` and `instance_b.txt`.
    File { path: PathBuf },
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::Lsq { m: DESK_M, n: DESK_N, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    Ppcm,
    PpcmCentralUnit,
    /// `None` takes the config's `gamma`.
    PpcmCentralAdaptive(Option<f64>),
    Wagm,
    Extragradient(f64),
}

impl MethodSpec {
    /// Name safe for use in a file name.
    pub fn slug(&self) -> String {
        self.to_string().replace([':', '.'], "_")
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Ppcm => f.write_str("ppcm"),
            MethodSpec::PpcmCentralUnit => f.write_str("ppcm_central_unit"),
            MethodSpec::PpcmCentralAdaptive(None) => f.write_str("ppcm_central_adaptive"),
            MethodSpec::PpcmCentralAdaptive(Some(g)) => write!(f, "ppcm_central_adaptive:{g}"),
            MethodSpec::Wagm => f.write_str("wagm"),
            MethodSpec::Extragradient(b) => write!(f, "extragradient:{b}"),
        }
    }
}

fn parse_f64(what: &str, s: &str) -> Result<f64> {
    s.parse().map_err(|_| BenchError::InvalidArgument(format!("{what}: {s:?} is not a number")))
}

impl FromStr for MethodSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        match (name.trim(), arg) {
            ("ppcm", None) => Ok(MethodSpec::Ppcm),
            ("ppcm_central_unit", None) => Ok(MethodSpec::PpcmCentralUnit),
            ("ppcm_central_adaptive", None) => Ok(MethodSpec::PpcmCentralAdaptive(None)),
            ("ppcm_central_adaptive", Some(g)) => Ok(MethodSpec::PpcmCentralAdaptive(Some(parse_f64("gamma", g)?))),
            ("wagm", None) => Ok(MethodSpec::Wagm),
            ("extragradient", Some(b)) => Ok(MethodSpec::Extragradient(parse_f64("beta", b)?)),
            ("extragradient", None) => Err(BenchError::InvalidArgument("extragradient needs a step, e.g. extragradient:0.5".into())),
            _ => Err(BenchError::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = BenchError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

/// The set every agent is constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConstraintSpec {
    #[default]
    None,
    Box { lo: f64, hi: f64 },
    /// Ball of radius `r` around the origin.
    Ball { r: f64 },
}

impl ConstraintSpec {
    pub fn to_set(&self, n: usize) -> Result<ConvexSet> {
        Ok(match *self {
            ConstraintSpec::None => ConvexSet::whole_space(n),
            ConstraintSpec::Box { lo, hi } => ConvexSet::uniform_box(n, lo, hi)?,
            ConstraintSpec::Ball { r } => ConvexSet::ball(vec![0.0; n], r)?,
        })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ConstraintSpec::None)
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintSpec::None => f.write_str("none"),
            ConstraintSpec::Box { lo, hi } => write!(f, "box:{lo}:{hi}"),
            ConstraintSpec::Ball { r } => write!(f, "ball:{r}"),
        }
    }
}

impl FromStr for ConstraintSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts[..] {
            ["none"] => Ok(ConstraintSpec::None),
            ["box", lo, hi] => {
                let (lo, hi) = (parse_f64("box lower", lo)?, parse_f64("box upper", hi)?);
                if lo > hi {
                    return Err(BenchError::InvalidArgument(format!("box lower {lo} exceeds upper {hi}")));
                }
                Ok(ConstraintSpec::Box { lo, hi })
            }
            ["ball", r] => Ok(ConstraintSpec::Ball { r: parse_f64("ball radius", r)? }),
            _ => Err(BenchError::InvalidArgument(format!("bad constraint {s:?}; expected box:<lo>:<hi>, ball:<r> or none"))),
        }
    }
}

impl TryFrom<String> for ConstraintSpec {
    type Error = BenchError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConstraintSpec> for String {
    fn from(c: ConstraintSpec) -> String {
        c.to_string()
    }
}

/// `complete`, `ring`, `star` or `er:<prob>`.
pub fn parse_topology(s: &str) -> Result<TopologyKind> {
    match s.trim().split_once(':') {
        None => match s.trim() {
            "complete" => Ok(TopologyKind::Complete),
            "ring" => Ok(TopologyKind::Ring),
            "star" => Ok(TopologyKind::Star),
            _ => Err(BenchError::InvalidArgument(format!("unknown topology {s:?}"))),
        },
        Some(("er", prob)) => Ok(TopologyKind::ErdosRenyi { prob: parse_f64("edge probability", prob)? }),
        Some(_) => Err(BenchError::InvalidArgument(format!("unknown topology {s:?}"))),
    }
}

pub fn topology_name(kind: &TopologyKind) -> String {
    match kind {
        TopologyKind::Complete => "complete".into(),
        TopologyKind::Ring => "ring".into(),
        TopologyKind::Star => "star".into(),
        TopologyKind::ErdosRenyi { prob } => format!("er:{prob}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    /// Ignored for the toy problem, which always has two agents.
    pub p: usize,
    pub topology: TopologyKind,
    /// Seed for random topologies.
    pub graph_seed: u64,
    pub methods: Vec<MethodSpec>,
    pub eta: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub max_inner_retries: usize,
    pub r_init: f64,
    /// WAGM step constant `c` in `c/(k+1)`; `None` picks `p / ‖BᵀB‖`.
    pub wagm_step_c: Option<f64>,
    pub wagm_tol: f64,
    pub constraint: ConstraintSpec,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            p: 4,
            topology: TopologyKind::Complete,
            graph_seed: 0,
            methods: vec![MethodSpec::Ppcm],
            eta: 0.9,
            gamma: 1.9,
            tol: 1e-3,
            max_iters: 10_000,
            max_inner_retries: 50,
            r_init: 1.0,
            wagm_step_c: None,
            wagm_tol: 1e-6,
            constraint: ConstraintSpec::None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::SchemaMismatch { path: path.to_path_buf(), reason: e.to_string() })
    }

    /// Number of agents actually used.
    pub fn agents(&self) -> usize {
        match self.problem {
            ProblemSpec::Toy => 2,
            _ => self.p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::InvalidArgument(m));
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return bad(format!("gamma must lie in (0, 2), got {}", self.gamma));
        }
        if !(self.tol > 0.0) || !(self.wagm_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_iters == 0 {
            return bad("max iterations must be positive".into());
        }
        if let ProblemSpec::Lsq { m, n, .. } = self.problem {
            if m < n || n == 0 {
                return Err(ppcm_core::Error::InvalidDimensions(format!("need m >= n >= 1, got m={m}, n={n}")).into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for s in ["ppcm", "ppcm_central_unit", "ppcm_central_adaptive", "ppcm_central_adaptive:1.5", "wagm", "extragradient:0.5"] {
            let m: MethodSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("extragradient".parse::<MethodSpec>().is_err());
        assert!("admm".parse::<MethodSpec>().is_err());
        assert_eq!(MethodSpec::Extragradient(1e6).slug(), "extragradient_1000000");
    }

    #[test]
    fn constraints_parse() {
        assert_eq!("box:0:0.5".parse::<ConstraintSpec>().unwrap(), ConstraintSpec::Box { lo: 0.0, hi: 0.5 });
        assert_eq!("ball:2".parse::<ConstraintSpec>().unwrap(), ConstraintSpec::Ball { r: 2.0 });
        assert_eq!("none".parse::<ConstraintSpec>().unwrap(), ConstraintSpec::None);
        assert!("box:1:0".parse::<ConstraintSpec>().is_err());
        assert!("box:1".parse::<ConstraintSpec>().is_err());
    }

    #[test]
    fn json_defaults_fill_missing_fields() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"problem":{"kind":"toy"},"methods":["ppcm","wagm"],"constraint":"box:0:1.5"}"#).unwrap();
        assert_eq!(cfg.methods, vec![MethodSpec::Ppcm, MethodSpec::Wagm]);
        assert_eq!(cfg.constraint, ConstraintSpec::Box { lo: 0.0, hi: 1.5 });
        assert_eq!(cfg.eta, 0.9);
        assert_eq!(cfg.agents(), 2);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn topology_flags() {
        assert_eq!(parse_topology("ring").unwrap(), TopologyKind::Ring);
        assert_eq!(parse_topology("er:0.3").unwrap(), TopologyKind::ErdosRenyi { prob: 0.3 });
        assert!(parse_topology("torus").is_err());
        assert_eq!(topology_name(&TopologyKind::ErdosRenyi { prob: 0.3 }), "er:0.3");
    }

    #[test]
    fn wide_instances_are_rejected() {
        let cfg = ExperimentConfig { problem: ProblemSpec::Lsq { m: 5, n: 10, seed: 0 }, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(BenchError::Core(ppcm_core::Error::InvalidDimensions(_)))));
    }
}
