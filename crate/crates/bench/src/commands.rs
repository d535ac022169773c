//! The `generate`, `run` and `compare` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ppcm_core::linalg::{dist_inf, gram_spectral_norm, norm_inf};
use ppcm_core::runtime::consensus_gap;
use ppcm_core::{
    adjacency_uniform, build_topology, extragradient_solve, generate_lsq_instance, oracle_solve, simulate, solve,
    toy_instance, ConsensusProblem, ConvexSet, LsqInstance, Method, PrimalDualPoint, SimulationConfig, SolveOutcome,
    SolverConfig, StepMode, WagmStep,
};
use serde::{Deserialize, Serialize};

use crate::config::{topology_name, ExperimentConfig, MethodSpec, ProblemSpec};
use crate::error::{io_err, BenchError, Result};
use crate::matrix_io::{read_matrix, read_vector, write_matrix, write_vector};
use crate::report::{
    average_errors, merge_rows, render_csv, render_text, status_name, write_central_trace, write_round_trace,
    ComparisonReport, MethodResult, OracleResult, ReportMetadata, SCALE_NOTE,
};

pub const MATRIX_FILE: &str = "instance_B.txt";
pub const RHS_FILE: &str = "instance_b.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub seed: Option<u64>,
    /// Half-open row ranges per agent.
    pub partition: Vec<(usize, usize)>,
}

pub fn load_instance(cfg: &ExperimentConfig) -> Result<LsqInstance> {
    match &cfg.problem {
        ProblemSpec::Lsq { m, n, seed } => Ok(generate_lsq_instance(*m, *n, cfg.p, *seed)?),
        ProblemSpec::Toy => Ok(toy_instance()),
        ProblemSpec::File { path } => {
            let b = read_matrix(&path.join(MATRIX_FILE))?;
            let rhs = read_vector(&path.join(RHS_FILE))?;
            Ok(LsqInstance::new(b, rhs, cfg.p, None)?)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes the instance and its manifest into `cfg.output_dir`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let inst = load_instance(cfg)?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    write_matrix(&dir.join(MATRIX_FILE), &inst.matrix)?;
    write_vector(&dir.join(RHS_FILE), &inst.rhs)?;
    let manifest = Manifest { m: inst.m(), n: inst.n(), p: inst.p(), seed: inst.seed, partition: inst.partition.clone() };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(path))?;
    Ok(manifest)
}

/// Minimizer of `½‖Bx − b‖²` over `set` by projected gradient with step
/// `1/‖BᵀB‖`, started from the projected unconstrained solution.
pub fn projected_oracle(inst: &LsqInstance, set: &ConvexSet) -> Result<Vec<f64>> {
    let mut x = match oracle_solve(inst) {
        Ok(x) => x,
        Err(ppcm_core::Error::RankDeficient { .. }) => vec![0.0; inst.n()],
        Err(e) => return Err(e.into()),
    };
    set.project_in_place(&mut x);
    let lip = gram_spectral_norm(&inst.matrix, 1e-12, 100_000) * (1.0 + 1e-9);
    if lip == 0.0 {
        return Ok(x);
    }
    let mut resid = vec![0.0; inst.m()];
    let mut next = vec![0.0; inst.n()];
    for _ in 0..1_000_000 {
        inst.matrix.mul_vec_into(&x, &mut resid);
        resid.iter_mut().zip(&inst.rhs).for_each(|(r, b)| *r -= b);
        inst.matrix.tr_mul_vec_into(&resid, &mut next);
        next.iter_mut().zip(&x).for_each(|(g, xi)| *g = xi - *g / lip);
        set.project_in_place(&mut next);
        let step = dist_inf(&next, &x);
        std::mem::swap(&mut x, &mut next);
        if step <= 1e-15 * norm_inf(&x).max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Step constant picked when none is configured: `p / ‖BᵀB‖`.
pub fn auto_wagm_c(inst: &LsqInstance) -> f64 {
    inst.p() as f64 / gram_spectral_norm(&inst.matrix, 1e-10, 10_000)
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    inst: &'a LsqInstance,
    cp: &'a ConsensusProblem,
    x_star: &'a [f64],
    out_dir: &'a Path,
}

impl Runner<'_> {
    fn sim_config(&self) -> SimulationConfig {
        SimulationConfig {
            eta: self.cfg.eta,
            tol: self.cfg.tol,
            r_init: self.cfg.r_init,
            max_iters: self.cfg.max_iters,
            max_inner_retries: self.cfg.max_inner_retries,
            ..SimulationConfig::default()
        }
    }

    fn solver_config(&self, step: StepMode) -> SolverConfig {
        SolverConfig {
            eta: self.cfg.eta,
            step,
            tol: self.cfg.tol,
            max_iters: self.cfg.max_iters,
            max_inner_retries: self.cfg.max_inner_retries,
            r_init: self.cfg.r_init,
            ..SolverConfig::default()
        }
    }

    fn params(&self, method: MethodSpec) -> BTreeMap<String, f64> {
        let mut params = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            params.insert(k.to_string(), v);
        };
        match method {
            MethodSpec::Ppcm | MethodSpec::PpcmCentralUnit => {
                put("eta", self.cfg.eta);
                put("tol", self.cfg.tol);
                put("rInit", self.cfg.r_init);
            }
            MethodSpec::PpcmCentralAdaptive(g) => {
                put("eta", self.cfg.eta);
                put("tol", self.cfg.tol);
                put("rInit", self.cfg.r_init);
                put("gamma", g.unwrap_or(self.cfg.gamma));
            }
            MethodSpec::Wagm => {
                put("c", self.cfg.wagm_step_c.unwrap_or_else(|| auto_wagm_c(self.inst)));
                put("tol", self.cfg.wagm_tol);
            }
            MethodSpec::Extragradient(beta) => {
                put("beta", beta);
                put("tol", self.cfg.tol);
            }
        }
        params
    }

    fn finish(&self, method: MethodSpec, xs: Vec<Vec<f64>>, iterations: usize, status: ppcm_core::Termination, seconds: f64, params: BTreeMap<String, f64>) -> MethodResult {
        let finite = xs.iter().flatten().all(|v| v.is_finite());
        let (l2, linf) = average_errors(&xs, self.x_star);
        let gap = consensus_gap(self.cp.graph().topology(), &xs);
        MethodResult {
            method: method.to_string(),
            p: self.cp.p(),
            iterations,
            seconds,
            l2_error: finite.then_some(l2),
            linf_error: finite.then_some(linf),
            consensus_gap: finite.then_some(gap),
            converged: status == ppcm_core::Termination::Converged,
            status: status_name(status).into(),
            error: None,
            final_x: xs,
            params,
        }
    }

    fn central(&self, method: MethodSpec, outcome: SolveOutcome, seconds: f64, params: BTreeMap<String, f64>) -> Result<MethodResult> {
        let trace = self.out_dir.join(format!("trace_{}.csv", method.slug()));
        write_central_trace(&trace, &outcome.report.iterations)?;
        let xs = outcome.point.x.to_blocks();
        Ok(self.finish(method, xs, outcome.report.iteration_count(), outcome.report.status, seconds, params))
    }

    fn run_method(&self, method: MethodSpec) -> Result<MethodResult> {
        let params = self.params(method);
        let start = Instant::now();
        match method {
            MethodSpec::Ppcm | MethodSpec::Wagm => {
                let sim = match method {
                    MethodSpec::Wagm => SimulationConfig {
                        method: Method::Wagm,
                        tol: self.cfg.wagm_tol,
                        wagm_step: WagmStep::Diminishing { c: params["c"] },
                        ..self.sim_config()
                    },
                    _ => self.sim_config(),
                };
                let (xs, transcript) = simulate(self.cp, &sim)?;
                let seconds = start.elapsed().as_secs_f64();
                let trace = self.out_dir.join(format!("trace_{}.csv", method.slug()));
                write_round_trace(&trace, &transcript.rounds)?;
                Ok(self.finish(method, xs, transcript.summary.rounds, transcript.summary.status, seconds, params))
            }
            MethodSpec::PpcmCentralUnit | MethodSpec::PpcmCentralAdaptive(_) => {
                let step = match method {
                    MethodSpec::PpcmCentralAdaptive(_) => StepMode::Adaptive { gamma: params["gamma"] },
                    _ => StepMode::Unit,
                };
                let u0 = PrimalDualPoint::feasible_origin(self.cp);
                let outcome = solve(self.cp, &self.solver_config(step), &u0, None)?;
                let seconds = start.elapsed().as_secs_f64();
                self.central(method, outcome, seconds, params)
            }
            MethodSpec::Extragradient(beta) => {
                let u0 = PrimalDualPoint::feasible_origin(self.cp);
                let outcome = extragradient_solve(self.cp, beta, self.cfg.tol, self.cfg.max_iters, &u0)?;
                let seconds = start.elapsed().as_secs_f64();
                self.central(method, outcome, seconds, params)
            }
        }
    }
}

/// Runs every configured method, writing `report.json` and one trace CSV per
/// method into `cfg.output_dir`. A failing method is recorded in the report
/// and does not stop the others.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let inst = load_instance(cfg)?;
    let set = cfg.constraint.to_set(inst.n())?;
    let topology = build_topology(cfg.topology.clone(), inst.p(), cfg.graph_seed)?;
    let cp = inst.consensus_problem(adjacency_uniform(&topology), &set)?;
    ensure_dir(&cfg.output_dir)?;

    let start = Instant::now();
    let (oracle_name, x_star) = if cfg.constraint.is_none() {
        ("qr_least_squares", oracle_solve(&inst)?)
    } else {
        ("projected_gradient", projected_oracle(&inst, &set)?)
    };
    let oracle = OracleResult { method: oracle_name.into(), seconds: start.elapsed().as_secs_f64(), x_star };

    let runner = Runner { cfg, inst: &inst, cp: &cp, x_star: &oracle.x_star, out_dir: &cfg.output_dir };
    let methods = cfg
        .methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            runner.run_method(m).unwrap_or_else(|e| {
                MethodResult::failed(m.to_string(), inst.p(), start.elapsed().as_secs_f64(), &e, runner.params(m))
            })
        })
        .collect();

    let problem = match cfg.problem {
        ProblemSpec::Lsq { .. } => "lsq",
        ProblemSpec::Toy => "toy",
        ProblemSpec::File { .. } => "file",
    };
    let report = ComparisonReport {
        metadata: ReportMetadata {
            problem: problem.into(),
            m: inst.m(),
            n: inst.n(),
            p: inst.p(),
            seed: inst.seed,
            topology: topology_name(&cfg.topology),
            constraint: cfg.constraint.to_string(),
            scale_note: SCALE_NOTE.into(),
            config: cfg.clone(),
        },
        oracle,
        methods,
    };
    report.write(&cfg.output_dir.join(REPORT_FILE))?;
    Ok(report)
}

pub struct Comparison {
    pub text: String,
    pub csv: String,
}

/// Merges the method rows of several reports into one table.
pub fn cmd_compare(paths: &[PathBuf]) -> Result<Comparison> {
    if paths.is_empty() {
        return Err(BenchError::InvalidArgument("compare needs at least one report".into()));
    }
    let reports = paths.iter().map(|p| ComparisonReport::read(p)).collect::<Result<Vec<_>>>()?;
    let rows = merge_rows(&reports);
    let mut buf = Vec::new();
    render_csv(&rows, &mut buf)?;
    Ok(Comparison { text: render_text(&rows), csv: String::from_utf8(buf).expect("csv output is utf-8") })
}
