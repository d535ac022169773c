//! Deterministic synchronous simulator for the distributed method.
//!
//! Every agent runs the same local program and sees peers only through the
//! [`MessageBus`], which refuses sends to non-neighbors. A PPCM round is
//!
//! 1. phase A: send `(x_i, λ_i)`; predict `x̃_i`, growing `r_i` locally until
//!    `μ_i ≤ η`;
//! 2. phase B: send `x̃_i`; `λ_i⁺ = λ_i − (η² r_i/ρ) Σ_j a_ij (x̃_i − x̃_j)`;
//! 3. phase C: send `λ_i⁺`; `x_i⁺ = P_{X_i}[x_i − (g_i(x̃_i) − Σ_j a_ij (λ_i⁺ − λ_j⁺)) / r_i]`,
//!    then shrink `r_i` if `μ_i ≤ 0.5`;
//! 4. every agent reports its local `E_i` to a coordinator, which broadcasts
//!    a stop/continue verdict based on `max_i E_i`.
//!
//! All sends of a phase complete before any agent reads that phase, so the
//! result does not depend on the order agents are stepped in.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::kernels::{dual_scale, dual_step, gradient_ratio, grow_r, primal_step, shrink_r, weighted_disagreement};
use crate::linalg::{dist2, dist_inf, BlockVector};
use crate::problem::{AgentProblem, ConsensusProblem, Objective};
use crate::vi::Termination;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ppcm,
    Wagm,
}

/// Step sizes of the weighted-averaging gradient baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WagmStep {
    /// `α_k = c / (k + 1)`
    Diminishing { c: f64 },
    Fixed { alpha: f64 },
}

impl WagmStep {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            Self::Diminishing { c } => c / (k as f64 + 1.0),
            Self::Fixed { alpha } => alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SimulationConfig {
    pub eta: f64,
    pub tol: f64,
    pub r_init: f64,
    pub max_iters: usize,
    pub max_inner_retries: usize,
    pub method: Method,
    pub wagm_step: WagmStep,
    pub seed: u64,
    /// Draw `x_i⁰` from a seeded standard normal (projected onto `X_i`)
    /// instead of projecting the origin.
    pub random_start: bool,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            eta: 0.9,
            tol: 1e-3,
            r_init: 1.0,
            max_iters: 10_000,
            max_inner_retries: 50,
            method: Method::Ppcm,
            wagm_step: WagmStep::Diminishing { c: 1e-4 },
            seed: 0,
            random_start: false,
            r_min: 1e-12,
            r_max: 1e12,
        }
    }
}

impl SimulationConfig {
    pub fn wagm(step: WagmStep) -> Self {
        Self { method: Method::Wagm, wagm_step: step, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidConfig("tol must be positive and max_iters at least 1".into()));
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_init && self.r_init <= self.r_max) {
            return Err(Error::InvalidConfig("need 0 < r_min <= r_init <= r_max".into()));
        }
        let step_ok = match self.wagm_step {
            WagmStep::Diminishing { c } => c > 0.0,
            WagmStep::Fixed { alpha } => alpha > 0.0,
        };
        if !step_ok {
            return Err(Error::InvalidConfig("WAGM step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Message {
    #[serde(rename_all = "camelCase")]
    PhaseA { sender_id: usize, x: Vec<f64>, lambda: Vec<f64> },
    #[serde(rename_all = "camelCase")]
    PhaseB { sender_id: usize, x_tilde: Vec<f64> },
    #[serde(rename_all = "camelCase")]
    PhaseC { sender_id: usize, lambda_new: Vec<f64> },
    #[serde(rename_all = "camelCase")]
    ErrorReport { sender_id: usize, local_e: f64 },
    Verdict { stop: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    A,
    B,
    C,
    Verdict,
}

impl Message {
    fn phase(&self) -> Option<Phase> {
        match self {
            Self::PhaseA { .. } => Some(Phase::A),
            Self::PhaseB { .. } => Some(Phase::B),
            Self::PhaseC { .. } => Some(Phase::C),
            Self::Verdict { .. } => Some(Phase::Verdict),
            Self::ErrorReport { .. } => None,
        }
    }

    fn sender(&self) -> Option<usize> {
        match self {
            Self::PhaseA { sender_id, .. }
            | Self::PhaseB { sender_id, .. }
            | Self::PhaseC { sender_id, .. }
            | Self::ErrorReport { sender_id, .. } => Some(*sender_id),
            Self::Verdict { .. } => None,
        }
    }

    fn payload(&self) -> &[f64] {
        match self {
            Self::PhaseA { x, .. } => x,
            Self::PhaseB { x_tilde, .. } => x_tilde,
            Self::PhaseC { lambda_new, .. } => lambda_new,
            _ => &[],
        }
    }
}

/// Messages delivered in one round, by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MessageCounts {
    pub phase_a: usize,
    pub phase_b: usize,
    pub phase_c: usize,
    pub error_reports: usize,
    pub verdicts: usize,
}

impl MessageCounts {
    pub fn payload(&self) -> usize {
        self.phase_a + self.phase_b + self.phase_c
    }
}

/// Reliable in-order in-process transport restricted to graph edges.
#[derive(Debug, Clone)]
pub struct MessageBus {
    neighbors: Vec<Vec<usize>>,
    inboxes: Vec<Vec<Message>>,
    coordinator: Vec<Message>,
    counts: MessageCounts,
}

impl MessageBus {
    pub fn new(topology: &Topology) -> Self {
        Self {
            neighbors: topology.neighbor_lists(),
            inboxes: vec![Vec::new(); topology.p()],
            coordinator: Vec::new(),
            counts: MessageCounts::default(),
        }
    }

    /// Point-to-point payload message; `to` must be a neighbor of `from`.
    pub fn send(&mut self, from: usize, to: usize, msg: Message) -> Result<()> {
        if self.neighbors.get(from).is_none_or(|n| n.binary_search(&to).is_err()) {
            return Err(Error::ProtocolViolation(format!("agent {from} cannot reach {to}")));
        }
        if msg.sender() != Some(from) {
            return Err(Error::ProtocolViolation(format!("message from {from} carries a different sender id")));
        }
        match msg.phase() {
            Some(Phase::A) => self.counts.phase_a += 1,
            Some(Phase::B) => self.counts.phase_b += 1,
            Some(Phase::C) => self.counts.phase_c += 1,
            _ => return Err(Error::ProtocolViolation("only payload messages travel between agents".into())),
        }
        self.inboxes[to].push(msg);
        Ok(())
    }

    /// Sends `msg` to every neighbor of `from`.
    pub fn send_to_neighbors(&mut self, from: usize, msg: Message) -> Result<()> {
        for k in 0..self.neighbors[from].len() {
            let to = self.neighbors[from][k];
            self.send(from, to, msg.clone())?;
        }
        Ok(())
    }

    pub fn report(&mut self, sender_id: usize, local_e: f64) {
        self.counts.error_reports += 1;
        self.coordinator.push(Message::ErrorReport { sender_id, local_e });
    }

    /// Max-reduction over the reports received this round.
    pub fn reduce_reports(&mut self) -> Result<f64> {
        let p = self.inboxes.len();
        if self.coordinator.len() != p {
            return Err(Error::ProtocolViolation(format!("expected {p} error reports, got {}", self.coordinator.len())));
        }
        let global = self
            .coordinator
            .drain(..)
            .map(|m| match m {
                Message::ErrorReport { local_e, .. } => local_e,
                _ => f64::NAN,
            })
            .fold(0.0, |a: f64, e| if e > a || e.is_nan() { e } else { a });
        Ok(global)
    }

    pub fn broadcast_verdict(&mut self, stop: bool) {
        for inbox in &mut self.inboxes {
            self.counts.verdicts += 1;
            inbox.push(Message::Verdict { stop });
        }
    }

    /// Removes the phase messages addressed to `agent`, ordered by sender.
    /// Exactly one message per neighbor must be waiting.
    pub fn receive(&mut self, agent: usize, phase: Phase) -> Result<Vec<Message>> {
        let inbox = &mut self.inboxes[agent];
        let (mut taken, rest): (Vec<_>, Vec<_>) = inbox.drain(..).partition(|m| m.phase() == Some(phase));
        *inbox = rest;
        if phase == Phase::Verdict {
            return Ok(taken);
        }
        taken.sort_by_key(|m| m.sender());
        let senders: Vec<usize> = taken.iter().filter_map(Message::sender).collect();
        if senders != self.neighbors[agent] {
            return Err(Error::ProtocolViolation(format!(
                "agent {agent} expected {phase:?} messages from {:?}, got {senders:?}",
                self.neighbors[agent]
            )));
        }
        Ok(taken)
    }

    /// Counts since the previous call.
    pub fn take_counts(&mut self) -> MessageCounts {
        core::mem::take(&mut self.counts)
    }
}

/// Local state of one agent.
#[derive(Debug, Clone)]
pub struct AgentState<'a, O = crate::problem::QuadraticObjective> {
    pub agent_id: usize,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub r: f64,
    /// Ratio accepted in the last prediction.
    pub mu: f64,
    pub local_e: f64,
    pub inner_retries: usize,
    pub problem: &'a AgentProblem<O>,
    /// `(j, a_ij)`, ascending in `j`.
    pub neighbors: Vec<(usize, f64)>,
    x_tilde: Vec<f64>,
    grad: Vec<f64>,
    grad_tilde: Vec<f64>,
    lambda_next: Vec<f64>,
    scratch: Vec<f64>,
}

fn peer_blocks<'m>(weights: &'m [(usize, f64)], msgs: &'m [Message]) -> impl Iterator<Item = (f64, &'m [f64])> {
    weights.iter().zip(msgs).map(|(&(_, a), m)| (a, m.payload()))
}

impl<'a, O: Objective> AgentState<'a, O> {
    fn new(problem: &'a AgentProblem<O>, neighbors: Vec<(usize, f64)>, x: Vec<f64>, r: f64) -> Self {
        let n = x.len();
        Self {
            agent_id: problem.id,
            x,
            lambda: vec![0.0; n],
            r,
            mu: 0.0,
            local_e: f64::INFINITY,
            inner_retries: 0,
            problem,
            neighbors,
            x_tilde: vec![0.0; n],
            grad: vec![0.0; n],
            grad_tilde: vec![0.0; n],
            lambda_next: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    fn phase_a_message(&self) -> Message {
        Message::PhaseA { sender_id: self.agent_id, x: self.x.clone(), lambda: self.lambda.clone() }
    }

    /// Prediction with the local criterion loop.
    fn predict(&mut self, peers: &[Message], cfg: &SimulationConfig) -> Result<()> {
        let lambdas: Vec<&[f64]> = peers
            .iter()
            .map(|m| match m {
                Message::PhaseA { lambda, .. } => lambda.as_slice(),
                _ => &[],
            })
            .collect();
        let weights = self.neighbors.iter().map(|&(_, a)| a);
        weighted_disagreement(&self.lambda, weights.zip(lambdas.iter().copied()), &mut self.scratch);
        let f = &self.problem.objective;
        f.gradient_into(&self.x, &mut self.grad);
        self.inner_retries = 0;
        loop {
            primal_step(&self.x, &self.grad, &self.scratch, self.r, 1.0, &self.problem.set, &mut self.x_tilde);
            f.gradient_into(&self.x_tilde, &mut self.grad_tilde);
            self.mu = gradient_ratio(&self.x, &self.x_tilde, &self.grad, &self.grad_tilde, self.r);
            if self.mu <= cfg.eta {
                return Ok(());
            }
            if self.inner_retries == cfg.max_inner_retries {
                return Err(Error::InnerLoopStall { agent: self.agent_id, retries: self.inner_retries });
            }
            let r = grow_r(self.r, self.mu);
            if !(r <= cfg.r_max) {
                return Err(Error::ScalingOverflow { agent: self.agent_id, r });
            }
            self.r = r;
            self.inner_retries += 1;
        }
    }

    fn dual_update(&mut self, peers: &[Message], eta: f64, rho: f64) {
        weighted_disagreement(&self.x_tilde, peer_blocks(&self.neighbors, peers), &mut self.scratch);
        dual_step(&self.lambda, &self.scratch, dual_scale(eta, self.r, rho), &mut self.lambda_next);
    }

    fn correct(&mut self, peers: &[Message], cfg: &SimulationConfig) {
        weighted_disagreement(&self.lambda_next, peer_blocks(&self.neighbors, peers), &mut self.scratch);
        let mut x_next = vec![0.0; self.x.len()];
        primal_step(&self.x, &self.grad_tilde, &self.scratch, self.r, 1.0, &self.problem.set, &mut x_next);
        self.local_e = dist_inf(&self.x, &self.x_tilde).max(dist_inf(&self.lambda, &self.lambda_next));
        self.r = shrink_r(self.r, self.mu, cfg.r_min);
        self.x = x_next;
        core::mem::swap(&mut self.lambda, &mut self.lambda_next);
    }

    /// `x_i⁺ = P_{X_i}[y_i − α g_i(y_i)]` with `y_i` the uniform average of
    /// the own and neighbor iterates.
    fn wagm_step(&mut self, peers: &[Message], p: usize, alpha: f64) {
        let w = 1.0 / p as f64;
        let mut y = vec![0.0; self.x.len()];
        let mut own_added = false;
        for m in peers {
            let sender = m.sender().unwrap_or(usize::MAX);
            if !own_added && self.agent_id < sender {
                y.iter_mut().zip(&self.x).for_each(|(a, v)| *a += w * v);
                own_added = true;
            }
            y.iter_mut().zip(m.payload()).for_each(|(a, v)| *a += w * v);
        }
        if !own_added {
            y.iter_mut().zip(&self.x).for_each(|(a, v)| *a += w * v);
        }
        self.problem.objective.gradient_into(&y, &mut self.grad);
        y.iter_mut().zip(&self.grad).for_each(|(a, g)| *a -= alpha * g);
        self.problem.set.project_in_place(&mut y);
        self.local_e = dist2(&y, &self.x);
        self.x = y;
    }
}

/// Snapshot of one agent after a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentRecord {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub r: Option<f64>,
    pub mu: Option<f64>,
    pub local_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundRecord {
    pub round: usize,
    pub agents: Vec<AgentRecord>,
    pub global_e: f64,
    pub consensus_gap: f64,
    pub objective: f64,
    pub max_mu: Option<f64>,
    pub max_r: Option<f64>,
    pub messages: MessageCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptSummary {
    pub rounds: usize,
    pub status: Termination,
    /// `‖x_i − x*‖₂` per agent, once an oracle solution is attached.
    pub per_agent_error: Option<Vec<f64>>,
}

/// Append-only log of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transcript {
    pub config: SimulationConfig,
    pub rounds: Vec<RoundRecord>,
    pub summary: TranscriptSummary,
}

impl Transcript {
    pub fn converged(&self) -> bool {
        self.summary.status == Termination::Converged
    }

    pub fn final_x(&self) -> Vec<Vec<f64>> {
        self.rounds.last().map(|r| r.agents.iter().map(|a| a.x.clone()).collect()).unwrap_or_default()
    }

    pub fn attach_oracle(&mut self, x_star: &[f64]) {
        let errs = self.final_x().iter().map(|x| dist2(x, x_star)).collect();
        self.summary.per_agent_error = Some(errs);
    }
}

/// Largest `‖x_i − x_j‖∞` over the edges of `topology`.
pub fn consensus_gap(topology: &Topology, x: &[Vec<f64>]) -> f64 {
    topology.edges().iter().map(|&(i, j)| dist_inf(&x[i], &x[j])).fold(0.0, f64::max)
}

/// Outcome of one synchronous round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub global_e: f64,
    pub stop: bool,
}

/// Agents, transport and configuration of a running simulation.
pub struct Simulation<'a, O = crate::problem::QuadraticObjective> {
    cp: &'a ConsensusProblem<O>,
    cfg: SimulationConfig,
    agents: Vec<AgentState<'a, O>>,
    bus: MessageBus,
    rho: f64,
}

impl<'a, O: Objective> Simulation<'a, O> {
    pub fn new(cp: &'a ConsensusProblem<O>, cfg: SimulationConfig) -> Result<Self> {
        cfg.validate()?;
        if cp.constraint_rhs().is_some() {
            return Err(Error::InvalidConfig("the simulator only runs the consensus constraint Ax = 0".into()));
        }
        let topology = cp.graph().topology();
        if cfg.method == Method::Wagm && !topology.is_complete() {
            return Err(Error::TopologyUnsupported("uniform 1/p averaging needs a complete graph".into()));
        }
        let n = cp.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let agents = cp
            .agents()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut x: Vec<f64> =
                    if cfg.random_start { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() } else { vec![0.0; n] };
                a.set.project_in_place(&mut x);
                AgentState::new(a, cp.graph().weighted_neighbors(i), x, cfg.r_init)
            })
            .collect();
        Ok(Self { cp, rho: cp.laplacian().norm_bound(), cfg, agents, bus: MessageBus::new(topology) })
    }

    pub fn agents(&self) -> &[AgentState<'a, O>] {
        &self.agents
    }

    /// Overwrites the primal and dual iterates, e.g. to start at a known point.
    pub fn set_state(&mut self, x: &BlockVector, lambda: &BlockVector) -> Result<()> {
        self.cp.check_stacked(x)?;
        self.cp.check_stacked(lambda)?;
        for (i, a) in self.agents.iter_mut().enumerate() {
            a.x = x.block(i).to_vec();
            a.lambda = lambda.block(i).to_vec();
        }
        Ok(())
    }

    pub fn stacked_x(&self) -> BlockVector {
        BlockVector::from_blocks(&self.agents.iter().map(|a| a.x.clone()).collect::<Vec<_>>()).expect("p >= 2")
    }

    pub fn stacked_lambda(&self) -> BlockVector {
        BlockVector::from_blocks(&self.agents.iter().map(|a| a.lambda.clone()).collect::<Vec<_>>()).expect("p >= 2")
    }

    fn finish_round(&mut self, last_allowed: bool) -> Result<RoundOutcome> {
        for a in &self.agents {
            self.bus.report(a.agent_id, a.local_e);
        }
        let global_e = self.bus.reduce_reports()?;
        let stop = global_e <= self.cfg.tol || last_allowed;
        self.bus.broadcast_verdict(stop);
        for a in &self.agents {
            let v = self.bus.receive(a.agent_id, Phase::Verdict)?;
            if v != [Message::Verdict { stop }] {
                return Err(Error::ProtocolViolation(format!("agent {} missed the verdict", a.agent_id)));
            }
        }
        Ok(RoundOutcome { global_e, stop })
    }

    /// One synchronous PPCM round over all agents.
    pub fn run_round_ppcm(&mut self, last_allowed: bool) -> Result<RoundOutcome> {
        for a in &self.agents {
            self.bus.send_to_neighbors(a.agent_id, a.phase_a_message())?;
        }
        for a in &mut self.agents {
            let peers = self.bus.receive(a.agent_id, Phase::A)?;
            a.predict(&peers, &self.cfg)?;
        }
        for a in &self.agents {
            let msg = Message::PhaseB { sender_id: a.agent_id, x_tilde: a.x_tilde.clone() };
            self.bus.send_to_neighbors(a.agent_id, msg)?;
        }
        for a in &mut self.agents {
            let peers = self.bus.receive(a.agent_id, Phase::B)?;
            a.dual_update(&peers, self.cfg.eta, self.rho);
        }
        for a in &self.agents {
            let msg = Message::PhaseC { sender_id: a.agent_id, lambda_new: a.lambda_next.clone() };
            self.bus.send_to_neighbors(a.agent_id, msg)?;
        }
        for a in &mut self.agents {
            let peers = self.bus.receive(a.agent_id, Phase::C)?;
            a.correct(&peers, &self.cfg);
        }
        self.finish_round(last_allowed)
    }

    /// One synchronous WAGM round with step index `k`.
    pub fn run_round_wagm(&mut self, k: usize, last_allowed: bool) -> Result<RoundOutcome> {
        if !self.cp.graph().topology().is_complete() {
            return Err(Error::TopologyUnsupported("uniform 1/p averaging needs a complete graph".into()));
        }
        let alpha = self.cfg.wagm_step.at(k);
        let p = self.agents.len();
        for a in &self.agents {
            self.bus.send_to_neighbors(a.agent_id, a.phase_a_message())?;
        }
        for a in &mut self.agents {
            let peers = self.bus.receive(a.agent_id, Phase::A)?;
            a.wagm_step(&peers, p, alpha);
        }
        self.finish_round(last_allowed)
    }

    fn record(&mut self, round: usize, global_e: f64) -> Result<RoundRecord> {
        let ppcm = self.cfg.method == Method::Ppcm;
        let agents: Vec<AgentRecord> = self
            .agents
            .iter()
            .map(|a| AgentRecord {
                x: a.x.clone(),
                lambda: a.lambda.clone(),
                r: ppcm.then_some(a.r),
                mu: ppcm.then_some(a.mu),
                local_e: a.local_e,
            })
            .collect();
        let xs: Vec<Vec<f64>> = agents.iter().map(|a| a.x.clone()).collect();
        let fold_max = |it: &mut dyn Iterator<Item = Option<f64>>| it.flatten().reduce(f64::max);
        Ok(RoundRecord {
            round,
            global_e,
            consensus_gap: consensus_gap(self.cp.graph().topology(), &xs),
            objective: self.cp.objective(&self.stacked_x())?,
            max_mu: fold_max(&mut agents.iter().map(|a| a.mu)),
            max_r: fold_max(&mut self.agents.iter().map(|a| ppcm.then_some(a.r))),
            agents,
            messages: self.bus.take_counts(),
        })
    }

    /// Runs rounds until the verdict says stop.
    pub fn run(mut self) -> Result<(Vec<Vec<f64>>, Transcript)> {
        let mut rounds = Vec::new();
        let mut status = Termination::MaxIterations;
        for k in 0..self.cfg.max_iters {
            let last = k + 1 == self.cfg.max_iters;
            let out = match self.cfg.method {
                Method::Ppcm => self.run_round_ppcm(last)?,
                Method::Wagm => self.run_round_wagm(k, last)?,
            };
            rounds.push(self.record(k, out.global_e)?);
            if out.global_e <= self.cfg.tol {
                status = Termination::Converged;
            }
            if !out.global_e.is_finite() {
                status = Termination::Diverged;
                break;
            }
            if out.stop {
                break;
            }
        }
        let summary = TranscriptSummary { rounds: rounds.len(), status, per_agent_error: None };
        let xs = self.agents.iter().map(|a| a.x.clone()).collect();
        Ok((xs, Transcript { config: self.cfg, rounds, summary }))
    }
}

/// Runs the configured method until `max_i E_i ≤ tol` or `max_iters`.
/// Returns every agent's final primal iterate and the transcript.
pub fn simulate<O: Objective>(cp: &ConsensusProblem<O>, cfg: &SimulationConfig) -> Result<(Vec<Vec<f64>>, Transcript)> {
    Simulation::new(cp, cfg.clone())?.run()
}
