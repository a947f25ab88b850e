//! Agent-based simulation of humans and AI agents on a graph.
//!
//! Every node plays the one-shot game once with each neighbor; its fitness is
//! the sum of those payoffs. Updating is asynchronous: each elementary step
//! picks one human uniformly at random, then one of its neighbors as a role
//! model, and the human copies the role model's action with the Fermi
//! probability. AI agents never change and are never picked as learners.
//!
//! Imitating a Samaritan or Malicious AI means adopting C or D under the AI
//! selection intensity. A Discriminatory AI mirrors whoever it faces, so
//! imitating it would hand the learner its own action back; such steps are
//! no-ops. Two Discriminatory AIs facing each other cooperate.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::game::{fermi_prob, AiBehavior, PayoffMatrix, Strategy};
use crate::network::Graph;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

pub const DEFAULT_SAMPLE_WINDOW: u64 = 1000;
pub const DEFAULT_SAMPLE_INTERVAL: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentRole {
    Human(Strategy),
    Ai(AiBehavior),
}

impl AgentRole {
    pub fn is_ai(self) -> bool {
        matches!(self, AgentRole::Ai(_))
    }

    /// Action this agent plays against `other`.
    pub fn action_against(self, other: AgentRole) -> Strategy {
        match (self, other) {
            (AgentRole::Human(s), _) => s,
            (AgentRole::Ai(AiBehavior::Discriminatory), AgentRole::Ai(AiBehavior::Discriminatory)) => {
                Strategy::Cooperate
            }
            (AgentRole::Ai(a), AgentRole::Human(s)) => a.action_against(s),
            (AgentRole::Ai(a), AgentRole::Ai(b)) => {
                a.action_against(b.action_against(Strategy::Cooperate))
            }
        }
    }
}

/// Payoff to `i` when it meets `j`.
pub fn pairwise_payoff(i: AgentRole, j: AgentRole, m: &PayoffMatrix) -> f64 {
    m.payoff_to(i.action_against(j), j.action_against(i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiPlacement {
    Uniform,
    /// Highest-degree nodes first; ties go to the lower index.
    HubBiased,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub graph: Arc<Graph>,
    pub ai_count: usize,
    pub ai_behavior: AiBehavior,
    pub matrix: PayoffMatrix,
    pub beta_h: f64,
    pub beta_ai: f64,
    pub steps: u64,
    /// Number of final steps averaged into [`RunSummary::mean_coop_fraction`].
    pub sample_window: u64,
    /// Spacing of the recorded [`TimeSeries`] points.
    pub sample_interval: u64,
    pub seed: u64,
    pub ai_placement: AiPlacement,
    /// Probability that a human starts as a cooperator.
    pub initial_cooperation: f64,
}

impl SimConfig {
    /// Config with a single selection intensity for both kinds of role model
    /// and defaults for everything else.
    pub fn new(
        graph: Arc<Graph>,
        ai_count: usize,
        ai_behavior: AiBehavior,
        matrix: PayoffMatrix,
        beta: f64,
        steps: u64,
        seed: u64,
    ) -> Self {
        Self {
            graph,
            ai_count,
            ai_behavior,
            matrix,
            beta_h: beta,
            beta_ai: beta,
            steps,
            sample_window: DEFAULT_SAMPLE_WINDOW.min(steps.max(1)),
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            seed,
            ai_placement: AiPlacement::Uniform,
            initial_cooperation: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.node_count();
        if self.ai_count >= n {
            return Err(invalid(
                "ai_count",
                format!("must be below the node count {n}, got {}", self.ai_count),
            ));
        }
        for (name, beta) in [("beta_h", self.beta_h), ("beta_ai", self.beta_ai)] {
            if !(beta.is_finite() && beta >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {beta}")));
            }
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be positive"));
        }
        if self.sample_window == 0 || self.sample_window > self.steps {
            return Err(invalid(
                "sample_window",
                format!("must lie in 1..={}, got {}", self.steps, self.sample_window),
            ));
        }
        if self.sample_interval == 0 {
            return Err(invalid("sample_interval", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_cooperation) {
            return Err(invalid("initial_cooperation", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    roles: Vec<AgentRole>,
    fitness: Vec<f64>,
    humans: Vec<usize>,
    coop_count: usize,
    step_index: u64,
    rng: SimRng,
}

impl SimState {
    /// Places the AIs, draws initial human strategies and computes fitness.
    pub fn initialize(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.graph;
        let n = g.node_count();
        let mut rng = rng_from_seed(cfg.seed);
        let ai_nodes: Vec<usize> = match cfg.ai_placement {
            AiPlacement::Uniform => sample(&mut rng, n, cfg.ai_count).into_vec(),
            AiPlacement::HubBiased => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&i| (std::cmp::Reverse(g.degree(i)), i));
                order.truncate(cfg.ai_count);
                order
            }
        };
        let mut is_ai = vec![false; n];
        for i in ai_nodes {
            is_ai[i] = true;
        }
        let roles = (0..n)
            .map(|i| {
                if is_ai[i] {
                    AgentRole::Ai(cfg.ai_behavior)
                } else if rng.gen_bool(cfg.initial_cooperation) {
                    AgentRole::Human(Strategy::Cooperate)
                } else {
                    AgentRole::Human(Strategy::Defect)
                }
            })
            .collect();
        Self::assemble(cfg, roles, rng)
    }

    /// State with explicitly chosen roles; the RNG is seeded from `cfg.seed`.
    /// `cfg.ai_count` and `cfg.ai_behavior` are not consulted.
    pub fn with_roles(cfg: &SimConfig, roles: Vec<AgentRole>) -> Result<Self> {
        if roles.len() != cfg.graph.node_count() {
            return Err(invalid(
                "roles",
                format!("{} roles for {} nodes", roles.len(), cfg.graph.node_count()),
            ));
        }
        if roles.iter().all(|r| r.is_ai()) {
            return Err(invalid("roles", "at least one human is required"));
        }
        Self::assemble(cfg, roles, rng_from_seed(cfg.seed))
    }

    fn assemble(cfg: &SimConfig, roles: Vec<AgentRole>, rng: SimRng) -> Result<Self> {
        let humans: Vec<usize> = (0..roles.len()).filter(|&i| !roles[i].is_ai()).collect();
        let coop_count = roles
            .iter()
            .filter(|r| **r == AgentRole::Human(Strategy::Cooperate))
            .count();
        let mut state = Self {
            fitness: vec![0.0; roles.len()],
            roles,
            humans,
            coop_count,
            step_index: 0,
            rng,
        };
        state.fitness = state.recompute_fitness(cfg);
        Ok(state)
    }

    fn node_fitness(&self, cfg: &SimConfig, i: usize) -> f64 {
        cfg.graph
            .neighbors(i)
            .iter()
            .map(|&j| pairwise_payoff(self.roles[i], self.roles[j], &cfg.matrix))
            .sum()
    }

    /// Fitness of every node computed from scratch.
    pub fn recompute_fitness(&self, cfg: &SimConfig) -> Vec<f64> {
        (0..self.roles.len()).map(|i| self.node_fitness(cfg, i)).collect()
    }

    pub fn roles(&self) -> &[AgentRole] {
        &self.roles
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn human_count(&self) -> usize {
        self.humans.len()
    }

    pub fn ai_count(&self) -> usize {
        self.roles.len() - self.humans.len()
    }

    /// Number of human cooperators.
    pub fn coop_count(&self) -> usize {
        self.coop_count
    }

    pub fn coop_fraction(&self) -> f64 {
        self.coop_count as f64 / self.humans.len() as f64
    }

    pub fn mean_human_fitness(&self) -> f64 {
        self.humans.iter().map(|&i| self.fitness[i]).sum::<f64>() / self.humans.len() as f64
    }

    /// Indices and behaviors of the AI nodes, in index order.
    pub fn ai_nodes(&self) -> Vec<(usize, AiBehavior)> {
        self.roles
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                AgentRole::Ai(b) => Some((i, *b)),
                AgentRole::Human(_) => None,
            })
            .collect()
    }
}

/// What happened in one elementary step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub focal: usize,
    /// `None` when the focal human has no neighbors.
    pub role_model: Option<usize>,
    /// The focal human's action before the step.
    pub before: Strategy,
    pub switched: bool,
}

/// One asynchronous imitation event.
pub fn step(state: &mut SimState, cfg: &SimConfig) -> StepOutcome {
    let focal = state.humans[state.rng.gen_range(0..state.humans.len())];
    let AgentRole::Human(before) = state.roles[focal] else {
        unreachable!("learners are always human");
    };
    state.step_index += 1;
    let nbrs = cfg.graph.neighbors(focal);
    if nbrs.is_empty() {
        return StepOutcome {
            focal,
            role_model: None,
            before,
            switched: false,
        };
    }
    let model = nbrs[state.rng.gen_range(0..nbrs.len())];
    let candidate = match state.roles[model] {
        AgentRole::Human(s) => Some((s, cfg.beta_h)),
        AgentRole::Ai(AiBehavior::Samaritan) => Some((Strategy::Cooperate, cfg.beta_ai)),
        AgentRole::Ai(AiBehavior::Malicious) => Some((Strategy::Defect, cfg.beta_ai)),
        AgentRole::Ai(AiBehavior::Discriminatory) => None,
    };
    let mut switched = false;
    if let Some((target, beta)) = candidate {
        if target != before {
            let p = fermi_prob(state.fitness[focal], state.fitness[model], beta);
            if state.rng.gen::<f64>() < p {
                state.roles[focal] = AgentRole::Human(target);
                if target.is_cooperate() {
                    state.coop_count += 1;
                } else {
                    state.coop_count -= 1;
                }
                state.fitness[focal] = state.node_fitness(cfg, focal);
                for &j in nbrs {
                    state.fitness[j] = state.node_fitness(cfg, j);
                }
                switched = true;
            }
        }
    }
    StepOutcome {
        focal,
        role_model: Some(model),
        before,
        switched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub step: u64,
    pub coop_frac: f64,
    pub def_frac: f64,
    pub mean_fitness: f64,
    pub coop_count: usize,
    pub def_count: usize,
    pub ai_count: usize,
}

impl Sample {
    fn of(state: &SimState) -> Self {
        let coop = state.coop_count();
        let humans = state.human_count();
        Self {
            step: state.step_index(),
            coop_frac: coop as f64 / humans as f64,
            def_frac: (humans - coop) as f64 / humans as f64,
            mean_fitness: state.mean_human_fitness(),
            coop_count: coop,
            def_count: humans - coop,
            ai_count: state.ai_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub const CSV_HEADER: &'static str =
        "step,coop_frac,def_frac,mean_fitness,coop_count,def_count,ai_count";

    /// Fractions and mean fitness are over humans only; the raw counts let
    /// AI cooperators be added back in if wanted.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.samples.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.step, s.coop_frac, s.def_frac, s.mean_fitness, s.coop_count, s.def_count, s.ai_count
            )
            .expect("writing to a String");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    /// Human cooperation fraction averaged over the states after each of the
    /// final `sample_window` steps.
    pub mean_coop_fraction: f64,
    pub final_coop_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub series: TimeSeries,
    pub final_state: SimState,
    pub summary: RunSummary,
    /// `(step, grid)` pairs requested through [`run_with_snapshots`].
    pub snapshots: Vec<(u64, String)>,
}

pub fn run(cfg: &SimConfig) -> Result<RunResult> {
    run_with_snapshots(cfg, &[])
}

/// Runs `cfg.steps` steps and captures a lattice snapshot after each step
/// listed in `snapshot_steps` (0 means the initial state). Steps beyond the
/// run length are ignored.
pub fn run_with_snapshots(cfg: &SimConfig, snapshot_steps: &[u64]) -> Result<RunResult> {
    let mut state = SimState::initialize(cfg)?;
    let mut wanted: Vec<u64> = snapshot_steps
        .iter()
        .copied()
        .filter(|&s| s <= cfg.steps)
        .collect();
    wanted.sort_unstable();
    wanted.dedup();
    if !wanted.is_empty() && cfg.graph.lattice_dims().is_none() {
        return Err(invalid("snapshot_steps", "snapshots need a lattice graph"));
    }
    let mut wanted = wanted.into_iter().peekable();
    let mut snapshots = Vec::new();

    let mut series = TimeSeries::default();
    series.samples.push(Sample::of(&state));
    if wanted.next_if_eq(&0).is_some() {
        snapshots.push((0, snapshot(&state, &cfg.graph)?));
    }

    let window_start = cfg.steps - cfg.sample_window;
    let mut window_sum = 0u64;
    for t in 1..=cfg.steps {
        step(&mut state, cfg);
        if t > window_start {
            window_sum += state.coop_count() as u64;
        }
        if t % cfg.sample_interval == 0 || t == cfg.steps {
            series.samples.push(Sample::of(&state));
        }
        if wanted.next_if_eq(&t).is_some() {
            snapshots.push((t, snapshot(&state, &cfg.graph)?));
        }
    }

    let humans = state.human_count() as f64;
    let summary = RunSummary {
        seed: cfg.seed,
        mean_coop_fraction: window_sum as f64 / (cfg.sample_window as f64 * humans),
        final_coop_fraction: state.coop_fraction(),
    };
    Ok(RunResult {
        series,
        final_state: state,
        summary,
        snapshots,
    })
}

/// Row-major character grid of a lattice state: `C` for human cooperators,
/// `D` for human defectors and `A` for AI agents, one line per row.
pub fn snapshot(state: &SimState, graph: &Graph) -> Result<String> {
    let dims = graph
        .lattice_dims()
        .ok_or_else(|| Error::Domain("snapshots are only defined on lattices".into()))?;
    if dims.rows * dims.cols != state.roles.len() {
        return Err(invalid("snapshot", "state does not match the lattice size"));
    }
    let mut out = String::with_capacity(state.roles.len() + dims.rows);
    for row in state.roles.chunks(dims.cols) {
        for role in row {
            out.push(match role {
                AgentRole::Human(Strategy::Cooperate) => 'C',
                AgentRole::Human(Strategy::Defect) => 'D',
                AgentRole::Ai(_) => 'A',
            });
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    pub runs: usize,
    pub summaries: Vec<RunSummary>,
}

impl Aggregate {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        self.summaries.iter().map(|s| s.seed)
    }

    /// Mean and spread of the per-run window averages, in the given order.
    pub fn from_summaries(summaries: Vec<RunSummary>) -> Self {
        let n = summaries.len() as f64;
        let mean = summaries.iter().map(|s| s.mean_coop_fraction).sum::<f64>() / n;
        let std = if summaries.len() > 1 {
            let ss: f64 = summaries
                .iter()
                .map(|s| (s.mean_coop_fraction - mean).powi(2))
                .sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            runs: summaries.len(),
            summaries,
        }
    }
}

/// `runs` independent runs of `cfg`, run `i` seeded with
/// `derive_seed(base_seed, i)`. Runs execute on the current rayon pool; the
/// result does not depend on scheduling.
pub fn replicate(cfg: &SimConfig, runs: usize, base_seed: u64) -> Result<Aggregate> {
    replicate_over(cfg, std::slice::from_ref(&cfg.graph), runs, base_seed)
}

/// Like [`replicate`], with run `i` played on `graphs[i % graphs.len()]`.
pub fn replicate_over(
    cfg: &SimConfig,
    graphs: &[Arc<Graph>],
    runs: usize,
    base_seed: u64,
) -> Result<Aggregate> {
    if runs == 0 {
        return Err(invalid("runs", "must be at least 1"));
    }
    if graphs.is_empty() {
        return Err(invalid("graphs", "need at least one graph"));
    }
    let summaries = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.graph = Arc::clone(&graphs[i % graphs.len()]);
            c.seed = derive_seed(base_seed, i as u64);
            run(&c).map(|r| r.summary)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Aggregate::from_summaries(summaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Strategy;
    use proptest::prelude::*;

    fn donation() -> PayoffMatrix {
        PayoffMatrix::donation(2.0, 1.0).unwrap()
    }

    fn lattice_cfg(rows: usize, m: usize, ai: AiBehavior, beta: f64, steps: u64, seed: u64) -> SimConfig {
        let g = Arc::new(Graph::square_lattice(rows, rows, false).unwrap());
        SimConfig::new(g, m, ai, donation(), beta, steps, seed)
    }

    const C: AgentRole = AgentRole::Human(Strategy::Cooperate);
    const D: AgentRole = AgentRole::Human(Strategy::Defect);

    #[test]
    fn pairwise_examples() {
        let m = PayoffMatrix::new(3.0, 0.0, 5.0, 1.0).unwrap();
        assert_eq!(pairwise_payoff(C, AgentRole::Ai(AiBehavior::Samaritan), &m), 3.0);
        assert_eq!(pairwise_payoff(D, AgentRole::Ai(AiBehavior::Discriminatory), &m), 1.0);
        assert_eq!(pairwise_payoff(C, AgentRole::Ai(AiBehavior::Discriminatory), &m), 3.0);
        assert_eq!(pairwise_payoff(D, C, &m), 5.0);
        assert_eq!(pairwise_payoff(C, AgentRole::Ai(AiBehavior::Malicious), &m), 0.0);
        let ir = AgentRole::Ai(AiBehavior::Discriminatory);
        assert_eq!(pairwise_payoff(ir, ir, &m), 3.0);
        assert_eq!(pairwise_payoff(ir, AgentRole::Ai(AiBehavior::Malicious), &m), 1.0);
        assert_eq!(pairwise_payoff(AgentRole::Ai(AiBehavior::Samaritan), ir, &m), 3.0);
    }

    #[test]
    fn initialization() {
        let cfg = lattice_cfg(50, 250, AiBehavior::Samaritan, 0.1, 10, 1);
        let s = SimState::initialize(&cfg).unwrap();
        assert_eq!(s.ai_count(), 250);
        assert_eq!(s.human_count(), 2250);
        let frac = s.coop_fraction();
        assert!((frac - 0.5).abs() < 0.05, "{frac}");

        let cfg = lattice_cfg(3, 8, AiBehavior::Samaritan, 0.1, 10, 1);
        assert_eq!(SimState::initialize(&cfg).unwrap().human_count(), 1);
        let cfg = lattice_cfg(3, 9, AiBehavior::Samaritan, 0.1, 10, 1);
        assert!(SimState::initialize(&cfg).is_err());
    }

    #[test]
    fn hub_biased_placement_takes_hubs() {
        let g = Arc::new(Graph::barabasi_albert(300, 2, 5).unwrap());
        let mut cfg = SimConfig::new(g.clone(), 10, AiBehavior::Samaritan, donation(), 0.1, 10, 0);
        cfg.ai_placement = AiPlacement::HubBiased;
        let s = SimState::initialize(&cfg).unwrap();
        let min_ai_degree = s.ai_nodes().iter().map(|&(i, _)| g.degree(i)).min().unwrap();
        let max_human_degree = (0..300)
            .filter(|&i| !s.roles()[i].is_ai())
            .map(|i| g.degree(i))
            .max()
            .unwrap();
        assert!(min_ai_degree >= max_human_degree);
    }

    #[test]
    fn snapshot_examples() {
        let g = Arc::new(Graph::square_lattice(2, 2, false).unwrap());
        let cfg = SimConfig::new(g.clone(), 0, AiBehavior::Samaritan, donation(), 0.1, 10, 0);
        let s = SimState::with_roles(&cfg, vec![C; 4]).unwrap();
        assert_eq!(snapshot(&s, &g).unwrap(), "CC\nCC\n");
        let s = SimState::with_roles(&cfg, vec![AgentRole::Ai(AiBehavior::Samaritan), D, D, D]).unwrap();
        assert_eq!(snapshot(&s, &g).unwrap(), "AD\nDD\n");

        let k = Graph::complete(4).unwrap();
        assert!(snapshot(&s, &k).is_err());
    }

    #[test]
    fn discriminatory_neighbors_freeze_learner() {
        // Star: node 0 is the only human, all its neighbors mirror it.
        let edges: Vec<(usize, usize)> = (1..6).map(|j| (0, j)).collect();
        let g = Arc::new(Graph::from_edges(6, &edges).unwrap());
        let cfg = SimConfig::new(g, 5, AiBehavior::Discriminatory, donation(), 5.0, 1000, 3);
        let mut roles = vec![AgentRole::Ai(AiBehavior::Discriminatory); 6];
        roles[0] = D;
        let mut s = SimState::with_roles(&cfg, roles).unwrap();
        for _ in 0..1000 {
            assert!(!step(&mut s, &cfg).switched);
        }
        assert_eq!(s.roles()[0], D);
    }

    #[test]
    fn neutral_flip_probability_is_half() {
        let g = Arc::new(Graph::complete(2).unwrap());
        let cfg = SimConfig::new(g, 0, AiBehavior::Samaritan, donation(), 0.0, 1, 0);
        let trials = 20_000;
        let mut flips = 0;
        for i in 0..trials {
            let mut c = cfg.clone();
            c.seed = i;
            let mut s = SimState::with_roles(&c, vec![C, D]).unwrap();
            flips += usize::from(step(&mut s, &c).switched);
        }
        let p = flips as f64 / trials as f64;
        // Binomial standard error at p = 0.5 is about 0.0035.
        assert!((p - 0.5).abs() < 0.015, "{p}");
    }

    #[test]
    fn samaritan_rescues_all_defectors() {
        let g = Arc::new(Graph::complete(5).unwrap());
        let cfg = SimConfig::new(g, 1, AiBehavior::Samaritan, donation(), 0.0, 2000, 8);
        let mut roles = vec![D; 5];
        roles[4] = AgentRole::Ai(AiBehavior::Samaritan);
        let mut s = SimState::with_roles(&cfg, roles).unwrap();
        let mut escaped = false;
        for _ in 0..2000 {
            step(&mut s, &cfg);
            escaped |= s.coop_count() > 0;
        }
        assert!(escaped);
    }

    #[test]
    fn all_cooperators_start_at_one() {
        let mut cfg = lattice_cfg(5, 0, AiBehavior::Samaritan, 0.0, 500, 2);
        cfg.initial_cooperation = 1.0;
        let r = run(&cfg).unwrap();
        assert_eq!(r.series.samples[0].coop_frac, 1.0);
        assert_eq!(r.series.samples[0].step, 0);
    }

    #[test]
    fn strong_selection_kills_cooperation_when_well_mixed() {
        let g = Arc::new(Graph::complete(20).unwrap());
        let cfg = SimConfig::new(g, 0, AiBehavior::Samaritan, donation(), 10.0, 5000, 4);
        let r = run(&cfg).unwrap();
        assert_eq!(r.summary.final_coop_fraction, 0.0);
    }

    #[test]
    fn series_layout() {
        let mut cfg = lattice_cfg(4, 2, AiBehavior::Malicious, 1.0, 250, 9);
        cfg.sample_window = 50;
        let r = run(&cfg).unwrap();
        let steps: Vec<u64> = r.series.samples.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 100, 200, 250]);
        let csv = r.series.to_csv();
        assert!(csv.starts_with("step,coop_frac,def_frac,mean_fitness"));
        assert_eq!(csv.lines().count(), 5);
        for s in &r.series.samples {
            assert_eq!(s.coop_frac + s.def_frac, 1.0);
            assert_eq!(s.ai_count, 2);
        }
    }

    #[test]
    fn snapshots_at_requested_steps() {
        let cfg = lattice_cfg(5, 3, AiBehavior::Samaritan, 0.1, 300, 5);
        let r = run_with_snapshots(&cfg, &[300, 0, 100, 5000]).unwrap();
        let at: Vec<u64> = r.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(at, vec![0, 100, 300]);
        assert_eq!(r.snapshots[2].1, snapshot(&r.final_state, &cfg.graph).unwrap());
        assert!(r.snapshots.iter().all(|(_, g)| g.matches('A').count() == 3));
    }

    #[test]
    fn single_replica_has_zero_spread() {
        let cfg = lattice_cfg(5, 2, AiBehavior::Samaritan, 0.1, 200, 0);
        let agg = replicate(&cfg, 1, 77).unwrap();
        assert_eq!(agg.std, 0.0);
        assert_eq!(agg.runs, 1);
        let mut single = cfg.clone();
        single.seed = derive_seed(77, 0);
        assert_eq!(agg.mean, run(&single).unwrap().summary.mean_coop_fraction);
    }

    #[test]
    fn replication_is_deterministic() {
        let cfg = lattice_cfg(6, 4, AiBehavior::Samaritan, 0.5, 500, 0);
        let a = replicate(&cfg, 8, 3).unwrap();
        let b = replicate(&cfg, 8, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seeds().count(), 8);
    }

    #[test]
    fn replicate_over_cycles_graphs() {
        let graphs: Vec<Arc<Graph>> = (0..3)
            .map(|s| Arc::new(Graph::barabasi_albert(60, 2, s).unwrap()))
            .collect();
        let cfg = SimConfig::new(graphs[0].clone(), 6, AiBehavior::Samaritan, donation(), 0.1, 200, 0);
        let agg = replicate_over(&cfg, &graphs, 6, 1).unwrap();
        for (i, s) in agg.summaries.iter().enumerate() {
            let mut c = cfg.clone();
            c.graph = graphs[i % 3].clone();
            c.seed = derive_seed(1, i as u64);
            assert_eq!(*s, run(&c).unwrap().summary);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = lattice_cfg(3, 0, AiBehavior::Samaritan, 0.1, 10, 0);
        cfg.sample_window = 11;
        assert!(cfg.validate().is_err());
        cfg.sample_window = 10;
        cfg.beta_ai = f64::NAN;
        assert!(cfg.validate().is_err());
        cfg.beta_ai = 1.0;
        cfg.steps = 0;
        assert!(cfg.validate().is_err());
    }

    fn any_behavior() -> impl proptest::strategy::Strategy<Value = AiBehavior> {
        prop_oneof![
            Just(AiBehavior::Samaritan),
            Just(AiBehavior::Malicious),
            Just(AiBehavior::Discriminatory),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn invariants_hold_along_a_run(
            seed in any::<u64>(),
            ai in any_behavior(),
            m in 0usize..12,
            beta_h in 0.0f64..5.0,
            beta_ai in 0.0f64..5.0,
            use_ba in any::<bool>(),
            r in 0.5f64..3.0, s in -2.0f64..0.0, t in 3.0f64..5.0, p in 0.0f64..0.4,
        ) {
            let g = if use_ba {
                Graph::barabasi_albert(40, 2, seed).unwrap()
            } else {
                Graph::square_lattice(6, 6, seed % 2 == 0).unwrap()
            };
            let matrix = PayoffMatrix::new(r, s, t, p).unwrap();
            let mut cfg = SimConfig::new(Arc::new(g), m, ai, matrix, beta_h, 400, seed);
            cfg.beta_ai = beta_ai;
            let mut state = SimState::initialize(&cfg).unwrap();
            let ai_before = state.ai_nodes();
            let humans = state.human_count();
            for _ in 0..400 {
                step(&mut state, &cfg);
                let fresh = state.recompute_fitness(&cfg);
                for (a, b) in fresh.iter().zip(state.fitness()) {
                    prop_assert!((a - b).abs() <= 1e-9);
                }
                let coop = state.roles().iter().filter(|r| **r == C).count();
                prop_assert_eq!(coop, state.coop_count());
            }
            prop_assert_eq!(state.ai_nodes(), ai_before);
            prop_assert_eq!(state.human_count(), humans);
            prop_assert_eq!(state.step_index(), 400);
        }

        #[test]
        fn runs_are_reproducible(seed in any::<u64>(), m in 0usize..10) {
            let cfg = lattice_cfg(5, m, AiBehavior::Samaritan, 1.0, 300, seed);
            let a = run_with_snapshots(&cfg, &[0, 300]).unwrap();
            let b = run_with_snapshots(&cfg, &[0, 300]).unwrap();
            prop_assert_eq!(a.series.to_csv(), b.series.to_csv());
            prop_assert_eq!(a.snapshots, b.snapshots);
            prop_assert_eq!(a.summary, b.summary);
        }
    }
}
