//! Experiment files: flat `key = value` lines, `#` starts a comment.
//! Repeating a key, or giving a comma-separated value, builds a list.
//!
//! ```text
//! mode = finite
//! N = 100
//! beta = 0.1, 1, 5
//! ai = samaritan
//! ai = discriminatory
//! ```

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use coopdyn::{AiBehavior, DonationParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Finite,
    Replicator,
    Abm,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Finite => "finite",
            Mode::Replicator => "replicator",
            Mode::Abm => "abm",
        }
    }
}

/// Key/value pairs as read, consumed key by key while building a spec so
/// that leftovers can be reported as unknown.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Vec<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", i + 1))?;
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: missing key before `=`", i + 1);
            }
            let items: Vec<String> = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            if items.is_empty() {
                bail!("line {}: key `{key}` has no value", i + 1);
            }
            entries.entry(key.to_string()).or_default().extend(items);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    fn list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(raw) = self.entries.remove(key) else {
            return Ok(None);
        };
        raw.iter()
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("key `{key}`: cannot parse `{v}`: {e}")))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn one<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.list(key)? {
            None => Ok(None),
            Some(mut v) if v.len() == 1 => Ok(v.pop()),
            Some(v) => bail!("key `{key}` takes a single value, got {}", v.len()),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(key) => bail!("unknown key `{key}`"),
            None => Ok(()),
        }
    }
}

fn default_b_grid() -> Vec<f64> {
    let mut b = vec![1.1];
    b.extend((3..=20).map(|i| i as f64 * 0.5));
    b
}

fn default_m_grid() -> Vec<usize> {
    (0..=100).step_by(5).collect()
}

#[derive(Debug, Clone)]
pub struct FiniteSpec {
    pub n: usize,
    pub m: Vec<usize>,
    pub b: Vec<f64>,
    pub c: f64,
    pub beta: Vec<f64>,
    pub beta_ai: Option<f64>,
    pub ai: Vec<AiBehavior>,
}

#[derive(Debug, Clone)]
pub struct ReplicatorSpec {
    pub alpha: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub beta: Vec<f64>,
    pub beta_ai: Option<f64>,
    pub ai: Vec<AiBehavior>,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub curve_points: usize,
    pub trajectory_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Lattice { rows: usize, cols: usize, periodic: bool },
    ScaleFree { nodes: usize, links: usize, networks: usize },
    Complete { nodes: usize },
}

impl Topology {
    pub fn node_count(self) -> usize {
        match self {
            Topology::Lattice { rows, cols, .. } => rows * cols,
            Topology::ScaleFree { nodes, .. } | Topology::Complete { nodes } => nodes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbmSpec {
    pub topology: Topology,
    pub ai_fraction: Vec<f64>,
    pub ai: Vec<AiBehavior>,
    pub placement: coopdyn::abm::AiPlacement,
    pub b: Vec<f64>,
    pub c: f64,
    pub beta: Vec<f64>,
    pub beta_ai: Option<f64>,
    pub steps: u64,
    pub runs: usize,
    pub sample_window: u64,
    pub sample_interval: u64,
    pub snapshot_steps: Vec<u64>,
}

#[derive(Debug, Clone)]
pub enum ExperimentSpec {
    Finite(FiniteSpec),
    Replicator(ReplicatorSpec),
    Abm(AbmSpec),
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub spec: ExperimentSpec,
}

fn check_benefits(b: &[f64], c: f64) -> Result<()> {
    for &bi in b {
        DonationParams::new(bi, c).map_err(|e| anyhow!("key `b`: {e}"))?;
    }
    Ok(())
}

fn check_betas(key: &str, betas: &[f64]) -> Result<()> {
    for &beta in betas {
        if !(beta.is_finite() && beta >= 0.0) {
            bail!("key `{key}`: selection intensity must be finite and >= 0, got {beta}");
        }
    }
    Ok(())
}

fn non_empty<T>(key: &str, v: Vec<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        bail!("key `{key}`: grid must not be empty");
    }
    Ok(v)
}

struct Common {
    b: Vec<f64>,
    c: f64,
    beta: Vec<f64>,
    beta_ai: Option<f64>,
    ai: Vec<AiBehavior>,
}

fn common(raw: &mut RawConfig, b: Vec<f64>, beta: Vec<f64>, ai: Vec<AiBehavior>) -> Result<Common> {
    let b = non_empty("b", raw.list("b")?.unwrap_or(b))?;
    let c = raw.one("c")?.unwrap_or(1.0);
    check_benefits(&b, c)?;
    let beta = non_empty("beta", raw.list("beta")?.unwrap_or(beta))?;
    check_betas("beta", &beta)?;
    let beta_ai: Option<f64> = raw.one("beta_ai")?;
    if let Some(x) = beta_ai {
        check_betas("beta_ai", &[x])?;
    }
    let ai = non_empty("ai", raw.list("ai")?.unwrap_or(ai))?;
    Ok(Common {
        b,
        c,
        beta,
        beta_ai,
        ai,
    })
}

/// Resolves a parsed file into an experiment for `mode`, filling defaults.
/// `seed_override` (from the command line) wins over the file's `seed`.
pub fn resolve(mut raw: RawConfig, mode: Mode, seed_override: Option<u64>) -> Result<Experiment> {
    if let Some(file_mode) = raw.one::<String>("mode")? {
        if file_mode != mode.name() {
            bail!(
                "key `mode`: file is for `{file_mode}` but `{}` was requested",
                mode.name()
            );
        }
    }
    let file_seed: Option<u64> = raw.one("seed")?;
    let seed = seed_override.or(file_seed).unwrap_or(0);
    let both = vec![AiBehavior::Samaritan, AiBehavior::Discriminatory];

    let spec = match mode {
        Mode::Finite => {
            let n: usize = raw.one("N")?.unwrap_or(100);
            if n < 2 {
                bail!("key `N`: population needs at least 2 humans, got {n}");
            }
            let m = non_empty("M", raw.list("M")?.unwrap_or_else(default_m_grid))?;
            let c = common(&mut raw, default_b_grid(), vec![0.1, 1.0, 5.0], both)?;
            ExperimentSpec::Finite(FiniteSpec {
                n,
                m,
                b: c.b,
                c: c.c,
                beta: c.beta,
                beta_ai: c.beta_ai,
                ai: c.ai,
            })
        }
        Mode::Replicator => {
            let alpha = non_empty("alpha", raw.list("alpha")?.unwrap_or(vec![0.1, 0.5]))?;
            if let Some(a) = alpha.iter().find(|a| !(0.0..1.0).contains(*a)) {
                bail!("key `alpha`: AI fraction must lie in [0, 1), got {a}");
            }
            let c = common(&mut raw, default_b_grid(), vec![0.1, 1.0, 5.0], both)?;
            if c.ai.contains(&AiBehavior::Malicious) {
                bail!("key `ai`: replicator dynamics are not defined for malicious AI");
            }
            let x0: Vec<f64> = raw.list("x0")?.unwrap_or_default();
            if let Some(x) = x0.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                bail!("key `x0`: starting point must lie in [0, 1], got {x}");
            }
            let t_end = raw.one("t_end")?.unwrap_or(coopdyn::replicator::DEFAULT_T_END);
            let dt = raw.one("dt")?.unwrap_or(coopdyn::replicator::DEFAULT_DT);
            if !(t_end >= 0.0 && t_end.is_finite()) {
                bail!("key `t_end`: must be finite and >= 0");
            }
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("key `dt`: must be positive");
            }
            let curve_points = raw.one("curve_points")?.unwrap_or(1001);
            let trajectory_points = raw.one("trajectory_points")?.unwrap_or(1001);
            if curve_points < 2 {
                bail!("key `curve_points`: need at least 2");
            }
            if trajectory_points < 2 {
                bail!("key `trajectory_points`: need at least 2");
            }
            ExperimentSpec::Replicator(ReplicatorSpec {
                alpha,
                b: c.b,
                c: c.c,
                beta: c.beta,
                beta_ai: c.beta_ai,
                ai: c.ai,
                x0,
                t_end,
                dt,
                curve_points,
                trajectory_points,
            })
        }
        Mode::Abm => resolve_abm(&mut raw)?,
    };
    raw.finish()?;
    Ok(Experiment { seed, spec })
}

fn resolve_abm(raw: &mut RawConfig) -> Result<ExperimentSpec> {
    let topology_name: String = raw.one("topology")?.unwrap_or_else(|| "lattice".into());
    let topology = match topology_name.as_str() {
        "lattice" => {
            let rows = raw.one("rows")?.unwrap_or(50);
            let cols = raw.one("cols")?.unwrap_or(rows);
            let periodic = raw.one("periodic")?.unwrap_or(false);
            let min = if periodic { 3 } else { 2 };
            if rows < min || cols < min {
                bail!("keys `rows`/`cols`: lattice must be at least {min}x{min}, got {rows}x{cols}");
            }
            Topology::Lattice {
                rows,
                cols,
                periodic,
            }
        }
        "ba" | "scale_free" => {
            let nodes = raw.one("nodes")?.unwrap_or(1000);
            let links = raw.one("links")?.unwrap_or(2);
            let networks = raw.one("networks")?.unwrap_or(10);
            if links < 1 || nodes <= links {
                bail!("keys `nodes`/`links`: need links >= 1 and nodes > links");
            }
            if networks < 1 {
                bail!("key `networks`: need at least one network");
            }
            Topology::ScaleFree {
                nodes,
                links,
                networks,
            }
        }
        "complete" => {
            let nodes = raw.one("nodes")?.unwrap_or(100);
            if nodes < 2 {
                bail!("key `nodes`: complete graph needs at least 2 nodes");
            }
            Topology::Complete { nodes }
        }
        other => bail!("key `topology`: expected lattice, ba or complete, got `{other}`"),
    };
    let ai_fraction = non_empty(
        "ai_fraction",
        raw.list("ai_fraction")?
            .unwrap_or(vec![0.0, 0.1, 0.2, 0.3, 0.4]),
    )?;
    for &f in &ai_fraction {
        let m = ai_count(f, topology.node_count());
        if !(0.0..1.0).contains(&f) || m >= topology.node_count() {
            bail!("key `ai_fraction`: {f} leaves no human on {} nodes", topology.node_count());
        }
    }
    let placement = match raw.one::<String>("placement")?.as_deref() {
        None | Some("uniform") => coopdyn::abm::AiPlacement::Uniform,
        Some("hub") | Some("hub_biased") => coopdyn::abm::AiPlacement::HubBiased,
        Some(other) => bail!("key `placement`: expected uniform or hub, got `{other}`"),
    };
    let c = common(raw, vec![2.0], vec![0.1], vec![AiBehavior::Samaritan])?;
    let steps: u64 = raw.one("steps")?.unwrap_or(100_000);
    if steps == 0 {
        bail!("key `steps`: must be positive");
    }
    let runs = raw.one("runs")?.unwrap_or(30);
    if runs == 0 {
        bail!("key `runs`: must be at least 1");
    }
    let sample_window = raw.one("sample_window")?.unwrap_or(1000.min(steps));
    if sample_window == 0 || sample_window > steps {
        bail!("key `sample_window`: must lie in 1..={steps}, got {sample_window}");
    }
    let sample_interval = raw.one("sample_interval")?.unwrap_or(100);
    if sample_interval == 0 {
        bail!("key `sample_interval`: must be positive");
    }
    let snapshot_steps = raw.list("snapshot_steps")?;
    let snapshot_steps = match (topology, snapshot_steps) {
        (Topology::Lattice { .. }, None) => {
            let mut v: Vec<u64> = vec![0, 5000, 10_000, steps];
            v.retain(|&s| s <= steps);
            v.sort_unstable();
            v.dedup();
            v
        }
        (_, None) => Vec::new(),
        (Topology::Lattice { .. }, Some(v)) => v,
        (_, Some(_)) => bail!("key `snapshot_steps`: snapshots need topology = lattice"),
    };
    Ok(ExperimentSpec::Abm(AbmSpec {
        topology,
        ai_fraction,
        ai: c.ai,
        placement,
        b: c.b,
        c: c.c,
        beta: c.beta,
        beta_ai: c.beta_ai,
        steps,
        runs,
        sample_window,
        sample_interval,
        snapshot_steps,
    }))
}

/// Number of AI nodes for a fraction of `nodes`, rounded to nearest.
pub fn ai_count(fraction: f64, nodes: usize) -> usize {
    (fraction * nodes as f64).round() as usize
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl Experiment {
    pub fn mode(&self) -> Mode {
        match self.spec {
            ExperimentSpec::Finite(_) => Mode::Finite,
            ExperimentSpec::Replicator(_) => Mode::Replicator,
            ExperimentSpec::Abm(_) => Mode::Abm,
        }
    }

    /// Every resolved setting as `key=value`, in a stable order. Feeding
    /// these lines back as a config file reproduces the experiment.
    pub fn resolved(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("mode".to_string(), self.mode().name().to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let beta_ai = |b: Option<f64>| b.map(|x| x.to_string());
        match &self.spec {
            ExperimentSpec::Finite(s) => {
                push("N", s.n.to_string());
                push("M", join(&s.m));
                push("b", join(&s.b));
                push("c", s.c.to_string());
                push("beta", join(&s.beta));
                if let Some(x) = beta_ai(s.beta_ai) {
                    push("beta_ai", x);
                }
                push("ai", join(&s.ai));
            }
            ExperimentSpec::Replicator(s) => {
                push("alpha", join(&s.alpha));
                push("b", join(&s.b));
                push("c", s.c.to_string());
                push("beta", join(&s.beta));
                if let Some(x) = beta_ai(s.beta_ai) {
                    push("beta_ai", x);
                }
                push("ai", join(&s.ai));
                if !s.x0.is_empty() {
                    push("x0", join(&s.x0));
                }
                push("t_end", s.t_end.to_string());
                push("dt", s.dt.to_string());
                push("curve_points", s.curve_points.to_string());
                push("trajectory_points", s.trajectory_points.to_string());
            }
            ExperimentSpec::Abm(s) => {
                match s.topology {
                    Topology::Lattice {
                        rows,
                        cols,
                        periodic,
                    } => {
                        push("topology", "lattice".into());
                        push("rows", rows.to_string());
                        push("cols", cols.to_string());
                        push("periodic", periodic.to_string());
                    }
                    Topology::ScaleFree {
                        nodes,
                        links,
                        networks,
                    } => {
                        push("topology", "ba".into());
                        push("nodes", nodes.to_string());
                        push("links", links.to_string());
                        push("networks", networks.to_string());
                    }
                    Topology::Complete { nodes } => {
                        push("topology", "complete".into());
                        push("nodes", nodes.to_string());
                    }
                }
                push("ai_fraction", join(&s.ai_fraction));
                push("ai", join(&s.ai));
                let placement = match s.placement {
                    coopdyn::abm::AiPlacement::Uniform => "uniform",
                    coopdyn::abm::AiPlacement::HubBiased => "hub",
                };
                push("placement", placement.into());
                push("b", join(&s.b));
                push("c", s.c.to_string());
                push("beta", join(&s.beta));
                if let Some(x) = beta_ai(s.beta_ai) {
                    push("beta_ai", x);
                }
                push("steps", s.steps.to_string());
                push("runs", s.runs.to_string());
                push("sample_window", s.sample_window.to_string());
                push("sample_interval", s.sample_interval.to_string());
                if !s.snapshot_steps.is_empty() {
                    push("snapshot_steps", join(&s.snapshot_steps));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str, mode: Mode) -> Result<Experiment> {
        resolve(RawConfig::parse(text)?, mode, None)
    }

    #[test]
    fn minimal_finite_gets_default_grids() {
        let e = resolve_text("mode=finite\nN=100\nbeta=0.1,1,5\n", Mode::Finite).unwrap();
        let ExperimentSpec::Finite(s) = e.spec else { panic!() };
        assert_eq!(s.m.len(), 21);
        assert_eq!(s.b.first(), Some(&1.1));
        assert_eq!(s.b.last(), Some(&10.0));
        assert_eq!(s.b.len(), 19);
        assert_eq!(s.beta, vec![0.1, 1.0, 5.0]);
        assert_eq!(s.ai, vec![AiBehavior::Samaritan, AiBehavior::Discriminatory]);
        assert_eq!(e.seed, 0);
    }

    #[test]
    fn repeated_keys_and_comments() {
        let text = "# sweep\nbeta = 0.1 # weak\nbeta = 5\nai = ir\nai = c\n";
        let e = resolve_text(text, Mode::Finite).unwrap();
        let ExperimentSpec::Finite(s) = e.spec else { panic!() };
        assert_eq!(s.beta, vec![0.1, 5.0]);
        assert_eq!(s.ai, vec![AiBehavior::Discriminatory, AiBehavior::Samaritan]);
    }

    #[test]
    fn diagnostics_name_the_key() {
        let err = |t: &str, m| resolve_text(t, m).unwrap_err().to_string();
        assert!(err("b = 0.5\n", Mode::Finite).contains("donation game requires b > c"));
        assert!(err("b = 0.5\n", Mode::Finite).contains("`b`"));
        assert!(err("bogus = 1\n", Mode::Finite).contains("unknown key `bogus`"));
        assert!(err("N = many\n", Mode::Finite).contains("`N`"));
        assert!(err("mode = abm\n", Mode::Finite).contains("`mode`"));
        assert!(err("steps = 10\n", Mode::Finite).contains("unknown key `steps`"));
        assert!(err("ai = malicious\n", Mode::Replicator).contains("`ai`"));
        assert!(err("alpha = 1\n", Mode::Replicator).contains("`alpha`"));
        assert!(err("steps = 10\nsample_window = 20\n", Mode::Abm).contains("`sample_window`"));
        assert!(err("topology = ba\nsnapshot_steps = 0\n", Mode::Abm).contains("`snapshot_steps`"));
        assert!(err("c = 1\nc = 2\n", Mode::Finite).contains("single value"));
        assert!(RawConfig::parse("just words\n").is_err());
        assert!(RawConfig::parse("key =\n").is_err());
    }

    #[test]
    fn seed_override_wins() {
        let e = resolve(RawConfig::parse("seed = 4\n").unwrap(), Mode::Abm, Some(9)).unwrap();
        assert_eq!(e.seed, 9);
        let e = resolve(RawConfig::parse("seed = 4\n").unwrap(), Mode::Abm, None).unwrap();
        assert_eq!(e.seed, 4);
    }

    #[test]
    fn abm_defaults_follow_the_lattice_campaign() {
        let e = resolve_text("", Mode::Abm).unwrap();
        let ExperimentSpec::Abm(s) = &e.spec else { panic!() };
        assert_eq!(s.topology.node_count(), 2500);
        assert_eq!(s.snapshot_steps, vec![0, 5000, 10_000, 100_000]);
        assert_eq!(s.runs, 30);
        assert_eq!(s.ai_fraction.len(), 5);
    }

    #[test]
    fn resolved_settings_round_trip() {
        let text = "topology = ba\nnodes = 50\nai_fraction = 0.1\nsteps = 200\nruns = 3\nbeta_ai = 2\n";
        let e = resolve_text(text, Mode::Abm).unwrap();
        let lines: String = e
            .resolved()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        let again = resolve_text(&lines, Mode::Abm).unwrap();
        assert_eq!(again.resolved(), e.resolved());
    }
}
