//! The three experiment drivers. Grid cells run on the current rayon pool;
//! each output file is assembled by exactly one cell, and files shared by all
//! cells are written once at the end, in grid order.

use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use coopdyn::abm::{self, Aggregate, RunResult, SimConfig};
use coopdyn::finite::WellMixedConfig;
use coopdyn::network::Graph;
use coopdyn::replicator::{critical_alpha, ReplicatorConfig};
use coopdyn::rng::derive_seed;
use coopdyn::{AiBehavior, PayoffMatrix};
use rayon::prelude::*;

use crate::config::{ai_count, AbmSpec, Experiment, ExperimentSpec, FiniteSpec, ReplicatorSpec, Topology};
use crate::output::{Manifest, OutputDir, MANIFEST};

/// Runs the experiment, writing the manifest before any result. Returns the
/// list of files written.
pub fn run(experiment: &Experiment, dir: &OutputDir) -> Result<Vec<String>> {
    match &experiment.spec {
        ExperimentSpec::Finite(s) => run_finite(experiment, s, dir),
        ExperimentSpec::Replicator(s) => run_replicator(experiment, s, dir),
        ExperimentSpec::Abm(s) => run_abm(experiment, experiment.seed, s, dir),
    }
}

fn donation(b: f64, c: f64) -> Result<PayoffMatrix> {
    PayoffMatrix::donation(b, c).map_err(Into::into)
}

/// First error in grid order, labelled with its cell.
fn first_failure<T>(results: Vec<(String, Result<T>)>) -> Result<Vec<T>> {
    results
        .into_iter()
        .map(|(cell, r)| r.with_context(|| format!("grid cell {cell} failed")))
        .collect()
}

fn run_finite(experiment: &Experiment, s: &FiniteSpec, dir: &OutputDir) -> Result<Vec<String>> {
    let cells: Vec<(AiBehavior, f64)> = s
        .ai
        .iter()
        .flat_map(|&ai| s.beta.iter().map(move |&beta| (ai, beta)))
        .collect();
    let name = |ai: AiBehavior, beta: f64| format!("finite_{ai}_beta{beta}.csv");
    let outputs: Vec<String> = cells.iter().map(|&(ai, beta)| name(ai, beta)).collect();
    write_manifest(experiment, dir, Vec::new(), &outputs)?;

    let results: Vec<(String, Result<String>)> = cells
        .par_iter()
        .map(|&(ai, beta)| {
            let mut csv = String::from("M,b,coop_frequency\n");
            let body = (|| {
                for &m in &s.m {
                    for &b in &s.b {
                        let mut cfg = WellMixedConfig::new(s.n, m, beta, ai, donation(b, s.c)?)
                            .with_context(|| format!("M={m}, b={b}"))?;
                        if let Some(beta_ai) = s.beta_ai {
                            cfg = cfg.with_ai_beta(beta_ai)?;
                        }
                        writeln!(csv, "{m},{b},{}", cfg.cooperation_frequency())?;
                    }
                }
                Ok(csv)
            })();
            (format!("ai={ai}, beta={beta}"), body)
        })
        .collect();
    let tables = first_failure(results)?;
    for (file, csv) in outputs.iter().zip(tables) {
        dir.write(file, &csv)?;
    }
    Ok(outputs)
}

struct ReplicatorCell {
    fixed_rows: String,
    curve: String,
    trajectory: Option<String>,
}

fn run_replicator(
    experiment: &Experiment,
    s: &ReplicatorSpec,
    dir: &OutputDir,
) -> Result<Vec<String>> {
    let mut cells = Vec::new();
    for &ai in &s.ai {
        for &alpha in &s.alpha {
            for &beta in &s.beta {
                cells.push((ai, alpha, beta));
            }
        }
    }
    let stem = |(ai, alpha, beta): (AiBehavior, f64, f64)| format!("{ai}_alpha{alpha}_beta{beta}");
    let mut outputs = vec!["fixed_points.csv".to_string()];
    for &cell in &cells {
        outputs.push(format!("curve_{}.csv", stem(cell)));
        if !s.x0.is_empty() {
            outputs.push(format!("trajectory_{}.csv", stem(cell)));
        }
    }
    write_manifest(experiment, dir, Vec::new(), &outputs)?;

    let results: Vec<(String, Result<ReplicatorCell>)> = cells
        .par_iter()
        .map(|&(ai, alpha, beta)| {
            let label = format!("ai={ai}, alpha={alpha}, beta={beta}");
            (label, replicator_cell(s, ai, alpha, beta))
        })
        .collect();
    let cells_out = first_failure(results)?;

    let mut table = String::from("ai,alpha,beta,beta_ai,b,critical_alpha,x,stability\n");
    for (cell, out) in cells.iter().zip(&cells_out) {
        table.push_str(&out.fixed_rows);
        dir.write(&format!("curve_{}.csv", stem(*cell)), &out.curve)?;
        if let Some(t) = &out.trajectory {
            dir.write(&format!("trajectory_{}.csv", stem(*cell)), t)?;
        }
    }
    dir.write("fixed_points.csv", &table)?;
    Ok(outputs)
}

fn replicator_cell(s: &ReplicatorSpec, ai: AiBehavior, alpha: f64, beta: f64) -> Result<ReplicatorCell> {
    let beta_ai = s.beta_ai.unwrap_or(beta);
    let mut fixed_rows = String::new();
    let mut curve = String::from("b,x,rhs\n");
    let mut trajectory = (!s.x0.is_empty()).then(|| String::from("b,x0,t,x\n"));
    for &b in &s.b {
        let matrix = donation(b, s.c)?;
        let cfg = ReplicatorConfig::new(alpha, beta, ai, matrix)
            .and_then(|c| c.with_ai_beta(beta_ai))
            .with_context(|| format!("b={b}"))?;
        let ac = match ai {
            AiBehavior::Samaritan => critical_alpha(beta, beta_ai, &matrix)?.to_string(),
            _ => String::new(),
        };
        for fp in cfg.find_fixed_points() {
            writeln!(
                fixed_rows,
                "{ai},{alpha},{beta},{beta_ai},{b},{ac},{},{}",
                fp.x,
                fp.stability.name()
            )?;
        }
        for (x, v) in cfg.sample_rhs(s.curve_points) {
            writeln!(curve, "{b},{x},{v}")?;
        }
        if let Some(out) = trajectory.as_mut() {
            for &x0 in &s.x0 {
                let traj = cfg
                    .integrate(x0, s.t_end, s.dt)
                    .with_context(|| format!("b={b}, x0={x0}"))?;
                for (t, x) in thin(&traj.points, s.trajectory_points) {
                    writeln!(out, "{b},{x0},{t},{x}")?;
                }
            }
        }
    }
    Ok(ReplicatorCell {
        fixed_rows,
        curve,
        trajectory,
    })
}

/// At most `count` evenly spread points, always keeping both ends.
fn thin(points: &[(f64, f64)], count: usize) -> Vec<(f64, f64)> {
    if points.len() <= count {
        return points.to_vec();
    }
    let last = points.len() - 1;
    let mut idx: Vec<usize> = (0..count)
        .map(|j| ((j as f64) * last as f64 / (count - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx.into_iter().map(|i| points[i]).collect()
}

struct AbmCell {
    ai: AiBehavior,
    b: f64,
    beta: f64,
    fraction: f64,
    ai_count: usize,
    seed: u64,
}

impl AbmCell {
    fn name(&self) -> String {
        format!("{}_b{}_beta{}_frac{}", self.ai, self.b, self.beta, self.fraction)
    }

    fn row_file(&self) -> String {
        format!("cells/{}.csv", self.name())
    }

    fn series_file(&self, run: usize) -> String {
        format!("timeseries/{}_run{run}.csv", self.name())
    }

    fn snapshot_file(&self, step: u64) -> String {
        format!("snapshots/{}_run0_step{step}.txt", self.name())
    }
}

const AGGREGATE_HEADER: &str = "ai,b,c,beta,beta_ai,ai_fraction,ai_count,mean,std,runs,seeds\n";

fn run_abm(experiment: &Experiment, master: u64, s: &AbmSpec, dir: &OutputDir) -> Result<Vec<String>> {
    let nodes = s.topology.node_count();
    let mut cells = Vec::new();
    for &ai in &s.ai {
        for &b in &s.b {
            for &beta in &s.beta {
                for &fraction in &s.ai_fraction {
                    let index = cells.len() as u64;
                    cells.push(AbmCell {
                        ai,
                        b,
                        beta,
                        fraction,
                        ai_count: ai_count(fraction, nodes),
                        seed: derive_seed(master, 1 + index),
                    });
                }
            }
        }
    }

    let network_seed = derive_seed(master, 0);
    let graphs: Vec<Arc<Graph>> = match s.topology {
        Topology::Lattice {
            rows,
            cols,
            periodic,
        } => vec![Arc::new(Graph::square_lattice(rows, cols, periodic)?)],
        Topology::Complete { nodes } => vec![Arc::new(Graph::complete(nodes)?)],
        Topology::ScaleFree {
            nodes,
            links,
            networks,
        } => (0..networks)
            .map(|j| Graph::barabasi_albert(nodes, links, derive_seed(network_seed, j as u64)).map(Arc::new))
            .collect::<coopdyn::Result<_>>()?,
    };
    let network_files: Vec<String> = match s.topology {
        Topology::ScaleFree { networks, .. } => (0..networks).map(|j| format!("networks/ba_{j}.edges")).collect(),
        _ => Vec::new(),
    };

    let mut outputs = vec!["aggregate.csv".to_string()];
    outputs.extend(network_files.iter().cloned());
    let mut seeds = Vec::new();
    if let Topology::ScaleFree { networks, .. } = s.topology {
        for j in 0..networks {
            seeds.push((format!("network{j}"), derive_seed(network_seed, j as u64)));
        }
    }
    for cell in &cells {
        outputs.push(cell.row_file());
        for run in 0..s.runs {
            outputs.push(cell.series_file(run));
            seeds.push((format!("{}.run{run}", cell.name()), derive_seed(cell.seed, run as u64)));
        }
        for &step in &s.snapshot_steps {
            if step <= s.steps {
                outputs.push(cell.snapshot_file(step));
            }
        }
    }

    let resume = Manifest::matches_previous(dir, experiment);
    write_manifest(experiment, dir, seeds, &outputs)?;
    for (file, g) in network_files.iter().zip(&graphs) {
        dir.write(file, &g.to_edge_list())?;
    }

    let results: Vec<(String, Result<String>)> = cells
        .par_iter()
        .map(|cell| {
            let label = format!(
                "ai={}, b={}, beta={}, ai_fraction={}",
                cell.ai, cell.b, cell.beta, cell.fraction
            );
            if resume {
                if let Some(row) = dir.read(&cell.row_file()) {
                    return (label, Ok(row));
                }
            }
            (label, abm_cell(s, cell, &graphs, dir))
        })
        .collect();
    let rows = first_failure(results)?;

    let mut aggregate = String::from(AGGREGATE_HEADER);
    for row in rows {
        aggregate.push_str(&row);
    }
    dir.write("aggregate.csv", &aggregate)?;
    Ok(outputs)
}

fn abm_cell(s: &AbmSpec, cell: &AbmCell, graphs: &[Arc<Graph>], dir: &OutputDir) -> Result<String> {
    let matrix = donation(cell.b, s.c)?;
    let mut cfg = SimConfig::new(
        graphs[0].clone(),
        cell.ai_count,
        cell.ai,
        matrix,
        cell.beta,
        s.steps,
        cell.seed,
    );
    cfg.beta_ai = s.beta_ai.unwrap_or(cell.beta);
    cfg.sample_window = s.sample_window;
    cfg.sample_interval = s.sample_interval;
    cfg.ai_placement = s.placement;
    cfg.validate()?;

    let runs: Vec<RunResult> = (0..s.runs)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.graph = graphs[i % graphs.len()].clone();
            c.seed = derive_seed(cell.seed, i as u64);
            let snaps: &[u64] = if i == 0 { &s.snapshot_steps } else { &[] };
            abm::run_with_snapshots(&c, snaps)
        })
        .collect::<coopdyn::Result<_>>()
        .map_err(|e| anyhow!(e))?;

    for (i, r) in runs.iter().enumerate() {
        dir.write(&cell.series_file(i), &r.series.to_csv())?;
        for (step, grid) in &r.snapshots {
            dir.write(&cell.snapshot_file(*step), grid)?;
        }
    }
    let agg = Aggregate::from_summaries(runs.iter().map(|r| r.summary).collect());
    let seeds: Vec<String> = agg.seeds().map(|x| x.to_string()).collect();
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        cell.ai,
        cell.b,
        s.c,
        cell.beta,
        cfg.beta_ai,
        cell.fraction,
        cell.ai_count,
        agg.mean,
        agg.std,
        agg.runs,
        seeds.join(";")
    );
    dir.write(&cell.row_file(), &row)?;
    Ok(row)
}

fn write_manifest(
    experiment: &Experiment,
    dir: &OutputDir,
    seeds: Vec<(String, u64)>,
    outputs: &[String],
) -> Result<()> {
    let manifest = Manifest {
        seeds,
        outputs: outputs.to_vec(),
    };
    dir.write(MANIFEST, &manifest.render(experiment))
}
