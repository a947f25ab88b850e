//! Acceptance checks, one PASS/FAIL line each. Run with
//! `cargo test -p coopdyn --test acceptance`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use coopdyn::abm::{self, SimConfig, SimState};
use coopdyn::finite::oracle::brute_force_absorption;
use coopdyn::finite::{closed_form_f, closed_form_g, WellMixedConfig};
use coopdyn::network::{degree_stats, Graph};
use coopdyn::replicator::{critical_alpha, ReplicatorConfig, DEFAULT_DT, DEFAULT_T_END};
use coopdyn::rng::{derive_seed, rng_from_seed};
use coopdyn::{AiBehavior, PayoffMatrix, Strategy};
use rand::Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

type Check = Result<String, String>;

fn random_pd(rng: &mut impl Rng) -> PayoffMatrix {
    let s = rng.gen_range(-2.0..0.0);
    let p = s + rng.gen_range(0.05..2.0);
    let r = p + rng.gen_range(0.05..2.0);
    let t = r + rng.gen_range(0.05..2.0);
    PayoffMatrix::new(r, s, t, p).expect("ordered entries form a strict PD")
}

fn donation(b: f64) -> PayoffMatrix {
    PayoffMatrix::donation(b, 1.0).unwrap()
}

fn oracle_equivalence() -> Check {
    let mut rng = rng_from_seed(1);
    let matrices: Vec<PayoffMatrix> = (0..50).map(|_| random_pd(&mut rng)).collect();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for m in &matrices {
        for beta in [0.0, 0.3, 1.0] {
            for n in 2..=10 {
                let mut configs = vec![WellMixedConfig::new(n, 0, beta, AiBehavior::Samaritan, *m)];
                for ai_count in 1..=5 {
                    configs.push(WellMixedConfig::new(n, ai_count, beta, AiBehavior::Discriminatory, *m));
                }
                for cfg in configs {
                    let cfg = cfg.map_err(|e| e.to_string())?;
                    for inv in [Strategy::Cooperate, Strategy::Defect] {
                        let product = cfg.fixation_probability(inv);
                        let oracle = brute_force_absorption(&cfg, inv).map_err(|e| e.to_string())?;
                        let rel = (product - oracle).abs() / oracle.abs();
                        worst = worst.max(rel);
                        cases += 1;
                        if rel > 1e-12 {
                            return Err(format!(
                                "N={n} M={} beta={beta} {inv:?}: product {product:e} vs oracle {oracle:e}",
                                cfg.m()
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{cases} cases, worst relative error {worst:.2e}"))
}

fn closed_form_consistency() -> Check {
    let mut rng = rng_from_seed(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=50);
        let m = rng.gen_range(0..=20);
        let beta = rng.gen_range(0.0..=2.0);
        let matrix = random_pd(&mut rng);
        for ai in AiBehavior::ALL {
            let cfg = WellMixedConfig::new(n, m, beta, ai, matrix).map_err(|e| e.to_string())?;
            let product = cfg.fixation_ratio().ln;
            let closed = beta * closed_form_f(ai, n, m, &matrix) + closed_form_g(ai, n, m).ln;
            let err = (product - closed).abs();
            worst = worst.max(err);
            if err >= 1e-8 {
                return Err(format!("{ai} N={n} M={m} beta={beta}: {product} vs {closed}"));
            }
        }
    }
    Ok(format!("600 cases, worst |log r| gap {worst:.2e}"))
}

fn neutral_drift() -> Check {
    for n in 2..=50 {
        for m in [0, 3, 17] {
            let cfg = WellMixedConfig::new(n, m, 0.0, AiBehavior::Discriminatory, donation(2.0))
                .map_err(|e| e.to_string())?;
            let rho = cfg.fixation_probability(Strategy::Cooperate);
            if (rho - 1.0 / n as f64).abs() > 1e-12 {
                return Err(format!("N={n} M={m}: {rho}"));
            }
        }
    }
    let cfg = WellMixedConfig::new(30, 0, 0.0, AiBehavior::Samaritan, donation(3.0))
        .map_err(|e| e.to_string())?;
    let freq = cfg.cooperation_frequency();
    if freq != 0.5 {
        return Err(format!("cooperation frequency {freq} at beta 0"));
    }
    Ok("N = 2..50 fix at 1/N; frequency 0.5".into())
}

fn figure_one_dominance() -> Check {
    let freq = |ai, m, b, beta| -> Result<f64, String> {
        Ok(WellMixedConfig::new(100, m, beta, ai, donation(b))
            .map_err(|e| e.to_string())?
            .cooperation_frequency())
    };
    let mut compared_strong = 0;
    for m in [10, 50, 90] {
        for b in [2.0, 4.0, 6.0] {
            let sam = freq(AiBehavior::Samaritan, m, b, 0.1)?;
            let ir = freq(AiBehavior::Discriminatory, m, b, 0.1)?;
            if sam < ir {
                return Err(format!("beta 0.1, M={m}, b={b}: samaritan {sam} < discriminatory {ir}"));
            }
            let sam = freq(AiBehavior::Samaritan, m, b, 5.0)?;
            let ir = freq(AiBehavior::Discriminatory, m, b, 5.0)?;
            if (sam - ir).abs() > 1e-6 {
                compared_strong += 1;
                if ir < sam {
                    return Err(format!("beta 5, M={m}, b={b}: discriminatory {ir} < samaritan {sam}"));
                }
            }
        }
    }
    Ok(format!("9 weak-selection cells, {compared_strong} distinguishable strong-selection cells"))
}

fn critical_alpha_consistency() -> Check {
    let matrix = donation(2.0);
    let mut notes = Vec::new();
    for beta in [0.5, 1.0, 2.0] {
        let ac = critical_alpha(beta, beta, &matrix).map_err(|e| e.to_string())?;
        let reduced = 1.0 - (-beta as f64).exp();
        if (ac - reduced).abs() >= 1e-12 {
            return Err(format!("beta {beta}: alpha_c {ac} vs {reduced}"));
        }
        let cfg = ReplicatorConfig::new(0.9 * ac, beta, AiBehavior::Samaritan, matrix)
            .map_err(|e| e.to_string())?;
        let h1 = cfg.h_function(1.0).map_err(|e| e.to_string())?;
        if h1 >= 0.0 {
            return Err(format!("beta {beta}: h(1) = {h1} is not negative"));
        }
        let interior: Vec<f64> = cfg
            .find_fixed_points()
            .into_iter()
            .map(|fp| fp.x)
            .filter(|&x| x > 0.0 && x < 1.0)
            .collect();
        let Some(&root) = interior.first() else {
            return Err(format!("beta {beta}: no interior fixed point"));
        };
        let end = cfg
            .integrate(0.99, DEFAULT_T_END, DEFAULT_DT)
            .map_err(|e| e.to_string())?
            .final_x();
        if (end - root).abs() >= 1e-5 {
            return Err(format!("beta {beta}: trajectory ends at {end}, root {root}"));
        }
        notes.push(format!("beta {beta}: x* = {root:.6}"));
    }
    Ok(notes.join("; "))
}

/// Two-sided check that `count` successes in `trials` draws are consistent
/// with success probability `p` at the three-sigma level. Uses the normal
/// approximation when the binomial variance is large enough for it and the
/// exact binomial tails otherwise. Returns the z score when it applies.
fn binomial_consistent(count: u64, trials: u64, p: f64) -> (bool, Option<f64>) {
    const THREE_SIGMA_TAIL: f64 = 0.0026997960632601866;
    let variance = trials as f64 * p * (1.0 - p);
    if variance >= 9.0 {
        let z = (count as f64 - trials as f64 * p).abs() / variance.sqrt();
        return (z <= 3.0, Some(z));
    }
    if p == 0.0 || p == 1.0 {
        return (count as f64 == trials as f64 * p, None);
    }
    let dist = Binomial::new(p, trials).expect("valid binomial");
    let lower = dist.cdf(count);
    let upper = if count == 0 { 1.0 } else { dist.sf(count - 1) };
    (2.0 * lower.min(upper) >= THREE_SIGMA_TAIL, None)
}

/// Empirical up/down frequencies of the agent-based model on the complete
/// graph, conditioned on the number of human cooperators, against the
/// birth-death rates. Fitness in the simulation is the sum over 34 partners
/// while the analytic rates use average payoffs, so the analytic selection
/// intensity is the simulated one times 34.
fn complete_graph_bridge() -> Check {
    let (n, m, beta, events) = (30usize, 5usize, 0.1, 200_000u64);
    let episode_len = 200u64;
    let graph = Arc::new(Graph::complete(n + m).map_err(|e| e.to_string())?);
    let partners = (n + m - 1) as f64;
    let analytic = WellMixedConfig::new(n, m, beta * partners, AiBehavior::Samaritan, donation(2.0))
        .map_err(|e| e.to_string())?;

    let mut visits = vec![0u64; n + 1];
    let mut ups = vec![0u64; n + 1];
    let mut downs = vec![0u64; n + 1];
    let mut starts = rng_from_seed(6);
    // Selection pulls the chain quickly towards few cooperators, so it is
    // restarted at regular intervals from populations of varied composition
    // to give every state a useful number of visits.
    for episode in 0..events / episode_len {
        let mut cfg = SimConfig::new(
            graph.clone(),
            m,
            AiBehavior::Samaritan,
            donation(2.0),
            beta,
            episode_len,
            derive_seed(6, episode),
        );
        cfg.initial_cooperation = starts.gen_range(0.0..=1.0);
        let mut state = SimState::initialize(&cfg).map_err(|e| e.to_string())?;
        for _ in 0..episode_len {
            let k = state.coop_count();
            let out = abm::step(&mut state, &cfg);
            visits[k] += 1;
            if out.switched {
                if out.before == Strategy::Defect {
                    ups[k] += 1;
                } else {
                    downs[k] += 1;
                }
            }
        }
    }

    let mut worst_z = 0.0f64;
    let mut visited = 0;
    let mut exact = 0;
    for k in 0..=n {
        if visits[k] == 0 {
            continue;
        }
        visited += 1;
        let t = analytic.transition_probs(k).map_err(|e| e.to_string())?;
        for (label, count, p) in [("up", ups[k], t.up), ("down", downs[k], t.down)] {
            let (ok, z) = binomial_consistent(count, visits[k], p);
            match z {
                Some(z) => worst_z = worst_z.max(z),
                None => exact += 1,
            }
            if !ok {
                return Err(format!(
                    "k={k} {label}: empirical {:.5} vs {p:.5} over {} events",
                    count as f64 / visits[k] as f64,
                    visits[k]
                ));
            }
        }
    }
    Ok(format!(
        "{visited} states visited, worst deviation {worst_z:.2} SE, {exact} low-count rates by exact tail"
    ))
}

fn lattice_monotonicity() -> Check {
    let graph = Arc::new(Graph::square_lattice(20, 20, false).map_err(|e| e.to_string())?);
    let mut means = Vec::new();
    for fraction in [0.0, 0.1, 0.2, 0.3] {
        let ai_count = (fraction * 400.0f64).round() as usize;
        let mut total = 0.0;
        for i in 0..10 {
            let cfg = SimConfig::new(
                graph.clone(),
                ai_count,
                AiBehavior::Samaritan,
                donation(2.0),
                0.1,
                20_000,
                derive_seed(7, i),
            );
            total += abm::run(&cfg).map_err(|e| e.to_string())?.summary.final_coop_fraction;
        }
        means.push(total / 10.0);
    }
    let shown: Vec<String> = means.iter().map(|x| format!("{x:.4}")).collect();
    if means.windows(2).any(|w| w[1] - w[0] < -0.02) {
        return Err(format!("means {}", shown.join(", ")));
    }
    Ok(format!("means {}", shown.join(", ")))
}

fn scale_free_properties() -> Check {
    let (n, m) = (1000usize, 2usize);
    let expected_edges = m * (n - m - 1) + m * (m + 1) / 2;
    let expected_mean = 2.0 * expected_edges as f64 / n as f64;
    let mut hubby = 0;
    for seed in 0..10 {
        let g = Graph::barabasi_albert(n, m, seed).map_err(|e| e.to_string())?;
        let stats = degree_stats(&g);
        if g.edge_count() != expected_edges || stats.mean_degree != expected_mean {
            return Err(format!("seed {seed}: mean degree {}", stats.mean_degree));
        }
        if stats.max_degree as f64 >= 5.0 * stats.mean_degree {
            hubby += 1;
        }
    }
    if hubby < 8 {
        return Err(format!("only {hubby}/10 seeds have a hub of 5x the mean degree"));
    }
    Ok(format!("mean degree {expected_mean}; {hubby}/10 seeds with a 5x hub"))
}

fn determinism() -> Check {
    let lattice = Arc::new(Graph::square_lattice(12, 12, true).map_err(|e| e.to_string())?);
    let ba = Arc::new(Graph::barabasi_albert(200, 2, 4).map_err(|e| e.to_string())?);
    let mut cfgs = vec![
        SimConfig::new(lattice, 20, AiBehavior::Samaritan, donation(2.0), 0.1, 3000, 99),
        SimConfig::new(ba, 20, AiBehavior::Discriminatory, donation(3.0), 1.0, 3000, 99),
    ];
    cfgs[1].beta_ai = 5.0;
    for (i, cfg) in cfgs.iter().enumerate() {
        let at: &[u64] = if i == 0 { &[0, 1000, 3000] } else { &[] };
        let a = abm::run_with_snapshots(cfg, at).map_err(|e| e.to_string())?;
        let b = abm::run_with_snapshots(cfg, at).map_err(|e| e.to_string())?;
        if a.series.to_csv() != b.series.to_csv() || a.snapshots != b.snapshots {
            return Err(format!("config {i} differs between runs"));
        }
    }
    let agg = |threads| -> Result<_, String> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| abm::replicate(&cfgs[0], 6, 5))
            .map_err(|e| e.to_string())
    };
    if agg(1)? != agg(4)? {
        return Err("replica aggregate depends on the worker count".into());
    }
    Ok("time series, snapshots and replica aggregates repeat exactly".into())
}

fn main() {
    let checks: [(&str, fn() -> Check, Duration); 9] = [
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(5)),
        ("closed-form consistency", closed_form_consistency, Duration::from_secs(5)),
        ("neutral drift", neutral_drift, Duration::from_secs(5)),
        ("weak/strong selection dominance", figure_one_dominance, Duration::from_secs(1)),
        ("critical alpha", critical_alpha_consistency, Duration::from_secs(1)),
        ("complete-graph bridge", complete_graph_bridge, Duration::from_secs(30)),
        ("lattice monotonicity", lattice_monotonicity, Duration::from_secs(120)),
        ("scale-free properties", scale_free_properties, Duration::from_secs(5)),
        ("determinism", determinism, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in checks.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {elapsed:.2?}, budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("{status} {}. {name}: {detail} [{elapsed:.2?}]", i + 1);
    }
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
}
