//! Brute-force reference for fixation probabilities.
//!
//! Builds the full `(N+1) x (N+1)` transition matrix from
//! [`WellMixedConfig::transition_probs`] and solves for the absorption
//! probability by eliminating transient states one at a time (state
//! reduction). It shares nothing with the product formula except the
//! one-step rates, which makes it a test oracle for
//! [`WellMixedConfig::fixation_probability`].

use crate::error::{invalid, Result};
use crate::finite::WellMixedConfig;
use crate::game::Strategy;

/// Largest population the dense oracle accepts.
pub const MAX_POPULATION: usize = 14;

/// Probability that a single `invader` reaches fixation, with the boundary
/// states `0` and `N` made absorbing.
pub fn brute_force_absorption(cfg: &WellMixedConfig, invader: Strategy) -> Result<f64> {
    let n = cfg.n();
    if n > MAX_POPULATION {
        return Err(invalid(
            "N",
            format!("brute-force oracle is capped at N = {MAX_POPULATION}, got {n}"),
        ));
    }

    let mut p = vec![vec![0.0f64; n + 1]; n + 1];
    for k in 1..n {
        let t = cfg.transition_probs(k)?;
        p[k][k + 1] = t.up;
        p[k][k - 1] = t.down;
        p[k][k] = 1.0 - t.up - t.down;
    }
    p[0][0] = 1.0;
    p[n][n] = 1.0;

    let (start, target) = match invader {
        Strategy::Cooperate => (1, n),
        Strategy::Defect => (n - 1, 0),
    };

    let mut alive: Vec<usize> = (0..=n).collect();
    let transient: Vec<usize> = (1..n).filter(|&s| s != start).collect();
    for s in transient {
        alive.retain(|&x| x != s);
        // Leaving probability as a sum of off-diagonal mass, never 1 - p_ss.
        let out: f64 = alive.iter().map(|&j| p[s][j]).sum();
        if out == 0.0 {
            continue;
        }
        for &i in &alive {
            let w = p[i][s];
            if w == 0.0 {
                continue;
            }
            for &j in &alive {
                p[i][j] += w * p[s][j] / out;
            }
            p[i][s] = 0.0;
        }
    }

    let to_target = p[start][target];
    let to_other = p[start][if target == 0 { n } else { 0 }];
    Ok(to_target / (to_target + to_other))
}
