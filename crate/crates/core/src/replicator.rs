//! Replicator dynamics for an infinite well-mixed population in which a
//! fixed fraction `alpha` of all agents are AIs.
//!
//! `x` is the fraction of cooperators among humans. With time measured in
//! units of `N` elementary imitation events,
//!
//! ```text
//! Samaritan:      dx/dt = (1-x) [ x (1-alpha) tanh(beta_H df/2) + alpha p(beta_AI) ]
//! Discriminatory: dx/dt = (1-x) x (1-alpha) tanh(beta_H df/2)
//! ```
//!
//! where `df(x)` is the payoff advantage of a human cooperator and
//! `p(beta_AI) = 1/(1 + exp(-beta_AI df))` is the chance that a human
//! defector copies a Samaritan AI. No equation is defined for Malicious AIs.

use crate::error::{invalid, Error, Result};
use crate::game::{logistic, AiBehavior, PayoffMatrix};

/// Intervals of the uniform grid used to bracket interior roots.
pub const SCAN_INTERVALS: usize = 10_000;
/// Bisection stops once the bracket is narrower than this.
pub const ROOT_TOLERANCE: f64 = 1e-10;
/// Half-width of the neighborhood probed to classify a fixed point.
pub const STABILITY_PROBE: f64 = 1e-6;

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 1_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicatorConfig {
    alpha: f64,
    beta_h: f64,
    beta_ai: f64,
    ai: AiBehavior,
    matrix: PayoffMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Flow points towards the root on one side and away on the other.
    Marginal,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub x: f64,
    pub stability: Stability,
}

/// Sampled solution `(t, x)` of the replicator equation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn final_x(&self) -> f64 {
        self.points.last().map(|&(_, x)| x).unwrap_or(f64::NAN)
    }
}

impl ReplicatorConfig {
    pub fn new(alpha: f64, beta: f64, ai: AiBehavior, matrix: PayoffMatrix) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
        }
        if ai == AiBehavior::Malicious {
            return Err(Error::Domain(
                "no replicator equation is defined for Malicious AI".into(),
            ));
        }
        check_beta("beta", beta)?;
        Ok(Self {
            alpha,
            beta_h: beta,
            beta_ai: beta,
            ai,
            matrix,
        })
    }

    pub fn with_ai_beta(mut self, beta_ai: f64) -> Result<Self> {
        check_beta("beta_ai", beta_ai)?;
        self.beta_ai = beta_ai;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta_h(&self) -> f64 {
        self.beta_h
    }

    pub fn beta_ai(&self) -> f64 {
        self.beta_ai
    }

    pub fn ai(&self) -> AiBehavior {
        self.ai
    }

    pub fn matrix(&self) -> &PayoffMatrix {
        &self.matrix
    }

    /// Payoff advantage of a human cooperator at cooperator fraction `x`.
    pub fn delta_f(&self, x: f64) -> f64 {
        let m = &self.matrix;
        let a = self.alpha;
        match self.ai {
            AiBehavior::Samaritan => {
                (m.r() - m.t()) * ((1.0 - a) * x + a) + (m.s() - m.p()) * (1.0 - a) * (1.0 - x)
            }
            AiBehavior::Discriminatory => {
                (m.r() - m.t()) * (1.0 - a) * x
                    + (m.s() - m.p()) * (1.0 - a) * (1.0 - x)
                    + a * (m.r() - m.p())
            }
            AiBehavior::Malicious => unreachable!("rejected by the constructor"),
        }
    }

    fn human_term(&self, x: f64, df: f64) -> f64 {
        x * (1.0 - self.alpha) * (self.beta_h * df / 2.0).tanh()
    }

    /// `dx/dt`.
    pub fn rhs(&self, x: f64) -> f64 {
        let df = self.delta_f(x);
        match self.ai {
            AiBehavior::Samaritan => {
                (1.0 - x) * (self.human_term(x, df) + self.alpha * logistic(self.beta_ai * df))
            }
            _ => (1.0 - x) * self.human_term(x, df),
        }
    }

    /// Bracketed factor `h(x)` of the Samaritan equation, `dx/dt = (1-x) h(x)`.
    pub fn h_function(&self, x: f64) -> Result<f64> {
        if self.ai != AiBehavior::Samaritan {
            return Err(Error::Domain(format!(
                "h(x) is defined for Samaritan AI only, not {}",
                self.ai
            )));
        }
        let df = self.delta_f(x);
        Ok(self.human_term(x, df) + self.alpha * logistic(self.beta_ai * df))
    }

    /// `dx/dt` sampled at `points` evenly spaced `x` in `[0, 1]`.
    pub fn sample_rhs(&self, points: usize) -> Vec<(f64, f64)> {
        let last = points.saturating_sub(1).max(1) as f64;
        (0..points)
            .map(|i| {
                let x = i as f64 / last;
                (x, self.rhs(x))
            })
            .collect()
    }

    /// Every root of `dx/dt` on `[0, 1]`, sorted by `x`.
    pub fn find_fixed_points(&self) -> Vec<FixedPoint> {
        let grid: Vec<(f64, f64)> = (0..=SCAN_INTERVALS)
            .map(|i| {
                let x = i as f64 / SCAN_INTERVALS as f64;
                (x, self.rhs(x))
            })
            .collect();

        let mut roots = Vec::new();
        for (i, &(x, v)) in grid.iter().enumerate() {
            if v == 0.0 {
                roots.push(x);
                continue;
            }
            if let Some(&(xn, vn)) = grid.get(i + 1) {
                if vn != 0.0 && v.signum() != vn.signum() {
                    roots.push(self.bisect(x, xn, v));
                }
            }
        }

        roots
            .into_iter()
            .map(|x| FixedPoint {
                x,
                stability: self.classify(x),
            })
            .collect()
    }

    /// True when full cooperation is the only rest point.
    pub fn full_cooperation_is_unique(&self) -> bool {
        let fps = self.find_fixed_points();
        fps.len() == 1 && fps[0].x == 1.0
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
        let sign_lo = f_lo.signum();
        while hi - lo > ROOT_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            let v = self.rhs(mid);
            if v == 0.0 {
                return mid;
            }
            if v.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn classify(&self, x: f64) -> Stability {
        // Flow towards x from the left needs dx/dt > 0 there, from the right
        // dx/dt < 0. A boundary point has a single side.
        let left = (x > 0.0).then(|| self.rhs((x - STABILITY_PROBE).max(0.0)));
        let right = (x < 1.0).then(|| self.rhs((x + STABILITY_PROBE).min(1.0)));
        let attracts_left = left.map(|v| v > 0.0);
        let attracts_right = right.map(|v| v < 0.0);
        let repels_left = left.map(|v| v < 0.0);
        let repels_right = right.map(|v| v > 0.0);
        if attracts_left.unwrap_or(true) && attracts_right.unwrap_or(true) {
            Stability::Stable
        } else if repels_left.unwrap_or(true) && repels_right.unwrap_or(true) {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }

    /// Classical fourth-order Runge-Kutta from `x0` to `t_end` with step
    /// close to `dt` (shrunk so the last step lands on `t_end`). `x` is
    /// clamped to `[0, 1]` after each step.
    pub fn integrate(&self, x0: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
        if !(0.0..=1.0).contains(&x0) {
            return Err(invalid("x0", format!("must lie in [0, 1], got {x0}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(invalid("t_end", format!("must be >= 0, got {t_end}")));
        }
        let steps = (t_end / dt).ceil() as usize;
        let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };

        let mut points = Vec::with_capacity(steps + 1);
        let mut x = x0;
        points.push((0.0, x));
        for i in 1..=steps {
            let k1 = self.rhs(x);
            let k2 = self.rhs(x + 0.5 * h * k1);
            let k3 = self.rhs(x + 0.5 * h * k2);
            let k4 = self.rhs(x + h * k3);
            x = (x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
            points.push((i as f64 * h, x));
        }
        Ok(Trajectory { points })
    }
}

/// AI fraction below which `h(1) < 0`, so that the Samaritan equation has an
/// interior rest point:
///
/// `alpha_c = 1 / (1 + 1 / K)`, `K = (1 + e^{beta_AI (T-R)}) tanh(beta_H (T-R) / 2)`.
///
/// With `beta_H = beta_AI = beta` this equals `1 - e^{-beta (T-R)}`.
pub fn critical_alpha(beta_h: f64, beta_ai: f64, matrix: &PayoffMatrix) -> Result<f64> {
    check_beta("beta", beta_h)?;
    check_beta("beta_ai", beta_ai)?;
    let gap = matrix.t() - matrix.r();
    if !(gap > 0.0) {
        return Err(Error::Domain(format!(
            "critical alpha needs T > R, got T={}, R={}",
            matrix.t(),
            matrix.r()
        )));
    }
    let k = (1.0 + (beta_ai * gap).exp()) * (beta_h * gap / 2.0).tanh();
    Ok(1.0 / (1.0 + 1.0 / k))
}

fn check_beta(name: &'static str, beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(name, format!("must be finite and >= 0, got {beta}")));
    }
    Ok(())
}
