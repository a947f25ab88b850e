//! Exact analytics for a well-mixed population of `N` humans and `M`
//! fixed-behavior AIs.
//!
//! Humans update by pairwise comparison: a focal human is picked uniformly,
//! a role model is drawn from the whole population, and the focal adopts
//! the role model's strategy with the Fermi probability. Counting the
//! cooperators `k` gives a birth-death chain on `0..=N` with rates
//!
//! ```text
//! T+(k) = (N-k)/N * [ k/(N+M) p(beta_H) + d_C M/(N+M) p(beta_AI) ]
//! T-(k) = k/N     * [ (N-k)/(N+M) q(beta_H) + d_D M/(N+M) q(beta_AI) ]
//! ```
//!
//! where `p` is the probability that a defector imitates a cooperator,
//! `q = 1 - p` at equal fitness arguments, and `d_C`, `d_D` flag Samaritan
//! and Malicious AIs. Discriminatory AIs mirror the focal human and never
//! act as a source of a different strategy.
//!
//! Products of rate ratios are accumulated in log space throughout; `N=100`
//! with `beta=10` overflows the naive products by hundreds of orders of
//! magnitude.

use crate::error::{invalid, Error, Result};
use crate::game::{
    fermi_prob, indicator, ln_fermi_prob, logistic, AiBehavior, PayoffMatrix, Strategy,
};

pub mod oracle;

/// A positive quantity stored by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScale {
    pub ln: f64,
}

impl LogScale {
    /// The plain value; may be `0.0` or `inf` when it is not representable.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }
}

/// Parameters of the well-mixed finite population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellMixedConfig {
    n: usize,
    m: usize,
    beta_h: f64,
    beta_ai: f64,
    ai: AiBehavior,
    matrix: PayoffMatrix,
}

/// Average payoffs of a human cooperator and a human defector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgPayoffs {
    pub cooperator: f64,
    pub defector: f64,
}

/// One-step probabilities of gaining (`up`) or losing (`down`) a cooperator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transitions {
    pub up: f64,
    pub down: f64,
}

impl WellMixedConfig {
    /// Humans and AIs share the same intensity of selection `beta`.
    pub fn new(
        n: usize,
        m: usize,
        beta: f64,
        ai: AiBehavior,
        matrix: PayoffMatrix,
    ) -> Result<Self> {
        if n < 2 {
            return Err(invalid("N", format!("need at least 2 humans, got {n}")));
        }
        check_beta("beta", beta)?;
        check_matrix(&matrix)?;
        Ok(Self {
            n,
            m,
            beta_h: beta,
            beta_ai: beta,
            ai,
            matrix,
        })
    }

    /// Use a separate intensity of selection when the role model is an AI.
    pub fn with_ai_beta(mut self, beta_ai: f64) -> Result<Self> {
        check_beta("beta_ai", beta_ai)?;
        self.beta_ai = beta_ai;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
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

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::Domain(format!(
                "cooperator count {k} exceeds population size {}",
                self.n
            )));
        }
        Ok(())
    }

    // The payoff formulas are polynomial in k, so they extend to the
    // boundary states where the corresponding strategy is absent. The
    // transition rates need that extension for AI role models at k = 0, N.
    fn raw_pi_c(&self, k: usize) -> f64 {
        let (n, m, k) = (self.n as f64, self.m as f64, k as f64);
        let mx = &self.matrix;
        let vs_ai = match self.ai {
            AiBehavior::Samaritan | AiBehavior::Discriminatory => mx.r(),
            AiBehavior::Malicious => mx.s(),
        };
        ((k - 1.0) * mx.r() + (n - k) * mx.s() + m * vs_ai) / (n + m - 1.0)
    }

    fn raw_pi_d(&self, k: usize) -> f64 {
        let (n, m, k) = (self.n as f64, self.m as f64, k as f64);
        let mx = &self.matrix;
        let vs_ai = match self.ai {
            AiBehavior::Samaritan => mx.t(),
            AiBehavior::Malicious | AiBehavior::Discriminatory => mx.p(),
        };
        (k * mx.t() + (n - k - 1.0) * mx.p() + m * vs_ai) / (n + m - 1.0)
    }

    /// Average payoff of a human cooperator when `k` humans cooperate.
    pub fn payoff_cooperator(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        if k == 0 {
            return Err(Error::Domain(
                "cooperator payoff is undefined with no cooperators".into(),
            ));
        }
        Ok(self.raw_pi_c(k))
    }

    /// Average payoff of a human defector when `k` humans cooperate.
    pub fn payoff_defector(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        if k == self.n {
            return Err(Error::Domain(
                "defector payoff is undefined with no defectors".into(),
            ));
        }
        Ok(self.raw_pi_d(k))
    }

    /// Both average payoffs; requires `1 <= k <= N-1`.
    pub fn avg_payoffs(&self, k: usize) -> Result<AvgPayoffs> {
        Ok(AvgPayoffs {
            cooperator: self.payoff_cooperator(k)?,
            defector: self.payoff_defector(k)?,
        })
    }

    /// `Pi_C(k) - Pi_D(k)`.
    pub fn payoff_difference(&self, k: usize) -> f64 {
        self.raw_pi_c(k) - self.raw_pi_d(k)
    }

    /// AI share of the role-model pool that pushes towards cooperation
    /// (Samaritan) and towards defection (Malicious).
    fn ai_pools(&self) -> (f64, f64) {
        let m = self.m as f64;
        let not_ir = 1.0 - f64::from(indicator(self.ai, AiBehavior::Discriminatory));
        let d_c = f64::from(indicator(self.ai, AiBehavior::Samaritan));
        (not_ir * d_c * m, not_ir * (1.0 - d_c) * m)
    }

    /// Birth-death rates at `k` cooperators, in linear space.
    pub fn transition_probs(&self, k: usize) -> Result<Transitions> {
        self.check_k(k)?;
        let (n, m, kf) = (self.n as f64, self.m as f64, k as f64);
        let total = n + m;
        let (pc, pd) = (self.raw_pi_c(k), self.raw_pi_d(k));
        let (ai_c, ai_d) = self.ai_pools();

        let up = (n - kf) / n
            * (kf / total * fermi_prob(pd, pc, self.beta_h)
                + ai_c / total * fermi_prob(pd, pc, self.beta_ai));
        let down = kf / n
            * ((n - kf) / total * fermi_prob(pc, pd, self.beta_h)
                + ai_d / total * fermi_prob(pc, pd, self.beta_ai));
        Ok(Transitions { up, down })
    }

    /// Natural logs of the birth-death rates (`-inf` for a zero rate).
    pub fn ln_transition_probs(&self, k: usize) -> Result<Transitions> {
        self.check_k(k)?;
        let (n, m, kf) = (self.n as f64, self.m as f64, k as f64);
        let ln_total = (n + m).ln();
        let (pc, pd) = (self.raw_pi_c(k), self.raw_pi_d(k));
        let (ai_c, ai_d) = self.ai_pools();

        let up = ln_prefactor(n - kf, n)
            + pooled_ln(
                kf,
                ai_c,
                ln_fermi_prob(pd, pc, self.beta_h),
                ln_fermi_prob(pd, pc, self.beta_ai),
            )
            - ln_total;
        let down = ln_prefactor(kf, n)
            + pooled_ln(
                n - kf,
                ai_d,
                ln_fermi_prob(pc, pd, self.beta_h),
                ln_fermi_prob(pc, pd, self.beta_ai),
            )
            - ln_total;
        Ok(Transitions { up, down })
    }

    fn ln_ratio(&self, k: usize) -> f64 {
        let t = self
            .ln_transition_probs(k)
            .expect("interior state is within range");
        t.up - t.down
    }

    /// `r = rho_{D,C} / rho_{C,D} = prod_{k=1}^{N-1} T+(k)/T-(k)`.
    pub fn fixation_ratio(&self) -> LogScale {
        let ln = (1..self.n).map(|k| self.ln_ratio(k)).sum();
        LogScale { ln }
    }

    /// Log of the probability that a single `invader` takes over a
    /// population of the other strategy. States 0 and N are treated as
    /// absorbing.
    pub fn ln_fixation_probability(&self, invader: Strategy) -> f64 {
        let n = self.n;
        // Partial sums of ln(T-/T+) walking up from k=1 (cooperator
        // invader), or of ln(T+/T-) walking down from k=N-1 (defector).
        let steps: Vec<f64> = match invader {
            Strategy::Cooperate => (1..n).map(|k| -self.ln_ratio(k)).collect(),
            Strategy::Defect => (1..n).rev().map(|k| self.ln_ratio(k)).collect(),
        };
        let mut terms = Vec::with_capacity(n);
        terms.push(0.0);
        let mut acc = 0.0;
        for s in steps {
            acc += s;
            terms.push(acc);
        }
        -log_sum_exp(&terms)
    }

    /// Fixation probability of a single mutant.
    pub fn fixation_probability(&self, invader: Strategy) -> f64 {
        self.ln_fixation_probability(invader).exp()
    }

    /// `r / (1 + r)`: long-run share of time in the all-cooperator state
    /// under rare mutation.
    pub fn cooperation_frequency(&self) -> f64 {
        logistic(self.fixation_ratio().ln)
    }

    /// `H = beta F + ln G`, positive iff cooperation is risk dominant.
    ///
    /// The closed forms assume one intensity of selection; configurations
    /// with `beta_H != beta_AI` are rejected unless the AI is
    /// Discriminatory (which is never imitated, so `beta_AI` is irrelevant).
    pub fn risk_dominance_margin(&self) -> Result<f64> {
        if self.beta_h != self.beta_ai && self.ai != AiBehavior::Discriminatory {
            return Err(Error::Domain(
                "closed forms require beta_H == beta_AI".into(),
            ));
        }
        let f = closed_form_f(self.ai, self.n, self.m, &self.matrix);
        let g = closed_form_g(self.ai, self.n, self.m);
        Ok(self.beta_h * f + g.ln)
    }

    /// Whether cooperation is risk dominant over defection.
    pub fn risk_dominance(&self) -> Result<bool> {
        Ok(self.risk_dominance_margin()? > 0.0)
    }
}

fn check_beta(name: &'static str, beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(name, format!("must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn check_matrix(m: &PayoffMatrix) -> Result<()> {
    if [m.r(), m.s(), m.t(), m.p()].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("payoffs", "entries must be finite"))
    }
}

fn ln_prefactor(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        f64::NEG_INFINITY
    } else {
        (num / den).ln()
    }
}

/// `ln(h * e^{lh} + a * e^{la})` with non-negative weights `h`, `a`.
fn pooled_ln(h: f64, a: f64, lh: f64, la: f64) -> f64 {
    if lh == la {
        return ln_prefactor(h + a, 1.0) + lh;
    }
    let terms = [ln_prefactor(h, 1.0) + lh, ln_prefactor(a, 1.0) + la];
    log_sum_exp(&terms)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Closed-form `F_AI(N, M) = sum_{k=1}^{N-1} (Pi_C(k) - Pi_D(k))`.
pub fn closed_form_f(ai: AiBehavior, n: usize, m: usize, matrix: &PayoffMatrix) -> f64 {
    let (r, s, t, p) = (matrix.r(), matrix.s(), matrix.t(), matrix.p());
    let (n, m) = (n as f64, m as f64);
    let ai_term = match ai {
        AiBehavior::Samaritan => m * (r - t),
        AiBehavior::Malicious => m * (s - p),
        AiBehavior::Discriminatory => m * (r - p),
    };
    let denom = n + m - 1.0;
    (n - 1.0) / denom * ((p - r) + n * (s - p) + ai_term)
        + (r + p - t - s) * n * (n - 1.0) / (2.0 * denom)
}

/// Closed-form `G_AI(N, M)`, the selection-independent factor of the
/// fixation ratio:
///
/// * Samaritan: `(N-1+M)! / ((N-1)! M!)`
/// * Malicious: `(N-1)! M! / (N-1+M)!`
/// * Discriminatory: `1`
pub fn closed_form_g(ai: AiBehavior, n: usize, m: usize) -> LogScale {
    let lg = |x: usize| libm::lgamma(x as f64 + 1.0);
    let binom = lg(n - 1 + m) - lg(n - 1) - lg(m);
    let ln = match ai {
        AiBehavior::Samaritan => binom,
        AiBehavior::Malicious => -binom,
        AiBehavior::Discriminatory => 0.0,
    };
    LogScale { ln }
}

/// Stationary distribution of the embedded chain over monomorphic states.
///
/// `fixation[i][j]` is the probability that a single `j` mutant takes over
/// a population of `i` players; the diagonal is ignored. The chain moves
/// from `i` to `j` with probability `fixation[i][j] / (q - 1)`.
pub fn stationary_distribution(fixation: &[Vec<f64>]) -> Result<Vec<f64>> {
    let q = fixation.len();
    if q < 2 {
        return Err(Error::NotStochastic(format!("need at least 2 states, got {q}")));
    }
    let mut chain = vec![vec![0.0; q]; q];
    for (i, row) in fixation.iter().enumerate() {
        if row.len() != q {
            return Err(Error::NotStochastic(format!(
                "row {i} has {} entries, expected {q}",
                row.len()
            )));
        }
        for (j, &rho) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::NotStochastic(format!(
                    "entry ({i}, {j}) = {rho} is not a probability"
                )));
            }
            chain[i][j] = rho / (q - 1) as f64;
        }
        let leave: f64 = chain[i].iter().sum();
        if leave > 1.0 + 1e-12 {
            return Err(Error::NotStochastic(format!(
                "row {i} leaves with probability {leave}"
            )));
        }
        chain[i][i] = (1.0 - leave).max(0.0);
    }

    let closed = closed_classes(&chain);
    if closed.len() != 1 {
        return Err(Error::Reducible {
            classes: closed.len(),
        });
    }
    let class = &closed[0];
    let sub: Vec<Vec<f64>> = class
        .iter()
        .map(|&i| class.iter().map(|&j| chain[i][j]).collect())
        .collect();
    let pi_sub = gth_stationary(&sub);

    let mut pi = vec![0.0; q];
    for (&i, &v) in class.iter().zip(&pi_sub) {
        pi[i] = v;
    }
    Ok(pi)
}

/// Closed communicating classes of the directed graph of positive
/// off-diagonal transitions.
fn closed_classes(chain: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let q = chain.len();
    let mut reach = vec![vec![false; q]; q];
    for i in 0..q {
        reach[i][i] = true;
        for j in 0..q {
            if i != j && chain[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..q {
        for i in 0..q {
            if reach[i][k] {
                for j in 0..q {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut classes = Vec::new();
    let mut seen = vec![false; q];
    for i in 0..q {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..q).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            seen[j] = true;
        }
        let is_closed = class
            .iter()
            .all(|&a| (0..q).all(|b| !reach[a][b] || class.contains(&b)));
        if is_closed {
            classes.push(class);
        }
    }
    classes
}

/// Grassmann-Taksar-Heyman elimination for an irreducible stochastic
/// matrix. Only off-diagonal entries are read, so no cancellation occurs.
fn gth_stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let q = p.len();
    let mut a: Vec<Vec<f64>> = p.to_vec();
    for n in (1..q).rev() {
        let s: f64 = (0..n).map(|j| a[n][j]).sum();
        for i in 0..n {
            a[i][n] /= s;
        }
        for i in 0..n {
            let ain = a[i][n];
            if ain == 0.0 {
                continue;
            }
            for j in 0..n {
                a[i][j] += ain * a[n][j];
            }
        }
    }
    let mut pi = vec![0.0; q];
    pi[0] = 1.0;
    for j in 1..q {
        pi[j] = (0..j).map(|i| pi[i] * a[i][j]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter().map(|v| v / total).collect()
}
