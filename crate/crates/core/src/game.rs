//! One-shot Prisoner's Dilemma primitives: the payoff matrix, the donation
//! game, the three fixed AI behaviors and the Fermi imitation rule.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// A pure strategy in the one-shot game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Cooperate,
    Defect,
}

impl Strategy {
    pub fn flipped(self) -> Self {
        match self {
            Strategy::Cooperate => Strategy::Defect,
            Strategy::Defect => Strategy::Cooperate,
        }
    }

    pub fn is_cooperate(self) -> bool {
        self == Strategy::Cooperate
    }
}

/// Fixed policy of an AI agent.
///
/// * `Samaritan` always cooperates (AI = C).
/// * `Malicious` always defects (AI = D).
/// * `Discriminatory` recognises the partner's intention and mirrors it
///   (AI = IR). Recognition is perfect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AiBehavior {
    Samaritan,
    Malicious,
    Discriminatory,
}

impl AiBehavior {
    pub const ALL: [AiBehavior; 3] = [
        AiBehavior::Samaritan,
        AiBehavior::Malicious,
        AiBehavior::Discriminatory,
    ];

    /// Lower-case name used in config files and output file names.
    pub fn name(self) -> &'static str {
        match self {
            AiBehavior::Samaritan => "samaritan",
            AiBehavior::Malicious => "malicious",
            AiBehavior::Discriminatory => "discriminatory",
        }
    }

    /// The action this AI plays against a partner whose action is `partner`.
    pub fn action_against(self, partner: Strategy) -> Strategy {
        match self {
            AiBehavior::Samaritan => Strategy::Cooperate,
            AiBehavior::Malicious => Strategy::Defect,
            AiBehavior::Discriminatory => partner,
        }
    }
}

impl fmt::Display for AiBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AiBehavior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "samaritan" | "c" => Ok(AiBehavior::Samaritan),
            "malicious" | "d" => Ok(AiBehavior::Malicious),
            "discriminatory" | "ir" => Ok(AiBehavior::Discriminatory),
            other => Err(invalid("ai", format!("unknown AI behavior `{other}`"))),
        }
    }
}

/// Indicator that is 1 when both behaviors coincide and 0 otherwise.
pub fn indicator(ai: AiBehavior, st: AiBehavior) -> u8 {
    u8::from(ai == st)
}

/// The four entries of a symmetric 2x2 game, row player's view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMatrix {
    r: f64,
    s: f64,
    t: f64,
    p: f64,
    strict_pd: bool,
}

impl PayoffMatrix {
    /// A Prisoner's Dilemma; rejects entries violating `T > R > P > S`.
    pub fn new(r: f64, s: f64, t: f64, p: f64) -> Result<Self> {
        let m = Self::relaxed(r, s, t, p);
        if !m.strict_pd {
            return Err(invalid(
                "payoffs",
                format!("expected T > R > P > S, got R={r}, S={s}, T={t}, P={p}"),
            ));
        }
        Ok(m)
    }

    /// Any finite 2x2 matrix. The result remembers whether it is a strict PD.
    pub fn relaxed(r: f64, s: f64, t: f64, p: f64) -> Self {
        let strict_pd = t > r && r > p && p > s;
        Self {
            r,
            s,
            t,
            p,
            strict_pd,
        }
    }

    /// Donation game with benefit `b` and cost `c`.
    pub fn donation(b: f64, c: f64) -> Result<Self> {
        donation_matrix(DonationParams::new(b, c)?)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_strict_pd(&self) -> bool {
        self.strict_pd
    }

    /// Payoff to a player using `own` against a player using `other`.
    pub fn payoff_to(&self, own: Strategy, other: Strategy) -> f64 {
        use Strategy::*;
        match (own, other) {
            (Cooperate, Cooperate) => self.r,
            (Cooperate, Defect) => self.s,
            (Defect, Cooperate) => self.t,
            (Defect, Defect) => self.p,
        }
    }
}

/// Benefit and cost of the donation game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DonationParams {
    pub b: f64,
    pub c: f64,
}

impl DonationParams {
    pub fn new(b: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("c", format!("cost must be positive, got {c}")));
        }
        if !(b > c) || !b.is_finite() {
            return Err(invalid(
                "b",
                format!("donation game requires b > c, got b={b}, c={c}"),
            ));
        }
        Ok(Self { b, c })
    }
}

/// `(R, S, T, P) = (b - c, -c, b, 0)`.
pub fn donation_matrix(params: DonationParams) -> Result<PayoffMatrix> {
    let DonationParams { b, c } = DonationParams::new(params.b, params.c)?;
    PayoffMatrix::new(b - c, -c, b, 0.0)
}

/// Payoffs to both players of a single encounter.
pub fn payoff(s1: Strategy, s2: Strategy, m: &PayoffMatrix) -> (f64, f64) {
    (m.payoff_to(s1, s2), m.payoff_to(s2, s1))
}

/// Payoffs `(to the human, to the AI)` when a human using `s` meets an AI.
pub fn human_ai_payoffs(s: Strategy, ai: AiBehavior, m: &PayoffMatrix) -> (f64, f64) {
    payoff(s, ai.action_against(s), m)
}

/// Probability that an agent with fitness `f_self` imitates one with
/// fitness `f_other`: `1 / (1 + exp(-beta (f_other - f_self)))`.
///
/// Evaluated on the side of the exponent that cannot overflow, so very
/// large arguments saturate to 0 or 1 instead of producing NaN.
pub fn fermi_prob(f_self: f64, f_other: f64, beta: f64) -> f64 {
    logistic(beta * (f_other - f_self))
}

/// Natural log of [`fermi_prob`], accurate even when the probability
/// underflows.
pub fn ln_fermi_prob(f_self: f64, f_other: f64, beta: f64) -> f64 {
    -softplus(-beta * (f_other - f_self))
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
