//! Evolutionary dynamics of cooperation in hybrid populations of humans and
//! fixed-behavior AI agents playing the one-shot Prisoner's Dilemma.
//!
//! * [`game`]: payoffs, AI behaviors and the Fermi imitation rule.
//! * [`finite`]: exact birth-death analytics for a well-mixed population.
//! * [`replicator`]: infinite-population replicator dynamics.
//! * [`network`]: complete, square-lattice and Barabási–Albert graphs.
//! * [`abm`]: agent-based simulation on any of those graphs.
//!
//! The guide in `book/` walks through each model with runnable snippets;
//! every snippet is compiled and run as a doc-test of this crate.

pub mod abm;
pub mod error;
pub mod finite;
pub mod game;
pub mod network;
pub mod replicator;
pub mod rng;

pub use error::{Error, Result};
pub use game::{AiBehavior, DonationParams, PayoffMatrix, Strategy};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/game.md")]
    mod game {}
    #[doc = include_str!("../../../book/src/finite.md")]
    mod finite {}
    #[doc = include_str!("../../../book/src/replicator.md")]
    mod replicator {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
