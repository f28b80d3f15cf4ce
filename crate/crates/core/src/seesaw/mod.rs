//! Seesaw optimization of inequality violations and the global visibility search.
//!
//! Measurements are updated in closed form (a dichotomic observable optimal for
//! Tr(A·F) is sign(F)). Channels are isometries updated by Riemannian gradient
//! ascent with a polar retraction and Armijo backtracking, in place of a Choi
//! matrix program.

mod objective;
mod search;

pub use objective::update_observable;
pub use search::{
    global_visibility_search, random_start, seesaw_maximize, seesaw_restarts, seesaw_restarts_with_channels, update_channel,
    ChannelLayout, GlobalConfig, Start,
};

use serde::{Deserialize, Serialize};

use crate::scenarios::{Inequality, QuantumStrategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub convergence_eps: f64,
    pub max_sweeps: usize,
    /// Initial step of each channel line search.
    pub channel_step: f64,
    pub channel_backtrack: f64,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Gradient steps per channel per sweep.
    pub channel_iterations: usize,
    pub optimize_channels: bool,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            convergence_eps: 1e-8,
            max_sweeps: 500,
            channel_step: 0.5,
            channel_backtrack: 0.5,
            armijo: 1e-4,
            max_halvings: 40,
            channel_iterations: 4,
            optimize_channels: true,
            restarts: 1,
            seed: 0,
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.convergence_eps > 0.0
            && self.max_sweeps > 0
            && self.channel_step > 0.0
            && self.channel_backtrack > 0.0
            && self.channel_backtrack < 1.0
            && self.armijo > 0.0
            && self.restarts >= 1;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Parameter("invalid seesaw configuration".into()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Inequality value reached (in the global search: on the entangled state).
    pub best_value: f64,
    pub best_strategy: QuantumStrategy,
    pub best_visibility: Option<f64>,
    pub best_inequality: Option<Inequality>,
    /// Value after every sweep of the best run.
    pub trace: Vec<f64>,
    /// Critical visibility after every outer iteration of the best global run.
    pub visibility_trace: Vec<f64>,
    /// Restart that produced the result.
    pub restart: usize,
    pub seed: u64,
    pub sweeps: usize,
    /// Channel line searches that ran out of halvings.
    pub stalled_steps: usize,
}

#[cfg(test)]
mod tests;
