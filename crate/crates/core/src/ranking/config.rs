use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginMode {
    Soft,
    /// Soft margin with `C = hard_mode_c` plus a post-training feasibility report.
    Hard,
}

/// How slack is shared among one image's constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackMode {
    /// One slack per image: the per-image loss is the largest hinge.
    Shared,
    /// One slack per constraint: the per-image loss is the sum of hinges.
    PerConstraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Top-k positives against capped negatives.
    Partial,
    /// Every ordered pair of candidates, one hinge per pair.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub k: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub epochs: usize,
    /// Initial step size. `None` uses `1 / (C · N)` in soft mode and
    /// `1 / hard_mode_c` in hard mode.
    pub step_size: Option<f64>,
    /// Step decay: `eta_t = eta_0 / (1 + decay · t)`, `t` counting image updates.
    pub decay: f64,
    /// Recorded with the model. The solver visits images in a fixed order and
    /// draws no random numbers.
    pub seed: u64,
    pub mode: MarginMode,
    pub hard_mode_c: f64,
    pub slack: SlackMode,
    /// Stop once the largest possible per-step objective change falls below
    /// this fraction of the best objective.
    pub convergence_tol: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            k: 20,
            c: 1.0,
            epochs: 200,
            step_size: None,
            decay: 1e-2,
            seed: 0,
            mode: MarginMode::Soft,
            hard_mode_c: 1e6,
            slack: SlackMode::Shared,
            convergence_tol: 1e-6,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive and finite, got {}", self.c));
        }
        if !(self.hard_mode_c > 0.0 && self.hard_mode_c.is_finite()) {
            return bad(format!("hard_mode_c must be positive, got {}", self.hard_mode_c));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if let Some(eta) = self.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("step size must be positive, got {eta}"));
            }
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return bad(format!("decay must be non-negative, got {}", self.decay));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return bad("convergence tolerance must be non-negative".into());
        }
        Ok(())
    }

    /// The trade-off constant actually optimized.
    pub fn effective_c(&self) -> f64 {
        match self.mode {
            MarginMode::Soft => self.c,
            MarginMode::Hard => self.hard_mode_c,
        }
    }

    /// Initial step size for a dataset of `n_images` images.
    ///
    /// Hard mode scales the step so one update moves `w` by about one feature
    /// vector, as a perceptron would; the soft default would move it by `1/N`
    /// of that and stall short of the margins under the decaying schedule.
    pub fn initial_step(&self, n_images: usize) -> f64 {
        match (self.step_size, self.mode) {
            (Some(eta), _) => eta,
            (None, MarginMode::Soft) => 1.0 / (self.c * n_images as f64),
            (None, MarginMode::Hard) => 1.0 / self.hard_mode_c,
        }
    }

    /// Size of the negative set for an image with `n` candidates.
    pub fn negatives_cap(&self, n: usize) -> usize {
        n.saturating_sub(self.k).min(2 * self.k)
    }
}
