//! Monte-Carlo campaigns, statistical validation and parameter sweeps.
//!
//! Every trial draws from the substream `root/trial_index`, so a campaign's
//! result depends only on its seed, never on how rayon schedules the work.

mod sweep;
mod validation;

pub use sweep::{
    auto_trials, rates_dataset, snr_dataset, snr_modes, sweep_error_vs_snr, sweep_rates, RateRow,
    SnrPoint, SnrSweepConfig, TrialBudget, AUTO_TRIALS_CAP, AUTO_TRIALS_FLOOR, MC_MAX_MODES,
    MC_MIN_TRIALS, SNR_DEFINITION,
};
pub use validation::{
    check_ideal_limit, check_oracle_equivalence, validate_alpha_stats, validate_orthogonality,
    AlphaReport, Gate, OrthogonalityReport, TailCheck, IDEAL_LIMIT_TOL, ORACLE_TOL,
};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conversion::{convert, simulate_heterodyne};
use crate::error::{Error, Result};
use crate::receiver::{binary_error_pair, run_conditional_nulling, NullPolicy};
use crate::rng::RandomStream;
use crate::stats::ScenarioParams;
use crate::theory::cn_error_recursive;

/// How the true bin is picked for each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinAssignment {
    /// Uniform over the m bins, drawn independently per trial.
    #[default]
    UniformRandom,
    /// Always this 0-based bin.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCampaign {
    pub params: ScenarioParams,
    pub trials: u64,
    pub policy: NullPolicy,
    pub master_seed: u64,
    pub h_assignment: BinAssignment,
}

impl TrialCampaign {
    pub fn new(params: ScenarioParams, trials: u64, master_seed: u64) -> Self {
        Self {
            params,
            trials,
            policy: NullPolicy::default(),
            master_seed,
            h_assignment: BinAssignment::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if let BinAssignment::Fixed(h) = self.h_assignment {
            if h >= self.params.num_bins {
                return Err(Error::BinOutOfRange {
                    index: h,
                    num_bins: self.params.num_bins,
                });
            }
        }
        Ok(())
    }
}

/// Empirical error rate of a campaign next to the recursion's prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub p_hat: f64,
    /// √(p̂(1 − p̂)/trials).
    pub std_err: f64,
    pub trials: u64,
    pub errors: u64,
    pub predicted: f64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: u64, trials: u64, predicted: f64) -> Self {
        let p_hat = errors as f64 / trials as f64;
        Self {
            p_hat,
            std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            trials,
            errors,
            predicted,
        }
    }

    /// Deviation from the prediction in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let diff = self.p_hat - self.predicted;
        if diff == 0.0 {
            0.0
        } else {
            diff.abs() / self.std_err
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        (self.p_hat - self.predicted).abs() <= sigmas * self.std_err
    }
}

// Fixed substream labels inside one trial.
const BIN_STREAM: u64 = 0;
const HETERODYNE_STREAM: u64 = 1;
const RECEIVER_STREAM: u64 = 2;

/// One end-to-end trial: heterodyne, conversion, conditional nulling.
/// Returns `(true_bin, chosen_bin)`.
pub fn run_trial(
    params: &ScenarioParams,
    policy: NullPolicy,
    assignment: BinAssignment,
    trial_stream: &RandomStream,
) -> Result<(usize, usize)> {
    let truth = match assignment {
        BinAssignment::Fixed(h) => h,
        BinAssignment::UniformRandom => trial_stream
            .child(BIN_STREAM)
            .rng()
            .random_range(0..params.num_bins),
    };
    let record = simulate_heterodyne(params, truth, &trial_stream.child(HETERODYNE_STREAM))?;
    let conv = convert(&record, params)?;
    let decision =
        run_conditional_nulling(&conv, policy, params, &trial_stream.child(RECEIVER_STREAM))?;
    Ok((truth, decision.chosen_bin))
}

/// Runs a campaign from the root stream of its master seed.
pub fn estimate_error(campaign: &TrialCampaign) -> Result<ErrorEstimate> {
    estimate_error_from(campaign, &RandomStream::new(campaign.master_seed))
}

/// Runs a campaign with trial `t` drawing from `root.child(t)`.
pub fn estimate_error_from(campaign: &TrialCampaign, root: &RandomStream) -> Result<ErrorEstimate> {
    campaign.validate()?;
    let predicted = cn_error_recursive(
        campaign.params.num_bins,
        &binary_error_pair(&campaign.params)?,
    )?;
    let errors = (0..campaign.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(
                &campaign.params,
                campaign.policy,
                campaign.h_assignment,
                &root.child(t),
            )
            .map(|(truth, chosen)| u64::from(truth != chosen))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ErrorEstimate::from_counts(errors, campaign.trials, predicted))
}
