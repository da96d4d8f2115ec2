//! Generalized conditional-nulling receiver on the converted idler modes.
//!
//! Modes are visited in order. The current candidate is displaced by −α and
//! detected: a click rejects it and moves on, darkness makes it the tentative
//! answer and the remaining modes are then detected undisplaced, the first
//! click among them overriding the tentative answer.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conversion::ConversionOutput;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::stats::{derive_statistics, ln_vacuum_weight, DerivedStats, ScenarioParams};
use crate::theory::BinaryErrorPair;

/// How the nulling displacement amplitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullPolicy {
    /// The nominal α₁ = C_p √(M/2v) for every mode.
    #[default]
    Asymptotic,
    /// C_p·cᵢ/(2v) per mode, from the trial's own Gram-Schmidt norms.
    Adaptive,
}

impl NullPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullPolicy::Asymptotic => "asymptotic",
            NullPolicy::Adaptive => "adaptive",
        }
    }

    /// Nulling amplitudes for every mode of one trial.
    pub fn amplitudes(&self, stats: &DerivedStats, norms: &[f64]) -> Vec<f64> {
        match self {
            NullPolicy::Asymptotic => vec![stats.alpha_one; norms.len()],
            NullPolicy::Adaptive => norms.iter().map(|c| stats.conditional_gain() * c).collect(),
        }
    }
}

impl std::str::FromStr for NullPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(NullPolicy::Asymptotic),
            "adaptive" => Ok(NullPolicy::Adaptive),
            other => Err(Error::invalid(
                "policy",
                format!("expected `asymptotic` or `adaptive`, got `{other}`"),
            )),
        }
    }
}

/// One on/off detection performed by the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub mode: usize,
    pub displaced: bool,
    pub clicked: bool,
}

/// Outcome of one receiver run (0-based bin index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen_bin: usize,
    pub click_trace: Vec<Detection>,
}

impl Decision {
    /// Checks that the trace is a valid run of the nulling automaton over
    /// `num_bins` modes and that it ends in `chosen_bin`.
    pub fn is_consistent(&self, num_bins: usize) -> bool {
        let trace = &self.click_trace;
        if trace.is_empty() || self.chosen_bin >= num_bins {
            return false;
        }
        let mut expected_mode = 0;
        let mut anchor = None;
        for (k, d) in trace.iter().enumerate() {
            if d.mode != expected_mode || d.mode >= num_bins {
                return false;
            }
            let last = k + 1 == trace.len();
            match anchor {
                None => {
                    if !d.displaced {
                        return false;
                    }
                    if !d.clicked {
                        anchor = Some(d.mode);
                    } else if d.mode + 1 == num_bins {
                        return last && self.chosen_bin == d.mode;
                    }
                }
                Some(_) => {
                    if d.displaced {
                        return false;
                    }
                    if d.clicked {
                        return last && self.chosen_bin == d.mode;
                    }
                }
            }
            expected_mode += 1;
        }
        // Ran out of modes while dark: the tentative candidate stands.
        matches!(anchor, Some(a) if expected_mode == num_bins && self.chosen_bin == a)
    }
}

/// Runs the receiver on converted idler modes with the scenario's nominal α₁.
pub fn run_conditional_nulling(
    conv: &ConversionOutput,
    policy: NullPolicy,
    params: &ScenarioParams,
    stream: &RandomStream,
) -> Result<Decision> {
    let stats = derive_statistics(params)?;
    if conv.norms.len() != conv.means.len() {
        return Err(Error::DimensionMismatch {
            expected: conv.means.len(),
            found: conv.norms.len(),
        });
    }
    let nulls = policy.amplitudes(&stats, &conv.norms);
    run_with_amplitudes(&conv.means, conv.thermal, &nulls, &mut stream.rng())
}

/// Core automaton: `means` are the idler means, `nulls[i]` the real
/// displacement amplitude subtracted from mode i when it is the candidate.
///
/// Each detection consumes exactly one uniform draw, in visiting order.
pub fn run_with_amplitudes<R: Rng + ?Sized>(
    means: &[Complex64],
    thermal: f64,
    nulls: &[f64],
    rng: &mut R,
) -> Result<Decision> {
    let m = means.len();
    if m < 2 {
        return Err(Error::invalid("means", format!("need at least 2 modes, got {m}")));
    }
    if nulls.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: nulls.len(),
        });
    }
    if !(thermal >= 0.0) {
        return Err(Error::invalid(
            "thermal",
            format!("thermal photon number must be >= 0, got {thermal}"),
        ));
    }
    let mut clicks = |amplitude: Complex64| -> bool {
        let ln_dark = ln_vacuum_weight(amplitude.norm_sqr(), thermal);
        // dark with probability e^{ln_dark}; u ∈ [0, 1)
        let u: f64 = rng.random();
        !(u.ln() < ln_dark)
    };
    let mut trace = Vec::with_capacity(m);
    for i in 0..m {
        let clicked = clicks(means[i] - nulls[i]);
        trace.push(Detection {
            mode: i,
            displaced: true,
            clicked,
        });
        if clicked {
            if i + 1 == m {
                return Ok(Decision {
                    chosen_bin: i,
                    click_trace: trace,
                });
            }
            continue;
        }
        for (j, &mean) in means.iter().enumerate().skip(i + 1) {
            let clicked = clicks(mean);
            trace.push(Detection {
                mode: j,
                displaced: false,
                clicked,
            });
            if clicked {
                return Ok(Decision {
                    chosen_bin: j,
                    click_trace: trace,
                });
            }
        }
        return Ok(Decision {
            chosen_bin: i,
            click_trace: trace,
        });
    }
    unreachable!("the last displaced detection always returns")
}

/// False-alarm and false-negative probabilities for a nominal displacement
/// α₁ and zero residual mean on the other modes.
pub fn error_pair_for(alpha_one: f64, thermal: f64) -> Result<BinaryErrorPair> {
    if !(thermal >= 0.0) {
        return Err(Error::invalid(
            "thermal",
            format!("thermal photon number must be >= 0, got {thermal}"),
        ));
    }
    let p1 = -(-thermal.ln_1p()).exp_m1();
    let p2 = ln_vacuum_weight(alpha_one * alpha_one, thermal).exp();
    BinaryErrorPair::new(p1.clamp(0.0, 1.0), p2.clamp(0.0, 1.0))
}

/// (p₁, p₂) of a scenario in the many-mode limit, where α₀ → 0 and the
/// signal mode carries the nominal α₁.
pub fn binary_error_pair(params: &ScenarioParams) -> Result<BinaryErrorPair> {
    let stats = derive_statistics(params)?;
    error_pair_for(stats.alpha_one, stats.e_thermal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn pair_for_fig3_scenario() {
        let p = ScenarioParams::new(0.1, 0.01, 10.0, 10, 10_000).unwrap();
        let pair = binary_error_pair(&p).unwrap();
        // E/(1+E) and e^{−α₁²/(1+E)}/(1+E) from the derived statistics
        assert!((pair.p_false_alarm - 0.009_810_981_098_109_81).abs() < 1e-15);
        assert!((pair.p_false_negative - 0.398_937_572_199_999_3).abs() < 1e-12);
        assert!((pair.p_false_negative - 0.39891).abs() < 1e-4);
    }

    #[test]
    fn pair_without_thermal_noise() {
        let a2: f64 = 1e4 * 0.1 * 0.01 / 10.0;
        let pair = error_pair_for(a2.sqrt(), 0.0).unwrap();
        assert_eq!(pair.p_false_alarm, 0.0);
        assert!((pair.p_false_negative - (-a2).exp()).abs() < 1e-16);
    }

    #[test]
    fn pair_in_many_mode_limit() {
        let base = ScenarioParams::new(0.1, 0.01, 10.0, 10, 10).unwrap();
        let e = derive_statistics(&base).unwrap().e_thermal;
        let far = binary_error_pair(&base.with_modes(100_000_000).unwrap()).unwrap();
        assert_eq!(far.p_false_negative, 0.0);
        assert!((far.p_false_alarm - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("adaptive".parse::<NullPolicy>().unwrap(), NullPolicy::Adaptive);
        assert_eq!("asymptotic".parse::<NullPolicy>().unwrap(), NullPolicy::Asymptotic);
        assert!("bogus".parse::<NullPolicy>().is_err());
    }

    #[test]
    fn rejects_too_few_modes_and_negative_noise() {
        let mut rng = RandomStream::new(0).rng();
        assert!(run_with_amplitudes(&[c(1.0)], 0.0, &[1.0], &mut rng).is_err());
        assert!(run_with_amplitudes(&[c(1.0), c(0.0)], -0.5, &[1.0, 1.0], &mut rng).is_err());
        assert!(run_with_amplitudes(&[c(1.0), c(0.0)], 0.0, &[1.0], &mut rng).is_err());
    }

    #[test]
    fn strong_signal_is_found() {
        let stream = RandomStream::new(7);
        let means = [c(10.0), c(0.0)];
        for t in 0..1000 {
            let d = run_with_amplitudes(&means, 0.0, &[10.0, 10.0], &mut stream.child(t).rng())
                .unwrap();
            assert_eq!(d.chosen_bin, 0);
            assert!(d.is_consistent(2));
        }
    }

    #[test]
    fn exhaustion_decides_last_mode() {
        // Every displaced detection clicks when nothing is nulled out and the
        // amplitude is huge.
        let means = [c(0.0), c(0.0), c(0.0)];
        let d = run_with_amplitudes(&means, 0.0, &[50.0; 3], &mut RandomStream::new(1).rng())
            .unwrap();
        assert_eq!(d.chosen_bin, 2);
        assert_eq!(d.click_trace.len(), 3);
        assert!(d.click_trace.iter().all(|x| x.displaced && x.clicked));
        assert!(d.is_consistent(3));
    }

    #[test]
    fn consistency_checker_rejects_bad_traces() {
        let det = |mode, displaced, clicked| Detection {
            mode,
            displaced,
            clicked,
        };
        let ok = Decision {
            chosen_bin: 2,
            click_trace: vec![det(0, true, true), det(1, true, false), det(2, false, true)],
        };
        assert!(ok.is_consistent(3));
        let dark_end = Decision {
            chosen_bin: 1,
            click_trace: vec![det(0, true, true), det(1, true, false), det(2, false, false)],
        };
        assert!(dark_end.is_consistent(3));
        let mut bad = dark_end.clone();
        bad.chosen_bin = 2;
        assert!(!bad.is_consistent(3));
        let displaced_after_anchor = Decision {
            chosen_bin: 2,
            click_trace: vec![det(0, true, false), det(1, true, true)],
        };
        assert!(!displaced_after_anchor.is_consistent(3));
        let truncated = Decision {
            chosen_bin: 0,
            click_trace: vec![det(0, true, false), det(1, false, false)],
        };
        assert!(!truncated.is_consistent(3));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn decisions_are_total_and_consistent(
                means in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..12),
                thermal in 0.0f64..2.0,
                null in 0.0f64..3.0,
                seed in any::<u64>(),
            ) {
                let means: Vec<Complex64> = means.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
                let nulls = vec![null; means.len()];
                let d = run_with_amplitudes(&means, thermal, &nulls, &mut RandomStream::new(seed).rng()).unwrap();
                prop_assert!(d.chosen_bin < means.len());
                prop_assert!(d.is_consistent(means.len()));
            }
        }
    }
}
