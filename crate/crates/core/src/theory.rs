//! Analytic error probabilities of the conditional-nulling receiver and the
//! asymptotic Helstrom benchmarks.
//!
//! [`cn_error_recursive`] iterates the closed recursion over the number of
//! remaining candidates. [`cn_error_bruteforce`] enumerates every click path of
//! the decision automaton instead and is kept independent of the recursion so
//! that each can check the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ScenarioParams;

/// Error probabilities of the per-mode binary sub-task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryErrorPair {
    /// p₁: a zero-mean mode produces a click.
    pub p_false_alarm: f64,
    /// p₂: a mode carrying the displacement stays dark.
    pub p_false_negative: f64,
}

impl BinaryErrorPair {
    pub fn new(p_false_alarm: f64, p_false_negative: f64) -> Result<Self> {
        for (name, p) in [
            ("p_false_alarm", p_false_alarm),
            ("p_false_negative", p_false_negative),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("probability must lie in [0, 1], got {p}")));
            }
        }
        Ok(Self {
            p_false_alarm,
            p_false_negative,
        })
    }
}

/// Below this false-alarm probability Q_n takes its p₁ = 0 branch.
pub const Q_ZERO_BRANCH_BELOW: f64 = 1e-12;

/// Probability that the one-by-one search over `n` undisplaced modes finds
/// the single displaced one.
///
/// Q_n = 1 − p₂ when p₁ = 0, else (1 − p₂)(1 − (1 − p₁)ⁿ)/(n p₁).
pub fn q_sequence(n: usize, pair: &BinaryErrorPair) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "Q_n is defined for n >= 1"));
    }
    Ok(q_unchecked(n, pair))
}

fn q_unchecked(n: usize, pair: &BinaryErrorPair) -> f64 {
    (1.0 - pair.p_false_negative) * search_fraction(n, pair.p_false_alarm)
}

// (1 − (1 − p)ⁿ)/(n p), the mean of (1 − p)^k over k = 0..n−1.
fn search_fraction(n: usize, p: f64) -> f64 {
    if p < Q_ZERO_BRANCH_BELOW {
        1.0
    } else {
        -(n as f64 * (-p).ln_1p()).exp_m1() / (n as f64 * p)
    }
}

/// Error probability P_m of the conditional-nulling receiver with `m`
/// equal-prior candidates, from the recursion seeded with P₁ = 0.
pub fn cn_error_recursive(m: usize, pair: &BinaryErrorPair) -> Result<f64> {
    cn_error_recursive_with(m, pair, q_unchecked)
}

/// [`cn_error_recursive`] with a caller-supplied Q_n.
///
/// Exists so validation can inject a corrupted Q_n and watch the gates fail.
pub fn cn_error_recursive_with<F>(m: usize, pair: &BinaryErrorPair, q: F) -> Result<f64>
where
    F: Fn(usize, &BinaryErrorPair) -> f64,
{
    if m == 0 {
        return Err(Error::invalid("m", "need at least one candidate"));
    }
    BinaryErrorPair::new(pair.p_false_alarm, pair.p_false_negative)?;
    let p1 = pair.p_false_alarm;
    let p2 = pair.p_false_negative;
    let ln_keep = (-p1).ln_1p();
    // Rearranged so every term is non-negative:
    //   P_n = [1 − (1−p₁)ⁿ]/n + (n−1)/n · [(1−p₂) P_{n−1} + p₂ (1 − Q_{n−1})]
    let mut error = 0.0;
    for n in 2..=m {
        let nf = n as f64;
        let all_dark_miss = if p1 == 0.0 {
            0.0
        } else {
            -(nf * ln_keep).exp_m1()
        };
        let q_prev = q(n - 1, pair);
        error = all_dark_miss / nf
            + (nf - 1.0) / nf * ((1.0 - p2) * error + p2 * (1.0 - q_prev));
    }
    Ok(error.clamp(0.0, 1.0))
}

/// Noise-free conditional nulling: p₁ = 0 and p₂ = e^{−α₁²}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealCnError {
    /// (1/m)[m e^{−α²} + (1 − e^{−α²})^m − 1].
    pub exact: f64,
    /// ((m − 1)/2) e^{−2α²}.
    pub approx: f64,
}

pub fn cn_error_ideal(m: usize, alpha_one: f64) -> Result<IdealCnError> {
    if m < 2 {
        return Err(Error::invalid("m", format!("need m >= 2, got {m}")));
    }
    if !(alpha_one >= 0.0 && alpha_one.is_finite()) {
        return Err(Error::invalid("alpha_one", format!("need alpha >= 0, got {alpha_one}")));
    }
    let a2 = alpha_one * alpha_one;
    let x = (-a2).exp();
    let mf = m as f64;
    Ok(IdealCnError {
        exact: (one_minus_x_pow_m_excess(x, m) / mf).clamp(0.0, 1.0),
        approx: (mf - 1.0) / 2.0 * (-2.0 * a2).exp(),
    })
}

// (1 − x)^m − 1 + m x without cancellation. For small m·x the alternating
// binomial tail Σ_{k≥2} C(m,k)(−x)^k is summed directly.
fn one_minus_x_pow_m_excess(x: f64, m: usize) -> f64 {
    let mf = m as f64;
    if mf * x > 0.25 {
        return (mf * (-x).ln_1p()).exp() - 1.0 + mf * x;
    }
    let mut sum = 0.0;
    let mut term = 1.0; // C(m,k)(−x)^k, built up from k = 0
    for k in 1..=m {
        term *= -x * (mf - (k as f64 - 1.0)) / k as f64;
        if k >= 2 {
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
    }
    sum
}

/// Largest m accepted by [`cn_error_bruteforce`].
pub const BRUTEFORCE_MAX_BINS: usize = 12;

/// Error probability obtained by enumerating every click path of the
/// decision automaton for every true bin, under a uniform prior.
///
/// Displaced modes: the true one stays dark with probability 1 − p₁, a wrong
/// one clicks with probability 1 − p₂. Undisplaced modes: the true one clicks
/// with probability 1 − p₂, a wrong one clicks with probability p₁. When
/// every displaced mode clicks, the last mode is chosen.
pub fn cn_error_bruteforce(m: usize, pair: &BinaryErrorPair) -> Result<f64> {
    let mut success = 0.0;
    for truth in 0..m {
        success += decision_distribution(m, pair, truth)?[truth];
    }
    Ok(1.0 - success / m as f64)
}

/// Probability of each decision given the true bin, summed over every click
/// path of the automaton.
pub fn decision_distribution(m: usize, pair: &BinaryErrorPair, truth: usize) -> Result<Vec<f64>> {
    if m > BRUTEFORCE_MAX_BINS {
        return Err(Error::OracleCapExceeded {
            m,
            cap: BRUTEFORCE_MAX_BINS,
        });
    }
    if m == 0 {
        return Err(Error::invalid("m", "need at least one candidate"));
    }
    if truth >= m {
        return Err(Error::BinOutOfRange {
            index: truth,
            num_bins: m,
        });
    }
    BinaryErrorPair::new(pair.p_false_alarm, pair.p_false_negative)?;
    let mut paths = Vec::new();
    enumerate_displaced(0, 1.0, truth, m, pair, &mut paths);
    let mut dist = vec![0.0; m];
    for (decision, prob) in paths {
        dist[decision] += prob;
    }
    Ok(dist)
}

fn enumerate_displaced(
    i: usize,
    prob: f64,
    truth: usize,
    m: usize,
    pair: &BinaryErrorPair,
    out: &mut Vec<(usize, f64)>,
) {
    let click = if i == truth {
        pair.p_false_alarm
    } else {
        1.0 - pair.p_false_negative
    };
    if i + 1 == m {
        // Click or not, the last candidate is the decision.
        out.push((i, prob * click));
        out.push((i, prob * (1.0 - click)));
        return;
    }
    enumerate_displaced(i + 1, prob * click, truth, m, pair, out);
    enumerate_undisplaced(i + 1, i, prob * (1.0 - click), truth, m, pair, out);
}

fn enumerate_undisplaced(
    j: usize,
    anchor: usize,
    prob: f64,
    truth: usize,
    m: usize,
    pair: &BinaryErrorPair,
    out: &mut Vec<(usize, f64)>,
) {
    if j == m {
        out.push((anchor, prob));
        return;
    }
    let click = if j == truth {
        1.0 - pair.p_false_negative
    } else {
        pair.p_false_alarm
    };
    out.push((j, prob * click));
    enumerate_undisplaced(j + 1, anchor, prob * (1.0 - click), truth, m, pair, out);
}

/// Entanglement-assisted Helstrom asymptote ((m−1)/m)·exp(−2MκN_S/N_B).
pub fn helstrom_ea_asymptotic(params: &ScenarioParams) -> Result<f64> {
    params.validate()?;
    helstrom_ea(
        params.num_bins,
        params.modes_per_bin as f64,
        params.kappa,
        params.n_signal,
        params.n_noise,
    )
}

/// Unvalidated-scenario form of [`helstrom_ea_asymptotic`]; `modes` may be any
/// non-negative real, including zero.
pub fn helstrom_ea(m: usize, modes: f64, kappa: f64, n_signal: f64, n_noise: f64) -> Result<f64> {
    if !(n_noise > 0.0) {
        return Err(Error::invalid(
            "n_noise",
            "the entanglement-assisted asymptote needs N_B > 0",
        ));
    }
    let prior = prior_error(m)?;
    Ok(prior * (-2.0 * modes * kappa * n_signal / n_noise).exp())
}

/// Classical (coherent-state) Helstrom asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalHelstrom {
    /// Exponent denominator 1 + 2N_B + 2√(N_B(1+N_B)).
    pub exact: f64,
    /// High-noise form with exponent MκN_S/(2N_B); NaN when N_B = 0.
    pub high_noise: f64,
}

pub fn helstrom_classical_asymptotic(params: &ScenarioParams) -> Result<ClassicalHelstrom> {
    params.validate()?;
    helstrom_classical(
        params.num_bins,
        params.modes_per_bin as f64,
        params.kappa,
        params.n_signal,
        params.n_noise,
    )
}

pub fn helstrom_classical(
    m: usize,
    modes: f64,
    kappa: f64,
    n_signal: f64,
    n_noise: f64,
) -> Result<ClassicalHelstrom> {
    let prior = prior_error(m)?;
    let energy = modes * kappa * n_signal;
    let denom = 1.0 + 2.0 * n_noise + 2.0 * (n_noise * (1.0 + n_noise)).sqrt();
    let high_noise = if n_noise > 0.0 {
        prior * (-energy / (2.0 * n_noise)).exp()
    } else {
        f64::NAN
    };
    Ok(ClassicalHelstrom {
        exact: prior * (-2.0 * energy / denom).exp(),
        high_noise,
    })
}

fn prior_error(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("m", format!("need m >= 2, got {m}")));
    }
    Ok((m as f64 - 1.0) / m as f64)
}
