//! Pulse-position-modulated communication rates and the thermal-loss channel
//! capacities they are compared against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::receiver::error_pair_for;
use crate::stats::{validate_channel, DerivedStats};
use crate::theory::{cn_error_recursive, helstrom_ea};

/// Mutual information, in bits, of the m-ary symmetric channel that confuses
/// the transmitted symbol with probability `p`, spread evenly over the other
/// m − 1 symbols.
pub fn mutual_information(p: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("m", format!("need m >= 2, got {m}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("probability must lie in [0, 1], got {p}")));
    }
    let mf = m as f64;
    let hit = if p < 1.0 { (1.0 - p) * (-p).ln_1p() } else { 0.0 };
    let miss = if p > 0.0 { p * (p.ln() - (mf - 1.0).ln()) } else { 0.0 };
    Ok((mf.log2() + (hit + miss) / LN_2).max(0.0))
}

/// Von Neumann entropy, in bits, of a thermal state with mean photon number n.
pub fn entropy_g(n: f64) -> Result<f64> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::invalid("n", format!("need n >= 0, got {n}")));
    }
    Ok(g(n))
}

fn g(n: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        ((n + 1.0) * n.ln_1p() - n * n.ln()) / LN_2
    }
}

// x ln x evaluated as a difference f(x + d) − f(x), without cancellation.
fn xlnx_increment(x: f64, d: f64) -> f64 {
    if x == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            d * d.ln()
        }
    } else {
        d * (x + d).ln() + x * (d / x).ln_1p()
    }
}

/// g(base + delta) − g(base), accurate when delta ≪ base.
pub fn entropy_g_increment(base: f64, delta: f64) -> f64 {
    (xlnx_increment(base + 1.0, delta) - xlnx_increment(base, delta)) / LN_2
}

fn validate_capacity_inputs(kappa: f64, n_noise: f64, n_s: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid("kappa", format!("need 0 < kappa <= 1, got {kappa}")));
    }
    if !(n_noise >= 0.0 && n_noise.is_finite()) {
        return Err(Error::invalid("n_noise", format!("need N_B >= 0, got {n_noise}")));
    }
    if !(n_s >= 0.0 && n_s.is_finite()) {
        return Err(Error::invalid("n_s", format!("need n_S >= 0, got {n_s}")));
    }
    Ok(())
}

/// Unassisted classical capacity g(κn_S + N_B) − g(N_B) of the thermal-loss
/// channel, bits per mode.
pub fn classical_capacity(kappa: f64, n_noise: f64, n_s: f64) -> Result<f64> {
    validate_capacity_inputs(kappa, n_noise, n_s)?;
    Ok(entropy_g_increment(n_noise, kappa * n_s))
}

/// Intermediate quantities of the entanglement-assisted capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EaCapacityTerms {
    pub n_s: f64,
    /// κn_S + N_B.
    pub n_s_prime: f64,
    pub d_term: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

/// Entanglement-assisted capacity g(n_S) + g(n_S′) − g(A₊) − g(A₋), bits per mode.
pub fn ea_capacity(kappa: f64, n_noise: f64, n_s: f64) -> Result<(f64, EaCapacityTerms)> {
    validate_capacity_inputs(kappa, n_noise, n_s)?;
    if !(n_s > 0.0) {
        return Err(Error::invalid("n_s", "need n_S > 0"));
    }
    let n_out = kappa * n_s + n_noise;
    let sum = n_s + n_out + 1.0;
    let d = (sum * sum - 4.0 * kappa * n_s * (n_s + 1.0)).sqrt();
    // D² − (1 + n_S′ − n_S)² = 4 n_S (1 + N_B − κ), so A₋ has no cancellation.
    let a_minus = 2.0 * n_s * (1.0 + n_noise - kappa) / (d + 1.0 + n_out - n_s);
    let a_plus = a_minus + (n_out - n_s);
    let terms = EaCapacityTerms {
        n_s,
        n_s_prime: n_out,
        d_term: d,
        a_plus,
        a_minus,
    };
    let value = g(n_s) + g(n_out) - g(a_plus.max(0.0)) - g(a_minus.max(0.0));
    Ok((value, terms))
}

/// Weak-signal, high-noise asymptotes (C, C_E) ≈ (κn_S/(N_B ln2), κn_S|ln n_S|/(N_B ln2)).
pub fn capacity_asymptotes(kappa: f64, n_noise: f64, n_s: f64) -> Result<(f64, f64)> {
    validate_capacity_inputs(kappa, n_noise, n_s)?;
    if !(n_noise > 0.0 && n_s > 0.0) {
        return Err(Error::invalid("n_noise", "asymptotes need N_B > 0 and n_S > 0"));
    }
    let c = kappa * n_s / (LN_2 * n_noise);
    Ok((c, c * n_s.ln().abs()))
}

/// Error-probability model used inside the rate objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Entanglement-assisted Helstrom asymptote.
    HelstromEa,
    /// Conditional-nulling recursion with the many-mode (p₁, p₂).
    CnRecursion,
}

impl ErrorModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorModel::HelstromEa => "helstrom_ea",
            ErrorModel::CnRecursion => "cn_recursion",
        }
    }

    /// Error probability for m bins of M modes at per-mode brightness n_S,
    /// i.e. per-bin signal brightness N_S = m·n_S.
    pub fn error_probability(
        &self,
        kappa: f64,
        n_noise: f64,
        n_s: f64,
        m: usize,
        modes: f64,
    ) -> Result<f64> {
        let n_signal = m as f64 * n_s;
        match self {
            ErrorModel::HelstromEa => helstrom_ea(m, modes, kappa, n_signal, n_noise),
            ErrorModel::CnRecursion => {
                let stats = DerivedStats::evaluate(kappa, n_signal, n_noise, modes)?;
                let pair = error_pair_for(stats.alpha_one, stats.e_thermal)?;
                cn_error_recursive(m, &pair)
            }
        }
    }
}

/// A point of the rate objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub num_bins: usize,
    pub modes_per_bin: u64,
    pub error_prob: f64,
    /// I(P)/(M·m), bits per mode.
    pub rate: f64,
}

/// Search space of [`optimize_rate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub bins: Vec<usize>,
    pub modes: Vec<u64>,
    /// Integer refinement of m and M around the coarse argmax, kept inside the
    /// grid's bounds.
    pub refine: bool,
}

/// Smallest M of the default grid; the many-mode asymptotics behind both error
/// models are not trusted below it.
pub const DEFAULT_MIN_MODES: u64 = 1_000;
pub const DEFAULT_MAX_MODES: u64 = 100_000_000;
pub const DEFAULT_MODES_PER_DECADE: u32 = 64;
pub const DEFAULT_MAX_BINS_LOG2: u32 = 16;

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            bins: (1..=DEFAULT_MAX_BINS_LOG2).map(|k| 1usize << k).collect(),
            modes: log_integer_grid(DEFAULT_MIN_MODES, DEFAULT_MAX_MODES, DEFAULT_MODES_PER_DECADE),
            refine: true,
        }
    }
}

/// Rounded, de-duplicated integers 10^{k/per_decade} between `lo` and `hi`.
pub fn log_integer_grid(lo: u64, hi: u64, per_decade: u32) -> Vec<u64> {
    let lo = lo.max(1);
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let start = (a * per_decade as f64).round() as i64;
    let end = (b * per_decade as f64).round() as i64;
    let mut out: Vec<u64> = (start..=end)
        .map(|k| 10f64.powf(k as f64 / per_decade as f64).round() as u64)
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    out.dedup();
    out
}

/// Result of a rate optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptimum {
    pub point: RatePoint,
    /// The argmax sits on the largest m or on either end of the M range, so
    /// the grid may be cutting off a better point.
    pub on_boundary: bool,
}

fn better(a: &RatePoint, b: &RatePoint) -> bool {
    // larger rate, then smaller M, then smaller m
    if a.rate != b.rate {
        return a.rate > b.rate;
    }
    if a.modes_per_bin != b.modes_per_bin {
        return a.modes_per_bin < b.modes_per_bin;
    }
    a.num_bins < b.num_bins
}

fn best_of(points: impl IntoIterator<Item = RatePoint>) -> Option<RatePoint> {
    points
        .into_iter()
        .fold(None, |acc: Option<RatePoint>, p| match acc {
            Some(b) if !better(&p, &b) => Some(b),
            _ => Some(p),
        })
}

/// Rate I(P)/(M·m) of one (m, M) point.
pub fn rate_point(
    kappa: f64,
    n_noise: f64,
    n_s: f64,
    model: ErrorModel,
    m: usize,
    modes: u64,
) -> Result<RatePoint> {
    if modes == 0 {
        return Err(Error::invalid("modes_per_bin", "need M >= 1"));
    }
    let p = model.error_probability(kappa, n_noise, n_s, m, modes as f64)?;
    let info = mutual_information(p, m)?;
    Ok(RatePoint {
        num_bins: m,
        modes_per_bin: modes,
        error_prob: p,
        rate: info / (modes as f64 * m as f64),
    })
}

const REFINE_MAX_BINS: usize = 256;
const REFINE_MODE_STEPS: u64 = 48;

/// Maximizes the PPM rate per mode over `search`.
///
/// Ties go to smaller M, then smaller m, so the reduction does not depend on
/// evaluation order.
pub fn optimize_rate(
    kappa: f64,
    n_noise: f64,
    n_s: f64,
    model: ErrorModel,
    search: &GridSpec,
) -> Result<RateOptimum> {
    validate_channel(kappa, n_s, n_noise)?;
    let mut bins = search.bins.clone();
    bins.sort_unstable();
    bins.dedup();
    let mut modes = search.modes.clone();
    modes.sort_unstable();
    modes.dedup();
    if bins.is_empty() || modes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = bins.iter().find(|&&m| m < 2) {
        return Err(Error::invalid("bins", format!("need m >= 2, got {bad}")));
    }
    if modes[0] == 0 {
        return Err(Error::invalid("modes", "need M >= 1"));
    }

    let evaluate = |pairs: Vec<(usize, u64)>| -> Result<Option<RatePoint>> {
        let points = pairs
            .into_par_iter()
            .map(|(m, mm)| rate_point(kappa, n_noise, n_s, model, m, mm))
            .collect::<Result<Vec<_>>>()?;
        Ok(best_of(points))
    };

    let coarse: Vec<(usize, u64)> = bins
        .iter()
        .flat_map(|&m| modes.iter().map(move |&mm| (m, mm)))
        .collect();
    let mut best = evaluate(coarse)?.ok_or(Error::EmptyGrid)?;

    if search.refine {
        let m_lo = (best.num_bins / 2).max(bins[0]);
        let m_hi = (best.num_bins * 2).min(*bins.last().unwrap());
        let refine_bins = spread_integers(m_lo as u64, m_hi as u64, REFINE_MAX_BINS as u64);
        let idx = modes.binary_search(&best.modes_per_bin).unwrap();
        let mm_lo = modes[idx.saturating_sub(1)];
        let mm_hi = modes[(idx + 1).min(modes.len() - 1)];
        let refine_modes = spread_integers(mm_lo, mm_hi, REFINE_MODE_STEPS);
        let fine: Vec<(usize, u64)> = refine_bins
            .iter()
            .flat_map(|&m| refine_modes.iter().map(move |&mm| (m as usize, mm)))
            .collect();
        if let Some(p) = evaluate(fine)? {
            if better(&p, &best) {
                best = p;
            }
        }
    }

    let on_boundary = best.num_bins >= *bins.last().unwrap()
        || best.modes_per_bin <= modes[0]
        || best.modes_per_bin >= *modes.last().unwrap();
    Ok(RateOptimum {
        point: best,
        on_boundary,
    })
}

// At most `count` roughly geometric integers covering [lo, hi], ends included.
fn spread_integers(lo: u64, hi: u64, count: u64) -> Vec<u64> {
    if hi <= lo {
        return vec![lo];
    }
    if hi - lo < count {
        return (lo..=hi).collect();
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp().round() as u64)
        .map(|x| x.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}
