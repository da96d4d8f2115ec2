//! Statistical gates on the heterodyne samples and the converted idler means,
//! plus the analytic cross-checks of the error recursion.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conversion::{convert, inner, simulate_heterodyne};
use crate::error::{Error, Result};
use crate::rng::{sample_complex_gaussian, RandomStream};
use crate::stats::{derive_statistics, ScenarioParams};
use crate::theory::{
    cn_error_bruteforce, cn_error_ideal, cn_error_recursive, cn_error_recursive_with,
    BinaryErrorPair,
};

/// One pass/fail check with the observed value and the bound it was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Gate {
    fn new(name: impl Into<String>, observed: f64, bound: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            pass,
        }
    }

    fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, bound, observed <= bound)
    }

    /// |observed/expected − 1| ≤ rel; the recorded observation is the relative deviation.
    fn relative(name: impl Into<String>, observed: f64, expected: f64, rel: f64) -> Self {
        let dev = (observed / expected - 1.0).abs();
        Self::new(name, dev, rel, dev <= rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub a: f64,
    pub freq_re: f64,
    pub freq_im: f64,
    /// Chebyshev bound 1/(2a²M).
    pub bound: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub modes: usize,
    pub variance: f64,
    pub samples: usize,
    pub norm_mean: f64,
    /// √(2Mv).
    pub norm_mean_expected: f64,
    pub norm_var: f64,
    /// v/2.
    pub norm_var_expected: f64,
    pub overlap_re_std: f64,
    pub overlap_im_std: f64,
    /// 1/√(2M).
    pub overlap_std_expected: f64,
    pub tails: Vec<TailCheck>,
}

pub const NORM_MEAN_REL_TOL: f64 = 0.01;
pub const NORM_VAR_REL_TOL: f64 = 0.15;
pub const OVERLAP_STD_REL_TOL: f64 = 0.10;
pub const TAIL_SIGMAS: f64 = 3.0;

impl OrthogonalityReport {
    pub fn gates(&self) -> Vec<Gate> {
        let mut gates = vec![
            Gate::relative(
                "norm_mean",
                self.norm_mean,
                self.norm_mean_expected,
                NORM_MEAN_REL_TOL,
            ),
            Gate::relative(
                "norm_variance",
                self.norm_var,
                self.norm_var_expected,
                NORM_VAR_REL_TOL,
            ),
            Gate::relative(
                "overlap_re_std",
                self.overlap_re_std,
                self.overlap_std_expected,
                OVERLAP_STD_REL_TOL,
            ),
            Gate::relative(
                "overlap_im_std",
                self.overlap_im_std,
                self.overlap_std_expected,
                OVERLAP_STD_REL_TOL,
            ),
        ];
        for t in &self.tails {
            gates.push(Gate::new(
                format!("chebyshev_tail_a={}", t.a),
                t.freq_re.max(t.freq_im),
                t.bound,
                !t.violated,
            ));
        }
        gates
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Draws `samples` independent pairs (rᵢ, rⱼ) of length-M complex Gaussian
/// vectors and checks the norm statistics and the normalized-overlap tails.
pub fn validate_orthogonality(
    modes: usize,
    variance: f64,
    samples: usize,
    thresholds: &[f64],
    stream: &RandomStream,
) -> Result<OrthogonalityReport> {
    if modes < 2 {
        return Err(Error::invalid("modes", format!("need M >= 2, got {modes}")));
    }
    if samples < 100 {
        return Err(Error::invalid("samples", format!("need >= 100 samples, got {samples}")));
    }
    let draws = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let pair = stream.child(k);
            let ri = sample_complex_gaussian(&pair.child(0), variance, modes)?;
            let rj = sample_complex_gaussian(&pair.child(1), variance, modes)?;
            let ni = inner(&ri, &ri).re.sqrt();
            let nj = inner(&rj, &rj).re.sqrt();
            // rᵢᵀ·rⱼ* = conj(⟨rᵢ, rⱼ⟩)
            let overlap: Complex64 = inner(&ri, &rj).conj() / (ni * nj);
            Ok((ni, nj, overlap))
        })
        .collect::<Result<Vec<_>>>()?;

    let norms: Vec<f64> = draws.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    let (norm_mean, norm_var) = mean_var(&norms);
    let re: Vec<f64> = draws.iter().map(|d| d.2.re).collect();
    let im: Vec<f64> = draws.iter().map(|d| d.2.im).collect();
    let (_, re_var) = mean_var(&re);
    let (_, im_var) = mean_var(&im);

    let n = samples as f64;
    let tails = thresholds
        .iter()
        .map(|&a| {
            let freq = |xs: &[f64]| xs.iter().filter(|x| x.abs() > a).count() as f64 / n;
            let (freq_re, freq_im) = (freq(&re), freq(&im));
            let bound = 1.0 / (2.0 * a * a * modes as f64);
            let se = |f: f64| (f * (1.0 - f) / n).sqrt();
            let (se_re, se_im) = (se(freq_re), se(freq_im));
            let violated =
                freq_re > bound + TAIL_SIGMAS * se_re || freq_im > bound + TAIL_SIGMAS * se_im;
            TailCheck {
                a,
                freq_re,
                freq_im,
                bound,
                se_re,
                se_im,
                violated,
            }
        })
        .collect();

    Ok(OrthogonalityReport {
        modes,
        variance,
        samples,
        norm_mean,
        norm_mean_expected: (2.0 * modes as f64 * variance).sqrt(),
        norm_var,
        norm_var_expected: variance / 2.0,
        overlap_re_std: re_var.sqrt(),
        overlap_im_std: im_var.sqrt(),
        overlap_std_expected: (2.0 * modes as f64).recip().sqrt(),
        tails,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub samples: usize,
    /// Sample mean of (d′)_h.
    pub alpha_mean: f64,
    pub alpha_se: f64,
    /// C_p √(M/2v).
    pub alpha_mean_expected: f64,
    pub alpha_var: f64,
    /// C_p²/(8v).
    pub alpha_var_expected: f64,
    /// Per-quadrature sample variances of (d′)ᵢ for i < h.
    pub alpha0_var_re: f64,
    pub alpha0_var_im: f64,
    /// C_p²/(4v).
    pub alpha0_var_expected: f64,
    pub alpha0_count: usize,
    /// Predicted σ²(α₁)/E.
    pub fluctuation_to_noise: f64,
}

pub const ALPHA_MEAN_SIGMAS: f64 = 3.0;
pub const ALPHA_VAR_REL_TOL: f64 = 0.30;
pub const FLUCTUATION_TO_NOISE_MAX: f64 = 0.01;

impl AlphaReport {
    pub fn gates(&self) -> Vec<Gate> {
        let mean_dev = (self.alpha_mean - self.alpha_mean_expected).abs();
        vec![
            Gate::at_most("alpha1_mean", mean_dev, ALPHA_MEAN_SIGMAS * self.alpha_se),
            Gate::relative(
                "alpha1_variance",
                self.alpha_var,
                self.alpha_var_expected,
                ALPHA_VAR_REL_TOL,
            ),
            Gate::relative(
                "alpha0_variance_re",
                self.alpha0_var_re,
                self.alpha0_var_expected,
                ALPHA_VAR_REL_TOL,
            ),
            Gate::relative(
                "alpha0_variance_im",
                self.alpha0_var_im,
                self.alpha0_var_expected,
                ALPHA_VAR_REL_TOL,
            ),
            Gate::at_most(
                "alpha1_fluctuation_to_noise",
                self.fluctuation_to_noise,
                FLUCTUATION_TO_NOISE_MAX,
            ),
        ]
    }
}

/// Statistics of the converted means against their many-mode predictions.
///
/// (d′)_h is collected from records whose signal sits in the first bin, where
/// c_h = ‖r_h‖ exactly; (d′)ᵢ, i < h, from records with the signal in the
/// last bin, which supplies m − 1 independent values per record.
pub fn validate_alpha_stats(
    params: &ScenarioParams,
    samples: usize,
    stream: &RandomStream,
) -> Result<AlphaReport> {
    if samples < 100 {
        return Err(Error::invalid("samples", format!("need >= 100 samples, got {samples}")));
    }
    let stats = derive_statistics(params)?;
    let last = params.num_bins - 1;

    let run = |h: usize, branch: u64| {
        (0..samples as u64)
            .into_par_iter()
            .map(|k| {
                let rec = simulate_heterodyne(params, h, &stream.child(branch).child(k))?;
                convert(&rec, params).map(|c| c.means)
            })
            .collect::<Result<Vec<_>>>()
    };

    let first = run(0, 0)?;
    let alpha: Vec<f64> = first.iter().map(|m| m[0].re).collect();
    let (alpha_mean, alpha_var) = mean_var(&alpha);

    let trailing = run(last, 1)?;
    let alpha0: Vec<Complex64> = trailing
        .iter()
        .flat_map(|m| m[..last].iter().copied())
        .collect();
    let (_, var_re) = mean_var(&alpha0.iter().map(|z| z.re).collect::<Vec<_>>());
    let (_, var_im) = mean_var(&alpha0.iter().map(|z| z.im).collect::<Vec<_>>());

    let cp2 = stats.c_pair * stats.c_pair;
    let alpha_var_expected = cp2 / (8.0 * stats.v_het);
    Ok(AlphaReport {
        samples,
        alpha_mean,
        alpha_se: (alpha_var / samples as f64).sqrt(),
        alpha_mean_expected: stats.alpha_one,
        alpha_var,
        alpha_var_expected,
        alpha0_var_re: var_re,
        alpha0_var_im: var_im,
        alpha0_var_expected: cp2 / (4.0 * stats.v_het),
        alpha0_count: alpha0.len(),
        fluctuation_to_noise: alpha_var_expected / stats.e_thermal,
    })
}

pub const ORACLE_TOL: f64 = 1e-12;
pub const IDEAL_LIMIT_TOL: f64 = 1e-10;

/// Largest |recursion − brute force| over m ∈ 2..=max_m and (p₁, p₂) on the
/// {0, 0.1, …, 0.9}² grid.
///
/// With `corrupt_q` the recursion runs on a deliberately wrong Q_n, which
/// must make the gate fail.
pub fn check_oracle_equivalence(max_m: usize, corrupt_q: bool) -> Result<Gate> {
    let grid: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
    let mut worst: f64 = 0.0;
    for m in 2..=max_m {
        for &p1 in &grid {
            for &p2 in &grid {
                let pair = BinaryErrorPair::new(p1, p2)?;
                let rec = if corrupt_q {
                    cn_error_recursive_with(m, &pair, corrupted_q)?
                } else {
                    cn_error_recursive(m, &pair)?
                };
                let oracle = cn_error_bruteforce(m, &pair)?;
                worst = worst.max((rec - oracle).abs());
            }
        }
    }
    Ok(Gate::at_most("recursion_vs_bruteforce", worst, ORACLE_TOL))
}

fn corrupted_q(n: usize, pair: &BinaryErrorPair) -> f64 {
    0.9 * crate::theory::q_sequence(n, pair).unwrap_or(0.0)
}

/// Largest |recursion(0, e^{−α²}) − closed form| over m ∈ 2..=max_m and the
/// given α² values.
pub fn check_ideal_limit(max_m: usize, alpha_sq: &[f64], corrupt_q: bool) -> Result<Gate> {
    let mut worst: f64 = 0.0;
    for m in 2..=max_m {
        for &a2 in alpha_sq {
            let pair = BinaryErrorPair::new(0.0, (-a2).exp())?;
            let rec = if corrupt_q {
                cn_error_recursive_with(m, &pair, corrupted_q)?
            } else {
                cn_error_recursive(m, &pair)?
            };
            let exact = cn_error_ideal(m, a2.sqrt())?.exact;
            worst = worst.max((rec - exact).abs());
        }
    }
    Ok(Gate::at_most("ideal_limit_recursion", worst, IDEAL_LIMIT_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_gate_passes_and_detects_corruption() {
        assert!(check_oracle_equivalence(6, false).unwrap().pass);
        assert!(!check_oracle_equivalence(6, true).unwrap().pass);
    }

    #[test]
    fn ideal_gate() {
        let a2: Vec<f64> = (1..=200).map(|k| k as f64 / 10.0).collect();
        assert!(check_ideal_limit(64, &a2, false).unwrap().pass);
        assert!(!check_ideal_limit(8, &a2, true).unwrap().pass);
    }

    #[test]
    fn rejects_small_sample_counts() {
        let s = RandomStream::new(0);
        assert!(validate_orthogonality(100, 1.0, 99, &[0.1], &s).is_err());
        assert!(validate_orthogonality(1, 1.0, 100, &[0.1], &s).is_err());
        let p = ScenarioParams::new(0.1, 0.01, 10.0, 3, 30).unwrap();
        assert!(validate_alpha_stats(&p, 50, &s).is_err());
    }

    #[test]
    fn cauchy_schwarz_caps_overlaps() {
        let r = validate_orthogonality(16, 2.0, 200, &[1.0, 1.5], &RandomStream::new(4)).unwrap();
        for t in &r.tails {
            assert_eq!(t.freq_re, 0.0);
            assert_eq!(t.freq_im, 0.0);
            assert!(!t.violated);
        }
    }
}
