//! Heterodyne sampling of the return bins and the correlation-to-displacement
//! conversion.
//!
//! After heterodyne detection of the `m` return bins, the idler modes sit in
//! displaced thermal states whose means are proportional to the conjugated
//! signal-bin outcome. A beamsplitter network whose first `m` rows are the
//! Gram-Schmidt basis of the outcomes concentrates that displacement into a
//! single output mode per candidate bin.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{fill_complex_gaussian, RandomStream};
use crate::stats::{derive_statistics, ScenarioParams};

/// Heterodyne outcomes r₁…r_m of the return bins, with the bin that actually
/// carried the signal (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct HeterodyneRecord {
    pub outcomes: Vec<Vec<Complex64>>,
    pub true_bin: usize,
}

impl HeterodyneRecord {
    pub fn num_bins(&self) -> usize {
        self.outcomes.len()
    }

    pub fn modes_per_bin(&self) -> usize {
        self.outcomes.first().map_or(0, Vec::len)
    }
}

/// Orthonormal rows produced by Gram-Schmidt, with the residual norms c_n.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    pub rows: Vec<Vec<Complex64>>,
    pub norms: Vec<f64>,
}

/// Idler-mode means after the beamsplitter array.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionOutput {
    /// (d′)₁…(d′)_m.
    pub means: Vec<Complex64>,
    /// Common thermal photon number E of every idler mode.
    pub thermal: f64,
    /// Gram-Schmidt norms c₁…c_m.
    pub norms: Vec<f64>,
}

/// Relative residual below which a Gram-Schmidt step is declared degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

// A residual that shrank below this fraction of its input norm gets a second
// projection pass.
const REORTHOGONALIZE_BELOW: f64 = 0.5;

/// Samples the heterodyne record of one trial.
///
/// The signal bin has per-quadrature variance (N_B + κN_S + 1)/2, the others
/// (N_B + 1)/2. Each bin draws from its own substream of `stream`.
pub fn simulate_heterodyne(
    params: &ScenarioParams,
    true_bin: usize,
    stream: &RandomStream,
) -> Result<HeterodyneRecord> {
    params.validate()?;
    if true_bin >= params.num_bins {
        return Err(Error::BinOutOfRange {
            index: true_bin,
            num_bins: params.num_bins,
        });
    }
    let signal_var = derive_statistics(params)?.v_het;
    let background_var = params.background_variance();
    let outcomes = (0..params.num_bins)
        .map(|bin| {
            let var = if bin == true_bin {
                signal_var
            } else {
                background_var
            };
            let mut rng = stream.child(bin as u64).rng();
            fill_complex_gaussian(&mut rng, var, params.modes_per_bin)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeterodyneRecord { outcomes, true_bin })
}

/// Hermitian inner product ⟨a, b⟩ = Σ conj(aₖ) bₖ.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

#[inline]
fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// v ← v − c·u
#[inline]
fn subtract_scaled(v: &mut [Complex64], u: &[Complex64], c: Complex64) {
    for (x, y) in v.iter_mut().zip(u) {
        *x -= c * y;
    }
}

/// Modified Gram-Schmidt in index order under the Hermitian inner product.
///
/// A second projection pass is applied when a residual loses more than half
/// of its norm. Norms are recorded before normalization.
pub fn gram_schmidt(outcomes: &[Vec<Complex64>]) -> Result<OrthoBasis> {
    let dim = match outcomes.first() {
        Some(v) => v.len(),
        None => return Err(Error::invalid("outcomes", "need at least one vector")),
    };
    if dim == 0 {
        return Err(Error::invalid("outcomes", "vectors must be non-empty"));
    }
    if outcomes.len() > dim {
        return Err(Error::invalid(
            "outcomes",
            format!("{} vectors cannot be orthonormal in dimension {dim}", outcomes.len()),
        ));
    }
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(outcomes.len());
    let mut norms = Vec::with_capacity(outcomes.len());
    for (index, r) in outcomes.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        let input_norm = norm(r);
        let mut v = r.clone();
        for u in &rows {
            let c = inner(u, &v);
            subtract_scaled(&mut v, u, c);
        }
        let mut residual = norm(&v);
        if residual < REORTHOGONALIZE_BELOW * input_norm {
            for u in &rows {
                let c = inner(u, &v);
                subtract_scaled(&mut v, u, c);
            }
            residual = norm(&v);
        }
        let threshold = DEGENERACY_THRESHOLD * input_norm;
        if !(residual >= threshold) || residual == 0.0 {
            return Err(Error::Degenerate {
                index,
                residual,
                threshold,
            });
        }
        let scale = residual.recip();
        v.iter_mut().for_each(|z| *z *= scale);
        rows.push(v);
        norms.push(residual);
    }
    Ok(OrthoBasis { rows, norms })
}

/// Correlation-to-displacement conversion of one heterodyne record.
///
/// The idler mean vector is d = (C_p/2v)·conj(r_h); output mode i carries
/// (d′)ᵢ = rowᵢᵀ·d, evaluated exactly from the Gram-Schmidt rows.
pub fn convert(record: &HeterodyneRecord, params: &ScenarioParams) -> Result<ConversionOutput> {
    let stats = derive_statistics(params)?;
    if record.num_bins() != params.num_bins {
        return Err(Error::DimensionMismatch {
            expected: params.num_bins,
            found: record.num_bins(),
        });
    }
    if record.true_bin >= record.num_bins() {
        return Err(Error::BinOutOfRange {
            index: record.true_bin,
            num_bins: record.num_bins(),
        });
    }
    if let Some(bad) = record
        .outcomes
        .iter()
        .find(|r| r.len() != params.modes_per_bin)
    {
        return Err(Error::DimensionMismatch {
            expected: params.modes_per_bin,
            found: bad.len(),
        });
    }
    let basis = gram_schmidt(&record.outcomes)?;
    let gain = stats.conditional_gain();
    let signal = &record.outcomes[record.true_bin];
    // rowᵀ·conj(r_h) = conj(⟨row, r_h⟩)
    let means = basis
        .rows
        .iter()
        .map(|row| gain * inner(row, signal).conj())
        .collect();
    Ok(ConversionOutput {
        means,
        thermal: stats.e_thermal,
        norms: basis.norms,
    })
}
