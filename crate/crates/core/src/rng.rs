//! Hierarchical, counter-based random streams.
//!
//! A [`RandomStream`] is an immutable token `(master_seed, path)`. The ChaCha8
//! key is a SHA-256 digest of the token, so every path addresses its own
//! generator and results do not depend on the order in which trials run.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RandomStream {
    master_seed: u64,
    path: Vec<u64>,
}

impl RandomStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Substream one level below this one. The parent is left untouched.
    pub fn child(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    /// Substream addressed by a textual label, e.g. `"heterodyne"`.
    pub fn labelled(&self, label: &str) -> Self {
        let digest = Sha256::digest(label.as_bytes());
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        self.child(u64::from_le_bytes(word))
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(b"ctdnull/stream/v1");
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update((self.path.len() as u64).to_le_bytes());
        for p in &self.path {
            hasher.update(p.to_le_bytes());
        }
        let mut key = [0u8; 32];
        key.copy_from_slice(&hasher.finalize());
        ChaCha8Rng::from_seed(key)
    }
}

/// Draws `length` circularly-symmetric complex Gaussians whose real and
/// imaginary parts each have variance `var_per_quadrature`.
pub fn sample_complex_gaussian(
    stream: &RandomStream,
    var_per_quadrature: f64,
    length: usize,
) -> Result<Vec<Complex64>> {
    let mut rng = stream.rng();
    fill_complex_gaussian(&mut rng, var_per_quadrature, length)
}

pub(crate) fn fill_complex_gaussian<R: rand::Rng + ?Sized>(
    rng: &mut R,
    var_per_quadrature: f64,
    length: usize,
) -> Result<Vec<Complex64>> {
    if !(var_per_quadrature > 0.0 && var_per_quadrature.is_finite()) {
        return Err(Error::invalid(
            "var_per_quadrature",
            format!("variance must be positive, got {var_per_quadrature}"),
        ));
    }
    if length == 0 {
        return Err(Error::invalid("length", "vector length must be >= 1"));
    }
    let sigma = var_per_quadrature.sqrt();
    Ok((0..length)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect())
}
