//! Min-max scaling and polynomial feature expansion.

use serde::{Deserialize, Serialize};

/// Linear map taking the training range `[min, max]` onto `[-1, 1]`.
/// Values outside the training range extrapolate; a constant training
/// column maps everything to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn fit(column: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut it = column.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x)));
        Some(Self { min, max })
    }

    pub fn apply(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if span <= 0.0 {
            0.0
        } else {
            2.0 * (x - self.min) / span - 1.0
        }
    }
}

/// Exponent vectors of all monomials in `n_vars` variables with total
/// degree at most `degree`, graded by degree; the first entry is the
/// constant term.
pub fn monomials(n_vars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            compositions(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        compositions(d, n_vars, &mut Vec::with_capacity(n_vars), &mut out);
    }
    out
}

pub fn n_monomials(n_vars: usize, degree: u32) -> usize {
    // C(n + d, d)
    let (n, d) = (n_vars as u64, degree as u64);
    let mut c = 1u64;
    for i in 1..=d {
        c = c * (n + i) / i;
    }
    c as usize
}

pub fn expand(x: &[f64], exponents: &[Vec<u32>]) -> Vec<f64> {
    exponents
        .iter()
        .map(|e| e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product())
        .collect()
}
