//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the optimized code paths it is meant to check:
//! the kernel oracles recompute every window from scratch, the interpreter
//! evaluates one (instrument, date) cell at a time, and the generator mirrors
//! the published xoshiro256++/SplitMix64 reference code.

pub mod gen;
pub mod interp;
pub mod learn;
pub mod oracle;
pub mod xoshiro;

/// Tiny deterministic generator for building fixtures without depending on
/// the crate under test.
#[derive(Debug, Clone)]
pub struct FixtureRng(xoshiro::Xoshiro256pp);

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        Self(xoshiro::Xoshiro256pp::from_seed_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n.max(1)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn series(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.range(lo, hi)).collect()
    }
}

/// Relative error with an absolute floor of 1 on the denominator.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Compares two series where `NaN` marks undefined entries. Returns the
/// largest relative error, or `Err` naming the first definedness mismatch.
pub fn compare_series(actual: &[f64], expected: &[f64]) -> Result<f64, String> {
    if actual.len() != expected.len() {
        return Err(format!("length {} vs {}", actual.len(), expected.len()));
    }
    let mut worst = 0.0f64;
    for (t, (a, e)) in actual.iter().zip(expected).enumerate() {
        match (a.is_nan(), e.is_nan()) {
            (true, true) => {}
            (false, false) => worst = worst.max(rel_err(*a, *e)),
            _ => return Err(format!("definedness differs at {t}: {a} vs {e}")),
        }
    }
    Ok(worst)
}
