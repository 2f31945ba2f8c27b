use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `n` i.i.d. circularly-symmetric complex Gaussian samples with total
/// variance `variance` (real and imaginary parts each `N(0, variance/2)`).
pub fn sample_cgauss<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    variance: f64,
) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Parameter(format!(
            "variance must be >= 0, got {variance}"
        )));
    }
    let sd = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect())
}

/// Unit-modulus entries with phases uniform on `[0, 2π)`.
pub fn sample_unit_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect()
}
