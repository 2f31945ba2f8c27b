//! Scenario geometry, fading channels, ambient reflections, pilots, and the
//! tags' CE preamble for one coherence block.

mod config;

pub use config::{dbm_to_watt, watt_to_dbm, SimConfig, CONFIG_KEYS};

use std::f64::consts::PI;

use rand::Rng;

use crate::error::Result;
use crate::numerics::{sample_cgauss, CMatrix, Complex64, RMatrix};

pub const SPEED_OF_LIGHT: f64 = 3e8;
/// Reader–tag distances below this are clamped (far-field validity).
pub const MIN_DISTANCE: f64 = 1.0;

pub fn default_config() -> SimConfig {
    SimConfig::default()
}

/// True channels for one coherence block.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// Tag-to-reader channel vectors, one per tag.
    pub h: Vec<Vec<Complex64>>,
    /// Ambient-reflection (UAR) matrix.
    pub h_u: CMatrix,
    /// Average path gains.
    pub beta: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
}

impl ChannelRealization {
    pub fn n_antennas(&self) -> usize {
        self.h_u.rows()
    }

    pub fn n_tags(&self) -> usize {
        self.h.len()
    }

    pub fn mean_beta(&self) -> f64 {
        self.beta.iter().sum::<f64>() / self.beta.len() as f64
    }

    /// Channel vectors as the columns of an `N × M` matrix.
    pub fn h_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.h)
    }
}

/// `(c / 4πf)² max(d, 1)^(-ρ)`.
pub fn path_gain(distance: f64, carrier_freq: f64, rho: f64) -> f64 {
    let wl = SPEED_OF_LIGHT / (4.0 * PI * carrier_freq);
    wl * wl * distance.max(MIN_DISTANCE).powf(-rho)
}

/// Draws tag positions, path gains, fading channels, and the UAR matrix.
///
/// RNG consumption order: `(x, y)` for each tag, then `h_1 … h_M` (N samples
/// each), then the N×N entries of `H_U` in row-major order.
pub fn draw_realization<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (n, m) = (cfg.n_antennas, cfg.n_tags);
    let half = cfg.field_side / 2.0;
    let positions: Vec<[f64; 2]> = (0..m)
        .map(|_| [rng.gen_range(-half..=half), rng.gen_range(-half..=half)])
        .collect();
    let beta: Vec<f64> = positions
        .iter()
        .map(|p| path_gain(p[0].hypot(p[1]), cfg.carrier_freq, cfg.rho))
        .collect();
    let h = beta
        .iter()
        .map(|&b| sample_cgauss(rng, n, b))
        .collect::<Result<Vec<_>>>()?;
    let h_u = CMatrix::from_vec(n, n, sample_cgauss(rng, n * n, cfg.sigma2_hu)?)?;
    Ok(ChannelRealization {
        h,
        h_u,
        beta,
        positions,
    })
}

/// Orthogonal pilots transmitted over `N` samples, one per antenna.
#[derive(Clone, Debug)]
pub struct PilotMatrix {
    pub s: CMatrix,
}

impl PilotMatrix {
    /// Pilot length in samples (equals the antenna count).
    pub fn samples(&self) -> usize {
        self.s.cols()
    }
}

/// `S = sqrt(p_t τ_c0 / N²) · D` with `D` the (symmetric) N-point DFT matrix
/// and `τ_c0 = N`, so that `S Sᴴ = (p_t / N) τ_c0 I`.
pub fn make_pilots(cfg: &SimConfig) -> PilotMatrix {
    let n = cfg.n_antennas;
    let samples = n as f64;
    let amp = (cfg.p_t * samples / (n * n) as f64).sqrt();
    let s = CMatrix::from_fn(n, n, |i, j| {
        let phase = -2.0 * PI * ((i * j) % n) as f64 / n as f64;
        Complex64::from_polar(amp, phase)
    });
    PilotMatrix { s }
}

/// Tags' CE preamble: column `k` is the reflection pattern while tag `k` is
/// active (`a1` on the diagonal, `a0` elsewhere).
#[derive(Clone, Debug)]
pub struct PreambleMatrix {
    pub a: RMatrix,
}

pub fn make_preamble(cfg: &SimConfig) -> PreambleMatrix {
    let m = cfg.n_tags;
    PreambleMatrix {
        a: RMatrix::from_fn(m, m, |i, j| if i == j { cfg.a1 } else { cfg.a0 }),
    }
}
