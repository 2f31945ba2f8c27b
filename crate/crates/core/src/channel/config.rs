use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Scenario parameters for one simulated reader/tag deployment.
///
/// Timing is kept in fractions of the coherence block (`tau = 1.0`), since
/// only `(tau - tau_c) / tau` enters the throughput. The pilot matrix always
/// spans `n_antennas` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n_antennas: usize,
    pub n_tags: usize,
    /// Side of the square deployment field (m); the reader sits at its center.
    pub field_side: f64,
    /// Transmit power budget (W).
    pub p_t: f64,
    /// Reader noise power during information decoding (W).
    pub sigma2_wr: f64,
    /// Tag noise power (W); only used when `include_tag_noise` is set.
    pub sigma2_wt: f64,
    /// Noise power during CE sub-phase (1a); `None` follows `sigma2_wr`.
    pub sigma2_w0: Option<f64>,
    /// Noise power during CE sub-phase (1b); `None` follows `sigma2_wr`.
    pub sigma2_w1: Option<f64>,
    /// Variance of each entry of the ambient-reflection matrix (W).
    pub sigma2_hu: f64,
    pub carrier_freq: f64,
    /// Path-loss exponent.
    pub rho: f64,
    /// Reflection amplitude in the silent state.
    pub a0: f64,
    /// Reflection amplitude in the active state.
    pub a1: f64,
    /// Mean modulation amplitude during decoding.
    pub a_bar: f64,
    pub tau: f64,
    /// Fraction of the block spent in sub-phase (1a); `None` = `tau / (10 (M + 1))`.
    pub tau_c0: Option<f64>,
    /// Per-tag fraction of sub-phase (1b); `None` = `tau / (10 (M + 1))`.
    pub tau_ck: Option<f64>,
    /// Randomization sample count; `None` = `10 N M`.
    pub k_samples: Option<usize>,
    pub it_max: usize,
    pub epsilon: f64,
    pub include_tag_noise: bool,
    pub seed: u64,
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_antennas: 4,
            n_tags: 4,
            field_side: 100.0,
            p_t: 1.0,
            sigma2_wr: dbm_to_watt(-140.0),
            sigma2_wt: 0.0,
            sigma2_w0: None,
            sigma2_w1: None,
            sigma2_hu: dbm_to_watt(-90.0),
            carrier_freq: 915e6,
            rho: 3.0,
            a0: 0.1,
            a1: 0.78,
            a_bar: 0.3162,
            tau: 1.0,
            tau_c0: None,
            tau_ck: None,
            k_samples: None,
            it_max: 15,
            epsilon: 1e-3,
            include_tag_noise: false,
            seed: 1,
        }
    }
}

/// Every key accepted in a config file, in emission order.
pub const CONFIG_KEYS: &[&str] = &[
    "N",
    "M",
    "L",
    "p_t",
    "sigma2_wR",
    "sigma2_wT",
    "sigma2_w0",
    "sigma2_w1",
    "sigma2_HU",
    "carrier_freq",
    "rho",
    "a0",
    "a1",
    "a_bar",
    "tau",
    "tau_c0",
    "tau_ck",
    "K",
    "it_max",
    "epsilon",
    "include_tag_noise",
    "seed",
];

const AUTO: &str = "auto";

fn parse_f64(key: &str, v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .map_err(|e| format!("{key}: cannot parse {v:?} as a number ({e})"))
}

fn parse_usize(key: &str, v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>()
        .map_err(|e| format!("{key}: cannot parse {v:?} as a count ({e})"))
}

fn parse_opt_f64(key: &str, v: &str) -> std::result::Result<Option<f64>, String> {
    if v == AUTO {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| AUTO.to_string(), T::to_string)
}

impl SimConfig {
    pub fn k_samples(&self) -> usize {
        self.k_samples.unwrap_or(10 * self.n_antennas * self.n_tags)
    }

    fn default_subphase(&self) -> f64 {
        self.tau / (10.0 * (self.n_tags as f64 + 1.0))
    }

    pub fn tau_c0(&self) -> f64 {
        self.tau_c0.unwrap_or_else(|| self.default_subphase())
    }

    pub fn tau_ck(&self) -> f64 {
        self.tau_ck.unwrap_or_else(|| self.default_subphase())
    }

    /// Total CE time `tau_c0 + M tau_ck`.
    pub fn tau_c(&self) -> f64 {
        self.tau_c0() + self.n_tags as f64 * self.tau_ck()
    }

    /// Throughput prefactor `(tau - tau_c) / tau`.
    pub fn rate_prefactor(&self) -> f64 {
        (self.tau - self.tau_c()) / self.tau
    }

    /// Normalized decoding noise power `sigma2_wR / a_bar²`.
    pub fn noise_bar(&self) -> f64 {
        self.sigma2_wr / (self.a_bar * self.a_bar)
    }

    pub fn sigma2_w0(&self) -> f64 {
        self.sigma2_w0.unwrap_or(self.sigma2_wr)
    }

    pub fn sigma2_w1(&self) -> f64 {
        self.sigma2_w1.unwrap_or(self.sigma2_wr)
    }

    /// Tag-side noise term added to the received power `q_k`.
    pub fn tag_noise(&self) -> f64 {
        if self.include_tag_noise {
            self.sigma2_wt
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.n_antennas == 0 || self.n_tags == 0 {
            return bad("N and M must be at least 1".into());
        }
        if !(self.p_t > 0.0) || !(self.sigma2_wr > 0.0) {
            return bad("p_t and sigma2_wR must be positive".into());
        }
        for (name, v) in [
            ("sigma2_wT", self.sigma2_wt),
            ("sigma2_w0", self.sigma2_w0()),
            ("sigma2_w1", self.sigma2_w1()),
            ("sigma2_HU", self.sigma2_hu),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.field_side > 0.0 && self.carrier_freq > 0.0 && self.rho > 0.0) {
            return bad("L, carrier_freq and rho must be positive".into());
        }
        if !(0.0 <= self.a0 && self.a0 < self.a1 && self.a1 <= 1.0) {
            return bad(format!(
                "need 0 <= a0 < a1 <= 1, got a0={} a1={}",
                self.a0, self.a1
            ));
        }
        if !(self.a_bar > 0.0) {
            return bad("a_bar must be positive".into());
        }
        if !(self.tau > 0.0 && self.tau_c0() > 0.0 && self.tau_ck() > 0.0) {
            return bad("tau, tau_c0, tau_ck must be positive".into());
        }
        if self.tau_c() > self.tau * (1.0 + 1e-12) {
            return bad(format!(
                "CE time {} exceeds the coherence block {}",
                self.tau_c(),
                self.tau
            ));
        }
        if self.k_samples() == 0 || self.it_max == 0 || !(self.epsilon > 0.0) {
            return bad("K, it_max and epsilon must be positive".into());
        }
        Ok(())
    }

    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "N" => self.n_antennas = parse_usize(key, v)?,
            "M" => self.n_tags = parse_usize(key, v)?,
            "L" => self.field_side = parse_f64(key, v)?,
            "p_t" => self.p_t = parse_f64(key, v)?,
            "sigma2_wR" => self.sigma2_wr = parse_f64(key, v)?,
            "sigma2_wT" => self.sigma2_wt = parse_f64(key, v)?,
            "sigma2_w0" => self.sigma2_w0 = parse_opt_f64(key, v)?,
            "sigma2_w1" => self.sigma2_w1 = parse_opt_f64(key, v)?,
            "sigma2_HU" => self.sigma2_hu = parse_f64(key, v)?,
            "carrier_freq" => self.carrier_freq = parse_f64(key, v)?,
            "rho" => self.rho = parse_f64(key, v)?,
            "a0" => self.a0 = parse_f64(key, v)?,
            "a1" => self.a1 = parse_f64(key, v)?,
            "a_bar" => self.a_bar = parse_f64(key, v)?,
            "tau" => self.tau = parse_f64(key, v)?,
            "tau_c0" => self.tau_c0 = parse_opt_f64(key, v)?,
            "tau_ck" => self.tau_ck = parse_opt_f64(key, v)?,
            "K" => {
                self.k_samples = if v == AUTO {
                    None
                } else {
                    Some(parse_usize(key, v)?)
                }
            }
            "it_max" => self.it_max = parse_usize(key, v)?,
            "epsilon" => self.epsilon = parse_f64(key, v)?,
            "include_tag_noise" => {
                self.include_tag_noise = v
                    .parse::<bool>()
                    .map_err(|_| format!("{key}: expected true/false, got {v:?}"))?
            }
            "seed" => {
                self.seed = v
                    .parse::<u64>()
                    .map_err(|e| format!("seed: cannot parse {v:?} ({e})"))?
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "N" => self.n_antennas.to_string(),
            "M" => self.n_tags.to_string(),
            "L" => self.field_side.to_string(),
            "p_t" => self.p_t.to_string(),
            "sigma2_wR" => self.sigma2_wr.to_string(),
            "sigma2_wT" => self.sigma2_wt.to_string(),
            "sigma2_w0" => fmt_opt(&self.sigma2_w0),
            "sigma2_w1" => fmt_opt(&self.sigma2_w1),
            "sigma2_HU" => self.sigma2_hu.to_string(),
            "carrier_freq" => self.carrier_freq.to_string(),
            "rho" => self.rho.to_string(),
            "a0" => self.a0.to_string(),
            "a1" => self.a1.to_string(),
            "a_bar" => self.a_bar.to_string(),
            "tau" => self.tau.to_string(),
            "tau_c0" => fmt_opt(&self.tau_c0),
            "tau_ck" => fmt_opt(&self.tau_ck),
            "K" => fmt_opt(&self.k_samples),
            "it_max" => self.it_max.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "include_tag_noise" => self.include_tag_noise.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Flat `key = value` text, one line per field.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap());
        }
        out
    }

    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: idx + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            cfg.set(key.trim(), value)
                .map_err(|msg| Error::Config { line: idx + 1, msg })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_kv_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_derived_quantities() {
        let c = SimConfig::default();
        assert_eq!(c.k_samples(), 160);
        assert!((c.tau_c() - 0.1).abs() < 1e-15);
        assert!((c.rate_prefactor() - 0.9).abs() < 1e-15);
        assert!((c.a_bar * c.a_bar - 0.09998).abs() < 1e-5);
        assert!((c.sigma2_wr - 1e-17).abs() < 1e-30);
        assert!((c.sigma2_hu - 1e-12).abs() < 1e-25);
        c.validate().unwrap();
    }

    #[test]
    fn kv_roundtrip_preserves_every_field() {
        let c = SimConfig {
            sigma2_w0: Some(3.5e-18),
            k_samples: Some(77),
            include_tag_noise: true,
            seed: 99,
            ..SimConfig::default()
        };
        let back = SimConfig::from_kv_str(&c.to_kv_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = SimConfig::from_kv_str("# header\nN = 4\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }));
        let err = SimConfig::from_kv_str("N 4").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        let err = SimConfig::from_kv_str("N = four").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
    }

    #[test]
    fn validation_catches_bad_reflections_and_timing() {
        let c = SimConfig {
            a0: 0.8,
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SimConfig {
            tau_ck: Some(0.5),
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
