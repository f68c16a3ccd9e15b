//! Radio channel primitives: urban-macro pathloss, probabilistic LoS utility,
//! Nakagami-m small-scale fading, the imperfect-CSI composition and
//! maximum-ratio beams.
//!
//! All functions are pure given an injected random stream; callers own their
//! streams.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Large-scale propagation class of a BS-to-UAV link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkType {
    Los,
    Nlos,
}

/// Small-scale fading and CSI-quality parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
    /// Nakagami shape for LoS links.
    pub nakagami_m_los: f64,
    /// Nakagami shape for NLoS links (1 = Rayleigh).
    pub nakagami_m_nlos: f64,
    /// Correlation between the true channel and its estimate, in [0,1].
    pub csi_rho: f64,
    /// Mean fading power per antenna entry.
    pub mean_power: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 2.0,
            nakagami_m_los: 3.0,
            nakagami_m_nlos: 1.0,
            csi_rho: 0.75,
            mean_power: 1.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.carrier_ghz <= 0.0 {
            return Err(Error::Config("carrier frequency must be > 0".into()));
        }
        if self.nakagami_m_los < 0.5 || self.nakagami_m_nlos < 0.5 {
            return Err(Error::Config("Nakagami shape must be >= 0.5".into()));
        }
        if !(0.0..=1.0).contains(&self.csi_rho) {
            return Err(Error::Config("csi_rho must be in [0,1]".into()));
        }
        if self.mean_power <= 0.0 {
            return Err(Error::Config("mean_power must be > 0".into()));
        }
        Ok(())
    }

    pub fn shape_for(&self, link: LinkType) -> f64 {
        match link {
            LinkType::Los => self.nakagami_m_los,
            LinkType::Nlos => self.nakagami_m_nlos,
        }
    }
}

/// Fixed-length vector of complex channel or beam coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexVec(pub Vec<Complex64>);

impl ComplexVec {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    /// Standard basis vector `e_i`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unconjugated inner product `sum_i a_i * b_i` (row channel times column beam).
    pub fn dot(&self, rhs: &Self) -> Complex64 {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(&rhs.0).map(|(a, b)| a * b).sum()
    }

    /// Interleave `[re0, im0, re1, im1, ...]` into complex entries.
    pub fn from_interleaved(raw: &[f64]) -> Self {
        debug_assert_eq!(raw.len() % 2, 0);
        Self(
            raw.chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        for z in &self.0 {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }
}

/// Urban-macro pathloss in dB. `distance_m` is the 3D BS-DUE distance and
/// `due_height_m` the drone altitude (only used on the NLoS branch).
pub fn pathloss_db(
    link: LinkType,
    distance_m: f64,
    due_height_m: f64,
    carrier_ghz: f64,
) -> Result<f64> {
    if distance_m <= 0.0 {
        return Err(Error::Domain(format!(
            "pathloss needs a positive distance, got {distance_m}"
        )));
    }
    match link {
        LinkType::Los => Ok(28.0 + 22.0 * distance_m.log10() + 20.0 * carrier_ghz.log10()),
        LinkType::Nlos => {
            if due_height_m <= 1.0 {
                return Err(Error::Domain(format!(
                    "NLoS pathloss needs altitude > 1 m, got {due_height_m}"
                )));
            }
            Ok(-17.5
                + (46.0 - 7.0 * due_height_m.log10()) * distance_m.log10()
                + 20.0 * (40.0 * std::f64::consts::PI * carrier_ghz / 3.0).log10())
        }
    }
}

/// Occurrence probability of a LoS link at altitude `due_height_m` and
/// horizontal BS-DUE distance `horizontal_m`. Reference utility only; the
/// simulation path decides LoS geometrically against the building field.
pub fn prob_los(due_height_m: f64, horizontal_m: f64) -> Result<f64> {
    let h = due_height_m;
    if h > 100.0 && h <= 300.0 {
        return Ok(1.0);
    }
    if !(h > 22.5 && h <= 100.0) {
        return Err(Error::Domain(format!(
            "LoS probability is defined for altitudes in (22.5, 300] m, got {h}"
        )));
    }
    let r = horizontal_m;
    if r == 0.0 {
        return Ok(1.0);
    }
    let e1 = (460.0 * h.log10() - 700.0).max(18.0);
    let e2 = 4300.0 * h.log10() - 3800.0;
    let decay = (-r / e2).exp();
    Ok((e1 / r).min(1.0) * (1.0 - decay) + decay)
}

/// Vector with i.i.d. standard circularly-symmetric complex Gaussian entries.
pub fn complex_gaussian(n: usize, rng: &mut ChaCha8Rng) -> ComplexVec {
    let std = (0.5f64).sqrt();
    ComplexVec(
        (0..n)
            .map(|_| {
                Complex64::new(gaussian(rng) * std, gaussian(rng) * std)
            })
            .collect(),
    )
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the draw count per sample fixed, which keeps streams
    // aligned across configurations.
    let u1: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draw an M-entry small-scale fading vector: amplitudes Nakagami-m (power
/// Gamma with mean `mean_power`), phases uniform.
pub fn sample_fading(
    link: LinkType,
    n_antennas: usize,
    cfg: &ChannelConfig,
    rng: &mut ChaCha8Rng,
) -> ComplexVec {
    let m = cfg.shape_for(link);
    let gamma = Gamma::new(m, cfg.mean_power / m).expect("validated Nakagami shape");
    ComplexVec(
        (0..n_antennas)
            .map(|_| {
                let power: f64 = gamma.sample(rng);
                let phase: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                Complex64::from_polar(power.sqrt(), phase)
            })
            .collect(),
    )
}

/// Estimated channel, the composed true channel and the link class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsiSample {
    pub est: ComplexVec,
    pub truth: ComplexVec,
    pub link: LinkType,
}

/// Compose the true channel from an estimate:
/// `truth = sqrt(rho) * est + sqrt(1 - rho) * delta`, delta ~ CN(0, I).
pub fn compose_imperfect_csi(
    est: ComplexVec,
    link: LinkType,
    rho: f64,
    rng: &mut ChaCha8Rng,
) -> CsiSample {
    debug_assert!((0.0..=1.0).contains(&rho));
    let delta = complex_gaussian(est.len(), rng);
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    let truth = ComplexVec(
        est.0
            .iter()
            .zip(&delta.0)
            .map(|(e, d)| a * e + b * d)
            .collect(),
    );
    CsiSample { est, truth, link }
}

/// Maximum-ratio beam for channel `v`: `conj(v) / ||v||`, so that
/// `|v . mrt(v)| = ||v||` under the unconjugated product convention.
pub fn mrt(v: &ComplexVec) -> Result<ComplexVec> {
    let norm = v.norm();
    if norm <= 0.0 {
        return Err(Error::Domain("cannot beamform on a zero channel".into()));
    }
    Ok(ComplexVec(v.0.iter().map(|z| z.conj() / norm).collect()))
}
