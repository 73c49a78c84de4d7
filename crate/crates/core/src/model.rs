//! Equation parameters and the pointwise nonlinearity `g(z) = |z|^α z`.
//!
//! Besides `g` itself this module carries its Wirtinger derivatives and the
//! pointwise inequalities the energy estimates rely on: the monotonicity of
//! `g` and the remainder bounds on `∂g(u+v) - ∂g(u) - ∂g(v)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Spatial dimension and nonlinearity power of `u_t = iΔu + |u|^α u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    dimension: usize,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelParams {
    dimension: usize,
    alpha: f64,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = ModelError;
    fn try_from(raw: RawModelParams) -> Result<Self, Self::Error> {
        ModelParams::new(raw.dimension, raw.alpha)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            dimension: p.dimension,
            alpha: p.alpha,
        }
    }
}

impl ModelParams {
    /// Admissible pairs satisfy `α ≥ 2` and `(N-2)α ≤ 4`, which forces `N ≤ 4`.
    pub fn new(dimension: usize, alpha: f64) -> Result<Self, ModelError> {
        if !alpha.is_finite() || alpha < 2.0 {
            return Err(ModelError::AlphaTooSmall(alpha));
        }
        if !(1..=4).contains(&dimension) {
            return Err(ModelError::Dimension(dimension));
        }
        // Small slack so that N=3, α=4 and N=4, α=2 are accepted despite rounding.
        if (dimension as f64 - 2.0) * alpha > 4.0 + 1e-12 {
            return Err(ModelError::Supercritical { dimension, alpha });
        }
        Ok(Self { dimension, alpha })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `g(z) = |z|^α z`, with `g(0) = 0`.
    pub fn nonlinearity(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        z * r.powf(self.alpha)
    }

    /// `(∂_z g, ∂_z̄ g) = ((α+2)/2 |z|^α, (α/2) |z|^{α-2} z²)`.
    pub fn wirtinger_derivatives(&self, z: Complex64) -> Wirtinger {
        let r = z.norm();
        if r == 0.0 {
            return Wirtinger::default();
        }
        let a = self.alpha;
        Wirtinger {
            dz: Complex64::new(0.5 * (a + 2.0) * r.powf(a), 0.0),
            dzbar: z * z * (0.5 * a * r.powf(a - 2.0)),
        }
    }

    /// `Re[(g(z1) - g(z2)) conj(z1 - z2)]`, nonnegative for every pair.
    pub fn monotonicity_gap(&self, z1: Complex64, z2: Complex64) -> f64 {
        ((self.nonlinearity(z1) - self.nonlinearity(z2)) * (z1 - z2).conj()).re
    }

    /// Ratios of the Wirtinger remainders to `|u|^{α-1}|v| + |v|^{α-1}|u|`.
    ///
    /// Returns `None` when the reference term vanishes (`u = 0` or `v = 0`),
    /// in which case both remainders vanish too.
    pub fn remainder_ratios(&self, u: Complex64, v: Complex64) -> Option<RemainderRatios> {
        let (ru, rv) = (u.norm(), v.norm());
        let reference = ru.powf(self.alpha - 1.0) * rv + rv.powf(self.alpha - 1.0) * ru;
        if reference == 0.0 {
            return None;
        }
        let w_sum = self.wirtinger_derivatives(u + v);
        let w_u = self.wirtinger_derivatives(u);
        let w_v = self.wirtinger_derivatives(v);
        Some(RemainderRatios {
            dz: (w_sum.dz - w_u.dz - w_v.dz).norm() / reference,
            dzbar: (w_sum.dzbar - w_u.dzbar - w_v.dzbar).norm() / reference,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wirtinger {
    pub dz: Complex64,
    pub dzbar: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderRatios {
    pub dz: f64,
    pub dzbar: f64,
}

/// Deterministic corpus of complex pairs with `|z| ≤ radius`.
pub fn sample_pairs(seed: u64, count: usize, radius: f64) -> Vec<(Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let r = radius * rng.gen::<f64>().sqrt();
        Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
    };
    (0..count)
        .map(|_| {
            let a = draw(&mut rng);
            (a, draw(&mut rng))
        })
        .collect()
}

/// Outcome of scanning a pair corpus with the pointwise inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalitySurvey {
    pub pairs: usize,
    /// Smallest monotonicity gap seen.
    pub min_gap: f64,
    /// Largest remainder ratio for `∂_z g`.
    pub max_dz_ratio: f64,
    /// Largest remainder ratio for `∂_z̄ g`.
    pub max_dzbar_ratio: f64,
}

pub fn survey_inequalities(
    params: &ModelParams,
    pairs: &[(Complex64, Complex64)],
) -> InequalitySurvey {
    let mut survey = InequalitySurvey {
        pairs: pairs.len(),
        min_gap: f64::INFINITY,
        max_dz_ratio: 0.0,
        max_dzbar_ratio: 0.0,
    };
    for &(z1, z2) in pairs {
        survey.min_gap = survey.min_gap.min(params.monotonicity_gap(z1, z2));
        if let Some(r) = params.remainder_ratios(z1, z2) {
            survey.max_dz_ratio = survey.max_dz_ratio.max(r.dz);
            survey.max_dzbar_ratio = survey.max_dzbar_ratio.max(r.dzbar);
        }
    }
    survey
}

/// Supremum of the remainder ratios estimated on a `resolution²` polar grid of
/// `u = 1`, `v = r e^{iθ}`, `r ∈ (0, 1]`, `θ ∈ [0, π]`. Both ratios are invariant
/// under common scaling, rotation, conjugation and swapping `u` and `v`, so this
/// covers every pair.
pub fn remainder_sup_scan(params: &ModelParams, resolution: usize) -> RemainderRatios {
    let mut sup = RemainderRatios {
        dz: 0.0,
        dzbar: 0.0,
    };
    let one = Complex64::new(1.0, 0.0);
    for i in 1..=resolution {
        let r = i as f64 / resolution as f64;
        for j in 0..=resolution {
            let theta = std::f64::consts::PI * j as f64 / resolution as f64;
            if let Some(q) = params.remainder_ratios(one, Complex64::from_polar(r, theta)) {
                sup.dz = sup.dz.max(q.dz);
                sup.dzbar = sup.dzbar.max(q.dzbar);
            }
        }
    }
    sup
}
