//! Blow-up profiles `U(t, x) = (-αt + φ(x))^{-1/α}`.
//!
//! `φ` is either a single power `A|x|^k` or the product `c Π_j |x - x_j|^{k_j}`.
//! Both are evaluated through [`Jet`], which carries exact derivatives up to
//! order three, so every derivative of `U` used by the diagnostics is closed
//! form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ProfileError;
use crate::field::{self, ComplexField, Grid, MAX_GRID_DIM};
use crate::model::ModelParams;

/// Highest dimension the jet arithmetic supports.
pub const MAX_DIM: usize = 4;

/// Value and all partial derivatives up to order three at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub dim: usize,
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
    pub third: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Jet {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            dim,
            value,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
            third: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM],
        }
    }

    /// Jet of `|y|^k` for `k > 3`; all derivatives vanish at `y = 0`.
    pub fn radial_power(y: &[f64], k: f64) -> Self {
        let dim = y.len();
        let mut jet = Self::constant(dim, 0.0);
        let r2: f64 = y.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return jet;
        }
        let r = r2.sqrt();
        // c1 = k r^{k-2}, c2 = k(k-2) r^{k-4}, c3 = k(k-2)(k-4) r^{k-6}
        let rk = r.powf(k);
        let c1 = k * rk / r2;
        let c2 = k * (k - 2.0) * rk / (r2 * r2);
        let c3 = k * (k - 2.0) * (k - 4.0) * rk / (r2 * r2 * r2);
        jet.value = rk;
        for i in 0..dim {
            jet.grad[i] = c1 * y[i];
            for j in 0..dim {
                let dij = if i == j { 1.0 } else { 0.0 };
                jet.hess[i][j] = c1 * dij + c2 * y[i] * y[j];
                for l in 0..dim {
                    let dil = if i == l { 1.0 } else { 0.0 };
                    let djl = if j == l { 1.0 } else { 0.0 };
                    jet.third[i][j][l] =
                        c2 * (dij * y[l] + dil * y[j] + djl * y[i]) + c3 * y[i] * y[j] * y[l];
                }
            }
        }
        jet
    }

    pub fn scaled(mut self, c: f64) -> Self {
        let n = self.dim;
        self.value *= c;
        for i in 0..n {
            self.grad[i] *= c;
            for j in 0..n {
                self.hess[i][j] *= c;
                for l in 0..n {
                    self.third[i][j][l] *= c;
                }
            }
        }
        self
    }

    /// Leibniz rule for the product of two jets.
    pub fn mul(&self, other: &Self) -> Self {
        let (f, g) = (self, other);
        let n = f.dim;
        let mut out = Self::constant(n, f.value * g.value);
        for i in 0..n {
            out.grad[i] = f.grad[i] * g.value + f.value * g.grad[i];
            for j in 0..n {
                out.hess[i][j] = f.hess[i][j] * g.value
                    + f.grad[i] * g.grad[j]
                    + f.grad[j] * g.grad[i]
                    + f.value * g.hess[i][j];
                for l in 0..n {
                    out.third[i][j][l] = f.third[i][j][l] * g.value
                        + f.hess[i][j] * g.grad[l]
                        + f.hess[i][l] * g.grad[j]
                        + f.hess[j][l] * g.grad[i]
                        + f.grad[i] * g.hess[j][l]
                        + f.grad[j] * g.hess[i][l]
                        + f.grad[l] * g.hess[i][j]
                        + f.value * g.third[i][j][l];
                }
            }
        }
        out
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.dim).map(|i| self.hess[i][i]).sum()
    }

    pub fn grad_norm_sqr(&self) -> f64 {
        self.grad[..self.dim].iter().map(|g| g * g).sum()
    }

    /// Component `l` of `∇Δφ`.
    pub fn grad_laplacian(&self, l: usize) -> f64 {
        (0..self.dim).map(|i| self.third[i][i][l]).sum()
    }

    /// Component `l` of `∇|∇φ|²`.
    pub fn grad_of_grad_norm_sqr(&self, l: usize) -> f64 {
        2.0 * (0..self.dim)
            .map(|i| self.grad[i] * self.hess[i][l])
            .sum::<f64>()
    }

    /// `|D^β φ|` for every multi-index of the given order (sorted index tuples).
    pub fn derivative_magnitudes(&self, order: usize) -> Vec<f64> {
        let n = self.dim;
        let mut out = Vec::new();
        match order {
            0 => out.push(self.value.abs()),
            1 => out.extend(self.grad[..n].iter().map(|v| v.abs())),
            2 => {
                for i in 0..n {
                    for j in i..n {
                        out.push(self.hess[i][j].abs());
                    }
                }
            }
            3 => {
                for i in 0..n {
                    for j in i..n {
                        for l in j..n {
                            out.push(self.third[i][j][l].abs());
                        }
                    }
                }
            }
            _ => {}
        }
        out
    }
}

/// Shape of `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileForm {
    /// `φ(x) = A|x|^k`, one blow-up point at the origin.
    PowerLaw { amplitude: f64, k: f64 },
    /// `φ(x) = c Π_j |x - x_j|^{k_j}`.
    MultiPoint {
        points: Vec<Vec<f64>>,
        exponents: Vec<f64>,
        scale: f64,
    },
}

/// Everything needed to build `φ` and `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub params: ModelParams,
    pub form: ProfileForm,
    /// Minimal half-separation of the blow-up points; also the outer probe radius.
    pub rho: f64,
}

impl ProfileSpec {
    pub fn power_law(params: ModelParams, amplitude: f64, k: f64) -> Self {
        Self {
            params,
            form: ProfileForm::PowerLaw { amplitude, k },
            rho: 1.0,
        }
    }

    pub fn multi_point(
        params: ModelParams,
        points: Vec<Vec<f64>>,
        exponents: Vec<f64>,
        scale: f64,
        rho: f64,
    ) -> Self {
        Self {
            params,
            form: ProfileForm::MultiPoint {
                points,
                exponents,
                scale,
            },
            rho,
        }
    }

    /// Half of the smallest pairwise distance between blow-up points, or 1 for
    /// a single point.
    pub fn default_rho(form: &ProfileForm) -> f64 {
        match form {
            ProfileForm::PowerLaw { .. } => 1.0,
            ProfileForm::MultiPoint { points, .. } => {
                let mut best = f64::INFINITY;
                for (a, p) in points.iter().enumerate() {
                    for q in &points[a + 1..] {
                        best = best.min(field::distance(p, q));
                    }
                }
                if best.is_finite() {
                    0.5 * best
                } else {
                    1.0
                }
            }
        }
    }

    /// Blow-up points `x_j`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match &self.form {
            ProfileForm::PowerLaw { .. } => vec![vec![0.0; self.params.dimension()]],
            ProfileForm::MultiPoint { points, .. } => points.clone(),
        }
    }

    /// Local exponents `k_j` in the order given.
    pub fn exponents(&self) -> Vec<f64> {
        match &self.form {
            ProfileForm::PowerLaw { k, .. } => vec![*k],
            ProfileForm::MultiPoint { exponents, .. } => exponents.clone(),
        }
    }

    pub fn k_min(&self) -> f64 {
        self.exponents().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn k_max(&self) -> f64 {
        self.exponents()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Growth exponent at infinity: `k` for a single power, `Σ k_j` for a product.
    pub fn nu(&self) -> f64 {
        self.exponents().iter().sum()
    }

    /// Structural conditions, in the order they are reported.
    pub fn structural_checks(&self) -> Vec<HypothesisCheck> {
        let n = self.params.dimension();
        let alpha = self.params.alpha();
        let critical = n as f64 * alpha / 2.0;
        let ks = self.exponents();
        let points = self.points();
        let mut checks = Vec::new();
        let mut push = |name: &str, passed: bool, detail: String| {
            checks.push(HypothesisCheck {
                name: name.to_string(),
                passed,
                detail,
            })
        };
        match &self.form {
            ProfileForm::PowerLaw { amplitude, .. } => {
                push(
                    "A > 0",
                    *amplitude > 0.0 && amplitude.is_finite(),
                    format!("A = {amplitude}"),
                );
            }
            ProfileForm::MultiPoint {
                scale,
                exponents,
                points,
            } => {
                push(
                    "J >= 1",
                    !points.is_empty(),
                    format!("J = {}", points.len()),
                );
                push(
                    "one exponent per point",
                    exponents.len() == points.len(),
                    format!("{} points, {} exponents", points.len(), exponents.len()),
                );
                push(
                    "c > 0",
                    *scale > 0.0 && scale.is_finite(),
                    format!("c = {scale}"),
                );
            }
        }
        let dims_ok = points
            .iter()
            .all(|p| p.len() == n && p.iter().all(|v| v.is_finite()));
        push("points lie in R^N", dims_ok, format!("N = {n}"));
        let ks_finite = !ks.is_empty() && ks.iter().all(|k| k.is_finite());
        push("exponents finite", ks_finite, format!("k = {ks:?}"));
        push(
            "k_j > 0",
            ks.iter().all(|k| *k > 0.0),
            format!("k = {ks:?}"),
        );
        let sorted = ks.windows(2).all(|w| w[0] <= w[1]);
        push("k_1 <= ... <= k_J", sorted, format!("k = {ks:?}"));
        let k1 = ks.first().copied().unwrap_or(f64::NAN);
        let kj = ks.last().copied().unwrap_or(f64::NAN);
        push("k_1 > 10", k1 > 10.0, format!("k_1 = {k1}"));
        push(
            "k_J > N*alpha/2",
            kj > critical,
            format!("k_J = {kj}, N*alpha/2 = {critical}"),
        );
        push(
            "rho > 0",
            self.rho > 0.0 && self.rho.is_finite(),
            format!("rho = {}", self.rho),
        );
        let mut min_sep = f64::INFINITY;
        if dims_ok {
            for (a, p) in points.iter().enumerate() {
                for q in &points[a + 1..] {
                    min_sep = min_sep.min(field::distance(p, q));
                }
            }
        }
        push(
            "|x_j - x_l| >= 2*rho",
            min_sep >= 2.0 * self.rho,
            format!("min separation = {min_sep}, 2*rho = {}", 2.0 * self.rho),
        );
        let nu = self.nu();
        push("nu > N*alpha/2", nu > critical, format!("nu = {nu}"));
        checks
    }

    /// First failing structural condition.
    pub fn validate(&self) -> Result<(), ProfileError> {
        self.first_failure(|_| true)
    }

    /// First failing condition among those needed for `φ` to be a positive
    /// function vanishing exactly at the points.
    pub fn validate_shape(&self) -> Result<(), ProfileError> {
        self.first_failure(is_shape_condition)
    }

    fn first_failure(&self, select: impl Fn(&str) -> bool) -> Result<(), ProfileError> {
        match self
            .structural_checks()
            .into_iter()
            .find(|c| !c.passed && select(&c.name))
        {
            Some(c) => Err(ProfileError::Hypothesis {
                condition: c.name,
                detail: c.detail,
            }),
            None => Ok(()),
        }
    }
}

/// Whether a structural condition is a well-formedness requirement rather
/// than a hypothesis that can be overridden.
pub fn is_shape_condition(name: &str) -> bool {
    matches!(
        name,
        "A > 0"
            | "J >= 1"
            | "one exponent per point"
            | "c > 0"
            | "points lie in R^N"
            | "exponents finite"
            | "k_j > 0"
    )
}

/// The scalar field `φ` with closed-form derivatives up to order three.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    dim: usize,
    scale: f64,
    factors: Vec<(Vec<f64>, f64)>,
}

impl Phi {
    /// Builds `φ`, rejecting specs that violate a structural condition.
    pub fn build(spec: &ProfileSpec) -> Result<Self, ProfileError> {
        spec.validate()?;
        Ok(Self::assemble(spec))
    }

    fn assemble(spec: &ProfileSpec) -> Self {
        let scale = match &spec.form {
            ProfileForm::PowerLaw { amplitude, .. } => *amplitude,
            ProfileForm::MultiPoint { scale, .. } => *scale,
        };
        Self {
            dim: spec.params.dimension(),
            scale,
            factors: spec.points().into_iter().zip(spec.exponents()).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = [0.0; MAX_DIM];
        let mut acc = Jet::constant(self.dim, self.scale);
        for (center, k) in &self.factors {
            for i in 0..self.dim {
                y[i] = x[i] - center[i];
            }
            acc = acc.mul(&Jet::radial_power(&y[..self.dim], *k));
        }
        acc
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.scale;
        for (center, k) in &self.factors {
            v *= field::distance(x, center).powf(*k);
        }
        v
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.factors.iter().map(|(c, _)| c.as_slice())
    }
}

/// Closed-form derivatives of `U` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UDerivatives {
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub laplacian: f64,
    pub grad_laplacian: [f64; MAX_DIM],
    /// `∂_t U = U^{α+1}`.
    pub time: f64,
}

/// Grid samples of `∇U`, `ΔU`, `∇ΔU` and `∂_t U`.
#[derive(Debug, Clone, PartialEq)]
pub struct UDerivativeFields {
    pub grad: Vec<ComplexField>,
    pub laplacian: ComplexField,
    pub grad_laplacian: Vec<ComplexField>,
    pub time: ComplexField,
}

/// A validated profile: spec plus built `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    spec: ProfileSpec,
    phi: Phi,
}

impl Profile {
    pub fn new(spec: ProfileSpec) -> Result<Self, ProfileError> {
        let phi = Phi::build(&spec)?;
        Ok(Self { spec, phi })
    }

    /// Builds `U` when only the shape conditions hold, for runs outside the
    /// hypotheses.
    pub fn forced(spec: ProfileSpec) -> Result<Self, ProfileError> {
        spec.validate_shape()?;
        let phi = Phi::assemble(&spec);
        Ok(Self { spec, phi })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.spec.params.alpha()
    }

    fn check_time(t: f64) -> Result<(), ProfileError> {
        if t < 0.0 {
            Ok(())
        } else {
            Err(ProfileError::NonNegativeTime(t))
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ProfileError> {
        if x.len() != self.phi.dim {
            return Err(ProfileError::PointDimension {
                expected: self.phi.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `U(t, x)`.
    pub fn u(&self, t: f64, x: &[f64]) -> Result<f64, ProfileError> {
        Self::check_time(t)?;
        self.check_point(x)?;
        Ok(self.u_unchecked(t, x))
    }

    fn u_unchecked(&self, t: f64, x: &[f64]) -> f64 {
        let a = self.alpha();
        (-a * t + self.phi.value(x)).powf(-1.0 / a)
    }

    /// Limit profile `φ(x)^{-1/α}` (infinite at the blow-up points).
    pub fn limit(&self, x: &[f64]) -> f64 {
        self.phi.value(x).powf(-1.0 / self.alpha())
    }

    /// Limit profile and its gradient.
    pub fn limit_with_gradient(&self, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
        let a = self.alpha();
        let jet = self.phi.jet(x);
        let f = jet.value.powf(-1.0 / a);
        let coeff = -f / (a * jet.value);
        let mut grad = [0.0; MAX_DIM];
        for (g, d) in grad.iter_mut().zip(&jet.grad[..jet.dim]) {
            *g = coeff * d;
        }
        (f, grad)
    }

    /// `U`, `∇U`, `ΔU`, `∇ΔU` and `∂_t U` from the closed-form expressions in `φ`.
    pub fn derivatives(&self, t: f64, x: &[f64]) -> Result<UDerivatives, ProfileError> {
        Self::check_time(t)?;
        self.check_point(x)?;
        Ok(self.derivatives_unchecked(t, x))
    }

    fn derivatives_unchecked(&self, t: f64, x: &[f64]) -> UDerivatives {
        let a = self.alpha();
        let jet = self.phi.jet(x);
        let u = (-a * t + jet.value).powf(-1.0 / a);
        let ua = u.powf(a);
        let u_a1 = u * ua; // U^{α+1}
        let u_2a1 = u_a1 * ua; // U^{2α+1}
        let u_3a1 = u_2a1 * ua; // U^{3α+1}
        let lap_phi = jet.laplacian();
        let g2 = jet.grad_norm_sqr();
        let c1 = -1.0 / a;
        let c2 = (a + 1.0) / (a * a);
        let c3 = -(a + 1.0) * (2.0 * a + 1.0) / (a * a * a);
        let mut grad = [0.0; MAX_DIM];
        let mut grad_lap = [0.0; MAX_DIM];
        for l in 0..jet.dim {
            grad[l] = c1 * u_a1 * jet.grad[l];
            grad_lap[l] = c1 * u_a1 * jet.grad_laplacian(l)
                + c2 * u_2a1 * (lap_phi * jet.grad[l] + jet.grad_of_grad_norm_sqr(l))
                + c3 * u_3a1 * g2 * jet.grad[l];
        }
        UDerivatives {
            value: u,
            grad,
            laplacian: c1 * u_a1 * lap_phi + c2 * u_2a1 * g2,
            grad_laplacian: grad_lap,
            time: u_a1,
        }
    }

    /// `U(t)` sampled on a grid.
    pub fn field(&self, t: f64, grid: &Grid) -> Result<ComplexField, ProfileError> {
        Self::check_time(t)?;
        self.check_point(&vec![0.0; grid.dimension])?;
        Ok(ComplexField::inject(grid, |x| {
            Complex64::new(self.u_unchecked(t, x), 0.0)
        }))
    }

    pub fn derivative_fields(
        &self,
        t: f64,
        grid: &Grid,
    ) -> Result<UDerivativeFields, ProfileError> {
        Self::check_time(t)?;
        self.check_point(&vec![0.0; grid.dimension])?;
        let n = grid.dimension;
        let mut grad = vec![Vec::with_capacity(grid.len()); n];
        let mut grad_lap = vec![Vec::with_capacity(grid.len()); n];
        let mut lap = Vec::with_capacity(grid.len());
        let mut time = Vec::with_capacity(grid.len());
        let mut x = [0.0; MAX_GRID_DIM];
        let re = |v: f64| Complex64::new(v, 0.0);
        for idx in 0..grid.len() {
            grid.coordinates_into(idx, &mut x);
            let d = self.derivatives_unchecked(t, &x[..n]);
            for l in 0..n {
                grad[l].push(re(d.grad[l]));
                grad_lap[l].push(re(d.grad_laplacian[l]));
            }
            lap.push(re(d.laplacian));
            time.push(re(d.time));
        }
        let wrap = |v: Vec<Complex64>| {
            ComplexField::from_values(grid, v).expect("finite closed-form values")
        };
        Ok(UDerivativeFields {
            grad: grad.into_iter().map(wrap).collect(),
            laplacian: wrap(lap),
            grad_laplacian: grad_lap.into_iter().map(wrap).collect(),
            time: wrap(time),
        })
    }

    /// `‖U(t)‖_{L∞} = (-αt)^{-1/α}`, attained at the blow-up points.
    pub fn sup_norm(&self, t: f64) -> f64 {
        let a = self.alpha();
        (-a * t).powf(-1.0 / a)
    }

    /// Width `(-t)^{1/k_1}` of the narrowest blow-up core at time `t`.
    pub fn core_width(&self, t: f64) -> f64 {
        (-t).powf(1.0 / self.spec.k_min())
    }
}

/// Exponents of `(-t)` governing the growth of the profile norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTargets {
    /// `‖U‖_{L²} ~ (-t)^{-l2_exponent}`, `1/α - N/(2k_J)`.
    pub l2_exponent: f64,
    /// `‖∇U‖_{L²} ~ (-t)^{-grad_exponent}`, `1/α + θ`.
    pub grad_exponent: f64,
    /// `(2-N)/(2k_J)` for N = 1, 2 and `(2-N)/(2k_1)` for N = 3, 4.
    pub theta: f64,
    /// Bound on `‖ΔU‖_{L²}`: `1/α + (4-N)/(2k_1)`.
    pub laplacian_bound_exponent: f64,
    /// Bound on `‖∇ΔU‖_{L²}`: `1/α + (6-N)/(2k_1)`.
    pub grad_laplacian_bound_exponent: f64,
    /// Bound on `‖U‖_{L∞}`: `1/α`.
    pub linf_exponent: f64,
    /// Bound on `‖∇U‖_{L∞}`: `1/α + 1/k_1`.
    pub grad_linf_exponent: f64,
}

pub fn theoretical_exponents(spec: &ProfileSpec) -> RateTargets {
    let n = spec.params.dimension() as f64;
    let inv_a = 1.0 / spec.params.alpha();
    let (k1, kj) = (spec.k_min(), spec.k_max());
    let theta = if spec.params.dimension() <= 2 {
        (2.0 - n) / (2.0 * kj)
    } else {
        (2.0 - n) / (2.0 * k1)
    };
    RateTargets {
        l2_exponent: inv_a - n / (2.0 * kj),
        grad_exponent: inv_a + theta,
        theta,
        laplacian_bound_exponent: inv_a + (4.0 - n) / (2.0 * k1),
        grad_laplacian_bound_exponent: inv_a + (6.0 - n) / (2.0 * k1),
        linf_exponent: inv_a,
        grad_linf_exponent: inv_a + 1.0 / k1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Structural and sampled checks on `φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    /// Measured `η_{j,0}` (ratio at the smallest probe radius, averaged over directions).
    pub eta0: Vec<f64>,
    /// Per point and order `|β| = 1, 2, 3`: largest local ratio seen.
    pub local_ratio_max: Vec<[f64; 3]>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Number of halvings of `ρ` used for the local probes.
pub const LOCAL_PROBE_LEVELS: i32 = 12;

fn probe_directions(dim: usize) -> Vec<[f64; MAX_DIM]> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        let mut e = [0.0; MAX_DIM];
        e[i] = 1.0;
        dirs.push(e);
        e[i] = -1.0;
        dirs.push(e);
    }
    if dim > 1 {
        let s = 1.0 / (dim as f64).sqrt();
        dirs.push([s; MAX_DIM]);
        // A fixed oblique direction that is not a lattice diagonal.
        let raw = [0.8, -0.45, 0.3, -0.25];
        let n: f64 = raw[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut d = [0.0; MAX_DIM];
        for i in 0..dim {
            d[i] = raw[i] / n;
        }
        dirs.push(d);
    }
    for d in dirs.iter_mut() {
        for v in d[dim..].iter_mut() {
            *v = 0.0;
        }
    }
    dirs
}

/// Checks the structural conditions and samples `φ` for positivity, local
/// power behavior near each `x_j` and growth at infinity.
///
/// `tolerance` bounds the relative drift of `|y|^{-k_j} φ(x_j + y)` between
/// the two smallest probe radii. Ratios of higher derivatives are only
/// required to stay bounded: their limits depend on the direction of `y`.
pub fn check_hypotheses(spec: &ProfileSpec, tolerance: f64) -> HypothesisReport {
    let mut checks = spec.structural_checks();
    let mut report = HypothesisReport {
        checks: Vec::new(),
        eta0: Vec::new(),
        local_ratio_max: Vec::new(),
    };
    if checks.iter().any(|c| !c.passed) {
        report.checks = checks;
        return report;
    }
    let phi = Phi::build(spec).expect("structural checks passed");
    let dim = spec.params.dimension();
    let points = spec.points();
    let ks = spec.exponents();
    let nu = spec.nu();
    let dirs = probe_directions(dim);
    let mut x = [0.0; MAX_DIM];

    // Positivity on a probe lattice around all blow-up points.
    let reach = points.iter().map(|p| field::norm(p)).fold(0.0, f64::max) + 2.0 * spec.rho + 1.0;
    let per_axis = match dim {
        1 => 401usize,
        2 => 61,
        3 => 21,
        _ => 11,
    };
    let total = per_axis.pow(dim as u32);
    let mut min_phi = f64::INFINITY;
    let mut positive = true;
    for idx in 0..total {
        let mut rest = idx;
        for xi in x[..dim].iter_mut() {
            let i = rest % per_axis;
            rest /= per_axis;
            *xi = -reach + 2.0 * reach * i as f64 / (per_axis - 1) as f64;
        }
        let near = points
            .iter()
            .any(|p| field::distance(&x[..dim], p) < 1e-9 * (1.0 + field::norm(p)));
        if near {
            continue;
        }
        let v = phi.value(&x[..dim]);
        min_phi = min_phi.min(v);
        if !(v > 0.0) {
            positive = false;
        }
    }
    checks.push(HypothesisCheck {
        name: "phi > 0 away from x_j".into(),
        passed: positive,
        detail: format!("min over {total} probes = {min_phi:e}"),
    });

    // Local behavior near each x_j.
    let radii: Vec<f64> = (1..=LOCAL_PROBE_LEVELS)
        .map(|m| spec.rho * 0.5f64.powi(m))
        .collect();
    for (j, (center, &k)) in points.iter().zip(&ks).enumerate() {
        let mut ratios0 = vec![Vec::new(); radii.len()];
        let mut ratios_hi = vec![[0.0f64; 3]; radii.len()];
        for (m, &r) in radii.iter().enumerate() {
            for d in &dirs {
                for i in 0..dim {
                    x[i] = center[i] + r * d[i];
                }
                let jet = phi.jet(&x[..dim]);
                ratios0[m].push(r.powf(-k) * jet.value.abs());
                for order in 1..=3 {
                    let w = r.powf(-k + order as f64);
                    let worst = jet
                        .derivative_magnitudes(order)
                        .into_iter()
                        .fold(0.0, f64::max);
                    ratios_hi[m][order - 1] = ratios_hi[m][order - 1].max(w * worst);
                }
            }
        }
        let last = &ratios0[radii.len() - 1];
        let prev = &ratios0[radii.len() - 2];
        let eta = last.iter().sum::<f64>() / last.len() as f64;
        let lo = last.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = last.iter().cloned().fold(0.0, f64::max);
        let drift = last
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b).abs() / a.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        let spread = (hi - lo) / hi.max(f64::MIN_POSITIVE);
        report.eta0.push(eta);
        checks.push(HypothesisCheck {
            name: format!("local ratio beta=0 converges at x_{}", j + 1),
            passed: lo > 0.0 && lo.is_finite() && hi.is_finite() && drift <= tolerance && spread <= tolerance,
            detail: format!("eta_{},0 = {eta:.9}, range [{lo:e}, {hi:e}], drift {drift:.2e}, spread {spread:.2e}", j + 1),
        });
        let mid = radii.len() / 2;
        let mut max_by_order = [0.0f64; 3];
        let mut bounded = true;
        for order in 0..3 {
            let series: Vec<f64> = ratios_hi.iter().map(|r| r[order]).collect();
            let top = series.iter().cloned().fold(0.0, f64::max);
            max_by_order[order] = top;
            let tail = series[mid..].iter().cloned().fold(0.0, f64::max);
            let head = series[..mid].iter().cloned().fold(0.0, f64::max);
            if !top.is_finite() || tail > 2.0 * head + 1e-12 * top.max(1.0) {
                bounded = false;
            }
        }
        report.local_ratio_max.push(max_by_order);
        checks.push(HypothesisCheck {
            name: format!("local ratios 1<=|beta|<=3 bounded at x_{}", j + 1),
            passed: bounded,
            detail: format!(
                "max ratios |beta|=1,2,3: {:.4e}, {:.4e}, {:.4e}",
                max_by_order[0], max_by_order[1], max_by_order[2]
            ),
        });
    }

    // Growth at infinity: radii doubling from `reach` while |x|^ν stays finite.
    let r_cap = 10f64.powf(250.0 / nu);
    let mut far: Vec<f64> = Vec::new();
    let mut r = 2.0 * reach;
    while r <= r_cap && far.len() < 16 {
        far.push(r);
        r *= 2.0;
    }
    if far.len() < 2 {
        far = vec![2.0 * reach, 4.0 * reach];
    }
    let mut lower_series = Vec::new();
    let mut upper_series = Vec::new();
    for &r in &far {
        let mut lower = f64::INFINITY;
        let mut upper: f64 = 0.0;
        for d in &dirs {
            for i in 0..dim {
                x[i] = r * d[i];
            }
            let jet = phi.jet(&x[..dim]);
            let w = r.powf(-nu);
            lower = lower.min(w * jet.value);
            for order in 1..=3 {
                let worst = jet
                    .derivative_magnitudes(order)
                    .into_iter()
                    .fold(0.0, f64::max);
                upper = upper.max(w * worst);
            }
        }
        lower_series.push(lower);
        upper_series.push(upper);
    }
    let n_far = lower_series.len();
    let lower_last = lower_series[n_far - 1];
    let lower_prev = lower_series[n_far - 2];
    checks.push(HypothesisCheck {
        name: "liminf |x|^-nu phi > 0".into(),
        passed: lower_last > 0.0 && lower_last >= 0.5 * lower_prev,
        detail: format!("ratio at |x| = {:e}: {lower_last:e}", far[n_far - 1]),
    });
    let upper_first = upper_series[0];
    let upper_last = upper_series[n_far - 1];
    checks.push(HypothesisCheck {
        name: "limsup |x|^-nu |D^beta phi| < inf".into(),
        passed: upper_last.is_finite() && upper_last <= 2.0 * upper_first + 1e-12,
        detail: format!("ratio at |x| = {:e}: {upper_last:e}", far[n_far - 1]),
    });

    report.checks = checks;
    report
}
