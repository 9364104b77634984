//! Physical parameters, derived constants and sector geometry.

use crate::error::{NskError, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Physical coefficients of the linearized system.
///
/// Construct with [`FluidParams::new`] or deserialize from JSON; both paths
/// reject inadmissible sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct FluidParams {
    pub mu: f64,
    pub nu: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub gamma_star: f64,
    pub rho_star: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    mu: f64,
    nu: f64,
    kappa: f64,
    sigma: f64,
    #[serde(default)]
    gamma_star: f64,
    #[serde(default = "one")]
    rho_star: f64,
    #[serde(default = "two")]
    dimension: usize,
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}

impl TryFrom<RawParams> for FluidParams {
    type Error = NskError;
    fn try_from(r: RawParams) -> Result<Self> {
        FluidParams::new(r.mu, r.nu, r.kappa, r.sigma, r.gamma_star, r.rho_star, r.dimension)
    }
}

impl From<FluidParams> for RawParams {
    fn from(p: FluidParams) -> Self {
        RawParams {
            mu: p.mu,
            nu: p.nu,
            kappa: p.kappa,
            sigma: p.sigma,
            gamma_star: p.gamma_star,
            rho_star: p.rho_star,
            dimension: p.dim,
        }
    }
}

impl FluidParams {
    pub fn new(
        mu: f64,
        nu: f64,
        kappa: f64,
        sigma: f64,
        gamma_star: f64,
        rho_star: f64,
        dim: usize,
    ) -> Result<Self> {
        let p = FluidParams { mu, nu, kappa, sigma, gamma_star, rho_star, dim };
        p.validate()?;
        Ok(p)
    }

    /// Shorthand for the surface-tension reduced case (γ_* = 0, ρ_* = 1).
    pub fn simple(mu: f64, nu: f64, kappa: f64, sigma: f64, dim: usize) -> Result<Self> {
        Self::new(mu, nu, kappa, sigma, 0.0, 1.0, dim)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("nu", self.nu),
            ("kappa", self.kappa),
            ("sigma", self.sigma),
            ("rho_star", self.rho_star),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(NskError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.gamma_star.is_finite() {
            return Err(NskError::InvalidParams("gamma_star must be finite".into()));
        }
        if !(2..=3).contains(&self.dim) {
            return Err(NskError::InvalidParams(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        check_admissible(self.mu, self.nu, self.kappa)
    }

    /// Named parameter sets: "P0" (μ, ν, κ) = (1, 3, 1) with α > 0 and
    /// "P1" (1, 1, 2) with α < 0; σ = 1 for both.
    pub fn preset(name: &str, dim: usize) -> Result<Self> {
        match name {
            "P0" | "p0" => Self::simple(1.0, 3.0, 1.0, 1.0, dim),
            "P1" | "p1" => Self::simple(1.0, 1.0, 2.0, 1.0, dim),
            _ => Err(NskError::InvalidParams(format!("unknown preset {name:?} (expected P0 or P1)"))),
        }
    }

    /// Same coefficients in another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.mu, self.nu, self.kappa, self.sigma, self.gamma_star, self.rho_star, dim)
    }

    /// Number of tangential directions.
    pub fn ntan(&self) -> usize {
        self.dim - 1
    }
}

fn alpha_of(mu: f64, nu: f64, kappa: f64) -> f64 {
    let b = (mu + nu) / (2.0 * kappa);
    b * b - 1.0 / kappa
}

fn check_admissible(mu: f64, nu: f64, kappa: f64) -> Result<()> {
    let alpha = alpha_of(mu, nu, kappa);
    let b = (mu + nu) / (2.0 * kappa);
    if alpha.abs() <= 1e-14 * b * b.max(1.0 / kappa) {
        return Err(NskError::Admissibility(format!(
            "alpha = ((mu+nu)/(2 kappa))^2 - 1/kappa must be nonzero (got {alpha:e})"
        )));
    }
    if (kappa - mu * nu).abs() <= 1e-14 * kappa.max(mu * nu) {
        return Err(NskError::Admissibility(format!(
            "kappa must differ from mu*nu (kappa = {kappa}, mu*nu = {})",
            mu * nu
        )));
    }
    Ok(())
}

/// Quantities derived from (μ, ν, κ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub alpha: f64,
    pub s1: C64,
    pub s2: C64,
    pub eps_tilde_star: f64,
    /// Filled in by the symbol verifier once a scan has been run.
    pub eps_star_estimate: Option<f64>,
}

impl DerivedConstants {
    /// Same constants with s₁ and s₂ interchanged.
    pub fn swapped(&self) -> Self {
        DerivedConstants { s1: self.s2, s2: self.s1, ..*self }
    }
}

pub fn derive_constants(p: &FluidParams) -> Result<DerivedConstants> {
    check_admissible(p.mu, p.nu, p.kappa)?;
    let alpha = alpha_of(p.mu, p.nu, p.kappa);
    let b = (p.mu + p.nu) / (2.0 * p.kappa);
    let (s1, s2, eps) = if alpha > 0.0 {
        let r = alpha.sqrt();
        let hi = b + r;
        // s₋ = (1/κ)/s₊ avoids cancellation when α ≈ b²
        (C64::new(hi, 0.0), C64::new(1.0 / (p.kappa * hi), 0.0), 0.0)
    } else {
        let r = (-alpha).sqrt();
        let s1 = C64::new(b, r);
        (s1, s1.conj(), s1.arg())
    };
    Ok(DerivedConstants { alpha, s1, s2, eps_tilde_star: eps, eps_star_estimate: None })
}

/// Rescaled parameter set with ρ_* = 1.
pub fn rescale(p: &FluidParams) -> Result<FluidParams> {
    let r = p.rho_star;
    FluidParams::new(r * p.mu, r * p.nu, p.kappa / r, r * p.sigma, p.gamma_star, 1.0, p.dim)
}

/// The sector Σ_{ε,λ₀}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub epsilon: f64,
    pub lambda0: f64,
}

impl Sector {
    pub fn new(epsilon: f64, lambda0: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < PI / 2.0) {
            return Err(NskError::Sector(format!("epsilon must lie in (0, pi/2), got {epsilon}")));
        }
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(NskError::Sector(format!("lambda0 must be >= 0, got {lambda0}")));
        }
        Ok(Sector { epsilon, lambda0 })
    }

    pub fn contains(&self, lambda: C64) -> bool {
        lambda != C64::new(0.0, 0.0)
            && lambda.arg().abs() < PI - self.epsilon
            && lambda.norm() >= self.lambda0
    }

    pub fn max_arg(&self) -> f64 {
        PI - self.epsilon
    }
}

/// One frequency-side evaluation point (ξ′, λ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorPoint {
    pub xi: Vec<f64>,
    pub lambda: C64,
}

impl SectorPoint {
    pub fn new(xi: Vec<f64>, lambda: C64) -> Self {
        SectorPoint { xi, lambda }
    }

    pub fn xi_abs(&self) -> f64 {
        self.xi2().sqrt()
    }

    pub fn xi2(&self) -> f64 {
        self.xi.iter().map(|x| x * x).sum()
    }

    /// Scale radius |λ|^{1/2} + |ξ′|.
    pub fn radius(&self) -> f64 {
        self.lambda.norm().sqrt() + self.xi_abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SamplingKind {
    /// Tensor grid: log-spaced |ξ′| × log-spaced |λ| × arg fan.
    Grid,
    /// Independent log-uniform draws in both moduli and uniform arg.
    Random { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub kind: SamplingKind,
    pub xi_count: usize,
    pub lambda_count: usize,
    pub arg_count: usize,
    pub xi_range: (f64, f64),
    pub lambda_range: (f64, f64),
    /// Fraction of the admissible half-opening π − ε spanned by the fan.
    pub arg_fraction: f64,
    pub seed: u64,
}

impl SamplingSpec {
    pub fn grid(xi_count: usize, lambda_count: usize, arg_count: usize) -> Self {
        SamplingSpec {
            kind: SamplingKind::Grid,
            xi_count,
            lambda_count,
            arg_count,
            xi_range: (0.1, 10.0),
            lambda_range: (1.0, 100.0),
            arg_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn random(count: usize, xi_range: (f64, f64), lambda_range: (f64, f64), seed: u64) -> Self {
        SamplingSpec {
            kind: SamplingKind::Random { count },
            xi_count: 1,
            lambda_count: 1,
            arg_count: 1,
            xi_range,
            lambda_range,
            arg_fraction: 1.0,
            seed,
        }
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Unit vector of length `ntan` drawn from the generator.
pub fn random_direction(rng: &mut impl Rng, ntan: usize) -> Vec<f64> {
    if ntan == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    let th: f64 = rng.gen_range(0.0..2.0 * PI);
    let mut v = vec![th.cos(), th.sin()];
    v.resize(ntan, 0.0);
    v
}

pub fn sector_sample(sec: &Sector, spec: &SamplingSpec, ntan: usize) -> Result<Vec<SectorPoint>> {
    let (xl, xh) = spec.xi_range;
    let (ll, lh) = spec.lambda_range;
    if !(xl > 0.0 && xh >= xl && ll > 0.0 && lh >= ll) {
        return Err(NskError::Sampling(format!(
            "empty or nonpositive range: xi {:?}, lambda {:?}",
            spec.xi_range, spec.lambda_range
        )));
    }
    if ll < sec.lambda0 {
        return Err(NskError::Sampling(format!(
            "lambda range starts at {ll} below lambda0 = {}",
            sec.lambda0
        )));
    }
    if !(spec.arg_fraction > 0.0 && spec.arg_fraction <= 1.0) {
        return Err(NskError::Sampling("arg_fraction must lie in (0, 1]".into()));
    }
    if ntan == 0 {
        return Err(NskError::Sampling("need at least one tangential direction".into()));
    }
    let th_max = sec.max_arg() * spec.arg_fraction;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pts = Vec::new();
    match spec.kind {
        SamplingKind::Grid => {
            if spec.xi_count == 0 || spec.lambda_count == 0 || spec.arg_count == 0 {
                return Err(NskError::Sampling("zero count in grid".into()));
            }
            let xs = logspace(xl, xh, spec.xi_count);
            let ls = logspace(ll, lh, spec.lambda_count);
            let n = spec.arg_count;
            let args: Vec<f64> = (0..n)
                .map(|k| -th_max + (2 * k + 1) as f64 * th_max / n as f64)
                .collect();
            for &x in &xs {
                for &l in &ls {
                    for &a in &args {
                        let dir = random_direction(&mut rng, ntan);
                        let xi = dir.iter().map(|d| d * x).collect();
                        pts.push(SectorPoint::new(xi, C64::from_polar(l, a)));
                    }
                }
            }
        }
        SamplingKind::Random { count } => {
            if count == 0 {
                return Err(NskError::Sampling("zero count".into()));
            }
            for _ in 0..count {
                let x = (xl.ln() + rng.gen::<f64>() * (xh / xl).ln()).exp();
                let l = (ll.ln() + rng.gen::<f64>() * (lh / ll).ln()).exp();
                let a = th_max * (2.0 * rng.gen::<f64>() - 1.0) * (1.0 - 1e-9);
                let dir = random_direction(&mut rng, ntan);
                let xi = dir.iter().map(|d| d * x).collect();
                pts.push(SectorPoint::new(xi, C64::from_polar(l, a)));
            }
        }
    }
    debug_assert!(pts.iter().all(|p| sec.contains(p.lambda)));
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p0_constants() {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, 2).unwrap();
        let c = derive_constants(&p).unwrap();
        assert!((c.alpha - 3.0).abs() < 1e-15);
        assert!((c.s1.re - (2.0 + 3f64.sqrt())).abs() < 1e-14);
        assert!((c.s2.re - (2.0 - 3f64.sqrt())).abs() < 1e-14);
        assert_eq!(c.s1.im, 0.0);
        assert_eq!(c.eps_tilde_star, 0.0);
        assert!(((c.s1 * c.s2).re * p.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p1_constants() {
        let p = FluidParams::simple(1.0, 1.0, 2.0, 1.0, 2).unwrap();
        let c = derive_constants(&p).unwrap();
        assert!((c.alpha + 0.25).abs() < 1e-15);
        assert!((c.s1 - C64::new(0.5, 0.5)).norm() < 1e-15);
        assert_eq!(c.s2, c.s1.conj());
        assert!((c.eps_tilde_star - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_zero_rejected() {
        let e = FluidParams::simple(1.0, 1.0, 1.0, 1.0, 2).unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
    }

    #[test]
    fn kappa_mu_nu_rejected() {
        // α = (5/4)² − 1/2 ≠ 0 but κ = μν
        let e = FluidParams::simple(1.0, 2.0, 2.0, 1.0, 2).unwrap_err();
        assert!(e.to_string().contains("mu*nu"), "{e}");
    }

    #[test]
    fn rescale_example() {
        let p = FluidParams::new(1.0, 1.0, 2.0, 1.0, 0.0, 2.0, 2).unwrap();
        let q = rescale(&p).unwrap();
        assert_eq!((q.rho_star, q.mu, q.nu, q.kappa, q.sigma), (1.0, 2.0, 2.0, 1.0, 2.0));
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, 3).unwrap();
        assert_eq!(rescale(&p).unwrap(), p);
    }

    #[test]
    fn rescale_can_fail() {
        // κ = ρ_*³μν turns into κ' = μ'ν' after rescaling
        let p = FluidParams::new(1.0, 2.0, 16.0, 1.0, 0.0, 2.0, 2).unwrap();
        assert!(rescale(&p).is_err());
    }

    #[test]
    fn json_keys() {
        let p: FluidParams = serde_json::from_str(
            r#"{"mu":1,"nu":3,"kappa":1,"sigma":1,"gamma_star":0,"rho_star":1,"dimension":3}"#,
        )
        .unwrap();
        assert_eq!(p.dim, 3);
        assert!(serde_json::from_str::<FluidParams>(r#"{"mu":1,"nu":1,"kappa":1,"sigma":1}"#).is_err());
    }

    #[test]
    fn sector_grid_sample() {
        let sec = Sector::new(PI / 3.0, 1.0).unwrap();
        let mut spec = SamplingSpec::grid(1, 4, 3);
        spec.lambda_range = (1.0, 10.0);
        let pts = sector_sample(&sec, &spec, 1).unwrap();
        assert_eq!(pts.len(), 12);
        for p in &pts {
            assert!(p.lambda.norm() >= 1.0 - 1e-12);
            assert!(p.lambda.arg().abs() <= 2.0 * PI / 3.0);
        }
        spec.lambda_range = (0.5, 2.0);
        assert!(sector_sample(&sec, &spec, 1).is_err());
    }

    #[test]
    fn sample_deterministic() {
        let sec = Sector::new(0.3, 0.0).unwrap();
        let spec = SamplingSpec::random(50, (0.1, 10.0), (0.1, 10.0), 7);
        let a = sector_sample(&sec, &spec, 2).unwrap();
        let b = sector_sample(&sec, &spec, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| sec.contains(p.lambda)));
    }
}
