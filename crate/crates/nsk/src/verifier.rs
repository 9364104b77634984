//! Numerical checks of symbol-class bounds, the determinant lower bound and
//! the high-frequency behaviour of the symbols.

use crate::error::{NskError, Result};
use crate::params::{random_direction, DerivedConstants, FluidParams, Sector, SectorPoint};
use crate::report::{PointRecord, ScanReport, ShellRecord, SkippedPoint, Verdict};
use crate::scalar::{parts3, seed3, Dual3, Scalar};
use crate::symbols::{eval_roots, symbols_generic, SymbolSet};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolId {
    Omega,
    T1,
    T2,
    P1,
    P2,
    Q1,
    Q2,
    A,
    L1,
    L2,
    /// the Lopatinskii determinant 𝐌
    BigM,
    MFrak,
    XiAbs,
}

impl SymbolId {
    pub fn name(self) -> &'static str {
        match self {
            SymbolId::Omega => "omega",
            SymbolId::T1 => "t1",
            SymbolId::T2 => "t2",
            SymbolId::P1 => "p1",
            SymbolId::P2 => "p2",
            SymbolId::Q1 => "q1",
            SymbolId::Q2 => "q2",
            SymbolId::A => "a",
            SymbolId::L1 => "l1",
            SymbolId::L2 => "l2",
            SymbolId::BigM => "M",
            SymbolId::MFrak => "m",
            SymbolId::XiAbs => "xi_abs",
        }
    }

    fn pick<S: Scalar>(self, s: &SymbolSet<S>, xi2: S) -> S {
        match self {
            SymbolId::Omega => s.omega,
            SymbolId::T1 => s.t1,
            SymbolId::T2 => s.t2,
            SymbolId::P1 => s.p1,
            SymbolId::P2 => s.p2,
            SymbolId::Q1 => s.q1,
            SymbolId::Q2 => s.q2,
            SymbolId::A => s.a,
            SymbolId::L1 => s.l1,
            SymbolId::L2 => s.l2,
            SymbolId::BigM => s.big_m,
            SymbolId::MFrak => s.m_frak,
            SymbolId::XiAbs => xi2.sqrt(),
        }
    }
}

/// m = symbol^power tested against
/// C·(|λ|+|ξ′|)^lambda_factor·(|λ|^{1/2}+|ξ′|)^{order−|α′|} (type 1) or
/// C·(|λ|+|ξ′|)^lambda_factor·(|λ|^{1/2}+|ξ′|)^order·|ξ′|^{−|α′|} (type 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub symbol: SymbolId,
    pub power: i32,
    pub class_type: u8,
    pub order: f64,
    pub lambda_factor: f64,
    pub max_alpha: usize,
    pub tau_order: usize,
}

impl ClassSpec {
    pub fn type1(symbol: SymbolId, power: i32, order: f64) -> Self {
        ClassSpec { symbol, power, class_type: 1, order, lambda_factor: 0.0, max_alpha: 2, tau_order: 1 }
    }

    pub fn label(&self) -> String {
        format!("{}^{} in M{}_{}", self.symbol.name(), self.power, self.class_type, self.order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_alpha > 2 || self.tau_order > 1 || !(self.class_type == 1 || self.class_type == 2) {
            return Err(NskError::InvalidParams(format!("unsupported class spec {}", self.label())));
        }
        if self.power == 0 {
            return Err(NskError::InvalidParams("power must be nonzero".into()));
        }
        Ok(())
    }

    pub fn weight(&self, pt: &SectorPoint, alpha: usize) -> f64 {
        let r = pt.radius();
        let lf = (pt.lambda.norm() + pt.xi_abs()).powf(self.lambda_factor);
        let a = alpha as f64;
        if self.class_type == 1 {
            lf * r.powf(self.order - a)
        } else {
            lf * r.powf(self.order) * pt.xi_abs().powf(-a)
        }
    }
}

/// Which sector a listed class is asserted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorRule {
    /// any ε > 0, λ₀ = 0
    Any,
    /// ε above ε̃_*, λ₀ = 0
    AboveTildeEps,
    /// ε above ε_*, λ₀ = 0
    AboveEps,
    /// ε above ε_*, λ₀ from the determinant scan
    AboveEpsLarge,
}

/// The class memberships asserted for the solution symbols.
pub fn listed_classes() -> Vec<(ClassSpec, SectorRule)> {
    use SymbolId::*;
    let mut v = Vec::new();
    for s in [-1, 1] {
        v.push((ClassSpec::type1(Omega, s, s as f64), SectorRule::Any));
        v.push((ClassSpec::type1(T1, s, s as f64), SectorRule::AboveTildeEps));
        v.push((ClassSpec::type1(T2, s, s as f64), SectorRule::AboveTildeEps));
    }
    for id in [P1, P2, Q1, Q2, A] {
        v.push((ClassSpec::type1(id, 1, 1.0), SectorRule::AboveTildeEps));
    }
    for s in [-1, 1] {
        v.push((ClassSpec::type1(L1, s, 6.0 * s as f64), SectorRule::AboveEps));
        v.push((ClassSpec::type1(L2, s, 6.0 * s as f64), SectorRule::AboveEps));
    }
    v.push((ClassSpec { lambda_factor: -1.0, ..ClassSpec::type1(BigM, -1, -13.0) }, SectorRule::AboveEpsLarge));
    v.push((ClassSpec { lambda_factor: -1.0, ..ClassSpec::type1(MFrak, 1, 0.0) }, SectorRule::AboveEpsLarge));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeValue {
    /// ξ′ multi-index
    pub alpha: Vec<usize>,
    pub n: usize,
    pub value: C64,
}

fn alphas(ntan: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; ntan]];
    for a in 0..ntan {
        if max >= 1 {
            let mut e = vec![0; ntan];
            e[a] = 1;
            out.push(e);
        }
    }
    if max >= 2 {
        for a in 0..ntan {
            for b in a..ntan {
                let mut e = vec![0; ntan];
                e[a] += 1;
                e[b] += 1;
                out.push(e);
            }
        }
    }
    out
}

/// Derivative of λ along the τ∂_τ direction: iτ, or λ itself near the
/// real axis so the factor τ does not vanish trivially.
fn tau_seed(lam: C64) -> C64 {
    if lam.im.abs() < 1e-8 * lam.norm() {
        lam
    } else {
        C64::new(0.0, lam.im)
    }
}

fn eval_dual(spec: &ClassSpec, pt: &SectorPoint, p: &FluidParams, c: &DerivedConstants, a: Option<usize>, b: Option<usize>) -> crate::scalar::Dual3Parts {
    let one = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let xi: Vec<Dual3> = pt
        .xi
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let d1 = if a == Some(i) { one } else { z };
            let d2 = if b == Some(i) { one } else { z };
            seed3(C64::new(x, 0.0), d1, d2, z)
        })
        .collect();
    let lam = seed3(pt.lambda, z, z, tau_seed(pt.lambda));
    let s = symbols_generic(&xi, lam, p, c);
    let xi2 = xi.iter().fold(Dual3::real(0.0), |acc, &x| acc + x * x);
    let m = spec.symbol.pick(&s, xi2).powi(spec.power);
    parts3(&m)
}

fn check_point(spec: &ClassSpec, pt: &SectorPoint, p: &FluidParams, c: &DerivedConstants) -> Result<()> {
    eval_roots(pt, c, p)?;
    if spec.class_type == 2 || spec.symbol == SymbolId::XiAbs {
        if pt.xi2() == 0.0 {
            return Err(NskError::InvalidParams("xi' = 0 excluded for type-2 and |xi'| symbols".into()));
        }
    }
    Ok(())
}

/// ∂^{α′}_{ξ′}(τ∂_τ)ⁿ m for |α′| ≤ max_alpha and n ≤ tau_order, by nested
/// dual numbers.
pub fn estimate_symbol_derivatives(
    spec: &ClassSpec,
    pt: &SectorPoint,
    p: &FluidParams,
    c: &DerivedConstants,
) -> Result<Vec<DerivativeValue>> {
    spec.validate()?;
    check_point(spec, pt, p, c)?;
    let ntan = pt.xi.len();
    let mut out = Vec::new();
    for alpha in alphas(ntan, spec.max_alpha) {
        let idx: Vec<usize> = alpha.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat(i).take(k)).collect();
        let parts = eval_dual(spec, pt, p, c, idx.first().copied(), idx.get(1).copied());
        let (v0, v1) = match idx.len() {
            0 => (parts.f, parts.d3),
            1 => (parts.d1, parts.d13),
            _ => (parts.d12, parts.d123),
        };
        for (n, v) in [(0, v0), (1, v1)].into_iter().take(spec.tau_order + 1) {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(NskError::Undefined(format!("non-finite derivative of {} at {:?}", spec.symbol.name(), pt)));
            }
            out.push(DerivativeValue { alpha: alpha.clone(), n, value: v });
        }
    }
    Ok(out)
}

fn plain(spec: &ClassSpec, xi: &[f64], lam: C64, p: &FluidParams, c: &DerivedConstants) -> C64 {
    let x: Vec<C64> = xi.iter().map(|&v| C64::new(v, 0.0)).collect();
    let s = symbols_generic(&x, lam, p, c);
    let xi2: C64 = x.iter().map(|v| v * v).sum();
    spec.symbol.pick(&s, xi2).powi(spec.power)
}

fn five_point(f: impl Fn(f64) -> C64, h: f64) -> C64 {
    (f(-2.0 * h) - f(2.0 * h) + (f(h) - f(-h)) * 8.0) / (12.0 * h)
}

/// Largest relative gap between dual derivatives and 5-point central
/// differences: first ξ′-derivatives and τ∂_τ from plain evaluation, second
/// derivatives by differencing the dual first derivative.
pub fn audit_derivatives(spec: &ClassSpec, pt: &SectorPoint, p: &FluidParams, c: &DerivedConstants) -> Result<f64> {
    let vals = estimate_symbol_derivatives(spec, pt, p, c)?;
    let h = 1e-3 * pt.radius();
    let ntan = pt.xi.len();
    let scale = vals.iter().map(|v| v.value.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut cmp = |dual: C64, fd: C64| {
        let den = dual.norm().max(1e-6 * scale);
        worst = worst.max((dual - fd).norm() / den);
    };
    for v in &vals {
        let idx: Vec<usize> = v.alpha.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat(i).take(k)).collect();
        let shifted = |i: usize, d: f64| {
            let mut x = pt.xi.clone();
            x[i] += d;
            x
        };
        match (idx.len(), v.n) {
            (0, 0) => {}
            (0, _) => {
                // seeded direction: d/ds m(λ + s·ds) at s = 0
                let ds = tau_seed(pt.lambda);
                let fd = five_point(|d| plain(spec, &pt.xi, pt.lambda + ds * d, p, c), 1e-3);
                cmp(v.value, fd);
            }
            (1, 0) => {
                let fd = five_point(|d| plain(spec, &shifted(idx[0], d), pt.lambda, p, c), h);
                cmp(v.value, fd);
            }
            (2, 0) => {
                let first = ClassSpec { max_alpha: 1, tau_order: 0, ..spec.clone() };
                let fd = five_point(
                    |d| {
                        let q = SectorPoint::new(shifted(idx[1], d), pt.lambda);
                        let e = estimate_symbol_derivatives(&first, &q, p, c).expect("audited point is admissible");
                        let mut alpha = vec![0; ntan];
                        alpha[idx[0]] = 1;
                        e.into_iter().find(|x| x.alpha == alpha).map(|x| x.value).unwrap_or_default()
                    },
                    h,
                );
                cmp(v.value, fd);
            }
            _ => {}
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShellGrid {
    pub shells: usize,
    /// inner radius of shell 0 in |λ|^{1/2} + |ξ′|
    pub r_min: f64,
    pub points_per_shell: usize,
    pub seed: u64,
    pub audit_fraction: f64,
    /// the ratio stability threshold: shell max ≤ factor × shell median
    pub stability_factor: f64,
}

impl Default for ShellGrid {
    fn default() -> Self {
        ShellGrid { shells: 6, r_min: 1.0, points_per_shell: 400, seed: 7, audit_fraction: 0.1, stability_factor: 10.0 }
    }
}

/// Random points with |λ|^{1/2} + |ξ′| in [r_min 2^k, r_min 2^{k+1}),
/// independent draws per shell.
pub fn shell_points(sector: &Sector, grid: &ShellGrid, ntan: usize) -> Result<Vec<(usize, SectorPoint)>> {
    if grid.shells < 6 {
        return Err(NskError::Sampling(format!("{} shells given, at least 6 dyadic shells are required", grid.shells)));
    }
    if grid.points_per_shell == 0 || !(grid.r_min > 0.0) {
        return Err(NskError::Sampling("empty shell grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let th = sector.max_arg();
    let mut out = Vec::new();
    for k in 0..grid.shells {
        let lo = grid.r_min * 2f64.powi(k as i32);
        for _ in 0..grid.points_per_shell {
            let r = lo * 2f64.powf(rng.gen::<f64>());
            let f_lo = 0.02f64.max(sector.lambda0.sqrt() / r);
            if f_lo >= 0.98 {
                return Err(NskError::Sampling(format!(
                    "shell {k} starts at radius {lo:.3e}, inside |lambda| < lambda0 = {:.3e}",
                    sector.lambda0
                )));
            }
            let f = rng.gen_range(f_lo..0.98);
            let arg = th * rng.gen_range(-0.999..0.999);
            let dir = random_direction(&mut rng, ntan);
            let xa = (1.0 - f) * r;
            let lam = C64::from_polar((f * r).powi(2), arg);
            out.push((k, SectorPoint::new(dir.iter().map(|d| d * xa).collect(), lam)));
        }
    }
    Ok(out)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn column_name(alpha: &[usize], n: usize) -> String {
    let a: Vec<String> = alpha.iter().map(|v| v.to_string()).collect();
    format!("a{}_n{}", a.join(""), n)
}

fn stamp(r: &mut ScanReport) {
    r.timestamp = std::env::var("SOURCE_DATE_EPOCH").ok();
}

/// Shell constants max |∂^{α′}(τ∂_τ)ⁿm|/weight; PASS when every column has
/// shell max ≤ stability_factor × shell median.
pub fn verify_class_membership(
    spec: &ClassSpec,
    p: &FluidParams,
    c: &DerivedConstants,
    sector: &Sector,
    grid: &ShellGrid,
) -> Result<ScanReport> {
    spec.validate()?;
    let pts = shell_points(sector, grid, p.ntan())?;
    let mut th = BTreeMap::new();
    th.insert("stability_factor".to_string(), grid.stability_factor);
    th.insert("audit_tolerance".to_string(), 1e-5);
    let mut rep = ScanReport::new(
        "class-membership",
        p,
        json!({"spec": spec, "sector": sector, "shells": grid}),
        th,
    );
    rep.seed = grid.seed;
    stamp(&mut rep);
    let cols: Vec<(Vec<usize>, usize)> = alphas(p.ntan(), spec.max_alpha)
        .into_iter()
        .flat_map(|a| (0..=spec.tau_order).map(move |n| (a.clone(), n)))
        .collect();
    rep.columns = cols.iter().map(|(a, n)| column_name(a, *n)).collect();
    let evals: Vec<Result<Vec<DerivativeValue>>> =
        pts.par_iter().map(|(_, pt)| estimate_symbol_derivatives(spec, pt, p, c)).collect();
    let mut shell_max = vec![vec![0.0f64; cols.len()]; grid.shells];
    let mut counts = vec![0usize; grid.shells];
    for ((k, pt), ev) in pts.iter().zip(evals) {
        match ev {
            Ok(vals) => {
                let row: Vec<f64> = vals
                    .iter()
                    .map(|v| v.value.norm() / spec.weight(pt, v.alpha.iter().sum()))
                    .collect();
                for (j, x) in row.iter().enumerate() {
                    shell_max[*k][j] = shell_max[*k][j].max(*x);
                }
                counts[*k] += 1;
                rep.points.push(PointRecord { shell: Some(*k), xi: pt.xi.clone(), lambda: pt.lambda, values: row });
            }
            Err(e) => rep.skipped.push(SkippedPoint { xi: pt.xi.clone(), lambda: pt.lambda, reason: e.to_string() }),
        }
    }
    if counts.iter().any(|&n| n == 0) {
        return Err(NskError::Sampling("a shell has no admissible points".into()));
    }
    for k in 0..grid.shells {
        let lo = grid.r_min * 2f64.powi(k as i32);
        rep.shells.push(ShellRecord { index: k, r_lo: lo, r_hi: 2.0 * lo, count: counts[k], values: shell_max[k].clone() });
    }
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for j in 0..cols.len() {
        let col: Vec<f64> = shell_max.iter().map(|s| s[j]).collect();
        let med = median(&col);
        let mx = col.iter().cloned().fold(0.0, f64::max);
        let spread = if mx == 0.0 { 0.0 } else if med == 0.0 { f64::MAX } else { mx / med };
        worst = worst.max(spread);
        ok &= spread <= grid.stability_factor;
        rep.summary.insert(format!("spread_{}", rep.columns[j]), spread);
    }
    rep.summary.insert("worst_spread".into(), worst);
    // finite-difference audit on a deterministic subset
    let stride = ((1.0 / grid.audit_fraction.clamp(1e-3, 1.0)).round() as usize).max(1);
    let audits: Vec<f64> = rep
        .points
        .iter()
        .step_by(stride)
        .map(|r| audit_derivatives(spec, &SectorPoint::new(r.xi.clone(), r.lambda), p, c).unwrap_or(f64::MAX))
        .collect();
    let audit = audits.iter().cloned().fold(0.0, f64::max);
    rep.summary.insert("audit_max_rel".into(), audit);
    rep.summary.insert("skipped".into(), rep.skipped.len() as f64);
    if audit > 1e-5 {
        rep.notes.push(format!("dual/finite-difference audit gap {audit:.2e}"));
    }
    rep.verdict = Verdict::from_bool(ok && grid.shells >= 6);
    Ok(rep)
}

/// λ₀ values tried, in order, for classes asserted only on large |λ|.
pub const LAMBDA0_CANDIDATES: [f64; 5] = [0.0, 1.0, 10.0, 100.0, 1000.0];

/// Class membership under the sector rule of a listed class. For
/// [`SectorRule::AboveEpsLarge`] the smallest λ₀ ≥ `sector.lambda0` from
/// [`LAMBDA0_CANDIDATES`] that passes is reported (shells moved outward
/// so that each starts at 2λ₀^{1/2}).
pub fn verify_listed_class(
    spec: &ClassSpec,
    rule: SectorRule,
    p: &FluidParams,
    c: &DerivedConstants,
    sector: &Sector,
    grid: &ShellGrid,
) -> Result<ScanReport> {
    if rule != SectorRule::AboveEpsLarge {
        return verify_class_membership(spec, p, c, sector, grid);
    }
    let mut last = None;
    for l0 in LAMBDA0_CANDIDATES.iter().map(|&l| l.max(sector.lambda0)) {
        let sec = Sector::new(sector.epsilon, l0)?;
        let g = ShellGrid { r_min: grid.r_min.max(2.0 * l0.sqrt()), ..grid.clone() };
        let mut rep = verify_class_membership(spec, p, c, &sec, &g)?;
        rep.summary.insert("lambda0_used".into(), l0);
        let done = rep.verdict.passed();
        last = Some(rep);
        if done {
            break;
        }
    }
    Ok(last.expect("candidate list is nonempty"))
}

/// Report wrapper around [`log_log_slope`]: PASS when |slope − order| ≤ tol.
pub fn slope_report(spec: &ClassSpec, p: &FluidParams, c: &DerivedConstants, sector: &Sector, grid: &ShellGrid, tol: f64) -> Result<ScanReport> {
    let mut th = BTreeMap::new();
    th.insert("slope_tolerance".to_string(), tol);
    let mut rep = ScanReport::new("loglog-slope", p, json!({"spec": spec, "sector": sector, "shells": grid}), th);
    rep.seed = grid.seed;
    stamp(&mut rep);
    let slope = log_log_slope(spec, p, c, sector, grid)?;
    rep.summary.insert("slope".into(), slope);
    rep.summary.insert("target".into(), spec.order);
    rep.verdict = Verdict::from_bool((slope - spec.order).abs() <= tol);
    Ok(rep)
}

/// Every listed class on `sector`, followed by the 𝔩_j slope reports.
pub fn verify_symbol_suite(p: &FluidParams, c: &DerivedConstants, sector: &Sector, grid: &ShellGrid) -> Result<Vec<ScanReport>> {
    let mut out = Vec::new();
    for (spec, rule) in listed_classes() {
        out.push(verify_listed_class(&spec, rule, p, c, sector, grid)?);
    }
    for id in [SymbolId::L1, SymbolId::L2] {
        out.push(slope_report(&ClassSpec::type1(id, 1, 6.0), p, c, sector, grid, 0.1)?);
    }
    Ok(out)
}

/// Least-squares slope of log|m| against log R at fixed normalized shape
/// (|λ|^{1/2}/R, arg λ, ξ̂) over the shell radii.
pub fn log_log_slope(spec: &ClassSpec, p: &FluidParams, c: &DerivedConstants, sector: &Sector, grid: &ShellGrid) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed ^ 0x5bd1e995);
    let th = sector.max_arg();
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..grid.points_per_shell {
        let f = rng.gen_range(0.02..0.98);
        let arg = th * rng.gen_range(-0.999..0.999);
        let dir = random_direction(&mut rng, p.ntan());
        for k in 0..grid.shells {
            let r = grid.r_min * 2f64.powi(k as i32) * 1.5;
            let pt = SectorPoint::new(dir.iter().map(|d| d * (1.0 - f) * r).collect(), C64::from_polar((f * r).powi(2), arg));
            check_point(spec, &pt, p, c)?;
            let v = plain(spec, &pt.xi, pt.lambda, p, c).norm();
            let (x, y) = (r.ln(), v.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            n += 1.0;
        }
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Grid for the determinant scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetGrid {
    pub xi_count: usize,
    pub lambda_count: usize,
    pub arg_count: usize,
    pub xi_range: (f64, f64),
    pub lambda_range: (f64, f64),
    /// per-shell min spread allowed above the empirical λ₀
    pub stability_factor: f64,
    pub include_xi_zero: bool,
}

impl Default for DetGrid {
    fn default() -> Self {
        DetGrid {
            xi_count: 40,
            lambda_count: 40,
            arg_count: 8,
            xi_range: (1e-3, 1e3),
            lambda_range: (1e-3, 1e6),
            stability_factor: 100.0,
            include_xi_zero: true,
        }
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn fan(sector: &Sector, n: usize) -> Vec<f64> {
    let th = sector.max_arg();
    (0..n).map(|i| th * (-1.0 + (2 * i + 1) as f64 / n as f64)).collect()
}

fn shell_index(r: f64) -> i32 {
    r.log2().floor() as i32
}

/// ratio = |𝐌| / ((|λ|+|ξ′|)(|λ|^{1/2}+|ξ′|)^13) over a log grid, with
/// per-shell minima and the empirical λ₀.
pub fn scan_lopatinskii_lower_bound(p: &FluidParams, c: &DerivedConstants, sector: &Sector, grid: &DetGrid) -> Result<ScanReport> {
    if grid.lambda_range.0 <= 0.0 || grid.xi_range.0 <= 0.0 {
        return Err(NskError::Sampling("log grid needs positive lower ends".into()));
    }
    let lam_lo = grid.lambda_range.0.max(sector.lambda0);
    let mut xis = logspace(grid.xi_range.0, grid.xi_range.1, grid.xi_count);
    if grid.include_xi_zero {
        xis.insert(0, 0.0);
    }
    let lams = logspace(lam_lo, grid.lambda_range.1, grid.lambda_count);
    let args = fan(sector, grid.arg_count);
    let mut pts = Vec::new();
    for &x in &xis {
        for &l in &lams {
            for &a in &args {
                let mut xi = vec![0.0; p.ntan()];
                xi[0] = x;
                pts.push(SectorPoint::new(xi, C64::from_polar(l, a)));
            }
        }
    }
    let mut th = BTreeMap::new();
    th.insert("stability_factor".to_string(), grid.stability_factor);
    let mut rep = ScanReport::new("lopatinskii", p, json!({"sector": sector, "grid": grid}), th);
    stamp(&mut rep);
    rep.columns = vec!["abs_M".into(), "ratio".into()];
    let spec = ClassSpec::type1(SymbolId::BigM, 1, 13.0);
    let vals: Vec<Result<C64>> = pts
        .par_iter()
        .map(|pt| {
            eval_roots(pt, c, p)?;
            Ok(plain(&spec, &pt.xi, pt.lambda, p, c))
        })
        .collect();
    let mut rows = Vec::new();
    for (pt, v) in pts.iter().zip(vals) {
        match v {
            Ok(m) => {
                let den = (pt.lambda.norm() + pt.xi_abs()) * pt.radius().powi(13);
                let ratio = m.norm() / den;
                rows.push((pt.clone(), m.norm(), ratio));
                rep.points.push(PointRecord {
                    shell: Some((shell_index(pt.radius()) + 64) as usize),
                    xi: pt.xi.clone(),
                    lambda: pt.lambda,
                    values: vec![m.norm(), ratio],
                });
            }
            Err(e) => rep.skipped.push(SkippedPoint { xi: pt.xi.clone(), lambda: pt.lambda, reason: e.to_string() }),
        }
    }
    let (min_pt, min_ratio) = rows
        .iter()
        .fold((None, f64::INFINITY), |acc, (pt, _, r)| if *r < acc.1 { (Some(pt), *r) } else { acc });
    let shell_mins = |lam0: f64| {
        let mut m: BTreeMap<i32, (f64, usize, f64)> = BTreeMap::new();
        for (pt, am, r) in &rows {
            if pt.lambda.norm() >= lam0 {
                let e = m.entry(shell_index(pt.radius())).or_insert((f64::INFINITY, 0, f64::INFINITY));
                e.0 = e.0.min(*r);
                e.1 += 1;
                e.2 = e.2.min(*am);
            }
        }
        m
    };
    let mut lambda0 = None;
    for &cand in &lams {
        let m = shell_mins(cand);
        if m.len() < 3 {
            break;
        }
        let lo = m.values().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let hi = m.values().map(|v| v.0).fold(0.0, f64::max);
        if lo > 0.0 && hi / lo <= grid.stability_factor {
            lambda0 = Some(cand);
            break;
        }
    }
    let used = lambda0.unwrap_or(lam_lo);
    for (k, (mn, count, am)) in shell_mins(used) {
        rep.shells.push(ShellRecord {
            index: (k + 64) as usize,
            r_lo: 2f64.powi(k),
            r_hi: 2f64.powi(k + 1),
            count,
            values: vec![am, mn],
        });
    }
    if let Some(pt) = min_pt {
        rep.summary.insert("argmin_xi_abs".into(), pt.xi_abs());
        rep.summary.insert("argmin_lambda_re".into(), pt.lambda.re);
        rep.summary.insert("argmin_lambda_im".into(), pt.lambda.im);
    }
    rep.summary.insert("min_ratio".into(), if min_ratio.is_finite() { min_ratio } else { 0.0 });
    if let Some(l0) = lambda0 {
        rep.summary.insert("empirical_lambda0".into(), l0);
        let m = shell_mins(l0);
        let lo = m.values().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let hi = m.values().map(|v| v.0).fold(0.0, f64::max);
        rep.summary.insert("shell_min_spread".into(), hi / lo);
    } else {
        rep.notes.push("per-shell minima never stabilized within the factor".into());
    }
    rep.summary.insert("skipped".into(), rep.skipped.len() as f64);
    rep.verdict = Verdict::from_bool(min_ratio > 0.0 && min_ratio.is_finite() && lambda0.is_some() && rep.skipped.is_empty());
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsymptoticsGrid {
    pub lambda0s: Vec<f64>,
    /// |λ| ∈ λ₀·[1, lambda_span]
    pub lambda_span: f64,
    pub lambda_count: usize,
    /// |ξ′|/|λ| range, lower end ≥ 1
    pub ratio_range: (f64, f64),
    pub ratio_count: usize,
    pub arg_count: usize,
    pub band: (f64, f64),
}

impl Default for AsymptoticsGrid {
    fn default() -> Self {
        AsymptoticsGrid {
            lambda0s: (0..4).map(|k| 1e2 * 16f64.powi(k)).collect(),
            lambda_span: 16.0,
            lambda_count: 6,
            ratio_range: (1.0, 100.0),
            ratio_count: 6,
            arg_count: 8,
            band: (2.0, 8.0),
        }
    }
}

/// Relative deviations of t_j, 𝔩_j, 𝐌 and 𝔞 from their leading terms for
/// |ξ′| ≥ |λ| ≥ λ₀; PASS when each maximum shrinks by a factor inside `band`
/// from one λ₀ to the next.
pub fn check_high_frequency_asymptotics(p: &FluidParams, c: &DerivedConstants, sector: &Sector, grid: &AsymptoticsGrid) -> Result<ScanReport> {
    if grid.ratio_range.0 < 1.0 {
        return Err(NskError::Sampling("the asymptotic regime needs |xi'|/|lambda| >= 1".into()));
    }
    let mut th = BTreeMap::new();
    th.insert("band_lo".to_string(), grid.band.0);
    th.insert("band_hi".to_string(), grid.band.1);
    let mut rep = ScanReport::new("asymptotics", p, json!({"sector": sector, "grid": grid}), th);
    stamp(&mut rep);
    rep.columns = vec!["dev_t".into(), "dev_l".into(), "dev_M".into(), "dev_a".into()];
    let args = fan(sector, grid.arg_count);
    let (mu, ka, sg) = (p.mu, p.kappa, p.sigma);
    let ds = c.s2 - c.s1;
    let mut maxima = Vec::new();
    for (k, &l0) in grid.lambda0s.iter().enumerate() {
        let mut mx = [0.0f64; 4];
        for l in logspace(l0, l0 * grid.lambda_span, grid.lambda_count) {
            for q in logspace(grid.ratio_range.0, grid.ratio_range.1, grid.ratio_count) {
                for &a in &args {
                    let x = q * l;
                    let mut xi = vec![0.0; p.ntan()];
                    xi[0] = x;
                    let pt = SectorPoint::new(xi.clone(), C64::from_polar(l, a));
                    if let Err(e) = eval_roots(&pt, c, p) {
                        rep.skipped.push(SkippedPoint { xi, lambda: pt.lambda, reason: e.to_string() });
                        continue;
                    }
                    let xc: Vec<C64> = xi.iter().map(|&v| C64::new(v, 0.0)).collect();
                    let s = symbols_generic(&xc, pt.lambda, p, c);
                    let dev_t = ((s.t1 / x - 1.0).norm()).max((s.t2 / x - 1.0).norm());
                    let lref = 8.0 / mu * x.powi(6);
                    let dev_l = ((s.l1 / lref - 1.0).norm()).max((s.l2 / lref - 1.0).norm());
                    // x^13 reaches 1e78 at the top of the grid; stay in range via logs
                    let mref = (pt.lambda * (2.0 * mu) + sg * x) * (64.0 / (mu * mu * ka));
                    let dev_m = (s.big_m / mref / x.powi(13) - 1.0).norm();
                    let aref = 2.0 / ka * x / ds;
                    let dev_a = (s.a / aref - 1.0).norm();
                    let row = [dev_t, dev_l, dev_m, dev_a];
                    for i in 0..4 {
                        mx[i] = mx[i].max(row[i]);
                    }
                    rep.points.push(PointRecord { shell: Some(k), xi, lambda: pt.lambda, values: row.to_vec() });
                }
            }
        }
        rep.shells.push(ShellRecord { index: k, r_lo: l0, r_hi: l0 * grid.lambda_span, count: grid.lambda_count * grid.ratio_count * args.len(), values: mx.to_vec() });
        maxima.push(mx);
    }
    let mut ok = !maxima.is_empty() && rep.skipped.is_empty();
    for w in maxima.windows(2) {
        for i in 0..4 {
            let r = w[0][i] / w[1][i];
            ok &= r >= grid.band.0 && r <= grid.band.1;
        }
    }
    for (i, name) in rep.columns.clone().iter().enumerate() {
        for (k, w) in maxima.windows(2).enumerate() {
            rep.summary.insert(format!("shrink_{name}_{k}"), w[0][i] / w[1][i]);
        }
    }
    rep.verdict = Verdict::from_bool(ok);
    Ok(rep)
}

/// Smallest ε (steps of 0.02 rad above ε̃_*) from which 𝔩₁⁻¹ and 𝔩₂⁻¹ pass
/// the order −6 stability check for every larger tested ε.
pub fn estimate_eps_star(p: &FluidParams, c: &DerivedConstants, grid: &ShellGrid) -> Result<(Option<f64>, Vec<(f64, bool)>)> {
    let mut trail = Vec::new();
    let mut k = 1;
    loop {
        let eps = c.eps_tilde_star + 0.02 * k as f64;
        if eps >= PI / 2.0 {
            break;
        }
        let sector = Sector::new(eps, 0.0)?;
        let mut ok = true;
        for id in [SymbolId::L1, SymbolId::L2] {
            let spec = ClassSpec::type1(id, -1, -6.0);
            ok &= verify_class_membership(&spec, p, c, &sector, grid).map(|r| r.verdict.passed()).unwrap_or(false);
        }
        trail.push((eps, ok));
        k += 1;
    }
    let mut est = None;
    for &(eps, ok) in trail.iter().rev() {
        if !ok {
            break;
        }
        est = Some(eps);
    }
    Ok((est, trail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;

    fn p0(dim: usize) -> (FluidParams, DerivedConstants) {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, dim).unwrap();
        (p, derive_constants(&p).unwrap())
    }

    #[test]
    fn omega_squared_gradient() {
        let (p, c) = p0(3);
        // ω² = |ξ′|² + λ/μ; d/dξ₁ = 2ξ₁ exactly; use 𝔩-free symbol ω·ω via power 2
        let spec = ClassSpec { max_alpha: 1, tau_order: 0, ..ClassSpec::type1(SymbolId::Omega, 2, 2.0) };
        let pt = SectorPoint::new(vec![0.7, -0.2], C64::new(1.0, 2.0));
        let d = estimate_symbol_derivatives(&spec, &pt, &p, &c).unwrap();
        let g = d.iter().find(|v| v.alpha == vec![1, 0]).unwrap();
        assert!((g.value - C64::new(1.4, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn t1_gradient_by_hand() {
        let (p, c) = p0(2);
        let spec = ClassSpec { max_alpha: 1, tau_order: 0, ..ClassSpec::type1(SymbolId::T1, 1, 1.0) };
        let pt = SectorPoint::new(vec![1.0], C64::new(4.0, 0.0));
        let d = estimate_symbol_derivatives(&spec, &pt, &p, &c).unwrap();
        let t1 = d[0].value;
        assert!((d[1].value - 1.0 / t1).norm() < 1e-14);
        assert!(d[1].value.norm() / spec.weight(&pt, 1) < 1.0);
    }

    #[test]
    fn dual_matches_finite_differences() {
        let (p, c) = p0(3);
        let pt = SectorPoint::new(vec![0.9, 0.4], C64::new(-0.5, 2.0));
        for id in [SymbolId::L1, SymbolId::MFrak, SymbolId::A] {
            let spec = ClassSpec::type1(id, 1, 0.0);
            assert!(audit_derivatives(&spec, &pt, &p, &c).unwrap() < 1e-5, "{id:?}");
        }
    }

    #[test]
    fn omega_classes_pass() {
        let (p, c) = p0(3);
        let sector = Sector::new(0.3, 0.0).unwrap();
        for s in [-1, 1] {
            let r = verify_class_membership(&ClassSpec::type1(SymbolId::Omega, s, s as f64), &p, &c, &sector, &ShellGrid::default()).unwrap();
            assert!(r.verdict.passed(), "{:?}", r.summary);
            assert!(r.summary["audit_max_rel"] < 1e-5);
        }
    }

    #[test]
    fn xi_abs_is_type_two() {
        let (p, c) = p0(3);
        let sector = Sector::new(0.3, 0.0).unwrap();
        let spec = ClassSpec { class_type: 2, ..ClassSpec::type1(SymbolId::XiAbs, 1, 1.0) };
        let r = verify_class_membership(&spec, &p, &c, &sector, &ShellGrid::default()).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.summary);
    }

    #[test]
    fn too_few_shells() {
        let (p, c) = p0(2);
        let g = ShellGrid { shells: 4, ..Default::default() };
        let r = verify_class_membership(&ClassSpec::type1(SymbolId::Omega, 1, 1.0), &p, &c, &Sector::new(0.3, 0.0).unwrap(), &g);
        assert!(matches!(r, Err(NskError::Sampling(_))));
    }

    #[test]
    fn l1_slope() {
        let (p, c) = p0(2);
        let g = ShellGrid { points_per_shell: 100, ..Default::default() };
        let s = log_log_slope(&ClassSpec::type1(SymbolId::L1, 1, 6.0), &p, &c, &Sector::new(0.5, 0.0).unwrap(), &g).unwrap();
        assert!((s - 6.0).abs() < 0.1, "{s}");
    }

    #[test]
    fn xi_zero_row_matches_closed_form() {
        let (p, c) = p0(2);
        let pt = SectorPoint::new(vec![0.0], C64::from_polar(3.0, 0.4));
        let s = symbols_generic(&[C64::new(0.0, 0.0)], pt.lambda, &p, &c);
        let want = s.omega * pt.lambda * s.l1 * s.l2 * (2.0 * p.mu / p.kappa);
        assert!((s.big_m - want).norm() < 1e-12 * want.norm());
    }
}
