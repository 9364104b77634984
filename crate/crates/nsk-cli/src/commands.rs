//! Subcommand implementations. Each returns the verdict; I/O and config
//! problems surface as [`CliError`].

use crate::config::Resolved;
use crate::output::{write_atomic, Cache, Stamp};
use nsk::evolution::{causality_ratio, evolve_boundary_forced, kinematic_residual, maximal_regularity_ratio, ForcingTrace};
use nsk::field::{compute_norms, gaussian_samples, mode_samples, residual_field, resolvent_quotient, solve_field};
use nsk::mode::{default_grid, residual_bc, residual_ode, solve_mode};
use nsk::oracle::compare_with_formula;
use nsk::report::{config_hash, PointRecord, ScanReport, SkippedPoint, Verdict};
use nsk::verifier::{check_high_frequency_asymptotics, scan_lopatinskii_lower_bound, verify_symbol_suite, ShellGrid};
use nsk::{derive_constants, sector_sample, SamplingSpec, SectorPoint};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(String),
}

impl From<nsk::NskError> for CliError {
    fn from(e: nsk::NskError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o: {e}"))
    }
}

pub type CmdResult = Result<Verdict, CliError>;

pub struct Ctx {
    pub cfg: Resolved,
    pub out: PathBuf,
    pub seed: u64,
    pub cache: Cache,
}

impl Ctx {
    fn stamp<T: Serialize>(&self, sub: &str, section: &T) -> Stamp {
        Stamp::new(config_hash(&(sub, &self.cfg.params, section, self.seed)), self.seed)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        write_atomic(&self.out.join(name), contents)?;
        Ok(())
    }

    fn constants(&self) -> Result<nsk::DerivedConstants, CliError> {
        Ok(derive_constants(&self.cfg.params)?)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

pub fn parse_complex(s: &str) -> Result<C64, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    t.parse::<C64>().map_err(|_| usage(format!("cannot parse complex number {s:?} (use forms like 2+2i)")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse {v:?} in list {s:?}"))))
        .collect()
}

/// Cached computation of one report: the payload is the report JSON.
fn cached_report(ctx: &Ctx, sub: &str, hash: &str, f: impl FnOnce() -> Result<ScanReport, CliError>) -> Result<ScanReport, CliError> {
    if let Some(text) = ctx.cache.get(sub, hash) {
        if let Ok(r) = ScanReport::from_json(&text) {
            eprintln!("{sub}: reusing cached report {hash}");
            return Ok(r);
        }
    }
    let r = f()?;
    ctx.cache.put(sub, hash, &r.to_json()?)?;
    Ok(r)
}

fn emit_report(ctx: &Ctx, name: &str, r: &ScanReport) -> Result<(), CliError> {
    ctx.write(&format!("{name}.json"), &(r.to_json()? + "\n"))?;
    let st = Stamp::new(r.config_hash.clone(), r.seed);
    ctx.write(&format!("{name}.csv"), &(st.csv_line() + &r.to_csv()))?;
    println!("{name}: {} ({})", r.verdict, ctx.out.join(format!("{name}.json")).display());
    Ok(())
}

pub fn mode(ctx: &Ctx, xi: &str, lambda: &str, eta0: &str) -> CmdResult {
    let xi = parse_list(xi)?;
    let lam = parse_complex(lambda)?;
    let eta0 = parse_complex(eta0)?;
    if lam.im == 0.0 && lam.re <= 0.0 {
        return Err(usage("lambda must lie off the closed negative real axis"));
    }
    let p = ctx.cfg.params.with_dim(xi.len() + 1).map_err(|e| usage(e.to_string()))?;
    let c = derive_constants(&p)?;
    let sol = solve_mode(&SectorPoint::new(xi.clone(), lam), eta0, &p, &c)?;
    let ode = residual_ode(&sol, &p, &default_grid(&sol, 64, 10.0));
    let bc = residual_bc(&sol, &p);
    let ok = ode.max() <= 1e-9 && bc.max() <= 1e-9;
    let st = Stamp::new(config_hash(&("mode", &p, (&xi, lam, eta0), ctx.seed)), ctx.seed);
    let rec = json!({
        "schema_version": st.schema_version,
        "config_hash": st.config_hash,
        "seed": st.seed,
        "params": p,
        "residual_ode": ode.max(),
        "residual_bc": bc.max(),
        "verdict": Verdict::from_bool(ok),
        "solution": sol,
    });
    print!("{}", pretty(&rec));
    Ok(Verdict::from_bool(ok))
}

pub fn oracle_compare(ctx: &Ctx) -> CmdResult {
    let o = &ctx.cfg.run.oracle;
    let p = ctx.cfg.params;
    let c = ctx.constants()?;
    let sector = ctx.cfg.sector().map_err(usage)?;
    let st = ctx.stamp("oracle-compare", &(&ctx.cfg.run.sector, o));
    let rep = cached_report(ctx, "oracle-compare", &st.config_hash, || {
        let spec = SamplingSpec::random(o.samples, o.xi_range, o.lambda_range, ctx.seed);
        let pts = sector_sample(&sector, &spec, p.ntan())?;
        let mut th = BTreeMap::new();
        th.insert("gap_tolerance".to_string(), o.gap_tolerance);
        th.insert("node_tolerance".to_string(), o.node_tolerance);
        let mut rep = ScanReport::new("oracle-compare", &p, json!({"sector": sector, "oracle": o}), th);
        rep.seed = ctx.seed;
        rep.timestamp = std::env::var("SOURCE_DATE_EPOCH").ok();
        rep.columns = ["rho_gap"].iter().map(|s| s.to_string()).chain((0..p.dim).map(|j| format!("u{}_gap", j + 1))).collect();
        rep.columns.extend(["h0_gap", "node_change", "cond"].iter().map(|s| s.to_string()));
        let res: Vec<_> = pts.par_iter().map(|pt| compare_with_formula(pt, C64::new(1.0, 0.0), &p, &c, &o.collocation)).collect();
        let (mut gap, mut node): (f64, f64) = (0.0, 0.0);
        for (pt, r) in pts.iter().zip(res) {
            match r {
                Ok(r) => {
                    let nc = r.oracle.node_doubling_change.unwrap_or(f64::NAN);
                    gap = gap.max(r.max_gap());
                    node = node.max(nc);
                    let mut v = vec![r.rho_gap];
                    v.extend(&r.u_gaps);
                    v.extend([r.h0_gap, nc, r.oracle.cond]);
                    rep.points.push(PointRecord { shell: None, xi: pt.xi.clone(), lambda: pt.lambda, values: v });
                }
                Err(e) => rep.skipped.push(SkippedPoint { xi: pt.xi.clone(), lambda: pt.lambda, reason: e.to_string() }),
            }
        }
        rep.summary.insert("max_gap".into(), gap);
        rep.summary.insert("max_node_change".into(), node);
        rep.verdict = Verdict::from_bool(rep.skipped.is_empty() && gap <= o.gap_tolerance && node <= o.node_tolerance);
        Ok(rep)
    })?;
    emit_report(ctx, "oracle-compare", &rep)?;
    Ok(rep.verdict)
}

#[derive(Serialize, Deserialize)]
struct Bundle {
    schema_version: u32,
    config_hash: String,
    seed: u64,
    verdict: Verdict,
    reports: Vec<ScanReport>,
}

fn report_label(r: &ScanReport) -> String {
    match (r.grid.get("spec"), r.kind.as_str()) {
        (Some(s), k) => format!(
            "{}^{} order {}{}",
            s["symbol"].as_str().unwrap_or("?"),
            s["power"],
            s["order"],
            if k == "loglog-slope" { " slope" } else { "" }
        ),
        (None, k) => k.to_string(),
    }
}

fn report_lambda0(r: &ScanReport) -> f64 {
    r.summary
        .get("lambda0_used")
        .or_else(|| r.summary.get("empirical_lambda0"))
        .copied()
        .or_else(|| r.grid["sector"]["lambda0"].as_f64())
        .unwrap_or(0.0)
}

fn shells_csv(st: &Stamp, reps: &[ScanReport]) -> String {
    let mut s = st.csv_line();
    s.push_str("kind,label,lambda0,shell,r_lo,r_hi,count,column,value\n");
    for r in reps {
        let label = report_label(r);
        let l0 = report_lambda0(r);
        for sh in &r.shells {
            for (col, v) in r.columns.iter().zip(&sh.values) {
                let _ = writeln!(s, "{},\"{}\",{l0},{},{},{},{},{col},{v}", r.kind, label, sh.index, sh.r_lo, sh.r_hi, sh.count);
            }
        }
    }
    s
}

pub fn verify_symbols(ctx: &Ctx) -> CmdResult {
    let p = ctx.cfg.params;
    let c = ctx.constants()?;
    let sector = ctx.cfg.sector().map_err(usage)?;
    let grid = ShellGrid { seed: ctx.seed, ..ctx.cfg.run.shells.clone() };
    let st = ctx.stamp("verify-symbols", &(&ctx.cfg.run.sector, &grid));
    let reps = match ctx.cache.get("verify-symbols", &st.config_hash).and_then(|t| serde_json::from_str::<Bundle>(&t).ok()) {
        Some(b) => {
            eprintln!("verify-symbols: reusing cached reports {}", st.config_hash);
            b.reports
        }
        None => verify_symbol_suite(&p, &c, &sector, &grid)?,
    };
    let ok = reps.iter().all(|r| r.verdict.passed());
    let b = Bundle { schema_version: st.schema_version, config_hash: st.config_hash.clone(), seed: st.seed, verdict: Verdict::from_bool(ok), reports: reps };
    let text = pretty(&b);
    ctx.cache.put("verify-symbols", &st.config_hash, &text)?;
    ctx.write("verify-symbols.json", &text)?;
    ctx.write("verify-symbols.csv", &shells_csv(&st, &b.reports))?;
    for r in &b.reports {
        println!("{:<6} {:<28} lambda0 {:<8} {}", r.verdict, report_label(r), report_lambda0(r), r.kind);
    }
    Ok(b.verdict)
}

pub fn scan_det(ctx: &Ctx) -> CmdResult {
    let p = ctx.cfg.params;
    let c = ctx.constants()?;
    let sector = ctx.cfg.sector().map_err(usage)?;
    let st = ctx.stamp("scan-det", &(&ctx.cfg.run.sector, &ctx.cfg.run.det));
    let rep = cached_report(ctx, "scan-det", &st.config_hash, || {
        let mut r = scan_lopatinskii_lower_bound(&p, &c, &sector, &ctx.cfg.run.det)?;
        r.seed = ctx.seed;
        Ok(r)
    })?;
    emit_report(ctx, "scan-det", &rep)?;
    Ok(rep.verdict)
}

pub fn asymptotics(ctx: &Ctx) -> CmdResult {
    let p = ctx.cfg.params;
    let c = ctx.constants()?;
    let sector = ctx.cfg.sector().map_err(usage)?;
    let st = ctx.stamp("asymptotics", &(&ctx.cfg.run.sector, &ctx.cfg.run.asymptotics));
    let rep = cached_report(ctx, "asymptotics", &st.config_hash, || {
        let mut r = check_high_frequency_asymptotics(&p, &c, &sector, &ctx.cfg.run.asymptotics)?;
        r.seed = ctx.seed;
        Ok(r)
    })?;
    emit_report(ctx, "asymptotics", &rep)?;
    Ok(rep.verdict)
}

fn read_eta_file(path: &Path, n: usize) -> Result<Vec<C64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read eta file {}: {e}", path.display())))?;
    let v: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| usage(format!("eta file: {e}")))?;
    if v.len() != n {
        return Err(usage(format!("eta file has {} samples, grid has {n}", v.len())));
    }
    v.iter()
        .map(|x| match x {
            serde_json::Value::Number(a) => Ok(C64::new(a.as_f64().unwrap_or(f64::NAN), 0.0)),
            serde_json::Value::Array(a) if a.len() == 2 => Ok(C64::new(a[0].as_f64().unwrap_or(f64::NAN), a[1].as_f64().unwrap_or(f64::NAN))),
            _ => Err(usage("eta samples must be numbers or [re, im] pairs")),
        })
        .collect()
}

pub fn field(ctx: &Ctx) -> CmdResult {
    let f = &ctx.cfg.run.field;
    let p = ctx.cfg.params;
    let c = ctx.constants()?;
    let g = ctx.cfg.field_grid().map_err(usage)?;
    let eta = match f.eta.as_str() {
        "gaussian" => gaussian_samples(&g, f.width),
        s if s.starts_with("mode:") => {
            let k: Vec<i64> = s[5..]
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| usage(format!("bad mode index in {s:?}"))))
                .collect::<Result<_, _>>()?;
            if k.len() != g.dim - 1 {
                return Err(usage(format!("mode needs {} indices", g.dim - 1)));
            }
            mode_samples(&g, &k)
        }
        s if s.starts_with("file:") => read_eta_file(&ctx.cfg.base_dir.join(&s[5..]), g.len())?,
        s => return Err(usage(format!("--eta {s:?}: expected gaussian, mode:K or file:PATH"))),
    };
    let lam = C64::new(f.lambda_re, f.lambda_im);
    let sol = solve_field(&eta, lam, &p, &c, &g)?;
    let res = residual_field(&sol, &p);
    let norms = compute_norms(&sol);
    let quotient = resolvent_quotient(&sol).ok();
    for w in sol.warnings.iter().chain(&norms.warnings) {
        eprintln!("field: warning: {w}");
    }
    let parseval = norms.spectral.gap(&norms.grid);
    let ok = res.max() <= 1e-8 && parseval <= 1e-10;
    let st = ctx.stamp("field", f);
    let rec = json!({
        "schema_version": st.schema_version,
        "config_hash": st.config_hash,
        "seed": st.seed,
        "params": p,
        "lambda": lam,
        "grid": g,
        "warnings": sol.warnings.iter().chain(&norms.warnings).collect::<Vec<_>>(),
        "residual": res,
        "residual_max": res.max(),
        "norms": norms,
        "parseval_gap": parseval,
        "resolvent_quotient": quotient,
        "verdict": Verdict::from_bool(ok),
    });
    ctx.write("field.json", &pretty(&rec))?;
    let nt = g.dim - 1;
    let mut csv = st.csv_line();
    for d in 0..nt {
        let _ = write!(csv, "x{},", d + 1);
    }
    csv.push_str("xn,rho_re,rho_im");
    for j in 0..g.dim {
        let _ = write!(csv, ",u{0}_re,u{0}_im", j + 1);
    }
    csv.push_str(",h_re,h_im\n");
    for (n, &xn) in g.xn_nodes.iter().enumerate() {
        for i in 0..g.len() {
            for x in g.point(i) {
                let _ = write!(csv, "{x},");
            }
            let r = sol.rho[n][i];
            let _ = write!(csv, "{xn},{},{}", r.re, r.im);
            for j in 0..g.dim {
                let u = sol.u[j][n][i];
                let _ = write!(csv, ",{},{}", u.re, u.im);
            }
            let _ = writeln!(csv, ",{},{}", sol.h[i].re, sol.h[i].im);
        }
    }
    ctx.write("field.csv", &csv)?;
    println!(
        "field: {} (residual {:.2e}, parseval gap {:.2e}, quotient {})",
        Verdict::from_bool(ok),
        res.max(),
        parseval,
        quotient.map_or("undefined".into(), |q| format!("{q:.6e}"))
    );
    Ok(Verdict::from_bool(ok))
}

fn ramp(t: f64) -> f64 {
    if t > 0.0 {
        t.powi(4) * (-t).exp() / 24.0
    } else {
        0.0
    }
}

pub fn evolve(ctx: &Ctx) -> CmdResult {
    let e = &ctx.cfg.run.evolve;
    let p = ctx.cfg.params;
    let c = ctx.constants()?;
    let cfg = ctx.cfg.evolution_config().map_err(usage)?;
    let eta = mode_samples(&cfg.grid, &e.forcing_mode);
    let rate = e.forcing_rate;
    let forcing = ForcingTrace::separable(&cfg, &eta, |t| ramp(rate * t));
    let traj = evolve_boundary_forced(&forcing, &cfg, &p, &c)?;
    let ratio = maximal_regularity_ratio(&traj, &forcing, &cfg).ok();
    let causal = causality_ratio(&traj);
    let kin = kinematic_residual(&traj, &forcing, &cfg);
    let ok = causal <= 1e-4 && kin <= 1e-4;
    let st = ctx.stamp("evolve", e);
    let rec = json!({
        "schema_version": st.schema_version,
        "config_hash": st.config_hash,
        "seed": st.seed,
        "params": p,
        "gamma": traj.gamma,
        "gamma1_surrogate": traj.gamma1_surrogate,
        "mr_ratio": ratio,
        "mr_terms": traj.mr_terms,
        "causality_ratio": causal,
        "kinematic_residual": kin,
        "verdict": Verdict::from_bool(ok),
    });
    ctx.write("evolve.json", &pretty(&rec))?;
    let mut csv = st.csv_line();
    csv.push_str("t,rho_sup,u_sup,h_l2\n");
    for s in &traj.norms {
        let _ = writeln!(csv, "{},{},{},{}", s.t, s.rho_sup, s.u_sup, s.h_l2);
    }
    ctx.write("evolve.csv", &csv)?;
    if e.snapshots {
        let mut snap = st.csv_line();
        snap.push_str("t,point,xn,rho_re,rho_im,h_re,h_im\n");
        for j in (0..traj.times.len()).step_by(64) {
            for (n, &xn) in cfg.grid.xn_nodes.iter().enumerate() {
                for i in 0..cfg.grid.len() {
                    let (r, h) = (traj.rho[j][n][i], traj.h[j][i]);
                    let _ = writeln!(snap, "{},{i},{xn},{},{},{},{}", traj.times[j], r.re, r.im, h.re, h.im);
                }
            }
        }
        ctx.write("evolve_snapshots.csv", &snap)?;
    }
    println!(
        "evolve: {} (causality {causal:.2e}, kinematic residual {kin:.2e}, ratio {})",
        Verdict::from_bool(ok),
        ratio.map_or("undefined".into(), |r| format!("{r:.6e}"))
    );
    Ok(Verdict::from_bool(ok))
}

fn load_reports(path: &Path) -> Result<Vec<ScanReport>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let items = match v.get("reports") {
        Some(serde_json::Value::Array(a)) => a.clone(),
        _ => vec![v],
    };
    items
        .into_iter()
        .map(|r| ScanReport::from_json(&r.to_string()).map_err(|e| usage(format!("{}: {e}", path.display()))))
        .collect()
}

fn group(kind: &str) -> &'static str {
    match kind {
        "class-membership" | "loglog-slope" => "symbol classes",
        "lopatinskii" => "determinant lower bound",
        "asymptotics" => "high-frequency asymptotics",
        "oracle-compare" => "oracle equivalence",
        _ => "other",
    }
}

pub fn report(ctx: &Ctx, files: &[PathBuf]) -> CmdResult {
    if files.is_empty() {
        return Err(usage("report needs at least one input file"));
    }
    let mut reps = Vec::new();
    for f in files {
        reps.extend(load_reports(f)?);
    }
    let first = reps.first().ok_or_else(|| usage("no reports in the input files"))?.params_hash();
    if let Some(r) = reps.iter().find(|r| r.params_hash() != first) {
        return Err(usage(format!(
            "refusing to merge reports with different parameters (kind {}, config hash {})",
            r.kind, r.config_hash
        )));
    }
    let hashes: Vec<&str> = reps.iter().map(|r| r.config_hash.as_str()).collect();
    let st = Stamp::new(config_hash(&("report", &hashes)), ctx.seed);
    let mut txt = format!("# schema_version={} config_hash={} seed={}\n", st.schema_version, st.config_hash, st.seed);
    let _ = writeln!(txt, "{:<28} {:<30} {:>10} {:>6}", "group", "item", "lambda0", "verdict");
    let mut order: Vec<&ScanReport> = reps.iter().collect();
    order.sort_by(|a, b| (group(&a.kind), report_label(a)).cmp(&(group(&b.kind), report_label(b))).then(report_lambda0(a).total_cmp(&report_lambda0(b))));
    for r in &order {
        let _ = writeln!(txt, "{:<28} {:<30} {:>10} {:>6}", group(&r.kind), report_label(r), report_lambda0(r), r.verdict.to_string());
    }
    print!("{txt}");
    ctx.write("report.txt", &txt)?;
    ctx.write("report.csv", &shells_csv(&st, &reps))?;
    Ok(Verdict::Pass)
}
