//! Analyses of a stored trajectory: integral-equation checks and decay reports.

use std::fs;
use std::path::{Path, PathBuf};

use anismhd::asympt::{
    gap_rate_row, gap_series, predicted_rate, rate_report, format_table, Ingredients, ProfileSpec, RateRow, TheoremId,
};
use anismhd::duhamel::{all_terms, integrals, DuhamelAccumulator, ProductGroups, ProfileAccumulator};
use anismhd::field::MhdState;
use anismhd::fit::NormSeries;
use anismhd::grid::DerivativeIndex;
use anismhd::io::read_state;
use anismhd::linprop::apply_semigroup;
use anismhd::norms::{format_exponent, parse_exponent};
use anismhd::solver::{Products, Trajectory};
use anismhd::tolerances::MIN_DUHAMEL_SNAPSHOTS;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::run::{CHECKPOINT_DIR, FINAL, INITIAL, NORMS};
use super::{manifest, Check};
use crate::config::{Campaign, GridConfig, Overrides};
use crate::error::{CliError, Result};
use crate::output::{fmt, read_csv, Output};

/// A run directory loaded back into memory.
pub struct Stored {
    pub dir: PathBuf,
    pub hash: String,
    pub traj: Trajectory,
}

impl Stored {
    fn error(&self, reason: impl Into<String>) -> CliError {
        CliError::Trajectory { path: self.dir.clone(), reason: reason.into() }
    }

    fn require_checkpoints(&self, what: &str) -> Result<()> {
        if self.traj.snapshots.is_empty() {
            return Err(self.error(format!(
                "{what} needs a checkpoint at every sample stride, at least {MIN_DUHAMEL_SNAPSHOTS} of them; \
                 rerun with solver.checkpoints = true"
            )));
        }
        Ok(())
    }
}

fn same_grid(a: &GridConfig, b: &GridConfig) -> bool {
    a.n.dims() == b.n.dims() && a.l_h == b.l_h && a.l_v.unwrap_or(a.l_h) == b.l_v.unwrap_or(b.l_h)
}

fn field<T: serde::de::DeserializeOwned>(m: &serde_json::Value, ptr: &str, path: &Path) -> Result<T> {
    let v = m.pointer(ptr).cloned().ok_or_else(|| CliError::Trajectory {
        path: path.to_path_buf(),
        reason: format!("manifest lacks {ptr}"),
    })?;
    Ok(serde_json::from_value(v)?)
}

/// Read the run manifest, reconcile it with the requested campaign and load the states.
pub fn load(dir: &Path, config: Option<&Path>, ov: &Overrides) -> Result<(Campaign, Stored)> {
    let mpath = dir.join("run.manifest.json");
    let bytes = fs::read(&mpath).map_err(|e| CliError::Trajectory { path: dir.to_path_buf(), reason: format!("no run manifest: {e}") })?;
    let hash: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let m: serde_json::Value = serde_json::from_slice(&bytes)?;
    let base = Campaign {
        name: field(&m, "/campaign", &mpath)?,
        system: field(&m, "/system", &mpath)?,
        seed: field(&m, "/seed", &mpath)?,
        grid: field(&m, "/grid", &mpath)?,
        init: field(&m, "/config/init", &mpath)?,
        solver: field(&m, "/config/solver", &mpath)?,
        ..Campaign::default()
    };
    let mut c = match config {
        Some(p) => Campaign::load(Some(p), ov)?,
        None => {
            let mut c = base.clone();
            c.apply(ov);
            c
        }
    };
    if c.system != base.system {
        return Err(CliError::Mismatch(format!("trajectory was run with system {}, campaign requests {}", base.system, c.system)));
    }
    if !same_grid(&c.grid, &base.grid) {
        return Err(CliError::Mismatch(format!(
            "trajectory grid {:?} box {}, campaign grid {:?} box {}",
            base.grid.n.dims(),
            base.grid.l_h,
            c.grid.n.dims(),
            c.grid.l_h
        )));
    }
    c.seed = base.seed;
    c.init = base.init.clone();
    c.solver = base.solver.clone();
    if ov.out.is_none() {
        c.out = dir.to_path_buf();
    }
    c.validate()?;

    let initial = read_state(&dir.join(INITIAL))?;
    let final_state = read_state(&dir.join(FINAL))?;
    let mut names: Vec<PathBuf> = match fs::read_dir(dir.join(CHECKPOINT_DIR)) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "anis"))
            .collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    let snapshots = names.iter().map(|p| read_state(p)).collect::<anismhd::Result<Vec<MhdState>>>()?;
    let series = read_series(&dir.join(NORMS), &hash)?;
    let times = snapshots.iter().map(|s| s.t).collect();
    let traj = Trajectory {
        kind: base.system,
        config: base.solver.solver_config(),
        initial,
        final_state,
        times,
        snapshots,
        energy: Vec::new(),
        dissipation: Vec::new(),
        divergence: Vec::new(),
        series,
        halvings: 0,
    };
    Ok((c, Stored { dir: dir.to_path_buf(), hash, traj }))
}

fn read_series(path: &Path, hash: &str) -> Result<Vec<NormSeries>> {
    let table = read_csv(path)?;
    if table.hash != hash {
        return Err(CliError::Trajectory { path: path.to_path_buf(), reason: "norm table belongs to a different run".into() });
    }
    let bad = |r: &str| CliError::Trajectory { path: path.to_path_buf(), reason: r.to_string() };
    let mut out: Vec<NormSeries> = Vec::new();
    for row in &table.rows {
        if row.len() != 6 {
            return Err(bad("norm rows need six columns"));
        }
        let p = parse_exponent(&row[1])?;
        let q = parse_exponent(&row[2])?;
        let alpha: DerivativeIndex = row[3].parse()?;
        let t: f64 = row[4].parse().map_err(|_| bad("bad time"))?;
        let v: f64 = row[5].parse().map_err(|_| bad("bad value"))?;
        let pos = out.iter().position(|s| s.label == row[0] && s.p == p && s.q == q && s.alpha == alpha);
        match pos {
            Some(i) => out[i].push(t, v),
            None => {
                let mut s = NormSeries::new(row[0].clone(), p, q, alpha);
                s.push(t, v);
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn analysis_manifest(command: &str, c: &Campaign, stored: &Stored) -> serde_json::Value {
    manifest(command, c, json!({ "analysis": c.analysis, "trajectory_manifest_sha256": stored.hash }))
}

fn l2_pair(u: &anismhd::VectorField, b: &anismhd::VectorField) -> f64 {
    (u.l2().powi(2) + b.l2().powi(2)).sqrt()
}

pub fn duhamel(c: &Campaign, stored: &Stored) -> Result<Vec<Check>> {
    stored.require_checkpoints("the Duhamel analysis")?;
    let out = Output::create(&c.out, "duhamel", &analysis_manifest("duhamel", c, stored))?;
    let traj = &stored.traj;
    let times = if c.analysis.duhamel_at.is_empty() {
        vec![traj.snapshots.last().expect("checked above").t]
    } else {
        c.analysis.duhamel_at.clone()
    };
    let kind = traj.kind;
    let mut term_rows = Vec::new();
    let mut gap_rows = Vec::new();
    let mut checks = Vec::new();
    for t in times {
        let ints = integrals(traj, t, ProductGroups::ALL)?;
        for id in all_terms(kind) {
            let term = ints.term(id)?;
            let err = term.error.map(fmt).unwrap_or_default();
            term_rows.push(vec![fmt(t), id.to_string(), fmt(term.field.l2()), err]);
        }
        let state = traj
            .snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or_else(|| stored.error(format!("no checkpoint at t = {t}")))?;
        let recon = ints.reconstruct(&traj.initial)?;
        let gap = l2_pair(&recon.u.sub(&state.u)?, &recon.b.sub(&state.b)?);
        let lu = apply_semigroup(kind.velocity_propagator(), &traj.initial.u, t)?;
        let lb = apply_semigroup(kind.magnetic_propagator(), &traj.initial.b, t)?;
        let nonlinear = l2_pair(&state.u.sub(&lu)?, &state.b.sub(&lb)?);
        let relative = if gap == 0.0 { 0.0 } else if nonlinear > 0.0 { gap / nonlinear } else { f64::INFINITY };
        let pass = relative <= c.analysis.duhamel_tolerance;
        gap_rows.push(vec![
            fmt(t),
            fmt(gap),
            fmt(nonlinear),
            fmt(relative),
            fmt(c.analysis.duhamel_tolerance),
            if pass { "PASS" } else { "FAIL" }.into(),
        ]);
        checks.push(Check::new(
            format!("reconstruction at t = {t}"),
            pass,
            format!("relative gap {relative:.3e} (nonlinear part {nonlinear:.3e})"),
        ));
    }
    out.csv("duhamel_terms.csv", &["t", "term", "l2", "error_estimate"], term_rows)?;
    out.csv("duhamel_gaps.csv", &["t", "gap", "nonlinear", "relative", "tolerance", "result"], gap_rows)?;
    out.json("duhamel.summary.json", &checks)?;
    Ok(checks)
}

/// Row for a series that is identically zero: nothing decays, nothing to fit.
fn trivial_row(s: &NormSeries, predicted: f64, bound: bool) -> RateRow {
    RateRow {
        quantity: s.label.clone(),
        p: s.p,
        q: s.q,
        alpha: s.alpha,
        predicted,
        fitted: f64::NAN,
        stderr: f64::NAN,
        bound,
        pass: true,
    }
}

fn rows_for(series: &[NormSeries], c: &Campaign) -> Result<Vec<(RateRow, bool)>> {
    let mut rows = Vec::new();
    for s in series {
        let Some((predicted, bound)) = predicted_rate(c.system, base_label(&s.label), s.p, s.alpha) else {
            continue;
        };
        if s.values().iter().all(|v| *v == 0.0) {
            rows.push((trivial_row(s, predicted, bound), true));
        } else {
            rows.extend(rate_report(std::slice::from_ref(s), c.system, c.window())?.into_iter().map(|r| (r, false)));
        }
    }
    Ok(rows)
}

fn base_label(label: &str) -> &str {
    label.find(['u', 'B']).map_or(label, |i| &label[i..])
}

/// Largest ratio gap(4t)/gap(t) over samples t with 4t inside the window.
fn worst_ratio(s: &NormSeries, window: (f64, f64)) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for &(t, v) in s.points.iter().filter(|p| p.0 >= window.0 && 4.0 * p.0 <= window.1 * (1.0 + 1e-12)) {
        let later = s.value_at(4.0 * t)?;
        let r = if later == 0.0 { 0.0 } else { later / v };
        worst = Some(worst.map_or(r, |w: f64| w.max(r)));
    }
    worst
}

fn gap_ingredients(stored: &Stored, specs: &[ProfileSpec], dealias: f64) -> Result<(Ingredients, Vec<MhdState>)> {
    let traj = &stored.traj;
    let grid = traj.grid();
    let mut acc = ProfileAccumulator::new(grid, dealias);
    for s in &traj.snapshots {
        acc.push(s)?;
    }
    let mut ing = Ingredients::from_accumulator(&acc, specs)?;
    let mut states: Vec<MhdState> = traj.snapshots.iter().filter(|s| s.t > 0.0).cloned().collect();
    if specs.iter().any(ProfileSpec::needs_window_integrals) {
        let groups = ProductGroups { uu: false, bb: true, bu: false };
        let mut w = DuhamelAccumulator::new(traj.kind, grid, groups);
        for s in &traj.snapshots {
            w.push(s.t, &Products::compute(&s.u, &s.b, dealias))?;
            if w.samples() >= MIN_DUHAMEL_SNAPSHOTS {
                ing.windows.push(w.integrals()?);
            }
        }
        let first = ing.windows.first().map_or(f64::INFINITY, |w| w.t);
        states.retain(|s| s.t >= first);
    }
    Ok((ing, states))
}

pub fn asympt(c: &Campaign, stored: &Stored) -> Result<Vec<Check>> {
    let specs: Vec<ProfileSpec> = c.analysis.theorems.iter().map(|&t| ProfileSpec::primary(t)).collect();
    if !specs.is_empty() {
        stored.require_checkpoints("the profile-gap analysis")?;
    }
    let out = Output::create(&c.out, "asympt", &analysis_manifest("asympt", c, stored))?;
    let window = c.window();
    let mut rows = rows_for(&stored.traj.series, c)?;
    let mut gap_rows = Vec::new();
    let mut checks = Vec::new();
    if !specs.is_empty() {
        let (ing, states) = gap_ingredients(stored, &specs, stored.traj.config.dealias)?;
        for spec in &specs {
            for n in &c.analysis.gap_norms {
                let s = gap_series(spec, &stored.traj.initial, &states, &ing, n.p, n.q)?;
                for (t, v) in &s.points {
                    gap_rows.push(vec![spec.label(), format_exponent(n.p), format_exponent(n.q), fmt(*t), fmt(*v)]);
                }
                if c.analysis.gap_decrease.contains(&spec.theorem) {
                    checks.push(gap_check(spec.theorem, &s, window, c.analysis.gap_ratio));
                }
                let raw = s.normalized(-spec.normalizing_power(n.p));
                if raw.values().iter().all(|v| *v == 0.0) {
                    continue;
                }
                if let Some(r) = gap_rate_row(spec, &raw, window)? {
                    rows.push((r, false));
                }
            }
        }
    }
    for (r, trivial) in &rows {
        let what = if *trivial { "identically zero".to_string() } else { format!("fitted {:.4}", r.fitted) };
        let rel = if r.bound { "<=" } else { "~" };
        checks.push(Check::new(
            format!("{} p={} alpha={}", r.quantity, format_exponent(r.p), r.alpha),
            r.pass,
            format!("{what}, predicted {rel} {:.4}", r.predicted),
        ));
    }
    let csv_rows = rows.iter().map(|(r, trivial)| {
        vec![
            r.quantity.clone(),
            format_exponent(r.p),
            format_exponent(r.q),
            r.alpha.to_string(),
            if r.bound { "bound" } else { "rate" }.into(),
            fmt(r.predicted),
            fmt(r.fitted),
            fmt(r.stderr),
            if *trivial { "TRIVIAL" } else if r.pass { "PASS" } else { "FAIL" }.into(),
        ]
    });
    out.csv("rates.csv", &["quantity", "p", "q", "alpha", "claim", "predicted", "fitted", "stderr", "result"], csv_rows)?;
    out.csv("gaps.csv", &["profile", "p", "q", "t", "normalized_gap"], gap_rows)?;
    let plain: Vec<RateRow> = rows.iter().map(|r| r.0.clone()).collect();
    fs::write(out.path("rates.txt"), format_table(&plain))?;
    print!("{}", format_table(&plain));
    out.json("asympt.summary.json", &checks)?;
    Ok(checks)
}

fn gap_check(theorem: TheoremId, s: &NormSeries, window: (f64, f64), limit: f64) -> Check {
    let name = format!("{theorem} gap decrease p={}", format_exponent(s.p));
    if s.values().iter().all(|v| *v == 0.0) {
        return Check::new(name, true, "gap identically zero");
    }
    match worst_ratio(s, window) {
        Some(r) => Check::new(name, r <= limit, format!("largest gap(4t)/gap(t) = {r:.3}, limit {limit}")),
        None => Check::new(name, false, format!("window [{}, {}] holds no pair t, 4t", window.0, window.1)),
    }
}
