use anismhd::fit::{loglog_fit, NormSeries};
use anismhd::init::{curl_gaussian, dipole_pair, DEFAULT_POTENTIAL};
use anismhd::linprop::{linear_decay_experiment, PropagatorKind};
use anismhd::norms::{format_exponent, inv, Components};
use serde_json::json;

use super::{manifest, Check};
use crate::config::{Campaign, LinearData, TimeRange};
use crate::error::{CliError, Result};
use crate::output::{fmt, Output};

/// Upper bound on the decay exponent of divergence-free localized data.
fn predicted(kind: PropagatorKind, comps: Components, p: f64, q: f64) -> f64 {
    let (a, b) = (1.0 - inv(p), 0.5 * (1.0 - inv(q)));
    match (kind, comps) {
        (PropagatorKind::FullHeat, _) => -a - b - 0.5,
        (PropagatorKind::HorizHeat, Components::Vertical) => -a - b,
        (PropagatorKind::HorizHeat, _) => -a,
    }
}

/// Minimum exponent difference between the control and the divergence-free data.
const CONTROL_GAP: f64 = 0.3;

pub fn run(c: &Campaign) -> Result<Vec<Check>> {
    let l = &c.linear;
    let grid = c.grid.build()?;
    let range = match l.t_range {
        Some(r) => r,
        None => {
            let hi = grid.window_limit();
            if hi <= 1.0 {
                return Err(CliError::Config(format!("box too small for a default time range: window ends at t = {hi:.3}")));
            }
            TimeRange { lo: 1.0, hi, n: 12 }
        }
    };
    let out = Output::create(&c.out, "linear", &manifest("linear", c, json!({ "linear": l, "t_range": range })))?;
    let kind = l.propagator.kind();
    let ts = range.samples();
    let pq: Vec<(f64, f64)> = l.norms.iter().map(|n| (n.p, n.q)).collect();
    let mut runs: Vec<(&str, Vec<NormSeries>)> = Vec::new();
    match l.data {
        LinearData::CurlGaussian => {
            let f = curl_gaussian(&grid, l.width, DEFAULT_POTENTIAL, false)?;
            runs.push(("curl-gaussian", linear_decay_experiment(kind, &f, l.components, &pq, &ts)?));
        }
        LinearData::DipolePair => {
            let (f, control) = dipole_pair(&grid, l.width)?;
            runs.push(("dipole", linear_decay_experiment(kind, &f, l.components, &pq, &ts)?));
            runs.push(("control", linear_decay_experiment(kind, &control, l.components, &pq, &ts)?));
        }
    }
    let mut norms = Vec::new();
    let mut fits = Vec::new();
    let mut fitted = Vec::new();
    let mut checks = Vec::new();
    for (data, series) in &runs {
        for s in series {
            for (t, v) in &s.points {
                norms.push(vec![data.to_string(), format_exponent(s.p), format_exponent(s.q), fmt(*t), fmt(*v)]);
            }
            let fit = loglog_fit(&s.times(), &s.values())?;
            fitted.push((*data, s.p, s.q, fit.exponent));
            let bound = predicted(kind, l.components, s.p, s.q);
            let (bound_col, result) = if *data == "control" {
                (String::new(), "RECORDED".to_string())
            } else {
                let pass = fit.exponent <= bound + l.tolerance;
                let name = format!("{data} p={} q={}", format_exponent(s.p), format_exponent(s.q));
                checks.push(Check::new(name, pass, format!("fitted {:.4}, bound {bound:.4}", fit.exponent)));
                (fmt(bound), if pass { "PASS" } else { "FAIL" }.to_string())
            };
            fits.push(vec![
                data.to_string(),
                format_exponent(s.p),
                format_exponent(s.q),
                bound_col,
                fmt(fit.exponent),
                fmt(fit.stderr),
                result,
            ]);
        }
    }
    for &(_, p, q, ctrl) in fitted.iter().filter(|f| f.0 == "control") {
        if let Some(&(_, _, _, data)) = fitted.iter().find(|f| f.0 == "dipole" && f.1 == p && f.2 == q) {
            let pass = ctrl - data >= CONTROL_GAP;
            let name = format!("control gap p={} q={}", format_exponent(p), format_exponent(q));
            checks.push(Check::new(name, pass, format!("control {ctrl:.4} vs data {data:.4}")));
        }
    }
    out.csv("linear_norms.csv", &["data", "p", "q", "t", "norm"], norms)?;
    out.csv("linear_fits.csv", &["data", "p", "q", "bound", "fitted", "stderr", "result"], fits)?;
    out.json("linear.summary.json", &checks)?;
    Ok(checks)
}
