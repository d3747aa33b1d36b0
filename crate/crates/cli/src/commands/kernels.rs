use anismhd::fit::loglog_fit;
use anismhd::kernels::kernel_norm;
use anismhd::norms::format_exponent;
use anismhd::tolerances::MIN_FIT_DECADES_KERNEL;
use serde_json::json;

use super::{manifest, Check};
use crate::config::{Campaign, KernelEntry};
use crate::error::Result;
use crate::output::{fmt, Output};

fn describe(e: &KernelEntry) -> String {
    format!(
        "{} beta={}{} gamma={} v={} m={} p={} q={}",
        e.kind,
        e.beta[0],
        e.beta[1],
        e.gamma,
        e.vertical,
        e.m,
        format_exponent(e.p),
        format_exponent(e.q)
    )
}

fn key(e: &KernelEntry) -> Vec<String> {
    vec![
        e.kind.to_string(),
        e.beta[0].to_string(),
        e.beta[1].to_string(),
        e.gamma.to_string(),
        e.vertical.to_string(),
        e.m.to_string(),
        format_exponent(e.p),
        format_exponent(e.q),
    ]
}

const KEY: [&str; 8] = ["kernel", "beta1", "beta2", "gamma", "vertical", "m", "p", "q"];

pub fn run(c: &Campaign) -> Result<Vec<Check>> {
    let k = &c.kernels;
    let out = Output::create(&c.out, "kernels", &manifest("kernels", c, json!(k)))?;
    let ts = k.t_range.samples();
    let span = (k.t_range.hi / k.t_range.lo).log10();
    let mut norms = Vec::new();
    let mut fits = Vec::new();
    let mut checks = Vec::new();
    for e in &k.suite {
        let spec = e.spec();
        let name = describe(e);
        if let Err(err) = spec.check_hypothesis(e.p, e.q) {
            checks.push(Check::new(name, false, err.to_string()));
            continue;
        }
        let vals = ts.iter().map(|&t| kernel_norm(&spec, t, e.p, e.q)).collect::<anismhd::Result<Vec<_>>>()?;
        for (t, v) in ts.iter().zip(&vals) {
            let mut row = key(e);
            row.extend([fmt(*t), fmt(*v)]);
            norms.push(row);
        }
        let predicted = spec.predicted_exponent(e.p, e.q);
        if span < MIN_FIT_DECADES_KERNEL - 1e-9 {
            checks.push(Check::new(name, false, format!("time range spans {span:.2} decades, need {MIN_FIT_DECADES_KERNEL}")));
            continue;
        }
        let fit = loglog_fit(&ts, &vals)?;
        let pass = (fit.exponent - predicted).abs() <= k.tolerance;
        let mut row = key(e);
        row.extend([fmt(predicted), fmt(fit.exponent), fmt(fit.stderr), if pass { "PASS" } else { "FAIL" }.into()]);
        fits.push(row);
        checks.push(Check::new(name, pass, format!("fitted {:.4}, predicted {predicted:.4}", fit.exponent)));
    }
    let mut h = KEY.to_vec();
    h.extend(["t", "norm"]);
    out.csv("kernel_norms.csv", &h, norms)?;
    let mut h = KEY.to_vec();
    h.extend(["predicted", "fitted", "stderr", "result"]);
    out.csv("kernel_fits.csv", &h, fits)?;
    out.json("kernels.summary.json", &checks)?;
    Ok(checks)
}
