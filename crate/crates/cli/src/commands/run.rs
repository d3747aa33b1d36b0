use std::fs;
use std::path::PathBuf;

use anismhd::io::write_state;
use anismhd::norms::format_exponent;
use anismhd::solver::{energy_balance, run as integrate, Observer, Sample};
use anismhd::tolerances::AMPLITUDE_ENVELOPE;
use serde_json::json;

use super::{manifest, Check};
use crate::config::Campaign;
use crate::error::Result;
use crate::output::{check_disk, fmt, Output};

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const INITIAL: &str = "initial.anis";
pub const FINAL: &str = "final.anis";
pub const NORMS: &str = "norms.csv";

struct CheckpointWriter {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl Observer for CheckpointWriter {
    fn observe(&mut self, sample: &Sample<'_>) -> anismhd::Result<()> {
        let name = format!("state_{:06}.anis", sample.step);
        write_state(&self.dir.join(&name), sample.state, json!({ "step": sample.step, "manifest_sha256": self.hash }))?;
        self.written.push(name);
        Ok(())
    }
}

pub fn warnings(c: &Campaign) -> Vec<String> {
    let a = c.init.amplitude();
    let mut w = Vec::new();
    if a > AMPLITUDE_ENVELOPE {
        w.push(format!(
            "amplitude {a} exceeds the small-data envelope {AMPLITUDE_ENVELOPE}; decay rates may not apply"
        ));
    }
    w
}

pub fn run(c: &Campaign) -> Result<Vec<Check>> {
    let grid = c.grid.build()?;
    let cfg = c.solver.solver_config();
    let observers = c.observer_specs();
    let warn = warnings(c);
    for w in &warn {
        eprintln!("warning: {w}");
    }
    let samples = cfg.steps()? / cfg.stride + 2;
    let state_bytes = 6 * grid.len() as u64 * 8 + 4096;
    let stored = if c.solver.checkpoints { samples as u64 + 2 } else { 2 };
    check_disk(&c.out, stored * state_bytes + samples as u64 * observers.len() as u64 * 64)?;

    let section = json!({
        "init": c.init,
        "solver": c.solver,
        "observers": observers.iter().map(|o| json!({
            "label": o.label(),
            "p": format_exponent(o.p),
            "q": format_exponent(o.q),
            "alpha": o.alpha.to_string(),
        })).collect::<Vec<_>>(),
        "warnings": warn,
    });
    let out = Output::create(&c.out, "run", &manifest("run", c, section))?;
    let init = c.init.build(&grid)?;
    let meta = json!({ "manifest_sha256": out.hash() });
    write_state(&out.path(INITIAL), &init, meta.clone())?;

    let dir = out.path(CHECKPOINT_DIR);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    let mut writer = CheckpointWriter { dir: dir.clone(), hash: out.hash().to_string(), written: Vec::new() };
    let traj = if c.solver.checkpoints {
        fs::create_dir_all(&dir)?;
        integrate(c.system, &init, &cfg, &observers, &mut [&mut writer])?
    } else {
        integrate(c.system, &init, &cfg, &observers, &mut [])?
    };
    write_state(&out.path(FINAL), &traj.final_state, meta)?;

    let mut rows = Vec::new();
    for s in &traj.series {
        for (t, v) in &s.points {
            rows.push(vec![s.label.clone(), format_exponent(s.p), format_exponent(s.q), s.alpha.to_string(), fmt(*t), fmt(*v)]);
        }
    }
    out.csv(NORMS, &["label", "p", "q", "alpha", "t", "value"], rows)?;
    let rows = (0..traj.times.len()).map(|i| {
        vec![fmt(traj.times[i]), fmt(traj.energy[i]), fmt(traj.dissipation[i]), fmt(traj.divergence[i])]
    });
    out.csv("energy.csv", &["t", "energy", "dissipated", "divergence"], rows)?;

    let e0 = traj.energy.first().copied().unwrap_or(0.0);
    let residual = energy_balance(&traj).iter().fold(0.0_f64, |m, r| m.max(r.1.abs()));
    out.json(
        "run.summary.json",
        &json!({
            "final_t": traj.final_state.t,
            "samples": traj.times.len(),
            "step_halvings": traj.halvings,
            "energy_initial": e0,
            "energy_residual_max": residual,
            "divergence_max": traj.max_divergence(),
            "checkpoints": writer.written,
        }),
    )?;
    println!(
        "system {} on {:?}: t = {}, {} samples, energy residual {:.3e}",
        c.system,
        grid.n(),
        traj.final_state.t,
        traj.times.len(),
        if e0 > 0.0 { residual / e0 } else { 0.0 }
    );
    Ok(Vec::new())
}
