use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use delaykinetic::io::{
    fmt_f64, write_measure_curve_csv, write_path_measure_dir, write_picard_csv, write_table_csv,
    write_trajectories_csv,
};
use delaykinetic::{
    coherence_check, convergence_study, ev_curve, solve_fixed_point_model, solve_transport, stability_study,
    stability_study_transport, Model, PathMeasureCurve, PicardRecord, StabilityReport,
};
use log::info;
use serde_json::{json, Value};

use crate::config::{Experiment, Mode, StabilityRoute};

/// Collects the files written during a run.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        info!("writing {}", path.display());
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    fn picard(&mut self, name: &str, trace: &[PicardRecord]) -> Result<()> {
        write_picard_csv(self.create(name)?, trace)?;
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.files.push(name.to_string());
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn initial_paths(&mut self, exp: &Experiment) -> Result<()> {
        for f in write_path_measure_dir(&self.dir.join("initial"), &exp.initial)? {
            let rel = f.strip_prefix(&self.dir).expect("inside the output directory");
            self.files.push(rel.to_string_lossy().replace('\\', "/"));
        }
        Ok(())
    }
}

fn stability_rows(report: &StabilityReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| vec![fmt_f64(r.t), fmt_f64(r.measured), fmt_f64(r.envelope)])
        .collect()
}

fn curve_outputs(out: &mut Artifacts, curve: &PathMeasureCurve) -> Result<()> {
    write_trajectories_csv(out.create("trajectories.csv")?, &curve.trajectories())?;
    write_measure_curve_csv(out.create("positions.csv")?, &curve.position_curve()?)?;
    Ok(())
}

fn model_summary(model: &Model) -> Value {
    json!({
        "name": model.kernel().name(),
        "lipschitz": model.lipschitz(),
        "growth_constant": model.growth_constant(),
        "route": match model { Model::Path(_) => "path", Model::Imperfect(..) => "imperfect" },
    })
}

fn execute(exp: &Experiment, out: &mut Artifacts) -> Result<Value> {
    let model = &exp.model;
    let fp = &exp.fixed_point;
    let cfg = &exp.integrator;
    let mut summary = json!({
        "mode": exp.config.mode,
        "model": model_summary(model),
        "steps": cfg.steps(),
        "atoms": exp.initial.len(),
    });
    if let crate::config::InitialSpec::Sample { seed, .. } = &exp.config.initial {
        summary["seed"] = json!(seed);
    }
    let parts = || match model {
        Model::Imperfect(k, rho) => Ok((k, rho)),
        Model::Path(_) => Err(anyhow::anyhow!("model has no (K~, rho) decomposition")),
    };
    match exp.config.mode {
        Mode::Simulate => {
            out.initial_paths(exp)?;
            let curve = PathMeasureCurve::from_particles(model, &exp.initial, cfg)?;
            curve_outputs(out, &curve)?;
            summary["support_radius"] = json!(curve.support_radius());
        }
        Mode::Meanfield => {
            out.initial_paths(exp)?;
            let sol = solve_fixed_point_model(&exp.initial, model, fp)?;
            curve_outputs(out, &sol.curve)?;
            out.picard("picard.csv", &sol.trace)?;
            summary["iterations"] = json!(sol.trace.len());
            summary["final_residual"] = json!(sol.trace.last().map(|r| r.residual));
        }
        Mode::Transport => {
            let (k, rho) = parts()?;
            out.initial_paths(exp)?;
            let sol = solve_transport(&ev_curve(&exp.initial)?, k, rho, fp)?;
            write_measure_curve_csv(out.create("positions.csv")?, &sol.curve)?;
            out.picard("picard.csv", &sol.trace)?;
            summary["iterations"] = json!(sol.trace.len());
            summary["final_residual"] = json!(sol.trace.last().map(|r| r.residual));
        }
        Mode::Coherence => {
            let (k, rho) = parts()?;
            out.initial_paths(exp)?;
            let report = coherence_check(&exp.initial, k, rho, fp)?;
            let rows: Vec<Vec<String>> = report
                .times
                .iter()
                .zip(&report.gap)
                .map(|(t, g)| vec![fmt_f64(*t), fmt_f64(*g)])
                .collect();
            write_table_csv(out.create("coherence.csv")?, &["t", "gap"], &rows)?;
            out.picard("picard_fixed_point.csv", &report.fixed_point_trace)?;
            out.picard("picard_transport.csv", &report.transport_trace)?;
            summary["max_gap"] = json!(report.max_gap());
            summary["compatibility"] = json!(report.compatibility);
            summary["picard_tol"] = json!(fp.tol);
        }
        Mode::Converge => {
            let setup = exp.convergence.as_ref().expect("validated converge section");
            let table = convergence_study(model, setup, cfg)?;
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| vec![r.n.to_string(), r.seed.to_string(), fmt_f64(r.t), fmt_f64(r.w1)])
                .collect();
            write_table_csv(out.create("convergence.csv")?, &["n", "seed", "t", "w1"], &rows)?;
            let medians: Vec<Vec<String>> = table
                .medians
                .iter()
                .map(|m| vec![m.n.to_string(), fmt_f64(m.t), fmt_f64(m.median)])
                .collect();
            write_table_csv(out.create("medians.csv")?, &["n", "t", "median_w1"], &medians)?;
            summary["n_ref"] = json!(table.n_ref);
            summary["seeds"] = json!(setup.seeds);
            summary["strictly_decreasing"] = setup
                .times
                .iter()
                .map(|&t| json!({"t": t, "pass": table.strictly_decreasing_at(t)}))
                .collect();
        }
        Mode::Stability => {
            let spec = exp.config.stability.as_ref().expect("validated stability section");
            let mut results = Vec::new();
            for (i, &eps) in spec.epsilons.iter().enumerate() {
                info!("stability run with epsilon = {eps}");
                let report = match spec.route {
                    StabilityRoute::Paths => stability_study(model, &exp.initial, eps, fp, spec.tolerance)?,
                    StabilityRoute::Transport => {
                        let (k, rho) = parts()?;
                        stability_study_transport(k, rho, &ev_curve(&exp.initial)?, eps, fp, spec.tolerance)?
                    }
                };
                write_table_csv(
                    out.create(&format!("stability_{i}.csv"))?,
                    &["t", "measured_w1", "envelope"],
                    &stability_rows(&report),
                )?;
                results.push(json!({
                    "epsilon": eps,
                    "w1_in": report.w1_in,
                    "margin": report.margin,
                    "pass": report.pass,
                    "file": format!("stability_{i}.csv"),
                }));
            }
            summary["all_pass"] = json!(results.iter().all(|r| r["pass"] == json!(true)));
            summary["tolerance"] = json!(spec.tolerance);
            summary["runs"] = Value::Array(results);
        }
    }
    Ok(summary)
}

/// Runs an experiment, writing all artifacts and the manifest into `dir`.
pub fn run_experiment(exp: &Experiment, dir: &Path) -> Result<Vec<String>> {
    let started = Instant::now();
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut out = Artifacts::new(dir)?;
    info!("mode {:?}, {} atoms, {} steps", exp.config.mode, exp.initial.len(), exp.integrator.steps());
    let summary = execute(exp, &mut out)?;
    out.json("summary.json", &summary)?;
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    files.sort();
    let manifest = json!({
        "config": exp.config,
        "library_version": delaykinetic::VERSION,
        "started_unix_seconds": stamp,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "files": files,
    });
    out.json("manifest.json", &manifest)?;
    Ok(files)
}
