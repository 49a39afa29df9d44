//! Experiment execution and artifact writing: per trial a `particles.csv`,
//! `metrics.json`, and `scatter.svg` under `<out>/<trial_id>/`; matrix runs
//! add an aggregate `metrics.csv`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use csvgd_core::eval::{
    ground_truth_seed, rejection_eligible, rejection_sample, run_trial, trial_matrix, MethodKind,
    MetricsRecord, TrialPlan,
};
use csvgd_core::{ParticleSet, SolveReport};

use crate::config::{Experiment, PlotHints};
use crate::svg::{scatter_svg, Overlay};

#[derive(Serialize)]
struct MetricsJson {
    emd: Option<f64>,
    total_gradient_steps: u64,
    outer_iterations: u64,
    max_abs_h: f64,
    max_pos_g: f64,
    converged: bool,
    seed: u64,
    method: String,
    formulation: String,
    wall_time_s: f64,
}

fn particles_csv(particles: &ParticleSet<f64>) -> String {
    let mut out = String::from("particle_id");
    for k in 0..particles.d() {
        out.push_str(&format!(",dim_{k}"));
    }
    out.push('\n');
    for (i, row) in particles.rows().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

fn scatter_for(
    particles: &ParticleSet<f64>,
    hints: &PlotHints,
) -> String {
    let mut overlays = Vec::new();
    for &(cx, cy, r, filled) in &hints.circles {
        overlays.push(Overlay::Circle(cx, cy, r, filled));
    }
    if let Some((x0, y0, x1, y1)) = hints.rect {
        overlays.push(Overlay::Rect(x0, y0, x1, y1));
    }
    if let Some((start, goal)) = hints.endpoints {
        for row in particles.rows() {
            let mut pts = vec![(start[0], start[1])];
            for pair in row.chunks_exact(2) {
                pts.push((pair[0], pair[1]));
            }
            pts.push((goal[0], goal[1]));
            overlays.push(Overlay::Polyline(pts));
        }
    }
    // 2-d projection: raw for d = 2, first two coordinates otherwise
    let points: Vec<(f64, f64)> = particles.rows().map(|r| (r[0], r[1])).collect();
    scatter_svg(&points, &overlays)
}

fn trial_id(problem: &str, method: MethodKind, formulation: csvgd_core::SoftKind, seed: u64) -> String {
    format!("{problem}_{}_{}_s{seed}", method.tag(), formulation.tag())
}

pub fn write_trial(
    out_root: &Path,
    record: &MetricsRecord<f64>,
    report: &SolveReport<f64>,
    hints: &PlotHints,
) -> std::io::Result<PathBuf> {
    let dir = out_root.join(trial_id(
        &record.problem,
        record.method,
        record.formulation,
        record.seed,
    ));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("particles.csv"), particles_csv(&report.particles))?;
    let metrics = MetricsJson {
        emd: record.emd,
        total_gradient_steps: record.total_gradient_steps,
        outer_iterations: record.outer_iterations,
        max_abs_h: record.max_abs_h,
        max_pos_g: record.max_pos_g,
        converged: record.converged,
        seed: record.seed,
        method: record.method.tag().to_string(),
        formulation: record.formulation.tag().to_string(),
        wall_time_s: report.wall_time.as_secs_f64(),
    };
    let mut json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    json.push('\n');
    fs::write(dir.join("metrics.json"), json)?;
    fs::write(
        dir.join("scatter.svg"),
        scatter_for(&report.particles, hints),
    )?;
    Ok(dir)
}

fn metrics_csv_row(r: &MetricsRecord<f64>) -> String {
    let emd = r.emd.map(|v| format!("{v}")).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        r.problem,
        r.method.tag(),
        r.formulation.tag(),
        r.seed,
        r.n_particles,
        emd,
        r.total_gradient_steps,
        r.outer_iterations,
        r.max_abs_h,
        r.max_pos_g,
        r.converged
    )
}

pub const METRICS_CSV_HEADER: &str =
    "problem,method,formulation,seed,n_particles,emd,total_gradient_steps,outer_iterations,max_abs_h,max_pos_g,converged\n";

/// Run a single experiment (or its matrix, when the config declares one).
pub fn execute(exp: &Experiment) -> Result<(), csvgd_core::Error> {
    let hints = &exp.plot;
    let out_root = PathBuf::from(&exp.out);
    if let Some(matrix) = &exp.matrix {
        let plan = TrialPlan {
            methods: matrix.methods.clone(),
            formulations: matrix.formulations.clone(),
            seeds: matrix.seeds.clone(),
            config: exp.config.clone(),
            params: exp.params,
            compute_emd: matrix.emd,
        };
        let results = trial_matrix(&plan, |seed| (exp.build)(seed))?;
        fs::create_dir_all(&out_root).map_err(io_err)?;
        let mut csv = fs::File::create(out_root.join("metrics.csv")).map_err(io_err)?;
        csv.write_all(METRICS_CSV_HEADER.as_bytes()).map_err(io_err)?;
        for (record, report) in &results {
            write_trial(&out_root, record, report, hints).map_err(io_err)?;
            csv.write_all(metrics_csv_row(record).as_bytes()).map_err(io_err)?;
        }
        println!(
            "wrote {} trials and metrics.csv under {}",
            results.len(),
            out_root.display()
        );
        return Ok(());
    }

    let problem = (exp.build)(exp.seed);
    let ground_truth = if rejection_eligible(&problem) {
        Some(rejection_sample(
            &problem,
            exp.config.n_particles,
            ground_truth_seed(exp.seed),
        )?)
    } else {
        None
    };
    let (record, report) = run_trial(
        &problem,
        exp.method,
        &exp.params,
        exp.formulation,
        &exp.config,
        ground_truth.as_ref(),
    )?;
    let dir = write_trial(&out_root, &record, &report, hints).map_err(io_err)?;
    println!(
        "{}: converged={} steps={} max|h|={:.3e} max(g)+={:.3e}{} -> {}",
        record.problem,
        record.converged,
        record.total_gradient_steps,
        record.max_abs_h,
        record.max_pos_g,
        record
            .emd
            .map(|v| format!(" emd={v:.4}"))
            .unwrap_or_default(),
        dir.display()
    );
    Ok(())
}

fn io_err(e: std::io::Error) -> csvgd_core::Error {
    csvgd_core::Error::InvalidState(format!("io error: {e}"))
}

/// Finite-difference check over every benchmark problem. Returns the worst
/// relative error per problem.
pub fn gradcheck(seed: u64) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for name in ["toy2d", "trajectory", "ik", "icp"] {
        let bench = csvgd_core::problems::benchmark::<f64>(name).expect("known benchmark");
        let problem = (bench.build)(seed);
        let err = csvgd_core::eval::problem_grad_check(&problem, 30, seed);
        out.push((name.to_string(), err));
    }
    out
}
