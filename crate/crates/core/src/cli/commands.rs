use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::{KernelCommandConfig, LearnConfig, Method, RunManifest};
use crate::data::{Dataset, GeneratorSet, PairSet};
use crate::disentangle::disentangle;
use crate::embedding::embed as embed_points;
use crate::error::{invalid, Error, Result};
use crate::eval::matched_error;
use crate::expm::matrix_exp;
use crate::io::{
    image_strip, read_json, read_matrix_csv, read_pgm, write_json, write_matrix_csv,
    write_matrix_csv_with_header, write_pgm, write_vector_csv,
};
use crate::kernel::{circle_field_agreement, circle_points, fit_kernel, KernelModel};
use crate::neighbors::{k_distinct_neighbors, nearest_neighbors};
use crate::solver::{convex_plus_gradient, learn_convex, solve_nonconvex};
use crate::synth::{generate_pairs, synthetic_base, SyntheticSpec};

struct Run {
    command: &'static str,
    start: Instant,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Run {
    fn new(command: &'static str, inputs: &[&Path]) -> Self {
        Run {
            command,
            start: Instant::now(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: Vec::new(),
        }
    }

    fn matrix(&mut self, path: PathBuf, m: &DMatrix<f64>) -> Result<()> {
        write_matrix_csv(&path, m)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish<C: Serialize>(
        self,
        manifest_path: PathBuf,
        config: &C,
        seed: Option<u64>,
        results: serde_json::Value,
    ) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config: serde_json::to_value(config)?,
            inputs: self.inputs,
            outputs: self.outputs,
            seed,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            results,
        };
        write_json(manifest_path, &manifest)
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("missing input file {}", path.display())))
    }
}

fn manifest_beside(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    out.with_file_name(format!("{stem}.manifest.json"))
}

/// Loads `generator_<k>.csv` (or `truth_<k>.csv`) files in index order.
pub fn load_generators(dir: &Path) -> Result<GeneratorSet> {
    for prefix in ["generator_", "truth_"] {
        let mut found: Vec<(usize, PathBuf)> = Vec::new();
        if !dir.is_dir() {
            return Err(invalid(format!("generator directory {} not found", dir.display())));
        }
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if let Some(idx) = name
                .strip_prefix(prefix)
                .and_then(|rest| rest.strip_suffix(".csv"))
                .and_then(|num| num.parse::<usize>().ok())
            {
                found.push((idx, path));
            }
        }
        if found.is_empty() {
            continue;
        }
        found.sort();
        let mats = found
            .iter()
            .map(|(_, p)| read_matrix_csv(p))
            .collect::<Result<Vec<_>>>()?;
        return GeneratorSet::new(mats);
    }
    Err(invalid(format!("no generator_<k>.csv or truth_<k>.csv files in {}", dir.display())))
}

fn write_generators(run: &mut Run, out: &Path, gens: &GeneratorSet) -> Result<()> {
    for (k, g) in gens.generators().iter().enumerate() {
        run.matrix(out.join(format!("generator_{}.csv", k + 1)), g)?;
    }
    Ok(())
}

fn load_pairs(data: &Path) -> Result<PairSet> {
    let base_path = data.join("base.csv");
    require_file(&base_path)?;
    let base = read_matrix_csv(&base_path)?;
    let nb_path = data.join("neighbor.csv");
    if !nb_path.is_file() {
        return nearest_neighbors(&Dataset::new(base)?);
    }
    let neighbor = read_matrix_csv(&nb_path)?;
    let st_path = data.join("strengths.csv");
    if st_path.is_file() {
        PairSet::synthetic(base, neighbor, read_matrix_csv(&st_path)?)
    } else {
        PairSet::nearest_neighbor(base, neighbor)
    }
}

pub(super) fn gen(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut run = Run::new("gen", &[config]);
    let mut spec: SyntheticSpec = read_json(config)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    fs::create_dir_all(out)?;
    let base = synthetic_base(&spec)?;
    let (pairs, gens) = generate_pairs(&spec, &base)?;
    run.matrix(out.join("base.csv"), pairs.base())?;
    run.matrix(out.join("neighbor.csv"), pairs.neighbor())?;
    run.matrix(
        out.join("strengths.csv"),
        pairs.strengths().expect("synthetic pairs carry strengths"),
    )?;
    for (k, g) in gens.generators().iter().enumerate() {
        run.matrix(out.join(format!("truth_{}.csv", k + 1)), g)?;
    }
    if let Some(side) = base.grid() {
        let p = pairs.base();
        let path = out.join("base.pgm");
        write_pgm(&path, &image_strip(p, side, p.min(), p.max()))?;
        run.outputs.push(path.display().to_string());
    }
    let seed = spec.seed;
    run.finish(out.join("manifest.json"), &spec, Some(seed), json!({}))
}

pub(super) fn learn(
    data: &Path,
    method: Method,
    config: Option<&Path>,
    out: &Path,
    k: Option<usize>,
    lambda: Option<f64>,
    seed: Option<u64>,
) -> Result<()> {
    let mut inputs = vec![data];
    inputs.extend(config);
    let mut run = Run::new("learn", &inputs);
    let mut cfg: LearnConfig = match config {
        Some(p) => read_json(p)?,
        None => LearnConfig::default(),
    };
    let mut refine = cfg.refine.clone().unwrap_or_else(|| cfg.solver.clone());
    for c in [&mut cfg.solver, &mut refine] {
        if let Some(k) = k {
            c.k = k;
        }
        if let Some(s) = seed {
            c.seed = s;
        }
    }
    if let Some(l) = lambda {
        cfg.solver.lambda = l;
    }
    cfg.refine = Some(refine.clone());
    let pairs = load_pairs(data)?;
    fs::create_dir_all(out)?;
    let r = cfg.samples.unwrap_or(5000).min(pairs.len());
    let kk = cfg.solver.k;

    let (gens, strengths, trace, results) = match method {
        Method::Convex => {
            let fit = learn_convex(&pairs, r, &cfg.solver)?;
            run.matrix(out.join("alpha.csv"), &fit.solution.alpha)?;
            let rec = fit.reconstruction;
            let results = json!({
                "sample_idx": fit.solution.sample_idx,
                "singular_values": rec.singular_values,
                "rank_deficient": rec.rank_deficient,
            });
            (rec.generators, rec.strengths, fit.solution.objective_trace, results)
        }
        Method::ConvexGradient => {
            let res = convex_plus_gradient(&pairs, r, &cfg.solver, &refine)?;
            run.matrix(out.join("alpha.csv"), &res.convex.solution.alpha)?;
            let results = json!({
                "sample_idx": res.convex.solution.sample_idx,
                "convex_objective_trace": res.convex.solution.objective_trace,
                "singular_values": res.convex.reconstruction.singular_values,
                "objective": res.refined.objective,
            });
            (res.refined.generators, res.refined.t, res.refined.objective_trace, results)
        }
        Method::Nonconvex => {
            let sol = solve_nonconvex(&pairs, kk, &cfg.solver, None)?;
            run.matrix(
                out.join("restart_objectives.csv"),
                &DMatrix::from_column_slice(sol.restart_objectives.len(), 1, &sol.restart_objectives),
            )?;
            let results = json!({
                "objective": sol.objective,
                "restart_objectives": sol.restart_objectives,
            });
            (sol.generators, sol.t, sol.objective_trace, results)
        }
    };
    let (gens, strengths, mut results) = if cfg.disentangle {
        match disentangle(&strengths, &gens) {
            Ok(d) => {
                let mut res = results;
                res["disentangle"] = json!({
                    "singular_values": d.singular_values,
                    "removed_means": d.removed_means,
                    "dropped": d.dropped,
                });
                (d.generators, d.strengths, res)
            }
            Err(_) => (gens, strengths, results),
        }
    } else {
        (gens, strengths, results)
    };
    results["method"] = json!(method.name());
    results["samples"] = json!(r);
    write_generators(&mut run, out, &gens)?;
    run.matrix(out.join("strengths.csv"), &strengths)?;
    let trace_path = out.join("objective_trace.csv");
    write_vector_csv(&trace_path, &trace)?;
    run.outputs.push(trace_path.display().to_string());
    let seed = cfg.solver.seed;
    run.finish(out.join("manifest.json"), &cfg, Some(seed), results)
}

pub(super) fn eval(est: &Path, truth: &Path, out: &Path) -> Result<()> {
    let mut run = Run::new("eval", &[est, truth]);
    let report = matched_error(&load_generators(est)?, &load_generators(truth)?)?;
    write_json(out, &report)?;
    run.outputs.push(out.display().to_string());
    run.finish(manifest_beside(out), &json!({}), None, json!({ "total": report.total }))
}

pub(super) fn eval_batch(runs: &[PathBuf], truth: Option<&Path>, out: &Path) -> Result<()> {
    let inputs: Vec<&Path> = runs.iter().map(|p| p.as_path()).collect();
    let mut run = Run::new("eval-batch", &inputs);
    let mut lines = vec!["seed,method,total_error,runtime_seconds".to_string()];
    for dir in runs {
        let manifest: RunManifest = read_json(dir.join("manifest.json"))?;
        let truth_dir = match truth {
            Some(t) => t.to_path_buf(),
            None => PathBuf::from(
                manifest
                    .inputs
                    .first()
                    .ok_or_else(|| invalid(format!("{}: manifest lists no inputs", dir.display())))?,
            ),
        };
        let report = matched_error(&load_generators(dir)?, &load_generators(&truth_dir)?)?;
        let method = manifest.results["method"].as_str().unwrap_or("unknown").to_string();
        lines.push(format!(
            "{},{},{:.16e},{:.16e}",
            manifest.seed.map(|s| s.to_string()).unwrap_or_default(),
            method,
            report.total,
            manifest.wall_seconds
        ));
    }
    fs::write(out, lines.join("\n") + "\n")?;
    run.outputs.push(out.display().to_string());
    run.finish(manifest_beside(out), &json!({ "truth": truth }), None, json!({ "runs": runs.len() }))
}

fn load_image(path: &Path) -> Result<(DMatrix<f64>, Option<usize>)> {
    require_file(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("pgm") {
        let img = read_pgm(path)?;
        let side = (img.width == img.height).then_some(img.width);
        let v: Vec<f64> = img.pixels.iter().map(|&p| p as f64).collect();
        return Ok((DMatrix::from_row_slice(1, v.len(), &v), side));
    }
    let m = read_matrix_csv(path)?;
    let (rows, cols) = m.shape();
    let d = m.len();
    let side = if rows == cols && rows > 1 {
        Some(rows)
    } else if rows == 1 || cols == 1 {
        (2..=d).find(|s| s * s == d)
    } else {
        return Err(invalid(format!(
            "{}: expected one image as a row, a column or a square grid, found {rows}x{cols}",
            path.display()
        )));
    };
    // Row-major pixel order in every accepted layout.
    let v: Vec<f64> = m.transpose().iter().copied().collect();
    Ok((DMatrix::from_row_slice(1, d, &v), side))
}

pub(super) fn apply(gens_dir: &Path, image: &Path, steps: usize, eta: f64, out: &Path) -> Result<()> {
    let mut run = Run::new("apply", &[gens_dir, image]);
    let gens = load_generators(gens_dir)?;
    let (x, side) = load_image(image)?;
    if x.ncols() != gens.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("image with {} values", gens.dim()),
            found: format!("{}", x.ncols()),
        });
    }
    if !eta.is_finite() {
        return Err(invalid("eta must be finite"));
    }
    fs::create_dir_all(out)?;
    let xv = x.row(0).transpose();
    let count = 2 * steps + 1;
    for (k, a) in gens.generators().iter().enumerate() {
        let mut frames = DMatrix::zeros(count, gens.dim());
        for (slot, j) in (-(steps as i64)..=steps as i64).enumerate() {
            let y = matrix_exp(a, j as f64 * eta)? * &xv;
            frames.set_row(slot, &y.transpose());
        }
        run.matrix(out.join(format!("frames_{}.csv", k + 1)), &frames)?;
        if let Some(s) = side {
            let path = out.join(format!("strip_{}.pgm", k + 1));
            write_pgm(&path, &image_strip(&frames, s, x.min(), x.max()))?;
            run.outputs.push(path.display().to_string());
        }
    }
    run.finish(
        out.join("manifest.json"),
        &json!({ "steps": steps, "eta": eta }),
        None,
        json!({}),
    )
}

pub(super) fn embed(data: &Path, gens_dir: &Path, root: usize, out: &Path) -> Result<()> {
    let mut run = Run::new("embed", &[data, gens_dir]);
    let base_path = data.join("base.csv");
    require_file(&base_path)?;
    let ds = Dataset::new(read_matrix_csv(&base_path)?)?;
    let gens = load_generators(gens_dir)?;
    let emb = embed_points(&ds, &gens, root)?;
    let header: Vec<String> = (1..=gens.len()).map(|k| format!("k{k}")).collect();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_matrix_csv_with_header(out, &emb.coords, Some(&header))?;
    run.outputs.push(out.display().to_string());
    run.finish(
        manifest_beside(out),
        &json!({ "root": root }),
        None,
        json!({ "edges": emb.edges }),
    )
}

pub(super) fn kernel(
    data: &Path,
    config: Option<&Path>,
    out: &Path,
    k: Option<usize>,
    lambda: Option<f64>,
    seed: Option<u64>,
) -> Result<()> {
    let mut inputs = vec![data];
    inputs.extend(config);
    let mut run = Run::new("kernel", &inputs);
    let mut cfg: KernelCommandConfig = match config {
        Some(p) => read_json(p)?,
        None => KernelCommandConfig::default(),
    };
    if let Some(k) = k {
        cfg.kernel.k = k;
    }
    if let Some(l) = lambda {
        cfg.kernel.lambda1 = l;
    }
    if let Some(s) = seed {
        cfg.kernel.solver.seed = s;
    }
    let base_path = data.join("base.csv");
    require_file(&base_path)?;
    let ds = Dataset::new(read_matrix_csv(&base_path)?)?;
    let pairs = k_distinct_neighbors(&ds, cfg.kernel.k)?;
    let model = fit_kernel(&pairs, &cfg.kernel)?;
    fs::create_dir_all(out)?;
    run.matrix(out.join("train_points.csv"), &model.train_points)?;
    run.matrix(out.join("diffs.csv"), &model.diffs)?;
    run.matrix(out.join("alpha.csv"), &model.alpha)?;
    run.matrix(out.join("field_weights.csv"), &model.field_weights)?;
    run.matrix(out.join("strengths.csv"), &model.strengths)?;
    let atom_point: Vec<f64> = model.atom_point.iter().map(|&j| j as f64).collect();
    let atom_path = out.join("atom_point.csv");
    write_vector_csv(&atom_path, &atom_point)?;
    run.outputs.push(atom_path.display().to_string());
    write_json(
        out.join("model.json"),
        &json!({
            "K": model.k(),
            "sigma": model.sigma,
            "lambda1": model.lambda1,
            "lambda2": model.lambda2,
        }),
    )?;
    let mut results = json!({
        "sigma": model.sigma,
        "lambda2": model.lambda2,
        "objective_trace": model.objective_trace,
    });
    if let Some(m) = cfg.circle_holdout {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.holdout_seed);
        let queries = circle_points(m, &mut rng);
        let (cosine, error) = circle_field_agreement(&model, &queries)?;
        results["circle"] = json!({ "cosine": cosine, "error": error, "held_out": m });
    }
    let seed = cfg.kernel.solver.seed;
    run.finish(out.join("manifest.json"), &cfg, Some(seed), results)
}

fn load_kernel_model(dir: &Path) -> Result<KernelModel> {
    let meta: serde_json::Value = read_json(dir.join("model.json"))?;
    let num = |key: &str| {
        meta[key]
            .as_f64()
            .ok_or_else(|| invalid(format!("model.json lacks `{key}`")))
    };
    let atom_point = read_matrix_csv(dir.join("atom_point.csv"))?
        .iter()
        .map(|&v| v as usize)
        .collect();
    KernelModel::from_parts(
        read_matrix_csv(dir.join("train_points.csv"))?,
        atom_point,
        read_matrix_csv(dir.join("diffs.csv"))?,
        read_matrix_csv(dir.join("alpha.csv"))?,
        read_matrix_csv(dir.join("field_weights.csv"))?,
        read_matrix_csv(dir.join("strengths.csv"))?,
        num("sigma")?,
        num("lambda2")?,
        num("lambda1")?,
    )
}

pub(super) fn kernel_predict(model_dir: &Path, points: &Path, out: &Path) -> Result<()> {
    let mut run = Run::new("kernel-predict", &[model_dir, points]);
    let model = load_kernel_model(model_dir)?;
    require_file(points)?;
    let q = read_matrix_csv(points)?;
    let fields = model.predict_fields(&q)?;
    let d = model.dim();
    let mut table = DMatrix::zeros(q.nrows(), d * fields.len());
    for (k, f) in fields.iter().enumerate() {
        table.view_mut((0, k * d), (q.nrows(), d)).copy_from(f);
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    run.matrix(out.to_path_buf(), &table)?;
    run.finish(manifest_beside(out), &json!({}), None, json!({}))
}

pub(super) fn gen_circle(n: usize, seed: u64, out: &Path) -> Result<()> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let mut run = Run::new("gen-circle", &[]);
    fs::create_dir_all(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run.matrix(out.join("base.csv"), &circle_points(n, &mut rng))?;
    run.finish(out.join("manifest.json"), &json!({ "n": n }), Some(seed), json!({}))
}
