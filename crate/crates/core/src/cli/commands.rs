use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{load_config, Resolver, UsageError};
use super::{
    CliError, Command, Common, CurvatureArgs, EvalArgs, Method, SampleArgs, SeedIndex, Shape,
    SynthArgs, TrainArgs, DEFAULT_SEED, SEED_ENV,
};
use crate::cfps::{cfps_from_ranking, CombineMode};
use crate::cloud::{PointCloud, SampleSelection};
use crate::curvature::{self, CurvatureField, DEFAULT_K};
use crate::error::Error;
use crate::fps::{fps_full_ranking, fps_select};
use crate::index::NeighborIndex;
use crate::io::{load_cloud, save_cloud, CloudFormat};
use crate::metrics::{chamfer_distance, curvature_retention, default_threshold, f1_score};
use crate::policy::train::DEFAULT_LEARNING_RATE;
use crate::policy::{
    beta_mean, featurize_curvature, policy_step, sample_beta, train_step, BetaPolicy, Checkpoint,
    CurvatureSummary, PeakReward, PreparedCloud, Reward, StepRecord, SurrogateReward, TrainState,
};

type CmdResult = Result<(), CliError>;

const DEFAULT_TRAIN_K: usize = 256;
const DEFAULT_EPOCHS: usize = 10;
const DEFAULT_REWARD_WEIGHT: f64 = 0.5;

pub fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Sample(a) => sample(a),
        Command::Curvature(a) => curvature(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    }
}

fn resolver(common: &Common, command: &str) -> Result<Resolver, UsageError> {
    let file = match &common.config {
        Some(path) => load_config(path)?,
        None => Default::default(),
    };
    let mut r = Resolver::new(file);
    r.record("command", &command);
    if let Some(path) = &common.config {
        r.record("config", path);
    }
    Ok(r)
}

/// `--seed`, then `CFPS_SEED`, then the config file, then 42.
fn resolve_seed(r: &mut Resolver, flag: Option<u64>) -> Result<u64, UsageError> {
    let flag = match flag {
        Some(s) => Some(s),
        None => match std::env::var(SEED_ENV) {
            Ok(text) => Some(text.trim().parse().map_err(|e| {
                UsageError(format!("{SEED_ENV}={text:?} is not a valid seed: {e}"))
            })?),
            Err(_) => None,
        },
    };
    r.value("seed", flag, DEFAULT_SEED)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(UsageError(msg.into()))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn emit<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string(value).expect("output serializes")
    );
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// `<artifact>.json`.
fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_sidecar(path: &Path, value: &Value) -> CmdResult {
    write_text(&sidecar_path(path), &format!("{value}\n"))
}

fn header_comment(config: &Map<String, Value>) -> Vec<String> {
    vec![format!("cfps {}", Value::Object(config.clone()))]
}

fn save_with_config(cloud: &PointCloud, path: &Path, config: &Map<String, Value>) -> CmdResult {
    let cloud = match CloudFormat::Auto.for_output(path) {
        CloudFormat::Xyz => cloud.clone().without_normals(),
        _ => cloud.clone(),
    };
    save_cloud(&cloud, path, CloudFormat::Auto, &header_comment(config))?;
    Ok(())
}

fn load(path: &Path, normalize: bool) -> Result<PointCloud, Error> {
    let cloud = load_cloud(path, CloudFormat::Auto)?;
    Ok(if normalize {
        cloud.normalized_to_unit_sphere()
    } else {
        cloud
    })
}

fn estimate_curvature(cloud: &PointCloud, k: usize) -> Result<CurvatureField, Error> {
    let index = NeighborIndex::build(cloud);
    curvature::estimate(cloud, &index, k)
}

fn check_k(k: usize, n: usize, what: &str) -> Result<(), Error> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "{what} must lie in [1, {n}] for this cloud, got {k}"
        )));
    }
    Ok(())
}

fn sample(a: SampleArgs) -> CmdResult {
    let mut r = resolver(&a.common, "sample")?;
    let input: PathBuf = r.required("input", a.input)?;
    let output: PathBuf = r.required("output", a.output)?;
    let method = r.value("method", a.method, Method::Cfps)?;
    let k: usize = r.required("k", a.k)?;
    let policy_path: Option<PathBuf> = r.optional("policy", a.policy)?;
    let ratio: Option<f64> = r.optional("ratio", a.ratio)?;
    let combine = r.value("combine", a.combine, CombineMode::default())?;
    let k_neighbors = r.value("k-neighbors", a.k_neighbors, DEFAULT_K)?;
    let seed_index = r.value("seed-index", a.seed_index, SeedIndex::Fixed(0))?;
    let seed = resolve_seed(&mut r, a.seed)?;
    let normalize = r.switch("normalize", a.normalize)?;
    let config = r.finish()?;

    if method == Method::Cfps {
        match (ratio, &policy_path) {
            (Some(_), Some(_)) => return Err(usage("--ratio and --policy are exclusive")),
            (None, None) => return Err(usage("cfps needs --ratio or --policy")),
            (Some(g), None) if !(0.0..=1.0).contains(&g) => {
                return Err(usage(format!("--ratio must lie in [0, 1], got {g}")))
            }
            _ => {}
        }
    }

    let cloud = load(&input, normalize)?;
    let n = cloud.len();
    check_k(k, n, "--k")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seed_index = match seed_index {
        SeedIndex::Fixed(i) if i >= n => {
            return Err(Error::InvalidArgument(format!(
                "--seed-index {i} out of range for {n} points"
            ))
            .into())
        }
        SeedIndex::Fixed(i) => i,
        SeedIndex::Random => rng.random_range(0..n),
    };
    let ranking = fps_full_ranking(&cloud, seed_index)?;

    let mut record = json!({
        "method": method,
        "input": input,
        "output": output,
        "n_input": n,
        "k": k,
        "seed": seed,
        "seed_index": seed_index,
    });
    let selection = match method {
        Method::Fps => {
            record["g_used"] = json!(0.0);
            record["n_exchange"] = json!(0);
            fps_select(&ranking, k)?
        }
        Method::Cfps => {
            let curv = estimate_curvature(&cloud, k_neighbors)?;
            let g = match &policy_path {
                Some(path) => {
                    let policy = Checkpoint::load(path)?.policy()?;
                    let (alpha, beta) = policy.forward(&featurize_curvature(&curv))?;
                    record["alpha"] = json!(alpha);
                    record["beta"] = json!(beta);
                    sample_beta(alpha, beta, &mut rng)
                }
                None => ratio.expect("checked above"),
            };
            let result = cfps_from_ranking(&ranking, &curv, k, g, combine)?;
            record["combine"] = json!(combine);
            record["g_used"] = json!(result.g_used);
            record["n_exchange"] = json!(result.n_exchange);
            record["swapped_out"] = json!(result.swapped_out.len());
            record["swapped_in"] = json!(result.swapped_in.len());
            record["curvature_retention"] = json!(curvature_retention(&curv, &result.selection)?);
            result.selection
        }
    };
    record["config"] = Value::Object(config.clone());

    save_with_config(&cloud.gather(&selection)?, &output, &config)?;
    write_sidecar(&output, &record)?;
    emit(&record);
    Ok(())
}

fn curvature(a: CurvatureArgs) -> CmdResult {
    let mut r = resolver(&a.common, "curvature")?;
    let input: PathBuf = r.required("input", a.input)?;
    let output: PathBuf = r.required("output", a.output)?;
    let k_neighbors = r.value("k-neighbors", a.k_neighbors, DEFAULT_K)?;
    let normalize = r.switch("normalize", a.normalize)?;
    let config = r.finish()?;

    let cloud = load(&input, normalize)?;
    let curv = estimate_curvature(&cloud, k_neighbors)?;
    let mut dump = String::with_capacity(cloud.len() * 64);
    for ((p, h), hn) in cloud.positions().iter().zip(&curv.h_raw).zip(&curv.h_norm) {
        dump.push_str(&format!("{} {} {} {} {}\n", p.x, p.y, p.z, h, hn));
    }
    write_text(&output, &dump)?;

    let rank_deficient = curv.rank_deficient.iter().filter(|&&f| f).count();
    if rank_deficient > 0 {
        eprintln!("warning: {rank_deficient} points had a rank-deficient fit; their h_raw is 0");
    }
    let record = json!({
        "input": input,
        "output": output,
        "n": cloud.len(),
        "k_used": curv.k_used,
        "min_h": curv.min_h(),
        "max_h": curv.max_h(),
        "median_h": curv.median_h(),
        "rank_deficient": rank_deficient,
        "config": config,
    });
    write_sidecar(&output, &record)?;
    emit(&record);
    Ok(())
}

/// Cloud files directly inside `dir`, sorted by name.
fn list_clouds(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("ply" | "xyz" | "txt" | "pts")) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no cloud files in {}", dir.display())).into());
    }
    Ok(paths)
}

fn train(a: TrainArgs) -> CmdResult {
    let mut r = resolver(&a.common, "train")?;
    let data_dir: Option<PathBuf> = r.optional("data-dir", a.data_dir)?;
    let synthetic = r.optional("synthetic-reward", a.synthetic_reward)?;
    let epochs = r.value("epochs", a.epochs, DEFAULT_EPOCHS)?;
    let k = r.value("k", a.k, DEFAULT_TRAIN_K)?;
    let w = r.value("w", a.w, DEFAULT_REWARD_WEIGHT)?;
    let lr = r.value("lr", a.lr, DEFAULT_LEARNING_RATE)?;
    let combine = r.value("combine", a.combine, CombineMode::default())?;
    let k_neighbors = r.value("k-neighbors", a.k_neighbors, DEFAULT_K)?;
    let seed = resolve_seed(&mut r, a.seed)?;
    let checkpoint_out: PathBuf = r.value(
        "checkpoint-out",
        a.checkpoint_out,
        PathBuf::from("policy.json"),
    )?;
    let log_path: Option<PathBuf> = r.optional("log", a.log)?;
    let raw_advantage = r.switch("raw-advantage", a.raw_advantage)?;
    let normalize = r.switch("normalize", a.normalize)?;
    let config = r.finish()?;

    if data_dir.is_none() && synthetic.is_none() {
        return Err(usage("train needs --data-dir or --synthetic-reward"));
    }
    if !(w >= 0.0) {
        return Err(usage(format!("--w must be non-negative, got {w}")));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(usage(format!("--lr must be positive, got {lr}")));
    }

    let items = match &data_dir {
        Some(dir) => {
            let paths = list_clouds(dir)?;
            paths
                .par_iter()
                .map(|path| {
                    let cloud = load(path, normalize)?;
                    check_k(k, cloud.len(), "--k")?;
                    let curv = estimate_curvature(&cloud, k_neighbors)?;
                    PreparedCloud::new(cloud, curv, 0)
                })
                .collect::<Result<Vec<_>, Error>>()?
        }
        None => Vec::new(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = BetaPolicy::init(&mut rng);
    let mut state = TrainState::new(lr, seed);
    state.normalize_advantage = !raw_advantage;
    let mut reward: Box<dyn Reward> = match synthetic {
        Some(s) => Box::new(PeakReward { peak: s.peak }),
        None => Box::new(SurrogateReward { weight: w }),
    };

    let mut log = String::new();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut record = |rec: &StepRecord| -> CmdResult {
        let line = serde_json::to_string(rec).expect("step record serializes");
        writeln!(out, "{line}").map_err(|e| io_error(Path::new("<stdout>"), e))?;
        if log_path.is_some() {
            log.push_str(&line);
            log.push('\n');
        }
        Ok(())
    };
    for _ in 0..epochs {
        if items.is_empty() {
            let peak = synthetic.expect("checked above").peak;
            let summary = CurvatureSummary::uniform();
            let rec = policy_step(&mut policy, &mut state, &mut rng, &summary, |g| {
                Ok(PeakReward { peak }.at(g))
            })?;
            record(&rec)?;
        }
        for item in &items {
            let rec = train_step(
                &mut policy,
                &mut state,
                &mut rng,
                item,
                k,
                combine,
                reward.as_mut(),
            )?;
            record(&rec)?;
        }
    }

    if let Some(path) = &log_path {
        write_text(path, &log)?;
    }
    Checkpoint::new(&policy, &state)
        .with_metadata(Value::Object(config))
        .save(&checkpoint_out)?;
    let summary = items
        .first()
        .map(|i| i.summary.clone())
        .unwrap_or_else(CurvatureSummary::uniform);
    let (alpha, beta) = policy.forward(&summary)?;
    eprintln!(
        "trained {} steps; policy mean {:.4} on the first input; checkpoint {}",
        state.step,
        beta_mean(alpha, beta),
        checkpoint_out.display()
    );
    Ok(())
}

/// Maps every predicted point to its nearest reference point, keeping the
/// first occurrence of each, so retention is defined for any prediction.
fn nearest_selection(pred: &PointCloud, gt_index: &NeighborIndex, n_gt: usize) -> SampleSelection {
    let mut seen = vec![false; n_gt];
    let mut indices = Vec::new();
    for p in pred.positions() {
        let i = gt_index.nearest(p).index;
        if !seen[i] {
            seen[i] = true;
            indices.push(i);
        }
    }
    SampleSelection::new(indices, n_gt).expect("indices are distinct and in range")
}

fn eval(a: EvalArgs) -> CmdResult {
    let mut r = resolver(&a.common, "eval")?;
    let gt_path: PathBuf = r.required("gt", a.gt)?;
    r.record("pred", &a.pred);
    let threshold: Option<f64> = r.optional("threshold", a.threshold)?;
    let k_neighbors = r.value("k-neighbors", a.k_neighbors, DEFAULT_K)?;
    let normalize = r.switch("normalize", a.normalize)?;
    let config = r.finish()?;

    if let Some(t) = threshold {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage(format!("--threshold must be positive, got {t}")));
        }
    }

    let raw_gt = load_cloud(&gt_path, CloudFormat::Auto)?;
    let (center, scale) = if normalize {
        raw_gt.unit_sphere_transform()
    } else {
        (nalgebra::Point3::origin(), 1.0)
    };
    let gt = raw_gt.transformed(center, scale);
    let gt_index = NeighborIndex::build(&gt);
    let curv = estimate_curvature(&gt, k_neighbors)?;
    let threshold = threshold.unwrap_or_else(|| default_threshold(&gt));

    let preds = a
        .pred
        .par_iter()
        .map(|path| -> Result<Value, Error> {
            let pred = load_cloud(path, CloudFormat::Auto)?.transformed(center, scale);
            let (f1, precision, recall) = f1_score(&pred, &gt, threshold)?;
            let sel = nearest_selection(&pred, &gt_index, gt.len());
            Ok(json!({
                "cloud": gt.id(),
                "method": pred.id(),
                "pred": path,
                "n_pred": pred.len(),
                "n_gt": gt.len(),
                "chamfer": chamfer_distance(&pred, &gt),
                "f1": f1,
                "precision": precision,
                "recall": recall,
                "threshold": threshold,
                "curvature_retention": curvature_retention(&curv, &sel)?,
                "config": config,
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    preds.iter().for_each(emit);
    Ok(())
}

fn synth(a: SynthArgs) -> CmdResult {
    use crate::synth::{gen_cylinder, gen_plane, gen_sphere, gen_torus};

    let mut r = resolver(&a.common, "synth")?;
    let shape: Shape = r.required("shape", a.shape)?;
    let n = r.value("n", a.n, 2048usize)?;
    let output: PathBuf = r.required("output", a.output)?;
    let oracle: Option<PathBuf> = r.optional("oracle", a.oracle)?;
    let seed = resolve_seed(&mut r, a.seed)?;
    let generated = match shape {
        Shape::Sphere => {
            let radius = r.value("radius", a.radius, 1.0)?;
            if !(radius > 0.0) || n < 8 {
                return Err(usage("sphere needs --radius > 0 and --n >= 8"));
            }
            gen_sphere(radius, n, seed)
        }
        Shape::Cylinder => {
            let radius = r.value("radius", a.radius, 1.0)?;
            let height = r.value("height", a.height, 2.0)?;
            if !(radius > 0.0 && height > 0.0) || n == 0 {
                return Err(usage("cylinder needs --radius, --height > 0 and --n >= 1"));
            }
            gen_cylinder(radius, height, n, seed)
        }
        Shape::Torus => {
            let major = r.value("major", a.major, 2.0)?;
            let minor = r.value("minor", a.minor, 0.5)?;
            if !(major > minor && minor > 0.0) || n == 0 {
                return Err(usage("torus needs --major > --minor > 0 and --n >= 1"));
            }
            gen_torus(major, minor, n, seed)
        }
        Shape::Plane => {
            let side = r.value("side", a.side, 2.0)?;
            let jitter = r.value("jitter", a.jitter, 0.0)?;
            if !(side > 0.0 && jitter >= 0.0) || n == 0 {
                return Err(usage("plane needs --side > 0, --jitter >= 0 and --n >= 1"));
            }
            gen_plane(side, n, seed, jitter)
        }
    };
    let config = r.finish()?;

    save_with_config(&generated.cloud, &output, &config)?;
    if let Some(path) = &oracle {
        let text: String = generated.h_true.iter().map(|h| format!("{h}\n")).collect();
        write_text(path, &text)?;
    }
    emit(&json!({
        "output": output,
        "oracle": oracle,
        "params": generated.params,
        "config": config,
    }));
    Ok(())
}
