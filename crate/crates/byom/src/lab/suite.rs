//! Interference experiments: task-count sweeps, λ sweeps on task pairs,
//! and merge/compress comparisons, reported as normalized accuracies.
//!
//! Mergers combine every tensor present in all task checkpoints — for the
//! lab models that is all four tensors, heads included, mirroring the
//! merging formulas. Task-specific heads live where the methods put them:
//! in the task models themselves and in the per-task deltas and adapters,
//! which is how the delta-based methods recover per-task behavior from a
//! shared base.

use super::data::{
    disjoint_split_pair, dissimilar_pair, generate_task, task_family, Dataset, SyntheticTask,
    TaskShape,
};
use super::mlp::MlpModel;
use super::rng::mix;
use super::train::{train, TrainConfig, TrainMode, TrainOutcome};
use crate::error::{Error, Result};
use crate::lora::{byom_lora, materialize_lora_task_model};
use crate::merge::{MergeMethod, MergeSpec};
use crate::prune::{byom_fft, materialize_task_model, post_prune, PruneScope};
use crate::store::Checkpoint;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const SEED_FAMILY: u64 = 0xFA01;
const SEED_INIT: u64 = 0x11A7;
const SEED_LORA: u64 = 0x10EA;

/// Desk-scale model and training knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct LabParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub class_count: usize,
    pub separation: f32,
    pub noise_scale: f32,
    pub train_count: usize,
    pub test_count: usize,
    pub pretrain_steps: usize,
    pub finetune_steps: usize,
    pub learning_rate: f64,
}

impl Default for LabParams {
    fn default() -> Self {
        Self {
            input_dim: 16,
            hidden: 32,
            class_count: 4,
            separation: 1.0,
            noise_scale: 0.4,
            train_count: 128,
            test_count: 128,
            pretrain_steps: 150,
            finetune_steps: 300,
            learning_rate: 0.5,
        }
    }
}

impl LabParams {
    pub fn shape(&self) -> TaskShape {
        TaskShape {
            input_dim: self.input_dim,
            class_count: self.class_count,
            separation: self.separation,
            noise_scale: self.noise_scale,
            train_count: self.train_count,
            test_count: self.test_count,
        }
    }
}

/// One method evaluated at one sweep point for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub per_task_accuracy: Vec<f64>,
    pub per_task_normalized: Vec<f64>,
}

impl EvalReport {
    pub fn average_accuracy(&self) -> f64 {
        self.per_task_accuracy.iter().sum::<f64>() / self.per_task_accuracy.len() as f64
    }

    pub fn average_normalized(&self) -> f64 {
        self.per_task_normalized.iter().sum::<f64>() / self.per_task_normalized.len() as f64
    }
}

/// Method selector for the suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuiteMethod {
    SingleTask,
    WeightedAverage,
    TaskArithmetic,
    Ties,
    PostPruning,
    ByomFft { base: MergeMethod },
    ByomLora,
}

impl SuiteMethod {
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "single_task" => Ok(Self::SingleTask),
            "weighted_average" => Ok(Self::WeightedAverage),
            "task_arithmetic" => Ok(Self::TaskArithmetic),
            "ties" => Ok(Self::Ties),
            "post_pruning" => Ok(Self::PostPruning),
            "byom_fft" | "byom_fft@task_arithmetic" => Ok(Self::ByomFft {
                base: MergeMethod::TaskArithmetic,
            }),
            "byom_fft@weighted_average" => Ok(Self::ByomFft {
                base: MergeMethod::WeightedAverage,
            }),
            "byom_fft@ties" => Ok(Self::ByomFft {
                base: MergeMethod::Ties,
            }),
            "byom_lora" => Ok(Self::ByomLora),
            other => Err(Error::BadConfig(format!("unknown method `{other}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::SingleTask => "single_task".into(),
            Self::WeightedAverage => "weighted_average".into(),
            Self::TaskArithmetic => "task_arithmetic".into(),
            Self::Ties => "ties".into(),
            Self::PostPruning => "post_pruning".into(),
            Self::ByomFft { base } => format!("byom_fft@{}", base.label()),
            Self::ByomLora => "byom_lora".into(),
        }
    }
}

/// Which experiment family a config runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SuitePlan {
    /// Merge 2..T tasks, sweep the task count.
    TaskCountSweep { task_counts: Vec<usize> },
    /// Sweep λ over a two-task pair.
    LambdaSweep { pair: PairKind, lambdas: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Dissimilar,
    SimilarDisjoint,
}

impl PairKind {
    fn parse(token: &str) -> Result<Self> {
        match token {
            "dissimilar" => Ok(Self::Dissimilar),
            "similar_disjoint" => Ok(Self::SimilarDisjoint),
            other => Err(Error::BadConfig(format!("unknown pair `{other}`"))),
        }
    }
}

/// Full suite configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub plan: SuitePlan,
    pub methods: Vec<SuiteMethod>,
    pub seeds: Vec<u64>,
    /// Keep ratio for the pruning methods.
    pub keep_ratio: f64,
    /// λ for task arithmetic and trim/elect/merge outside λ sweeps.
    pub lambda: f64,
    pub trim_ratio: f64,
    /// Truncation rank for adapter compression.
    pub rank: usize,
    /// Rank the lab's adapters are trained at.
    pub source_rank: usize,
    pub params: LabParams,
    pub out: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            plan: SuitePlan::TaskCountSweep {
                task_counts: vec![2, 4, 8],
            },
            methods: vec![SuiteMethod::SingleTask, SuiteMethod::TaskArithmetic],
            seeds: vec![0],
            keep_ratio: 0.10,
            lambda: 0.3,
            trim_ratio: 0.2,
            rank: 2,
            source_rank: 4,
            params: LabParams::default(),
            out: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Cell evaluation
// ---------------------------------------------------------------------------

/// Everything trained once per (seed, task set) and reused by each method.
struct Cell {
    theta0: MlpModel,
    singles: Vec<MlpModel>,
    single_acc: Vec<f64>,
    tests: Vec<Dataset>,
    /// Adapter-trained models and their accuracies, when a method needs them.
    lora: Option<LoraCell>,
}

struct LoraCell {
    outcomes: Vec<TrainOutcome>,
    single_acc: Vec<f64>,
}

fn build_cell(
    seed: u64,
    specs: &[SyntheticTask],
    cfg: &SuiteConfig,
    need_lora: bool,
) -> Result<Cell> {
    let params = &cfg.params;
    let mut trains = Vec::new();
    let mut tests = Vec::new();
    for spec in specs {
        let (tr, te) = generate_task(spec)?;
        trains.push(tr);
        tests.push(te);
    }
    let pooled = Dataset::pooled(&trains.iter().collect::<Vec<_>>())?;
    let init = MlpModel::init(
        mix(seed, SEED_INIT),
        params.input_dim,
        params.hidden,
        params.class_count,
    );
    let theta0 = train(
        &init,
        &pooled,
        &TrainConfig {
            steps: params.pretrain_steps,
            learning_rate: params.learning_rate,
            mode: TrainMode::Full,
            seed,
        },
    )?
    .model;

    let singles: Vec<MlpModel> = trains
        .par_iter()
        .map(|tr| {
            Ok(train(
                &theta0,
                tr,
                &TrainConfig {
                    steps: params.finetune_steps,
                    learning_rate: params.learning_rate,
                    mode: TrainMode::Full,
                    seed,
                },
            )?
            .model)
        })
        .collect::<Result<_>>()?;
    let single_acc: Vec<f64> = singles
        .iter()
        .zip(&tests)
        .map(|(m, te)| m.accuracy(te))
        .collect::<Result<_>>()?;

    let lora = if need_lora {
        let outcomes: Vec<TrainOutcome> = trains
            .par_iter()
            .enumerate()
            .map(|(t, tr)| {
                train(
                    &theta0,
                    tr,
                    &TrainConfig {
                        steps: params.finetune_steps,
                        learning_rate: params.learning_rate,
                        mode: TrainMode::Lora {
                            rank: cfg.source_rank,
                        },
                        seed: mix(seed, SEED_LORA + t as u64),
                    },
                )
            })
            .collect::<Result<_>>()?;
        let single_acc = outcomes
            .iter()
            .zip(&tests)
            .map(|(o, te)| o.model.accuracy(te))
            .collect::<Result<_>>()?;
        Some(LoraCell {
            outcomes,
            single_acc,
        })
    } else {
        None
    };

    Ok(Cell {
        theta0,
        singles,
        single_acc,
        tests,
        lora,
    })
}

fn normalized(acc: &[f64], reference: &[f64]) -> Vec<f64> {
    acc.iter()
        .zip(reference)
        .map(|(&a, &s)| if s > 0.0 { a / s } else { 0.0 })
        .collect()
}

/// Evaluates one checkpoint per task against that task's test set.
fn eval_models(cell: &Cell, models: &[Checkpoint]) -> Result<Vec<f64>> {
    models
        .iter()
        .zip(&cell.tests)
        .map(|(ckpt, test)| MlpModel::from_checkpoint(ckpt)?.accuracy(test))
        .collect()
}

fn merge_spec_for(base: MergeMethod, cfg: &SuiteConfig, lambda: f64) -> MergeSpec {
    match base {
        MergeMethod::TaskArithmetic => MergeSpec::task_arithmetic(lambda),
        MergeMethod::WeightedAverage => MergeSpec::weighted_average(None),
        MergeMethod::Ties => MergeSpec::ties(lambda, cfg.trim_ratio),
        MergeMethod::PerParamWeighted => MergeSpec::task_arithmetic(lambda),
    }
}

/// Accuracy and normalized accuracy for one method in one trained cell.
///
/// `lambda` is the sweep value in λ sweeps; `wa_weights` carries the
/// pair weights `[λ, 1−λ]` there.
fn eval_method(
    cell: &Cell,
    method: &SuiteMethod,
    cfg: &SuiteConfig,
    lambda: f64,
    wa_weights: Option<Vec<f64>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let base = cell.theta0.to_checkpoint();
    let task_ckpts: Vec<Checkpoint> = cell.singles.iter().map(MlpModel::to_checkpoint).collect();

    match method {
        SuiteMethod::SingleTask => {
            let acc = cell.single_acc.clone();
            let norm = vec![1.0; acc.len()];
            Ok((acc, norm))
        }
        SuiteMethod::WeightedAverage => {
            let weights = match &wa_weights {
                Some(w) => w.clone(),
                None => vec![1.0 / task_ckpts.len() as f64; task_ckpts.len()],
            };
            let merged = crate::merge::merge_weighted_average(&task_ckpts, &weights)?;
            let models = vec![merged; cell.singles.len()];
            let acc = eval_models(cell, &models)?;
            let norm = normalized(&acc, &cell.single_acc);
            Ok((acc, norm))
        }
        SuiteMethod::TaskArithmetic => {
            let merged = crate::merge::merge_task_arithmetic(&base, &task_ckpts, lambda)?;
            let models = vec![merged; cell.singles.len()];
            let acc = eval_models(cell, &models)?;
            let norm = normalized(&acc, &cell.single_acc);
            Ok((acc, norm))
        }
        SuiteMethod::Ties => {
            let merged = crate::merge::merge_ties(&base, &task_ckpts, lambda, cfg.trim_ratio)?;
            let models = vec![merged; cell.singles.len()];
            let acc = eval_models(cell, &models)?;
            let norm = normalized(&acc, &cell.single_acc);
            Ok((acc, norm))
        }
        SuiteMethod::PostPruning => {
            let set = post_prune(&base, &task_ckpts, cfg.keep_ratio, PruneScope::Global)?;
            let models: Vec<Checkpoint> = (0..task_ckpts.len())
                .map(|t| materialize_task_model(&set, t))
                .collect::<Result<_>>()?;
            let acc = eval_models(cell, &models)?;
            let norm = normalized(&acc, &cell.single_acc);
            Ok((acc, norm))
        }
        SuiteMethod::ByomFft { base: merge_base } => {
            let spec = merge_spec_for(*merge_base, cfg, lambda);
            let set = byom_fft(&base, &task_ckpts, cfg.keep_ratio, &spec, PruneScope::Global)?;
            let models: Vec<Checkpoint> = (0..task_ckpts.len())
                .map(|t| materialize_task_model(&set, t))
                .collect::<Result<_>>()?;
            let acc = eval_models(cell, &models)?;
            let norm = normalized(&acc, &cell.single_acc);
            Ok((acc, norm))
        }
        SuiteMethod::ByomLora => {
            let lora = cell
                .lora
                .as_ref()
                .ok_or_else(|| Error::BadConfig("adapter models were not trained".into()))?;
            let adapters: Vec<_> = lora
                .outcomes
                .iter()
                .map(|o| o.adapter.clone().expect("adapter mode"))
                .collect();
            let set = byom_lora(&base, &adapters, cfg.rank)?;
            let acc: Vec<f64> = (0..adapters.len())
                .map(|t| {
                    let model = MlpModel::from_checkpoint(&materialize_lora_task_model(&set, t)?)?;
                    model.accuracy(&cell.tests[t])
                })
                .collect::<Result<_>>()?;
            let norm = normalized(&acc, &lora.single_acc);
            Ok((acc, norm))
        }
    }
}

// ---------------------------------------------------------------------------
// Suite driver
// ---------------------------------------------------------------------------

/// Runs the configured experiment grid; one report per
/// (method, sweep point, seed).
pub fn run_interference_suite(cfg: &SuiteConfig) -> Result<Vec<EvalReport>> {
    let need_lora = cfg.methods.contains(&SuiteMethod::ByomLora);
    match &cfg.plan {
        SuitePlan::TaskCountSweep { task_counts } => {
            let cells: Vec<(u64, usize)> = cfg
                .seeds
                .iter()
                .flat_map(|&s| task_counts.iter().map(move |&t| (s, t)))
                .collect();
            let nested: Vec<Vec<EvalReport>> = cells
                .par_iter()
                .map(|&(seed, t_count)| {
                    let specs = task_family(mix(seed, SEED_FAMILY), t_count, &cfg.params.shape());
                    let cell = build_cell(seed, &specs, cfg, need_lora)?;
                    cfg.methods
                        .iter()
                        .map(|method| {
                            let (acc, norm) = eval_method(&cell, method, cfg, cfg.lambda, None)?;
                            Ok(EvalReport {
                                method: method.label(),
                                sweep_name: "task_count".into(),
                                sweep_value: t_count as f64,
                                seed,
                                per_task_accuracy: acc,
                                per_task_normalized: norm,
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            Ok(nested.into_iter().flatten().collect())
        }
        SuitePlan::LambdaSweep { pair, lambdas } => {
            for m in &cfg.methods {
                if matches!(m, SuiteMethod::ByomLora) {
                    return Err(Error::BadConfig(
                        "byom_lora has no λ axis; use a task_count suite".into(),
                    ));
                }
            }
            let nested: Vec<Vec<EvalReport>> = cfg
                .seeds
                .par_iter()
                .map(|&seed| {
                    let (a, b) = match pair {
                        PairKind::Dissimilar => {
                            dissimilar_pair(mix(seed, SEED_FAMILY), &cfg.params.shape())
                        }
                        PairKind::SimilarDisjoint => {
                            disjoint_split_pair(mix(seed, SEED_FAMILY), &cfg.params.shape())
                        }
                    };
                    let cell = build_cell(seed, &[a, b], cfg, false)?;
                    let mut out = Vec::new();
                    for &lambda in lambdas {
                        for method in &cfg.methods {
                            let wa = Some(vec![lambda, 1.0 - lambda]);
                            let (acc, norm) = eval_method(&cell, method, cfg, lambda, wa)?;
                            out.push(EvalReport {
                                method: method.label(),
                                sweep_name: "lambda".into(),
                                sweep_value: lambda,
                                seed,
                                per_task_accuracy: acc,
                                per_task_normalized: norm,
                            });
                        }
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            Ok(nested.into_iter().flatten().collect())
        }
    }
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

/// Writes one row per (report, task), sorted canonically, floats with six
/// decimals. Re-emitting the same reports yields identical bytes.
pub fn emit_csv(reports: &[EvalReport], path: impl AsRef<Path>) -> Result<()> {
    let text = render_csv(reports)?;
    std::fs::write(path.as_ref(), text).map_err(|e| Error::IoFailure {
        path: path.as_ref().display().to_string(),
        source: e,
    })
}

/// CSV text for the reports; see [`emit_csv`].
pub fn render_csv(reports: &[EvalReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("emit_csv"));
    }
    let mut rows: Vec<(&EvalReport, usize)> = reports
        .iter()
        .flat_map(|r| (0..r.per_task_accuracy.len()).map(move |t| (r, t)))
        .collect();
    rows.sort_by(|(ra, ta), (rb, tb)| {
        ra.method
            .cmp(&rb.method)
            .then(ra.sweep_name.cmp(&rb.sweep_name))
            .then(ra.sweep_value.total_cmp(&rb.sweep_value))
            .then(ra.seed.cmp(&rb.seed))
            .then(ta.cmp(tb))
    });
    let mut out = String::from("method,sweep_name,sweep_value,seed,task,accuracy,normalized_accuracy\n");
    for (r, t) in rows {
        writeln!(
            out,
            "{},{},{:.6},{},{},{:.6},{:.6}",
            r.method, r.sweep_name, r.sweep_value, r.seed, t, r.per_task_accuracy[t],
            r.per_task_normalized[t]
        )
        .expect("string write");
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

/// Parses the plain-text key-value config format (see the repository
/// README for the key list).
pub fn parse_config(text: &str) -> Result<SuiteConfig> {
    let mut cfg = SuiteConfig::default();
    let mut suite_kind: Option<String> = None;
    let mut pair = PairKind::Dissimilar;
    let mut task_counts: Vec<usize> = vec![2, 4, 8];
    let mut lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::BadConfig(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "suite" => suite_kind = Some(value.to_string()),
            "methods" => {
                cfg.methods = value
                    .split(',')
                    .map(|tok| SuiteMethod::parse(tok.trim()))
                    .collect::<Result<_>>()?;
            }
            "seeds" => cfg.seeds = parse_u64_list(value)?,
            "task_counts" => {
                task_counts = parse_u64_list(value)?.into_iter().map(|v| v as usize).collect()
            }
            "lambdas" => lambdas = parse_f64_list(value)?,
            "pair" => pair = PairKind::parse(value)?,
            "keep" => cfg.keep_ratio = parse_f64(key, value)?,
            "lambda" => cfg.lambda = parse_f64(key, value)?,
            "trim" => cfg.trim_ratio = parse_f64(key, value)?,
            "rank" => cfg.rank = parse_usize(key, value)?,
            "source_rank" => cfg.source_rank = parse_usize(key, value)?,
            "train_count" => cfg.params.train_count = parse_usize(key, value)?,
            "test_count" => cfg.params.test_count = parse_usize(key, value)?,
            "pretrain_steps" => cfg.params.pretrain_steps = parse_usize(key, value)?,
            "finetune_steps" => cfg.params.finetune_steps = parse_usize(key, value)?,
            "learning_rate" => cfg.params.learning_rate = parse_f64(key, value)?,
            "separation" => cfg.params.separation = parse_f64(key, value)? as f32,
            "noise" => cfg.params.noise_scale = parse_f64(key, value)? as f32,
            "out" => cfg.out = Some(PathBuf::from(value)),
            other => return Err(Error::BadConfig(format!("unknown key `{other}`"))),
        }
    }

    match suite_kind.as_deref() {
        Some("task_count") => cfg.plan = SuitePlan::TaskCountSweep { task_counts },
        Some("lambda") => cfg.plan = SuitePlan::LambdaSweep { pair, lambdas },
        Some(other) => return Err(Error::BadConfig(format!("unknown suite `{other}`"))),
        None => return Err(Error::BadConfig("missing `suite` key".into())),
    }
    if cfg.methods.is_empty() {
        return Err(Error::BadConfig("methods must be non-empty".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::BadConfig("seeds must be non-empty".into()));
    }
    Ok(cfg)
}

/// Loads a config file from disk.
pub fn load_config(path: impl AsRef<Path>) -> Result<SuiteConfig> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::IoFailure {
        path: path.as_ref().display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::BadConfig(format!("`{key}` is not a number: {value}")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::BadConfig(format!("`{key}` is not an integer: {value}")))
}

/// `a..b` (end-exclusive range) or a comma list.
fn parse_u64_list(value: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = value.split_once("..") {
        let a: u64 = parse_f64("range start", a.trim())? as u64;
        let b: u64 = parse_f64("range end", b.trim())? as u64;
        return Ok((a..b).collect());
    }
    value
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::BadConfig(format!("bad integer `{tok}`")))
        })
        .collect()
}

/// `start:end:step` (end-inclusive grid) or a comma list.
fn parse_f64_list(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() == 3 {
        let start = parse_f64("grid start", parts[0])?;
        let end = parse_f64("grid end", parts[1])?;
        let step = parse_f64("grid step", parts[2])?;
        if step <= 0.0 {
            return Err(Error::BadConfig("grid step must be positive".into()));
        }
        let mut out = Vec::new();
        let mut i = 0;
        loop {
            let v = start + step * i as f64;
            if v > end + 1e-9 {
                break;
            }
            out.push(v);
            i += 1;
        }
        return Ok(out);
    }
    value
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::BadConfig(format!("bad number `{tok}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_params() -> LabParams {
        LabParams {
            train_count: 48,
            test_count: 48,
            pretrain_steps: 40,
            finetune_steps: 80,
            ..LabParams::default()
        }
    }

    #[test]
    fn single_task_normalized_is_exactly_one() {
        let cfg = SuiteConfig {
            plan: SuitePlan::TaskCountSweep { task_counts: vec![2] },
            methods: vec![SuiteMethod::SingleTask],
            seeds: vec![0],
            params: quick_params(),
            ..SuiteConfig::default()
        };
        let reports = run_interference_suite(&cfg).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].per_task_normalized.iter().all(|&n| n == 1.0));
    }

    #[test]
    fn single_task_arithmetic_unit_lambda_is_identity() {
        let cfg = SuiteConfig {
            plan: SuitePlan::TaskCountSweep { task_counts: vec![1] },
            methods: vec![SuiteMethod::TaskArithmetic],
            seeds: vec![3],
            lambda: 1.0,
            params: quick_params(),
            ..SuiteConfig::default()
        };
        let reports = run_interference_suite(&cfg).unwrap();
        assert!(reports[0].per_task_normalized.iter().all(|&n| n == 1.0));
    }

    #[test]
    fn suite_is_deterministic() {
        let cfg = SuiteConfig {
            plan: SuitePlan::TaskCountSweep { task_counts: vec![2] },
            methods: vec![SuiteMethod::TaskArithmetic, SuiteMethod::SingleTask],
            seeds: vec![1, 2],
            params: quick_params(),
            ..SuiteConfig::default()
        };
        let a = run_interference_suite(&cfg).unwrap();
        let b = run_interference_suite(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_shape_and_determinism() {
        let report = EvalReport {
            method: "single_task".into(),
            sweep_name: "task_count".into(),
            sweep_value: 2.0,
            seed: 0,
            per_task_accuracy: vec![0.5],
            per_task_normalized: vec![1.0],
        };
        let text = render_csv(&[report.clone()]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "method,sweep_name,sweep_value,seed,task,accuracy,normalized_accuracy"
        );
        assert_eq!(lines[1], "single_task,task_count,2.000000,0,0,0.500000,1.000000");
        assert_eq!(text, render_csv(&[report]).unwrap());
    }

    #[test]
    fn csv_row_count_matches_task_totals() {
        let mk = |tasks: usize| EvalReport {
            method: "m".into(),
            sweep_name: "task_count".into(),
            sweep_value: tasks as f64,
            seed: 0,
            per_task_accuracy: vec![0.5; tasks],
            per_task_normalized: vec![1.0; tasks],
        };
        let reports = [mk(2), mk(3)];
        let text = render_csv(&reports).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 + 3);
    }

    #[test]
    fn config_round_trip() {
        let text = "
            # comment
            suite = lambda
            pair = similar_disjoint
            lambdas = 0.0:1.0:0.5
            methods = weighted_average, task_arithmetic, single_task
            seeds = 0..3
            keep = 0.2
        ";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.keep_ratio, 0.2);
        match &cfg.plan {
            SuitePlan::LambdaSweep { pair, lambdas } => {
                assert_eq!(*pair, PairKind::SimilarDisjoint);
                assert_eq!(lambdas, &[0.0, 0.5, 1.0]);
            }
            _ => panic!("wrong plan"),
        }
        assert_eq!(cfg.methods.len(), 3);
    }

    #[test]
    fn config_rejects_unknown_keys_and_methods() {
        assert!(matches!(
            parse_config("suite = task_count\nbogus = 1\nmethods = single_task\nseeds = 0"),
            Err(Error::BadConfig(_))
        ));
        assert!(matches!(
            parse_config("suite = task_count\nmethods = nope\nseeds = 0"),
            Err(Error::BadConfig(_))
        ));
        assert!(matches!(parse_config("methods = single_task\nseeds = 0"), Err(Error::BadConfig(_))));
    }
}
