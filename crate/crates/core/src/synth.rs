//! Deterministic synthetic benchmark: catalog, embeddings and fine-tune
//! accuracies generated from a single seed.
//!
//! Every model has a latent quality per task. Fine-tune accuracy is an affine
//! function of it; representations separate their classes in proportion to it.
//! Generalists share one quality across tasks and carry an ImageNet accuracy
//! that tracks it. Experts are mediocre everywhere except on the one task
//! they are bound to, where they beat every generalist, but they have no
//! ImageNet accuracy, so metadata-only ranking puts them last.
//!
//! On structured tasks the representation quality of non-expert cells is
//! mirrored inside the quality range (`q_lo + q_hi - q`), so proxies computed
//! there point away from the fine-tune winner.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, with one stream per
//! concern and item, so a cell's values do not depend on generation order.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::{ModelCatalog, ModelRecord, TaskCatalog, TaskGroup, TaskRecord, EXPERT_TAG};
use crate::error::{Error, Result};
use crate::store::{AccuracyTable, EmbeddingDir, EmbeddingMatrix, EmbeddingSet, Split};
use crate::table::{self, fmt6, parse_field, quantize6};

pub const GROUND_TRUTH_HEADER: [&str; 4] = ["model_id", "task_id", "quality", "is_intended_argmax"];

const N_TEST: u32 = 1000;
const IMAGENET_SIZE: u64 = 1_281_167;

const STREAM_LAYOUT: u64 = 0;
const STREAM_EMBEDDINGS: u64 = 1 << 32;
const STREAM_ACCURACY: u64 = 2 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_models: usize,
    pub n_tasks: usize,
    pub n_classes: u32,
    pub n_train: u32,
    pub n_val: u32,
    /// Embedding widths, one drawn per model.
    pub dims: Vec<u32>,
    /// Each expert is bound to a distinct task.
    pub n_experts: usize,
    pub quality_range: (f64, f64),
    pub expert_quality_bonus: f64,
    pub accuracy_noise_sd: f64,
    /// Fine-tune runs per (model, task) cell.
    pub runs: u32,
    /// Distance of each class mean from the origin at quality 1.
    pub class_separation: f64,
    pub accuracy_base: f64,
    pub accuracy_gain: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_models: 12,
            n_tasks: 6,
            n_classes: 4,
            n_train: 800,
            n_val: 200,
            dims: vec![8, 16, 32],
            n_experts: 2,
            quality_range: (0.2, 0.7),
            expert_quality_bonus: 0.5,
            accuracy_noise_sd: 0.0,
            runs: 5,
            class_separation: 3.0,
            accuracy_base: 0.4,
            accuracy_gain: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_models == 0 || self.n_tasks == 0 {
            return fail("need at least one model and one task".into());
        }
        if self.n_experts > self.n_models.min(self.n_tasks) {
            return fail(format!(
                "{} experts need as many models and tasks (have {} models, {} tasks)",
                self.n_experts, self.n_models, self.n_tasks
            ));
        }
        if self.n_classes < 2 {
            return fail("n_classes must be >= 2".into());
        }
        if self.n_train == 0 || self.n_val == 0 {
            return fail("n_train and n_val must be >= 1".into());
        }
        if self.dims.is_empty() {
            return fail("dims must not be empty".into());
        }
        if let Some(d) = self.dims.iter().find(|&&d| d < self.n_classes) {
            return fail(format!("dimension {d} cannot hold {} separated classes", self.n_classes));
        }
        let (lo, hi) = self.quality_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return fail(format!("quality range [{lo}, {hi}] must lie in [0, 1] with lo <= hi"));
        }
        if !(self.expert_quality_bonus.is_finite() && self.expert_quality_bonus > 0.0) {
            return fail("expert_quality_bonus must be positive".into());
        }
        if !(self.accuracy_noise_sd.is_finite() && self.accuracy_noise_sd >= 0.0) {
            return fail("accuracy_noise_sd must be >= 0".into());
        }
        if self.runs == 0 {
            return fail("runs must be >= 1".into());
        }
        if !(self.class_separation.is_finite() && self.class_separation > 0.0) {
            return fail("class_separation must be positive".into());
        }
        if ![self.accuracy_base, self.accuracy_gain].iter().all(|v| v.is_finite()) {
            return fail("accuracy_base and accuracy_gain must be finite".into());
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRow {
    pub model_id: String,
    pub task_id: String,
    pub quality: f64,
    pub is_intended_argmax: bool,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub catalog: ModelCatalog,
    pub tasks: TaskCatalog,
    pub embeddings: EmbeddingSet,
    pub accuracy: AccuracyTable,
    pub ground_truth: Vec<GroundTruthRow>,
    /// (expert model, bound task) pairs.
    pub experts: Vec<(String, String)>,
}

impl SynthData {
    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.task_id.clone()).collect()
    }

    pub fn expert_for(&self, task_id: &str) -> Option<&str> {
        self.experts
            .iter()
            .find(|(_, t)| t == task_id)
            .map(|(m, _)| m.as_str())
    }

    /// Models whose latent quality is highest on `task_id`.
    pub fn intended_argmax(&self, task_id: &str) -> Vec<&str> {
        self.ground_truth
            .iter()
            .filter(|r| r.task_id == task_id && r.is_intended_argmax)
            .map(|r| r.model_id.as_str())
            .collect()
    }

    /// Writes `models.csv`, `tasks.csv`, `accuracy.csv`, `ground_truth.csv`
    /// and `embeddings/` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        self.catalog.save_csv(&dir.join("models.csv"))?;
        self.tasks.save_csv(&dir.join("tasks.csv"))?;
        self.accuracy.save_csv(&dir.join("accuracy.csv"))?;
        save_ground_truth(&dir.join("ground_truth.csv"), &self.ground_truth)?;
        self.embeddings.save_to(&EmbeddingDir::new(dir.join("embeddings")))
    }
}

pub fn save_ground_truth(path: &Path, rows: &[GroundTruthRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.model_id.clone(),
            r.task_id.clone(),
            fmt6(r.quality),
            r.is_intended_argmax.to_string(),
        ]
    });
    table::write_csv(path, &GROUND_TRUTH_HEADER, rows)
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthRow>> {
    table::records(path, &GROUND_TRUTH_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(GroundTruthRow {
                model_id: rec[0].trim().to_string(),
                task_id: rec[1].trim().to_string(),
                quality: parse_field(path, line, "quality", &rec[2])?,
                is_intended_argmax: parse_field(path, line, "is_intended_argmax", &rec[3])?,
            })
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn group_of(task_index: usize) -> TaskGroup {
    TaskGroup::ALL[task_index % TaskGroup::ALL.len()]
}

struct Layout {
    models: Vec<ModelRecord>,
    /// Quality shared across tasks (expert off-task quality for experts).
    base_quality: Vec<f64>,
    /// Bound task index per model, for experts.
    bound_task: Vec<Option<usize>>,
    expert_bound_quality: f64,
}

fn layout(cfg: &SynthConfig, task_ids: &[String]) -> Layout {
    let mut rng = cfg.rng(STREAM_LAYOUT);
    let (q_lo, q_hi) = cfg.quality_range;
    let width = cfg.n_models.saturating_sub(1).to_string().len().max(2);

    let mut slots: Vec<usize> = (0..cfg.n_models).collect();
    slots.shuffle(&mut rng);
    let mut is_expert = vec![false; cfg.n_models];
    for &s in &slots[..cfg.n_experts] {
        is_expert[s] = true;
    }

    // natural tasks first, then specialized, then structured
    let mut binding_order: Vec<usize> = (0..cfg.n_tasks).collect();
    binding_order.sort_by_key(|&t| (group_of(t), t));
    let mut bound_task = vec![None; cfg.n_models];
    for (m, t) in (0..cfg.n_models).filter(|&m| is_expert[m]).zip(&binding_order) {
        bound_task[m] = Some(*t);
    }

    let mut base_quality: Vec<f64> = (0..cfg.n_models)
        .map(|m| if is_expert[m] { 0.0 } else { quantize6(uniform(&mut rng, q_lo, q_hi)) })
        .collect();
    let top_generalist = (0..cfg.n_models)
        .filter(|&m| !is_expert[m])
        .map(|m| base_quality[m])
        .fold(None, |acc: Option<f64>, q| Some(acc.map_or(q, |a| a.max(q))))
        .unwrap_or(q_hi);
    let off_task_hi = q_lo + 0.5 * (top_generalist - q_lo);
    for m in (0..cfg.n_models).filter(|&m| is_expert[m]) {
        base_quality[m] = quantize6(uniform(&mut rng, q_lo, off_task_hi));
    }
    let expert_bound_quality = quantize6((top_generalist + cfg.expert_quality_bonus).min(1.0));

    let models = (0..cfg.n_models)
        .map(|m| {
            let model_id = format!("m{m:0width$}");
            let embedding_dim = cfg.dims[rng.random_range(0..cfg.dims.len())];
            let param_count = rng.random_range(2_000_000..90_000_000u64);
            match bound_task[m] {
                Some(t) => ModelRecord {
                    display_name: format!("Synthetic expert {m} ({})", task_ids[t]),
                    model_id,
                    embedding_dim,
                    param_count,
                    imagenet_accuracy: None,
                    upstream_dataset_name: format!("synthetic-{}", task_ids[t]),
                    upstream_dataset_size: Some(rng.random_range(10_000..200_000u64)),
                    tags: BTreeSet::from([EXPERT_TAG.to_string()]),
                },
                None => ModelRecord {
                    display_name: format!("Synthetic generalist {m}"),
                    model_id,
                    embedding_dim,
                    param_count,
                    imagenet_accuracy: Some(quantize6(0.6 + 0.25 * base_quality[m])),
                    upstream_dataset_name: "synthetic-imagenet".into(),
                    upstream_dataset_size: Some(IMAGENET_SIZE),
                    tags: BTreeSet::new(),
                },
            }
        })
        .collect();

    Layout {
        models,
        base_quality,
        bound_task,
        expert_bound_quality,
    }
}

fn embed(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    d: usize,
    representation_quality: f64,
    n: u32,
    axes: &[usize],
) -> Result<EmbeddingMatrix> {
    let c = cfg.n_classes;
    let labels: Vec<u32> = (0..n).map(|i| i % c).collect();
    let radius = cfg.class_separation * representation_quality;
    let mut features = Vec::with_capacity(n as usize * d);
    for &label in &labels {
        let axis = axes[label as usize];
        for j in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            let mean = if j == axis { radius } else { 0.0 };
            features.push((mean + noise) as f32);
        }
    }
    EmbeddingMatrix::new(c, d, labels, features)
}

/// Generates the full synthetic suite.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let (q_lo, q_hi) = cfg.quality_range;
    let width = cfg.n_tasks.saturating_sub(1).to_string().len().max(2);
    let tasks: Vec<TaskRecord> = (0..cfg.n_tasks)
        .map(|t| TaskRecord {
            task_id: format!("task{t:0width$}"),
            group: group_of(t),
            n_train: cfg.n_train,
            n_val: cfg.n_val,
            n_test: N_TEST,
            n_classes: cfg.n_classes,
        })
        .collect();
    let task_ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let lay = layout(cfg, &task_ids);

    let quality = |m: usize, t: usize| -> f64 {
        if lay.bound_task[m] == Some(t) {
            lay.expert_bound_quality
        } else {
            lay.base_quality[m]
        }
    };

    let mut embeddings = EmbeddingSet::new();
    let mut accuracy = AccuracyTable::new();
    let mut ground_truth = Vec::with_capacity(cfg.n_models * cfg.n_tasks);

    for (m, model) in lay.models.iter().enumerate() {
        for (t, task) in tasks.iter().enumerate() {
            let cell = (m * cfg.n_tasks + t) as u64;
            let q = quality(m, t);
            let mirrored = task.group == TaskGroup::Structured && lay.bound_task[m] != Some(t);
            let r = if mirrored { q_lo + q_hi - q } else { q };

            let mut rng = cfg.rng(STREAM_EMBEDDINGS | cell);
            let d = model.embedding_dim as usize;
            let mut axes: Vec<usize> = (0..d).collect();
            axes.shuffle(&mut rng);
            axes.truncate(cfg.n_classes as usize);
            let train = embed(cfg, &mut rng, d, r, cfg.n_train, &axes)?;
            let val = embed(cfg, &mut rng, d, r, cfg.n_val, &axes)?;
            embeddings.insert(&model.model_id, &task.task_id, Split::Train, train);
            embeddings.insert(&model.model_id, &task.task_id, Split::Val, val);

            let mut rng = cfg.rng(STREAM_ACCURACY | cell);
            for run in 0..cfg.runs {
                let noise = if cfg.accuracy_noise_sd > 0.0 {
                    cfg.accuracy_noise_sd * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                let acc = quantize6((cfg.accuracy_base + cfg.accuracy_gain * q + noise).clamp(0.0, 1.0));
                accuracy.insert_run(&model.model_id, &task.task_id, run, acc)?;
            }
        }
    }

    for (t, task) in tasks.iter().enumerate() {
        let best = (0..cfg.n_models).map(|m| quality(m, t)).fold(f64::MIN, f64::max);
        for (m, model) in lay.models.iter().enumerate() {
            ground_truth.push(GroundTruthRow {
                model_id: model.model_id.clone(),
                task_id: task.task_id.clone(),
                quality: quality(m, t),
                is_intended_argmax: quality(m, t) == best,
            });
        }
    }

    let experts = lay
        .models
        .iter()
        .zip(&lay.bound_task)
        .filter_map(|(model, t)| t.map(|t| (model.model_id.clone(), task_ids[t].clone())))
        .collect();

    Ok(SynthData {
        catalog: ModelCatalog::new(lay.models)?,
        tasks: TaskCatalog::new(tasks)?,
        embeddings,
        accuracy,
        ground_truth,
        experts,
    })
}
