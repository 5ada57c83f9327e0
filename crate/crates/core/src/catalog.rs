//! Model and task metadata, and the constrained model pools built from them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::table::{self, fmt6, parse_field, parse_opt_field};

/// Largest parameter count admitted to the ResNet-50-class pool.
///
/// This is the expert checkpoints' size (23,807,702), slightly above the
/// ImageNet ResNet-50 V2 (23,519,360), so that every expert is in the pool.
pub const RESNET50_CLASS_MAX_PARAMS: u64 = 23_807_702;

/// Largest representation width admitted to the Dim2048 pool.
pub const DIM2048_MAX_DIM: u32 = 2048;

pub const EXPERT_TAG: &str = "expert";

pub const MODEL_HEADER: [&str; 8] = [
    "model_id",
    "display_name",
    "embedding_dim",
    "param_count",
    "imagenet_accuracy",
    "upstream_dataset_name",
    "upstream_dataset_size",
    "tags",
];

pub const TASK_HEADER: [&str; 6] = ["task_id", "group", "n_train", "n_val", "n_test", "n_classes"];

const REFERENCE_ZOO_CSV: &str = include_str!("../assets/reference_zoo.csv");
const VTAB_1K_TASKS_CSV: &str = include_str!("../assets/vtab_1k_tasks.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub model_id: String,
    pub display_name: String,
    pub embedding_dim: u32,
    pub param_count: u64,
    pub imagenet_accuracy: Option<f64>,
    pub upstream_dataset_name: String,
    /// Number of upstream training examples, when known.
    pub upstream_dataset_size: Option<u64>,
    pub tags: BTreeSet<String>,
}

impl ModelRecord {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn is_expert(&self) -> bool {
        self.has_tag(EXPERT_TAG)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.is_empty() {
            return Err(Error::Config("model_id must not be empty".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Range(format!("{}: embedding_dim must be >= 1", self.model_id)));
        }
        if self.param_count == 0 {
            return Err(Error::Range(format!("{}: param_count must be >= 1", self.model_id)));
        }
        if let Some(acc) = self.imagenet_accuracy {
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::Range(format!(
                    "{}: imagenet_accuracy {acc} outside [0, 1]",
                    self.model_id
                )));
            }
        }
        if self.upstream_dataset_size == Some(0) {
            return Err(Error::Range(format!(
                "{}: upstream_dataset_size must be positive when present",
                self.model_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskGroup {
    Natural,
    Specialized,
    Structured,
}

impl TaskGroup {
    pub const ALL: [TaskGroup; 3] = [TaskGroup::Natural, TaskGroup::Specialized, TaskGroup::Structured];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskGroup::Natural => "natural",
            TaskGroup::Specialized => "specialized",
            TaskGroup::Structured => "structured",
        }
    }
}

impl fmt::Display for TaskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(TaskGroup::Natural),
            "specialized" => Ok(TaskGroup::Specialized),
            "structured" => Ok(TaskGroup::Structured),
            other => Err(Error::Config(format!("unknown task group `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRecord {
    pub task_id: String,
    pub group: TaskGroup,
    pub n_train: u32,
    pub n_val: u32,
    pub n_test: u32,
    pub n_classes: u32,
}

impl TaskRecord {
    pub fn validate(&self) -> Result<()> {
        if self.task_id.is_empty() {
            return Err(Error::Config("task_id must not be empty".into()));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Range(format!("{}: split sizes must be >= 1", self.task_id)));
        }
        if self.n_classes < 2 {
            return Err(Error::Range(format!("{}: n_classes must be >= 2", self.task_id)));
        }
        Ok(())
    }

    /// True for the few-shot configuration with 800 training and 200 validation examples.
    pub fn is_vtab_1k(&self) -> bool {
        self.n_train == 800 && self.n_val == 200
    }
}

/// Ordered, id-unique list of records. File order is the canonical order and
/// the final tie-breaker everywhere in the crate.
#[derive(Debug, Clone)]
pub struct ModelCatalog {
    models: Vec<ModelRecord>,
    index: HashMap<String, usize>,
}

impl ModelCatalog {
    pub fn new(models: Vec<ModelRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(models.len());
        for (i, m) in models.iter().enumerate() {
            m.validate()?;
            if index.insert(m.model_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(m.model_id.clone()));
            }
        }
        Ok(Self { models, index })
    }

    /// The 46 image-classification models of the reference study: 15 ImageNet
    /// classifiers, 16 JFT-subset experts and 15 VTAB representation models.
    pub fn reference_zoo() -> Self {
        Self::parse_csv(REFERENCE_ZOO_CSV, Path::new("reference_zoo.csv"))
            .expect("bundled reference zoo is valid")
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[ModelRecord] {
        &self.models
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModelRecord> {
        self.models.iter()
    }

    pub fn get(&self, model_id: &str) -> Result<&ModelRecord> {
        self.index
            .get(model_id)
            .map(|&i| &self.models[i])
            .ok_or_else(|| Error::UnknownModel(model_id.to_string()))
    }

    /// Catalog position of `model_id`.
    pub fn position(&self, model_id: &str) -> Result<usize> {
        self.index
            .get(model_id)
            .copied()
            .ok_or_else(|| Error::UnknownModel(model_id.to_string()))
    }

    pub fn contains(&self, model_id: &str) -> bool {
        self.index.contains_key(model_id)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let rows = parse_rows(text, path, &MODEL_HEADER)?;
        let mut models = Vec::with_capacity(rows.len());
        for (line, rec) in rows {
            let tags = rec[7]
                .split(';')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            models.push(ModelRecord {
                model_id: rec[0].trim().to_string(),
                display_name: rec[1].to_string(),
                embedding_dim: parse_field(path, line, "embedding_dim", &rec[2])?,
                param_count: parse_field(path, line, "param_count", &rec[3])?,
                imagenet_accuracy: parse_opt_field(path, line, "imagenet_accuracy", &rec[4])?,
                upstream_dataset_name: rec[5].to_string(),
                upstream_dataset_size: parse_opt_field(path, line, "upstream_dataset_size", &rec[6])?,
                tags,
            });
        }
        Self::new(models)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        table::write_csv(
            path,
            &MODEL_HEADER,
            self.models.iter().map(|m| {
                vec![
                    m.model_id.clone(),
                    m.display_name.clone(),
                    m.embedding_dim.to_string(),
                    m.param_count.to_string(),
                    m.imagenet_accuracy.map(fmt6).unwrap_or_default(),
                    m.upstream_dataset_name.clone(),
                    m.upstream_dataset_size.map(|s| s.to_string()).unwrap_or_default(),
                    m.tags.iter().cloned().collect::<Vec<_>>().join(";"),
                ]
            }),
        )
    }
}

#[derive(Debug, Clone)]
pub struct TaskCatalog {
    tasks: Vec<TaskRecord>,
    index: HashMap<String, usize>,
}

impl TaskCatalog {
    pub fn new(tasks: Vec<TaskRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            t.validate()?;
            if index.insert(t.task_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.task_id.clone()));
            }
        }
        Ok(Self { tasks, index })
    }

    /// The 19 VTAB-1K tasks (7 natural, 4 specialized, 8 structured).
    pub fn vtab_1k() -> Self {
        Self::parse_csv(VTAB_1K_TASKS_CSV, Path::new("vtab_1k_tasks.csv"))
            .expect("bundled task manifest is valid")
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[TaskRecord] {
        &self.tasks
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskRecord> {
        self.tasks.iter()
    }

    pub fn get(&self, task_id: &str) -> Result<&TaskRecord> {
        self.index
            .get(task_id)
            .map(|&i| &self.tasks[i])
            .ok_or_else(|| Error::UnknownTask(task_id.to_string()))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let rows = parse_rows(text, path, &TASK_HEADER)?;
        let mut tasks = Vec::with_capacity(rows.len());
        for (line, rec) in rows {
            tasks.push(TaskRecord {
                task_id: rec[0].trim().to_string(),
                group: rec[1]
                    .parse()
                    .map_err(|_| Error::format(table::location(path, line), format!("bad group `{}`", &rec[1])))?,
                n_train: parse_field(path, line, "n_train", &rec[2])?,
                n_val: parse_field(path, line, "n_val", &rec[3])?,
                n_test: parse_field(path, line, "n_test", &rec[4])?,
                n_classes: parse_field(path, line, "n_classes", &rec[5])?,
            });
        }
        Self::new(tasks)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        table::write_csv(
            path,
            &TASK_HEADER,
            self.tasks.iter().map(|t| {
                vec![
                    t.task_id.clone(),
                    t.group.to_string(),
                    t.n_train.to_string(),
                    t.n_val.to_string(),
                    t.n_test.to_string(),
                    t.n_classes.to_string(),
                ]
            }),
        )
    }
}

fn parse_rows(text: &str, path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let loc = path.display().to_string();
    let found = reader.headers().map_err(|e| Error::format(&loc, e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(&loc, format!("expected header `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(&loc, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::format(
                table::location(path, i + 2),
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        out.push((i + 2, rec));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PoolId {
    All,
    Dim2048,
    ResNet50Class,
    Expert,
    ImNetAccuracies,
    Custom(String),
}

impl PoolId {
    pub const BUILTIN: [PoolId; 5] = [
        PoolId::All,
        PoolId::Dim2048,
        PoolId::ResNet50Class,
        PoolId::Expert,
        PoolId::ImNetAccuracies,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            PoolId::All => "All",
            PoolId::Dim2048 => "Dim2048",
            PoolId::ResNet50Class => "ResNet50Class",
            PoolId::Expert => "Expert",
            PoolId::ImNetAccuracies => "ImNetAccuracies",
            PoolId::Custom(name) => name,
        }
    }
}

impl fmt::Display for PoolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolId {
    type Err = Error;

    /// Built-in names are matched case-insensitively; anything else is a custom pool name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Config("empty pool id".into()));
        }
        Ok(match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "all" => PoolId::All,
            "dim2048" => PoolId::Dim2048,
            "resnet50class" | "resnet50" => PoolId::ResNet50Class,
            "expert" | "experts" => PoolId::Expert,
            "imnetaccuracies" | "imagenetaccuracies" => PoolId::ImNetAccuracies,
            _ => PoolId::Custom(s.to_string()),
        })
    }
}

/// Filters defining a model pool. All active filters must pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoolSpec {
    pub pool_id: Option<PoolId>,
    pub max_param_count: Option<u64>,
    pub max_embedding_dim: Option<u32>,
    pub require_imagenet_accuracy: bool,
    pub require_tag: Option<String>,
    pub explicit_members: Option<Vec<String>>,
}

impl PoolSpec {
    pub fn builtin(id: PoolId) -> Self {
        let base = PoolSpec {
            pool_id: Some(id.clone()),
            ..Default::default()
        };
        match id {
            PoolId::All | PoolId::Custom(_) => base,
            PoolId::Dim2048 => PoolSpec {
                max_embedding_dim: Some(DIM2048_MAX_DIM),
                ..base
            },
            PoolId::ResNet50Class => PoolSpec {
                max_param_count: Some(RESNET50_CLASS_MAX_PARAMS),
                ..base
            },
            PoolId::Expert => PoolSpec {
                require_tag: Some(EXPERT_TAG.to_string()),
                ..base
            },
            PoolId::ImNetAccuracies => PoolSpec {
                require_imagenet_accuracy: true,
                ..base
            },
        }
    }

    pub fn custom(name: impl Into<String>) -> Self {
        PoolSpec {
            pool_id: Some(PoolId::Custom(name.into())),
            ..Default::default()
        }
    }

    pub fn id(&self) -> PoolId {
        self.pool_id.clone().unwrap_or_else(|| PoolId::Custom("Custom".into()))
    }

    fn has_filter(&self) -> bool {
        self.max_param_count.is_some()
            || self.max_embedding_dim.is_some()
            || self.require_imagenet_accuracy
            || self.require_tag.is_some()
            || self.explicit_members.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.id(), PoolId::Custom(_)) && !self.has_filter() {
            return Err(Error::Config(format!(
                "custom pool {} needs at least one filter or explicit member list",
                self.id()
            )));
        }
        Ok(())
    }

    fn admits(&self, m: &ModelRecord) -> bool {
        self.max_param_count.is_none_or(|max| m.param_count <= max)
            && self.max_embedding_dim.is_none_or(|max| m.embedding_dim <= max)
            && (!self.require_imagenet_accuracy || m.imagenet_accuracy.is_some())
            && self.require_tag.as_deref().is_none_or(|t| m.has_tag(t))
    }
}

/// A non-empty, duplicate-free subset of a catalog, in catalog order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    pub pool_id: PoolId,
    members: Vec<String>,
}

impl Pool {
    /// A pool with the given members in the given order, bypassing catalog
    /// filters. Callers are responsible for the ids being known.
    pub fn from_members(pool_id: PoolId, members: Vec<String>) -> Self {
        Self { pool_id, members }
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, model_id: &str) -> bool {
        self.members.iter().any(|m| m == model_id)
    }
}

pub fn build_pool(catalog: &ModelCatalog, spec: &PoolSpec) -> Result<Pool> {
    spec.validate()?;
    let id = spec.id();
    if catalog.is_empty() {
        return Err(Error::EmptyPool(id.to_string()));
    }
    let explicit: Option<HashSet<&str>> = match &spec.explicit_members {
        Some(list) => {
            for m in list {
                if !catalog.contains(m) {
                    return Err(Error::UnknownModel(m.clone()));
                }
            }
            Some(list.iter().map(String::as_str).collect())
        }
        None => None,
    };
    let members: Vec<String> = catalog
        .iter()
        .filter(|m| spec.admits(m))
        .filter(|m| explicit.as_ref().is_none_or(|set| set.contains(m.model_id.as_str())))
        .map(|m| m.model_id.clone())
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyPool(id.to_string()));
    }
    Ok(Pool { pool_id: id, members })
}
