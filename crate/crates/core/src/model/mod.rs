//! Per-task boosted-tree classifiers and the hierarchical prediction
//! cascade: sub-task A gates sub-tasks B and C, so a post predicted NOT
//! never reaches the fine-grained models and carries `NONE` downstream.

pub mod gbdt;
mod io;

pub use gbdt::GbdtConfig;
pub use io::{load_model, save_model, ModelArtifact};

use crate::corpus::{Language, LabelSet, Task, TaskALabel, TaskBLabel, TaskCLabel};
use crate::embed::FeatureVector;
use crate::error::{Error, Result};

use gbdt::Booster;

/// A fitted classifier bound to one (language, task) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedTaskModel {
    language: Language,
    task: Task,
    class_list: Vec<String>,
    booster: Booster,
    train_config: GbdtConfig,
    feature_dim: usize,
    seed: u64,
}

impl TrainedTaskModel {
    pub fn language(&self) -> Language {
        self.language
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn class_list(&self) -> &[String] {
        &self.class_list
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn train_config(&self) -> &GbdtConfig {
        &self.train_config
    }

    /// Number of fitted trees (rounds × classes).
    pub fn n_trees(&self) -> usize {
        self.booster.n_trees()
    }

    pub(crate) fn booster(&self) -> &Booster {
        &self.booster
    }

    pub(crate) fn from_parts(
        language: Language,
        task: Task,
        class_list: Vec<String>,
        booster: Booster,
        train_config: GbdtConfig,
        feature_dim: usize,
        seed: u64,
    ) -> Self {
        TrainedTaskModel {
            language,
            task,
            class_list,
            booster,
            train_config,
            feature_dim,
            seed,
        }
    }
}

/// One prediction: the argmax label and the full class-probability map in
/// class-list order.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub probabilities: Vec<(String, f64)>,
}

impl Prediction {
    pub fn probability(&self, label: &str) -> Option<f64> {
        self.probabilities
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }
}

/// Anything usable as a feature row.
pub trait FeatureRow {
    fn row(&self) -> &[f32];
}

impl FeatureRow for FeatureVector {
    fn row(&self) -> &[f32] {
        self.combined()
    }
}

impl FeatureRow for Vec<f32> {
    fn row(&self) -> &[f32] {
        self
    }
}

impl FeatureRow for [f32] {
    fn row(&self) -> &[f32] {
        self
    }
}

impl<T: FeatureRow + ?Sized> FeatureRow for &T {
    fn row(&self) -> &[f32] {
        (**self).row()
    }
}

fn check_rows<R: FeatureRow>(rows: &[R], expected_dim: Option<usize>) -> Result<usize> {
    let mut dim = expected_dim;
    for (i, r) in rows.iter().enumerate() {
        let row = r.row();
        match dim {
            None => dim = Some(row.len()),
            Some(d) if row.len() != d => {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )))
            }
            _ => {}
        }
        if let Some(bad) = row.iter().find(|x| !x.is_finite()) {
            return Err(Error::Data(format!(
                "row {i} contains a non-finite feature {bad}"
            )));
        }
    }
    Ok(dim.unwrap_or(0))
}

/// Train one task model. Reproducible: equal data, config and seed yield a
/// model with identical predictions (training itself has no stochastic
/// steps; the seed is recorded for provenance and downstream use).
pub fn train_task_model<R: FeatureRow>(
    language: Language,
    task: Task,
    features: &[R],
    labels: &[String],
    config: &GbdtConfig,
    seed: u64,
) -> Result<TrainedTaskModel> {
    if task == Task::C && !language.has_task_c() {
        return Err(Error::TaskCForGerman);
    }
    if features.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if labels.len() != features.len() {
        return Err(Error::Data(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let class_list: Vec<String> = task.train_classes().iter().map(|s| s.to_string()).collect();
    let mut label_ids = Vec::with_capacity(labels.len());
    for l in labels {
        let id = class_list
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::Data(format!("label {l:?} is not a task {task} class")))?;
        label_ids.push(id);
    }
    let distinct = {
        let mut seen = [false; 8];
        for &id in &label_ids {
            seen[id] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::SingleClass(labels[0].clone()));
    }

    let feature_dim = check_rows(features, None)?;
    let rows: Vec<&[f32]> = features.iter().map(FeatureRow::row).collect();
    let booster = gbdt::train(&rows, &label_ids, class_list.len(), config)?;

    Ok(TrainedTaskModel {
        language,
        task,
        class_list,
        booster,
        train_config: config.clone(),
        feature_dim,
        seed,
    })
}

/// Predict one label plus the probability map per input row, order
/// preserved. The label is the argmax; ties break towards the earlier entry
/// in the class list.
pub fn predict_task<R: FeatureRow>(
    model: &TrainedTaskModel,
    features: &[R],
) -> Result<Vec<Prediction>> {
    check_rows(features, Some(model.feature_dim))?;
    let mut out = Vec::with_capacity(features.len());
    for r in features {
        let probs = model.booster.probabilities(r.row());
        let mut best = 0usize;
        for (k, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = k;
            }
        }
        out.push(Prediction {
            label: model.class_list[best].clone(),
            probabilities: model
                .class_list
                .iter()
                .cloned()
                .zip(probs.iter().copied())
                .collect(),
        });
    }
    Ok(out)
}

/// The language's full model set: A always, B always, C unless German.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    language: Language,
    model_a: TrainedTaskModel,
    model_b: TrainedTaskModel,
    model_c: Option<TrainedTaskModel>,
}

impl CascadeModel {
    pub fn new(
        model_a: TrainedTaskModel,
        model_b: TrainedTaskModel,
        model_c: Option<TrainedTaskModel>,
    ) -> Result<Self> {
        let language = model_a.language;
        if model_a.task != Task::A || model_b.task != Task::B {
            return Err(Error::Data(
                "cascade members must be task A and task B models".into(),
            ));
        }
        if model_b.language != language || model_c.as_ref().is_some_and(|m| m.language != language)
        {
            return Err(Error::Data(
                "cascade members must share one language".into(),
            ));
        }
        match (&model_c, language.has_task_c()) {
            (Some(m), true) if m.task == Task::C => {}
            (None, false) => {}
            (Some(_), true) => return Err(Error::Data("third cascade member must be a task C model".into())),
            (Some(_), false) => return Err(Error::Data("German cascade cannot carry a task C model".into())),
            (None, true) => {
                return Err(Error::Data(format!(
                    "{language} cascade is missing its task C model"
                )))
            }
        }
        Ok(CascadeModel {
            language,
            model_a,
            model_b,
            model_c,
        })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn model_a(&self) -> &TrainedTaskModel {
        &self.model_a
    }

    pub fn model_b(&self) -> &TrainedTaskModel {
        &self.model_b
    }

    pub fn model_c(&self) -> Option<&TrainedTaskModel> {
        self.model_c.as_ref()
    }

    pub fn feature_dim(&self) -> usize {
        self.model_a.feature_dim
    }
}

/// Run the hierarchy: task A on every row; rows predicted HOF continue to
/// task B (and C where the language has it), rows predicted NOT get `NONE`
/// downstream. The output always satisfies the label-set invariants.
pub fn predict_cascade<R: FeatureRow>(
    cascade: &CascadeModel,
    features: &[R],
) -> Result<Vec<LabelSet>> {
    let preds_a = predict_task(&cascade.model_a, features)?;
    let hof_rows: Vec<usize> = preds_a
        .iter()
        .enumerate()
        .filter(|(_, p)| p.label == "HOF")
        .map(|(i, _)| i)
        .collect();

    let hof_features: Vec<&[f32]> = hof_rows.iter().map(|&i| features[i].row()).collect();
    let preds_b = predict_task(&cascade.model_b, &hof_features)?;
    let preds_c = match &cascade.model_c {
        Some(m) => Some(predict_task(m, &hof_features)?),
        None => None,
    };

    let not_labels = LabelSet::for_language(
        cascade.language,
        TaskALabel::Not,
        TaskBLabel::None,
        TaskCLabel::None,
    )
    .expect("NOT/NONE/NONE is always consistent");

    let mut out = vec![not_labels; features.len()];
    for (slot, &i) in hof_rows.iter().enumerate() {
        let task_b = match preds_b[slot].label.as_str() {
            "HATE" => TaskBLabel::Hate,
            "OFFN" => TaskBLabel::Offn,
            other => {
                debug_assert_eq!(other, "PRFN");
                TaskBLabel::Prfn
            }
        };
        let task_c = match &preds_c {
            Some(p) => {
                if p[slot].label == "TIN" {
                    TaskCLabel::Tin
                } else {
                    TaskCLabel::Unt
                }
            }
            None => TaskCLabel::None,
        };
        out[i] = LabelSet::for_language(cascade.language, TaskALabel::Hof, task_b, task_c)
            .expect("cascade output is consistent by construction");
    }
    Ok(out)
}
