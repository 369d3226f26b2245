//! End-to-end command implementations: stats, train, predict, evaluate.
//! Shared by the CLI and the C API.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::corpus::{
    self, compute_stats, load_dataset, load_posts, load_predictions, slice_for_task, Dataset,
    LabelSet, Post, Split, Task,
};
use crate::embed::{embed_concat, embed_concat_cached, EmbeddingProvider, FeatureCache, FeatureVector};
use crate::error::{Error, Result};
use crate::eval::{evaluate_cascade, render_json, render_text, EvaluationReport, ReportMeta};
use crate::model::{
    predict_cascade, save_model, train_task_model, CascadeModel, TrainedTaskModel,
};
use crate::preprocess::normalize_post_with;

/// A configured pipeline: providers built, cache opened.
pub struct Pipeline {
    config: PipelineConfig,
    transformer: Box<dyn EmbeddingProvider>,
    laser: Box<dyn EmbeddingProvider>,
    cache: Option<FeatureCache>,
}

/// Per-task training summary for the CLI.
#[derive(Debug, Clone)]
pub struct TaskSummary {
    pub task: Task,
    pub rows: usize,
    pub classes: usize,
    pub trees: usize,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let transformer = config.build_transformer()?;
        let laser = config.build_laser()?;
        let cache = match config.cache_path() {
            Some(path) => Some(FeatureCache::open(path)?),
            None => None,
        };
        Ok(Pipeline {
            config,
            transformer,
            laser,
            cache,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn model_path(&self) -> Result<&Path> {
        self.config
            .model
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("model.path is not configured".into()))
    }

    /// Normalize and embed posts, in order. Raw text never reaches the
    /// providers; they only accept [`crate::preprocess::PreprocessedText`].
    pub fn featurize(&self, posts: &[Post]) -> Result<Vec<FeatureVector>> {
        let rules = self.config.preprocess;
        let mut out = Vec::with_capacity(posts.len());
        for post in posts {
            let text = normalize_post_with(rules, post);
            let fv = match &self.cache {
                Some(cache) => {
                    embed_concat_cached(&text, self.transformer.as_ref(), self.laser.as_ref(), cache)?
                }
                None => embed_concat(&text, self.transformer.as_ref(), self.laser.as_ref())?,
            };
            out.push(fv);
        }
        Ok(out)
    }

    fn load_train_dataset(&self) -> Result<Dataset> {
        let path = self
            .config
            .data
            .train
            .as_ref()
            .ok_or_else(|| Error::Config("data.train is not configured".into()))?;
        load_dataset(path, self.config.language, Split::Train)
    }

    fn train_one(
        &self,
        task: Task,
        dataset: &Dataset,
        features: &[FeatureVector],
    ) -> Result<(TrainedTaskModel, TaskSummary)> {
        let slice = slice_for_task(dataset, task)?;
        let mut rows: Vec<&FeatureVector> = Vec::with_capacity(slice.len());
        let mut labels: Vec<String> = Vec::with_capacity(slice.len());
        // slice preserves dataset row order, so features align by id lookup
        let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, (post, _)) in dataset.rows().iter().enumerate() {
            by_id.insert(post.id.as_str(), i);
        }
        for (post, label) in slice {
            rows.push(&features[by_id[post.id.as_str()]]);
            labels.push(label.to_string());
        }
        let model = train_task_model(
            self.config.language,
            task,
            &rows,
            &labels,
            &self.config.train,
            self.config.seed,
        )?;
        let summary = TaskSummary {
            task,
            rows: rows.len(),
            classes: model.class_list().len(),
            trees: model.n_trees(),
        };
        Ok((model, summary))
    }

    /// Train the full cascade from the configured training file and save it
    /// to the configured model path (write-then-rename; a failed run leaves
    /// no partial file).
    pub fn train(&self) -> Result<(CascadeModel, Vec<TaskSummary>)> {
        let model_path = self.model_path()?.to_path_buf();
        let dataset = self.load_train_dataset()?;
        let posts: Vec<Post> = dataset.posts().cloned().collect();
        let features = self.featurize(&posts)?;

        let mut summaries = Vec::new();
        let (model_a, summary) = self.train_one(Task::A, &dataset, &features)?;
        summaries.push(summary);
        let (model_b, summary) = self.train_one(Task::B, &dataset, &features)?;
        summaries.push(summary);
        let model_c = if self.config.language.has_task_c() {
            let (model, summary) = self.train_one(Task::C, &dataset, &features)?;
            summaries.push(summary);
            Some(model)
        } else {
            None
        };

        let cascade = CascadeModel::new(model_a, model_b, model_c)?;
        save_model(&cascade, &model_path)?;
        Ok((cascade, summaries))
    }

    fn load_cascade(&self) -> Result<CascadeModel> {
        let cascade = crate::model::load_model(self.model_path()?)?.into_cascade()?;
        if cascade.language() != self.config.language {
            return Err(Error::Config(format!(
                "model file is for {}, config says {}",
                cascade.language(),
                self.config.language
            )));
        }
        Ok(cascade)
    }

    /// Predict a file of posts into the submission TSV, same order, one row
    /// per input row.
    pub fn predict_file(&self, input: &Path, output: &Path) -> Result<usize> {
        let cascade = self.load_cascade()?;
        let posts = load_posts(input, self.config.language)?;
        let features = self.featurize(&posts)?;
        let labels = predict_cascade(&cascade, &features)?;
        let rows: Vec<(String, LabelSet)> = posts
            .iter()
            .map(|p| p.id.clone())
            .zip(labels)
            .collect();
        let tsv = corpus::predictions_to_tsv(self.config.language, &rows);
        atomic_write(output, tsv.as_bytes())?;
        Ok(rows.len())
    }

    /// Score a prediction file against a gold file, aligned by text_id.
    pub fn evaluate_files(
        &self,
        gold_path: &Path,
        pred_path: &Path,
        report_dir: Option<&Path>,
    ) -> Result<(Vec<EvaluationReport>, String)> {
        let language = self.config.language;
        let gold = load_dataset(gold_path, language, Split::Test)?;
        let pred_rows = load_predictions(pred_path, language)?;

        let mut pred_by_id: BTreeMap<&str, &LabelSet> = BTreeMap::new();
        for (id, labels) in &pred_rows {
            pred_by_id.insert(id.as_str(), labels);
        }
        let mut gold_labels = Vec::with_capacity(gold.len());
        let mut pred_labels = Vec::with_capacity(gold.len());
        for (post, labels) in gold.rows() {
            let Some(p) = pred_by_id.remove(post.id.as_str()) else {
                return Err(Error::IdMismatch {
                    id: post.id.clone(),
                    detail: "gold id missing from predictions".into(),
                });
            };
            gold_labels.push(*labels);
            pred_labels.push(*p);
        }
        if let Some((extra, _)) = pred_by_id.into_iter().next() {
            return Err(Error::IdMismatch {
                id: extra.to_string(),
                detail: "prediction id missing from gold".into(),
            });
        }

        let reports = evaluate_cascade(&gold_labels, &pred_labels, language)?;
        let text = render_text(&reports);

        if let Some(dir) = report_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let meta = ReportMeta {
                model_checksums: self.model_checksums(),
            };
            for report in &reports {
                let name = format!("report_{}_task_{}.json", language.code(), report.task);
                let path = dir.join(name);
                atomic_write(&path, render_json(report, &meta).as_bytes())?;
            }
            atomic_write(&dir.join(format!("report_{}.txt", language.code())), text.as_bytes())?;
        }
        Ok((reports, text))
    }

    /// SHA-256 of the configured model file, when present.
    fn model_checksums(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Some(path) = self.config.model.path.as_ref() {
            if let Ok(bytes) = std::fs::read(path) {
                let digest = Sha256::digest(&bytes);
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert("cascade".to_string(), hex);
            }
        }
        out
    }

    /// Dataset statistics in the published table layout, one column per
    /// configured split.
    pub fn stats(&self) -> Result<String> {
        let language = self.config.language;
        let mut splits: Vec<(Split, PathBuf)> = Vec::new();
        if let Some(p) = &self.config.data.train {
            splits.push((Split::Train, p.clone()));
        }
        if let Some(p) = &self.config.data.test {
            splits.push((Split::Test, p.clone()));
        }
        if splits.is_empty() {
            return Err(Error::Config(
                "stats needs data.train or data.test configured".into(),
            ));
        }
        let mut stats = Vec::new();
        for (split, path) in &splits {
            stats.push(compute_stats(&load_dataset(path, language, *split)?));
        }

        let split_names: Vec<String> = splits.iter().map(|(s, _)| s.to_string()).collect();
        let mut out = format!("Language: {language}\n");
        for &task in language.tasks() {
            out.push_str(&format!("Sub-task {task} ({})\n", split_names.join("/")));
            let class_rows = stats[0].class_counts(task);
            for (idx, (label, _)) in class_rows.iter().enumerate() {
                let counts: Vec<String> = stats
                    .iter()
                    .map(|s| s.class_counts(task)[idx].1.to_string())
                    .collect();
                out.push_str(&format!("{label} {}\n", counts.join(" ")));
            }
            let totals: Vec<String> = stats.iter().map(|s| s.total(task).to_string()).collect();
            out.push_str(&format!("Total {}\n", totals.join(" ")));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Write a whole file via a sibling temp file and rename, so readers never
/// observe a partial artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(path, e))?;
        }
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
