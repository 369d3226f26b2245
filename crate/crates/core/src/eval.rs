//! Per-class F1, macro F1, confusion matrices and report rendering.
//!
//! All ratios use the shared-task convention that an empty denominator
//! yields 0 (a class absent from gold and predictions scores 0, it is not
//! dropped from the macro average). Text tables round scores to two
//! decimals on the decimal expansion with ties to even; machine-readable
//! reports keep full precision.

use std::collections::BTreeMap;

use crate::corpus::{LabelSet, Language, Task};
use crate::error::{Error, Result};

/// Square count matrix, rows = gold, columns = predicted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_list: Vec<String>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn class_list(&self) -> &[String] {
        &self.class_list
    }

    pub fn count(&self, gold: &str, pred: &str) -> usize {
        let g = self.index_of(gold);
        let p = self.index_of(pred);
        self.counts[g][p]
    }

    fn index_of(&self, label: &str) -> usize {
        self.class_list
            .iter()
            .position(|c| c == label)
            .unwrap_or_else(|| panic!("label {label:?} not in class list"))
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Gold-row sums per class.
    pub fn support(&self) -> BTreeMap<String, usize> {
        self.class_list
            .iter()
            .enumerate()
            .map(|(g, c)| (c.clone(), self.counts[g].iter().sum()))
            .collect()
    }
}

/// Count gold/predicted label pairs over a fixed class list.
pub fn confusion<S: AsRef<str>>(
    gold: &[S],
    pred: &[S],
    class_list: &[&str],
) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "gold has {} labels, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let k = class_list.len();
    let index = |label: &str| -> Result<usize> {
        class_list
            .iter()
            .position(|c| *c == label)
            .ok_or_else(|| Error::Data(format!("label {label:?} not in class list")))
    };
    let mut counts = vec![vec![0usize; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        counts[index(g.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        class_list: class_list.iter().map(|s| s.to_string()).collect(),
        counts,
    })
}

/// F1 per class: precision = TP/(TP+FP), recall = TP/(TP+FN),
/// F1 = 2PR/(P+R), every 0/0 collapsing to 0.
pub fn per_class_f1(cm: &ConfusionMatrix) -> BTreeMap<String, f64> {
    let k = cm.class_list.len();
    let mut out = BTreeMap::new();
    for (c, label) in cm.class_list.iter().enumerate() {
        let tp = cm.counts[c][c];
        let fp: usize = (0..k).filter(|&g| g != c).map(|g| cm.counts[g][c]).sum();
        let fn_: usize = (0..k).filter(|&p| p != c).map(|p| cm.counts[c][p]).sum();
        let precision = ratio_or_zero(tp, tp + fp);
        let recall = ratio_or_zero(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        out.insert(label.clone(), f1);
    }
    out
}

fn ratio_or_zero(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Unweighted mean of the per-class scores over `class_set`, summed in
/// `class_set` order. Support plays no role.
pub fn macro_f1(per_class: &BTreeMap<String, f64>, class_set: &[&str]) -> Result<f64> {
    if class_set.is_empty() {
        return Err(Error::Data("macro F1 over an empty class set".into()));
    }
    let mut sum = 0.0;
    for class in class_set {
        let f1 = per_class.get(*class).ok_or_else(|| {
            Error::Data(format!("macro F1: class {class:?} has no per-class score"))
        })?;
        sum += f1;
    }
    Ok(sum / class_set.len() as f64)
}

/// Convenience: macro F1 straight from label lists.
pub fn macro_f1_of_labels<S: AsRef<str>>(gold: &[S], pred: &[S], classes: &[&str]) -> f64 {
    let cm = confusion(gold, pred, classes).expect("labels within class list");
    macro_f1(&per_class_f1(&cm), classes).expect("non-empty class set")
}

/// Scores for one (language, task) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub language: Language,
    pub task: Task,
    pub per_class_f1: BTreeMap<String, f64>,
    pub macro_f1: f64,
    pub support: BTreeMap<String, usize>,
}

/// Evaluate gold against predicted label sets, one report per applicable
/// task, all over the full row set: sub-task B adds `NONE` for non-HOF rows
/// (4 classes), sub-task C likewise (3 classes), German skips task C.
pub fn evaluate_cascade(
    gold: &[LabelSet],
    pred: &[LabelSet],
    language: Language,
) -> Result<Vec<EvaluationReport>> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "gold has {} rows, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut reports = Vec::new();
    for &task in language.tasks() {
        let classes = task.eval_classes();
        let gold_tokens: Vec<&str> = gold.iter().map(|l| l.token_for(task)).collect();
        let pred_tokens: Vec<&str> = pred.iter().map(|l| l.token_for(task)).collect();
        let cm = confusion(&gold_tokens, &pred_tokens, classes)?;
        let per_class = per_class_f1(&cm);
        let macro_score = macro_f1(&per_class, classes)?;
        reports.push(EvaluationReport {
            language,
            task,
            per_class_f1: per_class,
            macro_f1: macro_score,
            support: cm.support(),
        });
    }
    Ok(reports)
}

/// Two-decimal score for the text tables: the value is first snapped to its
/// 9-place decimal expansion (absorbing binary representation noise), then
/// rounded with ties to even — the rule that reproduces every published
/// total this pipeline is checked against.
pub fn format_score(x: f64) -> String {
    debug_assert!((0.0..=1.0 + 1e-9).contains(&x), "scores live in [0, 1]");
    let snapped = format!("{x:.9}");
    let (int_part, frac_part) = snapped.split_once('.').expect("fixed-point format");
    let int_value: i64 = int_part.parse().expect("integer part");
    let frac_value: i64 = frac_part.parse().expect("fraction digits");
    let value_e9 = int_value * 1_000_000_000 + frac_value;
    let mut cents = value_e9 / 10_000_000;
    let rem = value_e9 % 10_000_000;
    match rem.cmp(&5_000_000) {
        std::cmp::Ordering::Greater => cents += 1,
        std::cmp::Ordering::Equal => {
            if cents % 2 != 0 {
                cents += 1;
            }
        }
        std::cmp::Ordering::Less => {}
    }
    format!("{}.{:02}", cents / 100, cents % 100)
}

/// Render reports as text tables: one block per report, per-class rows then
/// a Total row, scores at two decimals.
pub fn render_text(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for (i, report) in reports.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!(
            "Language: {}  Sub-task {}\n",
            report.language, report.task
        ));
        for class in report.task.eval_classes() {
            let f1 = report.per_class_f1.get(*class).copied().unwrap_or(0.0);
            out.push_str(&format!("{class} {}\n", format_score(f1)));
        }
        out.push_str(&format!("Total {}\n", format_score(report.macro_f1)));
    }
    out
}

/// Extra fields carried by the machine-readable report.
#[derive(Debug, Clone, Default)]
pub struct ReportMeta {
    pub model_checksums: BTreeMap<String, String>,
}

#[derive(serde::Serialize)]
struct JsonReport<'a> {
    language: Language,
    task: Task,
    per_class_f1: &'a BTreeMap<String, f64>,
    macro_f1: f64,
    support: &'a BTreeMap<String, usize>,
    pipeline_version: &'static str,
    model_checksums: &'a BTreeMap<String, String>,
}

/// Render one report as a canonical JSON document at full precision.
pub fn render_json(report: &EvaluationReport, meta: &ReportMeta) -> String {
    serde_json::to_string_pretty(&JsonReport {
        language: report.language,
        task: report.task,
        per_class_f1: &report.per_class_f1,
        macro_f1: report.macro_f1,
        support: &report.support,
        pipeline_version: env!("CARGO_PKG_VERSION"),
        model_checksums: &meta.model_checksums,
    })
    .expect("report serializes")
}
