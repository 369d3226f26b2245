//! Shared-task corpus handling: label schema, TSV ingestion, statistics and
//! per-task training slices.
//!
//! The on-disk format is tab-separated UTF-8 with a header row
//! `text_id<TAB>text<TAB>task_1<TAB>task_2<TAB>task_3`. German files may omit
//! the `task_3` column (German has no sub-task C). Unlabeled files carry only
//! `text_id<TAB>text`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// The three corpus languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    De,
    Hi,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::De => "de",
            Language::Hi => "hi",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::En => "English",
            Language::De => "German",
            Language::Hi => "Hindi",
        }
    }

    /// German has no sub-task C.
    pub fn has_task_c(self) -> bool {
        !matches!(self, Language::De)
    }

    pub fn from_code(code: &str) -> Result<Self> {
        match code.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::En),
            "de" | "german" => Ok(Language::De),
            "hi" | "hindi" => Ok(Language::Hi),
            other => Err(Error::Config(format!(
                "unknown language {other:?} (expected en, de or hi)"
            ))),
        }
    }

    /// Tasks applicable to this language, in order.
    pub fn tasks(self) -> &'static [Task] {
        if self.has_task_c() {
            &[Task::A, Task::B, Task::C]
        } else {
            &[Task::A, Task::B]
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// The three classification sub-tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Task {
    A,
    B,
    C,
}

impl Task {
    /// Classes a model for this task is trained over.
    pub fn train_classes(self) -> &'static [&'static str] {
        match self {
            Task::A => &["HOF", "NOT"],
            Task::B => &["HATE", "OFFN", "PRFN"],
            Task::C => &["TIN", "UNT"],
        }
    }

    /// Classes this task is evaluated over. Sub-tasks B and C gain the
    /// `NONE` placeholder carried by non-HOF rows.
    pub fn eval_classes(self) -> &'static [&'static str] {
        match self {
            Task::A => &["HOF", "NOT"],
            Task::B => &["HATE", "OFFN", "PRFN", "NONE"],
            Task::C => &["TIN", "UNT", "NONE"],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::A => "A",
            Task::B => "B",
            Task::C => "C",
        })
    }
}

/// Sub-task A: hateful/offensive or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskALabel {
    Hof,
    Not,
}

/// Sub-task B: fine-grained abuse type, `None` for non-HOF rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskBLabel {
    Hate,
    Offn,
    Prfn,
    None,
}

/// Sub-task C: targeted or untargeted, `None` for non-HOF rows and German.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskCLabel {
    Tin,
    Unt,
    None,
}

impl TaskALabel {
    pub fn token(self) -> &'static str {
        match self {
            TaskALabel::Hof => "HOF",
            TaskALabel::Not => "NOT",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token {
            "HOF" => Some(TaskALabel::Hof),
            "NOT" => Some(TaskALabel::Not),
            _ => None,
        }
    }
}

impl TaskBLabel {
    pub fn token(self) -> &'static str {
        match self {
            TaskBLabel::Hate => "HATE",
            TaskBLabel::Offn => "OFFN",
            TaskBLabel::Prfn => "PRFN",
            TaskBLabel::None => "NONE",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token {
            "HATE" => Some(TaskBLabel::Hate),
            "OFFN" => Some(TaskBLabel::Offn),
            "PRFN" => Some(TaskBLabel::Prfn),
            "NONE" => Some(TaskBLabel::None),
            _ => None,
        }
    }
}

impl TaskCLabel {
    pub fn token(self) -> &'static str {
        match self {
            TaskCLabel::Tin => "TIN",
            TaskCLabel::Unt => "UNT",
            TaskCLabel::None => "NONE",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token {
            "TIN" => Some(TaskCLabel::Tin),
            "UNT" => Some(TaskCLabel::Unt),
            "NONE" => Some(TaskCLabel::None),
            _ => None,
        }
    }
}

/// Gold or predicted labels for one post across all three sub-tasks.
///
/// Constructed only through [`LabelSet::for_language`], which enforces the
/// hierarchy: `NOT` forces `NONE` downstream, `HOF` forbids it, and German
/// rows never carry a sub-task C label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelSet {
    task_a: TaskALabel,
    task_b: TaskBLabel,
    task_c: TaskCLabel,
}

impl LabelSet {
    pub fn for_language(
        language: Language,
        task_a: TaskALabel,
        task_b: TaskBLabel,
        task_c: TaskCLabel,
    ) -> Result<Self> {
        let fail = |why: String| Err(Error::LabelConsistency(why));
        match task_a {
            TaskALabel::Not => {
                if task_b != TaskBLabel::None {
                    return fail(format!("NOT row carries task_2 label {}", task_b.token()));
                }
                if task_c != TaskCLabel::None {
                    return fail(format!("NOT row carries task_3 label {}", task_c.token()));
                }
            }
            TaskALabel::Hof => {
                if task_b == TaskBLabel::None {
                    return fail("HOF row has task_2 = NONE".to_string());
                }
                if language.has_task_c() {
                    if task_c == TaskCLabel::None {
                        return fail("HOF row has task_3 = NONE".to_string());
                    }
                } else if task_c != TaskCLabel::None {
                    return fail(format!(
                        "German row carries task_3 label {}",
                        task_c.token()
                    ));
                }
            }
        }
        Ok(LabelSet {
            task_a,
            task_b,
            task_c,
        })
    }

    pub fn task_a(&self) -> TaskALabel {
        self.task_a
    }

    pub fn task_b(&self) -> TaskBLabel {
        self.task_b
    }

    pub fn task_c(&self) -> TaskCLabel {
        self.task_c
    }

    /// Label token for the given sub-task, as used in evaluation
    /// (`NONE` for B/C on non-HOF rows).
    pub fn token_for(&self, task: Task) -> &'static str {
        match task {
            Task::A => self.task_a.token(),
            Task::B => self.task_b.token(),
            Task::C => self.task_c.token(),
        }
    }
}

/// One social-media post, text kept byte-for-byte as ingested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub language: Language,
}

/// An ordered, immutable collection of labeled posts in one language.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    language: Language,
    split: Split,
    rows: Vec<(Post, LabelSet)>,
    /// Whether the source file carried a `task_3` column. Always true for
    /// English and Hindi; German files may omit it.
    task_c_column: bool,
}

impl Dataset {
    pub fn new(language: Language, split: Split, rows: Vec<(Post, LabelSet)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (post, _) in &rows {
            if post.language != language {
                return Err(Error::Data(format!(
                    "post {:?} has language {}, dataset is {}",
                    post.id, post.language, language
                )));
            }
            if post.id.is_empty() {
                return Err(Error::Data("post with empty id".to_string()));
            }
            if !seen.insert(post.id.as_str()) {
                return Err(Error::Data(format!("duplicate id {:?}", post.id)));
            }
        }
        Ok(Dataset {
            language,
            split,
            rows,
            task_c_column: language.has_task_c(),
        })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn rows(&self) -> &[(Post, LabelSet)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn posts(&self) -> impl Iterator<Item = &Post> {
        self.rows.iter().map(|(p, _)| p)
    }

    pub fn labels(&self) -> impl Iterator<Item = &LabelSet> {
        self.rows.iter().map(|(_, l)| l)
    }
}

/// Per-class counts for each sub-task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub hof: usize,
    pub not: usize,
    pub hate: usize,
    pub offn: usize,
    pub prfn: usize,
    pub tin: usize,
    pub unt: usize,
}

impl DatasetStats {
    pub fn total_a(&self) -> usize {
        self.hof + self.not
    }

    /// Equals the HOF count: every HOF row carries exactly one B label.
    pub fn total_b(&self) -> usize {
        self.hate + self.offn + self.prfn
    }

    pub fn total_c(&self) -> usize {
        self.tin + self.unt
    }

    /// `(label, count)` rows for one sub-task, in table order.
    pub fn class_counts(&self, task: Task) -> Vec<(&'static str, usize)> {
        match task {
            Task::A => vec![("HOF", self.hof), ("NOT", self.not)],
            Task::B => vec![("HATE", self.hate), ("OFFN", self.offn), ("PRFN", self.prfn)],
            Task::C => vec![("TIN", self.tin), ("UNT", self.unt)],
        }
    }

    pub fn total(&self, task: Task) -> usize {
        match task {
            Task::A => self.total_a(),
            Task::B => self.total_b(),
            Task::C => self.total_c(),
        }
    }
}

/// Count every class per sub-task.
pub fn compute_stats(dataset: &Dataset) -> DatasetStats {
    let mut stats = DatasetStats::default();
    for labels in dataset.labels() {
        match labels.task_a() {
            TaskALabel::Hof => stats.hof += 1,
            TaskALabel::Not => stats.not += 1,
        }
        match labels.task_b() {
            TaskBLabel::Hate => stats.hate += 1,
            TaskBLabel::Offn => stats.offn += 1,
            TaskBLabel::Prfn => stats.prfn += 1,
            TaskBLabel::None => {}
        }
        match labels.task_c() {
            TaskCLabel::Tin => stats.tin += 1,
            TaskCLabel::Unt => stats.unt += 1,
            TaskCLabel::None => {}
        }
    }
    stats
}

/// Training slice for one sub-task: task A keeps every row, tasks B and C
/// keep only gold-HOF rows.
pub fn slice_for_task(dataset: &Dataset, task: Task) -> Result<Vec<(&Post, &'static str)>> {
    if task == Task::C && !dataset.language().has_task_c() {
        return Err(Error::TaskCForGerman);
    }
    let mut out = Vec::new();
    for (post, labels) in dataset.rows() {
        match task {
            Task::A => out.push((post, labels.task_a().token())),
            Task::B => {
                if labels.task_a() == TaskALabel::Hof {
                    out.push((post, labels.task_b().token()));
                }
            }
            Task::C => {
                if labels.task_a() == TaskALabel::Hof {
                    out.push((post, labels.task_c().token()));
                }
            }
        }
    }
    Ok(out)
}

const LABELED_HEADER: &str = "text_id\ttext\ttask_1\ttask_2\ttask_3";
const LABELED_HEADER_NO_C: &str = "text_id\ttext\ttask_1\ttask_2";
const UNLABELED_HEADER: &str = "text_id\ttext";

fn read_lines(path: &Path) -> Result<Vec<String>> {
    if !path.exists() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = String::from_utf8(raw)
        .map_err(|_| Error::Data(format!("{}: file is not valid UTF-8", path.display())))?;
    // Strip one trailing \r per line so CRLF files parse; \r never enters a field.
    Ok(content
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect())
}

fn check_field_text(path: &Path, line: usize, text: &str) -> Result<()> {
    if text.contains('\r') {
        return Err(Error::Data(format!(
            "{}:{line}: text field contains a raw carriage return",
            path.display()
        )));
    }
    Ok(())
}

/// Load a labeled dataset. Rejects malformed rows, unknown label tokens,
/// duplicate ids and label combinations that violate the task hierarchy.
pub fn load_dataset(path: impl AsRef<Path>, language: Language, split: Split) -> Result<Dataset> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut lines_iter = lines.iter();
    let header = lines_iter.next().map(String::as_str).unwrap_or("");

    let task_c_column = match (language.has_task_c(), header) {
        (true, LABELED_HEADER) => true,
        (false, LABELED_HEADER) => true,
        (false, LABELED_HEADER_NO_C) => false,
        _ => {
            let expected = if language.has_task_c() {
                LABELED_HEADER.to_string()
            } else {
                format!("{LABELED_HEADER_NO_C} or {LABELED_HEADER}")
            };
            return Err(Error::BadHeader {
                path: path.to_path_buf(),
                found: header.to_string(),
                expected,
            });
        }
    };
    let columns = if task_c_column { 5 } else { 4 };

    let mut rows = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (idx, line) in lines_iter.enumerate() {
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: lineno,
                expected: columns.to_string(),
                found: fields.len(),
            });
        }
        let id = fields[0];
        let text = fields[1];
        if id.is_empty() {
            return Err(Error::Data(format!(
                "{}:{lineno}: empty text_id",
                path.display()
            )));
        }
        check_field_text(path, lineno, text)?;
        if !ids.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: lineno,
                id: id.to_string(),
            });
        }

        let unknown = |column: &'static str, token: &str| Error::UnknownLabel {
            path: path.to_path_buf(),
            line: lineno,
            column,
            token: token.to_string(),
        };
        let task_a =
            TaskALabel::from_token(fields[2]).ok_or_else(|| unknown("task_1", fields[2]))?;
        let task_b =
            TaskBLabel::from_token(fields[3]).ok_or_else(|| unknown("task_2", fields[3]))?;
        let task_c = if task_c_column {
            TaskCLabel::from_token(fields[4]).ok_or_else(|| unknown("task_3", fields[4]))?
        } else {
            TaskCLabel::None
        };

        let labels = LabelSet::for_language(language, task_a, task_b, task_c).map_err(|e| {
            Error::LabelConsistency(format!("{}:{lineno}: {e}", path.display()))
        })?;
        rows.push((
            Post {
                id: id.to_string(),
                text: text.to_string(),
                language,
            },
            labels,
        ));
    }

    let mut dataset = Dataset::new(language, split, rows)?;
    dataset.task_c_column = task_c_column;
    Ok(dataset)
}

/// Load posts for prediction. Accepts unlabeled 2-column files as well as
/// labeled files (label columns are ignored).
pub fn load_posts(path: impl AsRef<Path>, language: Language) -> Result<Vec<Post>> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut lines_iter = lines.iter();
    let header = lines_iter.next().map(String::as_str).unwrap_or("");
    let columns = match header {
        UNLABELED_HEADER => 2,
        LABELED_HEADER_NO_C => 4,
        LABELED_HEADER => 5,
        _ => {
            return Err(Error::BadHeader {
                path: path.to_path_buf(),
                found: header.to_string(),
                expected: format!("{UNLABELED_HEADER} (optionally with label columns)"),
            })
        }
    };

    let mut posts = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (idx, line) in lines_iter.enumerate() {
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: lineno,
                expected: columns.to_string(),
                found: fields.len(),
            });
        }
        if fields[0].is_empty() {
            return Err(Error::Data(format!(
                "{}:{lineno}: empty text_id",
                path.display()
            )));
        }
        check_field_text(path, lineno, fields[1])?;
        if !ids.insert(fields[0].to_string()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: lineno,
                id: fields[0].to_string(),
            });
        }
        posts.push(Post {
            id: fields[0].to_string(),
            text: fields[1].to_string(),
            language,
        });
    }
    Ok(posts)
}

/// Serialize a dataset back to its canonical TSV form. Inverse of
/// [`load_dataset`] on well-formed files.
pub fn dataset_to_tsv(dataset: &Dataset) -> Result<String> {
    let mut out = String::new();
    out.push_str(if dataset.task_c_column {
        LABELED_HEADER
    } else {
        LABELED_HEADER_NO_C
    });
    out.push('\n');
    for (post, labels) in dataset.rows() {
        if post.text.contains('\t') || post.text.contains('\n') || post.text.contains('\r') {
            return Err(Error::Data(format!(
                "post {:?}: text contains a raw tab or newline",
                post.id
            )));
        }
        out.push_str(&post.id);
        out.push('\t');
        out.push_str(&post.text);
        out.push('\t');
        out.push_str(labels.task_a().token());
        out.push('\t');
        out.push_str(labels.task_b().token());
        if dataset.task_c_column {
            out.push('\t');
            out.push_str(labels.task_c().token());
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_tsv(dataset)?).map_err(|e| Error::io(path, e))
}

const PRED_HEADER: &str = "text_id\ttask_1\ttask_2\ttask_3";
const PRED_HEADER_NO_C: &str = "text_id\ttask_1\ttask_2";

/// Serialize cascade predictions to the submission TSV format
/// (`task_3` column omitted for German).
pub fn predictions_to_tsv(language: Language, rows: &[(String, LabelSet)]) -> String {
    let with_c = language.has_task_c();
    let mut out = String::new();
    out.push_str(if with_c { PRED_HEADER } else { PRED_HEADER_NO_C });
    out.push('\n');
    for (id, labels) in rows {
        out.push_str(id);
        out.push('\t');
        out.push_str(labels.task_a().token());
        out.push('\t');
        out.push_str(labels.task_b().token());
        if with_c {
            out.push('\t');
            out.push_str(labels.task_c().token());
        }
        out.push('\n');
    }
    out
}

/// Load a prediction TSV produced by [`predictions_to_tsv`].
pub fn load_predictions(path: impl AsRef<Path>, language: Language) -> Result<Vec<(String, LabelSet)>> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut lines_iter = lines.iter();
    let header = lines_iter.next().map(String::as_str).unwrap_or("");
    let expected_header = if language.has_task_c() {
        PRED_HEADER
    } else {
        PRED_HEADER_NO_C
    };
    if header != expected_header {
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            found: header.to_string(),
            expected: expected_header.to_string(),
        });
    }
    let columns = if language.has_task_c() { 4 } else { 3 };

    let mut rows = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (idx, line) in lines_iter.enumerate() {
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: lineno,
                expected: columns.to_string(),
                found: fields.len(),
            });
        }
        if !ids.insert(fields[0].to_string()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: lineno,
                id: fields[0].to_string(),
            });
        }
        let unknown = |column: &'static str, token: &str| Error::UnknownLabel {
            path: path.to_path_buf(),
            line: lineno,
            column,
            token: token.to_string(),
        };
        let task_a =
            TaskALabel::from_token(fields[1]).ok_or_else(|| unknown("task_1", fields[1]))?;
        let task_b =
            TaskBLabel::from_token(fields[2]).ok_or_else(|| unknown("task_2", fields[2]))?;
        let task_c = if language.has_task_c() {
            TaskCLabel::from_token(fields[3]).ok_or_else(|| unknown("task_3", fields[3]))?
        } else {
            TaskCLabel::None
        };
        let labels = LabelSet::for_language(language, task_a, task_b, task_c)
            .map_err(|e| Error::LabelConsistency(format!("{}:{lineno}: {e}", path.display())))?;
        rows.push((fields[0].to_string(), labels));
    }
    Ok(rows)
}
