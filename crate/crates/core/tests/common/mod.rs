//! Shared fixtures for the integration tests: synthetic separable datasets
//! built from finite text pools, config writers, and a handle on the CLI
//! binary.
//!
//! Not every test target uses every helper.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use offlang::config::{CacheConfig, DataPaths, ModelConfig, PipelineConfig};
use offlang::corpus::Language;

/// The built `offlang` binary.
pub fn offlang_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_offlang"))
}

/// One pool entry: a text with its fixed labels.
#[derive(Clone)]
pub struct PoolEntry {
    pub text: String,
    pub task_1: &'static str,
    pub task_2: &'static str,
    pub task_3: &'static str,
}

/// A finite pool of label-consistent texts. Every generated row samples
/// from the pool, so a "held-out" split contains only texts the training
/// split has seen — which is what makes hash-embedder runs separable: each
/// distinct text is a distinct point in feature space with a fixed label.
///
/// Texts differ in letters only; digits would collapse under the `number`
/// normalization rule.
pub fn text_pool(language: Language) -> Vec<PoolEntry> {
    let suffix = |k: usize| {
        let letters = ["alpha", "bravo", "carol", "delta", "echo", "fanta",
                       "gamma", "hotel", "india", "julia", "kilos", "lemur"];
        letters[k % letters.len()].to_string()
    };
    let mut pool = Vec::new();
    for k in 0..12 {
        pool.push(PoolEntry {
            text: format!("calm ordinary note about gardens {}", suffix(k)),
            task_1: "NOT",
            task_2: "NONE",
            task_3: "NONE",
        });
    }
    let b_classes = ["HATE", "OFFN", "PRFN"];
    if language.has_task_c() {
        // 6 combos x 2 texts
        let c_classes = ["TIN", "UNT"];
        for (k, slot) in (0..12).map(|k| (k, k % 6)).collect::<Vec<_>>() {
            pool.push(PoolEntry {
                text: format!("angry rant over broken promises {} {}", suffix(k), suffix(slot)),
                task_1: "HOF",
                task_2: b_classes[slot % 3],
                task_3: c_classes[slot / 3],
            });
        }
    } else {
        // 3 combos x 4 texts
        for k in 0..12 {
            pool.push(PoolEntry {
                text: format!("wuetender beitrag ueber alles {} {}", suffix(k), suffix(k % 3)),
                task_1: "HOF",
                task_2: b_classes[k % 3],
                task_3: "NONE",
            });
        }
    }
    pool
}

/// Write `n_rows` pool samples as a labeled dataset TSV. `phase` shifts the
/// sampling pattern so train and test files differ row-wise while drawing
/// from the same pool.
pub fn write_pool_tsv(path: &Path, language: Language, n_rows: usize, phase: usize) {
    let pool = text_pool(language);
    let with_c = language.has_task_c();
    let mut out = String::from(if with_c {
        "text_id\ttext\ttask_1\ttask_2\ttask_3\n"
    } else {
        "text_id\ttext\ttask_1\ttask_2\n"
    });
    for i in 0..n_rows {
        let entry = &pool[(i * 7 + phase) % pool.len()];
        out.push_str(&format!(
            "{}_{phase}_{i:04}\t{}\t{}\t{}",
            language.code(),
            entry.text,
            entry.task_1,
            entry.task_2
        ));
        if with_c {
            out.push('\t');
            out.push_str(entry.task_3);
        }
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

/// Write an unlabeled 2-column TSV with the given texts.
pub fn write_unlabeled_tsv(path: &Path, rows: &[(&str, &str)]) {
    let mut out = String::from("text_id\ttext\n");
    for (id, text) in rows {
        out.push_str(&format!("{id}\t{text}\n"));
    }
    std::fs::write(path, out).unwrap();
}

/// A ready-to-run config in `dir`, pointing every artifact into `dir`.
pub fn pool_config(dir: &Path, language: Language) -> (PathBuf, PipelineConfig) {
    let mut config = PipelineConfig::new(language);
    config.data = DataPaths {
        train: Some(dir.join("train.tsv")),
        test: Some(dir.join("test.tsv")),
    };
    config.cache = CacheConfig {
        path: Some(dir.join("features.embc")),
    };
    config.model = ModelConfig {
        path: Some(dir.join("model.hmdl")),
    };
    let path = dir.join("config.toml");
    write_config(&path, &config);
    (path, config)
}

pub fn write_config(path: &Path, config: &PipelineConfig) {
    std::fs::write(path, toml::to_string(config).unwrap()).unwrap();
}
