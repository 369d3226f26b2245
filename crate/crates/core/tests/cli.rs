//! End-to-end tests of the `offlang` binary: commands, exit codes, file
//! formats.

mod common;

use common::{offlang_cmd, pool_config, write_config, write_pool_tsv, write_unlabeled_tsv};
use offlang::config::PipelineConfig;
use offlang::corpus::Language;

fn run(cmd: &mut std::process::Command) -> (i32, String, String) {
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn stats_on_missing_file_names_the_path_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(Language::En);
    config.data.train = Some(dir.path().join("nowhere.tsv"));
    let config_path = dir.path().join("c.toml");
    write_config(&config_path, &config);

    let (code, _, stderr) = run(offlang_cmd().args(["stats", "--config"]).arg(&config_path));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("nowhere.tsv"), "{stderr}");
}

#[test]
fn stats_on_header_only_file_prints_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("empty.tsv"),
        "text_id\ttext\ttask_1\ttask_2\ttask_3\n",
    )
    .unwrap();
    let mut config = PipelineConfig::new(Language::En);
    config.data.train = Some(dir.path().join("empty.tsv"));
    let config_path = dir.path().join("c.toml");
    write_config(&config_path, &config);

    let (code, stdout, stderr) = run(offlang_cmd().args(["stats", "--config"]).arg(&config_path));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("HOF 0"), "{stdout}");
    assert!(stdout.contains("Total 0"), "{stdout}");
}

#[test]
fn german_stats_have_no_task_c_section() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::De, 48, 0);
    write_pool_tsv(&dir.path().join("test.tsv"), Language::De, 24, 1);
    let (config_path, _) = pool_config(dir.path(), Language::De);
    let (code, stdout, _) = run(offlang_cmd().args(["stats", "--config"]).arg(&config_path));
    assert_eq!(code, 0);
    assert!(stdout.contains("Sub-task B"));
    assert!(!stdout.contains("Sub-task C"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, _, _) = run(offlang_cmd().arg("--definitely-not-a-flag"));
    assert_eq!(code, 1);
}

#[test]
fn help_exits_zero() {
    let (code, stdout, _) = run(offlang_cmd().arg("--help"));
    assert_eq!(code, 0);
    assert!(stdout.contains("stats"));
    assert!(stdout.contains("evaluate"));
}

#[test]
fn misconfigured_provider_dims_fail_fast_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::En, 48, 0);
    let (_, mut config) = pool_config(dir.path(), Language::En);
    config.providers.laser.output_dim = 512;
    let config_path = dir.path().join("bad.toml");
    write_config(&config_path, &config);

    let (code, _, stderr) = run(offlang_cmd().args(["train", "--config"]).arg(&config_path));
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("1024"), "{stderr}");
    assert!(
        !dir.path().join("model.hmdl").exists(),
        "no partial model file may appear"
    );
}

#[test]
fn train_predict_evaluate_round_trip_english() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::En, 240, 0);
    write_pool_tsv(&dir.path().join("test.tsv"), Language::En, 96, 3);
    let (config_path, config) = pool_config(dir.path(), Language::En);

    let (code, stdout, stderr) = run(offlang_cmd().args(["train", "--config"]).arg(&config_path));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("task A"), "{stdout}");
    assert!(stdout.contains("task C"), "{stdout}");
    assert!(config.model.path.as_ref().unwrap().exists());

    let pred_path = dir.path().join("pred.tsv");
    let (code, _, stderr) = run(offlang_cmd()
        .args(["predict", "--config"])
        .arg(&config_path)
        .arg(dir.path().join("test.tsv"))
        .arg(&pred_path));
    assert_eq!(code, 0, "{stderr}");

    let pred = std::fs::read_to_string(&pred_path).unwrap();
    let lines: Vec<&str> = pred.lines().collect();
    assert_eq!(lines[0], "text_id\ttask_1\ttask_2\ttask_3");
    assert_eq!(lines.len(), 97); // header + 96 rows

    let report_dir = dir.path().join("reports");
    let (code, stdout, stderr) = run(offlang_cmd()
        .args(["evaluate", "--config"])
        .arg(&config_path)
        .arg(dir.path().join("test.tsv"))
        .arg(&pred_path)
        .arg(&report_dir));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("Sub-task A"), "{stdout}");
    assert!(report_dir.join("report_en_task_A.json").exists());
    assert!(report_dir.join("report_en_task_B.json").exists());
    assert!(report_dir.join("report_en_task_C.json").exists());
    assert!(report_dir.join("report_en.txt").exists());

    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(report_dir.join("report_en_task_A.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["language"], "en");
    assert!(json["macro_f1"].as_f64().unwrap() > 0.9);
    assert!(json["model_checksums"]["cascade"].is_string());
}

#[test]
fn predict_keeps_unlabeled_input_order_and_cascade_shape() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::En, 240, 0);
    let (config_path, _) = pool_config(dir.path(), Language::En);
    let (code, _, stderr) = run(offlang_cmd().args(["train", "--config"]).arg(&config_path));
    assert_eq!(code, 0, "{stderr}");

    // one clearly NOT pool text, one clearly HOF pool text, one unseen
    let input = dir.path().join("input.tsv");
    write_unlabeled_tsv(
        &input,
        &[
            ("u_b", "calm ordinary note about gardens alpha"),
            ("u_a", "angry rant over broken promises alpha alpha"),
            ("u_c", "completely unseen text"),
        ],
    );
    let out_path = dir.path().join("out.tsv");
    let (code, _, stderr) = run(offlang_cmd()
        .args(["predict", "--config"])
        .arg(&config_path)
        .arg(&input)
        .arg(&out_path));
    assert_eq!(code, 0, "{stderr}");

    let out = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    // order preserved
    assert!(lines[1].starts_with("u_b\t"));
    assert!(lines[2].starts_with("u_a\t"));
    assert!(lines[3].starts_with("u_c\t"));
    // the NOT row carries NONE downstream
    assert_eq!(lines[1], "u_b\tNOT\tNONE\tNONE");
    // the HOF pool row got real B/C labels
    let fields: Vec<&str> = lines[2].split('\t').collect();
    assert_eq!(fields[1], "HOF");
    assert_ne!(fields[2], "NONE");
    assert_ne!(fields[3], "NONE");
}

#[test]
fn german_predictions_have_exactly_three_columns() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::De, 240, 0);
    write_pool_tsv(&dir.path().join("test.tsv"), Language::De, 48, 5);
    let (config_path, _) = pool_config(dir.path(), Language::De);
    let (code, _, stderr) = run(offlang_cmd().args(["train", "--config"]).arg(&config_path));
    assert_eq!(code, 0, "{stderr}");

    let pred_path = dir.path().join("pred.tsv");
    let (code, _, stderr) = run(offlang_cmd()
        .args(["predict", "--config"])
        .arg(&config_path)
        .arg(dir.path().join("test.tsv"))
        .arg(&pred_path));
    assert_eq!(code, 0, "{stderr}");
    let pred = std::fs::read_to_string(&pred_path).unwrap();
    for line in pred.lines() {
        assert_eq!(line.split('\t').count(), 3, "{line}");
    }
}

#[test]
fn evaluating_gold_against_itself_prints_perfect_totals() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::En, 96, 0);
    let (config_path, _) = pool_config(dir.path(), Language::En);

    // hand-build a prediction file that mirrors the gold labels
    let gold = dir.path().join("train.tsv");
    let mut pred = String::from("text_id\ttask_1\ttask_2\ttask_3\n");
    for line in std::fs::read_to_string(&gold).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        pred.push_str(&format!("{}\t{}\t{}\t{}\n", f[0], f[2], f[3], f[4]));
    }
    let pred_path = dir.path().join("pred.tsv");
    std::fs::write(&pred_path, pred).unwrap();

    let (code, stdout, stderr) = run(offlang_cmd()
        .args(["evaluate", "--config"])
        .arg(&config_path)
        .arg(&gold)
        .arg(&pred_path));
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.matches("Total 1.00").count(), 3, "{stdout}");
}

#[test]
fn prediction_missing_an_id_is_an_alignment_error() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::En, 24, 0);
    let (config_path, _) = pool_config(dir.path(), Language::En);

    let gold = dir.path().join("train.tsv");
    let mut pred = String::from("text_id\ttask_1\ttask_2\ttask_3\n");
    for line in std::fs::read_to_string(&gold).unwrap().lines().skip(2) {
        let f: Vec<&str> = line.split('\t').collect();
        pred.push_str(&format!("{}\t{}\t{}\t{}\n", f[0], f[2], f[3], f[4]));
    }
    let pred_path = dir.path().join("pred.tsv");
    std::fs::write(&pred_path, pred).unwrap();

    let (code, _, stderr) = run(offlang_cmd()
        .args(["evaluate", "--config"])
        .arg(&config_path)
        .arg(&gold)
        .arg(&pred_path));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("en_0_0000"), "first divergent id: {stderr}");
}

#[test]
fn cache_env_var_overrides_config_path() {
    let dir = tempfile::tempdir().unwrap();
    write_pool_tsv(&dir.path().join("train.tsv"), Language::En, 96, 0);
    let (config_path, _) = pool_config(dir.path(), Language::En);
    let override_cache = dir.path().join("override.embc");

    let (code, _, stderr) = run(offlang_cmd()
        .args(["train", "--config"])
        .arg(&config_path)
        .env("OFFLANG_CACHE", &override_cache));
    assert_eq!(code, 0, "{stderr}");
    assert!(override_cache.exists());
    assert!(!dir.path().join("features.embc").exists());
}
