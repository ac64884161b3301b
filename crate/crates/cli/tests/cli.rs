use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn disinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disinfo"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn emit_config_writes_training_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = disinfo(&["emit-config", "--run-dir", path(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 1);
    let doc = flat_doc::parse(&fs::read_to_string(dir.path().join("finetune_config.json")).unwrap());
    assert_eq!(doc.get("num_train_epochs"), Some("10"));
    assert_eq!(doc.get("learning_rate"), Some("5e-4"));
    assert_eq!(doc.get("bnb_4bit_quant_type"), Some("\"nf4\""));
    assert_eq!(doc.get("max_seq_length"), Some("2048"));
    assert_eq!(doc.get("gradient_accumulation_steps"), Some("2"));
    assert_eq!(doc.get("load_in_4bit"), Some("true"));
    assert_eq!(doc.get("lr_scheduler_type"), Some("\"linear\""));
    assert_eq!(doc.get("model_name"), Some("\"meta-llama/Llama-2-7b-chat-hf\""));
}

#[test]
fn emit_config_flag_overrides_one_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = disinfo(&["emit-config", "--run-dir", path(dir.path()), "--epochs", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = flat_doc::parse(&fs::read_to_string(dir.path().join("finetune_config.json")).unwrap());
    assert_eq!(doc.get("num_train_epochs"), Some("3"));
    assert_eq!(doc.get("learning_rate"), Some("5e-4"));
}

#[test]
fn invalid_override_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = disinfo(&["emit-config", "--run-dir", path(dir.path()), "--learning-rate=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("learning_rate"), "{}", stderr(&out));
}

#[test]
fn synth_then_pipeline_produces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let corpus = dir.path().join("synthetic.jsonl");
    let common = ["--run-dir", path(&run), "--seed", "3"];

    let mut args = vec![
        "synth",
        "--n-genuine",
        "300",
        "--n-fake",
        "100",
        "--output",
        path(&corpus),
    ];
    args.extend(common);
    let out = disinfo(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(corpus.is_file());

    let mut args = vec!["pipeline", "--corpus", path(&corpus), "--set", "train.epochs=5"];
    args.extend(common);
    let out = disinfo(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = stdout(&out);
    assert_eq!(summary.lines().count(), 1, "{summary}");
    assert!(summary.contains("f1"), "{summary}");

    let metrics = fs::read_to_string(run.join("metrics.json")).unwrap();
    assert!(metrics.contains("\"report\"") && metrics.contains("\"f1\""));
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    for name in ["corpus.jsonl", "model.json", "metrics.json"] {
        assert!(manifest.contains(name), "{manifest}");
    }
}

#[test]
fn missing_input_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = disinfo(&["train", "--run-dir", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("train"), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = disinfo(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let out = disinfo(&["train", "--optimizer", "rmsprop"]);
    assert_eq!(out.status.code(), Some(2));
}

/// The fine-tune document is flat: one `"key": value` per line.
mod flat_doc {
    pub struct Doc(Vec<(String, String)>);

    impl Doc {
        pub fn get(&self, key: &str) -> Option<&str> {
            self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
        }
    }

    pub fn parse(text: &str) -> Doc {
        Doc(text
            .lines()
            .filter_map(|l| {
                let (k, v) = l.trim().split_once(": ")?;
                Some((k.trim_matches('"').to_string(), v.trim_end_matches(',').to_string()))
            })
            .collect())
    }
}
