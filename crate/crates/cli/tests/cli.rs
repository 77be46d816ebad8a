//! Black-box tests of the `tabsynth` binary: exit codes, artifact layout,
//! determinism, referential integrity, and report content.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tabsynth"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        stdout(out),
        stderr(out)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

/// Artifact directory parsed from a fit run's summary, made absolute.
fn artifact_dir(dir: &Path, out: &Output) -> PathBuf {
    let line = stdout(out)
        .lines()
        .find(|l| l.starts_with("artifact: "))
        .expect("fit prints the artifact path")
        .trim_start_matches("artifact: ")
        .to_string();
    let path = PathBuf::from(line);
    if path.is_absolute() {
        path
    } else {
        dir.join(path)
    }
}

fn write_toy_table(dir: &Path) -> PathBuf {
    let mut csv = String::from("x,c\n");
    for i in 0..80u32 {
        let frac = (i * 37 % 10) as f64 / 10.0;
        let _ = writeln!(csv, "{:.1},{}", ((i * 7) % 30) as f64 + frac, ["a", "b", "c"][i as usize % 3]);
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

fn write_relational_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut parent = String::from("pid,pvalue\n");
    let mut child = String::from("pid,cvalue\n");
    for i in 0..40u32 {
        let pv = 40.0 + (i % 20) as f64 + 0.5;
        let _ = writeln!(parent, "p{i},{pv:.1}");
        for j in 0..(i % 3) {
            let _ = writeln!(child, "p{i},{:.1}", pv + j as f64);
        }
    }
    let ppath = dir.join("parent.csv");
    let cpath = dir.join("child.csv");
    std::fs::write(&ppath, parent).unwrap();
    std::fs::write(&cpath, child).unwrap();
    (ppath, cpath)
}

fn write_tiny_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        "[model]\nd_model = 16\nn_layers = 1\nn_heads = 2\nmax_positions = 64\n\n\
         [train]\nmax_epochs = 2\neval_period = 2\nbatch_size = 16\n\n\
         [bootstrap]\nrounds = 10\n{extra}"
    );
    let path = dir.join("tiny.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const ARTIFACT_FILES: &[&str] = &[
    "config.toml",
    "meta.txt",
    "schema.txt",
    "vocab.txt",
    "layout.txt",
    "model.ckpt",
    "earlystop.log",
    "train_report.txt",
    "samples.log",
];

#[test]
fn fit_writes_a_complete_artifact_and_samples_match_the_header() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_toy_table(tmp.path());
    let config = write_tiny_config(tmp.path(), "");

    let out = run_in(
        tmp.path(),
        &[
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            "arts",
        ],
    );
    assert_ok(&out);
    let art = artifact_dir(tmp.path(), &out);
    for file in ARTIFACT_FILES {
        assert!(art.join(file).is_file(), "missing {file}");
    }

    // n=5 -> a 5-row file whose header equals the source header.
    let sout = run_in(
        tmp.path(),
        &[
            "sample",
            "--artifact",
            art.to_str().unwrap(),
            "--n",
            "5",
            "--seed",
            "3",
            "--out",
            "s.csv",
        ],
    );
    assert_ok(&sout);
    let text = std::fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "x,c");
}

#[test]
fn invalid_config_keys_exit_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_toy_table(tmp.path());
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[train]\nlerning_rate = 0.1\n").unwrap();
    let out = run_in(
        tmp.path(),
        &["fit", "--data", data.to_str().unwrap(), "--config", bad.to_str().unwrap()],
    );
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("lerning_rate"), "{}", stderr(&out));
}

#[test]
fn same_seed_fits_give_byte_identical_checkpoints_and_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_toy_table(tmp.path());
    let config = write_tiny_config(tmp.path(), "");

    let fit_args = |out: &str| {
        vec![
            "fit".to_string(),
            "--data".into(),
            data.to_str().unwrap().into(),
            "--config".into(),
            config.to_str().unwrap().into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let o1 = run_in(tmp.path(), &fit_args("a").iter().map(String::as_str).collect::<Vec<_>>());
    let o2 = run_in(tmp.path(), &fit_args("b").iter().map(String::as_str).collect::<Vec<_>>());
    assert_ok(&o1);
    assert_ok(&o2);
    let a = artifact_dir(tmp.path(), &o1);
    let b = artifact_dir(tmp.path(), &o2);
    for file in ARTIFACT_FILES {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between same-seed fits");
    }

    // Same artifact + seed twice -> identical sample files.
    for (art, name) in [(&a, "sa.csv"), (&a, "sb.csv")] {
        let out = run_in(
            tmp.path(),
            &[
                "sample",
                "--artifact",
                art.to_str().unwrap(),
                "--n",
                "8",
                "--seed",
                "5",
                "--out",
                name,
            ],
        );
        assert_ok(&out);
    }
    assert_eq!(
        std::fs::read(tmp.path().join("sa.csv")).unwrap(),
        std::fs::read(tmp.path().join("sb.csv")).unwrap()
    );
}

#[test]
fn the_output_root_env_var_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_toy_table(tmp.path());
    let config = write_tiny_config(tmp.path(), "");
    let root = tmp.path().join("envroot");
    let out = bin()
        .current_dir(tmp.path())
        .env("TABSYNTH_OUT", &root)
        .args([
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "2",
        ])
        .output()
        .unwrap();
    assert_ok(&out);
    let art = artifact_dir(tmp.path(), &out);
    assert!(art.starts_with(&root), "{} not under {}", art.display(), root.display());
}

#[test]
fn relational_flow_keeps_referential_integrity_and_freezes_the_encoder() {
    let tmp = tempfile::tempdir().unwrap();
    let (parent, child) = write_relational_fixture(tmp.path());
    let config = write_tiny_config(
        tmp.path(),
        "\n[data]\nignore_columns = [\"pid\"]\noutput_max_length = 64\n",
    );

    let pfit = run_in(
        tmp.path(),
        &[
            "fit",
            "--data",
            parent.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "21",
            "--out",
            "arts",
        ],
    );
    assert_ok(&pfit);
    let part = artifact_dir(tmp.path(), &pfit);

    let cfit = run_in(
        tmp.path(),
        &[
            "fit-child",
            "--data",
            child.to_str().unwrap(),
            "--parent-data",
            parent.to_str().unwrap(),
            "--artifact",
            part.to_str().unwrap(),
            "--join-on",
            "pid",
            "--seed",
            "22",
            "--out",
            "arts",
        ],
    );
    assert_ok(&cfit);
    let cart = artifact_dir(tmp.path(), &cfit);
    for file in ["encoder.ckpt", "parent_schema.txt", "parent_vocab.txt", "parent_layout.txt"] {
        assert!(cart.join(file).is_file(), "missing {file}");
    }
    // Frozen contract: the stored encoder is byte-identical to the parent
    // artifact's model.
    assert_eq!(
        std::fs::read(part.join("model.ckpt")).unwrap(),
        std::fs::read(cart.join("encoder.ckpt")).unwrap()
    );

    // 100 synthetic parents, then children conditioned on them: every child
    // key must appear in the keyed parent file.
    let sp = run_in(
        tmp.path(),
        &[
            "sample",
            "--artifact",
            part.to_str().unwrap(),
            "--n",
            "100",
            "--seed",
            "9",
            "--out",
            "synp.csv",
        ],
    );
    assert_ok(&sp);
    let sc = run_in(
        tmp.path(),
        &[
            "sample-relational",
            "--artifact",
            cart.to_str().unwrap(),
            "--parent-data",
            "synp.csv",
            "--seed",
            "10",
            "--out",
            "sync.csv",
        ],
    );
    assert_ok(&sc);
    let keyed = std::fs::read_to_string(tmp.path().join("sync_parents.csv")).unwrap();
    let keys: std::collections::BTreeSet<&str> = keyed
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(keys.len(), 100);
    let children = std::fs::read_to_string(tmp.path().join("sync.csv")).unwrap();
    let child_lines: Vec<&str> = children.lines().collect();
    assert_eq!(child_lines[0].split(',').next().unwrap(), "pid");
    for line in &child_lines[1..] {
        let key = line.split(',').next().unwrap();
        assert!(keys.contains(key), "orphan child key {key}");
    }
}

#[test]
fn missing_join_column_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let (parent, child) = write_relational_fixture(tmp.path());
    let config = write_tiny_config(
        tmp.path(),
        "\n[data]\nignore_columns = [\"pid\"]\noutput_max_length = 64\n",
    );
    let pfit = run_in(
        tmp.path(),
        &[
            "fit",
            "--data",
            parent.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            "arts",
        ],
    );
    assert_ok(&pfit);
    let part = artifact_dir(tmp.path(), &pfit);
    let out = run_in(
        tmp.path(),
        &[
            "fit-child",
            "--data",
            child.to_str().unwrap(),
            "--parent-data",
            parent.to_str().unwrap(),
            "--artifact",
            part.to_str().unwrap(),
            "--join-on",
            "order_id",
            "--out",
            "arts",
        ],
    );
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("order_id"), "{}", stderr(&out));

    // output_max_length too small to hold even one child row.
    let cramped = write_tiny_config(
        tmp.path(),
        "\n[data]\nignore_columns = [\"pid\"]\noutput_max_length = 4\n",
    );
    let out = run_in(
        tmp.path(),
        &[
            "fit-child",
            "--data",
            child.to_str().unwrap(),
            "--parent-data",
            parent.to_str().unwrap(),
            "--artifact",
            part.to_str().unwrap(),
            "--join-on",
            "pid",
            "--config",
            cramped.to_str().unwrap(),
            "--out",
            "arts",
        ],
    );
    assert_exit(&out, 2);
    assert!(
        stderr(&out).contains("output_max_length"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn evaluate_scores_identity_and_constant_tables_as_expected() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_toy_table(tmp.path());

    // Real against itself: detection near chance, accuracy near 50%.
    let out = run_in(
        tmp.path(),
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--synthetic",
            data.to_str().unwrap(),
            "--folds",
            "3",
            "--out",
            "report.txt",
        ],
    );
    assert_ok(&out);
    let report = std::fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert_eq!(report, stdout(&out));
    for section in ["logistic detection", "discriminator measure", "distance audit"] {
        assert!(report.contains(section), "missing section {section}:\n{report}");
    }
    let ld: f64 = report
        .lines()
        .find(|l| l.trim_start().starts_with("score: "))
        .and_then(|l| l.trim().trim_start_matches("score: ").split(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(ld > 80.0, "self-evaluation detection score {ld}");
    let dm: f64 = report
        .lines()
        .find(|l| l.trim_start().starts_with("held-out accuracy: "))
        .and_then(|l| l.trim().trim_start_matches("held-out accuracy: ").split('%').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((35.0..=65.0).contains(&dm), "self-evaluation accuracy {dm}");

    // A constant synthetic table (value outside the real support, category
    // never seen in the real data) is trivially separable.
    let mut constant = String::from("x,c\n");
    for _ in 0..80 {
        constant.push_str("99.0,z\n");
    }
    std::fs::write(tmp.path().join("const.csv"), constant).unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--synthetic",
            "const.csv",
            "--folds",
            "3",
        ],
    );
    assert_ok(&out);
    let report = stdout(&out);
    let dm: f64 = report
        .lines()
        .find(|l| l.trim_start().starts_with("held-out accuracy: "))
        .and_then(|l| l.trim().trim_start_matches("held-out accuracy: ").split('%').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(dm > 95.0, "constant synthetic accuracy {dm}\n{report}");
}

#[test]
fn encode_and_audit_render_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_toy_table(tmp.path());
    let out = run_in(
        tmp.path(),
        &["encode", "--data", data.to_str().unwrap(), "--n", "3"],
    );
    assert_ok(&out);
    let dump = stdout(&out);
    assert_eq!(dump.lines().count(), 4);
    assert!(dump.lines().next().unwrap().contains("x[0]"), "{dump}");

    let out = run_in(
        tmp.path(),
        &["audit-dcr", "--data", data.to_str().unwrap(), "--seed", "4"],
    );
    assert_ok(&out);
    let audit = stdout(&out);
    assert!(audit.lines().any(|l| l.starts_with("statistic ")), "{audit}");
    assert_eq!(audit.lines().filter(|l| l.starts_with("probe ")).count(), 20);
    assert!(audit.lines().filter(|l| l.starts_with("d_h ")).count() > 0);
}

#[test]
fn sampling_from_a_missing_artifact_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["sample", "--artifact", "nope", "--n", "3"],
    );
    assert_exit(&out, 3);
}
