//! End-to-end smoke tests of the `npad` binary: subcommand plumbing, file
//! formats, exit codes, and the config file.

use std::path::Path;
use std::process::{Command, Output};

fn npad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npad"))
        .args(args)
        .output()
        .expect("spawn npad")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn make_corpus(dir: &Path) {
    let out = npad(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--recordings",
        "6",
        "--duration-s",
        "4",
        "--seed",
        "5",
        "--quiet",
    ]);
    assert_ok(&out, "synth");
}

#[test]
fn full_pipeline_through_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_corpus(&corpus);
    assert!(corpus.join("manifest.csv").exists());
    assert!(corpus.join("labels.csv").exists());

    let clips = dir.path().join("clips.csv");
    let out = npad(&[
        "segment",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        clips.to_str().unwrap(),
        "--quiet",
    ]);
    assert_ok(&out, "segment");
    let manifest = std::fs::read_to_string(&clips).unwrap();
    assert!(manifest.starts_with("source_id,offset_s,label"));

    let features = dir.path().join("features.npaf");
    let out = npad(&[
        "featurize",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        features.to_str().unwrap(),
        "--quiet",
    ]);
    assert_ok(&out, "featurize");

    let vae = dir.path().join("vae.json");
    let out = npad(&[
        "train-vae",
        "--features",
        features.to_str().unwrap(),
        "--out",
        vae.to_str().unwrap(),
        "--latent",
        "3",
        "--hidden",
        "10",
        "--seed",
        "3",
        "--quiet",
    ]);
    assert_ok(&out, "train-vae");
    let model = npad_core::vae::VaeModel::from_json(&std::fs::read_to_string(&vae).unwrap())
        .expect("vae json parses");
    assert_eq!(model.config.latent_dim, 3);

    let lib = dir.path().join("lib");
    let out = npad(&[
        "build-library",
        "--features",
        features.to_str().unwrap(),
        "--out",
        lib.to_str().unwrap(),
        "--budget",
        "30",
        "--seed",
        "2",
        "--feature-set",
        "mfcc",
        "--quiet",
    ]);
    assert_ok(&out, "build-library");
    assert!(lib.join("library.json").exists());

    let ensemble = dir.path().join("ensemble.json");
    let out = npad(&[
        "select",
        "--library",
        lib.to_str().unwrap(),
        "--out",
        ensemble.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--q",
        "9",
        "--quiet",
    ]);
    assert_ok(&out, "select");

    let out = npad(&[
        "evaluate",
        "--library",
        lib.to_str().unwrap(),
        "--ensemble",
        ensemble.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--alpha",
        "0.1",
    ]);
    assert_ok(&out, "evaluate");
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("evaluate prints JSON");
    assert!(report.get("np").is_some());
    assert!(report["confusion"].get("fn").is_some());

    let trial = dir.path().join("trial.json");
    let out = npad(&[
        "trial",
        "--corpus",
        corpus.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        trial.to_str().unwrap(),
        "--config",
        write_config(dir.path()).to_str().unwrap(),
        "--quiet",
    ]);
    assert_ok(&out, "trial");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trial).unwrap()).unwrap();
    for key in ["mfcc_svm", "mfcc_cssvm", "mfcc_vae_cssvm"] {
        assert!(report.get(key).is_some(), "trial report missing {key}");
    }
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("test.conf");
    std::fs::write(
        &path,
        "# small settings for smoke tests\n\
         library_budget = 25\n\
         q = 7\n\
         split_fraction = 0.2\n\
         vae.epochs = 10\n\
         grids.gamma = 0.5, 2.0\n\
         grids.nu = 0.1, 0.5\n",
    )
    .unwrap();
    path
}

#[test]
fn usage_errors_exit_with_code_1() {
    let out = npad(&["definitely-not-a-command"]);
    assert_eq!(out.status.code(), Some(1));

    // unknown config key
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "no_such_key = 3\n").unwrap();
    let corpus = dir.path().join("corpus");
    make_corpus(&corpus);
    let out = npad(&[
        "segment",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("c.csv").to_str().unwrap(),
        "--config",
        conf.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn data_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    // missing corpus directory
    let out = npad(&[
        "segment",
        "--corpus",
        dir.path().join("nope").to_str().unwrap(),
        "--out",
        dir.path().join("c.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // invalid alpha is a validation error
    let corpus = dir.path().join("corpus");
    make_corpus(&corpus);
    let features = dir.path().join("f.npaf");
    assert_ok(
        &npad(&[
            "featurize",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            features.to_str().unwrap(),
            "--quiet",
        ]),
        "featurize",
    );
    let lib = dir.path().join("lib");
    assert_ok(
        &npad(&[
            "build-library",
            "--features",
            features.to_str().unwrap(),
            "--out",
            lib.to_str().unwrap(),
            "--budget",
            "10",
            "--feature-set",
            "mfcc",
            "--quiet",
        ]),
        "build-library",
    );
    let out = npad(&[
        "select",
        "--library",
        lib.to_str().unwrap(),
        "--out",
        dir.path().join("e.json").to_str().unwrap(),
        "--alpha",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_prints_all_subcommands() {
    let out = npad(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "synth",
        "segment",
        "featurize",
        "train-vae",
        "build-library",
        "select",
        "evaluate",
        "trial",
        "experiment",
    ] {
        assert!(text.contains(cmd), "--help missing `{cmd}`");
    }
}
