use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use octsca_cli::config::RunArgs;
use octsca_cli::session::{load_snapshot, resolve, CSV_NAME, SNAPSHOT_NAME};
use octsca_cli::{Cli, Command as Sub, FileConfig};
use octsca_core::measure::parse_csv;
use octsca_core::{AnyField, ProbMode};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_octsca"));
    for (k, _) in std::env::vars() {
        if k.starts_with("OCTSCA_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn run_args(args: &[&str]) -> RunArgs {
    let cli = Cli::try_parse_from(std::iter::once("octsca").chain(std::iter::once("run")).chain(args.iter().copied())).unwrap();
    match cli.command {
        Sub::Run(a) => a,
        other => panic!("parsed {other:?}"),
    }
}

fn octsca(args: &[&str]) -> std::process::Output {
    bin().args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    octsca(args).status.code().unwrap()
}

fn dir_arg(d: &Path) -> String {
    d.to_str().unwrap().to_string()
}

#[test]
fn parse_square_half_run() {
    let (cfg, snap) = resolve(&run_args(&["--size", "1024", "--p", "0.5", "--q", "0", "--tmax", "1000", "--seed", "42"])).unwrap();
    assert!(snap.is_none());
    assert_eq!((cfg.x, cfg.y, cfg.seed, cfg.tmax), (1024, 1024, 42, 1000));
    let params = cfg.params().unwrap();
    assert_eq!(params.p().mode(), &ProbMode::Half);
    assert_eq!(params.q().mode(), &ProbMode::Zero);
}

#[test]
fn three_quarters_selects_a_two_word_plan() {
    let (cfg, _) = resolve(&run_args(&["--p", "0.75", "--seed", "1"])).unwrap();
    match cfg.params().unwrap().p().mode() {
        ProbMode::Dyadic(plan) => assert_eq!(plan.words(), 2),
        other => panic!("expected dyadic, got {other:?}"),
    }
}

#[test]
fn misaligned_size_is_a_config_error() {
    let err = resolve(&run_args(&["--size", "1000", "--w", "64"])).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("128"), "{err}");
    assert_eq!(code(&["run", "--size", "1000", "--w", "64", "--seed", "1"]), 1);
}

#[test]
fn flags_override_the_file_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    fs::write(&file, "size = 256\np = 0.75\nseed = 9\ntmax = 50\n").unwrap();
    let (cfg, _) = resolve(&run_args(&["--config", file.to_str().unwrap(), "--p", "0.5"])).unwrap();
    assert_eq!((cfg.x, cfg.p, cfg.seed, cfg.tmax), (256, 0.5, 9, 50));

    assert!(FileConfig::from_toml("sise = 256\n").is_err());
    fs::write(&file, "sise = 256\n").unwrap();
    let out = octsca(&["run", "--config", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sise"));
}

#[test]
fn size_conflicting_with_x_is_rejected() {
    assert_eq!(resolve(&run_args(&["--size", "256", "--x", "128"])).unwrap_err().exit_code(), 1);
    let (cfg, _) = resolve(&run_args(&["--x", "256", "--y", "6", "--seed", "1"])).unwrap();
    assert_eq!((cfg.x, cfg.y), (256, 6));
}

#[test]
fn environment_overrides_defaults_but_not_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let status = bin()
        .args(["run", "--tmax", "5", "--seed", "3", "--out", out.to_str().unwrap()])
        .env("OCTSCA_SIZE", "128")
        .env("OCTSCA_SEED", "77")
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join(CSV_NAME)).unwrap();
    assert!(csv.contains("seed=3\n"));
    assert!(csv.contains("x=128 y=128"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["run", "--no-such-flag"]), 1);
    assert_eq!(code(&["run", "--p", "1.5", "--seed", "1"]), 1);
    assert_eq!(code(&["run", "--pmode", "half", "--p", "0.3", "--seed", "1"]), 1);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.snap");
    assert_eq!(code(&["snapshot", "export", missing.to_str().unwrap(), "--heights", "h.txt"]), 3);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let nested = blocker.join("out");
    assert_eq!(code(&["run", "-L", "128", "--tmax", "2", "--seed", "1", "--out", nested.to_str().unwrap()]), 3);
}

#[test]
fn identical_seeds_give_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let args = ["run", "-L", "256", "--p", "0.5", "--q", "0", "--tmax", "100", "--seed", "5", "--out", &dir_arg(&out)];
        assert_eq!(code(&args), 0);
        csvs.push(fs::read(out.join(CSV_NAME)).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert!(!parse_csv(std::str::from_utf8(&csvs[0]).unwrap()).unwrap().is_empty());
}

#[test]
fn export_import_resume_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    let common = ["-L", "128", "--p", "0.75", "--q", "0.25", "--seed", "11", "--ppd", "20"];
    let (full_dir, first_dir) = (dir_arg(&d("full")), dir_arg(&d("first")));
    assert_eq!(code(&[&["run"][..], &common, &["--tmax", "60", "--out", &full_dir]].concat()), 0);
    assert_eq!(code(&[&["run"][..], &common, &["--tmax", "23", "--out", &first_dir]].concat()), 0);

    let heights = d("h.txt");
    let snap = d("first").join(SNAPSHOT_NAME);
    assert_eq!(code(&["snapshot", "export", &dir_arg(&snap), "--heights", &dir_arg(&heights)]), 0);
    let imported = d("imported.snap");
    assert_eq!(
        code(&["snapshot", "import", &dir_arg(&heights), "--out", &dir_arg(&imported), "--streams-from", &dir_arg(&snap)]),
        0
    );
    let resumed = ["run", "--resume", &dir_arg(&imported), "--tmax", "60", "--out", &dir_arg(&d("second"))];
    assert_eq!(code(&resumed), 0);

    let a = load_snapshot(&d("full").join(SNAPSHOT_NAME)).unwrap();
    let b = load_snapshot(&d("second").join(SNAPSHOT_NAME)).unwrap();
    assert_eq!(a.field, b.field);
    let (sa, sb) = (a.streams.unwrap(), b.streams.unwrap());
    for (x, y) in sa.streams().iter().zip(sb.streams()) {
        assert_eq!(x.position(), y.position());
    }

    let read = |p: &Path| parse_csv(&fs::read_to_string(p.join(CSV_NAME)).unwrap()).unwrap();
    let (full, second) = (read(&d("full")), read(&d("second")));
    let tail: Vec<_> = full.iter().filter(|r| r.t > 23).cloned().collect();
    assert_eq!(tail, second);
}

#[test]
fn resume_rejects_a_different_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    assert_eq!(code(&["run", "-L", "128", "--tmax", "3", "--seed", "1", "--out", &dir_arg(&out)]), 0);
    let snap = out.join(SNAPSHOT_NAME);
    assert_eq!(code(&["run", "--resume", &dir_arg(&snap), "--seed", "2", "--tmax", "9"]), 1);
    assert_eq!(code(&["run", "--resume", &dir_arg(&snap), "--tmax", "3"]), 1);
}

#[test]
fn removal_alone_roughens_a_flat_surface() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    assert_eq!(code(&["run", "-L", "256", "--p", "0", "--q", "0.5", "--tmax", "200", "--seed", "8", "--out", &dir_arg(&out)]), 0);
    let recs = parse_csv(&fs::read_to_string(out.join(CSV_NAME)).unwrap()).unwrap();
    let (first, last) = (recs.first().unwrap(), recs.last().unwrap());
    assert_eq!(first.t, 0);
    assert!(last.w2 > 2.0 * first.w2, "{} -> {}", first.w2, last.w2);
}

#[test]
fn every_artifact_records_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    assert_eq!(code(&["run", "-L", "128", "--tmax", "20", "--seed", "123", "--fit", "2:20", "--out", &dir_arg(&out)]), 0);
    assert!(fs::read_to_string(out.join(CSV_NAME)).unwrap().contains("seed=123"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 123);
    assert_eq!(meta["config"]["workers"], 1);
    assert!(meta["fit"]["power_law"]["beta"].is_number());
    let snap = load_snapshot(&out.join(SNAPSHOT_NAME)).unwrap();
    let stored = FileConfig::from_toml(snap.metadata.as_deref().unwrap()).unwrap();
    assert_eq!(stored.seed, Some(123));
    assert_eq!(snap.streams.unwrap().master_seed(), 123);
    assert!(matches!(snap.field, AnyField::W64(_)));
}

#[test]
fn fit_and_bench_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    assert_eq!(code(&["run", "-L", "128", "--tmax", "100", "--seed", "4", "--out", &dir_arg(&out)]), 0);
    let fit = octsca(&["fit", "--csv", &dir_arg(&out.join(CSV_NAME)), "--tmin", "5", "--tmax", "100"]);
    assert!(fit.status.success());
    assert!(String::from_utf8_lossy(&fit.stdout).starts_with("beta = "));
    assert_eq!(code(&["fit", "--csv", &dir_arg(&out.join(CSV_NAME)), "--tmin", "90", "--tmax", "100"]), 1);

    let bench_dir = dir.path().join("b");
    let bench = octsca(&[
        "bench", "--sizes", "256", "--engines", "vec,ref", "--p", "0.5,0.75", "--mcs", "400", "--repeats", "1",
        "--out", &dir_arg(&bench_dir),
    ]);
    assert!(bench.status.success(), "{}", String::from_utf8_lossy(&bench.stderr));
    let csv = String::from_utf8(bench.stdout).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(fs::read_to_string(bench_dir.join("bench.csv")).unwrap(), csv);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(bench_dir.join("bench.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 4);
    assert!(json[0]["net_GBps"].is_number());
}
