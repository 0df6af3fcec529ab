use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use uavpc::config::*;
use uavpc::sim::{Algorithm, Mode};
use uavpc::UavError;

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("uavpc").chain(args.iter().copied())).unwrap()
}

fn key_of(r: Result<ExperimentConfig, UavError>) -> String {
    match r {
        Err(UavError::Config { key, .. }) => key,
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("uavpc-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

const SMALL: &str = "realizations = 3\n[topology]\nn_sites = 1\n";

#[test]
fn empty_config_yields_defaults() {
    let c = parse_config_str(&cli(&[]), "", None).unwrap();
    assert_eq!(c.mode, Mode::FullBuffer);
    assert_eq!(c.scenario.layout.n_cells(), 48);
    assert_eq!(c.scenario.layout.isd, 2000.0);
    assert_eq!(c.scenario.link.bandwidth_hz, 9e6);
    assert_eq!(c.scenario.link.s_blocks, 20);
    assert_eq!(c.bursty.arrival_rate, 2.5);
    assert_eq!(c.bursty.packet_bits, 4e6);
    assert_eq!(c.scenario.eta, 0.8);
    assert_eq!(c.seed, 1);
    assert_eq!(c.algorithms, Algorithm::ALL.to_vec());
    assert_eq!(c.out_dir, PathBuf::from(DEFAULT_OUT_DIR));
}

#[test]
fn flags_select_mode_algorithm_and_qos() {
    let c = parse_config_str(&cli(&["--mode", "bursty", "--algo", "td-maxsum-qos", "--qos", "0.8"]), "", None).unwrap();
    assert_eq!(c.mode, Mode::Bursty);
    assert_eq!(c.algorithms, vec![Algorithm::TdMaxsumQos]);
    assert_eq!(c.bursty.algorithms, vec![Algorithm::TdMaxsumQos]);
    assert_eq!(c.scenario.qos, 0.8);

    let c = parse_config_str(&cli(&["--algo", "olpc, fd_sc_maxmin", "--segments", "8", "--ttis", "4", "--clustered"]), "", None)
        .unwrap();
    assert_eq!(c.algorithms, vec![Algorithm::Olpc, Algorithm::FdScMaxmin]);
    assert_eq!((c.scenario.link.s_blocks, c.scenario.link.t_ttis), (8, 4));
    assert!(c.full_buffer.clustered && c.bursty.clustered);
}

#[test]
fn bad_values_name_their_key() {
    assert_eq!(key_of(parse_config_str(&cli(&["--segments", "0"]), "", None)), "segments");
    assert_eq!(key_of(parse_config_str(&cli(&["--eta", "1.5"]), "", None)), "eta");
    assert_eq!(key_of(parse_config_str(&cli(&["--algo", "best"]), "", None)), "algo");
    assert_eq!(key_of(parse_config_str(&cli(&["--mode", "sometimes"]), "", None)), "mode");
    assert_eq!(key_of(parse_config_str(&cli(&[]), "foo = 1", None)), "foo");
    assert_eq!(key_of(parse_config_str(&cli(&[]), "olpc.bogus = 1", None)), "olpc.bogus");
    assert_eq!(key_of(parse_config_str(&cli(&[]), "[olpc]\nbogus = 1", None)), "olpc.bogus");
    assert_eq!(key_of(parse_config_str(&cli(&[]), "qos = \"high\"", None)), "qos");
    assert_eq!(key_of(parse_config_str(&cli(&[]), "[olpc]\nalpha = 2.0", None)), "olpc.alpha");
    assert_eq!(key_of(parse_config_str(&cli(&[]), "[traffic]\nsim_time_s = -1.0", None)), "traffic.sim_time_s");
    assert!(Cli::try_parse_from(["uavpc", "--segments", "many"]).is_err());
    assert!(Cli::try_parse_from(["uavpc", "--unknown"]).is_err());
}

#[test]
fn flags_beat_file_beats_environment() {
    let file = "seed = 7\nqos = 0.5\nout = \"from-file\"\n[traffic]\narrival_rate = 1.0\n";
    let env = Some(PathBuf::from("from-env"));
    let c = parse_config_str(&cli(&[]), file, env.clone()).unwrap();
    assert_eq!((c.seed, c.scenario.qos, c.bursty.arrival_rate), (7, 0.5, 1.0));
    assert_eq!(c.out_dir, PathBuf::from("from-file"));
    let c = parse_config_str(&cli(&["--seed", "9", "--qos", "1.2", "--out", "from-flag"]), file, env.clone()).unwrap();
    assert_eq!((c.seed, c.scenario.qos), (9, 1.2));
    assert_eq!(c.out_dir, PathBuf::from("from-flag"));
    let c = parse_config_str(&cli(&[]), "", env).unwrap();
    assert_eq!(c.out_dir, PathBuf::from("from-env"));
}

#[test]
fn realizations_drive_both_modes() {
    let c = parse_config_str(&cli(&["--realizations", "12"]), "", None).unwrap();
    assert_eq!((c.full_buffer.n_realizations, c.bursty.n_runs), (12, 12));
}

fn file_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn a_run_writes_reproducible_artifacts_and_a_manifest() {
    let base = scratch("run");
    let mut outs = Vec::new();
    for tag in ["a", "b"] {
        let out = base.join(tag);
        let c = parse_config_str(
            &cli(&["--seed", "1", "--algo", "olpc,fd-maxmin-s1", "--out", out.to_str().unwrap()]),
            SMALL,
            None,
        )
        .unwrap();
        let (report, files) = run(&c).unwrap();
        assert_eq!(report.runs, 3);
        assert_eq!(files.len(), 5);
        let m = read_manifest(&out.join("manifest.json")).unwrap();
        assert_eq!(m.seed, 1);
        assert_eq!(m.outputs, ["se_samples.csv", "summary.csv", "cdf_olpc.csv", "cdf_fd-maxmin-s1.csv"]);
        assert_eq!(m.config.full_buffer, c.full_buffer);
        outs.push(out);
    }
    let (a, b) = (file_bytes(&outs[0]), file_bytes(&outs[1]));
    assert_eq!(a.len(), 5);
    for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
        assert_eq!(na, nb);
        if na != "manifest.json" {
            assert_eq!(ba, bb, "{na} differs between identical runs");
        }
    }
    std::fs::remove_dir_all(&base).unwrap();
}

#[test]
fn clustered_bursty_uses_one_cluster_per_site() {
    let out = scratch("clustered");
    let c = parse_config_str(
        &cli(&["--mode", "bursty", "--algo", "olpc", "--clustered", "--out", out.to_str().unwrap()]),
        "[traffic]\nsim_time_s = 2.0\nwarmup_s = 0.2\n",
        None,
    )
    .unwrap();
    let (report, _) = run(&c).unwrap();
    assert_eq!(report.clusters, Some(16));
    assert_eq!(report.mode, Mode::Bursty);
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn binary_honours_the_output_environment_variable() {
    let base = scratch("bin");
    let cfg = base.join("small.toml");
    std::fs::create_dir_all(&base).unwrap();
    std::fs::write(&cfg, SMALL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uavpc"))
        .args(["--algo", "olpc", "--config", cfg.to_str().unwrap()])
        .env(OUT_DIR_ENV, base.join("env-out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("olpc"));
    assert!(base.join("env-out/summary.csv").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_uavpc")).args(["--segments", "0"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("segments"));
    std::fs::remove_dir_all(&base).unwrap();
}
