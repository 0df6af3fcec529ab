//! Experiment settings and the end-to-end driver behind the `uavpc` binary.
//!
//! Settings come from three layers: command-line flags, then an optional
//! TOML file, then built-in defaults. The file uses flat `key = value`
//! lines; grouped settings use dotted keys such as `olpc.alpha = 0.9`.
//! Every key is optional and unknown keys are rejected. Powers are given in
//! dBm and converted to watts once, here.
//!
//! ```toml
//! mode = "bursty"
//! algo = "olpc,td-maxsum-qos"
//! qos = 0.8
//! topology.n_sites = 4
//! traffic.sim_time_s = 5.0
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::baseline::OlpcParams;
use crate::channel::{ChannelParams, TdlProfile};
use crate::sim::{
    run_bursty, run_full_buffer, Algorithm, BurstyConfig, CampaignReport, FullBufferConfig, Mode, Scenario,
};
use crate::topology::{
    build_layout, DEFAULT_BS_HEIGHT_M, DEFAULT_DOWNTILT_DEG, DEFAULT_ISD_M, DEFAULT_SITES, DEFAULT_UE_HEIGHT_M,
};
use crate::{dbm_to_w, UavError};

/// Environment variable naming the output directory when neither a flag
/// nor the config file does.
pub const OUT_DIR_ENV: &str = "UAVPC_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "uavpc-out";

/// Command-line flags. Anything left out falls back to the config file.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "uavpc", version, about = "Uplink power allocation campaigns for cellular-connected UAVs")]
pub struct Cli {
    /// `full-buffer` or `bursty`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated algorithm names, or `all`.
    #[arg(long)]
    pub algo: Option<String>,
    /// Frequency blocks S.
    #[arg(long)]
    pub segments: Option<usize>,
    /// TTIs T of the time-domain schemes.
    #[arg(long)]
    pub ttis: Option<usize>,
    /// Per-UE SE target of the QoS schemes, b/s/Hz.
    #[arg(long)]
    pub qos: Option<f64>,
    /// Rate fraction a single-carrier band must hold.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Full-buffer snapshots, or independent bursty runs.
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optimize per co-site cluster.
    #[arg(long)]
    pub clustered: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    algo: Option<String>,
    segments: Option<usize>,
    ttis: Option<usize>,
    qos: Option<f64>,
    eta: Option<f64>,
    realizations: Option<usize>,
    seed: Option<u64>,
    clustered: Option<bool>,
    out: Option<PathBuf>,
    bandwidth_hz: Option<f64>,
    noise_density_dbm_hz: Option<f64>,
    p_max_dbm: Option<f64>,
    p_min_dbm: Option<f64>,
    #[serde(default)]
    topology: TopologyKeys,
    #[serde(default)]
    channel: ChannelKeys,
    #[serde(default)]
    olpc: OlpcKeys,
    #[serde(default)]
    sca: ScaKeys,
    #[serde(default)]
    traffic: TrafficKeys,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyKeys {
    n_sites: Option<usize>,
    isd_m: Option<f64>,
    bs_height_m: Option<f64>,
    downtilt_deg: Option<f64>,
    ue_height_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelKeys {
    ple: Option<f64>,
    pl_1m_db: Option<f64>,
    shadow_std_db: Option<f64>,
    uav_beams: Option<usize>,
    rms_delay_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OlpcKeys {
    p0_dbm: Option<f64>,
    alpha: Option<f64>,
    m_rb: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaKeys {
    eps_db: Option<f64>,
    max_outer: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrafficKeys {
    arrival_rate: Option<f64>,
    packet_bits: Option<f64>,
    update_interval_s: Option<f64>,
    sim_time_s: Option<f64>,
    warmup_s: Option<f64>,
    active_fraction_min: Option<f64>,
    active_fraction_max: Option<f64>,
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub algorithms: Vec<Algorithm>,
    pub scenario: Scenario,
    pub full_buffer: FullBufferConfig,
    pub bursty: BurstyConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>, UavError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let a: Algorithm = part.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(UavError::config("algo", "no algorithm given"));
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<FileConfig, UavError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UavError::config("config", format!("cannot read {}: {e}", path.display())))?;
    parse_file(&text)
}

fn parse_file(text: &str) -> Result<FileConfig, UavError> {
    toml::from_str(text).map_err(|e| {
        let key = e.span().map_or_else(|| "config".into(), |s| key_at(text, s.start));
        UavError::config(key, e.message().trim())
    })
}

/// Dotted key of the line holding byte `offset`, prefixed by the enclosing
/// `[table]` header if there is one.
fn key_at(text: &str, offset: usize) -> String {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |k| k + 1);
    let line = text[start..].lines().next().unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim().trim_matches(['[', ']']).replace(' ', "");
    let table = text[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(['[', ']']).trim().to_string());
    match table {
        Some(t) if !line.trim_start().starts_with('[') => format!("{t}.{key}"),
        _ if key.is_empty() => "config".into(),
        _ => key,
    }
}

/// Builds the experiment from parsed flags, reading `--config` when given.
pub fn parse_config(cli: &Cli) -> Result<ExperimentConfig, UavError> {
    let file = match &cli.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    resolve(cli, &file, env_out)
}

/// [`parse_config`] with the file given as text and an explicit fallback
/// output directory in place of the environment.
pub fn parse_config_str(cli: &Cli, toml_text: &str, env_out: Option<PathBuf>) -> Result<ExperimentConfig, UavError> {
    resolve(cli, &parse_file(toml_text)?, env_out)
}

fn resolve(cli: &Cli, f: &FileConfig, env_out: Option<PathBuf>) -> Result<ExperimentConfig, UavError> {
    let mode: Mode = cli.mode.as_deref().or(f.mode.as_deref()).unwrap_or("full-buffer").parse()?;
    let algorithms = match cli.algo.as_deref().or(f.algo.as_deref()) {
        Some(s) => parse_algorithms(s)?,
        None => match mode {
            Mode::FullBuffer => FullBufferConfig::default().algorithms,
            Mode::Bursty => BurstyConfig::default().algorithms,
        },
    };
    let seed = cli.seed.or(f.seed).unwrap_or(1);
    let clustered = cli.clustered || f.clustered.unwrap_or(false);

    let t = &f.topology;
    let layout = build_layout(
        t.n_sites.unwrap_or(DEFAULT_SITES),
        t.isd_m.unwrap_or(DEFAULT_ISD_M),
        t.bs_height_m.unwrap_or(DEFAULT_BS_HEIGHT_M),
        t.downtilt_deg.unwrap_or(DEFAULT_DOWNTILT_DEG),
    )?;

    let mut sc = Scenario { layout, ue_height_m: t.ue_height_m.unwrap_or(DEFAULT_UE_HEIGHT_M), ..Scenario::default() };
    let link = &mut sc.link;
    link.s_blocks = cli.segments.or(f.segments).unwrap_or(link.s_blocks);
    link.t_ttis = cli.ttis.or(f.ttis).unwrap_or(link.t_ttis);
    link.bandwidth_hz = f.bandwidth_hz.unwrap_or(link.bandwidth_hz);
    link.noise_density_dbm_hz = f.noise_density_dbm_hz.unwrap_or(link.noise_density_dbm_hz);
    if let Some(p) = f.p_max_dbm {
        link.p_max_w = dbm_to_w(p);
        sc.olpc.p_max_dbm = p;
    }
    if let Some(p) = f.p_min_dbm {
        link.p_min_w = dbm_to_w(p);
    }
    if f.p_max_dbm.is_some_and(|p| !p.is_finite()) || f.p_min_dbm.is_some_and(|p| !p.is_finite()) {
        return Err(UavError::config("p_max_dbm", "powers must be finite"));
    }

    let c = &f.channel;
    sc.channel = ChannelParams { bandwidth_hz: sc.link.bandwidth_hz, ..ChannelParams::default() };
    let large = &mut sc.channel.large;
    large.ple = c.ple.unwrap_or(large.ple);
    large.pl_1m_db = c.pl_1m_db.unwrap_or(large.pl_1m_db);
    large.shadow_std_db = c.shadow_std_db.unwrap_or(large.shadow_std_db);
    sc.channel.uav_beams = c.uav_beams.unwrap_or(sc.channel.uav_beams);
    if let Some(d) = c.rms_delay_s {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(UavError::config("channel.rms_delay_s", format!("must be non-negative, got {d}")));
        }
        let base = TdlProfile::default();
        sc.channel.tdl = TdlProfile::exponential(base.tap_delays.len(), 30.0, d, 15.0);
    }

    let o = &f.olpc;
    sc.olpc = OlpcParams {
        p0_dbm: o.p0_dbm.unwrap_or(sc.olpc.p0_dbm),
        alpha: o.alpha.unwrap_or(sc.olpc.alpha),
        m_rb: o.m_rb.unwrap_or(sc.olpc.m_rb),
        ..sc.olpc
    };
    sc.sca.eps_db = f.sca.eps_db.unwrap_or(sc.sca.eps_db);
    sc.sca.max_outer = f.sca.max_outer.unwrap_or(sc.sca.max_outer);
    if !(sc.sca.eps_db > 0.0) {
        return Err(UavError::config("sca.eps_db", "must be positive"));
    }
    if sc.sca.max_outer == 0 {
        return Err(UavError::config("sca.max_outer", "must be at least 1"));
    }
    sc.eta = cli.eta.or(f.eta).unwrap_or(sc.eta);
    sc.qos = cli.qos.or(f.qos).unwrap_or(sc.qos);
    sc.validate()?;

    let tr = &f.traffic;
    let realizations = cli.realizations.or(f.realizations);
    let fb_default = FullBufferConfig::default();
    let full_buffer = FullBufferConfig {
        n_realizations: realizations.unwrap_or(fb_default.n_realizations),
        active_fraction_range: (
            tr.active_fraction_min.unwrap_or(fb_default.active_fraction_range.0),
            tr.active_fraction_max.unwrap_or(fb_default.active_fraction_range.1),
        ),
        algorithms: algorithms.clone(),
        seed,
        clustered,
    };
    let bd = BurstyConfig::default();
    let bursty = BurstyConfig {
        arrival_rate: tr.arrival_rate.unwrap_or(bd.arrival_rate),
        packet_bits: tr.packet_bits.unwrap_or(bd.packet_bits),
        update_interval_s: tr.update_interval_s.unwrap_or(bd.update_interval_s),
        sim_time_s: tr.sim_time_s.unwrap_or(bd.sim_time_s),
        warmup_s: tr.warmup_s.unwrap_or(bd.warmup_s),
        clustered,
        algorithms: algorithms.clone(),
        seed,
        n_runs: realizations.unwrap_or(bd.n_runs),
    };
    full_buffer.validate().map_err(|e| rename_traffic_key(e))?;
    bursty.validate().map_err(|e| rename_traffic_key(e))?;

    let out_dir = cli
        .out
        .clone()
        .or_else(|| f.out.clone())
        .or(env_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(ExperimentConfig { mode, algorithms, scenario: sc, full_buffer, bursty, seed, out_dir })
}

fn rename_traffic_key(e: UavError) -> UavError {
    match e {
        UavError::Config { key, msg } if key != "algo" && key != "realizations" => {
            UavError::Config { key: format!("traffic.{key}"), msg }
        }
        other => other,
    }
}

/// Record of a finished run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

/// Runs the campaign and writes its CSVs plus `manifest.json` into
/// `cfg.out_dir`. Returns the report and every file written.
pub fn run(cfg: &ExperimentConfig) -> Result<(CampaignReport, Vec<PathBuf>), UavError> {
    let report = match cfg.mode {
        Mode::FullBuffer => run_full_buffer(&cfg.full_buffer, &cfg.scenario)?,
        Mode::Bursty => run_bursty(&cfg.bursty, &cfg.scenario)?,
    };
    let mut files = report.write_csvs(&cfg.out_dir)?;
    let manifest = Manifest {
        name: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg.clone(),
        outputs: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
    };
    let path = cfg.out_dir.join("manifest.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &manifest)
        .map_err(|e| UavError::Report(format!("manifest: {e}")))?;
    files.push(path);
    Ok((report, files))
}

/// Reads a manifest back into the configuration that produced it.
pub fn read_manifest(path: &Path) -> Result<Manifest, UavError> {
    let f = File::open(path)?;
    serde_json::from_reader(f).map_err(|e| UavError::Report(format!("manifest {}: {e}", path.display())))
}
