use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::UavError;

/// Percentile ranks reported in summaries.
pub const RANKS: [f64; 4] = [10.0, 20.0, 50.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FullBuffer,
    Bursty,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::FullBuffer => "full-buffer",
            Mode::Bursty => "bursty",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = UavError;

    fn from_str(s: &str) -> Result<Self, UavError> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "full-buffer" => Ok(Mode::FullBuffer),
            "bursty" => Ok(Mode::Bursty),
            _ => Err(UavError::config("mode", format!("unknown mode `{s}`, expected full-buffer or bursty"))),
        }
    }
}

/// One SE sample: realization and UE index in full-buffer mode, session id
/// and serving cell in bursty mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeSample {
    pub run: usize,
    pub ue: usize,
    pub algorithm: Algorithm,
    pub se: f64,
}

/// Raw outcome of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub mode: Mode,
    pub algorithms: Vec<Algorithm>,
    pub samples: Vec<SeSample>,
    /// Realizations (or seeds) attempted.
    pub runs: usize,
    /// Solver failures per algorithm; failed runs contribute no samples.
    pub skipped: BTreeMap<Algorithm, usize>,
    /// Runs whose QoS target was infeasible, per algorithm.
    pub qos_infeasible: BTreeMap<Algorithm, usize>,
    /// Bursty sessions that had not finished when the simulation ended.
    pub unfinished: BTreeMap<Algorithm, usize>,
    /// Bursty sessions discarded because they arrived during warm-up.
    pub warmup_excluded: usize,
    pub clusters: Option<usize>,
}

impl CampaignReport {
    pub(crate) fn new(mode: Mode, algorithms: &[Algorithm]) -> Self {
        let zero = || algorithms.iter().map(|&a| (a, 0)).collect();
        Self {
            mode,
            algorithms: algorithms.to_vec(),
            samples: Vec::new(),
            runs: 0,
            skipped: zero(),
            qos_infeasible: zero(),
            unfinished: zero(),
            warmup_excluded: 0,
            clusters: None,
        }
    }

    pub fn se_of(&self, alg: Algorithm) -> Vec<f64> {
        self.samples.iter().filter(|s| s.algorithm == alg).map(|s| s.se).collect()
    }

    /// Minimum and mean SE of every run, in run order.
    pub fn per_run(&self, alg: Algorithm) -> Vec<(usize, f64, f64)> {
        let mut by_run: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for s in self.samples.iter().filter(|s| s.algorithm == alg) {
            by_run.entry(s.run).or_default().push(s.se);
        }
        by_run
            .into_iter()
            .map(|(r, v)| (r, v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().sum::<f64>() / v.len() as f64))
            .collect()
    }

    pub fn summary(&self, alg: Algorithm) -> Result<Summary, UavError> {
        summarize(&self.se_of(alg)).map_err(|e| UavError::Report(format!("{alg}: {e}")))
    }

    /// One row per algorithm with samples, with gains against OLPC when it ran.
    pub fn summary_rows(&self) -> Result<Vec<SummaryRow>, UavError> {
        let base = self.se_of(Algorithm::Olpc);
        let base = if base.is_empty() { None } else { Some(summarize(&base)?) };
        let mut rows = Vec::new();
        for &alg in &self.algorithms {
            let se = self.se_of(alg);
            if se.is_empty() {
                continue;
            }
            let summary = summarize(&se)?;
            let runs = self.per_run(alg);
            let mean_run_min = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
            rows.push(SummaryRow {
                algorithm: alg,
                gains_pct: base.as_ref().map(|b| summary.gains_pct(b)),
                summary,
                mean_run_min,
                skipped: self.skipped.get(&alg).copied().unwrap_or(0),
                qos_infeasible: self.qos_infeasible.get(&alg).copied().unwrap_or(0),
                unfinished: self.unfinished.get(&alg).copied().unwrap_or(0),
            });
        }
        if rows.is_empty() {
            return Err(UavError::Report("the campaign produced no samples".into()));
        }
        Ok(rows)
    }

    /// Writes `se_samples.csv`, `summary.csv` and one `cdf_<algo>.csv` per
    /// algorithm, returning the paths in that order.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>, UavError> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();

        let path = dir.join("se_samples.csv");
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        let id = if self.mode == Mode::Bursty { "session" } else { "realization" };
        w.write_record([id, "ue", "algorithm", "se"])?;
        for s in &self.samples {
            w.write_record([s.run.to_string(), s.ue.to_string(), s.algorithm.to_string(), format!("{:.9e}", s.se)])?;
        }
        w.flush()?;
        paths.push(path);

        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        let mut head = vec!["algorithm".to_string(), "samples".into(), "mean".into()];
        head.extend(RANKS.iter().map(|r| format!("p{r}")));
        head.extend(RANKS.iter().map(|r| format!("gain_p{r}_pct")));
        head.extend(["mean_run_min", "skipped", "qos_infeasible", "unfinished", "warmup_excluded", "clusters"].map(String::from));
        w.write_record(&head)?;
        for row in self.summary_rows()? {
            let s = &row.summary;
            let mut rec = vec![row.algorithm.to_string(), s.n.to_string(), fmt(s.mean)];
            rec.extend(s.percentiles.iter().map(|&v| fmt(v)));
            match row.gains_pct {
                Some(g) => rec.extend(g.iter().map(|&v| format!("{v:.3}"))),
                None => rec.extend(RANKS.iter().map(|_| String::new())),
            }
            rec.extend([
                fmt(row.mean_run_min),
                row.skipped.to_string(),
                row.qos_infeasible.to_string(),
                row.unfinished.to_string(),
                self.warmup_excluded.to_string(),
                self.clusters.map_or(String::new(), |c| c.to_string()),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        paths.push(path);

        for &alg in &self.algorithms {
            let mut se = self.se_of(alg);
            if se.is_empty() {
                continue;
            }
            se.sort_by(f64::total_cmp);
            let path = dir.join(format!("cdf_{alg}.csv"));
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
            w.write_record(["se", "cdf"])?;
            let n = se.len() as f64;
            for (k, v) in se.iter().enumerate() {
                w.write_record([fmt(*v), fmt((k + 1) as f64 / n)])?;
            }
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.9e}")
}

/// Distribution summary of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Values at [`RANKS`].
    pub percentiles: [f64; 4],
}

impl Summary {
    pub fn at(&self, rank: f64) -> Option<f64> {
        RANKS.iter().position(|&r| r == rank).map(|k| self.percentiles[k])
    }

    /// `100 (self - base) / base` at each rank.
    pub fn gains_pct(&self, base: &Summary) -> [f64; 4] {
        std::array::from_fn(|k| 100.0 * (self.percentiles[k] - base.percentiles[k]) / base.percentiles[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub summary: Summary,
    pub gains_pct: Option<[f64; 4]>,
    pub mean_run_min: f64,
    pub skipped: usize,
    pub qos_infeasible: usize,
    pub unfinished: usize,
}

/// Nearest-rank percentile of ascending `sorted`: the smallest value with
/// at least `rank` percent of the samples at or below it.
pub fn percentile(sorted: &[f64], rank: f64) -> Result<f64, UavError> {
    if sorted.is_empty() {
        return Err(UavError::Report("percentile of no samples".into()));
    }
    if !(0.0..=100.0).contains(&rank) {
        return Err(UavError::Report(format!("rank {rank} outside [0, 100]")));
    }
    let k = ((rank / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[k.clamp(1, sorted.len()) - 1])
}

pub fn summarize(samples: &[f64]) -> Result<Summary, UavError> {
    if samples.is_empty() {
        return Err(UavError::Report("cannot summarize an empty sample set".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(UavError::Report("samples must be finite".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let mut percentiles = [0.0; 4];
    for (k, &r) in RANKS.iter().enumerate() {
        percentiles[k] = percentile(&s, r)?;
    }
    Ok(Summary { n: s.len(), mean: s.iter().sum::<f64>() / s.len() as f64, percentiles })
}
