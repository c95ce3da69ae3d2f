//! On-disk layout of a run: `plays.csv`, `metrics.csv`, `manifest.json`,
//! `report.md`, `report.json`, and optional per-play traces.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Profile};
use crate::error::{csv_err, io_err, json_err, Result};

pub const PLAYS: &str = "plays.csv";
pub const METRICS: &str = "metrics.csv";
pub const MANIFEST: &str = "manifest.json";
pub const REPORT_MD: &str = "report.md";
pub const REPORT_JSON: &str = "report.json";
pub const TRACES: &str = "traces";

/// One bidder's result in one auction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub instance: usize,
    pub profile: String,
    pub seat: usize,
    pub strategy: String,
    pub utility: f64,
    pub items_won: usize,
    pub spend: f64,
    pub rounds: u32,
    /// Items left with the auctioneer in this auction (same on every seat row).
    pub unsold: usize,
}

impl PlayRecord {
    pub fn cell(&self) -> (usize, String) {
        (self.instance, self.profile.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub engine_version: String,
    pub master_seed: u64,
    pub n_bidders: usize,
    pub m_items: usize,
    pub instances: usize,
    pub instance_seeds: Vec<u64>,
    pub predictor_seeds: Vec<u64>,
    pub profiles: Vec<Profile>,
    /// The config as run, in TOML.
    pub config: String,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, n: usize, m: usize, instance_seeds: Vec<u64>, predictor_seeds: Vec<u64>) -> Self {
        Manifest {
            name: config.name.clone(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            n_bidders: n,
            m_items: m,
            instances: instance_seeds.len(),
            instance_seeds,
            predictor_seeds,
            profiles: config.expanded_profiles(n),
            config: config.to_toml(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Reads every complete record of a plays file. A trailing partial line
/// (from an interrupted run) is ignored.
pub fn read_plays(path: &Path) -> Result<Vec<PlayRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut text = String::new();
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    while reader.read_line(&mut line).map_err(io_err(path))? > 0 {
        if line.ends_with('\n') {
            text.push_str(&line);
        }
        line.clear();
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(csv_err(path))?);
    }
    Ok(out)
}

pub fn write_plays(path: &Path, records: &[PlayRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Appends whole cells to a plays file as they finish.
pub struct PlaysAppender {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl PlaysAppender {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = !path.exists() || fs::metadata(path).map_err(io_err(path))?.len() == 0;
        let file = fs::OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(PlaysAppender { path: path.to_path_buf(), writer })
    }

    pub fn append(&mut self, records: &[PlayRecord]) -> Result<()> {
        for r in records {
            self.writer.serialize(r).map_err(csv_err(&self.path))?;
        }
        self.writer.flush().map_err(io_err(&self.path))
    }
}

/// Sorts by (instance, profile order, seat) and drops cells that lack a row
/// for some seat.
pub fn normalize(records: Vec<PlayRecord>, profiles: &[Profile], n: usize) -> Vec<PlayRecord> {
    let order = |label: &str| profiles.iter().position(|p| p.label == label).unwrap_or(usize::MAX);
    let mut seats: std::collections::HashMap<(usize, String), BTreeSet<usize>> = Default::default();
    for r in &records {
        seats.entry(r.cell()).or_default().insert(r.seat);
    }
    let mut seen = BTreeSet::new();
    let mut out: Vec<PlayRecord> = records
        .into_iter()
        .filter(|r| seats[&r.cell()].len() == n && order(&r.profile) != usize::MAX)
        .filter(|r| seen.insert((r.instance, r.profile.clone(), r.seat)))
        .collect();
    out.sort_by_key(|r| (r.instance, order(&r.profile), r.seat));
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(instance: usize, profile: &str, seat: usize) -> PlayRecord {
        PlayRecord {
            instance,
            profile: profile.into(),
            seat,
            strategy: "SB".into(),
            utility: 1.5,
            items_won: 1,
            spend: 2.0,
            rounds: 3,
            unsold: 0,
        }
    }

    #[test]
    fn partial_trailing_line_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(PLAYS);
        write_plays(&path, &[rec(0, "A", 0), rec(0, "A", 1)]).unwrap();
        let mut f = fs::OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"1,A,0,SB,1.5").unwrap();
        assert_eq!(read_plays(&path).unwrap().len(), 2);
    }

    #[test]
    fn normalize_sorts_and_drops_incomplete_cells() {
        let profiles = vec![
            Profile { label: "A".into(), seats: vec![] },
            Profile { label: "B".into(), seats: vec![] },
        ];
        let rows = vec![rec(1, "A", 1), rec(0, "B", 0), rec(0, "B", 1), rec(1, "A", 0), rec(2, "A", 0)];
        let out = normalize(rows, &profiles, 2);
        let keys: Vec<(usize, String, usize)> = out.iter().map(|r| (r.instance, r.profile.clone(), r.seat)).collect();
        assert_eq!(keys, [(0, "B".into(), 0), (0, "B".into(), 1), (1, "A".into(), 0), (1, "A".into(), 1)]);
    }

    #[test]
    fn appender_writes_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(PLAYS);
        PlaysAppender::open(&path).unwrap().append(&[rec(0, "A", 0)]).unwrap();
        PlaysAppender::open(&path).unwrap().append(&[rec(0, "A", 1)]).unwrap();
        assert_eq!(read_plays(&path).unwrap().len(), 2);
    }
}
