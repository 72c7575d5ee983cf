//! Result archives on disk.
//!
//! Directory layout:
//!
//! ```text
//! config.json      experiment spec as run
//! summary.json     resolved scenario, reference point, chosen solutions, hypervolumes
//! seeds.csv        every seed
//! frontier.csv     the rank-1 seeds, ascending delay
//! history.csv      one row per generation
//! final.csv        final population
//! pareto.csv       rank-1 members of the final population
//! tradeoff.txt     best-per-objective and trade-off solutions against the reference
//! delay_power.csv  plot table: set, id, delay, power, timing flag
//! delay_area.csv   plot table: set, id, delay, area, timing flag
//! assignment/<id>.txt  cell assignment of each rank-1 member
//! ```
//!
//! Loading a directory and exporting it again reproduces every file byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentSpec;
use crate::error::{Error, Result};
use crate::eval::{fmt_f64, Evaluation, ObjectiveVector};
use crate::moea::{GenerationStats, Provenance};
use crate::netlist::Chromosome;
use crate::seeding::{read_seeds_csv, seeds_csv, SeedSolution};

/// One member of the final population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub id: u64,
    pub provenance: Provenance,
    pub rank: Option<usize>,
    #[serde(with = "lossless")]
    pub crowding: f64,
    pub evaluation: Evaluation,
    pub chromosome: Chromosome,
}

/// Values resolved while running, plus the selected solutions by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub required_time: f64,
    pub clock_period: f64,
    pub output_load: f64,
    pub population_size: usize,
    pub evaluations: usize,
    /// Objectives improvements are measured against.
    pub reference: ObjectiveVector,
    pub best_d_wc: Option<u64>,
    pub best_p_total: Option<u64>,
    pub best_a_gate: Option<u64>,
    pub trade_off: Option<u64>,
    /// Seed indices with an unmutated copy in the final population.
    pub survivors: Vec<usize>,
    /// 1.1 times the componentwise maximum over seeds and final population.
    pub hv_reference: ObjectiveVector,
    pub hv_frontier: f64,
    pub hv_final: f64,
    /// Reference used for the per-generation hypervolume column.
    pub history_hv_reference: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultArchive {
    pub spec: ExperimentSpec,
    pub summary: Summary,
    pub seeds: Vec<SeedSolution>,
    /// Indices into `seeds`.
    pub frontier: Vec<usize>,
    pub history: Vec<GenerationStats>,
    pub population: Vec<ArchiveRecord>,
    /// Assignment file text per rank-1 id.
    pub assignments: BTreeMap<u64, String>,
}

const HISTORY_HEADER: [&str; 6] = [
    "generation",
    "min_d_wc",
    "min_p_total",
    "min_a_gate",
    "front_size",
    "hypervolume",
];

const RECORD_HEADER: [&str; 13] = [
    "id",
    "provenance",
    "rank",
    "crowding",
    "d_wc",
    "wns",
    "timing_met",
    "switching",
    "internal",
    "leakage",
    "p_total",
    "a_gate",
    "chromosome",
];

impl ResultArchive {
    pub fn record(&self, id: u64) -> Option<&ArchiveRecord> {
        self.population.iter().find(|r| r.id == id)
    }

    pub fn pareto(&self) -> impl Iterator<Item = &ArchiveRecord> {
        self.population.iter().filter(|r| r.rank == Some(1))
    }

    pub fn frontier_seeds(&self) -> impl Iterator<Item = &SeedSolution> {
        self.frontier.iter().map(|&i| &self.seeds[i])
    }

    /// Seeds that survived, as a fraction of all seeds.
    pub fn survival_fraction(&self) -> f64 {
        self.summary.survivors.len() as f64 / self.seeds.len() as f64
    }

    /// The whole archive as one JSON document.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("archive serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// File name and contents of every archive file, in a fixed order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("config.json".to_owned(), pretty(&self.spec)),
            ("summary.json".to_owned(), pretty(&self.summary)),
            (
                "seeds.csv".to_owned(),
                seeds_csv(self.seeds.iter().enumerate()),
            ),
            (
                "frontier.csv".to_owned(),
                seeds_csv(self.frontier.iter().map(|&i| (i, &self.seeds[i]))),
            ),
            ("history.csv".to_owned(), self.history_csv()),
            ("final.csv".to_owned(), records_csv(self.population.iter())),
            ("pareto.csv".to_owned(), records_csv(self.pareto())),
            ("tradeoff.txt".to_owned(), self.tradeoff_text()),
            (
                "delay_power.csv".to_owned(),
                self.plot_table("p_total", |e| e.p_total),
            ),
            (
                "delay_area.csv".to_owned(),
                self.plot_table("a_gate", |e| e.a_gate),
            ),
        ];
        for (id, text) in &self.assignments {
            out.push((format!("assignment/{id}.txt"), text.clone()));
        }
        out
    }

    /// Writes the archive under `dir`, creating it if needed.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("assignment")).map_err(|e| Error::io(dir, e))?;
        for (name, text) in self.files() {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads an archive written by [`ResultArchive::export`].
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let in_file = |name: &str| {
            let path = dir.join(name);
            move |e: Error| Error::Archive {
                path: path.clone(),
                message: e.to_string(),
            }
        };
        let spec: ExperimentSpec =
            parse_json(&read("config.json")?).map_err(in_file("config.json"))?;
        let summary: Summary =
            parse_json(&read("summary.json")?).map_err(in_file("summary.json"))?;
        let seeds: Vec<SeedSolution> = read_seeds_csv(&read("seeds.csv")?)
            .map_err(in_file("seeds.csv"))?
            .into_iter()
            .enumerate()
            .map(|(k, (i, s))| {
                if k == i {
                    Ok(s)
                } else {
                    Err(Error::Parse {
                        line: k + 2,
                        message: format!("seed index {i} out of order"),
                    })
                }
            })
            .collect::<Result<_>>()
            .map_err(in_file("seeds.csv"))?;
        let frontier: Vec<usize> = read_seeds_csv(&read("frontier.csv")?)
            .map_err(in_file("frontier.csv"))?
            .into_iter()
            .map(|(i, s)| {
                if seeds.get(i) == Some(&s) {
                    Ok(i)
                } else {
                    Err(Error::Parse {
                        line: 0,
                        message: format!("frontier entry {i} does not match seeds.csv"),
                    })
                }
            })
            .collect::<Result<_>>()
            .map_err(in_file("frontier.csv"))?;
        let history = parse_history(&read("history.csv")?).map_err(in_file("history.csv"))?;
        let population = parse_records(&read("final.csv")?).map_err(in_file("final.csv"))?;
        let mut assignments = BTreeMap::new();
        for r in population.iter().filter(|r| r.rank == Some(1)) {
            let name = format!("assignment/{}.txt", r.id);
            assignments.insert(r.id, read(&name)?);
        }
        Ok(ResultArchive {
            spec,
            summary,
            seeds,
            frontier,
            history,
            population,
            assignments,
        })
    }

    fn history_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HISTORY_HEADER).expect("in-memory write");
        for h in &self.history {
            w.write_record([
                h.generation.to_string(),
                fmt_f64(h.min_d_wc),
                fmt_f64(h.min_p_total),
                fmt_f64(h.min_a_gate),
                h.front_size.to_string(),
                fmt_f64(h.hypervolume),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    fn plot_table(&self, column: &str, value: impl Fn(&Evaluation) -> f64) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["set", "id", "d_wc", column, "timing_met"])
            .expect("in-memory write");
        let mut row = |set: &str, id: String, e: &Evaluation| {
            w.write_record([
                set.to_owned(),
                id,
                fmt_f64(e.d_wc),
                fmt_f64(value(e)),
                e.timing_met.to_string(),
            ])
            .expect("in-memory write");
        };
        for (i, s) in self.seeds.iter().enumerate() {
            row("seed", i.to_string(), &s.evaluation);
        }
        for &i in &self.frontier {
            row("frontier", i.to_string(), &self.seeds[i].evaluation);
        }
        for r in &self.population {
            let set = if r.rank == Some(1) { "pareto" } else { "final" };
            row(set, r.id.to_string(), &r.evaluation);
        }
        finish(w)
    }

    fn tradeoff_text(&self) -> String {
        let s = &self.summary;
        let r = s.reference.as_array();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# objective changes relative to the reference solution"
        );
        let _ = writeln!(
            out,
            "reference d_wc={} p_total={} a_gate={}",
            fmt_f64(r[0]),
            fmt_f64(r[1]),
            fmt_f64(r[2])
        );
        let rows = [
            ("best_d_wc", s.best_d_wc),
            ("best_p_total", s.best_p_total),
            ("best_a_gate", s.best_a_gate),
            ("trade_off", s.trade_off),
        ];
        for (name, id) in rows {
            match id.and_then(|id| self.record(id)) {
                Some(rec) => {
                    let v = rec.evaluation.objectives().as_array();
                    let pct = |k: usize| 100.0 * (v[k] - r[k]) / r[k];
                    let _ = writeln!(
                        out,
                        "{name} id={} d_wc={} ({:+.2}%) p_total={} ({:+.2}%) a_gate={} ({:+.2}%)",
                        rec.id,
                        fmt_f64(v[0]),
                        pct(0),
                        fmt_f64(v[1]),
                        pct(1),
                        fmt_f64(v[2]),
                        pct(2)
                    );
                }
                None => {
                    let _ = writeln!(out, "{name} none");
                }
            }
        }
        let _ = writeln!(
            out,
            "hypervolume frontier={} final={}",
            fmt_f64(s.hv_frontier),
            fmt_f64(s.hv_final)
        );
        let _ = writeln!(
            out,
            "surviving_seeds {}/{}",
            s.survivors.len(),
            self.seeds.len()
        );
        out
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn records_csv<'a>(records: impl Iterator<Item = &'a ArchiveRecord>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER).expect("in-memory write");
    for r in records {
        let e = &r.evaluation;
        w.write_record([
            r.id.to_string(),
            r.provenance.to_string(),
            r.rank.map(|k| k.to_string()).unwrap_or_default(),
            fmt_f64(r.crowding),
            fmt_f64(e.d_wc),
            fmt_f64(e.wns),
            e.timing_met.to_string(),
            fmt_f64(e.switching),
            fmt_f64(e.internal),
            fmt_f64(e.leakage),
            fmt_f64(e.p_total),
            fmt_f64(e.a_gate),
            r.chromosome.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn table(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    r.records()
        .enumerate()
        .map(|(k, rec)| {
            rec.map_err(|e| Error::Parse {
                line: k + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    header: &[&str],
    i: usize,
    line: usize,
) -> Result<T> {
    rec[i].parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {} `{}`", header[i], &rec[i]),
    })
}

fn parse_history(text: &str) -> Result<Vec<GenerationStats>> {
    let h = &HISTORY_HEADER;
    table(text, h)?
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let line = k + 2;
            Ok(GenerationStats {
                generation: field(rec, h, 0, line)?,
                min_d_wc: field(rec, h, 1, line)?,
                min_p_total: field(rec, h, 2, line)?,
                min_a_gate: field(rec, h, 3, line)?,
                front_size: field(rec, h, 4, line)?,
                hypervolume: field(rec, h, 5, line)?,
            })
        })
        .collect()
}

fn parse_records(text: &str) -> Result<Vec<ArchiveRecord>> {
    let h = &RECORD_HEADER;
    table(text, h)?
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let line = k + 2;
            let rank = if rec[2].is_empty() {
                None
            } else {
                Some(field(rec, h, 2, line)?)
            };
            Ok(ArchiveRecord {
                id: field(rec, h, 0, line)?,
                provenance: field(rec, h, 1, line)?,
                rank,
                crowding: field(rec, h, 3, line)?,
                evaluation: Evaluation {
                    d_wc: field(rec, h, 4, line)?,
                    wns: field(rec, h, 5, line)?,
                    timing_met: field(rec, h, 6, line)?,
                    switching: field(rec, h, 7, line)?,
                    internal: field(rec, h, 8, line)?,
                    leakage: field(rec, h, 9, line)?,
                    p_total: field(rec, h, 10, line)?,
                    a_gate: field(rec, h, 11, line)?,
                },
                chromosome: field(rec, h, 12, line)?,
            })
        })
        .collect()
}

/// Non-finite floats as strings, since JSON numbers cannot hold them.
mod lossless {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
