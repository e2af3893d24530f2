//! On-disk formats.
//!
//! Instances are JSON Lines: a header `{"scale", "seed", "rng", "adversary"}`
//! followed by one `{"id", "arrival", "size_num", "duration"}` record per
//! item, with `"duration": null` for deferred items. Traces are JSON Lines
//! too: a `{"scale", "policy"}` header and one event per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use dynbin_core::engine::{SimulationResult, TraceRecord};
use dynbin_core::instance::AdversarySpec;
use dynbin_core::{Instance, Item, ItemId, ScaledSize};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing header line")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceHeader {
    pub scale: u64,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversarySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: ItemId,
    pub arrival: f64,
    pub size_num: u64,
    pub duration: Option<f64>,
}

fn json_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
}

fn parse<T: for<'de> Deserialize<'de>>(line: usize, text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|source| FormatError::Json { line, source })
}

pub fn read_instance<R: Read>(reader: R) -> Result<Instance, FormatError> {
    let mut lines = json_lines(BufReader::new(reader));
    let (n, first) = lines.next().ok_or(FormatError::MissingHeader)?;
    let header: InstanceHeader = parse(n, &first?)?;
    let mut items = Vec::new();
    for (n, line) in lines {
        let r: ItemRecord = parse(n, &line?)?;
        items.push(Item {
            id: r.id,
            arrival: r.arrival,
            size: ScaledSize::new(r.size_num, header.scale),
            duration: r.duration,
        });
    }
    Ok(Instance {
        items,
        scale: header.scale,
        seed: header.seed,
        rng: header.rng,
        adversary: header.adversary,
    })
}

pub fn write_instance<W: Write>(inst: &Instance, mut w: W) -> Result<(), FormatError> {
    let header = InstanceHeader {
        scale: inst.scale,
        seed: inst.seed,
        rng: inst.rng.clone(),
        adversary: inst.adversary.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(|source| FormatError::Json { line: 1, source })?;
    writeln!(w)?;
    for (i, it) in inst.items.iter().enumerate() {
        let rec = ItemRecord {
            id: it.id,
            arrival: it.arrival,
            size_num: it.size.num,
            duration: it.duration,
        };
        serde_json::to_writer(&mut w, &rec).map_err(|source| FormatError::Json { line: i + 2, source })?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance, FormatError> {
    read_instance(File::open(path)?)
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<(), FormatError> {
    write_instance(inst, BufWriter::new(File::create(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub scale: u64,
    pub policy: String,
}

pub fn write_trace<W: Write>(result: &SimulationResult, mut w: W) -> Result<(), FormatError> {
    let header = TraceHeader {
        scale: result.scale,
        policy: result.policy.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(|source| FormatError::Json { line: 1, source })?;
    writeln!(w)?;
    for (i, rec) in result.trace.iter().enumerate() {
        serde_json::to_writer(&mut w, rec).map_err(|source| FormatError::Json { line: i + 2, source })?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<(TraceHeader, Vec<TraceRecord>), FormatError> {
    let mut lines = json_lines(BufReader::new(reader));
    let (n, first) = lines.next().ok_or(FormatError::MissingHeader)?;
    let header: TraceHeader = parse(n, &first?)?;
    let mut records = Vec::new();
    for (n, line) in lines {
        records.push(parse(n, &line?)?);
    }
    Ok((header, records))
}

/// Compact JSON form of a run: totals, ledger and step function. The trace
/// is left out; it has its own file.
#[derive(Debug, Clone, Serialize)]
pub struct ResultSummary<'a> {
    pub policy: &'a str,
    pub scale: u64,
    pub delay_cost: f64,
    pub total_active_time: f64,
    pub phases: u32,
    pub migrations: dynbin_core::engine::MigrationCounts,
    pub ledger: &'a [dynbin_core::engine::MigrationEntry],
    pub steps: &'a [dynbin_core::engine::Step],
    pub items: &'a [dynbin_core::engine::ItemOutcome],
}

impl<'a> ResultSummary<'a> {
    pub fn new(r: &'a SimulationResult) -> Self {
        ResultSummary {
            policy: &r.policy,
            scale: r.scale,
            delay_cost: r.delay_cost,
            total_active_time: r.total_active_time,
            phases: r.phases,
            migrations: r.migration_counts(),
            ledger: &r.ledger.entries,
            steps: &r.steps,
            items: &r.items,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dynbin_core::algorithms::{AlgorithmSpec, FirstFit};
    use dynbin_core::engine::{simulate, SimOptions};
    use dynbin_core::generators::gen_fig2;

    #[test]
    fn instance_roundtrip() {
        let (inst, _) = gen_fig2(3, 5.0).unwrap();
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("\"duration\":null"));
        assert_eq!(read_instance(&buf[..]).unwrap(), inst);
    }

    #[test]
    fn trace_roundtrip_with_labels() {
        let inst = dynbin_core::generators::gen_uniform(
            &dynbin_core::generators::UniformSpec {
                n: 40,
                ..Default::default()
            },
            3,
        )
        .unwrap();
        let spec = AlgorithmSpec::Alg2 {
            alpha: dynbin_core::Ratio::new(1, 4),
            order: Default::default(),
        };
        let mut p = spec.build().unwrap();
        let r = simulate(&inst, p.as_mut(), &SimOptions::default(), None).unwrap();
        let mut buf = Vec::new();
        write_trace(&r, &mut buf).unwrap();
        let (h, recs) = read_trace(&buf[..]).unwrap();
        assert_eq!(h.scale, inst.scale);
        assert_eq!(recs, r.trace);

        let r = simulate(&inst, &mut FirstFit, &SimOptions::default(), None).unwrap();
        let json = serde_json::to_string(&ResultSummary::new(&r)).unwrap();
        assert!(json.contains("\"total_active_time\""));
    }

    #[test]
    fn header_is_required() {
        assert!(matches!(read_instance(&b""[..]), Err(FormatError::MissingHeader)));
        assert!(matches!(
            read_instance(&b"{\"scale\":4,\"seed\":null}\n{\"id\":0}\n"[..]),
            Err(FormatError::Json { line: 2, .. })
        ));
    }
}
