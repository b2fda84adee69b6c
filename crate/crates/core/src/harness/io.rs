//! CSV formats: events, labels, embeddings and result tables.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{FailureRecord, Method, ReplicateValue, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::events::{Dataset, EventSequence, Record};

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?)
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn required_column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| parse_error(path, 1, format!("missing column {name:?}")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

#[derive(Default)]
struct PatientRows {
    events: Vec<(usize, f64)>,
    observation_time: Option<f64>,
}

/// Reads an event CSV (`patient_id, code_index, event_time` and an optional
/// `observation_time`) and an optional label CSV (`patient_id, label`).
///
/// Code indices must cover `0..d` densely. Without an `observation_time`
/// column a patient's window ends at their last event. A row with empty
/// `code_index` and `event_time` declares a patient without events.
pub fn ingest_events(events: &Path, labels: Option<&Path>) -> Result<Dataset> {
    ingest_events_with(events, labels, None)
}

/// As [`ingest_events`], with the code dimension fixed to `dim`; codes need
/// not be dense then but must lie below `dim`.
pub fn ingest_events_with(events: &Path, labels: Option<&Path>, dim: Option<usize>) -> Result<Dataset> {
    let mut rdr = reader(events)?;
    let headers = rdr.headers()?.clone();
    let id_col = required_column(events, &headers, "patient_id")?;
    let code_col = required_column(events, &headers, "code_index")?;
    let time_col = required_column(events, &headers, "event_time")?;
    let obs_col = column(&headers, "observation_time");

    let mut order: Vec<String> = Vec::new();
    let mut patients: HashMap<String, PatientRows> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let id = field(id_col);
        if id.is_empty() {
            return Err(parse_error(events, line, "empty patient_id"));
        }
        if !patients.contains_key(id) {
            order.push(id.to_string());
        }
        let entry = patients.entry(id.to_string()).or_default();
        if let Some(c) = obs_col {
            let raw = field(c);
            if !raw.is_empty() {
                let t: f64 = raw
                    .parse()
                    .map_err(|_| parse_error(events, line, format!("invalid observation_time {raw:?}")))?;
                if !(t.is_finite() && t > 0.0) {
                    return Err(parse_error(events, line, format!("observation_time {t} must be > 0")));
                }
                match entry.observation_time {
                    Some(prev) if prev != t => {
                        return Err(parse_error(
                            events,
                            line,
                            format!("observation_time {t} differs from {prev} given earlier for patient {id:?}"),
                        ));
                    }
                    _ => entry.observation_time = Some(t),
                }
            }
        }
        let (code, time) = (field(code_col), field(time_col));
        if code.is_empty() && time.is_empty() {
            continue;
        }
        let code: usize = code
            .parse()
            .map_err(|_| parse_error(events, line, format!("invalid code_index {code:?}")))?;
        let time: f64 = time
            .parse()
            .map_err(|_| parse_error(events, line, format!("invalid event_time {time:?}")))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(parse_error(events, line, format!("event_time {time} must be finite and >= 0")));
        }
        if let Some(d) = dim {
            if code >= d {
                return Err(parse_error(events, line, format!("code_index {code} is not below dimension {d}")));
            }
        }
        entry.events.push((code, time));
    }

    let label_map = match labels {
        Some(path) => read_labels(path)?,
        None => Vec::new(),
    };
    for (id, _) in &label_map {
        if !patients.contains_key(id) {
            order.push(id.clone());
            patients.insert(id.clone(), PatientRows::default());
        }
    }
    if order.is_empty() {
        return Dataset::new(Vec::new());
    }

    let used: Vec<usize> = patients.values().flat_map(|p| p.events.iter().map(|e| e.0)).collect();
    let d = match dim {
        Some(d) => d,
        None => {
            let d = used.iter().max().map_or(0, |m| m + 1);
            if d == 0 {
                return Err(Error::InvalidEvents(
                    "no events to infer the code dimension from; pass it explicitly".into(),
                ));
            }
            let mut seen = vec![false; d];
            for &c in &used {
                seen[c] = true;
            }
            let missing: Vec<usize> = (0..d).filter(|&c| !seen[c]).collect();
            if !missing.is_empty() {
                let shown: Vec<String> = missing.iter().take(5).map(|c| c.to_string()).collect();
                return Err(Error::InvalidEvents(format!(
                    "code indices are not dense in [0, {d}): {} unused (e.g. {}); remap the {} codes that occur \
                     to 0..{} or pass the dimension explicitly",
                    missing.len(),
                    shown.join(", "),
                    d - missing.len(),
                    d - missing.len()
                )));
            }
            d
        }
    };

    let horizon = |p: &PatientRows| {
        p.observation_time
            .or_else(|| p.events.iter().map(|e| e.1).reduce(f64::max))
    };
    // patients known only from the label file get the longest window seen
    let fallback = patients.values().filter_map(horizon).reduce(f64::max);
    let labels: HashMap<String, String> = label_map.into_iter().collect();
    let mut records = Vec::with_capacity(order.len());
    for id in order {
        let p = &patients[&id];
        let window_end = horizon(p).or(fallback).unwrap_or(0.0);
        if !(window_end > 0.0) {
            return Err(Error::InvalidEvents(format!(
                "patient {id:?} has an empty observation window; add an observation_time column"
            )));
        }
        let mut per_code = vec![Vec::new(); d];
        for &(c, t) in &p.events {
            per_code[c].push(t);
        }
        let events = EventSequence::from_unsorted(window_end, per_code)
            .map_err(|e| Error::InvalidEvents(format!("patient {id:?}: {e}")))?;
        records.push(Record {
            label: labels.get(&id).cloned(),
            id,
            events,
        });
    }
    Dataset::new(records)
}

/// Reads `patient_id, label` rows in file order.
pub fn read_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let id_col = required_column(path, &headers, "patient_id")?;
    let label_col = required_column(path, &headers, "label")?;
    let mut seen: HashMap<String, String> = HashMap::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = rec.get(id_col).unwrap_or("").to_string();
        let label = rec.get(label_col).unwrap_or("").to_string();
        if id.is_empty() || label.is_empty() {
            return Err(parse_error(path, line, "empty patient_id or label"));
        }
        match seen.get(&id) {
            Some(prev) if *prev != label => {
                return Err(parse_error(path, line, format!("patient {id:?} relabelled {prev:?} -> {label:?}")));
            }
            Some(_) => continue,
            None => {
                seen.insert(id.clone(), label.clone());
                out.push((id, label));
            }
        }
    }
    Ok(out)
}

/// Writes one row per event in time order per patient, plus the patient's
/// observation time so that re-ingesting restores every window exactly.
pub fn write_events_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["patient_id", "code_index", "event_time", "observation_time"])?;
    for r in &data.records {
        let obs = r.observation_time().to_string();
        let events = r.events.flatten();
        if events.is_empty() {
            w.write_record([r.id.as_str(), "", "", &obs])?;
        }
        for (t, j) in events {
            w.write_record([r.id.as_str(), &j.to_string(), &t.to_string(), &obs])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `patient_id, label` for every labelled record.
pub fn write_labels_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["patient_id", "label"])?;
    for r in &data.records {
        if let Some(label) = &r.label {
            w.write_record([r.id.as_str(), label])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub id: String,
    pub method: Option<Method>,
    pub features: Vec<f64>,
}

/// Columns `patient_id, [method,] f_1..f_m`; the method column appears when
/// any row carries a method, and shorter rows are padded with empty cells.
pub fn write_embeddings(rows: &[EmbeddingRow], path: &Path) -> Result<()> {
    let with_method = rows.iter().any(|r| r.method.is_some());
    let width = rows.iter().map(|r| r.features.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["patient_id".to_string()];
    if with_method {
        header.push("method".into());
    }
    header.extend((1..=width).map(|i| format!("f_{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.id.clone()];
        if with_method {
            rec.push(r.method.map_or(String::new(), |m| m.name().to_string()));
        }
        rec.extend(r.features.iter().map(|v| v.to_string()));
        rec.resize(header.len(), String::new());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRow>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let id_col = required_column(path, &headers, "patient_id")?;
    let method_col = column(&headers, "method");
    let mut feature_cols = Vec::new();
    for i in 1.. {
        match column(&headers, &format!("f_{i}")) {
            Some(c) => feature_cols.push(c),
            None => break,
        }
    }
    if feature_cols.is_empty() {
        return Err(parse_error(path, 1, "no feature columns f_1, f_2, ..."));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = rec.get(id_col).unwrap_or("").to_string();
        let method = match method_col.map(|c| rec.get(c).unwrap_or("")) {
            None | Some("") => None,
            Some(name) => Some(
                Method::parse(name).ok_or_else(|| parse_error(path, line, format!("unknown method {name:?}")))?,
            ),
        };
        let cells: Vec<&str> = feature_cols.iter().map(|&c| rec.get(c).unwrap_or("")).collect();
        let used = cells.iter().rposition(|c| !c.is_empty()).map_or(0, |p| p + 1);
        let features = cells[..used]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| parse_error(path, line, format!("invalid feature value {c:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(EmbeddingRow { id, method, features });
    }
    Ok(out)
}

fn write_serialized<T: Serialize>(rows: &[T], headers: &[&str], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(headers)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_serialized<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

const ROW_HEADERS: [&str; 10] = ["kernel", "n", "t", "delta", "method", "metric", "mean", "se", "replications", "failures"];
const REPLICATE_HEADERS: [&str; 8] = ["kernel", "n", "t", "delta", "method", "metric", "replication", "value"];
const FAILURE_HEADERS: [&str; 7] = ["kernel", "n", "t", "delta", "replication", "method", "message"];

pub(super) fn write_result_csvs(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths = [dir.join("results.csv"), dir.join("replicates.csv"), dir.join("failures.csv")];
    write_serialized(&table.rows, &ROW_HEADERS, &paths[0])?;
    write_serialized(&table.replicates, &REPLICATE_HEADERS, &paths[1])?;
    write_serialized(&table.failures, &FAILURE_HEADERS, &paths[2])?;
    Ok(paths.to_vec())
}

/// Reads back the three CSVs written by `export_results`.
pub fn read_results(dir: &Path) -> Result<ResultTable> {
    Ok(ResultTable {
        rows: read_serialized::<ResultRow>(&dir.join("results.csv"))?,
        replicates: read_serialized::<ReplicateValue>(&dir.join("replicates.csv"))?,
        failures: read_serialized::<FailureRecord>(&dir.join("failures.csv"))?,
    })
}
