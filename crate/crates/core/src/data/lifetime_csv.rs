use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::{write_atomic, Dataset};
use crate::error::{Error, Result};
use crate::model::{Event, Lifetime};

const KEY_COLUMNS: [&str; 4] = ["lifetime_id", "unit_id", "t", "event"];
const NULL_TOKENS: [&str; 3] = ["", "NA", "null"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Replace missing values with the previous step's value of the same
    /// lifetime. A missing value on the first step is still an error.
    pub forward_fill: bool,
}

struct Row {
    t: usize,
    event: u8,
    values: Vec<Option<f64>>,
    line: u64,
}

struct Group {
    id: String,
    unit_id: String,
    rows: Vec<Row>,
}

pub fn read_lifetimes_csv(path: &Path, opts: IngestOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::data(path, e.to_string()))?;
    parse_lifetimes(file, path, opts)
}

/// Parses lifetime CSV from any reader; `source` names it in errors.
pub fn parse_lifetimes<R: Read>(reader: R, source: &Path, opts: IngestOptions) -> Result<Dataset> {
    let err = |msg: String| Error::data(source, msg);
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(err(e.to_string())),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(err("file is empty".into()));
    }
    for (i, want) in KEY_COLUMNS.iter().enumerate() {
        if headers.get(i) != Some(*want) {
            return Err(err(format!(
                "column {} must be {want:?}, found {:?}",
                i + 1,
                headers.get(i).unwrap_or("")
            )));
        }
    }
    let feature_names: Vec<String> = headers.iter().skip(4).map(str::to_string).collect();
    if feature_names.is_empty() {
        return Err(err(
            "no feature columns after lifetime_id,unit_id,t,event".into()
        ));
    }
    for (i, name) in feature_names.iter().enumerate() {
        if name.is_empty() {
            return Err(err(format!("feature column {} has no name", i + 5)));
        }
        if feature_names[..i].contains(name) {
            return Err(err(format!("duplicate feature column {name:?}")));
        }
    }

    let mut groups: Vec<Group> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = &record[0];
        if id.is_empty() {
            return Err(err(format!("line {line}: empty lifetime_id")));
        }
        let t: usize = record[2].parse().ok().filter(|t| *t >= 1).ok_or_else(|| {
            err(format!(
                "line {line}: t must be a positive integer, found {:?}",
                &record[2]
            ))
        })?;
        let event: u8 = record[3].parse().ok().filter(|e| *e <= 2).ok_or_else(|| {
            err(format!(
                "line {line}: event must be 0, 1 or 2, found {:?}",
                &record[3]
            ))
        })?;
        let mut values = Vec::with_capacity(feature_names.len());
        for (k, field) in record.iter().skip(4).enumerate() {
            if NULL_TOKENS.contains(&field) {
                values.push(None);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                err(format!(
                    "line {line}: {} is not a number: {field:?}",
                    feature_names[k]
                ))
            })?;
            if !v.is_finite() {
                return Err(err(format!(
                    "line {line}: {} is not finite",
                    feature_names[k]
                )));
            }
            values.push(Some(v));
        }
        let g = *index.entry(id.to_string()).or_insert_with(|| {
            groups.push(Group {
                id: id.to_string(),
                unit_id: record[1].to_string(),
                rows: Vec::new(),
            });
            groups.len() - 1
        });
        if groups[g].unit_id != record[1] {
            return Err(err(format!(
                "line {line}: lifetime {id} changes unit_id from {:?} to {:?}",
                groups[g].unit_id, &record[1]
            )));
        }
        groups[g].rows.push(Row {
            t,
            event,
            values,
            line,
        });
    }
    if groups.is_empty() {
        return Err(err("no data rows".into()));
    }

    let p = feature_names.len();
    let mut lifetimes = Vec::with_capacity(groups.len());
    for mut g in groups {
        g.rows.sort_by_key(|r| r.t);
        for pair in g.rows.windows(2) {
            if pair[0].t == pair[1].t {
                return Err(err(format!(
                    "lifetime {}: duplicate t = {} (lines {} and {})",
                    g.id, pair[0].t, pair[0].line, pair[1].line
                )));
            }
        }
        if let Some((k, r)) = g.rows.iter().enumerate().find(|(k, r)| r.t != k + 1) {
            return Err(err(format!(
                "lifetime {}: time steps are not contiguous, expected t = {} but found t = {}",
                g.id,
                k + 1,
                r.t
            )));
        }
        let last = g.rows.len() - 1;
        if let Some(r) = g.rows[..last].iter().find(|r| r.event != 0) {
            return Err(err(format!(
                "lifetime {}: event {} at t = {} before the last step",
                g.id, r.event, r.t
            )));
        }
        let event = match g.rows[last].event {
            1 => Event::Failed,
            2 => Event::Censored,
            _ => {
                return Err(err(format!(
                    "lifetime {}: last step t = {} must have event 1 or 2",
                    g.id, g.rows[last].t
                )))
            }
        };
        let mut covariates: Vec<f64> = Vec::with_capacity(g.rows.len() * p);
        for (j, r) in g.rows.iter().enumerate() {
            for (k, v) in r.values.iter().enumerate() {
                let v = match v {
                    Some(v) => *v,
                    None if opts.forward_fill && j > 0 => covariates[(j - 1) * p + k],
                    None => {
                        return Err(err(format!(
                            "lifetime {}: missing {} at t = {} (line {})",
                            g.id, feature_names[k], r.t, r.line
                        )))
                    }
                };
                covariates.push(v);
            }
        }
        lifetimes.push(Lifetime::new(g.id, g.unit_id, p, covariates, event)?);
    }
    Dataset::new(lifetimes, feature_names)
}

fn format_value(v: f64) -> String {
    // Debug formatting is the shortest string that parses back to `v`
    format!("{v:?}")
}

/// Lifetime CSV text for `ds`.
pub fn render_lifetimes(ds: &Dataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(ds.feature_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for life in &ds.lifetimes {
        let last = life.len();
        for (j, row) in life.rows().enumerate() {
            let t = j + 1;
            let event = match (t == last, life.event()) {
                (false, _) => "0",
                (true, Event::Failed) => "1",
                (true, Event::Censored) => "2",
            };
            let mut rec = vec![
                life.id().to_string(),
                life.unit_id().to_string(),
                t.to_string(),
                event.to_string(),
            ];
            rec.extend(row.iter().map(|v| format_value(*v)));
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_lifetimes_csv(path: &Path, ds: &Dataset) -> Result<()> {
    write_atomic(path, &render_lifetimes(ds)?)
}
