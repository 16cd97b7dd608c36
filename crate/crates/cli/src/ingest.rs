//! Scenario files: JSON `{"probabilities": [...], "capitals": [[...], ...]}`
//! or CSV with one row per scenario and an optional leading `p` column.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use grouprisk_core::scenario::ScenarioTable;
use grouprisk_core::{RandomVector, ScenarioSpace};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct JsonScenarios {
    #[serde(default)]
    probabilities: Option<Vec<f64>>,
    capitals: Vec<Vec<f64>>,
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn ingest_scenarios(path: &Path) -> Result<RandomVector> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if is_csv(path) {
        parse_csv(&text)
    } else {
        parse_json(&text)
    }
}

fn build(probabilities: Option<Vec<f64>>, rows: Vec<Vec<f64>>, names: &[String]) -> Result<RandomVector> {
    if rows.is_empty() {
        bail!("no scenarios");
    }
    let d = rows[0].len();
    if d == 0 {
        bail!("scenarios have no capital columns");
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != d {
            bail!("row {}: expected {d} capital values, found {}", r + 1, row.len());
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            bail!("row {}, column {}: value is not finite", r + 1, names[c]);
        }
    }
    let space = match probabilities {
        Some(p) => {
            if p.len() != rows.len() {
                bail!("{} probabilities for {} scenarios", p.len(), rows.len());
            }
            ScenarioSpace::new(p).map_err(|e| anyhow!("{e}"))?
        }
        None => ScenarioSpace::uniform(rows.len()).map_err(|e| anyhow!("{e}"))?,
    };
    RandomVector::from_rows(space, &rows).map_err(|e| anyhow!("{e}"))
}

pub fn parse_json(text: &str) -> Result<RandomVector> {
    let raw: JsonScenarios = serde_json::from_str(text).context("malformed scenario JSON")?;
    let d = raw.capitals.first().map_or(0, Vec::len);
    let names: Vec<String> = (1..=d).map(|k| format!("c{k}")).collect();
    build(raw.probabilities, raw.capitals, &names)
}

pub fn parse_csv(text: &str) -> Result<RandomVector> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers().context("malformed CSV header")?.iter().map(String::from).collect();
    let has_p = headers.first().is_some_and(|h| h.eq_ignore_ascii_case("p"));
    let names: Vec<String> = headers.iter().skip(usize::from(has_p)).cloned().collect();
    let mut probs = Vec::new();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("row {}: malformed CSV record", r + 1))?;
        if record.len() != headers.len() {
            bail!("row {}: expected {} fields, found {}", r + 1, headers.len(), record.len());
        }
        let mut row = Vec::with_capacity(names.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| anyhow!("row {}, column {}: cannot parse '{field}' as a number", r + 1, headers[c]))?;
            if has_p && c == 0 {
                probs.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    build(has_p.then_some(probs), rows, &names)
}

pub fn to_json(c: &RandomVector) -> Result<String> {
    let table = ScenarioTable {
        probabilities: c.space().probabilities().to_vec(),
        capitals: c.to_rows(),
    };
    Ok(serde_json::to_string_pretty(&table)?)
}

pub fn to_csv(c: &RandomVector) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["p".to_string()];
    header.extend((1..=c.dim()).map(|k| format!("c{k}")));
    w.write_record(&header)?;
    for (p, row) in c.space().probabilities().iter().zip(c.rows()) {
        let mut rec = vec![format!("{p:?}")];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes `c` as CSV or JSON depending on the extension.
pub fn export_scenarios(c: &RandomVector, path: &Path) -> Result<()> {
    let text = if is_csv(path) { to_csv(c)? } else { to_json(c)? };
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_csv_agree() {
        let j = parse_json(r#"{"probabilities":[0.5,0.5],"capitals":[[1,2],[3,4]]}"#).unwrap();
        let c = parse_csv("p,c1,c2\n0.5,1,2\n0.5,3,4\n").unwrap();
        assert_eq!(j.values(), c.values());
        assert_eq!(j.space().probabilities(), c.space().probabilities());
        assert_eq!((j.scenarios(), j.dim()), (2, 2));
    }

    #[test]
    fn missing_probabilities_mean_equal_weights() {
        let c = parse_csv("c1,c2\n1,2\n3,4\n5,6\n").unwrap();
        assert!(c.space().is_equiprobable());
    }

    #[test]
    fn errors_name_the_cell() {
        let e = parse_csv("p,c1,c2\n0.5,1,x\n0.5,3,4\n").unwrap_err().to_string();
        assert!(e.contains("row 1, column c2"), "{e}");
        let e = parse_csv("p,c1,c2\n0.5,1,inf\n0.5,3,4\n").unwrap_err().to_string();
        assert!(e.contains("row 1, column c2") && e.contains("not finite"), "{e}");
        let e = parse_json(r#"{"probabilities":[0.4,0.4],"capitals":[[1,2],[3,4]]}"#).unwrap_err().to_string();
        assert!(e.contains("sum to 0.8"), "{e}");
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let c = parse_json(r#"{"probabilities":[0.1,0.9],"capitals":[[0.1,-2.718281828459045],[3e-17,4]]}"#).unwrap();
        let back = parse_csv(&to_csv(&c).unwrap()).unwrap();
        assert_eq!(back.values(), c.values());
        assert_eq!(back.space().probabilities(), c.space().probabilities());
        let back = parse_json(&to_json(&c).unwrap()).unwrap();
        assert_eq!(back.values(), c.values());
    }
}
