//! CSV formats for results, audiograms and questionnaires.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use super::{item_key, Audiogram, HearingSelfRating, QuestionnaireResponse, SpeechProblemFrequency};
use crate::session::{SatisfactionLabel, TrialResult, SCALE_MAX};
use crate::stimulus::{DeMethod, ProdType};

pub const RESULTS_HEADER: [&str; 10] = [
    "pid",
    "item_number",
    "item_label",
    "de_method",
    "prod_type",
    "chosen_offset_lu",
    "chosen_ld_lu",
    "satisfaction_value",
    "satisfaction_label",
    "valid",
];
pub const AUDIOGRAM_HEADER: [&str; 4] = ["pid", "frequency_hz", "left_dbhl", "right_dbhl"];
pub const QUESTIONNAIRE_HEADER: [&str; 8] = ["pid", "q0", "q1", "q2", "q3", "q4", "q5", "q6"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line in the file.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("{} malformed row(s), first at line {}: {}", .0.len(), .0[0].line, .0[0].message)]
    Rows(Vec<RowError>),
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), CsvError> {
    let found = reader.headers()?.clone();
    if found.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(CsvError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

/// Reads every row with `parse`, collecting all malformed rows.
fn read_rows<T>(
    input: impl Read,
    header: &[&str],
    mut parse: impl FnMut(&csv::StringRecord) -> Result<T, String>,
) -> Result<Vec<T>, CsvError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut reader, header)?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let parsed = if record.len() != header.len() {
            Err(format!("expected {} fields, found {}", header.len(), record.len()))
        } else {
            parse(&record)
        };
        match parsed {
            Ok(v) => out.push(v),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CsvError::Rows(errors))
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, String> {
    let raw = rec[i].trim();
    raw.parse().map_err(|_| format!("{name}: cannot parse {raw:?}"))
}

fn finite(rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64, String> {
    let v: f64 = field(rec, i, name)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name}: not finite"))
    }
}

fn nonempty(rec: &csv::StringRecord, i: usize, name: &str) -> Result<String, String> {
    let v = rec[i].trim();
    if v.is_empty() {
        Err(format!("{name}: empty"))
    } else {
        Ok(v.to_string())
    }
}

/// Writes results rows, preceded by the header when `header` is set.
pub fn write_results_csv(out: impl Write, results: &[TrialResult], header: bool) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(RESULTS_HEADER)?;
    }
    for r in results {
        w.write_record([
            r.participant_id.clone(),
            r.item_number.to_string(),
            r.item_label.clone(),
            r.de_method.code().to_string(),
            r.prod_type.code().to_string(),
            format!("{:.1}", r.chosen_offset + 0.0),
            format!("{:.1}", r.chosen_ld + 0.0),
            r.satisfaction_value.to_string(),
            r.satisfaction_label.to_string(),
            r.valid.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parses a results file. `item_id` is rebuilt as `<label>-<method>`.
pub fn read_results_csv(input: impl Read) -> Result<Vec<TrialResult>, CsvError> {
    read_rows(input, &RESULTS_HEADER, |rec| {
        let de_method = DeMethod::from_code(rec[3].trim()).ok_or_else(|| format!("de_method: unknown {:?}", &rec[3]))?;
        let prod_type = ProdType::from_code(rec[4].trim()).ok_or_else(|| format!("prod_type: unknown {:?}", &rec[4]))?;
        let item_label = nonempty(rec, 2, "item_label")?;
        let satisfaction_value: u8 = field(rec, 7, "satisfaction_value")?;
        if satisfaction_value > SCALE_MAX {
            return Err(format!("satisfaction_value: {satisfaction_value} is above {SCALE_MAX}"));
        }
        let satisfaction_label =
            SatisfactionLabel::parse(rec[8].trim()).ok_or_else(|| format!("satisfaction_label: unknown {:?}", &rec[8]))?;
        Ok(TrialResult {
            participant_id: nonempty(rec, 0, "pid")?,
            item_number: field(rec, 1, "item_number")?,
            item_id: item_key(&item_label, de_method),
            item_label,
            de_method,
            prod_type,
            chosen_offset: finite(rec, 5, "chosen_offset_lu")?,
            chosen_ld: finite(rec, 6, "chosen_ld_lu")?,
            satisfaction_value,
            satisfaction_label,
            valid: field(rec, 9, "valid")?,
        })
    })
}

/// One row per (participant, frequency); rows may come in any order.
pub fn read_audiograms_csv(input: impl Read) -> Result<Vec<Audiogram>, CsvError> {
    let rows = read_rows(input, &AUDIOGRAM_HEADER, |rec| {
        Ok((
            nonempty(rec, 0, "pid")?,
            finite(rec, 1, "frequency_hz")?,
            finite(rec, 2, "left_dbhl")?,
            finite(rec, 3, "right_dbhl")?,
            rec.position().map_or(0, |p| p.line()),
        ))
    })?;
    let mut by_pid: BTreeMap<String, Vec<(f64, f64, f64, u64)>> = BTreeMap::new();
    for (pid, f, l, r, line) in rows {
        by_pid.entry(pid).or_default().push((f, l, r, line));
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (pid, mut rows) in by_pid {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let line = rows.iter().map(|r| r.3).max().unwrap_or(0);
        match Audiogram::new(
            pid,
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
        ) {
            Ok(a) => out.push(a),
            Err(e) => errors.push(RowError { line, message: e.to_string() }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CsvError::Rows(errors))
    }
}

pub fn write_audiograms_csv(out: impl Write, audiograms: &[Audiogram]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AUDIOGRAM_HEADER)?;
    for a in audiograms {
        for i in 0..a.frequencies().len() {
            w.write_record([
                a.participant_id().to_string(),
                a.frequencies()[i].to_string(),
                a.left()[i].to_string(),
                a.right()[i].to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_questionnaire_csv(input: impl Read) -> Result<Vec<QuestionnaireResponse>, CsvError> {
    read_rows(input, &QUESTIONNAIRE_HEADER, |rec| {
        let text = |i: usize| rec[i].to_string();
        Ok(QuestionnaireResponse {
            participant_id: nonempty(rec, 0, "pid")?,
            q0: HearingSelfRating::parse(&rec[1]).ok_or_else(|| format!("q0: unknown answer {:?}", &rec[1]))?,
            q1: text(2),
            q2: text(3),
            q3: text(4),
            q4: text(5),
            q5: SpeechProblemFrequency::parse(&rec[6]).ok_or_else(|| format!("q5: unknown answer {:?}", &rec[6]))?,
            q6: text(7),
        })
    })
}

pub fn write_questionnaire_csv(out: impl Write, responses: &[QuestionnaireResponse]) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::NonNumeric).from_writer(out);
    w.write_record(QUESTIONNAIRE_HEADER)?;
    for r in responses {
        w.write_record([
            r.participant_id.as_str(),
            r.q0.code(),
            &r.q1,
            &r.q2,
            &r.q3,
            &r.q4,
            r.q5.code(),
            &r.q6,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
