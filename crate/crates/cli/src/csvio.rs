//! The two dataset formats:
//!
//! ```text
//! user_id,item_id,trial,rating
//! user_id,item_id,w1,w2,w3,w4,w5
//! ```

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use humanrate_core::{PairKey, PdfRating, RatingScale, ReRatingSample};

use crate::error::{io_err, CliError, Result};

pub const RERATING_HEADER: [&str; 4] = ["user_id", "item_id", "trial", "rating"];
pub const PDFRATING_HEADER: [&str; 7] = ["user_id", "item_id", "w1", "w2", "w3", "w4", "w5"];

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

fn format_err(source: &str, line: u64, message: impl Into<String>) -> CliError {
    CliError::Format {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

fn csv_err(source: &str, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    format_err(source, line, e.to_string())
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(io_err(path))
}

fn records<R: Read>(
    reader: R,
    source: &str,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord)>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let found = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(format_err(
            source,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let source = source.to_string();
    Ok(rdr.into_records().map(move |r| {
        let rec = r.map_err(|e| csv_err(&source, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        Ok((line, rec))
    }))
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    source: &str,
    line: u64,
) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| format_err(source, line, format!("invalid {name} {raw:?}")))
}

fn ident(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    source: &str,
    line: u64,
) -> Result<String> {
    let raw = rec.get(idx).unwrap_or("").trim();
    if raw.is_empty() {
        return Err(format_err(source, line, format!("empty {name}")));
    }
    Ok(raw.to_string())
}

/// Groups rows by (user, item), ordered by key, trials ordered by index.
pub fn read_rerating<R: Read>(reader: R, source: &str) -> Result<Ingested<ReRatingSample>> {
    let scale = RatingScale::FIVE_STAR;
    let mut groups: BTreeMap<PairKey, BTreeMap<u32, u8>> = BTreeMap::new();
    for row in records(reader, source, &RERATING_HEADER)? {
        let (line, rec) = row?;
        let key = PairKey::new(
            ident(&rec, 0, "user_id", source, line)?,
            ident(&rec, 1, "item_id", source, line)?,
        );
        let trial: u32 = field(&rec, 2, "trial", source, line)?;
        let rating: u8 = field(&rec, 3, "rating", source, line)?;
        if !scale.contains(rating) {
            return Err(format_err(
                source,
                line,
                format!("rating {rating} outside {}..{}", scale.min(), scale.max()),
            ));
        }
        match groups.entry(key.clone()).or_default().entry(trial) {
            Entry::Occupied(_) => {
                return Err(format_err(
                    source,
                    line,
                    format!("duplicate trial {trial} for {key}"),
                ));
            }
            Entry::Vacant(v) => {
                v.insert(rating);
            }
        }
    }
    let mut warnings = Vec::new();
    if groups.is_empty() {
        warnings.push(format!("{source}: no re-rating rows"));
    }
    let records = groups
        .into_iter()
        .map(|(key, trials)| ReRatingSample::new(key, trials.into_values().collect(), scale))
        .collect::<humanrate_core::Result<_>>()?;
    Ok(Ingested { records, warnings })
}

pub fn read_pdfrating<R: Read>(reader: R, source: &str) -> Result<Ingested<PdfRating>> {
    let scale = RatingScale::FIVE_STAR;
    let mut seen = BTreeMap::new();
    for row in records(reader, source, &PDFRATING_HEADER)? {
        let (line, rec) = row?;
        let key = PairKey::new(
            ident(&rec, 0, "user_id", source, line)?,
            ident(&rec, 1, "item_id", source, line)?,
        );
        let weights = (0..5)
            .map(|j| field::<u8>(&rec, 2 + j, &format!("w{}", j + 1), source, line))
            .collect::<Result<Vec<_>>>()?;
        let rating = PdfRating::new(key.clone(), weights, scale)
            .map_err(|e| format_err(source, line, format!("{key}: {e}")))?;
        if seen.insert(key.clone(), rating).is_some() {
            return Err(format_err(
                source,
                line,
                format!("duplicate pdf-rating for {key}"),
            ));
        }
    }
    let mut warnings = Vec::new();
    if seen.is_empty() {
        warnings.push(format!("{source}: no pdf-rating rows"));
    }
    Ok(Ingested {
        records: seen.into_values().collect(),
        warnings,
    })
}

pub fn ingest_rerating_csv(path: &Path) -> Result<Ingested<ReRatingSample>> {
    read_rerating(open(path)?, &path.display().to_string())
}

pub fn ingest_pdfrating_csv(path: &Path) -> Result<Ingested<PdfRating>> {
    read_pdfrating(open(path)?, &path.display().to_string())
}

pub fn rerating_rows(samples: &[ReRatingSample]) -> Vec<Vec<String>> {
    samples
        .iter()
        .flat_map(|s| {
            s.trials().iter().enumerate().map(move |(t, r)| {
                vec![
                    s.key().user.clone(),
                    s.key().item.clone(),
                    (t + 1).to_string(),
                    r.to_string(),
                ]
            })
        })
        .collect()
}

pub fn pdfrating_rows(ratings: &[PdfRating]) -> Vec<Vec<String>> {
    ratings
        .iter()
        .map(|r| {
            let mut row = vec![r.key().user.clone(), r.key().item.clone()];
            row.extend(r.weights().iter().map(u8::to_string));
            row
        })
        .collect()
}

pub fn write_rows<W: Write>(writer: W, header: &[&str], rows: &[Vec<String>]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rerating_csv(path: &Path, samples: &[ReRatingSample]) -> Result<()> {
    write_file(path, &RERATING_HEADER, &rerating_rows(samples))
}

pub fn write_pdfrating_csv(path: &Path, ratings: &[PdfRating]) -> Result<()> {
    write_file(path, &PDFRATING_HEADER, &pdfrating_rows(ratings))
}

pub(crate) fn write_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_rows(std::io::BufWriter::new(file), header, rows).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => format_err(&path.display().to_string(), 0, format!("{other:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rr(text: &str) -> Result<Ingested<ReRatingSample>> {
        read_rerating(text.as_bytes(), "mem")
    }

    #[test]
    fn groups_and_orders_trials() {
        let got = rr("user_id,item_id,trial,rating\nu1,i1,2,4\nu1,i1,1,3\nu0,i1,1,5\n").unwrap();
        assert_eq!(got.records.len(), 2);
        assert_eq!(got.records[0].key(), &PairKey::new("u0", "i1"));
        assert_eq!(got.records[1].trials(), &[3, 4]);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn header_only_warns() {
        let got = rr("user_id,item_id,trial,rating\n").unwrap();
        assert!(got.records.is_empty());
        assert_eq!(got.warnings.len(), 1);
    }

    #[test]
    fn row_errors_carry_line_numbers() {
        let cases = [
            (
                "user_id,item_id,trial,rating\nu1,i1,1,3\nu1,i1,1,4\n",
                3,
                "duplicate",
            ),
            (
                "user_id,item_id,trial,rating\nu1,i1,1,3\nu1,i1,2,6\n",
                3,
                "outside",
            ),
            ("user_id,item_id,trial,rating\nu1,i1,x,3\n", 2, "trial"),
            (
                "user_id,item_id,trial,rating\nu1,i1,1\n",
                2,
                "found record with 3 fields",
            ),
            ("user,item,trial,rating\n", 1, "expected header"),
        ];
        for (text, want_line, needle) in cases {
            match rr(text) {
                Err(CliError::Format { line, message, .. }) => {
                    assert_eq!(line, want_line, "{message}");
                    assert!(message.contains(needle), "{message}");
                }
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn pdf_rows() {
        let got = read_pdfrating(
            "user_id,item_id,w1,w2,w3,w4,w5\nu1,i1,2,0,1,0,0\nu2,i1,5,5,5,5,5\n".as_bytes(),
            "mem",
        )
        .unwrap();
        assert_eq!(got.records[0].weight(1), Some(2));
        assert_eq!(got.records[0].weight(3), Some(1));
        assert_eq!(got.records[1].total_weight(), 25);
        let err = read_pdfrating(
            "user_id,item_id,w1,w2,w3,w4,w5\nu1,i1,0,0,0,0,0\n".as_bytes(),
            "mem",
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("mem:2") && err.to_string().contains("u1"),
            "{err}"
        );
        assert!(read_pdfrating(
            "user_id,item_id,w1,w2,w3,w4,w5\nu1,i1,6,0,0,0,0\n".as_bytes(),
            "mem"
        )
        .is_err());
    }

    #[test]
    fn writer_round_trip() {
        let data = rr("user_id,item_id,trial,rating\nu1,i1,1,3\nu1,i1,2,4\nu2,i1,1,1\n")
            .unwrap()
            .records;
        let mut buf = Vec::new();
        write_rows(&mut buf, &RERATING_HEADER, &rerating_rows(&data)).unwrap();
        assert_eq!(
            rr(std::str::from_utf8(&buf).unwrap()).unwrap().records,
            data
        );
    }
}
