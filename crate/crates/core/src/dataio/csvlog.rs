//! CSV dialect for interaction logs: a header row with `user_id`,
//! `timestamp` (integer milliseconds) and `chosen_item`; every other column
//! is a feature whose type is inferred at schema fit.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use super::RawInteraction;
use crate::{Error, Result};

pub const USER_ID: &str = "user_id";
pub const TIMESTAMP: &str = "timestamp";
pub const CHOSEN_ITEM: &str = "chosen_item";

pub fn read_csv(path: &Path) -> Result<Vec<RawInteraction>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file)
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<Vec<RawInteraction>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let user_col = column(USER_ID)?;
    let ts_col = column(TIMESTAMP)?;
    let item_col = column(CHOSEN_ITEM)?;

    let mut rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let ts_text = &record[ts_col];
        let timestamp = ts_text.trim().parse::<i64>().map_err(|_| Error::BadValue {
            column: TIMESTAMP.to_string(),
            row,
            value: ts_text.to_string(),
        })?;
        let features = headers
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(i, _)| ![user_col, ts_col, item_col].contains(i))
            .map(|(_, (h, v))| (h.to_string(), v.to_string()))
            .collect();
        rows.push(RawInteraction {
            user_id: record[user_col].to_string(),
            timestamp,
            features,
            chosen_item: record[item_col].to_string(),
        });
    }
    Ok(rows)
}

pub fn write_csv(path: &Path, rows: &[RawInteraction]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(std::io::BufWriter::new(file), rows)
}

/// Columns: `user_id`, `timestamp`, features in name order, `chosen_item`.
pub fn write_csv_to<W: Write>(writer: W, rows: &[RawInteraction]) -> Result<()> {
    let names: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| r.features.keys().map(String::as_str))
        .collect();
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![USER_ID, TIMESTAMP];
    header.extend(names.iter().copied());
    header.push(CHOSEN_ITEM);
    wtr.write_record(&header)?;
    for row in rows {
        let ts = row.timestamp.to_string();
        let mut record = vec![row.user_id.as_str(), ts.as_str()];
        record.extend(
            names
                .iter()
                .map(|n| row.features.get(*n).map_or("", String::as_str)),
        );
        record.push(row.chosen_item.as_str());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
