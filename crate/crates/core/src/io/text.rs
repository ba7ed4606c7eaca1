//! CSV events: mandatory `t,x,y,p` header, comma separated decimal integers.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::IoError;
use crate::event::{validate_stream, Event, EventStream, SensorGeometry};

const HEADER: [&str; 4] = ["t", "x", "y", "p"];

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: u64) -> Result<T, IoError> {
    let raw = record.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| IoError::ParseErrorAt {
        line,
        reason: format!("bad {} value {raw:?}", HEADER[i]),
    })
}

pub fn read_csv_from<R: Read>(input: R, geometry: SensorGeometry) -> Result<EventStream, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    match records.next() {
        Some(Ok(header)) if header.iter().map(str::trim).eq(HEADER) => {}
        Some(Err(e)) => return Err(csv_error(e, 1)),
        _ => {
            return Err(IoError::ParseErrorAt {
                line: 1,
                reason: "expected header t,x,y,p".into(),
            })
        }
    }

    let mut events = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(IoError::ParseErrorAt {
                line,
                reason: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let p: i8 = field(&record, 3, line)?;
        if p != 1 && p != -1 {
            return Err(IoError::ParseErrorAt {
                line,
                reason: format!("polarity must be -1 or 1, found {p}"),
            });
        }
        events.push(Event {
            t: field(&record, 0, line)?,
            x: field(&record, 1, line)?,
            y: field(&record, 2, line)?,
            p,
        });
    }
    Ok(validate_stream(events, geometry)?)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> IoError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    IoError::ParseErrorAt {
        line,
        reason: e.to_string(),
    }
}

pub fn read_csv(path: impl AsRef<Path>, geometry: SensorGeometry) -> Result<EventStream, IoError> {
    read_csv_from(File::open(path)?, geometry)
}

pub fn write_csv_to<W: Write>(stream: &EventStream, out: &mut W) -> Result<(), IoError> {
    writeln!(out, "t,x,y,p")?;
    for e in stream.events() {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.p)?;
    }
    Ok(())
}

pub fn write_csv(stream: &EventStream, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csv_to(stream, &mut out)?;
    out.flush()?;
    Ok(())
}
