//! Bit-stable text serialization.
//!
//! Floats are always written with 17 significant digits in scientific
//! notation, so a value survives a write/parse round trip exactly and equal
//! inputs produce byte-identical files.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // CSV has no null; keep the token parseable by Rust's float parser.
        format!("{v}")
    }
}

/// serde_json formatter that writes every float through [`fmt_f64`].
#[derive(Default)]
pub struct StableFormatter {
    pretty: Option<PrettyFormatter<'static>>,
}

impl StableFormatter {
    pub fn compact() -> Self {
        StableFormatter { pretty: None }
    }

    pub fn pretty() -> Self {
        StableFormatter {
            pretty: Some(PrettyFormatter::with_indent(b"  ")),
        }
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                match &mut self.pretty {
                    Some(p) => p.$name(w $(, $arg)*),
                    None => serde_json::ser::CompactFormatter.$name(w $(, $arg)*),
                }
            }
        )*
    };
}

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

fn to_bytes<T: Serialize + ?Sized>(value: &T, fmt: StableFormatter) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(out)
}

/// Single-line JSON with stable float formatting.
pub fn to_stable_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(String::from_utf8(to_bytes(value, StableFormatter::compact())?).expect("utf8"))
}

/// Indented JSON with stable float formatting and a trailing newline.
pub fn to_stable_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = String::from_utf8(to_bytes(value, StableFormatter::pretty())?).expect("utf8");
    s.push('\n');
    Ok(s)
}

/// Writes one stable JSON record per line.
pub fn write_jsonl<T: Serialize, W: Write>(records: impl IntoIterator<Item = T>, w: &mut W) -> Result<()> {
    for r in records {
        w.write_all(to_stable_json(&r)?.as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Minimal CSV table: a header plus rows of preformatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}
