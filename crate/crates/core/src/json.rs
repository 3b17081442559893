//! JSON input/output: floats are written with 17 significant digits, and
//! parse failures keep the line/column reported by the parser.

use std::io;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

/// Compact formatter printing every finite double as `d.dddddddddddddddde±x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // Non-finite values never reach here: serde_json maps them to null.
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        CompactFormatter.begin_array(w)
    }
}

pub fn to_writer<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, SeventeenDigits);
    value.serialize(&mut ser)
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    to_writer(&mut buf, value).expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{what}: {message} at line {line}, column {column}")]
pub struct JsonError {
    pub what: String,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

pub fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, JsonError> {
    serde_json::from_str(text).map_err(|e| JsonError {
        what: what.to_string(),
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })
}
