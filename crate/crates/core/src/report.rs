//! Serialization of reports: JSON with every float printed to 17 significant
//! digits, and CSV for point clouds and objective samples.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::carpet::Point;

/// Pretty JSON formatter that prints `f64` values as `d.dddddddddddddddde±x`.
struct FixedDigits<'a> {
    inner: PrettyFormatter<'a>,
}

/// Formats a float with 17 significant digits, or `null` when not finite.
pub fn format_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "null".to_string()
    }
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let formatter = FixedDigits {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// `x,y` per line, no header.
pub fn points_csv(points: &[Point]) -> String {
    let mut out = String::with_capacity(points.len() * 48);
    for p in points {
        out.push_str(&format_f64(p[0]));
        out.push(',');
        out.push_str(&format_f64(p[1]));
        out.push('\n');
    }
    out
}

/// `x,f` per line with a header row.
pub fn samples_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("x,f\n");
    for (x, v) in samples {
        out.push_str(&format_f64(*x));
        out.push(',');
        out.push_str(&format_f64(*v));
        out.push('\n');
    }
    out
}

/// Reads points written by [`points_csv`]; blank lines and a non-numeric
/// header line are skipped.
pub fn parse_points_csv(text: &str) -> Result<Vec<Point>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected two comma-separated values", i + 1));
        };
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => out.push([x, y]),
            _ if i == 0 => continue,
            _ => return Err(format!("line {}: could not parse '{line}'", i + 1)),
        }
    }
    Ok(out)
}
