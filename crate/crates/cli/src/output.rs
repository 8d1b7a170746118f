use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;

/// Rounds to 12 significant digits; non-finite values become `null`.
pub fn sig12(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map(Value::Number).unwrap_or(Value::Null)
}

pub enum Output {
    /// One JSON object per line.
    Records(Vec<Value>),
    /// Header plus rows, written as CSV or as one JSON object per row.
    Table { header: Vec<&'static str>, rows: Vec<Vec<Value>> },
}

pub fn write(out: &Output, format: Format, sink: &mut impl Write) -> std::io::Result<()> {
    match (out, format) {
        (Output::Records(rs), _) => {
            for r in rs {
                writeln!(sink, "{r}")?;
            }
        }
        (Output::Table { header, rows }, Format::Json) => {
            for row in rows {
                let obj: Map<String, Value> =
                    header.iter().map(|h| h.to_string()).zip(row.iter().cloned()).collect();
                writeln!(sink, "{}", Value::Object(obj))?;
            }
        }
        (Output::Table { header, rows }, Format::Csv) => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.iter().map(cell))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(std::f64::consts::PI).to_string(), "3.14159265359");
        assert_eq!(sig12(2.0).to_string(), "2.0");
        assert_eq!(sig12(-1.0e-20 / 3.0).to_string(), "-3.33333333333e-21");
        assert_eq!(sig12(f64::NAN), Value::Null);
    }

    #[test]
    fn csv_table() {
        let t = Output::Table { header: vec!["q", "ratio"], rows: vec![vec![Value::from(3), sig12(1.0)]] };
        let mut buf = Vec::new();
        write(&t, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "q,ratio\n3,1.0\n");
    }
}
