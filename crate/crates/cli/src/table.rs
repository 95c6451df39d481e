//! CSV output with a fixed, versioned column layout.

use std::io::Write;

use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Writes `schema,axis,x,value,<columns…>,status`; every data row starts
/// with the schema version, the axis key, the axis coordinate and the value
/// the key received.
pub struct Table {
    columns: Vec<&'static str>,
}

/// Computed cells of one axis point, or the reason it failed.
pub type RowResult = Result<Vec<Cell>, String>;

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["schema".into(), "axis".into(), "x".into(), "value".into()];
        h.extend(self.columns.iter().map(|c| c.to_string()));
        h.push("status".into());
        h
    }

    pub fn write<W: Write>(
        &self,
        out: W,
        key: &str,
        rows: &[((f64, f64), RowResult)],
    ) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for ((x, value), r) in rows {
            let mut rec = vec![
                SCHEMA_VERSION.to_string(),
                key.to_string(),
                format_number(*x),
                format_number(*value),
            ];
            match r {
                Ok(cells) => {
                    debug_assert_eq!(cells.len(), self.columns.len());
                    rec.extend(cells.iter().map(Cell::render));
                    rec.push("ok".into());
                }
                Err(msg) => {
                    rec.extend(std::iter::repeat_n(String::new(), self.columns.len()));
                    rec.push(msg.replace(['\n', '\r'], " "));
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_twelve_significant_digits() {
        assert_eq!(format_number(0.5), "5.00000000000e-1");
        assert_eq!(format_number(-1234.5678), "-1.23456780000e3");
        assert_eq!(format_number(f64::INFINITY), "inf");
        let digits = format_number(std::f64::consts::PI)
            .split('e')
            .next()
            .unwrap()
            .chars()
            .filter(char::is_ascii_digit)
            .count();
        assert_eq!(digits, 12);
    }

    #[test]
    fn failed_rows_keep_their_place() {
        let t = Table::new(vec!["rate"]);
        let rows = vec![
            ((1.0, 1.0), Ok(vec![Cell::Num(0.25)])),
            ((2.0, 2.0), Err("bad, point".to_string())),
        ];
        let mut buf = Vec::new();
        t.write(&mut buf, "tau", &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "schema,axis,x,value,rate,status");
        assert_eq!(lines[1], "1,tau,1.00000000000e0,1.00000000000e0,2.50000000000e-1,ok");
        assert_eq!(lines[2], "1,tau,2.00000000000e0,2.00000000000e0,,\"bad, point\"");
    }
}
