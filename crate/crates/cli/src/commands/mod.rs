pub mod composable;
pub mod discrete;
pub mod fading;
pub mod finite;
pub mod rate;
pub mod threshold;
pub mod validate;

use std::fs::File;
use std::io::{BufWriter, Write};

use rayon::prelude::*;

use crate::axis::{Axis, AxisDefault};
use crate::error::{CliError, CliResult};
use crate::settings::Settings;
use crate::table::{Cell, RowResult, Table};

/// Destination chosen by `--output`, standard output otherwise.
pub fn output(s: &Settings) -> CliResult<Box<dyn Write>> {
    Ok(match &s.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Run(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Evaluates `point` at every axis value in parallel and writes the rows in
/// axis order. Usage errors at a point abort the run; other failures are
/// recorded in the row's status and the sweep continues.
pub fn sweep<F>(s: &Settings, default: AxisDefault, table: Table, point: F) -> CliResult<()>
where
    F: Fn(&Settings) -> CliResult<Vec<Cell>> + Sync,
{
    let axis = Axis::resolve(s, default)?;
    let rows: Vec<((f64, f64), CliResult<Vec<Cell>>)> = axis
        .points
        .par_iter()
        .map(|&(x, v)| ((x, v), s.with_value(&axis.key, v).and_then(|p| point(&p))))
        .collect();
    if let Some(((x, _), Err(CliError::Usage(m)))) = rows
        .iter()
        .find(|(_, r)| matches!(r, Err(CliError::Usage(_))))
        .filter(|_| rows.iter().all(|(_, r)| r.is_err()))
    {
        return Err(CliError::Usage(format!("at {} = {x}: {m}", axis.key)));
    }
    let rows: Vec<((f64, f64), RowResult)> = rows
        .into_iter()
        .map(|(p, r)| (p, r.map_err(|e| status_text(&e))))
        .collect();
    table.write(output(s)?, &axis.key, &rows)
}

fn status_text(e: &CliError) -> String {
    match e {
        CliError::Usage(m) | CliError::Check(m) | CliError::Run(m) => m.clone(),
    }
}

/// `max(0, r)` next to the signed value.
pub fn clamped_pair(r: f64) -> [Cell; 2] {
    [Cell::Num(r.max(0.0)), Cell::Num(r)]
}
