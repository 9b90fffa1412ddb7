use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::error::Result;

/// CSV sink: the `--out` file, or stdout.
pub fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

/// Plain decimal for ordinary magnitudes, scientific notation otherwise.
/// Both round-trip exactly.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}
