//! Flat columnar snapshots: one header line, then one row per node with
//! columns `index x y <named components...>`, whitespace separated.

use std::io::{self, Write};

use crate::geometry::Grid;

pub fn write_snapshot<W: Write>(out: &mut W, grid: &Grid, columns: &[(&str, &[f64])]) -> io::Result<()> {
    write!(out, "index x y")?;
    for (name, _) in columns {
        write!(out, " {name}")?;
    }
    writeln!(out)?;
    for k in 0..grid.len() {
        let (x, y) = grid.coords(k);
        write!(out, "{k} {x:.12e} {y:.12e}")?;
        for (_, vals) in columns {
            write!(out, " {:.12e}", vals[k])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
