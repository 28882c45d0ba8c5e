//! Grid files.
//!
//! ```text
//! dim,kind,count
//! 2,sobol,3
//! lower,0.0000000000000000e0,0.0000000000000000e0
//! upper,1.0000000000000000e0,1.0000000000000000e0
//! x0,x1,label
//! 5.0000000000000000e-1,5.0000000000000000e-1,+1
//! ...
//! ```
//!
//! Values carry 17 significant digits, so every double reads back exactly.
//! The `label` column is optional. Grids grown by refinement record the
//! length of their sequence prefix as `<kind>+refined:<len>`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::criterion::{Label, LabeledGrid};
use crate::error::{Error, Result};
use crate::grid::{Grid, Hyperbox, Points, SequenceKind};

const HEADER: &str = "dim,kind,count";

pub fn write_grid<W: Write>(mut w: W, grid: &Grid, labels: Option<&[Label]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != grid.count() {
            return Err(Error::invalid("label count does not match grid"));
        }
    }
    let kind = if grid.is_refined() {
        format!("{}+refined:{}", grid.kind(), grid.sequence_len())
    } else {
        grid.kind().to_string()
    };
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{},{},{}", grid.dim(), kind, grid.count())?;
    write_row(&mut w, "lower", grid.bounds().lower())?;
    write_row(&mut w, "upper", grid.bounds().upper())?;
    let cols: Vec<String> = (0..grid.dim()).map(|i| format!("x{i}")).collect();
    write!(w, "{}", cols.join(","))?;
    writeln!(w, "{}", if labels.is_some() { ",label" } else { "" })?;
    for (i, p) in grid.points().iter().enumerate() {
        let mut line = p.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",");
        if let Some(l) = labels {
            line.push(',');
            line.push_str(&l[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_row<W: Write>(w: &mut W, tag: &str, values: &[f64]) -> Result<()> {
    let vals: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(w, "{tag},{}", vals.join(","))?;
    Ok(())
}

fn fmt_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| fmt_err(line, format!("bad number {s:?}: {e}")))
}

fn parse_kind(s: &str) -> Result<(SequenceKind, Option<usize>)> {
    match s.split_once("+refined:") {
        Some((base, len)) => {
            let len = len.parse().map_err(|_| Error::Format(format!("bad refined length in {s:?}")))?;
            Ok((base.parse()?, Some(len)))
        }
        None => Ok((s.parse()?, None)),
    }
}

/// Reads a grid and, when present, its label column.
pub fn read_grid<R: BufRead>(r: R) -> Result<(Grid, Option<Vec<Label>>)> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(s))) => Ok((i, s)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Format(format!("unexpected end of file, expected {what}"))),
        }
    };
    let (ln, header) = next("header")?;
    if header.trim() != HEADER {
        return Err(fmt_err(ln, format!("expected header {HEADER:?}")));
    }
    let (ln, meta) = next("metadata row")?;
    let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(fmt_err(ln, "metadata row needs dim,kind,count"));
    }
    let dim: usize = fields[0].parse().map_err(|_| fmt_err(ln, "bad dimension"))?;
    let (kind, refined) = parse_kind(fields[1]).map_err(|e| fmt_err(ln, e))?;
    let count: usize = fields[2].parse().map_err(|_| fmt_err(ln, "bad count"))?;

    let mut bound = |tag: &str| -> Result<Vec<f64>> {
        let (ln, row) = next(tag)?;
        let mut it = row.split(',');
        if it.next().map(str::trim) != Some(tag) {
            return Err(fmt_err(ln, format!("expected {tag} row")));
        }
        let v = it.map(|s| parse_f64(s, ln)).collect::<Result<Vec<f64>>>()?;
        if v.len() != dim {
            return Err(fmt_err(ln, format!("{tag} row has {} values, expected {dim}", v.len())));
        }
        Ok(v)
    };
    let lower = bound("lower")?;
    let upper = bound("upper")?;
    let bounds = Hyperbox::new(lower, upper)?;

    let (ln, cols) = next("column header")?;
    let cols: Vec<&str> = cols.split(',').map(str::trim).collect();
    let labeled = match cols.len() {
        n if n == dim => false,
        n if n == dim + 1 && cols[dim] == "label" => true,
        _ => return Err(fmt_err(ln, "column header does not match dimension")),
    };
    let mut points = Points::with_capacity(dim, count);
    let mut labels = Vec::with_capacity(if labeled { count } else { 0 });
    let mut row = vec![0.0; dim];
    for _ in 0..count {
        let (ln, line) = next("point row")?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(fmt_err(ln, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        for k in 0..dim {
            row[k] = parse_f64(fields[k], ln)?;
        }
        points.push(&row)?;
        if labeled {
            labels.push(fields[dim].parse::<Label>().map_err(|e| fmt_err(ln, e))?);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(fmt_err(ln, format!("more rows than the declared count {count}")));
    }
    let grid = Grid::from_parts(bounds, kind, points, refined.unwrap_or(count))?;
    Ok((grid, labeled.then_some(labels)))
}

pub fn save_grid(path: &Path, grid: &Grid) -> Result<()> {
    write_grid(BufWriter::new(File::create(path)?), grid, None)
}

pub fn save_labeled(path: &Path, data: &LabeledGrid) -> Result<()> {
    write_grid(BufWriter::new(File::create(path)?), data.grid(), Some(data.labels()))
}

/// Loads the grid, ignoring any label column.
pub fn load_grid(path: &Path) -> Result<Grid> {
    Ok(read_grid(BufReader::new(File::open(path)?))?.0)
}

pub fn load_labeled(path: &Path) -> Result<LabeledGrid> {
    match read_grid(BufReader::new(File::open(path)?))? {
        (grid, Some(labels)) => LabeledGrid::new(grid, labels),
        _ => Err(Error::Format(format!("{} has no label column", path.display()))),
    }
}
