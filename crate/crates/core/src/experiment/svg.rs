use std::io::Write;

use super::synthetic::{ErrorClass, PointRecord, Reference};
use crate::criterion::Label;
use crate::error::{Error, Result};
use crate::grid::Hyperbox;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// Scatter plot of a 2-D run: predicted-inside points red, predicted-outside
/// blue, with a cross over every point misclassified against `reference`.
pub fn write_svg<W: Write>(
    mut w: W,
    bounds: &Hyperbox,
    records: &[PointRecord],
    reference: Reference,
) -> Result<()> {
    if bounds.dim() != 2 {
        return Err(Error::invalid("SVG plots are only drawn for two dimensions"));
    }
    let span = SIZE - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - bounds.lower()[0]) / bounds.width(0) * span;
    // SVG y grows downwards
    let sy = |y: f64| SIZE - MARGIN - (y - bounds.lower()[1]) / bounds.width(1) * span;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )?;
    writeln!(
        w,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="white" stroke="black"/>"#
    )?;
    for r in records {
        let (x, y) = (sx(r.point[0]), sy(r.point[1]));
        let color = if r.predicted == Label::Inside { "red" } else { "blue" };
        match r.class(reference) {
            ErrorClass::RedCross | ErrorClass::BlueCross => {
                let cross = if r.class(reference) == ErrorClass::RedCross { "red" } else { "blue" };
                writeln!(
                    w,
                    r#"<path d="M{:.2} {:.2}l6 6m0 -6l-6 6" stroke="{cross}" stroke-width="1.5"/>"#,
                    x - 3.0,
                    y - 3.0
                )?;
            }
            _ => writeln!(w, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.6" fill="{color}"/>"#)?,
        }
    }
    writeln!(w, "</svg>")?;
    w.flush()?;
    Ok(())
}
