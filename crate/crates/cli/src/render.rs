//! Binary PGM images and CSV tables.

use anyhow::{ensure, Result};

/// 8-bit binary PGM (P5) of a row-major image with values in `[0, 1]`.
pub fn pgm(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>> {
    ensure!(
        values.len() == width * height,
        "{} values for a {width} x {height} image",
        values.len()
    );
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

/// Polar B-mode `[line][sample]` transposed so that depth runs down the rows.
pub fn polar_pgm(bmode: &[f64], lines: usize, samples: usize) -> Result<Vec<u8>> {
    ensure!(bmode.len() == lines * samples, "polar image size mismatch");
    let img: Vec<f64> = (0..samples)
        .flat_map(|j| (0..lines).map(move |a| bmode[a * samples + j]))
        .collect();
    pgm(lines, samples, &img)
}

/// RFC-4180 CSV from a header and rows of already formatted fields.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner()?)
}

/// Shortest representation that parses back to the same value; empty for
/// a missing value.
pub fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}
