//! CSV and JSON serialization of paths, measures and solver logs.
//!
//! Numbers are written with 17 significant digits, `.` as the decimal
//! separator and LF line endings, so that every value round-trips exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::measures::{DiscreteMeasure, MeasureCurve};
use crate::meanfield::PicardRecord;
use crate::paths::{HistoryPath, Point, Trajectory};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn coord_headers(prefix: &[&str], dim: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((1..=dim).map(|i| format!("x_{i}")))
        .collect()
}

fn parse_f64(field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite value: {field:?}")));
    }
    Ok(v)
}

/// Checks the header row and returns the dimension.
fn check_header(rdr: &mut csv::Reader<impl Read>, prefix: &[&str]) -> Result<usize> {
    let header = rdr.headers()?.clone();
    if header.len() <= prefix.len() {
        return Err(Error::Parse("header has no coordinate columns".into()));
    }
    let dim = header.len() - prefix.len();
    let expected = coord_headers(prefix, dim);
    if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse(format!("expected header {}", expected.join(","))));
    }
    Ok(dim)
}

/// Writes a path as rows `t,x_1..x_d`.
pub fn write_path_csv<W: Write>(w: W, path: &HistoryPath) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(coord_headers(&["t"], path.dim()))?;
    for (k, &s) in path.grid().iter().enumerate() {
        wtr.write_record(std::iter::once(fmt_f64(s)).chain(path.node(k).iter().map(|&x| fmt_f64(x))))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a path written by [`write_path_csv`]; the delay is minus the first time.
pub fn read_path_csv<R: Read>(r: R) -> Result<HistoryPath> {
    let mut rdr = reader(r);
    let dim = check_header(&mut rdr, &["t"])?;
    let (mut grid, mut values) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        grid.push(parse_f64(&rec[0])?);
        for f in rec.iter().skip(1) {
            values.push(parse_f64(f)?);
        }
    }
    let tau = -*grid.first().ok_or_else(|| Error::Parse("path has no rows".into()))?;
    HistoryPath::from_flat(tau, dim, grid, values).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes particle trajectories as rows `t,particle_id,x_1..x_d`, time-major.
pub fn write_trajectories_csv<W: Write>(w: W, trajectories: &[Trajectory]) -> Result<()> {
    let dim = trajectories.first().map_or(0, Trajectory::dim);
    if trajectories.iter().any(|t| t.dim() != dim || t.grid() != trajectories[0].grid()) {
        return Err(shape("trajectories must share dimension and grid"));
    }
    let mut wtr = writer(w);
    wtr.write_record(coord_headers(&["t", "particle_id"], dim))?;
    if let Some(first) = trajectories.first() {
        for (k, &t) in first.grid().iter().enumerate() {
            for (id, tr) in trajectories.iter().enumerate() {
                wtr.write_record(
                    [fmt_f64(t), id.to_string()]
                        .into_iter()
                        .chain(tr.node(k).iter().map(|&x| fmt_f64(x))),
                )?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes a measure on `R^d` as rows `weight,x_1..x_d`.
pub fn write_measure_csv<W: Write>(w: W, mu: &DiscreteMeasure<Point>) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(coord_headers(&["weight"], mu.dim()))?;
    for (x, wgt) in mu.iter() {
        wtr.write_record(std::iter::once(fmt_f64(wgt)).chain(x.iter().map(|&v| fmt_f64(v))))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a measure written by [`write_measure_csv`], validating the weights.
pub fn read_measure_csv<R: Read>(r: R) -> Result<DiscreteMeasure<Point>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["weight"])?;
    let (mut atoms, mut weights) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        weights.push(parse_f64(&rec[0])?);
        atoms.push(rec.iter().skip(1).map(parse_f64).collect::<Result<Point>>()?);
    }
    DiscreteMeasure::new(atoms, weights)
}

/// Writes a measure curve as rows `t,weight,x_1..x_d`.
pub fn write_measure_curve_csv<W: Write>(w: W, curve: &MeasureCurve<Point>) -> Result<()> {
    let dim = curve.measures()[0].dim();
    let mut wtr = writer(w);
    wtr.write_record(coord_headers(&["t", "weight"], dim))?;
    for (&t, mu) in curve.times().iter().zip(curve.measures()) {
        for (x, wgt) in mu.iter() {
            wtr.write_record(
                [fmt_f64(t), fmt_f64(wgt)]
                    .into_iter()
                    .chain(x.iter().map(|&v| fmt_f64(v))),
            )?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_measure_curve_csv`] with delay `tau`.
pub fn read_measure_curve_csv<R: Read>(r: R, tau: f64) -> Result<MeasureCurve<Point>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["t", "weight"])?;
    let mut times: Vec<f64> = Vec::new();
    let mut groups: Vec<(Vec<Point>, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let t = parse_f64(&rec[0])?;
        if times.last() != Some(&t) {
            times.push(t);
            groups.push((Vec::new(), Vec::new()));
        }
        let g = groups.last_mut().expect("group pushed");
        g.1.push(parse_f64(&rec[1])?);
        g.0.push(rec.iter().skip(2).map(parse_f64).collect::<Result<Point>>()?);
    }
    let measures = groups
        .into_iter()
        .map(|(a, w)| DiscreteMeasure::new(a, w))
        .collect::<Result<Vec<_>>>()?;
    MeasureCurve::new(tau, times, measures)
}

/// Writes the Picard log as rows `iter,window_start,residual`.
pub fn write_picard_csv<W: Write>(w: W, trace: &[PicardRecord]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["iter", "window_start", "residual"])?;
    for r in trace {
        wtr.write_record([r.iter.to_string(), fmt_f64(r.window_start), fmt_f64(r.residual)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes any table of equal-length rows with the given header.
pub fn write_table_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(shape("row length differs from header"));
        }
        wtr.write_record(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Manifest of a path-measure directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathMeasureManifest {
    pub tau: f64,
    pub dim: usize,
    pub atoms: Vec<AtomEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub file: String,
    pub weight: f64,
}

/// Name of the manifest inside a path-measure directory.
pub const PATH_MEASURE_MANIFEST: &str = "weights.json";

/// Writes each atom to `path_NNNN.csv` plus a weights manifest; returns the
/// files written.
pub fn write_path_measure_dir(dir: &Path, mu: &DiscreteMeasure<HistoryPath>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let width = mu.len().saturating_sub(1).to_string().len().max(4);
    let mut files = Vec::with_capacity(mu.len() + 1);
    let mut atoms = Vec::with_capacity(mu.len());
    for (k, (path, weight)) in mu.iter().enumerate() {
        let name = format!("path_{k:0width$}.csv");
        let file = dir.join(&name);
        write_path_csv(BufWriter::new(File::create(&file)?), path)?;
        files.push(file);
        atoms.push(AtomEntry { file: name, weight });
    }
    let manifest = PathMeasureManifest {
        tau: mu.tau(),
        dim: mu.dim(),
        atoms,
    };
    let file = dir.join(PATH_MEASURE_MANIFEST);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&file, json)?;
    files.push(file);
    Ok(files)
}

/// Reads a directory written by [`write_path_measure_dir`].
pub fn read_path_measure_dir(dir: &Path) -> Result<DiscreteMeasure<HistoryPath>> {
    let manifest: PathMeasureManifest = serde_json::from_slice(&fs::read(dir.join(PATH_MEASURE_MANIFEST))?)?;
    let mut atoms = Vec::with_capacity(manifest.atoms.len());
    let mut weights = Vec::with_capacity(manifest.atoms.len());
    for entry in &manifest.atoms {
        let path = read_path_csv(File::open(dir.join(&entry.file))?)?;
        if path.dim() != manifest.dim || (path.tau() - manifest.tau).abs() > 1e-12 * manifest.tau {
            return Err(Error::Parse(format!("{} does not match the manifest", entry.file)));
        }
        atoms.push(path);
        weights.push(entry.weight);
    }
    DiscreteMeasure::new(atoms, weights)
}
