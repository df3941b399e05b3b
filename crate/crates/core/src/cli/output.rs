//! Snapshot and diagnostics writers: CSV and VTK legacy ASCII.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const SNAPSHOT_HEADER: &str = "x,y,c,chat";
pub const VTK_HEADER: &str = "# vtk DataFile Version 3.0";

/// Nodal state after a time step.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub chat: ScalarField,
    pub c: ScalarField,
}

impl Snapshot {
    pub fn new(step: usize, time: f64, chat: ScalarField, c: ScalarField) -> Self {
        assert!(chat.same_mesh(&c), "snapshot fields must share a mesh");
        Self { step, time, chat, c }
    }

    pub fn csv_name(&self) -> String {
        format!("snapshot_{:05}.csv", self.step)
    }

    pub fn vtk_name(&self) -> String {
        format!("snapshot_{:05}.vtk", self.step)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    let mesh = snapshot.c.mesh();
    writeln!(w, "{SNAPSHOT_HEADER}").map_err(io)?;
    for (k, (c, chat)) in snapshot.c.values().iter().zip(snapshot.chat.values()).enumerate() {
        let [x, y] = mesh.node_coords(k);
        writeln!(w, "{},{},{},{}", num(x), num(y), num(*c), num(*chat)).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a snapshot CSV back as `[x, y, c, chat]` rows.
pub fn read_csv(path: &Path) -> Result<Vec<[f64; 4]>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::Config {
        path: path.display().to_string(),
        line,
        key: "csv".into(),
        message,
    };
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if idx == 0 {
            if line != SNAPSHOT_HEADER {
                return Err(bad(1, format!("unexpected header '{line}'")));
            }
            continue;
        }
        let mut row = [0.0; 4];
        let mut fields = line.split(',');
        for slot in row.iter_mut() {
            let f = fields.next().ok_or_else(|| bad(idx + 1, "too few columns".into()))?;
            *slot = f.parse().map_err(|_| bad(idx + 1, format!("not a number: '{f}'")))?;
        }
        if fields.next().is_some() {
            return Err(bad(idx + 1, "too many columns".into()));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_diagnostics_csv(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    writeln!(w, "{}", DiagnosticsRecord::CSV_HEADER).map_err(io)?;
    for r in records {
        writeln!(w, "{}", r.csv_row()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Support areas per threshold: `step,support_<theta>,...`.
pub fn write_supports_csv(
    thetas: &[f64],
    records: &[DiagnosticsRecord],
    supports: &[Vec<f64>],
    path: &Path,
) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    let header: Vec<String> = thetas.iter().map(|t| format!("support_{t:e}")).collect();
    writeln!(w, "step,time,{}", header.join(",")).map_err(io)?;
    for (r, s) in records.iter().zip(supports) {
        let cols: Vec<String> = s.iter().map(|v| num(*v)).collect();
        writeln!(w, "{},{},{}", r.step, num(r.time), cols.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_vtk(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    let mesh = snapshot.c.mesh();
    let d = mesh.domain();
    writeln!(w, "{VTK_HEADER}").map_err(io)?;
    writeln!(w, "vdw-pme step {} time {}", snapshot.step, num(snapshot.time)).map_err(io)?;
    writeln!(w, "ASCII").map_err(io)?;
    writeln!(w, "DATASET STRUCTURED_POINTS").map_err(io)?;
    writeln!(w, "DIMENSIONS {} {} 1", mesh.nx() + 1, mesh.ny() + 1).map_err(io)?;
    writeln!(w, "ORIGIN {} {} 0", num(d.min[0]), num(d.min[1])).map_err(io)?;
    writeln!(w, "SPACING {} {} 1", num(mesh.hx()), num(mesh.hy())).map_err(io)?;
    writeln!(w, "POINT_DATA {}", mesh.n_nodes()).map_err(io)?;
    for (name, field) in [("c", &snapshot.c), ("chat", &snapshot.chat)] {
        writeln!(w, "SCALARS {name} double 1").map_err(io)?;
        writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
        for v in field.values() {
            writeln!(w, "{}", num(*v)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{MeshGrid, Rect};
    use std::sync::Arc;

    fn snap(nx: usize, ny: usize) -> Snapshot {
        let mesh = Arc::new(MeshGrid::new(Rect::new([0.0, 0.0], [1.0, 2.0]), nx, ny).unwrap());
        let chat = ScalarField::interpolate(Arc::clone(&mesh), |p| (p[0] * 3.1).sin() / 7.0 + p[1]);
        let c = chat.map(|v| 1.0 - v);
        Snapshot::new(3, 3e-4, chat, c)
    }

    #[test]
    fn single_element_has_four_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mesh = Arc::new(MeshGrid::new(Rect::new([0.0, 0.0], [1.0, 1.0]), 1, 1).unwrap());
        let f = ScalarField::constant(mesh, 0.5);
        write_csv(&Snapshot::new(0, 0.0, f.clone(), f), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some(SNAPSHOT_HEADER));
        assert_eq!(read_csv(&path).unwrap().len(), 4);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = snap(5, 7);
        write_csv(&s, &path).unwrap();
        let rows = read_csv(&path).unwrap();
        assert_eq!(rows.len(), 6 * 8);
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row[0].to_bits(), s.c.mesh().node_coords(k)[0].to_bits());
            assert_eq!(row[2].to_bits(), s.c.values()[k].to_bits());
            assert_eq!(row[3].to_bits(), s.chat.values()[k].to_bits());
        }
    }

    #[test]
    fn vtk_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.vtk");
        let s = snap(4, 6);
        write_vtk(&s, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], VTK_HEADER);
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET STRUCTURED_POINTS");
        assert_eq!(lines[4], "DIMENSIONS 5 7 1");
        assert_eq!(lines[7], "POINT_DATA 35");
        assert_eq!(lines[8], "SCALARS c double 1");
        assert_eq!(lines[9], "LOOKUP_TABLE default");
        assert_eq!(lines[10 + 35], "SCALARS chat double 1");
        assert_eq!(lines.len(), 8 + 2 * (2 + 35));
    }

    #[test]
    fn io_errors_name_the_path() {
        let s = snap(1, 1);
        let err = write_csv(&s, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
