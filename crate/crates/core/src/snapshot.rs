//! Snapshot files and CSV diagnostics series.
//!
//! A snapshot is a single-line JSON header terminated by `\n`, followed by
//! the raw payload: for each field in `field_names`, `nx * ny` little-endian
//! `f64` values with the y index varying slowest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::field::{forward, inverse, velocity_from_state, FieldData, FlowState, Regime, ScalarField};
use crate::grid::build_grid;

pub const SCHEMA_VERSION: u32 = 1;
pub const STATE_FIELDS: [&str; 5] = ["psi", "omega", "mean_u", "u", "v"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub schema_version: u32,
    pub nx: usize,
    pub ny: usize,
    pub stretch: f64,
    pub t: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub regime: Regime,
    pub field_names: Vec<String>,
    pub byte_order: String,
    pub scalar: String,
    pub layout: String,
}

impl SnapshotHeader {
    fn for_state(s: &FlowState, field_names: &[&str]) -> Self {
        let g = s.grid();
        Self {
            schema_version: SCHEMA_VERSION,
            nx: g.nx,
            ny: g.ny,
            stretch: g.stretch,
            t: s.t,
            nu1: s.nu1,
            nu2: s.nu2,
            regime: s.regime,
            field_names: field_names.iter().map(|f| f.to_string()).collect(),
            byte_order: "little".into(),
            scalar: "float64".into(),
            layout: "y-major row-major".into(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Snapshot(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.byte_order != "little" || self.scalar != "float64" || self.layout != "y-major row-major" {
            return Err(Error::Snapshot("unsupported byte_order, scalar or layout".into()));
        }
        Ok(())
    }
}

/// Writes named physical fields of common shape under a state-derived header.
pub fn write_fields(path: &Path, s: &FlowState, names: &[&str], fields: &[&[f64]]) -> Result<()> {
    let header = SnapshotHeader::for_state(s, names);
    let n = header.nx * header.ny;
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    buf.reserve(n * 8 * fields.len());
    for f in fields {
        if f.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: f.len() });
        }
        for v in *f {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Reads a header and the payload as one vector per field.
pub fn read_fields(path: &Path) -> Result<(SnapshotHeader, Vec<Vec<f64>>)> {
    let bytes = fs::read(path)?;
    let end =
        bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Snapshot("missing header terminator".into()))?;
    let header: SnapshotHeader =
        serde_json::from_slice(&bytes[..end]).map_err(|e| Error::Snapshot(format!("corrupt header: {e}")))?;
    header.check()?;
    let n = header.nx * header.ny;
    let payload = &bytes[end + 1..];
    let expected = header.field_names.len() * n * 8;
    if payload.len() != expected {
        return Err(Error::Snapshot(format!(
            "payload size mismatch: expected {expected} bytes, got {}",
            payload.len()
        )));
    }
    let fields = payload
        .chunks_exact(n * 8)
        .map(|chunk| chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect())
        .collect();
    Ok((header, fields))
}

/// Writes `psi`, `omega`, `mean_u` and the derived `u`, `v`.
///
/// The velocity is always derived from the physical `psi` that is written, so
/// reading a snapshot back and writing it again reproduces the file exactly.
pub fn write_snapshot(path: &Path, s: &FlowState) -> Result<()> {
    let grid = s.grid();
    let psi = s.psi.physical_view().into_owned();
    let omega = s.omega.physical_view();
    let (nx, ny) = (grid.nx, grid.ny);
    let mean: Vec<f64> = (0..ny).flat_map(|j| std::iter::repeat_n(s.mean_u[j], nx)).collect();
    let canonical = FlowState {
        psi: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(forward(grid, &psi)), bc: s.psi.bc },
        ..s.clone()
    };
    let (u, v) = velocity_from_state(&canonical);
    write_fields(path, s, &STATE_FIELDS, &[&psi, &omega, &mean, u.physical()?, v.physical()?])
}

/// Reads a state snapshot. `psi` and `omega` are returned in physical representation.
pub fn read_snapshot(path: &Path) -> Result<FlowState> {
    let (h, mut fields) = read_fields(path)?;
    if h.field_names != STATE_FIELDS {
        return Err(Error::Snapshot(format!("unexpected field list {:?}", h.field_names)));
    }
    let grid = build_grid(h.nx, h.ny, h.stretch)?;
    let v = fields.pop().expect("five fields");
    let u = fields.pop().expect("five fields");
    let mean = fields.pop().expect("five fields");
    let omega = fields.pop().expect("five fields");
    let psi = fields.pop().expect("five fields");
    let mean_u: Vec<f64> = (0..h.ny).map(|j| mean[j * h.nx]).collect();
    let s = FlowState {
        psi: ScalarField::from_physical(&grid, psi)?.with_bc(crate::field::BcTag::BothWallsZero),
        omega: ScalarField::from_physical(&grid, omega)?,
        mean_u,
        t: h.t,
        nu1: h.nu1,
        nu2: h.nu2,
        regime: h.regime,
    };
    s.validate().map_err(|e| Error::Snapshot(e.to_string()))?;
    let (ur, vr) = velocity_from_state(&s);
    let (ur, vr) = (ur.physical()?, vr.physical()?);
    let scale = crate::field::linf_of(ur).max(crate::field::linf_of(vr)).max(1.0);
    let gap = ur.iter().zip(&u).chain(vr.iter().zip(&v)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > 1e-12 * scale {
        return Err(Error::Snapshot(format!("stored velocity disagrees with psi by {gap:e}")));
    }
    Ok(s)
}

/// Physical samples of a spectral field, for callers that write pressure files.
pub fn physical_samples(f: &ScalarField) -> Vec<f64> {
    match &f.data {
        FieldData::Physical(d) => d.clone(),
        FieldData::XSpectral(d) => inverse(&f.grid, d),
    }
}

pub const CSV_COLUMNS: [&str; 17] = [
    "t",
    "energy",
    "diss_h",
    "diss_v",
    "u_l2",
    "v_l2",
    "u_l4",
    "v_l4",
    "u_l6",
    "v_l6",
    "u_linf",
    "vx_l2",
    "gradp_l2",
    "gradq_l2",
    "uyy_l2",
    "uyx_l2",
    "budget_residual",
];

pub fn csv_row(r: &DiagnosticsRecord) -> Vec<f64> {
    let lp = |p| r.lp(p).unwrap_or((f64::NAN, f64::NAN));
    let (u2, v2) = lp(2.0);
    let (u4, v4) = lp(4.0);
    let (u6, v6) = lp(6.0);
    vec![
        r.t,
        r.energy,
        r.diss_h,
        r.diss_v,
        u2,
        v2,
        u4,
        v4,
        u6,
        v6,
        r.linf_u,
        r.vx_l2,
        r.grad_p_l2,
        r.grad_q_l2,
        r.uyy_l2,
        r.uyx_l2,
        r.budget_residual,
    ]
}

pub fn write_series<W: std::io::Write>(out: W, series: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in series {
        w.serialize(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(path: &Path, series: &[DiagnosticsRecord]) -> Result<()> {
    write_series(fs::File::create(path)?, series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::InitialCondition;
    use crate::solver::{init_state, SolverConfig};

    fn small_state() -> FlowState {
        let cfg = SolverConfig {
            nx: 16,
            ny: 24,
            initial: InitialCondition::TaylorProfile { amplitude: 1.0, wavenumber: 2, mean_amplitude: 0.5 },
            ..SolverConfig::default()
        };
        init_state(&cfg).unwrap()
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
        let s = small_state();
        write_snapshot(&a, &s).unwrap();
        let back = read_snapshot(&a).unwrap();
        write_snapshot(&b, &back).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(back.t, s.t);
        assert_eq!(back.mean_u, s.mean_u);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        write_snapshot(&a, &small_state()).unwrap();
        let mut bytes = fs::read(&a).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&a, &bytes).unwrap();
        let err = read_snapshot(&a).unwrap_err();
        assert!(err.to_string().contains("size mismatch"), "{err}");
    }

    #[test]
    fn version_and_header_corruption_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        write_snapshot(&a, &small_state()).unwrap();
        let bytes = fs::read(&a).unwrap();
        let text = String::from_utf8_lossy(&bytes[..bytes.iter().position(|&b| b == b'\n').unwrap()]).to_string();
        let bumped = text.replace("\"schema_version\":1", "\"schema_version\":9");
        let mut other = bumped.into_bytes();
        other.extend_from_slice(&bytes[text.len()..]);
        fs::write(&a, &other).unwrap();
        assert!(read_snapshot(&a).unwrap_err().to_string().contains("schema_version"));
        fs::write(&a, b"{not json\n").unwrap();
        assert!(read_snapshot(&a).unwrap_err().to_string().contains("corrupt header"));
    }

    #[test]
    fn stored_velocity_matches_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let s = small_state();
        write_snapshot(&a, &s).unwrap();
        let (_, fields) = read_fields(&a).unwrap();
        let (u, v) = velocity_from_state(&s);
        for (x, y) in fields[3].iter().zip(u.physical().unwrap()).chain(fields[4].iter().zip(v.physical().unwrap())) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_header_is_fixed() {
        let mut out = Vec::new();
        write_series(&mut out, &[]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.trim_end(), CSV_COLUMNS.join(","));
    }
}
