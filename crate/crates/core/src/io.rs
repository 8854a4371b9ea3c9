//! Binary snapshots and the diagnostics CSV stream.
//!
//! Snapshot layout, little-endian: `b"VWAV"`, version `u32`, `N u32`,
//! `L, g, c, t` as `f64`, then `2N` complex coefficients as `(re, im)`
//! pairs, `W` by ascending wavenumber followed by `Q`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolution::DiagnosticsRecord;
use crate::spectral::{Domain, SpectralField};
use crate::wavestate::WaveState;

pub const MAGIC: &[u8; 4] = b"VWAV";
pub const SNAPSHOT_VERSION: u32 = 1;

pub const DIAGNOSTICS_HEADER: &str = "t,energy,momentum,taylor_margin,cusp_margin,holo_defect,A,B,A_half,A_one,Au,Bu,H0,H1";

/// A state with the physical parameters it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: WaveState,
    pub g: f64,
    pub c: f64,
}

pub fn write_snapshot(mut out: impl Write, snap: &Snapshot) -> Result<()> {
    let dom = snap.state.domain();
    let n = u32::try_from(dom.n()).map_err(|_| Error::Snapshot("N does not fit in u32".into()))?;
    out.write_all(MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&n.to_le_bytes())?;
    for v in [dom.length(), snap.g, snap.c, snap.state.t] {
        out.write_all(&v.to_le_bytes())?;
    }
    for z in snap.state.w.coeffs().iter().chain(snap.state.q.coeffs()) {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot(mut r: impl Read) -> Result<Snapshot> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let (length, g, c, t) = (read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
    let dom = Domain::new(n, length)?;
    let mut field = || -> Result<SpectralField> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(C64::new(read_f64(&mut r)?, read_f64(&mut r)?));
        }
        SpectralField::from_coeffs(&dom, v)
    };
    let w = field()?;
    let q = field()?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Snapshot(format!("{} trailing bytes", rest.len())));
    }
    Ok(Snapshot { state: WaveState { w, q, t }, g, c })
}

pub fn save_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), snap)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    read_snapshot(BufReader::new(File::open(path)?))
}

/// One CSV row in [`DIAGNOSTICS_HEADER`] order. Floats use the shortest
/// representation that round-trips, so equal runs give equal bytes.
pub fn diagnostics_row(rec: &DiagnosticsRecord) -> String {
    let n = &rec.norms;
    let vals = [
        rec.t,
        rec.energy,
        rec.momentum,
        rec.taylor_margin,
        rec.cusp_margin,
        rec.holo_defect,
        n.a,
        n.b,
        n.a_half,
        n.a_one,
        n.au,
        n.bu,
        rec.h0,
        rec.h1,
    ];
    vals.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

pub fn write_diagnostics_csv(mut out: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for rec in records {
        writeln!(out, "{}", diagnostics_row(rec))?;
    }
    out.flush()?;
    Ok(())
}
