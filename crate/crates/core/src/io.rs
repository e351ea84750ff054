//! File formats: channel, path, state and model JSON, and the phase-path CSV.
//!
//! Matrices are stored row-major as nested lists of `[re, im]` pairs. Floats are
//! written with 17 significant digits so that write→read is lossless.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::channel::KrausMap;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::mps::StateVector;
use crate::parent_hamiltonian::{ExperimentReport, ExperimentRow, ParentModel, ScalingPoint};
use crate::paths::{CertifiedPath, CurveSpec, PathMode};
use crate::perron_frobenius::Certificate;

pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn matrix_data(m: &CMat) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Parses row-major data into a `rows × cols` matrix; `what` names the field in errors.
pub fn matrix_from_data(data: &MatrixData, rows: usize, cols: usize, what: &str) -> Result<CMat> {
    if data.len() != rows {
        return Err(Error::Parse(format!("{what}: expected {rows} rows, found {}", data.len())));
    }
    let mut m = CMat::zeros(rows, cols);
    for (i, row) in data.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Parse(format!(
                "{what} row {i}: expected {cols} entries, found {}",
                row.len()
            )));
        }
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(Error::Parse(format!("{what}[{i}][{j}]: non-finite entry")));
            }
            m[(i, j)] = c(z[0], z[1]);
        }
    }
    Ok(m)
}

fn square_from_data(data: &MatrixData, what: &str) -> Result<CMat> {
    matrix_from_data(data, data.len(), data.len(), what)
}

/// JSON formatter writing every float as `%.16e`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes with [`FullPrecision`], ending with a newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("{what}: line {}, column {}: {e}", e.line(), e.column()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<MatrixData>,
}

impl ChannelFile {
    pub fn from_map(map: &KrausMap) -> Self {
        Self {
            dim: map.dim(),
            kraus: map.kraus().iter().map(matrix_data).collect(),
        }
    }

    pub fn to_map(&self) -> Result<KrausMap> {
        if self.kraus.is_empty() {
            return Err(Error::Parse("kraus: empty list".into()));
        }
        let ops = self
            .kraus
            .iter()
            .enumerate()
            .map(|(i, k)| matrix_from_data(k, self.dim, self.dim, &format!("kraus[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        KrausMap::new(ops)
    }
}

pub fn write_channel(map: &KrausMap) -> Result<String> {
    to_json(&ChannelFile::from_map(map))
}

pub fn read_channel(text: &str) -> Result<KrausMap> {
    from_json::<ChannelFile>(text, "channel file")?.to_map()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub passed: bool,
    pub kraus: Vec<MatrixData>,
    pub certificates: Vec<Certificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub mode: PathMode,
    pub accepted: bool,
    pub retries_used: usize,
    pub curve: CurveSpec,
    /// Hermitian generator `H` of the rotation `exp(iHt)`, if any.
    pub rotation: Option<MatrixData>,
    pub shift: Option<usize>,
    pub failures: Vec<String>,
    pub samples: Vec<SampleRecord>,
}

impl PathFile {
    pub fn from_path(p: &CertifiedPath) -> Self {
        Self {
            mode: p.mode,
            accepted: p.accepted,
            retries_used: p.retries_used,
            curve: p.curve.clone(),
            rotation: p.rotation.as_ref().map(matrix_data),
            shift: p.shift,
            failures: p.failures.clone(),
            samples: p
                .samples
                .iter()
                .map(|s| SampleRecord {
                    t: s.t,
                    passed: s.passed(),
                    kraus: s.map.kraus().iter().map(matrix_data).collect(),
                    certificates: s.certificates.clone(),
                })
                .collect(),
        }
    }

    pub fn sample_map(&self, j: usize) -> Result<KrausMap> {
        let s = self
            .samples
            .get(j)
            .ok_or_else(|| Error::InvalidArgument(format!("no sample {j}")))?;
        ChannelFile {
            dim: s.kraus.first().map_or(0, |k| k.len()),
            kraus: s.kraus.clone(),
        }
        .to_map()
    }
}

pub fn write_path(p: &CertifiedPath) -> Result<String> {
    to_json(&PathFile::from_path(p))
}

pub fn read_path(text: &str) -> Result<PathFile> {
    from_json(text, "path file")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub sites: usize,
    pub phys_dim: usize,
    pub basis: String,
    pub amplitudes: Vec<[f64; 2]>,
    /// Optional named pieces, e.g. canonical blocks or periodic components.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<StateComponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateComponent {
    pub label: String,
    pub amplitudes: Vec<[f64; 2]>,
}

pub const BASIS_NOTE: &str = "index = Σ_k i_k · d^(N−k), site 1 most significant";

fn amps(v: &StateVector) -> Vec<[f64; 2]> {
    v.amplitudes.iter().map(|z| [z.re, z.im]).collect()
}

impl StateFile {
    pub fn from_state(v: &StateVector) -> Self {
        Self {
            sites: v.sites,
            phys_dim: v.phys_dim,
            basis: BASIS_NOTE.into(),
            amplitudes: amps(v),
            components: Vec::new(),
        }
    }

    pub fn push_component(&mut self, label: impl Into<String>, v: &StateVector) {
        self.components.push(StateComponent {
            label: label.into(),
            amplitudes: amps(v),
        });
    }

    pub fn to_state(&self) -> Result<StateVector> {
        let expected = self
            .phys_dim
            .checked_pow(self.sites as u32)
            .ok_or_else(|| Error::Parse("state: d^N overflows".into()))?;
        if self.amplitudes.len() != expected {
            return Err(Error::Parse(format!(
                "amplitudes: expected {expected} entries, found {}",
                self.amplitudes.len()
            )));
        }
        Ok(StateVector {
            sites: self.sites,
            phys_dim: self.phys_dim,
            amplitudes: self.amplitudes.iter().map(|z| c(z[0], z[1])).collect::<Vec<_>>().into(),
        })
    }
}

pub fn write_state(file: &StateFile) -> Result<String> {
    to_json(file)
}

pub fn read_state(text: &str) -> Result<StateFile> {
    from_json(text, "state file")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub l: usize,
    pub step: usize,
    pub phys_dim: usize,
    pub local_term: MatrixData,
    pub ground_space_dim: usize,
    pub eigenvalues: Vec<f64>,
    pub ground_energy: Option<f64>,
    pub degeneracy: Option<usize>,
    pub gap: Option<f64>,
    pub solver: Option<String>,
    /// Gap against ring size, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scaling: Vec<ScalingPoint>,
    pub note: String,
}

impl ModelFile {
    pub fn from_model(m: &ParentModel) -> Self {
        let s = m.spectrum.as_ref();
        Self {
            n: m.n,
            l: m.l,
            step: m.step,
            phys_dim: m.phys_dim,
            local_term: matrix_data(&m.h),
            ground_space_dim: m.ground_dim,
            eigenvalues: s.map(|s| s.eigenvalues.clone()).unwrap_or_default(),
            ground_energy: s.map(|s| s.ground_energy),
            degeneracy: s.map(|s| s.degeneracy),
            gap: s.and_then(|s| s.gap),
            solver: s.map(|s| format!("{:?}", s.solver).to_lowercase()),
            scaling: Vec::new(),
            note: FINITE_SIZE_NOTE.into(),
        }
    }

    pub fn local_term(&self) -> Result<CMat> {
        square_from_data(&self.local_term, "local_term")
    }
}

pub const FINITE_SIZE_NOTE: &str = "finite-N spectra; no extrapolation to the infinite chain";

pub fn write_model(m: &ParentModel) -> Result<String> {
    to_json(&ModelFile::from_model(m))
}

pub fn read_model(text: &str) -> Result<ModelFile> {
    from_json(text, "model file")
}

pub fn write_report_csv(report: &ExperimentReport) -> String {
    report.to_csv()
}

/// Parses the CSV written by [`write_report_csv`]. `ground_dim` is not stored
/// and comes back as 0.
pub fn read_report_csv(text: &str) -> Result<Vec<ExperimentRow>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "t,gap,degeneracy,h_jump,certificate_ok" {
        return Err(Error::Parse(format!("report line 1: unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("report line {lineno}: expected 5 fields, found {}", f.len())));
        }
        let num = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("report line {lineno}, field {name}: {e}")))
        };
        let gap = num(f[1], "gap")?;
        rows.push(ExperimentRow {
            t: num(f[0], "t")?,
            gap: if gap.is_nan() { None } else { Some(gap) },
            degeneracy: f[2]
                .parse()
                .map_err(|e| Error::Parse(format!("report line {lineno}, field degeneracy: {e}")))?,
            ground_dim: 0,
            h_jump: num(f[3], "h_jump")?,
            certificate_ok: f[4]
                .parse()
                .map_err(|e| Error::Parse(format!("report line {lineno}, field certificate_ok: {e}")))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{aklt_kraus, random_channel, weyl_channel};
    use crate::mps::mps_vector;
    use crate::parent_hamiltonian::parent_model;
    use crate::paths::{connect_primitive, PathConfig};

    #[test]
    fn channel_round_trip_is_exact() {
        let map = random_channel(3, 2, 17).unwrap();
        let text = write_channel(&map).unwrap();
        let back = read_channel(&text).unwrap();
        for (x, y) in map.kraus().iter().zip(back.kraus()) {
            assert_eq!(x, y);
        }
        assert_eq!(write_channel(&back).unwrap(), text);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let text = to_json(&vec![0.1f64, 1.0 / 3.0]).unwrap();
        assert_eq!(text.trim(), "[1.0000000000000001e-1,3.3333333333333331e-1]");
    }

    #[test]
    fn parse_errors_name_the_field() {
        let bad = r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0]]]]}"#;
        match read_channel(bad) {
            Err(Error::Parse(msg)) => assert!(msg.contains("kraus[0] row 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
        match read_channel("{\"dim\": 2,\n \"kraus\": oops}") {
            Err(Error::Parse(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn path_round_trip() {
        let a = weyl_channel(2, 2).unwrap();
        let b = random_channel(2, 2, 3).unwrap();
        let cfg = PathConfig { samples: 5, ..Default::default() };
        let p = connect_primitive(&a, &b, true, &cfg).unwrap();
        let text = write_path(&p).unwrap();
        let back = read_path(&text).unwrap();
        assert_eq!(back, PathFile::from_path(&p));
        let m = back.sample_map(4).unwrap();
        for (x, y) in m.kraus().iter().zip(p.samples[4].map.kraus()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn state_and_model_round_trip() {
        let v = mps_vector(&aklt_kraus(), 4).unwrap();
        let mut f = StateFile::from_state(&v);
        f.push_component("whole", &v);
        let back = read_state(&write_state(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_state().unwrap(), v);

        let mut model = parent_model(&aklt_kraus(), 2, 4).unwrap();
        model.diagonalize(3).unwrap();
        let mf = ModelFile::from_model(&model);
        let back = read_model(&write_model(&model).unwrap()).unwrap();
        assert_eq!(back, mf);
        assert_eq!(back.local_term().unwrap(), model.h);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ExperimentRow { t: 0.0, gap: Some(0.25), degeneracy: 1, ground_dim: 0, h_jump: 0.0, certificate_ok: true },
            ExperimentRow { t: 1.0, gap: None, degeneracy: 2, ground_dim: 0, h_jump: 1.0 / 3.0, certificate_ok: false },
        ];
        let mut text = String::from("t,gap,degeneracy,h_jump,certificate_ok\n");
        for r in &rows {
            let gap = r.gap.map(|g| format!("{g:.16e}")).unwrap_or_else(|| "nan".into());
            text.push_str(&format!("{:.16e},{gap},{},{:.16e},{}\n", r.t, r.degeneracy, r.h_jump, r.certificate_ok));
        }
        let back = read_report_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].h_jump, 1.0 / 3.0);
        assert_eq!(back[1].gap, None);
        assert!(read_report_csv("a,b\n").is_err());
    }
}
