//! CSV and JSON writers for analysis, design and optimization results.
//!
//! Every CSV has a header row and LF line endings. Floats are written in
//! scientific notation with nine significant digits, so output is bit-stable
//! across runs and parses back to within half a unit in the ninth digit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ambiguity::{AcfReport, AfGrid};
use crate::design::{Branch, Figure1};
use crate::eoa::EoaParameters;
use crate::error::Result;
use crate::optimizer::{HistoryEntry, IslResult};

/// `power_db` written for delays where `|R|^2` is zero or below this level.
pub const POWER_DB_FLOOR: f64 = -300.0;

pub const FIGURE1_CIRCLE: &str = "figure1_circle.csv";
pub const FIGURE1_RHO: &str = "figure1_rho.csv";
pub const FIGURE1_RHO_MAX: &str = "figure1_rho_max.csv";

/// Nine significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn write_rows<const K: usize>(
    path: &Path,
    header: [&str; K],
    rows: impl IntoIterator<Item = [String; K]>,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one `(tau, nu, magnitude)` row per grid cell, Doppler-major.
pub fn write_af_csv(path: &Path, grid: &AfGrid) -> Result<()> {
    let rows = grid
        .dopplers
        .iter()
        .zip(&grid.magnitude)
        .flat_map(|(nu, row)| {
            grid.delays
                .iter()
                .zip(row)
                .map(move |(tau, m)| [format_float(*tau), format_float(*nu), format_float(*m)])
        });
    write_rows(path, ["tau", "nu", "magnitude"], rows)
}

/// `10 log10(|R|^2 / |R(0)|^2)`, floored at [`POWER_DB_FLOOR`].
pub fn power_db(power: &[f64]) -> Vec<f64> {
    let peak = power.first().copied().unwrap_or(0.0);
    power
        .iter()
        .map(|p| {
            let db = 10.0 * (p / peak).log10();
            if db.is_nan() || db < POWER_DB_FLOOR {
                POWER_DB_FLOOR
            } else {
                db
            }
        })
        .collect()
}

pub fn write_acf_csv(path: &Path, report: &AcfReport) -> Result<()> {
    let rows = report
        .delays
        .iter()
        .zip(power_db(&report.power))
        .map(|(tau, db)| [format_float(*tau), format_float(db)]);
    write_rows(path, ["tau", "power_db"], rows)
}

pub fn write_contour_csv(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let rows = points
        .iter()
        .map(|(t, v)| [format_float(*t), format_float(*v)]);
    write_rows(path, ["tau", "nu"], rows)
}

fn branch_name(b: Branch) -> String {
    match b {
        Branch::Positive => "positive".into(),
        Branch::Negative => "negative".into(),
    }
}

/// Writes the three figure files into `dir` and returns their paths.
pub fn write_figure1(dir: &Path, fig: &Figure1) -> Result<Vec<PathBuf>> {
    let circle = dir.join(FIGURE1_CIRCLE);
    write_rows(
        &circle,
        ["branch", "c1", "c2"],
        fig.circle
            .iter()
            .map(|(b, c1, c2)| [branch_name(*b), format_float(*c1), format_float(*c2)]),
    )?;
    let rho = dir.join(FIGURE1_RHO);
    write_rows(
        &rho,
        ["branch", "c1", "rho_norm"],
        fig.rho_trace
            .iter()
            .map(|(b, c1, r)| [branch_name(*b), format_float(*c1), format_float(*r)]),
    )?;
    let rho_max = dir.join(FIGURE1_RHO_MAX);
    write_rows(
        &rho_max,
        ["harmonics", "rho_norm_max"],
        fig.rho_max
            .iter()
            .map(|(l, r)| [l.to_string(), format_float(*r)]),
    )?;
    Ok(vec![circle, rho, rho_max])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub waveform: String,
    pub c1: f64,
    pub c2: f64,
    pub rho_norm: f64,
}

/// Initial and optimized sidelobe metrics with the mainlobe-shape ratios.
/// `rho_ratio` is `None` when the coupling constraint was inactive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub waveform: String,
    pub isl_initial_db: f64,
    pub isl_optimized_db: f64,
    pub pslr_initial_db: f64,
    pub pslr_optimized_db: f64,
    pub beta_ratio: f64,
    pub rho_ratio: Option<f64>,
}

impl Table2Row {
    pub fn from_result(waveform: &str, r: &IslResult) -> Self {
        Self {
            waveform: waveform.into(),
            isl_initial_db: r.initial.isl_db,
            isl_optimized_db: r.report.isl_db,
            pslr_initial_db: r.initial.pslr_db,
            pslr_optimized_db: r.report.pslr_db,
            beta_ratio: r.beta_ratio,
            rho_ratio: r.rho_ratio,
        }
    }
}

pub fn write_table1(path: &Path, rows: &[Table1Row]) -> Result<()> {
    write_rows(
        path,
        ["waveform", "c1", "c2", "rho_norm"],
        rows.iter().map(|r| {
            [
                r.waveform.clone(),
                format_float(r.c1),
                format_float(r.c2),
                format_float(r.rho_norm),
            ]
        }),
    )
}

pub fn write_table2(path: &Path, rows: &[Table2Row]) -> Result<()> {
    write_rows(
        path,
        [
            "waveform",
            "isl_initial_db",
            "isl_optimized_db",
            "pslr_initial_db",
            "pslr_optimized_db",
            "beta_ratio",
            "rho_ratio",
        ],
        rows.iter().map(|r| {
            [
                r.waveform.clone(),
                format_float(r.isl_initial_db),
                format_float(r.isl_optimized_db),
                format_float(r.pslr_initial_db),
                format_float(r.pslr_optimized_db),
                format_float(r.beta_ratio),
                r.rho_ratio.map(format_float).unwrap_or_default(),
            ]
        }),
    )
}

/// Scalar ACF metrics of one waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub isl_db: f64,
    pub pslr_db: f64,
    pub null_delay: f64,
    pub samples: usize,
}

impl Metrics {
    pub fn from_report(report: &AcfReport) -> Self {
        Self {
            isl_db: report.isl_db,
            pslr_db: report.pslr_db,
            null_delay: report.null_delay,
            samples: report.power.len() - 1,
        }
    }
}

/// Serialized form of an optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub seed: crate::waveform::WaveformSpec,
    pub optimized: crate::waveform::WaveformSpec,
    pub samples: usize,
    pub initial: Metrics,
    pub optimized_metrics: Metrics,
    pub initial_eoa: EoaParameters,
    pub optimized_eoa: EoaParameters,
    pub beta_ratio: f64,
    pub rho_ratio: Option<f64>,
    pub rho_active: bool,
    pub feasible: bool,
    pub improved: bool,
    pub budget_exhausted: bool,
    pub evaluations: usize,
    pub history: Vec<HistoryEntry>,
}

impl From<&IslResult> for ResultDocument {
    fn from(r: &IslResult) -> Self {
        Self {
            seed: r.seed.clone(),
            optimized: r.spec.clone(),
            samples: r.samples,
            initial: Metrics::from_report(&r.initial),
            optimized_metrics: Metrics::from_report(&r.report),
            initial_eoa: r.initial_eoa,
            optimized_eoa: r.eoa,
            beta_ratio: r.beta_ratio,
            rho_ratio: r.rho_ratio,
            rho_active: r.rho_active,
            feasible: r.feasible,
            improved: r.improved,
            budget_exhausted: r.budget_exhausted,
            evaluations: r.evaluations,
            history: r.history.clone(),
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}

/// Reads a CSV written by this module back as header plus rows of strings.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::{ambiguity, analyze};
    use crate::design::figure1;
    use crate::eoa::{eoa_closed_form, eoa_contour};
    use crate::waveform::{FourierCoefficients, WaveformSpec};
    use proptest::prelude::*;

    fn spec() -> WaveformSpec {
        WaveformSpec::new(1.0, FourierCoefficients::sine(vec![20.0, -10.0]).unwrap()).unwrap()
    }

    fn parse(s: &str) -> f64 {
        s.parse().unwrap()
    }

    fn close9(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 5e-9 * a.abs().max(b.abs())
    }

    #[test]
    fn acf_csv_round_trip() {
        let dir = tempdir();
        let report = analyze(&spec().synthesize()).unwrap();
        let path = dir.join("acf.csv");
        write_acf_csv(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("tau,power_db\n"));
        assert!(!text.contains('\r'));
        let (_, rows) = read_csv(&path).unwrap();
        let db = power_db(&report.power);
        assert_eq!(rows.len(), report.delays.len());
        for (row, (tau, d)) in rows.iter().zip(report.delays.iter().zip(&db)) {
            assert!(close9(parse(&row[0]), *tau));
            assert!(close9(parse(&row[1]), *d));
        }
        assert_eq!(parse(&rows.last().unwrap()[1]), POWER_DB_FLOOR);
        assert_eq!(parse(&rows[0][1]), 0.0);
    }

    #[test]
    fn af_csv_is_long_format() {
        let dir = tempdir();
        let w = spec().synthesize();
        let grid = ambiguity(&w, &[0.0, w.dt(), 2.0 * w.dt()], &[-3.0, 0.0, 3.0]).unwrap();
        let path = dir.join("af.csv");
        write_af_csv(&path, &grid).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, ["tau", "nu", "magnitude"]);
        assert_eq!(rows.len(), 9);
        assert!(close9(parse(&rows[4][2]), grid.at(1, 1)));
        assert_eq!(parse(&rows[3][1]), 0.0);
    }

    #[test]
    fn eoa_json_and_contour() {
        let dir = tempdir();
        let p = eoa_closed_form(spec().coeffs(), 1.0);
        let path = dir.join("eoa.json");
        write_json(&path, &p).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for key in ["beta_rms_sq", "tau_rms_sq", "rho", "rho_norm"] {
            assert!(text.contains(&format!("\"{key}\"")));
        }
        assert_eq!(read_json::<EoaParameters>(&path).unwrap(), p);

        let pts = eoa_contour(&p, 0.5, 16).unwrap();
        let path = dir.join("contour.csv");
        write_contour_csv(&path, &pts).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, ["tau", "nu"]);
        assert_eq!(rows.len(), 16);
    }

    #[test]
    fn figure1_files() {
        let dir = tempdir();
        let paths = write_figure1(&dir, &figure1()).unwrap();
        assert_eq!(paths.len(), 3);
        let (_, rho_max) = read_csv(&paths[2]).unwrap();
        assert_eq!(rho_max.len(), 64);
        assert_eq!(rho_max[1][0], "2");
        assert!((parse(&rho_max[1][1]) - 0.8717).abs() < 1e-4);
    }

    #[test]
    fn table2_blank_ratio_when_inactive() {
        let dir = tempdir();
        let row = Table2Row {
            waveform: "III".into(),
            isl_initial_db: 0.1,
            isl_optimized_db: -11.7,
            pslr_initial_db: -11.2,
            pslr_optimized_db: -26.7,
            beta_ratio: 1.099,
            rho_ratio: None,
        };
        let path = dir.join("table2.csv");
        write_table2(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }

    fn tempdir() -> PathBuf {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static NEXT: AtomicUsize = AtomicUsize::new(0);
        let dir = std::env::temp_dir().join(format!(
            "mtsfm-export-{}-{}",
            std::process::id(),
            NEXT.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    proptest! {
        #[test]
        fn nine_digit_round_trip(v in prop::num::f64::NORMAL) {
            let back: f64 = format_float(v).parse().unwrap();
            prop_assert!(close9(back, v));
        }
    }
}
