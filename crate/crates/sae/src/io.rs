//! CSV input and output.
//!
//! Formats (all UTF-8, `.` decimal separator, no thousands separators):
//!
//! * area dataset (read): header `id,y,D,kappa_e,x1,...,xp`;
//! * EBLUP fit (write): `id,theta_hat,B,psi_hat`;
//! * MSPE report (write): `id,theta_hat,B,psi_hat,mspe_naive,mspe_normal,mspe_robust`;
//! * unit-level sample (read): `area_id,y,pi`, one row per sampled unit;
//! * unit kurtosis (write): `area_id,y_bar,n_hat,v,mu4,kappa_e`;
//! * study summary (write): `group,D,estimator,rb_pct,rrmse_pct,mc_se_rb`.
//!
//! Numbers are written with Rust's shortest round-trip representation, so
//! re-reading reproduces the exact binary values.

use crate::error::{Error, Result};
use crate::model::{AreaDataset, AreaRecord, Prediction};
use crate::mspe::MspeReport;
use crate::simulation::{EstimatorFamily, StudyResult};
use crate::survey::SurveyMoments;
use std::io::{Read, Write};
use std::path::Path;

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("CSV: {e}"))
}

fn parse_field(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::Parse(format!(
            "row {row}: column '{column}' has non-numeric value '{raw}'"
        ))
    })
}

/// Read an area-level dataset from CSV with header `id,y,D,kappa_e,x1,...,xp`.
pub fn read_area_csv(path: impl AsRef<Path>) -> Result<AreaDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_area_from(file)
}

/// As [`read_area_csv`] but from any reader.
pub fn read_area_from<R: Read>(reader: R) -> Result<AreaDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let fixed = ["id", "y", "D", "kappa_e"];
    if headers.len() < fixed.len() + 1 {
        return Err(Error::Parse(format!(
            "header must be id,y,D,kappa_e,x1,...,xp with at least one \
             covariate column; got {} columns",
            headers.len()
        )));
    }
    for (k, want) in fixed.iter().enumerate() {
        if &headers[k] != *want {
            return Err(Error::Parse(format!(
                "header column {} must be '{want}', got '{}'",
                k + 1,
                &headers[k]
            )));
        }
    }
    let p = headers.len() - fixed.len();
    for j in 0..p {
        let want = format!("x{}", j + 1);
        if headers[fixed.len() + j] != want {
            return Err(Error::Parse(format!(
                "header column {} must be '{want}', got '{}'",
                fixed.len() + j + 1,
                &headers[fixed.len() + j]
            )));
        }
    }

    let mut records = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(csv_err)?;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {row}: expected {} fields, got {}",
                headers.len(),
                record.len()
            )));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse(format!("row {row}: empty id")));
        }
        let y = parse_field(&record[1], row, "y")?;
        let d = parse_field(&record[2], row, "D")?;
        let kappa_e = parse_field(&record[3], row, "kappa_e")?;
        let mut x = Vec::with_capacity(p);
        for j in 0..p {
            x.push(parse_field(&record[4 + j], row, &format!("x{}", j + 1))?);
        }
        records.push(AreaRecord {
            id,
            y,
            d,
            kappa_e,
            x,
        });
    }
    AreaDataset::new(records)
}

/// Write the EBLUP fit: `id,theta_hat,B,psi_hat`.
pub fn write_fit_csv<W: Write>(
    writer: W,
    data: &AreaDataset,
    psi_hat: f64,
    predictions: &[Prediction],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "theta_hat", "B", "psi_hat"])
        .map_err(csv_err)?;
    for (id, pred) in data.ids().iter().zip(predictions) {
        wtr.write_record([
            id.as_str(),
            &pred.theta.to_string(),
            &pred.b.to_string(),
            &psi_hat.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Write a full MSPE report:
/// `id,theta_hat,B,psi_hat,mspe_naive,mspe_normal,mspe_robust`.
pub fn write_mspe_csv<W: Write>(writer: W, data: &AreaDataset, report: &MspeReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "id",
        "theta_hat",
        "B",
        "psi_hat",
        "mspe_naive",
        "mspe_normal",
        "mspe_robust",
    ])
    .map_err(csv_err)?;
    for ((id, pred), area) in data
        .ids()
        .iter()
        .zip(&report.predictions)
        .zip(&report.areas)
    {
        wtr.write_record([
            id.as_str(),
            &pred.theta.to_string(),
            &pred.b.to_string(),
            &report.psi.value.to_string(),
            &area.naive.to_string(),
            &area.normal.to_string(),
            &area.robust.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// A within-area unit sample read from CSV.
#[derive(Debug, Clone)]
pub struct UnitSample {
    pub area_id: String,
    pub y: Vec<f64>,
    pub pi: Vec<f64>,
}

/// Read a unit-level CSV (`area_id,y,pi`) and group rows by area in order
/// of first appearance.
pub fn read_unit_csv(path: impl AsRef<Path>) -> Result<Vec<UnitSample>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_unit_from(file)
}

/// As [`read_unit_csv`] but from any reader.
pub fn read_unit_from<R: Read>(reader: R) -> Result<Vec<UnitSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let want = ["area_id", "y", "pi"];
    if headers.len() != want.len() || want.iter().enumerate().any(|(k, w)| &headers[k] != *w) {
        return Err(Error::Parse(format!(
            "header must be area_id,y,pi; got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut samples: Vec<UnitSample> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(csv_err)?;
        if record.len() != 3 {
            return Err(Error::Parse(format!(
                "row {row}: expected 3 fields, got {}",
                record.len()
            )));
        }
        let area_id = record[0].to_string();
        if area_id.is_empty() {
            return Err(Error::Parse(format!("row {row}: empty area_id")));
        }
        let y = parse_field(&record[1], row, "y")?;
        let pi = parse_field(&record[2], row, "pi")?;
        match samples.iter_mut().find(|s| s.area_id == area_id) {
            Some(s) => {
                s.y.push(y);
                s.pi.push(pi);
            }
            None => samples.push(UnitSample {
                area_id,
                y: vec![y],
                pi: vec![pi],
            }),
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidDataset("no unit rows in file".into()));
    }
    Ok(samples)
}

/// Write per-area design moments: `area_id,y_bar,n_hat,v,mu4,kappa_e`.
pub fn write_unit_kurtosis_csv<W: Write>(
    writer: W,
    rows: &[(String, SurveyMoments)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["area_id", "y_bar", "n_hat", "v", "mu4", "kappa_e"])
        .map_err(csv_err)?;
    for (id, m) in rows {
        wtr.write_record([
            id.as_str(),
            &m.y_bar.to_string(),
            &m.n_hat.to_string(),
            &m.v.to_string(),
            &m.mu4.to_string(),
            &m.kappa_e.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Write the long-format study summary:
/// `group,D,estimator,rb_pct,rrmse_pct,mc_se_rb`.
pub fn write_study_csv<W: Write>(writer: W, result: &StudyResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["group", "D", "estimator", "rb_pct", "rrmse_pct", "mc_se_rb"])
        .map_err(csv_err)?;
    for g in &result.groups {
        for family in EstimatorFamily::ALL {
            let s = g.stat(family);
            wtr.write_record([
                &format!("G{}", g.group),
                &g.d.to_string(),
                family.label(),
                &s.rb_pct.to_string(),
                &s.rrmse_pct.to_string(),
                &s.mc_se_rb.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
