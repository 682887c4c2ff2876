//! CSV dataset ingestion with declared column roles, and CSV writers for
//! chains and posterior summaries.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytics::summary::PosteriorSummary;
use crate::bases::DesignMatrix;
use crate::error::{Error, Result};
use crate::graph::AdjacencyGraph;
use crate::samplers::ChainOutput;

/// Which CSV columns play which part. A covariate written `name^2` is the
/// square of column `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub response: String,
    pub covariates: Vec<String>,
    /// Raw expected counts; logged when used as an offset.
    #[serde(default)]
    pub offset: Option<String>,
    #[serde(default)]
    pub id: Option<String>,
}

impl ColumnRoles {
    /// verbal ~ percent + percent².
    pub fn sat() -> Self {
        Self {
            response: "verbal".into(),
            covariates: vec!["percent".into(), "percent^2".into()],
            offset: None,
            id: Some("state".into()),
        }
    }

    /// observed ~ seco with offset log(expected).
    pub fn slovenia() -> Self {
        Self {
            response: "observed".into(),
            covariates: vec!["seco".into()],
            offset: Some("expected".into()),
            id: Some("municipality".into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub ids: Option<Vec<String>>,
    pub y: DVector<f64>,
    pub covariates: DMatrix<f64>,
    pub covariate_names: Vec<String>,
    /// As read, before logging.
    pub offset_raw: Option<DVector<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn design(&self, intercept: bool) -> Result<DesignMatrix> {
        let names: Vec<&str> = self.covariate_names.iter().map(String::as_str).collect();
        DesignMatrix::from_covariates(&self.covariates, intercept, &names)
    }

    /// log of the raw offset column, or zeros when there is none.
    pub fn log_offset(&self) -> Result<DVector<f64>> {
        match &self.offset_raw {
            None => Ok(DVector::zeros(self.n())),
            Some(e) => {
                if let Some(i) = e.iter().position(|v| !(*v > 0.0)) {
                    return Err(Error::Parse {
                        line: Some(i + 2),
                        msg: format!("offset must be positive, got {}", e[i]),
                    });
                }
                Ok(e.map(f64::ln))
            }
        }
    }

    pub fn check_graph(&self, g: &AdjacencyGraph) -> Result<()> {
        if g.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} rows but the graph has {} vertices",
                self.n(),
                g.n()
            )));
        }
        Ok(())
    }

    /// Counts must be non-negative integers for Poisson fits.
    pub fn check_counts(&self) -> Result<()> {
        for (i, v) in self.y.iter().enumerate() {
            if *v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Parse {
                    line: Some(i + 2),
                    msg: format!("response {v} is not a non-negative integer count"),
                });
            }
        }
        Ok(())
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
        line: Some(1),
        msg: format!("column '{name}' not found in header"),
    })
}

pub fn parse_dataset<R: Read>(r: R, roles: &ColumnRoles) -> Result<Dataset> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let headers = rd.headers()?.clone();
    let yi = column(&headers, &roles.response)?;
    let mut cov_idx = Vec::new();
    for c in &roles.covariates {
        let (base, square) = match c.strip_suffix("^2") {
            Some(b) => (b, true),
            None => (c.as_str(), false),
        };
        cov_idx.push((column(&headers, base)?, square));
    }
    let oi = roles.offset.as_deref().map(|o| column(&headers, o)).transpose()?;
    let ii = roles.id.as_deref().map(|o| column(&headers, o)).transpose()?;

    let mut y = Vec::new();
    let mut cov: Vec<f64> = Vec::new();
    let mut off = Vec::new();
    let mut ids = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let num = |j: usize, what: &str| -> Result<f64> {
            let s = rec.get(j).unwrap_or("");
            if s.is_empty() || s.eq_ignore_ascii_case("na") {
                return Err(Error::Parse {
                    line: Some(line),
                    msg: format!("missing value in column '{what}'"),
                });
            }
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: Some(line),
                msg: format!("cannot parse '{s}' in column '{what}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: Some(line),
                    msg: format!("non-finite value in column '{what}'"),
                });
            }
            Ok(v)
        };
        y.push(num(yi, &roles.response)?);
        for (c, &(j, square)) in roles.covariates.iter().zip(&cov_idx) {
            let v = num(j, c)?;
            cov.push(if square { v * v } else { v });
        }
        if let (Some(j), Some(name)) = (oi, roles.offset.as_deref()) {
            off.push(num(j, name)?);
        }
        if let Some(j) = ii {
            ids.push(rec.get(j).unwrap_or("").to_string());
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::Parse {
            line: None,
            msg: "dataset has no rows".into(),
        });
    }
    let p = roles.covariates.len();
    Ok(Dataset {
        ids: ii.map(|_| ids),
        y: DVector::from_vec(y),
        covariates: DMatrix::from_row_slice(n, p, &cov),
        covariate_names: roles.covariates.iter().map(|c| c.replace("^2", "_sq")).collect(),
        offset_raw: oi.map(|_| DVector::from_vec(off)),
    })
}

pub fn read_dataset(path: impl AsRef<Path>, roles: &ColumnRoles) -> Result<Dataset> {
    parse_dataset(std::fs::File::open(path)?, roles)
}

/// coefficient, mean, variance, ci_lo, ci_hi, median, mcse
pub fn write_summary_csv<W: Write>(s: &PosteriorSummary, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in &s.rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

/// One row per retained iteration: β columns, then τ_ε and τ_s when present.
pub fn write_chain_csv<W: Write>(chain: &ChainOutput, w: W) -> Result<()> {
    let series = chain.series();
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["iteration".to_string()];
    header.extend(series.iter().map(|(n, _)| n.clone()));
    wr.write_record(&header)?;
    for i in 0..chain.len() {
        let mut rec = vec![(chain.burn_in + i).to_string()];
        rec.extend(series.iter().map(|(_, s)| s[i].to_string()));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAT: &str = "state,verbal,percent\nAL,548,33\nAR,512,49\nAZ,528,43\nCA,522,57\n";

    #[test]
    fn squares_and_ids() {
        let d = parse_dataset(SAT.as_bytes(), &ColumnRoles::sat()).unwrap();
        assert_eq!(d.n(), 4);
        assert_eq!(d.covariates[(1, 1)], 49.0 * 49.0);
        assert_eq!(d.covariate_names, vec!["percent", "percent_sq"]);
        assert_eq!(d.ids.as_ref().unwrap()[2], "AZ");
        assert_eq!(d.design(true).unwrap().p(), 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "state,verbal,percent\nAL,548,33\nAR,x,49\n";
        let e = parse_dataset(bad.as_bytes(), &ColumnRoles::sat()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let missing = "state,verbal,percent\nAL,548,\n";
        let e = parse_dataset(missing.as_bytes(), &ColumnRoles::sat()).unwrap_err();
        assert!(e.to_string().contains("missing"), "{e}");
        let e = parse_dataset("a,b\n1,2\n".as_bytes(), &ColumnRoles::sat()).unwrap_err();
        assert!(e.to_string().contains("'verbal'"), "{e}");
    }

    #[test]
    fn offset_is_logged() {
        let txt = "municipality,observed,expected,seco\n0,3,2.0,0.1\n1,0,4.0,-0.2\n";
        let d = parse_dataset(txt.as_bytes(), &ColumnRoles::slovenia()).unwrap();
        let o = d.log_offset().unwrap();
        assert!((o[1] - 4f64.ln()).abs() < 1e-15);
        assert_eq!(d.offset_raw.as_ref().unwrap()[0], 2.0);
        d.check_counts().unwrap();
        assert!(d.check_graph(&AdjacencyGraph::path(3)).is_err());
    }

    #[test]
    fn fixtures_load() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/");
        let sat = read_dataset(format!("{dir}sat_fixture.csv"), &ColumnRoles::sat()).unwrap();
        sat.check_graph(&AdjacencyGraph::us48()).unwrap();
        let slo = read_dataset(format!("{dir}slovenia_fixture.csv"), &ColumnRoles::slovenia()).unwrap();
        assert_eq!(slo.n(), 194);
        slo.check_counts().unwrap();
    }
}
