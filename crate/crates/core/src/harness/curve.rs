use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Lowest reported NMSD; also what an exact match maps to.
pub const NMSD_FLOOR_DB: f64 = -300.0;

/// Decimal places of the `nmsd_db` CSV column.
pub const NMSD_DECIMALS: usize = 6;
/// Decimal places of the `e_fullband` CSV column.
pub const ERROR_DECIMALS: usize = 9;

/// Normalized squared deviation `|w - w_o|^2 / |w_o|^2` (linear).
pub fn nmsd_ratio(w: &[f64], w_o: &[f64]) -> Result<f64> {
    assert_eq!(w.len(), w_o.len(), "weight length mismatch");
    let norm: f64 = w_o.iter().map(|x| x * x).sum();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dev: f64 = w.iter().zip(w_o).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(dev / norm)
}

/// Ratio in dB, clipped at [`NMSD_FLOOR_DB`].
pub fn ratio_to_db(ratio: f64) -> f64 {
    let db = 10.0 * ratio.log10();
    if db.is_nan() || db < NMSD_FLOOR_DB {
        NMSD_FLOOR_DB
    } else {
        db
    }
}

/// NMSD in dB.
pub fn nmsd(w: &[f64], w_o: &[f64]) -> Result<f64> {
    nmsd_ratio(w, w_o).map(ratio_to_db)
}

/// NMSD learning curve sampled at full-rate indices `n = kN`.
///
/// Values are held at CSV precision (see [`LearningCurve::quantized`]), so
/// writing and re-reading a curve reproduces it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub samples: Vec<usize>,
    pub nmsd_db: Vec<f64>,
    /// Fullband output error `e(n)` (single run) or its mean square (averaged).
    pub e_fullband: Option<Vec<f64>>,
    /// Number of runs averaged into the curve (1 for a single trial).
    pub runs: usize,
}

fn round_to(x: f64, decimals: usize) -> f64 {
    format!("{x:.decimals$}").parse().expect("formatted float parses")
}

impl LearningCurve {
    /// Rounds every value to its CSV precision.
    pub fn quantized(mut self) -> Self {
        for v in &mut self.nmsd_db {
            *v = round_to(*v, NMSD_DECIMALS);
        }
        if let Some(e) = self.e_fullband.as_mut() {
            for v in e {
                *v = round_to(*v, ERROR_DECIMALS);
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// dB of the mean linear NMSD over points with `from <= sample < to`.
    pub fn mean_db(&self, from: usize, to: usize) -> Option<f64> {
        let vals: Vec<f64> = self
            .samples
            .iter()
            .zip(&self.nmsd_db)
            .filter(|(&s, _)| s >= from && s < to)
            .map(|(_, &db)| 10f64.powf(db / 10.0))
            .collect();
        (!vals.is_empty()).then(|| ratio_to_db(vals.iter().sum::<f64>() / vals.len() as f64))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,nmsd_db");
        if self.e_fullband.is_some() {
            s.push_str(",e_fullband");
        }
        s.push('\n');
        for (i, (n, db)) in self.samples.iter().zip(&self.nmsd_db).enumerate() {
            let _ = write!(s, "{n},{db:.NMSD_DECIMALS$}");
            if let Some(e) = &self.e_fullband {
                let _ = write!(s, ",{:.ERROR_DECIMALS$}", e[i]);
            }
            s.push('\n');
        }
        s
    }

    /// Parses [`to_csv`](Self::to_csv) output. The run count is not stored
    /// and comes back as 1.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let with_error = match header.trim() {
            "sample,nmsd_db" => false,
            "sample,nmsd_db,e_fullband" => true,
            other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
        };
        let mut curve = LearningCurve {
            samples: Vec::new(),
            nmsd_db: Vec::new(),
            e_fullband: with_error.then(Vec::new),
            runs: 1,
        };
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("CSV row {}: {line:?}", i + 2));
            let mut fields = line.split(',');
            let n = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let db = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            curve.samples.push(n);
            curve.nmsd_db.push(db);
            if let Some(e) = curve.e_fullband.as_mut() {
                e.push(fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?);
            }
            if fields.next().is_some() {
                return Err(bad());
            }
        }
        Ok(curve)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
