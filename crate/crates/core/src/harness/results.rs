use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebno_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_simulated: u64,
    pub trials: u64,
    /// No errors were seen; `ber` is the bound `1 / bits_simulated`.
    pub upper_bound: bool,
}

impl BerPoint {
    pub fn from_counts(ebno_db: f64, bit_errors: u64, bits_simulated: u64, trials: u64) -> Self {
        let upper_bound = bit_errors == 0;
        let ber = if bits_simulated == 0 {
            f64::NAN
        } else if upper_bound {
            1.0 / bits_simulated as f64
        } else {
            bit_errors as f64 / bits_simulated as f64
        };
        Self {
            ebno_db,
            ber,
            bit_errors,
            bits_simulated,
            trials,
            upper_bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
}

impl BerCurve {
    /// Eb/N0 where the curve first drops below `target`, interpolating
    /// `log10(BER)` linearly between grid points. `None` if it never does
    /// or already starts below.
    pub fn ebno_at_ber(&self, target: f64) -> Option<f64> {
        let first = self.points.first()?;
        if first.ber < target {
            return None;
        }
        self.points.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.ber >= target && b.ber < target {
                let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target.log10());
                Some(a.ebno_db + (b.ebno_db - a.ebno_db) * (la - lt) / (la - lb))
            } else {
                None
            }
        })
    }

    pub fn ber_at(&self, ebno_db: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.ebno_db - ebno_db).abs() < 1e-9)
            .map(|p| p.ber)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    ebno_db: f64,
    ber: f64,
    bit_errors: u64,
    bits: u64,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    version: String,
    config: Option<SimConfig>,
    points: Vec<SidecarPoint>,
}

#[derive(Serialize, Deserialize)]
struct SidecarPoint {
    ebno_db: f64,
    trials: u64,
    upper_bound: bool,
}

/// `results.csv` → `results.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

/// Writes the BER table as CSV plus a JSON sidecar with the configuration.
pub fn write_results(curve: &BerCurve, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| parse_err(path, e))?;
    // Written explicitly so an empty curve still gets a header.
    w.write_record(["ebno_db", "ber", "bit_errors", "bits"])
        .map_err(|e| parse_err(path, e))?;
    for p in &curve.points {
        w.serialize(Row {
            ebno_db: p.ebno_db,
            ber: p.ber,
            bit_errors: p.bit_errors,
            bits: p.bits_simulated,
        })
        .map_err(|e| parse_err(path, e))?;
    }
    w.flush().map_err(io_err(path))?;

    let meta = Sidecar {
        version: crate::VERSION.to_owned(),
        config: curve.config.clone(),
        points: curve
            .points
            .iter()
            .map(|p| SidecarPoint {
                ebno_db: p.ebno_db,
                trials: p.trials,
                upper_bound: p.upper_bound,
            })
            .collect(),
    };
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| parse_err(&side, e))?;
    text.push('\n');
    std::fs::write(&side, text).map_err(io_err(&side))
}

/// Reads a table written by [`write_results`]; the sidecar is optional.
pub fn read_results(path: &Path) -> Result<BerCurve> {
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(path, e))?;
    let rows: Vec<Row> = r
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(path, e))?;

    let side = sidecar_path(path);
    let meta: Option<Sidecar> = match std::fs::read_to_string(&side) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| parse_err(&side, e))?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&side)(e)),
    };
    let extra = |i: usize| meta.as_ref().and_then(|m| m.points.get(i));
    let points = rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| BerPoint {
            ebno_db: row.ebno_db,
            ber: row.ber,
            bit_errors: row.bit_errors,
            bits_simulated: row.bits,
            trials: extra(i).map_or(0, |p| p.trials),
            upper_bound: extra(i).map_or(row.bit_errors == 0, |p| p.upper_bound),
        })
        .collect();
    Ok(BerCurve {
        points,
        config: meta.and_then(|m| m.config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(bers: &[(f64, f64)]) -> BerCurve {
        BerCurve {
            points: bers
                .iter()
                .map(|&(e, b)| BerPoint {
                    ebno_db: e,
                    ber: b,
                    bit_errors: 1,
                    bits_simulated: 1,
                    trials: 1,
                    upper_bound: false,
                })
                .collect(),
            config: None,
        }
    }

    #[test]
    fn zero_error_points_are_bounds() {
        let p = BerPoint::from_counts(10.0, 0, 4000, 5);
        assert!(p.upper_bound);
        assert_eq!(p.ber, 1.0 / 4000.0);
        let p = BerPoint::from_counts(10.0, 3, 4000, 5);
        assert!(!p.upper_bound);
        assert_eq!(p.ber, 3.0 / 4000.0);
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let c = curve(&[(0.0, 1e-1), (10.0, 1e-3), (20.0, 1e-5)]);
        assert!((c.ebno_at_ber(1e-2).unwrap() - 5.0).abs() < 1e-12);
        assert!((c.ebno_at_ber(1e-4).unwrap() - 15.0).abs() < 1e-12);
        assert_eq!(c.ebno_at_ber(1e-6), None);
        assert_eq!(c.ebno_at_ber(0.5), None);
        assert_eq!(c.ber_at(10.0), Some(1e-3));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let c = BerCurve {
            points: vec![
                BerPoint::from_counts(0.0, 1234, 100_000, 10),
                BerPoint::from_counts(2.5, 0, 1_000_000, 100),
            ],
            config: Some(SimConfig::preset("example2-bu").unwrap()),
        };
        write_results(&c, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("ebno_db,ber,bit_errors,bits\n"));
        assert!(dir.path().join("run.meta.json").exists());
        assert_eq!(read_results(&path).unwrap(), c);

        std::fs::remove_file(sidecar_path(&path)).unwrap();
        let bare = read_results(&path).unwrap();
        assert_eq!(bare.config, None);
        assert!(bare.points[1].upper_bound);
    }

    #[test]
    fn empty_curve_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let c = BerCurve {
            points: vec![],
            config: None,
        };
        write_results(&c, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "ebno_db,ber,bit_errors,bits\n");
        assert_eq!(read_results(&path).unwrap(), c);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_results(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. } | Error::Io { .. }));
    }
}
