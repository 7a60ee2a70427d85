//! Training data: the exemplary delayed plant, excitation signals and CSV datasets.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::random::seeded;

/// Output scale used to normalise the exemplary plant's response.
pub const NORMALIZATION: f64 = 30.0;

/// Paired input and target trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub u: Vec<f64>,
    pub t: Vec<f64>,
    pub label: String,
}

impl Dataset {
    pub fn new(u: Vec<f64>, t: Vec<f64>, label: impl Into<String>) -> Result<Dataset> {
        if u.len() != t.len() {
            return Err(Error::InvalidDataset(format!(
                "u has {} samples but t has {}",
                u.len(),
                t.len()
            )));
        }
        if u.is_empty() {
            return Err(Error::InvalidDataset("dataset has no samples".into()));
        }
        if u.iter().chain(&t).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("dataset contains non-finite values".into()));
        }
        Ok(Dataset {
            u,
            t,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// `x(k) = -0.05 x(k-1) + 0.02 x(k-5) + sin(x(k-10)/10) + u(k-15)`, zero before k = 0.
pub fn simulate_exemplary(u: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = Vec::with_capacity(u.len());
    let past = |x: &[f64], k: usize, lag: usize| if k >= lag { x[k - lag] } else { 0.0 };
    for k in 0..u.len() {
        let uk = if k >= 15 { u[k - 15] } else { 0.0 };
        let next = -0.05 * past(&x, k, 1) + 0.02 * past(&x, k, 5) + (past(&x, k, 10) / 10.0).sin() + uk;
        x.push(next);
    }
    x
}

pub fn normalize(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v / NORMALIZATION).collect()
}

/// Piecewise-constant excitation: a fresh uniform level every `hold` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSpec {
    pub length: usize,
    pub hold: usize,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

impl ExcitationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.hold == 0 {
            return Err(Error::InvalidDataset("length and hold must be at least 1".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::InvalidDataset(format!(
                "amplitude range [{}, {}] is invalid",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

pub fn generate_excitation(spec: &ExcitationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let mut out = Vec::with_capacity(spec.length);
    let mut level = 0.0;
    for k in 0..spec.length {
        if k % spec.hold == 0 {
            level = if spec.lo == spec.hi {
                spec.lo
            } else {
                rng.random_range(spec.lo..=spec.hi)
            };
        }
        out.push(level);
    }
    Ok(out)
}

/// Runs the exemplary plant on the given excitation and normalises its response.
pub fn exemplary_dataset(spec: &ExcitationSpec, label: impl Into<String>) -> Result<Dataset> {
    let u = generate_excitation(spec)?;
    let t = normalize(&simulate_exemplary(&u));
    Dataset::new(u, t, label)
}

/// Default excitations for the exemplary plant: one learning set and two verification sets.
pub fn default_excitations() -> [(&'static str, ExcitationSpec); 3] {
    let base = ExcitationSpec {
        length: 1000,
        hold: 50,
        lo: -1.0,
        hi: 1.0,
        seed: 1000,
    };
    [
        ("learning", base.clone()),
        (
            "verification1",
            ExcitationSpec {
                hold: 25,
                seed: 1001,
                ..base.clone()
            },
        ),
        (
            "verification2",
            ExcitationSpec {
                hold: 100,
                seed: 1002,
                ..base
            },
        ),
    ]
}

pub fn default_learning_dataset() -> Dataset {
    let (label, spec) = &default_excitations()[0];
    exemplary_dataset(spec, *label).expect("default excitation is valid")
}

pub fn default_verification_datasets() -> Vec<Dataset> {
    default_excitations()[1..]
        .iter()
        .map(|(label, spec)| exemplary_dataset(spec, *label).expect("default excitation is valid"))
        .collect()
}

fn label_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads `k,u,t` (or `k,u`, in which case `t` is `None`).
fn read_columns(path: &Path, require_target: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let width = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["k", "u", "t"] => 3,
        ["k", "u"] if !require_target => 2,
        _ => {
            let expected = if require_target { "k,u,t" } else { "k,u,t or k,u" };
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("expected header `{expected}`, found `{}`", header.join(",")),
            });
        }
    };

    let mut u = Vec::new();
    let mut t = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(idx + 2);
        if record.len() != width {
            return Err(Error::ColumnCount {
                path: path.to_path_buf(),
                line,
                expected: width,
                found: record.len(),
            });
        }
        let k: u64 = record[0].parse().map_err(|_| Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason: format!("`{}` is not a sample index", &record[0]),
        })?;
        if k != idx as u64 {
            return Err(Error::NonContiguous {
                path: path.to_path_buf(),
                line,
                expected: idx as u64,
                found: k,
            });
        }
        let columns: &[&'static str] = if width == 3 { &["u", "t"] } else { &["u"] };
        for (offset, &column) in columns.iter().enumerate() {
            let text = &record[offset + 1];
            let value: f64 = text.parse().map_err(|_| Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                reason: format!("`{text}` in column `{column}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    line,
                    column,
                });
            }
            if column == "u" {
                u.push(value);
            } else {
                t.push(value);
            }
        }
    }
    if u.is_empty() {
        return Err(Error::EmptyDataset { path: path.to_path_buf() });
    }
    Ok((u, (width == 3).then_some(t)))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::ColumnCount {
            path: path.to_path_buf(),
            line,
            expected: expected_len as usize,
            found: len as usize,
        },
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Loads a `k,u,t` dataset; the label is the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let (u, t) = read_columns(path, true)?;
    Dataset::new(u, t.expect("target column required"), label_from_path(path))
}

/// Loads the `u` column of a `k,u` or `k,u,t` file.
pub fn load_input(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    Ok(read_columns(path.as_ref(), false)?.0)
}

/// Writes `k,u,t` with shortest round-trip float formatting.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(dataset.len() * 48);
    out.push_str("k,u,t\n");
    for (k, (u, t)) in dataset.u.iter().zip(&dataset.t).enumerate() {
        out.push_str(&format!("{k},{u:?},{t:?}\n"));
    }
    write_text(path, &out)
}

/// Writes a `k,u` input trajectory.
pub fn save_input(u: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(u.len() * 24);
    out.push_str("k,u\n");
    for (k, v) in u.iter().enumerate() {
        out.push_str(&format!("{k},{v:?}\n"));
    }
    write_text(path.as_ref(), &out)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_is_a_fixed_point() {
        assert!(simulate_exemplary(&[0.0; 64]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_step_response() {
        let x = simulate_exemplary(&[1.0; 40]);
        assert!(x[..15].iter().all(|&v| v == 0.0));
        assert_eq!(x[15], 1.0);
        assert_eq!(x[16], 0.95);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[30.0, 0.0, -15.0]), vec![1.0, 0.0, -0.5]);
    }

    #[test]
    fn excitation_shapes() {
        let constant = generate_excitation(&ExcitationSpec {
            length: 7,
            hold: 2,
            lo: 0.4,
            hi: 0.4,
            seed: 1,
        })
        .unwrap();
        assert_eq!(constant, vec![0.4; 7]);

        let spec = ExcitationSpec {
            length: 10,
            hold: 5,
            lo: -1.0,
            hi: 1.0,
            seed: 3,
        };
        let u = generate_excitation(&spec).unwrap();
        assert!(u[..5].iter().all(|&v| v == u[0]));
        assert!(u[5..].iter().all(|&v| v == u[5]));
        assert_ne!(u[0], u[5]);
        assert_eq!(u, generate_excitation(&spec).unwrap());
    }

    #[test]
    fn excitation_rejects_bad_specs() {
        let bad = ExcitationSpec {
            length: 10,
            hold: 0,
            lo: 0.0,
            hi: 1.0,
            seed: 0,
        };
        assert!(generate_excitation(&bad).is_err());
        let inverted = ExcitationSpec { hold: 1, lo: 2.0, ..bad };
        assert!(generate_excitation(&inverted).is_err());
    }

    #[test]
    fn default_datasets_have_expected_shape() {
        let learning = default_learning_dataset();
        assert_eq!(learning.len(), 1000);
        assert!(learning.u.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(default_verification_datasets().len(), 2);
    }
}
