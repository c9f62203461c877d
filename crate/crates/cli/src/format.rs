//! File formats: JSON instances and dense or triplet matrices.

use std::fs;
use std::path::Path;

use gpcond::rational::{self, format_rational};
use gpcond::GpInstance;
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A number in an instance file: a JSON number, or a string holding an
/// exact rational such as `"3/4"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Float(f64),
    Exact(String),
}

impl Scalar {
    pub fn to_rational(&self) -> Result<BigRational, CliError> {
        match self {
            Scalar::Float(v) => Ok(rational::from_f64(*v)?),
            Scalar::Exact(s) => Ok(rational::parse_rational(s)?),
        }
    }

    pub fn to_f64(&self) -> Result<f64, CliError> {
        match self {
            Scalar::Float(v) => Ok(*v),
            Scalar::Exact(s) => Ok(rational::to_f64(&rational::parse_rational(s)?)),
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }
}

impl From<&BigRational> for Scalar {
    fn from(r: &BigRational) -> Self {
        Scalar::Exact(format_rational(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    /// One exponent vector per monomial.
    pub exponents: Vec<Vec<Scalar>>,
    pub coefficients: Vec<f64>,
    pub shift: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("instance file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::parse(&read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization")
    }

    /// Whether any exponent or shift entry is written as an exact rational.
    pub fn has_exact_entries(&self) -> bool {
        self.exponents.iter().flatten().chain(self.shift.iter()).any(Scalar::is_exact)
    }

    /// Builds the instance. When rational strings are present, all exponent
    /// and shift data are kept exactly as well.
    pub fn to_instance(&self) -> Result<GpInstance, CliError> {
        if self.has_exact_entries() {
            let exponents = self
                .exponents
                .iter()
                .map(|row| row.iter().map(Scalar::to_rational).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let shift = self.shift.iter().map(Scalar::to_rational).collect::<Result<Vec<_>, _>>()?;
            Ok(GpInstance::from_rationals(exponents, self.coefficients.clone(), shift)?)
        } else {
            let exponents = self
                .exponents
                .iter()
                .map(|row| row.iter().map(Scalar::to_f64).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let shift = self.shift.iter().map(Scalar::to_f64).collect::<Result<Vec<_>, _>>()?;
            Ok(GpInstance::new(exponents, self.coefficients.clone(), shift)?.with_exact_rationals())
        }
    }

    pub fn from_instance(inst: &GpInstance) -> Self {
        let (exponents, shift) = match inst.rational_form() {
            Some(rf) => (
                rf.exponents.iter().map(|w| w.iter().map(Scalar::from).collect()).collect(),
                rf.shift.iter().map(Scalar::from).collect(),
            ),
            None => (
                inst.exponents().column_iter().map(|c| c.iter().map(|v| Scalar::Float(*v)).collect()).collect(),
                inst.shift().iter().map(|v| Scalar::Float(*v)).collect(),
            ),
        };
        InstanceFile { exponents, coefficients: inst.coefficients().iter().copied().collect(), shift, metadata: None }
    }
}

/// Matrix input with optional marginal targets.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub matrix: DMatrix<f64>,
    pub row_targets: Option<DVector<f64>>,
    pub col_targets: Option<DVector<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixJson {
    Dense(Vec<Vec<f64>>),
    WithTargets {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        row_targets: Option<Vec<f64>>,
        #[serde(default)]
        col_targets: Option<Vec<f64>>,
    },
}

impl MatrixFile {
    /// Accepts a dense JSON array of rows, a JSON object
    /// `{"matrix": [...], "row_targets": [...], "col_targets": [...]}`, or
    /// triplet text with one `row col value` entry per line (0-indexed, `#`
    /// starts a comment, an optional `rows cols` header line fixes the shape).
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with(['[', '{']) {
            let parsed: MatrixJson =
                serde_json::from_str(text).map_err(|e| CliError::Input(format!("matrix file: {e}")))?;
            let (rows, r, c) = match parsed {
                MatrixJson::Dense(rows) => (rows, None, None),
                MatrixJson::WithTargets { matrix, row_targets, col_targets } => (matrix, row_targets, col_targets),
            };
            Ok(MatrixFile {
                matrix: dense(&rows)?,
                row_targets: r.map(DVector::from_vec),
                col_targets: c.map(DVector::from_vec),
            })
        } else {
            Ok(MatrixFile { matrix: parse_triplets(text)?, row_targets: None, col_targets: None })
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::parse(&read_text(path)?)
    }
}

fn dense(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(CliError::Input("matrix is empty".into()));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Input("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Parses the sparse triplet text format.
pub fn parse_triplets(text: &str) -> Result<DMatrix<f64>, CliError> {
    let mut shape: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || CliError::Input(format!("triplet line {}: {raw:?}", lineno + 1));
        match fields.as_slice() {
            [r, c] if shape.is_none() && entries.is_empty() => {
                shape = Some((r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?));
            }
            [r, c, v] => {
                let i: usize = r.parse().map_err(|_| bad())?;
                let j: usize = c.parse().map_err(|_| bad())?;
                let v: f64 = v.parse().map_err(|_| bad())?;
                entries.push((i, j, v));
            }
            _ => return Err(bad()),
        }
    }
    let inferred = entries.iter().fold((0, 0), |(r, c), &(i, j, _)| (r.max(i + 1), c.max(j + 1)));
    let (rows, cols) = shape.unwrap_or(inferred);
    if rows == 0 || cols == 0 {
        return Err(CliError::Input("matrix is empty".into()));
    }
    let mut m = DMatrix::zeros(rows, cols);
    for (i, j, v) in entries {
        if i >= rows || j >= cols {
            return Err(CliError::Input(format!("entry ({i}, {j}) outside a {rows}x{cols} matrix")));
        }
        m[(i, j)] += v;
    }
    Ok(m)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses a comma-separated vector such as `0.5,1/3`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| Ok(rational::to_f64(&rational::parse_rational(t)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_entries_survive_a_round_trip() {
        let text = r#"{"exponents": [["0"], ["1/4"], [1.0]], "coefficients": [1, 1, 1], "shift": ["1/3"]}"#;
        let file = InstanceFile::parse(text).unwrap();
        assert!(file.has_exact_entries());
        let again = InstanceFile::parse(&file.to_json()).unwrap();
        assert_eq!(file, again);
        let inst = file.to_instance().unwrap();
        assert_eq!(inst.rational_form().unwrap().shift[0], BigRational::new(1.into(), 3.into()));
    }

    #[test]
    fn triplets_with_and_without_header() {
        let m = parse_triplets("# comment\n0 0 1\n1 2 3.5\n").unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(1, 2)], 3.5);
        let m = parse_triplets("3 3\n0 0 1\n").unwrap();
        assert_eq!(m.shape(), (3, 3));
        assert!(parse_triplets("2 2\n5 0 1\n").is_err());
        assert!(parse_triplets("0 0\n").is_err());
    }

    #[test]
    fn dense_json_with_targets() {
        let f = MatrixFile::parse(r#"{"matrix": [[1, 2], [3, 4]], "row_targets": [0.3, 0.7]}"#).unwrap();
        assert_eq!(f.matrix[(1, 0)], 3.0);
        assert_eq!(f.row_targets.unwrap()[1], 0.7);
        assert!(f.col_targets.is_none());
        assert!(MatrixFile::parse("[[1, 2], [3]]").is_err());
    }

    #[test]
    fn vectors_accept_rationals() {
        assert_eq!(parse_vector("0.5, 1/4").unwrap(), vec![0.5, 0.25]);
        assert!(parse_vector("a").is_err());
    }
}
