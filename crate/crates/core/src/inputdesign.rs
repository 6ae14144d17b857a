//! Offline experiment design: persistency of excitation and universal inputs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::informativity::{Goal, PriorKnowledge};
use crate::matrixlab::{hankel, numerical_rank, RankReport};
use crate::random;
use crate::serial::{rows_to_columns, vectors_to_rows, FORMAT_VERSION};

const PE_REDRAWS: u64 = 16;

/// Largest `k` such that the depth-`k` Hankel matrix of `u` (m×T) has full row rank.
pub fn pe_order(u: &DMatrix<f64>) -> usize {
    let (m, t) = u.shape();
    if m == 0 {
        return 0;
    }
    let mut order = 0;
    for k in 1..=t {
        // km rows need at least km columns
        if t + 1 < k * (m + 1) {
            break;
        }
        if hankel_full_row_rank(u, k).0 {
            order = k;
        } else {
            break;
        }
    }
    order
}

fn hankel_full_row_rank(u: &DMatrix<f64>, k: usize) -> (bool, Option<RankReport>) {
    match hankel(u, k) {
        Ok(h) => {
            let report = numerical_rank(&h, None);
            (report.rank == h.nrows(), Some(report))
        }
        Err(_) => (false, None),
    }
}

pub fn is_persistently_exciting(u: &DMatrix<f64>, k: usize) -> bool {
    k == 0 || hankel_full_row_rank(u, k).0
}

/// Shortest length admitting persistency of excitation of order `k`.
pub fn minimal_pe_length(m: usize, k: usize) -> usize {
    (k * (m + 1)).saturating_sub(1)
}

/// Gaussian input of order `k`, default length `k(m+1) − 1`.
pub fn generate_pe_input(
    m: usize,
    k: usize,
    length: Option<usize>,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension(
            "input dimension and order must be positive".into(),
        ));
    }
    let min = minimal_pe_length(m, k);
    let t = length.unwrap_or(min);
    if t < min {
        return Err(Error::Dimension(format!(
            "length {t} is below k(m+1) − 1 = {min} for m = {m}, k = {k}"
        )));
    }
    for attempt in 0..PE_REDRAWS {
        let mut rng = random::rng(random::derive_seed(seed, attempt));
        let u = random::gaussian_matrix(&mut rng, m, t);
        if is_persistently_exciting(&u, k) {
            return Ok(u);
        }
    }
    Err(Error::Numerical(format!(
        "no persistently exciting draw after {PE_REDRAWS} attempts"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Universality {
    Universal,
    NotUniversal,
    /// No input is universal for this goal and prior knowledge.
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityVerdict {
    pub goal: Goal,
    pub pk: PriorKnowledge,
    pub status: Universality,
    pub pe_order: usize,
    pub pe_order_required: usize,
    pub hankel_rank_report: Option<RankReport>,
}

impl UniversalityVerdict {
    pub fn is_universal(&self) -> bool {
        self.status == Universality::Universal
    }
}

pub fn universality_verdict(
    u: &DMatrix<f64>,
    n: usize,
    goal: Goal,
    pk: PriorKnowledge,
) -> UniversalityVerdict {
    let required = n + 1;
    let order = pe_order(u);
    let (_, report) = hankel_full_row_rank(u, required);
    let possible = match goal {
        Goal::Identification => pk == PriorKnowledge::Controllable,
        Goal::Stabilization => pk != PriorKnowledge::All,
    };
    let status = if !possible {
        Universality::Impossible
    } else if order >= required {
        Universality::Universal
    } else {
        Universality::NotUniversal
    };
    UniversalityVerdict {
        goal,
        pk,
        status,
        pe_order: order,
        pe_order_required: required,
        hankel_rank_report: report,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum InputFile {
    Doc {
        #[serde(default = "default_version")]
        version: u32,
        m: usize,
        inputs: Vec<Vec<f64>>,
    },
    Bare(Vec<Vec<f64>>),
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

/// Serialize an m×T input as `{version, m, inputs: [u(0), …]}`.
pub fn input_to_json(u: &DMatrix<f64>) -> String {
    serde_json::to_string_pretty(&InputFile::Doc {
        version: FORMAT_VERSION,
        m: u.nrows(),
        inputs: vectors_to_rows(u),
    })
    .expect("input serializes")
}

/// Accepts the object form or a bare array of vectors.
pub fn input_from_json(text: &str) -> Result<DMatrix<f64>> {
    let file: InputFile = serde_json::from_str(text)?;
    match file {
        InputFile::Doc { version, m, inputs } => {
            if version != FORMAT_VERSION {
                return Err(Error::Format(format!(
                    "field `version`: unsupported {version}"
                )));
            }
            rows_to_columns("inputs", &inputs, m)
        }
        InputFile::Bare(inputs) => {
            let m = inputs
                .first()
                .map(Vec::len)
                .ok_or_else(|| Error::Format("field `inputs`: empty signal".into()))?;
            rows_to_columns("inputs", &inputs, m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn pe_order_examples() {
        assert_eq!(pe_order(&dmatrix![0.0, 1.0, 0.0]), 2);
        assert_eq!(pe_order(&dmatrix![1.0, 1.0, 1.0]), 1);
        assert_eq!(pe_order(&DMatrix::zeros(1, 5)), 0);
        assert_eq!(pe_order(&DMatrix::zeros(2, 5)), 0);
    }

    #[test]
    fn generate_examples() {
        let u = generate_pe_input(1, 2, None, 0).unwrap();
        assert_eq!(u.ncols(), 3);
        assert_eq!(numerical_rank(&hankel(&u, 2).unwrap(), None).rank, 2);
        assert_eq!(generate_pe_input(2, 3, None, 0).unwrap().ncols(), 8);
        assert!(matches!(
            generate_pe_input(1, 2, Some(2), 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn generated_input_is_exciting_at_longer_length() {
        let u = generate_pe_input(3, 4, Some(30), 9).unwrap();
        assert_eq!(u.shape(), (3, 30));
        assert!(pe_order(&u) >= 4);
    }

    #[test]
    fn verdict_examples() {
        let n = 2;
        let u = generate_pe_input(1, n + 1, None, 1).unwrap();
        let v = universality_verdict(&u, n, Goal::Identification, PriorKnowledge::Controllable);
        assert_eq!(v.status, Universality::Universal);
        assert_eq!(v.pe_order_required, 3);
        let v = universality_verdict(&u, n, Goal::Identification, PriorKnowledge::Stabilizable);
        assert_eq!(v.status, Universality::Impossible);
        let v = universality_verdict(&u, n, Goal::Identification, PriorKnowledge::All);
        assert_eq!(v.status, Universality::Impossible);
        let v = universality_verdict(&u, n, Goal::Stabilization, PriorKnowledge::All);
        assert_eq!(v.status, Universality::Impossible);
        let v = universality_verdict(&u, n, Goal::Stabilization, PriorKnowledge::Controllable);
        assert_eq!(v.status, Universality::Universal);

        let c = DMatrix::from_element(1, 10, 3.0);
        let v = universality_verdict(&c, 1, Goal::Stabilization, PriorKnowledge::Stabilizable);
        assert_eq!(v.status, Universality::NotUniversal);
        assert_eq!(v.pe_order, 1);
    }

    #[test]
    fn input_json_round_trip() {
        let u = generate_pe_input(2, 2, None, 4).unwrap();
        assert_eq!(input_from_json(&input_to_json(&u)).unwrap(), u);
        let bare = input_from_json("[[1, 2], [3, 4], [5, 6]]").unwrap();
        assert_eq!(bare, dmatrix![1.0, 3.0, 5.0; 2.0, 4.0, 6.0]);
        let err = input_from_json(r#"{"m": 2, "inputs": [[1, 2], [3]]}"#).unwrap_err();
        assert!(err.to_string().contains("inputs"), "{err}");
    }
}
