//! Input-state datasets and informativity verdicts.
//!
//! A dataset `D = (u(0..T−1), x(0..T))` determines the blocks
//! `U₋ = [u(0) … u(T−1)]`, `X₋ = [x(0) … x(T−1)]` and `X₊ = [x(1) … x(T)]`.
//! Every system `(A, B)` with `A X₋ + B U₋ = X₊` is consistent with the data;
//! the verdicts here decide whether that set, intersected with prior
//! knowledge, pins down the true system or admits one common stabilizer.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inputdesign;
use crate::matrixlab::{self, data_rank, pinv, singular_values, vstack, RankReport, Subspace};
use crate::serial::{rows_to_columns, vectors_to_rows, FORMAT_VERSION};
use crate::synthesis::{self, GainCertificate};
use crate::system::{LtiSystem, SystemClass};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DatasetDoc", try_from = "DatasetDoc")]
pub struct Dataset {
    inputs: DMatrix<f64>,
    states: DMatrix<f64>,
}

impl Dataset {
    /// `inputs` is `m × T`, `states` is `n × (T+1)`, with `T ≥ 1`.
    pub fn new(inputs: DMatrix<f64>, states: DMatrix<f64>) -> Result<Self> {
        let t = inputs.ncols();
        if t == 0 {
            return Err(Error::Dimension("dataset needs at least one input".into()));
        }
        if inputs.nrows() == 0 || states.nrows() == 0 {
            return Err(Error::Dimension(
                "input and state dimensions must be positive".into(),
            ));
        }
        if states.ncols() != t + 1 {
            return Err(Error::Dimension(format!(
                "{t} inputs require {} states, got {}",
                t + 1,
                states.ncols()
            )));
        }
        Ok(Self { inputs, states })
    }

    /// Simulate `sys` from `x0` under `inputs` and record the trajectory.
    pub fn from_system(sys: &LtiSystem, x0: &DVector<f64>, inputs: &DMatrix<f64>) -> Result<Self> {
        let states = sys.simulate(x0, inputs)?;
        Self::new(inputs.clone(), states)
    }

    pub fn n(&self) -> usize {
        self.states.nrows()
    }

    pub fn m(&self) -> usize {
        self.inputs.nrows()
    }

    /// Number of samples `T`.
    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn u_minus(&self) -> DMatrix<f64> {
        self.inputs.clone()
    }

    pub fn x_minus(&self) -> DMatrix<f64> {
        self.states.columns(0, self.len()).into_owned()
    }

    pub fn x_plus(&self) -> DMatrix<f64> {
        self.states.columns(1, self.len()).into_owned()
    }

    /// `[X₋; U₋]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        vstack(&self.x_minus(), &self.inputs).expect("blocks share T columns")
    }

    pub fn initial_state(&self) -> DVector<f64> {
        self.states.column(0).into_owned()
    }

    /// The first `k` samples, `1 ≤ k ≤ T`.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::Dimension(format!(
                "prefix length {k} outside 1..={}",
                self.len()
            )));
        }
        Self::new(
            self.inputs.columns(0, k).into_owned(),
            self.states.columns(0, k + 1).into_owned(),
        )
    }

    /// Multiply every input and state by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            inputs: &self.inputs * c,
            states: &self.states * c,
        }
    }

    /// `‖A X₋ + B U₋ − X₊‖_F`.
    pub fn residual_against(&self, sys: &LtiSystem) -> Result<f64> {
        if sys.n() != self.n() || sys.m() != self.m() {
            return Err(Error::Dimension(format!(
                "system is ({}, {}), data is ({}, {})",
                sys.n(),
                sys.m(),
                self.n(),
                self.m()
            )));
        }
        Ok((sys.a() * self.x_minus() + sys.b() * &self.inputs - self.x_plus()).norm())
    }

    /// Residual within `1e−8 · (1 + ‖X₊‖_F)`.
    pub fn is_trajectory_of(&self, sys: &LtiSystem) -> Result<bool> {
        let r = self.residual_against(sys)?;
        Ok(r <= tolerance::CONSISTENCY_RTOL * (1.0 + self.x_plus().norm()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// CSV with header `u1,…,um,x1,…,xn`, one row per time step. The final
    /// row carries `x(T)` and leaves the input cells empty.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut m = 0;
        let mut n = 0;
        for (i, h) in headers.iter().enumerate() {
            let (kind, idx) = h.split_at(1.min(h.len()));
            let expected = match kind {
                "u" if n == 0 => {
                    m += 1;
                    m
                }
                "x" => {
                    n += 1;
                    n
                }
                _ => {
                    return Err(Error::Format(format!(
                        "CSV column {i} `{h}`: expected u1..um followed by x1..xn"
                    )))
                }
            };
            if idx.parse::<usize>().ok() != Some(expected) {
                return Err(Error::Format(format!(
                    "CSV column {i} `{h}`: expected {kind}{expected}"
                )));
            }
        }
        if m == 0 || n == 0 {
            return Err(Error::Format(
                "CSV needs at least one u and one x column".into(),
            ));
        }
        let mut inputs: Vec<Vec<f64>> = Vec::new();
        let mut states: Vec<Vec<f64>> = Vec::new();
        let mut finished = false;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if finished {
                return Err(Error::Format(format!(
                    "CSV row {}: data after the final state row",
                    row + 2
                )));
            }
            let parse = |j: usize| -> Result<Option<f64>> {
                let cell = rec.get(j).unwrap_or("");
                if cell.is_empty() {
                    return Ok(None);
                }
                cell.parse::<f64>().map(Some).map_err(|_| {
                    Error::Format(format!(
                        "CSV row {}, column `{}`: not a number",
                        row + 2,
                        &headers[j]
                    ))
                })
            };
            let u: Vec<Option<f64>> = (0..m).map(parse).collect::<Result<_>>()?;
            let x: Vec<Option<f64>> = (m..m + n).map(parse).collect::<Result<_>>()?;
            let x: Vec<f64> = x
                .into_iter()
                .enumerate()
                .map(|(j, v)| {
                    v.ok_or_else(|| {
                        Error::Format(format!("CSV row {}: missing `x{}`", row + 2, j + 1))
                    })
                })
                .collect::<Result<_>>()?;
            states.push(x);
            if u.iter().all(Option::is_none) {
                finished = true;
            } else {
                let u: Vec<f64> = u
                    .into_iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.ok_or_else(|| {
                            Error::Format(format!("CSV row {}: missing `u{}`", row + 2, j + 1))
                        })
                    })
                    .collect::<Result<_>>()?;
                inputs.push(u);
            }
        }
        if !finished {
            return Err(Error::Format(
                "CSV must end with a row holding x(T) and empty input cells".into(),
            ));
        }
        Self::new(
            rows_to_columns("inputs", &inputs, m)?,
            rows_to_columns("states", &states, n)?,
        )
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.m())
            .map(|i| format!("u{i}"))
            .chain((1..=self.n()).map(|i| format!("x{i}")))
            .collect();
        w.write_record(&header)?;
        for t in 0..=self.len() {
            let mut rec: Vec<String> = Vec::with_capacity(self.m() + self.n());
            for i in 0..self.m() {
                rec.push(if t < self.len() {
                    self.inputs[(i, t)].to_string()
                } else {
                    String::new()
                });
            }
            rec.extend(self.states.column(t).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

/// `{"T":…, "inputs": [[…]], "states": [[…]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(rename = "T")]
    pub t: usize,
    pub inputs: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl From<Dataset> for DatasetDoc {
    fn from(d: Dataset) -> Self {
        Self {
            version: FORMAT_VERSION,
            t: d.len(),
            inputs: vectors_to_rows(&d.inputs),
            states: vectors_to_rows(&d.states),
        }
    }
}

impl TryFrom<DatasetDoc> for Dataset {
    type Error = Error;

    fn try_from(doc: DatasetDoc) -> Result<Self> {
        if doc.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "field `version`: unsupported version {}",
                doc.version
            )));
        }
        if doc.inputs.len() != doc.t {
            return Err(Error::Format(format!(
                "field `inputs`: expected T = {} entries, found {}",
                doc.t,
                doc.inputs.len()
            )));
        }
        if doc.states.len() != doc.t + 1 {
            return Err(Error::Format(format!(
                "field `states`: expected T+1 = {} entries, found {}",
                doc.t + 1,
                doc.states.len()
            )));
        }
        let m = doc.inputs.first().map_or(0, Vec::len);
        let n = doc.states.first().map_or(0, Vec::len);
        if doc.t == 0 || m == 0 {
            return Err(Error::Format(
                "field `inputs`: at least one nonempty input required".into(),
            ));
        }
        if n == 0 {
            return Err(Error::Format(
                "field `states`: states must be nonempty".into(),
            ));
        }
        Dataset::new(
            rows_to_columns("inputs", &doc.inputs, m)?,
            rows_to_columns("states", &doc.states, n)?,
        )
    }
}

/// Prior knowledge about the true system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorKnowledge {
    /// No prior knowledge: every pair `(A, B)`.
    All,
    Controllable,
    Stabilizable,
}

impl PriorKnowledge {
    pub const ALL: [PriorKnowledge; 3] = [
        PriorKnowledge::All,
        PriorKnowledge::Controllable,
        PriorKnowledge::Stabilizable,
    ];

    pub fn admits(self, class: SystemClass) -> bool {
        match self {
            PriorKnowledge::All => true,
            PriorKnowledge::Controllable => class == SystemClass::Controllable,
            PriorKnowledge::Stabilizable => class.is_stabilizable(),
        }
    }
}

impl fmt::Display for PriorKnowledge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorKnowledge::All => "all",
            PriorKnowledge::Controllable => "cont",
            PriorKnowledge::Stabilizable => "stab",
        })
    }
}

impl FromStr for PriorKnowledge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "none" | "m" => Ok(PriorKnowledge::All),
            "cont" | "controllable" => Ok(PriorKnowledge::Controllable),
            "stab" | "stabilizable" => Ok(PriorKnowledge::Stabilizable),
            other => Err(Error::Format(format!(
                "unknown prior knowledge `{other}` (expected all, cont or stab)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Goal {
    Identification,
    Stabilization,
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Goal::Identification => "id",
            Goal::Stabilization => "stab",
        })
    }
}

impl FromStr for Goal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "id" | "identification" => Ok(Goal::Identification),
            "stab" | "stabilization" => Ok(Goal::Stabilization),
            other => Err(Error::Format(format!(
                "unknown goal `{other}` (expected id or stab)"
            ))),
        }
    }
}

/// All systems consistent with a dataset: `particular + span(kernel)`.
#[derive(Debug, Clone)]
pub struct ConsistentSet {
    particular: Option<LtiSystem>,
    left_kernel: Vec<DVector<f64>>,
    is_consistent: bool,
    residual: f64,
}

impl ConsistentSet {
    pub fn particular(&self) -> Option<&LtiSystem> {
        self.particular.as_ref()
    }

    pub fn is_consistent(&self) -> bool {
        self.is_consistent
    }

    /// Residual of the least-squares particular solution.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Orthonormal basis `{w}` of the left kernel of `[X₋; U₋]`.
    pub fn left_kernel(&self) -> &[DVector<f64>] {
        &self.left_kernel
    }

    pub fn is_singleton(&self) -> bool {
        self.is_consistent && self.left_kernel.is_empty()
    }

    /// Basis of `{(Â, B̂) : [Â B̂][X₋; U₋] = 0}`: one element `e_i wᵀ` per row
    /// `i` and kernel vector `w`, split into its `A` and `B` blocks.
    pub fn kernel_basis(&self) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        let Some(p) = &self.particular else {
            return Vec::new();
        };
        let (n, m) = (p.n(), p.m());
        let mut out = Vec::with_capacity(n * self.left_kernel.len());
        for w in &self.left_kernel {
            for i in 0..n {
                let mut ab = DMatrix::zeros(n, n + m);
                ab.row_mut(i).copy_from(&w.transpose());
                out.push((ab.columns(0, n).into_owned(), ab.columns(n, m).into_owned()));
            }
        }
        out
    }

    /// `[A₀ B₀] + coeffs · Nᵀ`, with `N` the stacked left-kernel vectors and
    /// `coeffs` of shape `n × dim(kernel)`.
    pub fn member(&self, coeffs: &DMatrix<f64>) -> Result<LtiSystem> {
        let p = self
            .particular
            .as_ref()
            .ok_or_else(|| Error::Precondition("data admits no consistent system".into()))?;
        let (n, m) = (p.n(), p.m());
        let k = self.left_kernel.len();
        if coeffs.shape() != (n, k) {
            return Err(Error::Dimension(format!(
                "coefficients must be {n}×{k}, got {}×{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        let mut ab = matrixlab::hstack(p.a(), p.b())?;
        if k > 0 {
            let kernel = matrixlab::columns(&self.left_kernel, n + m)?;
            ab += coeffs * kernel.transpose();
        }
        LtiSystem::new(ab.columns(0, n).into_owned(), ab.columns(n, m).into_owned())
    }

    /// Whether `sys` reproduces the data to within the consistency threshold.
    pub fn contains(&self, data: &Dataset, sys: &LtiSystem) -> Result<bool> {
        data.is_trajectory_of(sys)
    }
}

/// Parametrize every `(A, B)` with `A X₋ + B U₋ = X₊`.
pub fn consistent_set(data: &Dataset) -> ConsistentSet {
    let (n, m) = (data.n(), data.m());
    let z = data.stacked();
    let x_plus = data.x_plus();
    let smax = singular_values(&z).first().copied().unwrap_or(0.0);
    let tol = tolerance::data_rtol() * smax;
    let ab = &x_plus * pinv(&z, tol);
    let residual = (&ab * &z - &x_plus).norm();
    let is_consistent = residual <= tolerance::CONSISTENCY_RTOL * (1.0 + x_plus.norm());
    let particular = if is_consistent {
        LtiSystem::new(ab.columns(0, n).into_owned(), ab.columns(n, m).into_owned()).ok()
    } else {
        None
    };
    ConsistentSet {
        particular,
        left_kernel: matrixlab::left_kernel_basis(&z, Some(tol)),
        is_consistent,
        residual,
    }
}

/// Witness attached to a positive verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    Identified(LtiSystem),
    Gain(GainCertificate),
}

/// Outcome of an informativity test with the conditions that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub goal: Goal,
    pub pk: PriorKnowledge,
    pub informative: bool,
    /// Rank of `[X₋; U₋]`.
    pub rank_xu: RankReport,
    /// Rank of `X₋`.
    pub rank_x: RankReport,
    pub conditions: BTreeMap<String, bool>,
    pub certificate: Option<Certificate>,
}

/// Names of the conditions recorded in [`Verdict::conditions`].
pub mod cond {
    pub const FULL_RANK_XU: &str = "full_rank_xu";
    pub const XMINUS_FULL_ROW_RANK: &str = "Xminus_full_row_rank";
    pub const RIGHT_INVERSE_SCHUR: &str = "right_inverse_schur_feasible";
    pub const IMXPLUS_IN_IMXMINUS: &str = "imXplus_in_imXminus";
    pub const IMAGE_PRODUCT: &str = "image_product_condition";
}

/// Every column of `cols` lies in `space`, up to `rtol` times the largest
/// column norm of `scale`.
pub(crate) fn columns_in(space: &Subspace, cols: &DMatrix<f64>, scale: &DMatrix<f64>) -> bool {
    let s = scale
        .column_iter()
        .chain(cols.column_iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let tol = tolerance::MEMBERSHIP_RTOL * s;
    cols.column_iter()
        .all(|c| space.residual(&c.into_owned()) <= tol)
}

/// `im X₊ ⊆ im X₋`.
pub fn image_xplus_in_xminus(data: &Dataset) -> bool {
    let xm = data.x_minus();
    columns_in(&Subspace::data_image(&xm), &data.x_plus(), &xm)
}

/// `im [X₋; U₋] = im X₋ × R^m`, checked as `rank [X₋; U₋] = rank X₋ + m`.
pub fn image_product_condition(data: &Dataset) -> bool {
    data_rank(&data.stacked()).rank == data_rank(&data.x_minus()).rank + data.m()
}

/// Identification verdict: the rank test `rank [X₋; U₋] = n + m`, which is
/// the same for every prior-knowledge set considered here.
pub fn informative_for_identification(data: &Dataset, pk: PriorKnowledge) -> Verdict {
    let rank_xu = data_rank(&data.stacked());
    let rank_x = data_rank(&data.x_minus());
    let informative = rank_xu.rank == data.n() + data.m();
    let certificate = if informative {
        synthesis::identify(data).ok().map(Certificate::Identified)
    } else {
        None
    };
    Verdict {
        goal: Goal::Identification,
        pk,
        informative,
        rank_xu,
        rank_x,
        conditions: BTreeMap::from([(cond::FULL_RANK_XU.to_string(), informative)]),
        certificate,
    }
}

/// Stabilization verdict under prior knowledge.
///
/// With no prior knowledge or controllability, and with stabilizability when
/// `X₋` has full row rank, the data are informative iff `X₋` has full row
/// rank and some right inverse `X₋†` makes `X₊ X₋†` Schur. With
/// stabilizability and rank-deficient `X₋`, they are informative iff
/// `im X₊ ⊆ im X₋` and `im [X₋; U₋] = im X₋ × R^m`.
pub fn informative_for_stabilization(data: &Dataset, pk: PriorKnowledge) -> Verdict {
    let rank_xu = data_rank(&data.stacked());
    let rank_x = data_rank(&data.x_minus());
    let full = rank_x.rank == data.n();
    let mut conditions = BTreeMap::new();
    let mut certificate = None;

    let informative = if pk != PriorKnowledge::Stabilizable || full {
        conditions.insert(cond::XMINUS_FULL_ROW_RANK.to_string(), full);
        let feasible = if full {
            match synthesis::stabilize_fullrank(data) {
                Ok(Some(cert)) => {
                    certificate = Some(Certificate::Gain(cert));
                    true
                }
                _ => false,
            }
        } else {
            false
        };
        conditions.insert(cond::RIGHT_INVERSE_SCHUR.to_string(), feasible);
        full && feasible
    } else {
        let inclusion = image_xplus_in_xminus(data);
        let product = rank_xu.rank == rank_x.rank + data.m();
        conditions.insert(cond::IMXPLUS_IN_IMXMINUS.to_string(), inclusion);
        conditions.insert(cond::IMAGE_PRODUCT.to_string(), product);
        if inclusion && product {
            certificate = synthesis::stabilize_restricted(data)
                .ok()
                .map(Certificate::Gain);
        }
        inclusion && product
    };

    Verdict {
        goal: Goal::Stabilization,
        pk,
        informative,
        rank_xu,
        rank_x,
        conditions,
        certificate,
    }
}

pub fn informative_for(data: &Dataset, goal: Goal, pk: PriorKnowledge) -> Verdict {
    match goal {
        Goal::Identification => informative_for_identification(data, pk),
        Goal::Stabilization => informative_for_stabilization(data, pk),
    }
}

/// The three statements relating data images, reachable subspaces and
/// persistency of excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma14Report {
    /// `im [X₋; U₋] = R(A, [B x(0)]) × R^m`; only evaluated when the system is known.
    pub reachable_product: Option<bool>,
    /// `im [X₋; U₋] = im X₋ × R^m` and `im X₊ ⊆ im X₋`.
    pub data_product: bool,
    /// The input is persistently exciting of order `n + 1`.
    pub persistently_exciting: bool,
}

impl Lemma14Report {
    pub fn to_map(&self) -> BTreeMap<String, bool> {
        let mut map = BTreeMap::new();
        if let Some(i) = self.reachable_product {
            map.insert("i_reachable_product".to_string(), i);
        }
        map.insert("ii_data_product".to_string(), self.data_product);
        map.insert(
            "iii_pe_order_n_plus_1".to_string(),
            self.persistently_exciting,
        );
        map
    }
}

pub fn check_lemma14_conditions(data: &Dataset, sys: Option<&LtiSystem>) -> Result<Lemma14Report> {
    let n = data.n();
    let m = data.m();
    let rank_xu = data_rank(&data.stacked()).rank;
    let reachable_product = match sys {
        Some(sys) => {
            if !data.is_trajectory_of(sys)? {
                return Err(Error::Precondition(format!(
                    "data is not a trajectory of the given system (residual {:.3e})",
                    data.residual_against(sys)?
                )));
            }
            let reach = sys.reachable_from(&data.initial_state())?;
            let xm = data.x_minus();
            Some(rank_xu == reach.dim() + m && columns_in(&reach, &xm, &xm))
        }
        None => None,
    };
    let data_product = image_product_condition(data) && image_xplus_in_xminus(data);
    let persistently_exciting = inputdesign::is_persistently_exciting(data.inputs(), n + 1);
    Ok(Lemma14Report {
        reachable_product,
        data_product,
        persistently_exciting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn scalar_data(xm: &[f64], um: &[f64], xp_last: f64) -> Dataset {
        let mut states: Vec<f64> = xm.to_vec();
        states.push(xp_last);
        Dataset::new(
            DMatrix::from_row_slice(1, um.len(), um),
            DMatrix::from_row_slice(1, states.len(), &states),
        )
        .unwrap()
    }

    /// Trajectory of A = diag(0, 0.5), B = [1; 0] from x0 = 0 under u = (1, 2).
    fn deficient_example() -> Dataset {
        Dataset::new(dmatrix![1.0, 2.0], dmatrix![0.0, 1.0, 2.0; 0.0, 0.0, 0.0]).unwrap()
    }

    fn deficient_truth() -> LtiSystem {
        LtiSystem::new(dmatrix![0.0, 0.0; 0.0, 0.5], dmatrix![1.0; 0.0]).unwrap()
    }

    #[test]
    fn dataset_shape_invariants() {
        assert!(Dataset::new(DMatrix::zeros(1, 0), DMatrix::zeros(1, 1)).is_err());
        assert!(Dataset::new(DMatrix::zeros(1, 2), DMatrix::zeros(1, 2)).is_err());
        let d = deficient_example();
        assert_eq!((d.n(), d.m(), d.len()), (2, 1, 2));
        assert_eq!(d.x_minus(), dmatrix![0.0, 1.0; 0.0, 0.0]);
        assert_eq!(d.x_plus(), dmatrix![1.0, 2.0; 0.0, 0.0]);
        assert_eq!(d.u_minus(), dmatrix![1.0, 2.0]);
        assert!(d.is_trajectory_of(&deficient_truth()).unwrap());
    }

    #[test]
    fn consistent_set_contains_generator() {
        let sys = crate::system::random_system(SystemClass::Controllable, 3, 2, 9).unwrap();
        let u = crate::random::gaussian_matrix(&mut crate::random::rng(1), 2, 4);
        let d = Dataset::from_system(&sys, &DVector::from_element(3, 1.0), &u).unwrap();
        let cs = consistent_set(&d);
        assert!(cs.is_consistent());
        // T = 4 < n + m = 5: a one-dimensional left kernel, n copies of it
        assert_eq!(cs.left_kernel().len(), 1);
        assert_eq!(cs.kernel_basis().len(), 3);
        assert!(d.residual_against(&sys).unwrap() <= 1e-9);
        let p = cs.particular().unwrap();
        assert!(d.residual_against(p).unwrap() <= 1e-9);
        let other = cs.member(&DMatrix::from_element(3, 1, 0.7)).unwrap();
        assert!(cs.contains(&d, &other).unwrap());
    }

    #[test]
    fn consistent_set_scalar_singleton() {
        // b = 1 and a + b = 2
        let d = scalar_data(&[0.0, 1.0], &[1.0, 1.0], 2.0);
        let cs = consistent_set(&d);
        assert!(cs.is_singleton());
        let p = cs.particular().unwrap();
        assert!((p.a()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((p.b()[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_set_scalar_free_input_gain() {
        // a · 1 = 2, b unconstrained
        let d = scalar_data(&[1.0], &[0.0], 2.0);
        let cs = consistent_set(&d);
        assert!(cs.is_consistent() && !cs.is_singleton());
        let p = cs.particular().unwrap();
        assert!((p.a()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(p.b()[(0, 0)].abs() < 1e-12);
        let basis = cs.kernel_basis();
        assert_eq!(basis.len(), 1);
        assert!(basis[0].0[(0, 0)].abs() < 1e-12);
        assert!((basis[0].1[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_set_flags_contradictory_data() {
        // x(0) = x(1) = 0 but x(2) = 1 with zero input: 0 = 1 is unsolvable
        let d = Dataset::new(dmatrix![0.0, 0.0], dmatrix![0.0, 0.0, 1.0]).unwrap();
        let cs = consistent_set(&d);
        assert!(!cs.is_consistent());
        assert!(cs.particular().is_none());
    }

    #[test]
    fn identification_examples() {
        let d = scalar_data(&[0.0, 1.0], &[1.0, 1.0], 2.0);
        let v = informative_for_identification(&d, PriorKnowledge::All);
        assert!(v.informative);
        assert_eq!(v.rank_xu.rank, 2);
        assert!(matches!(v.certificate, Some(Certificate::Identified(_))));

        // T = 2 < n + m = 3
        let short = deficient_example();
        assert!(!informative_for_identification(&short, PriorKnowledge::All).informative);

        let v = informative_for_identification(&deficient_example(), PriorKnowledge::Controllable);
        assert!(!v.informative);
        assert_eq!(v.rank_x.rank, 1);
    }

    #[test]
    fn identification_verdict_ignores_prior() {
        let d = deficient_example();
        let verdicts: Vec<bool> = PriorKnowledge::ALL
            .iter()
            .map(|pk| informative_for_identification(&d, *pk).informative)
            .collect();
        assert!(verdicts.iter().all(|v| *v == verdicts[0]));
    }

    #[test]
    fn stabilization_scalar_cases() {
        let good = scalar_data(&[1.0], &[0.0], 0.5);
        let v = informative_for_stabilization(&good, PriorKnowledge::All);
        assert!(v.informative);
        match v.certificate {
            Some(Certificate::Gain(c)) => {
                assert!(c.k[(0, 0)].abs() < 1e-12);
                assert!((c.closed_loop_radius_on_data - 0.5).abs() < 1e-12);
            }
            other => panic!("expected gain, got {other:?}"),
        }

        let bad = scalar_data(&[1.0], &[0.0], 2.0);
        let v = informative_for_stabilization(&bad, PriorKnowledge::All);
        assert!(!v.informative);
        assert_eq!(v.conditions[cond::XMINUS_FULL_ROW_RANK], true);
        assert_eq!(v.conditions[cond::RIGHT_INVERSE_SCHUR], false);
    }

    #[test]
    fn stabilization_rank_deficient_example() {
        let d = deficient_example();
        let v = informative_for_stabilization(&d, PriorKnowledge::Stabilizable);
        assert!(v.informative);
        assert_eq!(v.rank_x.rank, 1);
        assert_eq!(v.rank_xu.rank, 2);
        assert!(v.conditions[cond::IMXPLUS_IN_IMXMINUS]);
        assert!(v.conditions[cond::IMAGE_PRODUCT]);

        for pk in [PriorKnowledge::All, PriorKnowledge::Controllable] {
            let v = informative_for_stabilization(&d, pk);
            assert!(!v.informative);
            assert!(!v.conditions[cond::XMINUS_FULL_ROW_RANK]);
        }
    }

    #[test]
    fn stabilization_deficient_fails_without_inclusion() {
        // X₊ leaves span{e₁}
        let d = Dataset::new(dmatrix![1.0, 2.0], dmatrix![0.0, 1.0, 2.0; 0.0, 0.0, 1.0]).unwrap();
        let v = informative_for_stabilization(&d, PriorKnowledge::Stabilizable);
        assert!(!v.informative);
        assert!(!v.conditions[cond::IMXPLUS_IN_IMXMINUS]);
    }

    #[test]
    fn lemma14_deficient_example() {
        let r = check_lemma14_conditions(&deficient_example(), Some(&deficient_truth())).unwrap();
        assert_eq!(r.reachable_product, Some(true));
        assert!(r.data_product);
        assert!(!r.persistently_exciting);
    }

    #[test]
    fn lemma14_zero_experiment() {
        let sys = deficient_truth();
        let d = Dataset::from_system(&sys, &DVector::zeros(2), &DMatrix::zeros(1, 3)).unwrap();
        let r = check_lemma14_conditions(&d, Some(&sys)).unwrap();
        assert!(!r.data_product);
        assert_eq!(r.reachable_product, Some(false));
        assert!(!r.persistently_exciting);
    }

    #[test]
    fn lemma14_rejects_foreign_system() {
        let other = LtiSystem::new(DMatrix::identity(2, 2), dmatrix![1.0; 1.0]).unwrap();
        assert!(matches!(
            check_lemma14_conditions(&deficient_example(), Some(&other)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let d = deficient_example();
        let text = d.to_json();
        assert!(text.contains("\"T\": 2"));
        assert_eq!(Dataset::from_json(&text).unwrap(), d);
    }

    #[test]
    fn json_errors_name_fields() {
        let err = Dataset::from_json(r#"{"T":2,"inputs":[[1],[2]],"states":[[0],[1]]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("`states`"), "{err}");
        let err = Dataset::from_json(r#"{"T":1,"inputs":[[1]]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("`states`"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let d = deficient_example();
        let mut buf = Vec::new();
        d.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u1,x1,x2"));
        assert_eq!(Dataset::from_csv(text.as_bytes()).unwrap(), d);
    }

    #[test]
    fn csv_rejects_bad_header_and_missing_terminal_row() {
        assert!(Dataset::from_csv("a,x1\n1,0\n,1\n".as_bytes()).is_err());
        let err = Dataset::from_csv("u1,x1\n1,0\n1,1\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("x(T)"), "{err}");
    }

    #[test]
    fn prior_and_goal_parse() {
        assert_eq!(
            "cont".parse::<PriorKnowledge>().unwrap(),
            PriorKnowledge::Controllable
        );
        assert_eq!(
            "stab".parse::<PriorKnowledge>().unwrap(),
            PriorKnowledge::Stabilizable
        );
        assert_eq!(
            "all".parse::<PriorKnowledge>().unwrap(),
            PriorKnowledge::All
        );
        assert!("x".parse::<PriorKnowledge>().is_err());
        assert_eq!("id".parse::<Goal>().unwrap(), Goal::Identification);
        assert!(PriorKnowledge::Stabilizable.admits(SystemClass::StabilizableNotControllable));
        assert!(!PriorKnowledge::Controllable.admits(SystemClass::StabilizableNotControllable));
    }
}
