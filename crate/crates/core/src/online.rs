//! Online experiment design against a plant, and shortest-experiment lengths.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::informativity::Dataset;
use crate::matrixlab::{data_rank, left_kernel_basis, singular_values, vstack, Subspace};
use crate::random::{self, SeededRng};
use crate::system::{classify, LtiSystem, SystemClass};
use crate::tolerance;

/// A plant that can be stepped with inputs and observed.
pub trait PlantOracle {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn initial_state(&self) -> DVector<f64>;
    /// Apply `u(t)` and return `x(t+1)`.
    fn apply(&mut self, u: &DVector<f64>) -> Result<DVector<f64>>;
}

/// In-process plant driven by a known system.
#[derive(Debug, Clone)]
pub struct SimulatedPlant {
    sys: LtiSystem,
    x0: DVector<f64>,
    x: DVector<f64>,
}

impl SimulatedPlant {
    pub fn new(sys: LtiSystem, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != sys.n() {
            return Err(Error::Dimension(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                sys.n()
            )));
        }
        Ok(Self {
            x: x0.clone(),
            sys,
            x0,
        })
    }
}

impl PlantOracle for SimulatedPlant {
    fn n(&self) -> usize {
        self.sys.n()
    }

    fn m(&self) -> usize {
        self.sys.m()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.x0.clone()
    }

    fn apply(&mut self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.x = self.sys.step(&self.x, u)?;
        Ok(self.x.clone())
    }
}

/// Plays back a recorded trajectory; fails when asked for an input that
/// differs from the recording.
#[derive(Debug, Clone)]
pub struct ReplayPlant {
    recording: Dataset,
    t: usize,
}

impl ReplayPlant {
    pub fn new(recording: Dataset) -> Self {
        Self { recording, t: 0 }
    }
}

impl PlantOracle for ReplayPlant {
    fn n(&self) -> usize {
        self.recording.n()
    }

    fn m(&self) -> usize {
        self.recording.m()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.recording.initial_state()
    }

    fn apply(&mut self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let t = self.t;
        if t >= self.recording.len() {
            return Err(Error::Oracle(format!(
                "recording ends after {} steps",
                self.recording.len()
            )));
        }
        let recorded = self.recording.inputs().column(t).into_owned();
        if u.len() != recorded.len() {
            return Err(Error::Dimension(format!(
                "input has length {}, expected {}",
                u.len(),
                recorded.len()
            )));
        }
        if (u - &recorded).norm() > 1e-9 * (1.0 + recorded.norm()) {
            return Err(Error::Oracle(format!(
                "input at t = {t} diverges from the recording: requested {:?}, recorded {:?}",
                u.as_slice(),
                recorded.as_slice()
            )));
        }
        self.t += 1;
        Ok(self.recording.states().column(t + 1).into_owned())
    }
}

/// Inputs the algorithm may choose freely: `u(0)` and the new-direction steps.
pub trait InputPolicy {
    /// Must be nonzero.
    fn initial(&mut self, m: usize) -> DVector<f64>;
    fn free(&mut self, t: usize, m: usize) -> DVector<f64>;
}

/// `u(0) = e₁`, free inputs zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultPolicy;

impl InputPolicy for DefaultPolicy {
    fn initial(&mut self, m: usize) -> DVector<f64> {
        let mut u = DVector::zeros(m);
        u[0] = 1.0;
        u
    }

    fn free(&mut self, _t: usize, m: usize) -> DVector<f64> {
        DVector::zeros(m)
    }
}

/// Seeded standard-normal draws.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    rng: SeededRng,
}

impl GaussianPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: random::rng(seed),
        }
    }
}

impl InputPolicy for GaussianPolicy {
    fn initial(&mut self, m: usize) -> DVector<f64> {
        loop {
            let u = random::gaussian_vector(&mut self.rng, m);
            if u.norm() > 0.0 {
                return u;
            }
        }
    }

    fn free(&mut self, _t: usize, m: usize) -> DVector<f64> {
        random::gaussian_vector(&mut self.rng, m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `u(0)` from the policy.
    Initial,
    /// `x(t)` left the span of the past states.
    NewDirection,
    /// Input chosen against a left-kernel vector of `[X; U]`.
    KernelSteered,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: usize,
    pub branch: Branch,
    pub x: Vec<f64>,
    /// Input applied at `t`; absent on termination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    /// Residual of `x(t)` against `im X_[0,t−1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership_residual: Option<f64>,
    /// `rank [X; U]` over `[0, t−1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_xu: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_x: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRun {
    pub dataset: Dataset,
    pub trace: Vec<TraceEntry>,
}

impl OnlineRun {
    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn default_max_steps(n: usize, m: usize) -> usize {
    n + m + 2
}

fn membership_residual(states: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    Subspace::data_image(states).residual(x)
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Collect data until `im [X₋; U₋] = im X₋ × R^m` and `x(T) ∈ im X₋`.
pub fn run_online_design(
    plant: &mut dyn PlantOracle,
    policy: &mut dyn InputPolicy,
    max_steps: usize,
) -> Result<OnlineRun> {
    let (n, m) = (plant.n(), plant.m());
    if m == 0 {
        return Err(Error::Dimension("plant has no inputs".into()));
    }
    if max_steps == 0 {
        return Err(Error::Precondition("max_steps must be positive".into()));
    }
    let x0 = plant.initial_state();
    if x0.len() != n {
        return Err(Error::Oracle(format!(
            "initial state has length {}, expected {n}",
            x0.len()
        )));
    }
    let u0 = policy.initial(m);
    if u0.len() != m || u0.norm() == 0.0 {
        return Err(Error::Precondition(
            "policy must return a nonzero u(0) of length m".into(),
        ));
    }
    let mut states = vec![x0.clone()];
    let mut inputs = vec![u0.clone()];
    let mut trace = vec![TraceEntry {
        t: 0,
        branch: Branch::Initial,
        x: to_vec(&x0),
        u: Some(to_vec(&u0)),
        xi: None,
        eta: None,
        membership_residual: None,
        rank_xu: None,
        rank_x: None,
    }];
    loop {
        let t = inputs.len();
        if t > max_steps {
            return Err(Error::StepLimit(max_steps));
        }
        let x = plant.apply(inputs.last().expect("nonempty"))?;
        if x.len() != n {
            return Err(Error::Oracle(format!(
                "plant returned a state of length {}, expected {n}",
                x.len()
            )));
        }
        let xm = DMatrix::from_columns(&states);
        let um = DMatrix::from_columns(&inputs);
        let z = vstack(&xm, &um)?;
        states.push(x.clone());

        let residual = membership_residual(&xm, &x);
        if residual > tolerance::MEMBERSHIP_RTOL * (1.0 + x.norm()) {
            let u = policy.free(t, m);
            trace.push(TraceEntry {
                t,
                branch: Branch::NewDirection,
                x: to_vec(&x),
                u: Some(to_vec(&u)),
                xi: None,
                eta: None,
                membership_residual: Some(residual),
                rank_xu: None,
                rank_x: None,
            });
            inputs.push(u);
            continue;
        }
        let rank_xu = data_rank(&z).rank;
        let rank_x = data_rank(&xm).rank;
        if rank_xu == rank_x + m {
            trace.push(TraceEntry {
                t,
                branch: Branch::Terminated,
                x: to_vec(&x),
                u: None,
                xi: None,
                eta: None,
                membership_residual: Some(residual),
                rank_xu: Some(rank_xu),
                rank_x: Some(rank_x),
            });
            let dataset = Dataset::new(um, DMatrix::from_columns(&states))?;
            return Ok(OnlineRun { dataset, trace });
        }
        let smax = singular_values(&z).first().copied().unwrap_or(0.0);
        let kernel = left_kernel_basis(&z, Some(tolerance::data_rtol() * smax));
        let best = kernel
            .iter()
            .max_by(|a, b| {
                let na = a.rows(n, m).norm();
                let nb = b.rows(n, m).norm();
                na.total_cmp(&nb)
            })
            .filter(|w| w.rows(n, m).norm() > 0.0)
            .ok_or_else(|| {
                Error::Numerical(format!(
                    "rank identity fails at t = {t} but no left-kernel vector has η ≠ 0"
                ))
            })?;
        let xi = best.rows(0, n).into_owned();
        let eta = best.rows(n, m).into_owned();
        let eta_sq = eta.norm_squared();
        let base = xi.dot(&x);
        let tol = tolerance::MEMBERSHIP_RTOL * (1.0 + base.abs() + eta_sq);
        let c = if (base + eta_sq).abs() > tol {
            1.0
        } else {
            2.0
        };
        let u = &eta * c;
        trace.push(TraceEntry {
            t,
            branch: Branch::KernelSteered,
            x: to_vec(&x),
            u: Some(to_vec(&u)),
            xi: Some(to_vec(&xi)),
            eta: Some(to_vec(&eta)),
            membership_residual: Some(residual),
            rank_xu: Some(rank_xu),
            rank_x: Some(rank_x),
        });
        inputs.push(u);
    }
}

/// `dim R(A, [B x0]) + m`.
pub fn predicted_length(sys: &LtiSystem, x0: &DVector<f64>) -> Result<usize> {
    Ok(sys.reachable_from(x0)?.dim() + sys.m())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShortestLength {
    Exact {
        length: usize,
    },
    /// Only bounds are known; the exact value is not determined.
    Bracket {
        lower: usize,
        upper: usize,
    },
}

/// Length of the shortest dataset from `x0` that is informative for
/// stabilization under stabilizability prior knowledge.
pub fn shortest_length_for_stabilization(
    sys: &LtiSystem,
    x0: &DVector<f64>,
) -> Result<ShortestLength> {
    let class = classify(sys);
    if !class.is_stabilizable() {
        return Err(Error::Precondition("system is not stabilizable".into()));
    }
    let (n, m) = (sys.n(), sys.m());
    let reach = sys.reachable_from(x0)?;
    if class != SystemClass::Controllable && reach.dim() < n {
        return Ok(ShortestLength::Exact {
            length: reach.dim() + m,
        });
    }
    Ok(ShortestLength::Bracket {
        lower: n.min(m),
        upper: n + m,
    })
}
