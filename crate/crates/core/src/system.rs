//! Discrete-time LTI plants `x(t+1) = A x(t) + B u(t)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixlab::{self, hstack, Subspace};
use crate::random::{self, SeededRng};
use crate::serial::{MatrixRows, FORMAT_VERSION};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SystemDoc", try_from = "SystemDoc")]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

/// Controllability class of a pair `(A, B)`. Exactly one applies to any system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemClass {
    Controllable,
    StabilizableNotControllable,
    NotStabilizable,
}

impl SystemClass {
    pub fn is_stabilizable(self) -> bool {
        !matches!(self, SystemClass::NotStabilizable)
    }
}

impl fmt::Display for SystemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemClass::Controllable => "controllable",
            SystemClass::StabilizableNotControllable => "stabilizable-not-controllable",
            SystemClass::NotStabilizable => "not-stabilizable",
        })
    }
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square and nonempty, got {}×{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "B must be {n}×m with m ≥ 1, got {}×{}",
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n() || u.len() != self.m() {
            return Err(Error::Dimension(format!(
                "step expects x ∈ R^{} and u ∈ R^{}, got {} and {}",
                self.n(),
                self.m(),
                x.len(),
                u.len()
            )));
        }
        Ok(&self.a * x + &self.b * u)
    }

    /// States `x(0), …, x(T)` as the columns of an `n × (T+1)` matrix, for
    /// inputs given as the columns of an `m × T` matrix.
    pub fn simulate(&self, x0: &DVector<f64>, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x0.len() != self.n() {
            return Err(Error::Dimension(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                self.n()
            )));
        }
        if inputs.nrows() != self.m() {
            return Err(Error::Dimension(format!(
                "inputs have dimension {}, expected {}",
                inputs.nrows(),
                self.m()
            )));
        }
        let t = inputs.ncols();
        let mut states = DMatrix::zeros(self.n(), t + 1);
        states.set_column(0, x0);
        for k in 0..t {
            let next = &self.a * states.column(k) + &self.b * inputs.column(k);
            states.set_column(k + 1, &next);
        }
        Ok(states)
    }

    pub fn closed_loop(&self, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if k.shape() != (self.m(), self.n()) {
            return Err(Error::Dimension(format!(
                "gain must be {}×{}, got {}×{}",
                self.m(),
                self.n(),
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(&self.a + &self.b * k)
    }

    /// `R(A, B)`.
    pub fn reachable(&self) -> Subspace {
        reachable_subspace(&self.a, &self.b).expect("dimensions checked at construction")
    }

    /// `R(A, [B x0])`: every state reachable along trajectories from `x0`.
    pub fn reachable_from(&self, x0: &DVector<f64>) -> Result<Subspace> {
        let g = hstack(
            &self.b,
            &DMatrix::from_column_slice(x0.len(), 1, x0.as_slice()),
        )?;
        reachable_subspace(&self.a, &g)
    }

    pub fn classify(&self) -> SystemClass {
        classify(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `{"n":…, "m":…, "A": rows, "B": rows}`; flat row-major arrays are also accepted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: MatrixRows,
    #[serde(rename = "B")]
    pub b: MatrixRows,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl From<&LtiSystem> for SystemDoc {
    fn from(sys: &LtiSystem) -> Self {
        Self {
            version: FORMAT_VERSION,
            n: sys.n(),
            m: sys.m(),
            a: MatrixRows::from_matrix(&sys.a),
            b: MatrixRows::from_matrix(&sys.b),
        }
    }
}

impl From<LtiSystem> for SystemDoc {
    fn from(sys: LtiSystem) -> Self {
        SystemDoc::from(&sys)
    }
}

impl TryFrom<SystemDoc> for LtiSystem {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<Self> {
        doc.into_system()
    }
}

impl SystemDoc {
    pub fn into_system(self) -> Result<LtiSystem> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "field `version`: unsupported version {}",
                self.version
            )));
        }
        if self.n == 0 {
            return Err(Error::Format("field `n`: must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::Format("field `m`: must be positive".into()));
        }
        let a = self.a.to_matrix("A", self.n, self.n)?;
        let b = self.b.to_matrix("B", self.n, self.m)?;
        LtiSystem::new(a, b)
    }
}

/// Image of `[G, AG, …, A^{n−1}G]`, grown one Krylov block at a time with
/// re-orthogonalization instead of forming the powers explicitly.
pub fn reachable_subspace(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Subspace> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "A must be square, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if g.nrows() != n {
        return Err(Error::Dimension(format!(
            "G has {} rows, expected {n}",
            g.nrows()
        )));
    }
    let mut unit = g.clone();
    for mut c in unit.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    let mut basis = Subspace::image(&unit, Some(tolerance::REACH_RTOL));
    let mut frontier = basis.basis().clone();
    let step_tol = tolerance::REACH_RTOL * a.norm();
    for _ in 1..n {
        if frontier.ncols() == 0 || basis.is_full() {
            break;
        }
        let w = a * &frontier;
        let q = basis.basis();
        let resid = &w - q * (q.transpose() * &w);
        let fresh = Subspace::image(&resid, Some(step_tol));
        if fresh.dim() == 0 {
            break;
        }
        let f = fresh.basis();
        let f = f - q * (q.transpose() * f);
        let merged = hstack(q, &f)?;
        basis = Subspace::image(&merged, Some(0.5));
        frontier = f;
    }
    Ok(Subspace::from_orthonormal(
        basis.basis().clone(),
        tolerance::REACH_RTOL,
    ))
}

/// Smallest singular value of `[A − λI, B]`.
pub fn pbh_margin(sys: &LtiSystem, lambda: Complex64) -> f64 {
    let n = sys.n();
    let m = sys.m();
    let mat = DMatrix::<Complex64>::from_fn(n, n + m, |r, c| {
        if c < n {
            let diag = if r == c {
                lambda
            } else {
                Complex64::new(0.0, 0.0)
            };
            Complex64::new(sys.a[(r, c)], 0.0) - diag
        } else {
            Complex64::new(sys.b[(r, c - n)], 0.0)
        }
    });
    matrixlab::complex_singular_values(&mat)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// PBH classification: an eigenvalue `λ` is uncontrollable when
/// `rank [A − λI, B] < n`. Modes within the unit-circle band count as unstable.
pub fn classify(sys: &LtiSystem) -> SystemClass {
    let scale = hstack(&sys.a, &sys.b)
        .map(|ab| ab.norm())
        .unwrap_or(1.0)
        .max(1.0);
    let threshold = tolerance::PBH_RTOL * scale;
    let eigs = match matrixlab::eigenvalues(&sys.a) {
        Ok(e) => e,
        Err(_) => return SystemClass::NotStabilizable,
    };
    let mut controllable = true;
    for lambda in eigs {
        if pbh_margin(sys, lambda) <= threshold {
            controllable = false;
            if lambda.norm() >= 1.0 - tolerance::UNIT_CIRCLE_BAND {
                return SystemClass::NotStabilizable;
            }
        }
    }
    if controllable {
        SystemClass::Controllable
    } else {
        SystemClass::StabilizableNotControllable
    }
}

const GENERATOR_ATTEMPTS: usize = 100;

/// A system of the requested class, deterministic in `seed`.
pub fn random_system(class: SystemClass, n: usize, m: usize, seed: u64) -> Result<LtiSystem> {
    if n == 0 || m == 0 {
        return Err(Error::Infeasible(format!(
            "dimensions must be positive, got n={n}, m={m}"
        )));
    }
    if class == SystemClass::StabilizableNotControllable && n < 2 {
        return Err(Error::Infeasible(
            "stabilizable-but-not-controllable generation needs n ≥ 2".into(),
        ));
    }
    let mut rng = random::rng(seed);
    for _ in 0..GENERATOR_ATTEMPTS {
        let sys = match class {
            SystemClass::Controllable => draw_gaussian(&mut rng, n, m)?,
            SystemClass::StabilizableNotControllable => {
                let r = rng.random_range(1..n);
                draw_structured(&mut rng, n, m, r, ModeBand::Stable)?
            }
            SystemClass::NotStabilizable => {
                let r = rng.random_range(0..n);
                draw_structured(&mut rng, n, m, r, ModeBand::Unstable)?
            }
        };
        if classify(&sys) == class {
            return Ok(sys);
        }
    }
    Err(Error::Numerical(format!(
        "no {class} system accepted after {GENERATOR_ATTEMPTS} draws"
    )))
}

fn draw_gaussian(rng: &mut SeededRng, n: usize, m: usize) -> Result<LtiSystem> {
    let a = random::gaussian_matrix(rng, n, n) / (n as f64).sqrt();
    let b = random::gaussian_matrix(rng, n, m);
    LtiSystem::new(a, b)
}

#[derive(Clone, Copy)]
enum ModeBand {
    Stable,
    Unstable,
}

/// Block upper-triangular `(A, B)` with controllable leading block of size `r`,
/// hidden by a random orthogonal similarity.
fn draw_structured(
    rng: &mut SeededRng,
    n: usize,
    m: usize,
    r: usize,
    band: ModeBand,
) -> Result<LtiSystem> {
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    if r > 0 {
        let roots = draw_moduli(rng, r, 0.2, 1.3, false);
        a.view_mut((0, 0), (r, r)).copy_from(&companion(&roots));
        b[(r - 1, 0)] = 1.0;
        if m > 1 {
            b.view_mut((0, 1), (r, m - 1))
                .copy_from(&random::gaussian_matrix(rng, r, m - 1));
        }
        a.view_mut((0, r), (r, n - r))
            .copy_from(&random::gaussian_matrix(rng, r, n - r));
    }
    let uncontrollable = match band {
        ModeBand::Stable => modal_block(rng, n - r, 0.1, 0.9, false),
        ModeBand::Unstable => modal_block(rng, n - r, 0.1, 1.4, true),
    };
    a.view_mut((r, r), (n - r, n - r))
        .copy_from(&uncontrollable);
    let q = random::orthogonal_matrix(rng, n);
    LtiSystem::new(&q * a * q.transpose(), &q * b)
}

/// A mode: a real eigenvalue or a conjugate pair `ρ e^{±iθ}`.
enum Mode {
    Real(f64),
    Pair(f64, f64),
}

fn draw_moduli(
    rng: &mut SeededRng,
    dim: usize,
    lo: f64,
    hi: f64,
    first_unstable: bool,
) -> Vec<Mode> {
    let mut modes = Vec::new();
    let mut left = dim;
    while left > 0 {
        let rho = if first_unstable && modes.is_empty() {
            rng.random_range(1.05..1.4)
        } else {
            rng.random_range(lo..hi)
        };
        if left >= 2 && rng.random_bool(0.5) {
            let theta = rng.random_range(0.1..PI - 0.1);
            modes.push(Mode::Pair(rho, theta));
            left -= 2;
        } else {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            modes.push(Mode::Real(sign * rho));
            left -= 1;
        }
    }
    modes
}

/// Block-diagonal real matrix realizing randomly drawn modes.
fn modal_block(
    rng: &mut SeededRng,
    dim: usize,
    lo: f64,
    hi: f64,
    first_unstable: bool,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, dim);
    let mut i = 0;
    for mode in draw_moduli(rng, dim, lo, hi, first_unstable) {
        match mode {
            Mode::Real(l) => {
                out[(i, i)] = l;
                i += 1;
            }
            Mode::Pair(rho, theta) => {
                let (s, c) = theta.sin_cos();
                out[(i, i)] = rho * c;
                out[(i, i + 1)] = -rho * s;
                out[(i + 1, i)] = rho * s;
                out[(i + 1, i + 1)] = rho * c;
                i += 2;
            }
        }
    }
    out
}

/// Companion matrix whose characteristic polynomial has the given roots.
fn companion(modes: &[Mode]) -> DMatrix<f64> {
    // coefficients lowest degree first, monic
    let mut poly = vec![1.0];
    let mul = |poly: &[f64], factor: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; poly.len() + factor.len() - 1];
        for (i, p) in poly.iter().enumerate() {
            for (j, f) in factor.iter().enumerate() {
                out[i + j] += p * f;
            }
        }
        out
    };
    for mode in modes {
        poly = match *mode {
            Mode::Real(l) => mul(&poly, &[-l, 1.0]),
            Mode::Pair(rho, theta) => mul(&poly, &[rho * rho, -2.0 * rho * theta.cos(), 1.0]),
        };
    }
    let r = poly.len() - 1;
    let mut c = DMatrix::zeros(r, r);
    for i in 0..r.saturating_sub(1) {
        c[(i, i + 1)] = 1.0;
    }
    for j in 0..r {
        c[(r - 1, j)] = -poly[j];
    }
    c
}

/// An initial state with `R(A, [B x0]) ≠ R^n`, or `None` when the system is
/// controllable and no such state exists.
pub fn adversarial_initial_state(sys: &LtiSystem, seed: u64) -> Option<DVector<f64>> {
    if classify(sys) == SystemClass::Controllable {
        return None;
    }
    let n = sys.n();
    let reach = sys.reachable();
    if reach.is_full() {
        return None;
    }
    let mut rng = random::rng(seed);
    let coeffs = random::gaussian_vector(&mut rng, reach.dim());
    let candidate = reach.basis() * coeffs;
    for x0 in [candidate, DVector::zeros(n)] {
        if sys
            .reachable_from(&x0)
            .map(|s| s.dim() < n)
            .unwrap_or(false)
        {
            return Some(x0);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn sys(a: DMatrix<f64>, b: DMatrix<f64>) -> LtiSystem {
        LtiSystem::new(a, b).unwrap()
    }

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LtiSystem::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1)).is_err());
        assert!(LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1)).is_err());
        assert!(LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn simulate_scalar_integrator() {
        let s = sys(dmatrix![1.0], dmatrix![1.0]);
        let x = s.simulate(&vec(&[0.0]), &dmatrix![1.0, 1.0]).unwrap();
        assert_eq!(x, dmatrix![0.0, 1.0, 2.0]);
    }

    #[test]
    fn simulate_zero_input_from_rest() {
        let s = random_system(SystemClass::Controllable, 3, 2, 5).unwrap();
        let x = s
            .simulate(&DVector::zeros(3), &DMatrix::zeros(2, 4))
            .unwrap();
        assert_eq!(x, DMatrix::zeros(3, 5));
    }

    #[test]
    fn simulate_double_integrator_chain() {
        let s = sys(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0]);
        let x = s.simulate(&vec(&[0.0, 0.0]), &dmatrix![1.0, 0.0]).unwrap();
        assert_eq!(x, dmatrix![0.0, 0.0, 1.0; 0.0, 1.0, 0.0]);
    }

    #[test]
    fn simulate_rejects_dimension_mismatch() {
        let s = sys(dmatrix![1.0], dmatrix![1.0]);
        assert!(s.simulate(&vec(&[0.0, 1.0]), &dmatrix![1.0]).is_err());
        assert!(s.simulate(&vec(&[0.0]), &dmatrix![1.0; 2.0]).is_err());
    }

    #[test]
    fn reachable_examples() {
        let a = dmatrix![1.0, 0.0; 0.0, 2.0];
        let r = reachable_subspace(&a, &dmatrix![1.0; 0.0]).unwrap();
        assert_eq!(r.dim(), 1);
        assert!(r.contains_vector(&vec(&[1.0, 0.0]), 1e-12));
        assert_eq!(
            reachable_subspace(&a, &DMatrix::identity(2, 2))
                .unwrap()
                .dim(),
            2
        );
        let chain = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert_eq!(
            reachable_subspace(&chain, &dmatrix![0.0; 1.0])
                .unwrap()
                .dim(),
            2
        );
    }

    #[test]
    fn reachable_rejects_mismatch() {
        assert!(reachable_subspace(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn classify_examples() {
        let chain = sys(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0]);
        assert_eq!(classify(&chain), SystemClass::Controllable);
        let split = sys(dmatrix![0.5, 0.0; 0.0, 2.0], dmatrix![0.0; 1.0]);
        assert_eq!(classify(&split), SystemClass::StabilizableNotControllable);
        let dead = sys(dmatrix![2.0, 0.0; 0.0, 0.5], dmatrix![0.0; 0.0]);
        assert_eq!(classify(&dead), SystemClass::NotStabilizable);
    }

    #[test]
    fn classify_marginal_uncontrollable_mode_is_not_stabilizable() {
        let s = sys(dmatrix![1.0, 0.0; 0.0, 0.3], dmatrix![0.0; 1.0]);
        assert_eq!(classify(&s), SystemClass::NotStabilizable);
        let s = sys(dmatrix![1.0 - 1e-12, 0.0; 0.0, 0.3], dmatrix![0.0; 1.0]);
        assert_eq!(classify(&s), SystemClass::NotStabilizable);
    }

    #[test]
    fn generator_examples() {
        let s = random_system(SystemClass::Controllable, 3, 1, 7).unwrap();
        assert_eq!(classify(&s), SystemClass::Controllable);
        let s = random_system(SystemClass::StabilizableNotControllable, 2, 1, 1).unwrap();
        assert_eq!(classify(&s), SystemClass::StabilizableNotControllable);
        let s = random_system(SystemClass::NotStabilizable, 2, 1, 3).unwrap();
        assert_eq!(classify(&s), SystemClass::NotStabilizable);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_system(SystemClass::StabilizableNotControllable, 4, 2, 11).unwrap();
        let b = random_system(SystemClass::StabilizableNotControllable, 4, 2, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_rejects_infeasible_requests() {
        assert!(matches!(
            random_system(SystemClass::StabilizableNotControllable, 1, 1, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(random_system(SystemClass::Controllable, 0, 1, 0).is_err());
    }

    #[test]
    fn adversarial_examples() {
        let chain = sys(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0]);
        assert!(adversarial_initial_state(&chain, 0).is_none());

        let split = sys(dmatrix![0.5, 0.0; 0.0, 2.0], dmatrix![0.0; 1.0]);
        assert_eq!(split.reachable_from(&vec(&[0.0, 0.0])).unwrap().dim(), 1);
        assert_eq!(split.reachable_from(&vec(&[1.0, 0.0])).unwrap().dim(), 2);
        let x0 = adversarial_initial_state(&split, 4).unwrap();
        assert_eq!(split.reachable_from(&x0).unwrap().dim(), 1);
        // never the e₁ direction, which would excite the uncontrollable mode
        assert!(x0[0].abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_flat_form() {
        let s = sys(dmatrix![0.5, 1.0; 0.0, 0.25], dmatrix![1.0; 2.0]);
        assert_eq!(LtiSystem::from_json(&s.to_json()).unwrap(), s);
        let flat = r#"{"n":2,"m":1,"A":[0.5,1.0,0.0,0.25],"B":[1.0,2.0]}"#;
        assert_eq!(LtiSystem::from_json(flat).unwrap(), s);
    }

    #[test]
    fn json_errors_name_the_field() {
        let bad = r#"{"n":2,"m":1,"A":[[1,0],[0]],"B":[[1],[0]]}"#;
        let err = LtiSystem::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("`A`"), "{err}");
        let missing = r#"{"n":2,"m":1,"A":[[1,0],[0,1]]}"#;
        let err = LtiSystem::from_json(missing).unwrap_err().to_string();
        assert!(err.contains("`B`"), "{err}");
    }
}
