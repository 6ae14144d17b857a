//! Identification and stabilizing-gain synthesis from informative data.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::informativity::{
    consistent_set, image_product_condition, image_xplus_in_xminus, Dataset, PriorKnowledge,
};
use crate::matrixlab::{
    self, data_rank, is_schur, pinv, singular_values, spectral_radius, Subspace,
};
use crate::random;
use crate::serial::{ShapedMatrix, FORMAT_VERSION};
use crate::system::{classify, reachable_subspace, LtiSystem};
use crate::tolerance;

/// The unique `(A, B)` with `A X₋ + B U₋ = X₊`.
pub fn identify(data: &Dataset) -> Result<LtiSystem> {
    let (n, m) = (data.n(), data.m());
    let z = data.stacked();
    let rank = data_rank(&z);
    if rank.rank != n + m {
        return Err(Error::NotInformative {
            reason: format!("rank [X₋; U₋] = {} < n + m = {}", rank.rank, n + m),
            rank: Some(rank),
        });
    }
    let x_plus = data.x_plus();
    let ab = &x_plus * pinv(&z, rank.tol_used);
    let residual = (&ab * &z - &x_plus).norm();
    if residual > 1e-9 * (1.0 + x_plus.norm()) {
        return Err(Error::Numerical(format!(
            "identified system leaves residual {residual:.3e}; data inconsistent with any LTI system"
        )));
    }
    LtiSystem::new(ab.columns(0, n).into_owned(), ab.columns(n, m).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    FullRank,
    SubspaceRestricted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `Θ` with `X₋Θ ≻ 0` and `[[X₋Θ, X₊Θ], [(X₊Θ)ᵀ, X₋Θ]] ≻ 0`.
    FullRank { theta: DMatrix<f64> },
    /// Identified dynamics on `im X₋ = im V` and the reduced gain.
    SubspaceRestricted {
        a_r: DMatrix<f64>,
        b_r: DMatrix<f64>,
        v: DMatrix<f64>,
        k_r: DMatrix<f64>,
    },
}

/// A stabilizing gain with the evidence that certifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GainCertificateDoc", try_from = "GainCertificateDoc")]
pub struct GainCertificate {
    pub k: DMatrix<f64>,
    pub closed_loop_radius_on_data: f64,
    pub branch: Branch,
    pub witness: Witness,
}

impl GainCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessDoc {
    FullRank {
        theta: ShapedMatrix,
    },
    SubspaceRestricted {
        a_r: ShapedMatrix,
        b_r: ShapedMatrix,
        v: ShapedMatrix,
        k_r: ShapedMatrix,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainCertificateDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub branch: Branch,
    #[serde(rename = "K")]
    pub k: ShapedMatrix,
    pub radius: f64,
    pub witness: WitnessDoc,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl From<GainCertificate> for GainCertificateDoc {
    fn from(c: GainCertificate) -> Self {
        let witness = match &c.witness {
            Witness::FullRank { theta } => WitnessDoc::FullRank {
                theta: theta.into(),
            },
            Witness::SubspaceRestricted { a_r, b_r, v, k_r } => WitnessDoc::SubspaceRestricted {
                a_r: a_r.into(),
                b_r: b_r.into(),
                v: v.into(),
                k_r: k_r.into(),
            },
        };
        Self {
            version: FORMAT_VERSION,
            branch: c.branch,
            k: (&c.k).into(),
            radius: c.closed_loop_radius_on_data,
            witness,
        }
    }
}

impl TryFrom<GainCertificateDoc> for GainCertificate {
    type Error = Error;

    fn try_from(doc: GainCertificateDoc) -> Result<Self> {
        let witness = match doc.witness {
            WitnessDoc::FullRank { theta } => Witness::FullRank {
                theta: theta.to_matrix("witness.theta")?,
            },
            WitnessDoc::SubspaceRestricted { a_r, b_r, v, k_r } => Witness::SubspaceRestricted {
                a_r: a_r.to_matrix("witness.a_r")?,
                b_r: b_r.to_matrix("witness.b_r")?,
                v: v.to_matrix("witness.v")?,
                k_r: k_r.to_matrix("witness.k_r")?,
            },
        };
        Ok(Self {
            k: doc.k.to_matrix("K")?,
            closed_loop_radius_on_data: doc.radius,
            branch: doc.branch,
            witness,
        })
    }
}

/// Search for `Θ` certifying a right inverse `X₋† = Θ (X₋Θ)⁻¹` with
/// `X₊X₋†` Schur. Returns `Ok(None)` when no such right inverse exists.
///
/// Right inverses of a full-row-rank `X₋` are `X₋⁺ + Π W` with
/// `Π = I − X₋⁺X₋`, so `X₊X₋† = X₊X₋⁺ + (X₊Π) W`. Feasibility is therefore
/// stabilizability of the pair `(X₊X₋⁺, X₊Π)`; a stabilizing `W` gives the
/// right inverse, and `Θ = X₋† P` with `P − M P Mᵀ = I`, `M = X₊X₋†`,
/// satisfies the block inequality.
pub fn stabilize_fullrank(data: &Dataset) -> Result<Option<GainCertificate>> {
    let n = data.n();
    let t = data.len();
    let xm = data.x_minus();
    let rank = data_rank(&xm);
    if rank.rank != n {
        return Err(Error::Precondition(format!(
            "X₋ has rank {} < n = {n}",
            rank.rank
        )));
    }
    let xp = data.x_plus();
    let um = data.u_minus();
    let dec = matrixlab::svd(&xm, true)?;
    let xm_pinv = pinv(&xm, rank.tol_used);
    let kernel = dec.v.columns(n, t - n).into_owned();
    // feasible gains are K₀ + G W; start from the one of least norm
    let g = &um * &kernel;
    let g_dec = matrixlab::svd(&g, false)?;
    let g_tol = tolerance::data_rtol() * g_dec.s.first().copied().unwrap_or(0.0);
    let q = g_dec.s.iter().filter(|&&v| v > g_tol).count();
    let g_right = DMatrix::from_fn(t - n, q, |i, j| g_dec.v[(i, j)] / g_dec.s[j]);
    let k_raw = &um * &xm_pinv;
    let w0 = &g_right * g_dec.u.columns(0, q).transpose() * &k_raw;
    let base = &xm_pinv - &kernel * &w0;
    let a0 = &xp * &base;
    let b0 = &xp * &kernel;
    let stabilizable = if t == n {
        is_schur(&a0)?
    } else {
        classify(&LtiSystem::new(a0.clone(), b0.clone())?).is_stabilizable()
    };
    if !stabilizable {
        return Ok(None);
    }
    // in the reduced input v = Σ_G V_Gᵀ W the cost vᵀv is the cost of K − K₀
    let k0 = &um * &base;
    let weight = DMatrix::identity(n, n) + k0.transpose() * &k0;
    let w = if t == n {
        DMatrix::zeros(0, n)
    } else {
        riccati_gain(&a0, &(&b0 * &g_right), &weight)
            .map(|f| &g_right * f)
            .filter(|w| is_schur(&(&a0 + &b0 * w)).unwrap_or(false))
            .or_else(|| stabilizing_gain(&a0, &b0))
            .ok_or_else(|| {
                Error::Numerical("auxiliary pair is stabilizable but no gain was found".into())
            })?
    };
    let right_inverse = &base + &kernel * &w;
    let closed = &xp * &right_inverse;
    let radius = spectral_radius(&closed)?;
    if radius >= 1.0 {
        return Err(Error::Numerical(format!(
            "right inverse yields spectral radius {radius}"
        )));
    }
    let p = discrete_lyapunov(&closed, &DMatrix::identity(n, n))?;
    let mut theta = &right_inverse * &p;
    let margin = lmi_min_eigenvalue(&xm, &xp, &theta);
    if margin <= 0.0 {
        return Err(Error::Numerical(format!(
            "certificate block matrix is not positive definite (λ_min = {margin:.3e})"
        )));
    }
    if margin < tolerance::LMI_MARGIN {
        theta *= 2.0 * tolerance::LMI_MARGIN / margin;
    }
    let xm_theta = &xm * &theta;
    let inv = xm_theta
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("X₋Θ is singular".into()))?;
    let k = data.u_minus() * &theta * inv;
    Ok(Some(GainCertificate {
        k,
        closed_loop_radius_on_data: radius,
        branch: Branch::FullRank,
        witness: Witness::FullRank { theta },
    }))
}

/// Smallest eigenvalue of the symmetrized `[[X₋Θ, X₊Θ], [(X₊Θ)ᵀ, X₋Θ]]`.
pub fn lmi_min_eigenvalue(xm: &DMatrix<f64>, xp: &DMatrix<f64>, theta: &DMatrix<f64>) -> f64 {
    let n = xm.nrows();
    let p = xm * theta;
    let p = (&p + p.transpose()) * 0.5;
    let q = xp * theta;
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&p);
    block.view_mut((n, n), (n, n)).copy_from(&p);
    block.view_mut((0, n), (n, n)).copy_from(&q);
    block.view_mut((n, 0), (n, n)).copy_from(&q.transpose());
    SymmetricEigen::new(block)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Solve `P − M P Mᵀ = Q` through the Kronecker form.
pub fn discrete_lyapunov(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let lhs = DMatrix::identity(n * n, n * n) - m.kronecker(m);
    let rhs = DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov operator is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Dynamics of the data on `im X₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedDynamics {
    pub a_r: DMatrix<f64>,
    pub b_r: DMatrix<f64>,
    /// Orthonormal basis of `im X₋`.
    pub v: DMatrix<f64>,
}

/// Solve `VᵀX₊ = A_r (VᵀX₋) + B_r U₋` on the data image.
pub fn restricted_dynamics(data: &Dataset) -> Result<RestrictedDynamics> {
    if !image_xplus_in_xminus(data) {
        return Err(Error::Precondition(
            "im X₊ is not contained in im X₋".into(),
        ));
    }
    if !image_product_condition(data) {
        return Err(Error::Precondition(
            "im [X₋; U₋] differs from im X₋ × R^m".into(),
        ));
    }
    let m = data.m();
    let space = Subspace::data_image(&data.x_minus());
    let v = space.basis().clone();
    let r = v.ncols();
    let vt = v.transpose();
    let reduced = matrixlab::vstack(&(&vt * data.x_minus()), &data.u_minus())?;
    let target = &vt * data.x_plus();
    let smax = singular_values(&reduced).first().copied().unwrap_or(0.0);
    let ab = &target * pinv(&reduced, tolerance::data_rtol() * smax);
    let residual = (&ab * &reduced - &target).norm();
    if residual > 1e-9 * (1.0 + target.norm()) {
        return Err(Error::Numerical(format!(
            "restricted dynamics leave residual {residual:.3e}"
        )));
    }
    Ok(RestrictedDynamics {
        a_r: ab.columns(0, r).into_owned(),
        b_r: ab.columns(r, m).into_owned(),
        v,
    })
}

/// Gain `K = K_r Vᵀ` built from the restricted dynamics.
pub fn stabilize_restricted(data: &Dataset) -> Result<GainCertificate> {
    let rd = restricted_dynamics(data)?;
    let (r, m, n) = (rd.a_r.nrows(), data.m(), data.n());
    let (k_r, radius) = if r == 0 {
        (DMatrix::zeros(m, 0), 0.0)
    } else {
        let k_r = stabilizing_gain(&rd.a_r, &rd.b_r).ok_or_else(|| {
            Error::Infeasible(
                "dynamics on im X₋ are not stabilizable, so no consistent system is".into(),
            )
        })?;
        let radius = spectral_radius(&(&rd.a_r + &rd.b_r * &k_r))?;
        (k_r, radius)
    };
    let k = if r == 0 {
        DMatrix::zeros(m, n)
    } else {
        &k_r * rd.v.transpose()
    };
    Ok(GainCertificate {
        k,
        closed_loop_radius_on_data: radius,
        branch: Branch::SubspaceRestricted,
        witness: Witness::SubspaceRestricted {
            a_r: rd.a_r,
            b_r: rd.b_r,
            v: rd.v,
            k_r,
        },
    })
}

/// Gain certified by the data for the given prior knowledge.
pub fn stabilize_with_prior(data: &Dataset, pk: PriorKnowledge) -> Result<GainCertificate> {
    let rank_x = data_rank(&data.x_minus());
    let full = rank_x.rank == data.n();
    if pk != PriorKnowledge::Stabilizable || full {
        if !full {
            return Err(Error::NotInformative {
                reason: format!("X₋ has rank {} < n = {}", rank_x.rank, data.n()),
                rank: Some(rank_x),
            });
        }
        return stabilize_fullrank(data)?.ok_or_else(|| Error::NotInformative {
            reason: "no right inverse of X₋ makes X₊X₋† Schur".into(),
            rank: Some(rank_x),
        });
    }
    if !image_xplus_in_xminus(data) || !image_product_condition(data) {
        return Err(Error::NotInformative {
            reason: "rank-deficient data violate im X₊ ⊆ im X₋ or im [X₋; U₋] = im X₋ × R^m".into(),
            rank: Some(data_rank(&data.stacked())),
        });
    }
    stabilize_restricted(data)
}

const RICCATI_MAX_ITER: usize = 10_000;

/// `K` with `A + BK` Schur: discrete Riccati iteration with `Q = I`, `R = I`,
/// falling back to pole placement on the controllable part.
pub fn stabilizing_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let q = DMatrix::identity(a.nrows(), a.nrows());
    if let Some(k) = riccati_gain(a, b, &q) {
        if is_schur(&(a + b * &k)).unwrap_or(false) {
            return Some(k);
        }
    }
    place_on_controllable_part(a, b)
}

fn riccati_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = b.ncols();
    let r = DMatrix::<f64>::identity(m, m);
    let gain = |p: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let bp = b.transpose() * p;
        let s = &r + &bp * b;
        s.cholesky().map(|c| c.solve(&(&bp * a)))
    };
    let mut p = q.clone();
    for _ in 0..RICCATI_MAX_ITER {
        let g = gain(&p)?;
        let atp = a.transpose() * &p;
        let next = &atp * a - &atp * b * &g + q;
        let next = (&next + next.transpose()) * 0.5;
        if !next.iter().all(|v| v.is_finite()) {
            return None;
        }
        let delta = (&next - &p).norm();
        p = next;
        if delta <= 1e-12 * p.norm() {
            return gain(&p).map(|g| -g);
        }
    }
    None
}

const PLACEMENT_POLE: f64 = 0.5;

fn place_on_controllable_part(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    let reach = reachable_subspace(a, b).ok()?;
    let r = reach.dim();
    if r == 0 {
        return is_schur(a).ok()?.then(|| DMatrix::zeros(m, n));
    }
    let vc = reach.basis();
    let ac = vc.transpose() * a * vc;
    let bc = vc.transpose() * b;
    let mut rng = random::rng(0);
    for attempt in 0..16 {
        let (f, v) = if attempt == 0 {
            let mut v = DMatrix::zeros(m, 1);
            v[(0, 0)] = 1.0;
            (DMatrix::zeros(m, r), v)
        } else {
            (
                random::gaussian_matrix(&mut rng, m, r),
                random::gaussian_matrix(&mut rng, m, 1),
            )
        };
        let a1 = &ac + &bc * &f;
        let bv = &bc * &v;
        let mut ctrb = DMatrix::zeros(r, r);
        let mut col = bv.clone();
        for j in 0..r {
            ctrb.set_column(j, &col.column(0));
            col = &a1 * col;
        }
        let Some(ctrb_inv) = ctrb.try_inverse() else {
            continue;
        };
        let shifted = &a1 - DMatrix::identity(r, r) * PLACEMENT_POLE;
        let mut phi = DMatrix::identity(r, r);
        for _ in 0..r {
            phi = &phi * &shifted;
        }
        let k_row = -(ctrb_inv.row(r - 1) * phi);
        let kc = f + &v * k_row;
        let k = kc * vc.transpose();
        if is_schur(&(a + b * &k)).unwrap_or(false) {
            return Some(k);
        }
    }
    None
}

/// Result of checking a gain against sampled consistent systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainAudit {
    pub requested: usize,
    /// Sampled systems that passed the prior-knowledge filter.
    pub evaluated: usize,
    /// Draws discarded by the prior-knowledge filter.
    pub rejected: usize,
    pub stabilized: usize,
    pub max_radius: f64,
}

impl GainAudit {
    pub fn all_stabilized(&self) -> bool {
        self.evaluated > 0 && self.stabilized == self.evaluated
    }
}

const AUDIT_SCALES: [f64; 3] = [1.0, 10.0, 0.1];
const AUDIT_DRAWS_PER_SAMPLE: usize = 100;

/// Sample systems consistent with the data and admitted by `pk`, and count
/// how many `K` stabilizes.
pub fn verify_gain_on_consistent_set(
    data: &Dataset,
    pk: PriorKnowledge,
    k: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<GainAudit> {
    let cs = consistent_set(data);
    if !cs.is_consistent() {
        return Err(Error::Precondition(
            "data admits no consistent system".into(),
        ));
    }
    let n = data.n();
    let dim = cs.left_kernel().len();
    let mut audit = GainAudit {
        requested: samples,
        evaluated: 0,
        rejected: 0,
        stabilized: 0,
        max_radius: 0.0,
    };
    let record = |sys: &LtiSystem, audit: &mut GainAudit| -> Result<()> {
        let radius = spectral_radius(&sys.closed_loop(k)?)?;
        audit.evaluated += 1;
        audit.max_radius = audit.max_radius.max(radius);
        if radius < 1.0 {
            audit.stabilized += 1;
        }
        Ok(())
    };
    if dim == 0 {
        let sys = cs.member(&DMatrix::zeros(n, 0))?;
        if pk.admits(classify(&sys)) {
            record(&sys, &mut audit)?;
        } else {
            audit.rejected += 1;
        }
        return Ok(audit);
    }
    let mut rng = random::rng(seed);
    let mut draws = 0;
    while audit.evaluated < samples && draws < samples * AUDIT_DRAWS_PER_SAMPLE {
        let scale = AUDIT_SCALES[draws % AUDIT_SCALES.len()];
        draws += 1;
        let g = random::gaussian_matrix(&mut rng, n, dim);
        let norm = g.norm();
        if norm == 0.0 {
            continue;
        }
        let sys = cs.member(&(g * (scale / norm)))?;
        if pk.admits(classify(&sys)) {
            record(&sys, &mut audit)?;
        } else {
            audit.rejected += 1;
        }
    }
    Ok(audit)
}
