//! A small dense primal-dual interior-point solver for block-diagonal
//! semidefinite programs.
//!
//! Solves `maximize b·y` subject to `S = C + Σ yᵢ Aᵢ ⪰ 0` over all blocks,
//! together with its Lagrangian partner `minimize C·Z` subject to
//! `Aᵢ·Z = −bᵢ`, `Z ⪰ 0`. The implementation is an infeasible-start
//! path-follower with HKM scaling, a Mehrotra predictor-corrector step, and
//! a dense Schur complement over the variables — adequate for desk-scale
//! verification; export the program for anything larger.

use crate::relaxation::{BlockSdp, SparseSymMat};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Absolute duality-gap target.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Scale of the initial identity iterates; also shifts the slack start
    /// when the constant matrix is not positive definite.
    pub initial_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions { tolerance: 1e-9, max_iterations: 200, initial_radius: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    InfeasibleSuspected,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolverStatus,
    /// Best dual objective `b·y` plus the program's constant offset.
    pub objective_value: f64,
    /// Matching primal objective `C·Z` plus the constant offset; together
    /// with `objective_value` it brackets the true optimum.
    pub primal_objective: f64,
    pub y: Vec<f64>,
    pub duality_gap: f64,
    pub iterations: usize,
    /// Signed duality gap recorded at the start of every iteration.
    pub gap_trace: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("matrix deviates from symmetry by {max_deviation:.3e}")]
    Asymmetric { max_deviation: f64 },
}

/// True iff the smallest eigenvalue is at least `-tol`. The input must be
/// symmetric within `tol`.
pub fn check_psd(m: &DMatrix<f64>, tol: f64) -> Result<bool, SolverError> {
    let mut max_deviation = 0.0f64;
    for r in 0..m.nrows() {
        for c in r + 1..m.ncols() {
            max_deviation = max_deviation.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    if max_deviation > tol.max(1e-12) {
        return Err(SolverError::Asymmetric { max_deviation });
    }
    let sym = 0.5 * (m + m.transpose());
    let min_eig = sym.symmetric_eigenvalues().min();
    Ok(min_eig >= -tol)
}

/// The slack `C + Σ yᵢ Aᵢ` of every block at the given point.
pub fn slack_matrices(sdp: &BlockSdp, y: &[f64]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = sdp.c.iter().map(|c| c.to_dense()).collect();
    for (v, mats) in sdp.a.iter().enumerate() {
        for (blk, mat) in mats.iter().enumerate() {
            for &(r, c, val) in &mat.entries {
                out[blk][(r, c)] += y[v] * val;
                if r != c {
                    out[blk][(c, r)] += y[v] * val;
                }
            }
        }
    }
    out
}

/// Smallest slack eigenvalue over all blocks; a feasibility certificate for
/// a candidate `y`.
pub fn slack_min_eigenvalue(sdp: &BlockSdp, y: &[f64]) -> f64 {
    slack_matrices(sdp, y)
        .iter()
        .map(|s| s.symmetric_eigenvalues().min())
        .fold(f64::INFINITY, f64::min)
}

fn cholesky_with_jitter(
    m: &DMatrix<f64>,
) -> Option<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = nalgebra::linalg::Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.trace().abs().max(1.0) / m.nrows() as f64;
    let mut jitter = 1e-14 * scale;
    for _ in 0..5 {
        let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * jitter;
        if let Some(c) = nalgebra::linalg::Cholesky::new(shifted) {
            return Some(c);
        }
        jitter *= 100.0;
    }
    None
}

/// Largest step `α` keeping `X + α·D` positive definite, given the Cholesky
/// factor of `X`; unbounded directions return infinity.
fn step_to_boundary(
    chol: &nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>,
    d: &DMatrix<f64>,
) -> f64 {
    let l = chol.l();
    let x = l
        .solve_lower_triangular(d)
        .expect("Cholesky factor is invertible");
    let w = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor is invertible");
    let sym = 0.5 * (&w + w.transpose());
    let min_eig = sym.symmetric_eigenvalues().min();
    if min_eig >= -1e-14 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

struct Workspace {
    dims: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    a: Vec<Vec<SparseSymMat>>,
    a_dense: Vec<Vec<DMatrix<f64>>>,
    b: Vec<f64>,
}

impl Workspace {
    fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    fn slack_residual(&self, y: &[f64], s: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        (0..self.dims.len())
            .map(|blk| {
                let mut r = self.c[blk].clone() - &s[blk];
                for (v, &yv) in y.iter().enumerate() {
                    r += &self.a_dense[v][blk] * yv;
                }
                r
            })
            .collect()
    }
}

/// Fraction-to-the-boundary factor.
const STEP_FRACTION: f64 = 0.98;

pub fn solve(sdp: &BlockSdp, opts: &SolverOptions) -> Solution {
    assert!(opts.tolerance > 0.0, "tolerance must be positive");
    assert!(opts.max_iterations >= 1, "at least one iteration required");
    let m = sdp.num_variables();
    if sdp.block_dims.iter().any(|&d| d > 200) || m > 1000 {
        eprintln!(
            "warning: problem size (blocks {:?}, {m} variables) exceeds the solver's \
             comfort zone; consider exporting to an external solver",
            sdp.block_dims
        );
    }
    let ws = Workspace {
        dims: sdp.block_dims.clone(),
        c: sdp.c.iter().map(|c| c.to_dense()).collect(),
        a: sdp.a.clone(),
        a_dense: sdp
            .a
            .iter()
            .map(|mats| mats.iter().map(|m| m.to_dense()).collect())
            .collect(),
        b: sdp.b.clone(),
    };
    let nb = ws.dims.len();
    let total_dim = ws.total_dim() as f64;
    let radius = opts.initial_radius.max(1e-3);

    // Feasible slack start at y = 0 when the constant matrix allows it,
    // shifted into the cone otherwise.
    let c_min_eig = ws
        .c
        .iter()
        .map(|c| c.symmetric_eigenvalues().min())
        .fold(f64::INFINITY, f64::min);
    let mut s: Vec<DMatrix<f64>> = if c_min_eig > 1e-8 {
        ws.c.clone()
    } else {
        ws.c
            .iter()
            .map(|c| c + DMatrix::identity(c.nrows(), c.ncols()) * (radius - c_min_eig))
            .collect()
    };
    let mut z: Vec<DMatrix<f64>> = ws
        .dims
        .iter()
        .map(|&d| DMatrix::identity(d, d) * radius)
        .collect();
    let mut y = vec![0.0f64; m];

    let mut gap_trace: Vec<f64> = Vec::new();
    let mut stalled = 0usize;
    let mut status = SolverStatus::MaxIterations;
    let mut iterations = opts.max_iterations;

    for it in 0..opts.max_iterations {
        let s_chol: Vec<_> = match s.iter().map(cholesky_with_jitter).collect::<Option<Vec<_>>>() {
            Some(c) => c,
            None => {
                status = SolverStatus::InfeasibleSuspected;
                iterations = it;
                break;
            }
        };
        let z_chol: Vec<_> = match z.iter().map(cholesky_with_jitter).collect::<Option<Vec<_>>>() {
            Some(c) => c,
            None => {
                status = SolverStatus::InfeasibleSuspected;
                iterations = it;
                break;
            }
        };
        let s_inv: Vec<DMatrix<f64>> = s_chol.iter().map(|c| c.inverse()).collect();

        let mu: f64 = (0..nb).map(|blk| (&z[blk] * &s[blk]).trace()).sum::<f64>() / total_dim;
        let pobj: f64 = (0..nb).map(|blk| (&ws.c[blk] * &z[blk]).trace()).sum();
        let dobj: f64 = y.iter().zip(&ws.b).map(|(yi, bi)| yi * bi).sum();
        let gap = pobj - dobj;
        gap_trace.push(gap);

        // residuals: rp_i = -b_i - A_i·Z (primal), Rd = C + Σ y A - S (dual)
        let rp: Vec<f64> = (0..m)
            .map(|i| -ws.b[i] - (0..nb).map(|blk| ws.a[i][blk].inner(&z[blk])).sum::<f64>())
            .collect();
        let rd = ws.slack_residual(&y, &s);
        let rp_norm = rp.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let rd_norm = rd
            .iter()
            .map(|r| r.amax())
            .fold(0.0f64, f64::max);

        if gap.abs() <= opts.tolerance && rp_norm <= opts.tolerance && rd_norm <= opts.tolerance {
            status = SolverStatus::Optimal;
            iterations = it;
            break;
        }
        if y.iter().any(|v| v.abs() > 1e12) || mu > 1e14 {
            status = SolverStatus::InfeasibleSuspected;
            iterations = it;
            break;
        }

        // Schur complement M_ij = Σ_blk tr(A_i Z A_j S⁻¹), symmetrized
        let mut schur = DMatrix::zeros(m, m);
        for j in 0..m {
            let h: Vec<DMatrix<f64>> = (0..nb)
                .map(|blk| &z[blk] * &ws.a_dense[j][blk] * &s_inv[blk])
                .collect();
            for i in 0..m {
                let mij: f64 = (0..nb).map(|blk| ws.a[i][blk].inner(&h[blk])).sum();
                schur[(i, j)] += mij;
            }
        }
        schur = symmetrize(schur);
        let schur_chol = match cholesky_with_jitter(&schur) {
            Some(c) => c,
            None => {
                status = SolverStatus::InfeasibleSuspected;
                iterations = it;
                break;
            }
        };

        // Z·Rd·S⁻¹ enters both solves
        let zrds: Vec<DMatrix<f64>> = (0..nb)
            .map(|blk| &z[blk] * &rd[blk] * &s_inv[blk])
            .collect();

        let solve_direction = |sigma_mu: f64,
                               corrector: Option<&Vec<DMatrix<f64>>>|
         -> (Vec<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let rhs: Vec<f64> = (0..m)
                .map(|i| {
                    let mut v = ws.b[i];
                    for blk in 0..nb {
                        v += sigma_mu * ws.a[i][blk].inner(&s_inv[blk]);
                        v -= ws.a[i][blk].inner(&zrds[blk]);
                        if let Some(corr) = corrector {
                            v -= ws.a[i][blk].inner(&corr[blk]);
                        }
                    }
                    v
                })
                .collect();
            let dy = if m == 0 {
                Vec::new()
            } else {
                schur_chol.solve(&DVector::from_vec(rhs)).as_slice().to_vec()
            };
            let ds: Vec<DMatrix<f64>> = (0..nb)
                .map(|blk| {
                    let mut d = rd[blk].clone();
                    for (v, &dyv) in dy.iter().enumerate() {
                        d += &ws.a_dense[v][blk] * dyv;
                    }
                    d
                })
                .collect();
            let dz: Vec<DMatrix<f64>> = (0..nb)
                .map(|blk| {
                    let mut d = &s_inv[blk] * sigma_mu - &z[blk]
                        - symmetrize(&z[blk] * &ds[blk] * &s_inv[blk]);
                    if let Some(corr) = corrector {
                        d -= symmetrize(corr[blk].clone());
                    }
                    d
                })
                .collect();
            (dy, ds, dz)
        };

        let max_steps = |dz: &[DMatrix<f64>], ds: &[DMatrix<f64>]| -> (f64, f64) {
            let ap = (0..nb)
                .map(|blk| step_to_boundary(&z_chol[blk], &dz[blk]))
                .fold(f64::INFINITY, f64::min);
            let ad = (0..nb)
                .map(|blk| step_to_boundary(&s_chol[blk], &ds[blk]))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // predictor
        let (_, ds_aff, dz_aff) = solve_direction(0.0, None);
        let (ap_aff, ad_aff) = max_steps(&dz_aff, &ds_aff);
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);
        let mu_aff: f64 = (0..nb)
            .map(|blk| {
                ((&z[blk] + &dz_aff[blk] * ap_aff) * (&s[blk] + &ds_aff[blk] * ad_aff)).trace()
            })
            .sum::<f64>()
            / total_dim;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-10, 1.0);

        // corrector with the second-order term ΔZ_aff ΔS_aff S⁻¹
        let corr: Vec<DMatrix<f64>> = (0..nb)
            .map(|blk| &dz_aff[blk] * &ds_aff[blk] * &s_inv[blk])
            .collect();
        let (dy, ds, dz) = solve_direction(sigma * mu, Some(&corr));
        let (ap, ad) = max_steps(&dz, &ds);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);

        for blk in 0..nb {
            z[blk] += &dz[blk] * ap;
            s[blk] += &ds[blk] * ad;
        }
        for (yi, dyi) in y.iter_mut().zip(dy.iter()) {
            *yi += ad * dyi;
        }

        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
            if stalled >= 3 {
                status = SolverStatus::InfeasibleSuspected;
                iterations = it + 1;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let pobj: f64 = (0..nb).map(|blk| (&ws.c[blk] * &z[blk]).trace()).sum();
    let dobj: f64 = y.iter().zip(&ws.b).map(|(yi, bi)| yi * bi).sum();
    Solution {
        status,
        objective_value: dobj + sdp.constant_offset,
        primal_objective: pobj + sdp.constant_offset,
        y,
        duality_gap: (pobj - dobj).abs(),
        iterations,
        gap_trace,
    }
}
