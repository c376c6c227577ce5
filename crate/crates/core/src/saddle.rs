//! Dense solves of the RBF saddle-point system `[Φ P; Pᵀ 0] [w; λ] = [I_φ; I_π]`.

use nalgebra::{DMatrix, DVector};

/// Condition-number estimate above which a local system is rejected.
pub const COND_LIMIT: f64 = 1e14;

/// Relative residual `‖A x - b‖ / ‖b‖` above which a solve is rejected.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    /// The full solution `[w; λ]`.
    pub solution: DVector<f64>,
    /// 1-norm condition estimate of the system matrix.
    pub condition: f64,
    /// `‖A x - b‖∞ / ‖b‖∞`.
    pub residual: f64,
}

impl SaddleSolution {
    /// The first `n` entries: the quadrature weights.
    pub fn weights(&self, n: usize) -> &[f64] {
        &self.solution.as_slice()[..n]
    }
}

/// Why a saddle solve was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum SaddleFailure {
    Singular,
    IllConditioned(f64),
    Residual(f64),
}

impl std::fmt::Display for SaddleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SaddleFailure::Singular => write!(f, "singular local system"),
            SaddleFailure::IllConditioned(c) => {
                write!(f, "local system condition estimate {c:.3e} exceeds {COND_LIMIT:e}")
            }
            SaddleFailure::Residual(r) => {
                write!(f, "local solve residual {r:.3e} exceeds {RESIDUAL_LIMIT:e}")
            }
        }
    }
}

/// Assembles `[Φ P; Pᵀ 0]` from an `n×n` block `phi` and an `n×M` block `p`.
pub fn saddle_matrix(phi: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = phi.nrows();
    let m = p.ncols();
    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(phi);
    a.view_mut((0, n), (n, m)).copy_from(p);
    a.view_mut((n, 0), (m, n)).copy_from(&p.transpose());
    a
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

/// Solves a symmetric saddle system by partially pivoted LU, estimating the
/// condition number with Hager's 1-norm method (which needs only solves
/// with `A`, since `Aᵀ = A`).
pub fn solve_saddle(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SaddleSolution, SaddleFailure> {
    let dim = a.nrows();
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or(SaddleFailure::Singular)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(SaddleFailure::Singular);
    }

    let mut est = 0.0;
    let mut probe = DVector::from_element(dim, 1.0 / dim as f64);
    for _ in 0..5 {
        let y = lu.solve(&probe).ok_or(SaddleFailure::Singular)?;
        est = y.abs().sum();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = lu.solve(&xi).ok_or(SaddleFailure::Singular)?;
        let (j, zmax) = z.iter().enumerate().fold(
            (0, 0.0f64),
            |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            },
        );
        if zmax <= z.dot(&probe) {
            break;
        }
        probe = DVector::zeros(dim);
        probe[j] = 1.0;
    }
    let condition = norm1(a) * est;
    if !(condition <= COND_LIMIT) {
        return Err(SaddleFailure::IllConditioned(condition));
    }

    let r = a * &x - b;
    let scale = b.amax();
    let residual = if scale > 0.0 { r.amax() / scale } else { r.amax() };
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(SaddleFailure::Residual(residual));
    }
    Ok(SaddleSolution {
        solution: x,
        condition,
        residual,
    })
}
