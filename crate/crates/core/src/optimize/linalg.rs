use nalgebra::{DMatrix, DVector};

/// Scaled-determinant threshold below which a Jacobian counts as singular.
///
/// The scaled determinant is `|det J| / Π‖J_d‖` (square) or
/// `√det(JᵀJ) / Π‖J_d‖` (tall), the Hadamard ratio, which lies in `[0, 1]`
/// and is invariant to column scaling.
pub const SINGULARITY_TOL: f64 = 1e-12;

const RIDGE: f64 = 1e-8;

/// Hadamard ratio of `J`; zero when a column vanishes.
pub(crate) fn scaled_determinant(j: &DMatrix<f64>) -> f64 {
    let norms: f64 = j.column_iter().map(|c| c.norm()).product();
    if !(norms > 0.0) || !norms.is_finite() {
        return 0.0;
    }
    let det = if j.is_square() {
        j.clone().lu().determinant().abs()
    } else {
        (j.transpose() * j).determinant().max(0.0).sqrt()
    };
    det / norms
}

/// Solves `J x = r` in the least-squares sense, i.e. returns `J†r`.
///
/// Square, well-conditioned `J` is solved directly by LU so that
/// Gauss-Newton reproduces Newton bit for bit. Tall `J` uses a Cholesky solve
/// of the normal equations. When `J` is numerically singular the normal
/// matrix is regularized with `λ = 1e-8·trace(JᵀJ)/D`; `None` means the
/// regularized system is still singular.
pub fn least_squares_step(j: &DMatrix<f64>, r: &[f64]) -> Option<DVector<f64>> {
    let rhs = DVector::from_column_slice(r);
    let d = j.ncols();
    if scaled_determinant(j) >= SINGULARITY_TOL {
        let x = if j.is_square() {
            j.clone().lu().solve(&rhs)?
        } else {
            (j.transpose() * j).cholesky()?.solve(&(j.transpose() * &rhs))
        };
        return x.iter().all(|v| v.is_finite()).then_some(x);
    }
    let mut normal = j.transpose() * j;
    let lambda = RIDGE * normal.trace() / d as f64;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return None;
    }
    for i in 0..d {
        normal[(i, i)] += lambda;
    }
    let x = normal.cholesky()?.solve(&(j.transpose() * &rhs));
    x.iter().all(|v| v.is_finite()).then_some(x)
}
