use super::{tensor::Mat3, GridError, TensorField};

/// Eigenvalues of a symmetric 3x3 matrix in ascending order (cyclic Jacobi).
pub fn symmetric_eigenvalues(m: &Mat3) -> [f64; 3] {
    let mut a = *m;
    for _sweep in 0..50 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let diag = a[0][0].powi(2) + a[1][1].powi(2) + a[2][2].powi(2);
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A <- G^T A G with the Givens rotation in the (p, q) plane.
            #[allow(clippy::needless_range_loop)]
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            #[allow(clippy::needless_range_loop)]
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(f64::total_cmp);
    ev
}

/// Global minimum over cells of the smallest eigenvalue, with its cell index.
pub fn min_hessian_eigenvalue(t: &TensorField) -> Result<(f64, usize), GridError> {
    if !t.is_symmetric() {
        return Err(GridError::NotSymmetric);
    }
    Ok(t
        .values()
        .iter()
        .enumerate()
        .map(|(i, m)| (symmetric_eigenvalues(m)[0], i))
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best }))
}
