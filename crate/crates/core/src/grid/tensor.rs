//! Small dense 3x3 helpers.

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// The rotation generator `J` with `J e1 = e2`, `J e2 = -e1`, `J e3 = 0`.
pub const ROTATION: Mat3 = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];

pub fn diag(d: [f64; 3]) -> Mat3 {
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

#[inline]
pub fn mul_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// `J v` without the matrix product.
#[inline]
pub fn rotate(v: &[f64; 3]) -> [f64; 3] {
    [-v[1], v[0], 0.0]
}

pub fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| (0..3).map(|k| a[r][k] * b[k][c]).sum()))
}

pub fn transpose(m: &Mat3) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| m[c][r]))
}

pub fn sym_part(m: &Mat3) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| 0.5 * (m[r][c] + m[c][r])))
}

pub fn add(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] + b[r][c]))
}

pub fn scale(m: &Mat3, s: f64) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| s * m[r][c]))
}

pub fn outer(a: &[f64; 3], b: &[f64; 3]) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r] * b[c]))
}

pub fn is_symmetric(m: &Mat3) -> bool {
    m[0][1] == m[1][0] && m[0][2] == m[2][0] && m[1][2] == m[2][1]
}

pub fn frobenius(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Adjugate over determinant. Returns `None` when `|det| < rel_tol * |m|_F^3`.
pub fn inverse(m: &Mat3, rel_tol: f64) -> Option<Mat3> {
    let d = det(m);
    let scale = frobenius(m).powi(3);
    if !(d.abs() >= rel_tol * scale) || d == 0.0 {
        return None;
    }
    // Cofactors written so that symmetric input yields bitwise symmetric output.
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let c10 = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    let c11 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    let c12 = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    let c20 = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    let c21 = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    let c22 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv_d = 1.0 / d;
    let mut out = [
        [c00 * inv_d, c10 * inv_d, c20 * inv_d],
        [c01 * inv_d, c11 * inv_d, c21 * inv_d],
        [c02 * inv_d, c12 * inv_d, c22 * inv_d],
    ];
    if is_symmetric(m) {
        out = sym_part(&out);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_matches_matrix() {
        let v = [0.3, -1.2, 4.0];
        assert_eq!(mul_vec(&ROTATION, &v), rotate(&v));
    }

    #[test]
    fn inverse_of_diagonal() {
        let inv = inverse(&diag([2.0, 4.0, 1.0]), 1e-12).unwrap();
        assert_eq!(inv, diag([0.5, 0.25, 1.0]));
        assert!(inverse(&diag([1.0, 0.0, 1.0]), 1e-12).is_none());
    }

    #[test]
    fn inverse_multiplies_back() {
        let m = [[4.0, 1.0, -0.5], [0.3, 3.0, 0.2], [0.1, -0.7, 2.5]];
        let p = mul(&m, &inverse(&m, 1e-12).unwrap());
        for r in 0..3 {
            for c in 0..3 {
                assert!((p[r][c] - IDENTITY[r][c]).abs() < 1e-14);
            }
        }
    }
}
