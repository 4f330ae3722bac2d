//! Finite-volume assembly of `q ↦ -∇·(M ∇q)` with zero normal flux.
//!
//! Fluxes live on interior faces. The normal derivative at a face is the
//! compact two-point difference; tangential derivatives are the average of
//! the cell-centred derivatives of the two adjacent cells (one-sided in
//! boundary layers). Boundary faces carry zero flux, which is the discrete
//! form of `M(∇q + f)·n = 0`. Every face flux is added to one cell and
//! subtracted from the other, so columns of the operator sum to zero and the
//! right-hand side has zero total.

use crate::grid::ops::first_derivative_stencil;
use crate::grid::{GridSpec, Mat3, TensorField, VectorField};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *out = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Exact (bitwise) symmetry of the stored entries.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// Largest number of entries in any row.
    pub fn max_row_len(&self) -> usize {
        (0..self.n)
            .map(|r| self.row_ptr[r + 1] - self.row_ptr[r])
            .max()
            .unwrap_or(0)
    }
}

/// The gradient of `q` at a face as sparse weights, plus the face location data.
struct Face {
    axis: usize,
    left: usize,
    right: usize,
}

fn face_gradient(spec: &GridSpec, face: &Face) -> [Vec<(usize, f64)>; 3] {
    let h = spec.spacing();
    let dims = spec.dims();
    let mut grad: [Vec<(usize, f64)>; 3] = Default::default();
    grad[face.axis] = vec![(face.right, 1.0 / h[face.axis]), (face.left, -1.0 / h[face.axis])];
    for e in (0..3).filter(|&e| e != face.axis) {
        let stride = spec.stride(e) as isize;
        for cell in [face.left, face.right] {
            let pos = spec.coords(cell)[e];
            for (off, w) in first_derivative_stencil(pos, dims[e], h[e]) {
                if w != 0.0 {
                    grad[e].push(((cell as isize + off * stride) as usize, 0.5 * w));
                }
            }
        }
    }
    grad
}

fn interior_faces(spec: &GridSpec) -> impl Iterator<Item = Face> + '_ {
    (0..3).flat_map(move |axis| {
        let stride = spec.stride(axis);
        let n = spec.dims()[axis];
        (0..spec.len()).filter_map(move |left| {
            (spec.coords(left)[axis] + 1 < n).then_some(Face {
                axis,
                left,
                right: left + stride,
            })
        })
    })
}

fn average(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| 0.5 * (a[r][c] + b[r][c])))
}

/// Assembles the operator and the right-hand side `∇·(M f)`.
pub(crate) fn assemble(m: &TensorField, f: &VectorField) -> (SparseOperator, Vec<f64>) {
    let spec = m.spec();
    let n = spec.len();
    let h = spec.spacing();
    let mut triplets = Vec::with_capacity(n * 25);
    let mut rhs = vec![0.0; n];
    for face in interior_faces(spec) {
        let d = face.axis;
        let mf = average(&m.values()[face.left], &m.values()[face.right]);
        let fl = f.values()[face.left];
        let fr = f.values()[face.right];
        let ff: [f64; 3] = std::array::from_fn(|c| 0.5 * (fl[c] + fr[c]));
        let grad = face_gradient(spec, &face);
        let inv_h = 1.0 / h[d];
        let source_flux: f64 = (0..3).map(|e| mf[d][e] * ff[e]).sum();
        rhs[face.left] += inv_h * source_flux;
        rhs[face.right] -= inv_h * source_flux;
        for (e, weights) in grad.iter().enumerate() {
            let coeff = mf[d][e];
            if coeff == 0.0 {
                continue;
            }
            for &(cell, w) in weights {
                triplets.push((face.left, cell, -inv_h * coeff * w));
                triplets.push((face.right, cell, inv_h * coeff * w));
            }
        }
    }
    (SparseOperator::from_triplets(n, triplets), rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tensor::{diag, IDENTITY};

    #[test]
    fn csr_merges_duplicates_and_applies() {
        let op = SparseOperator::from_triplets(
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (0, 0, 0.5), (1, 1, 3.0)],
        );
        assert_eq!(op.get(0, 0), 1.5);
        assert_eq!(op.nnz(), 3);
        let mut y = [0.0; 2];
        op.apply(&[1.0, 1.0], &mut y);
        assert_eq!(y, [3.5, 3.0]);
        assert!(!op.is_symmetric());
    }

    #[test]
    fn identity_coefficient_gives_neumann_laplacian() {
        let g = GridSpec::unit_cube(4).unwrap();
        let m = TensorField::uniform(g, IDENTITY).unwrap();
        let (op, rhs) = assemble(&m, &VectorField::zeros(g));
        assert!(rhs.iter().all(|&b| b == 0.0));
        assert!(op.is_symmetric());
        assert_eq!(op.max_row_len(), 7);
        let h2 = (0.25f64).powi(2);
        // Interior cell: six neighbours; corner cell: three.
        let c = g.index(1, 1, 1);
        assert!((op.get(c, c) - 6.0 / h2).abs() < 1e-12);
        assert!((op.get(c, g.index(2, 1, 1)) + 1.0 / h2).abs() < 1e-12);
        assert!((op.get(0, 0) - 3.0 / h2).abs() < 1e-12);
        // Constants are in the kernel and columns sum to zero.
        let mut y = vec![0.0; g.len()];
        op.apply(&vec![1.0; g.len()], &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn constant_source_only_feeds_boundary_cells() {
        let g = GridSpec::unit_cube(4).unwrap();
        let m = TensorField::uniform(g, IDENTITY).unwrap();
        let c = [0.4, -1.0, 2.0];
        let f = VectorField::from_fn(g, |_| c);
        let (_, rhs) = assemble(&m, &f);
        let h = 0.25;
        for (idx, r) in rhs.iter().enumerate() {
            let [i, j, k] = g.coords(idx);
            // Cells on the low face of axis a lose the inflow c_a / h, high faces gain it.
            let side = |p: usize| -> f64 {
                if p == 0 {
                    1.0
                } else if p == 3 {
                    -1.0
                } else {
                    0.0
                }
            };
            let expected = (side(i) * c[0] + side(j) * c[1] + side(k) * c[2]) / h;
            assert!((r - expected).abs() < 1e-12, "cell {idx}");
        }
        assert!(rhs.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn anisotropic_weights() {
        let g = GridSpec::unit_cube(4).unwrap();
        // A = diag(2, 2, 1) so M = diag(1/2, 1/2, 1).
        let m = TensorField::uniform(g, diag([0.5, 0.5, 1.0])).unwrap();
        let (op, _) = assemble(&m, &VectorField::zeros(g));
        let h2 = (0.25f64).powi(2);
        let c = g.index(1, 2, 1);
        assert!((op.get(c, g.index(0, 2, 1)) + 1.0 / (2.0 * h2)).abs() < 1e-12);
        assert!((op.get(c, g.index(1, 3, 1)) + 1.0 / (2.0 * h2)).abs() < 1e-12);
        assert!((op.get(c, g.index(1, 2, 2)) + 1.0 / h2).abs() < 1e-12);
        assert!((op.get(c, c) - 4.0 / h2).abs() < 1e-12);
    }

    #[test]
    fn full_tensor_uses_nineteen_point_interior_stencil() {
        let g = GridSpec::unit_cube(6).unwrap();
        let mm = [[1.0, 0.2, 0.1], [0.2, 1.0, 0.3], [0.1, 0.3, 1.0]];
        let m = TensorField::uniform(g, mm).unwrap();
        let (op, _) = assemble(&m, &VectorField::zeros(g));
        let c = g.index(2, 3, 2);
        assert_eq!(op.row(c).filter(|&(_, v)| v != 0.0).count(), 19);
    }
}
