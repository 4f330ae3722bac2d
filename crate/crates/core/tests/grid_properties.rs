//! Algebraic invariants of the grid operators and norms on random inputs.

use nalgebra::Matrix3;
use proptest::prelude::*;
use sgeuler::grid::{
    curl, divergence, gradient, hessian, lp_norm, symmetric_eigenvalues, GridSpec, ScalarField, VectorField,
};

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    (4usize..8, 4usize..8, 4usize..8, 0.5f64..2.0, 0.5f64..2.0, 0.5f64..2.0, -1.0f64..1.0).prop_map(
        |(nx, ny, nz, lx, ly, lz, o)| GridSpec::new([nx, ny, nz], [o, -o, 0.5 * o], [lx, ly, lz]).unwrap(),
    )
}

fn scalar_strategy() -> impl Strategy<Value = ScalarField> {
    grid_strategy().prop_flat_map(|g| {
        prop::collection::vec(-1.0f64..1.0, g.len()).prop_map(move |v| ScalarField::new(g, v).unwrap())
    })
}

fn scalar_pair_strategy() -> impl Strategy<Value = (ScalarField, ScalarField)> {
    grid_strategy().prop_flat_map(|g| {
        (
            prop::collection::vec(-1.0f64..1.0, g.len()),
            prop::collection::vec(-1.0f64..1.0, g.len()),
        )
            .prop_map(move |(a, b)| (ScalarField::new(g, a).unwrap(), ScalarField::new(g, b).unwrap()))
    })
}

fn vector_strategy() -> impl Strategy<Value = VectorField> {
    grid_strategy().prop_flat_map(|g| {
        prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), g.len())
            .prop_map(move |v| VectorField::new(g, v).unwrap())
    })
}

fn inv_h2(g: &GridSpec) -> f64 {
    g.spacing().iter().map(|h| 1.0 / (h * h)).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_is_linear((s, t) in scalar_pair_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = gradient(&s.axpby(a, &t, b));
        let gs = gradient(&s);
        let gt = gradient(&t);
        let h = s.spec().spacing().iter().copied().fold(f64::INFINITY, f64::min);
        for ((l, x), y) in lhs.values().iter().zip(gs.values()).zip(gt.values()) {
            for c in 0..3 {
                prop_assert!((l[c] - (a * x[c] + b * y[c])).abs() < 1e-12 / h);
            }
        }
    }

    #[test]
    fn curl_of_gradient_vanishes(s in scalar_strategy()) {
        let c = curl(&gradient(&s));
        let scale = inv_h2(s.spec());
        prop_assert!(c.max_magnitude() < 1e-13 * scale);
    }

    #[test]
    fn divergence_of_curl_vanishes(v in vector_strategy()) {
        let d = divergence(&curl(&v));
        let scale = inv_h2(v.spec());
        prop_assert!(lp_norm(&d, f64::INFINITY) < 1e-13 * scale);
    }

    #[test]
    fn hessian_is_exact_on_quadratics(
        g in grid_strategy(),
        q in prop::array::uniform6(-2.0f64..2.0),
        b in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let m = [[q[0], q[3], q[4]], [q[3], q[1], q[5]], [q[4], q[5], q[2]]];
        let s = ScalarField::from_fn(g, |x| {
            let mut v = 0.0;
            for r in 0..3 {
                v += b[r] * x[r];
                for c in 0..3 {
                    v += 0.5 * m[r][c] * x[r] * x[c];
                }
            }
            v
        });
        let hs = hessian(&s);
        prop_assert!(hs.is_symmetric());
        let scale = inv_h2(&g);
        for t in hs.values() {
            for r in 0..3 {
                for c in 0..3 {
                    prop_assert!((t[r][c] - m[r][c]).abs() < 1e-11 * scale);
                }
            }
        }
        let grad = gradient(&s);
        for (idx, v) in grad.values().iter().enumerate() {
            let x = g.center(idx);
            for r in 0..3 {
                let exact = b[r] + (0..3).map(|c| m[r][c] * x[c]).sum::<f64>();
                prop_assert!((v[r] - exact).abs() < 1e-11 * scale.sqrt());
            }
        }
    }

    #[test]
    fn lp_norm_is_a_norm((s, t) in scalar_pair_strategy(), a in -4.0f64..4.0, p in 1.0f64..8.0) {
        let sum = s.axpby(1.0, &t, 1.0);
        for q in [p, f64::INFINITY] {
            let ns = lp_norm(&s, q);
            let nt = lp_norm(&t, q);
            prop_assert!(lp_norm(&sum, q) <= (ns + nt) * (1.0 + 1e-12));
            let scaled = lp_norm(&s.map(|v| a * v), q);
            prop_assert!((scaled - a.abs() * ns).abs() <= 1e-12 * (1.0 + scaled));
        }
    }

    #[test]
    fn lp_norm_grows_with_exponent_on_unit_volume(v in prop::collection::vec(-1.0f64..1.0, 125), p in 1.0f64..6.0) {
        let s = ScalarField::new(GridSpec::unit_cube(5).unwrap(), v).unwrap();
        let lo = lp_norm(&s, p);
        let hi = lp_norm(&s, p + 1.0);
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(hi <= lp_norm(&s, f64::INFINITY) * (1.0 + 1e-12));
    }

    #[test]
    fn mean_free_has_zero_mean(s in scalar_strategy()) {
        let m = s.mean_free();
        prop_assert!(m.mean().abs() < 1e-14);
        let shift = s.values()[0] - m.values()[0];
        for (a, b) in s.values().iter().zip(m.values()) {
            prop_assert!((a - b - shift).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_match_dense_solver(q in prop::array::uniform6(-5.0f64..5.0)) {
        let m = [[q[0], q[3], q[4]], [q[3], q[1], q[5]], [q[4], q[5], q[2]]];
        let ours = symmetric_eigenvalues(&m);
        let mut oracle: Vec<f64> = Matrix3::from_fn(|r, c| m[r][c]).symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        prop_assert!(ours[0] <= ours[1] && ours[1] <= ours[2]);
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }
}
