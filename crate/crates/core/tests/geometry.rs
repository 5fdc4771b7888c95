use borderline_core::geometry::*;
use borderline_core::identities::{gram_jacobian_fd, hemisphere_from, phi_jacobian, phi_map};
use borderline_core::linalg::Vector;
use proptest::prelude::*;

/// Coordinate Christoffel symbols `Γ^k_ij` of `g = x_n^{-2} δ` by the Koszul
/// formula with central differences of the metric.
fn christoffel_fd(x: &Vector, i: usize, j: usize, k: usize) -> f64 {
    let g = |y: &Vector, a: usize, b: usize| if a == b { y.last().powi(-2) } else { 0.0 };
    let dg = |l: usize, a: usize, b: usize| {
        let h = 1e-5;
        let mut p = *x;
        let mut m = *x;
        p[l] += h;
        m[l] -= h;
        (g(&p, a, b) - g(&m, a, b)) / (2.0 * h)
    };
    let ginv = x.last().powi(2);
    0.5 * ginv * (dg(i, j, k) + dg(j, i, k) - dg(k, i, j))
}

fn chart_point(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-2.0..2.0f64, n - 1)
        .prop_flat_map(|h| (Just(h), 0.2..3.0f64))
        .prop_map(|(mut h, t)| {
            h.push(t);
            Vector::from_slice(&h)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_connection_matches_koszul(x in (2usize..=3).prop_flat_map(chart_point)) {
        let n = x.dim();
        let h = x.last();
        let v = n - 1;
        for i in 0..n {
            for j in 0..n {
                // ∇_{e_i} e_j = x_n [ (∂_i x_n) ∂_j + x_n Γ^k_ij ∂_k ], then divide by x_n per frame slot
                let mut coords = Vector::zeros(n);
                if i == v {
                    coords[j] += h;
                }
                for k in 0..n {
                    coords[k] += h * h * christoffel_fd(&x, i, j, k);
                }
                let expected = coords.scale(1.0 / h);
                let got = frame_connection(n, i, j).unwrap();
                for k in 0..n {
                    prop_assert!((got[k] - expected[k]).abs() < 1e-6, "i={i} j={j} k={k}: {} vs {}", got[k], expected[k]);
                }
            }
        }
    }

    #[test]
    fn distance_is_isometry_invariant(
        x in chart_point(3),
        y in chart_point(3),
        shift in prop::collection::vec(-3.0..3.0f64, 2),
        s in 0.1..10.0f64,
    ) {
        let px = Point::hyperbolic(x).unwrap();
        let py = Point::hyperbolic(y).unwrap();
        let d = distance(&px, &py).unwrap();
        for iso in [Isometry::Translation(Vector::from_slice(&shift)), Isometry::Dilation(s)] {
            let e = distance(&iso.apply(&px), &iso.apply(&py)).unwrap();
            prop_assert!((d - e).abs() <= 1e-12 * (1.0 + d));
        }
    }

    #[test]
    fn distance_triangle_inequality(x in chart_point(2), y in chart_point(2), z in chart_point(2)) {
        let d = |a: &Vector, b: &Vector| hyperbolic_distance_coords(a, b);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
    }

    #[test]
    fn phi_jacobian_matches_gram_oracle(
        x in (2usize..=3).prop_flat_map(chart_point),
        z in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let n = x.dim();
        let z = Vector::from_slice(&z[..n - 1]);
        let p = Point::hyperbolic(x).unwrap();
        let exact = phi_jacobian(&p, &z).unwrap();
        let fd = gram_jacobian_fd(&p, &z, 1e-6).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1e-300), "{exact} vs {fd}");
    }

    #[test]
    fn hemisphere_from_contains_point(x in chart_point(3), z in prop::collection::vec(-3.0..3.0f64, 2)) {
        let p = Point::hyperbolic(x).unwrap();
        let omega = phi_map(&p, &Vector::from_slice(&z)).unwrap();
        let s = hemisphere_from(&p, &omega).unwrap();
        prop_assert!(s.residual(&x) < 1e-12);
        let nu = unit_normal(&p, &s).unwrap();
        for k in 0..3 {
            prop_assert!((nu.components[k] - omega[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn metric_compatibility_and_torsion() {
    for n in [2usize, 3] {
        let v = n - 1;
        for i in 0..n {
            for j in 0..n {
                let a = frame_connection(n, i, j).unwrap();
                for k in 0..n {
                    // e_i ⟨e_j, e_k⟩ = 0
                    let b = frame_connection(n, i, k).unwrap();
                    assert_eq!(a[k] + b[j], 0.0, "compatibility {i} {j} {k}");
                }
                // ∇_{e_i} e_j - ∇_{e_j} e_i = [e_i, e_j] = δ_{iv} e_j - δ_{jv} e_i
                let c = frame_connection(n, j, i).unwrap();
                let mut bracket = Vector::zeros(n);
                if i == v {
                    bracket[j] += 1.0;
                }
                if j == v {
                    bracket[i] -= 1.0;
                }
                for k in 0..n {
                    assert_eq!(a[k] - c[k], bracket[k], "torsion {i} {j} {k}");
                }
            }
        }
    }
}
