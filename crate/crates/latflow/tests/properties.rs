//! Property tests for the invariants the library relies on.

use latflow::diophantine::{escape_of_mass, r_d_membership, relation_heuristic, Gate, OrbitBase, RdMembership, TargetSpec};
use latflow::exact::{parse_value, Value};
use latflow::flows::{wrap_unit, XPrimePoint};
use latflow::heights::{alpha_prime, ht2, CalibratedConstants, HeightParams};
use latflow::lab::{covering_counts, quad_unit, COVERING_BUDGET};
use latflow::lattice::{lambda1, UnimodularLattice};
use latflow::tracker::{slice_lattice, slice_tracker};
use proptest::prelude::*;

fn point(d: usize) -> impl Strategy<Value = XPrimePoint> {
    (prop::collection::vec(0.05f64..5.0, d - 1), prop::collection::vec(-0.5f64..0.5, d - 1))
        .prop_map(|(tau, xi)| XPrimePoint::new(tau, xi).unwrap())
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(1.0);
    r.min(1.0 - r)
}

/// Integer matrices of determinant one built from elementary moves.
fn unimodular(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec((0..d, 0..d, -2i64..=2), 1..5).prop_map(move |moves| {
        let mut m: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        for (a, b, k) in moves {
            if a != b {
                for row in m.iter_mut() {
                    row[a] += k as f64 * row[b];
                }
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_ignores_horocycle_moves(x in point(3), eta in prop::collection::vec(-4.0f64..4.0, 2)) {
        let y = x.act_horo(&eta);
        for i in 0..2 {
            prop_assert_eq!(y.kappa_i(i), x.kappa_i(i));
        }
    }

    #[test]
    fn horocycle_moves_compose(x in point(3), s1 in -2.0f64..2.0, s2 in -2.0f64..2.0, i in 0usize..2) {
        let two = x.act_horo_i(s1, i).act_horo_i(s2, i);
        let one = x.act_horo_i(s1 + s2, i);
        prop_assert!(circle_dist(two.xi()[i], one.xi()[i]) < 1e-12);
        prop_assert_eq!(two.xi()[1 - i], x.xi()[1 - i]);
    }

    #[test]
    fn alpha_prime_ignores_other_directions(x in point(3), s in -3.0f64..3.0, i in 0usize..2) {
        let lam = 0.9;
        let moved = x.act_horo_i(s, 1 - i);
        prop_assert_eq!(alpha_prime(&moved, i, lam).unwrap(), alpha_prime(&x, i, lam).unwrap());
    }

    #[test]
    fn alpha_prime_dominates_shortest_vector(x in point(3), i in 0usize..2) {
        let lam = 0.9;
        let l1 = lambda1(&slice_lattice(x.tau(), x.xi()).unwrap()).unwrap();
        prop_assert!(alpha_prime(&x, i, lam).unwrap() * l1.powf(lam) >= 1.0 - 1e-12);
    }

    #[test]
    fn lambda1_ignores_basis_change(
        tau in prop::collection::vec(0.05f64..2.0, 2),
        xi in prop::collection::vec(-0.5f64..0.5, 2),
        u in unimodular(3),
    ) {
        let x = XPrimePoint::new(tau, xi).unwrap();
        let l = slice_lattice(x.tau(), x.xi()).unwrap();
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|j| (0..3).map(|r| (0..3).map(|k| l.columns()[k][r] * u[k][j]).sum()).collect())
            .collect();
        let other = UnimodularLattice::from_columns(cols).unwrap();
        let (a, b) = (lambda1(&l).unwrap(), lambda1(&other).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn ht_is_basis_free_and_scales(t in -3.0f64..3.0, a in -4i64..=4, lam in 0.1f64..0.99) {
        let (e, f) = (t.exp(), (-t).exp());
        let base = ht2([[e, 0.0], [0.0, f]], lam).unwrap();
        prop_assert!((base - (lam * t.abs()).exp()).abs() <= 1e-12 * base);
        let sheared = ht2([[e, 0.0], [a as f64 * e, f]], lam).unwrap();
        prop_assert!((sheared - base).abs() <= 1e-9 * base);
    }

    #[test]
    fn quadrature_converges_on_smooth_integrands(c in 0.5f64..3.0, k in 1u32..4, a in -1.0f64..1.0) {
        let g = move |s: f64| Ok(c + a * s * s + (2.0 * std::f64::consts::PI * k as f64 * s).cos() * 0.3);
        let exact = c + a / 12.0;
        let q = quad_unit(g, 64).unwrap();
        prop_assert!((q.value - exact).abs() <= q.error.max(1e-12));
        prop_assert!((q.value - exact).abs() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tracker_dual_matches_float_inverse(tau in prop::collection::vec(0.2f64..3.0, 2), xi in prop::collection::vec(-0.5f64..0.5, 2)) {
        let exact = slice_tracker(&tau, &xi).unwrap().dual().unwrap().lambda1().unwrap();
        let float = lambda1(&slice_lattice(&tau, &xi).unwrap().dual().unwrap()).unwrap();
        prop_assert!((exact - float).abs() <= 1e-9 * float, "{} vs {}", exact, float);
    }

    #[test]
    fn tracker_rescaling_matches_float_product(
        tau in prop::collection::vec(0.2f64..3.0, 2),
        xi in prop::collection::vec(-0.5f64..0.5, 2),
        w in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let log_w = vec![w[0], w[1], -w[0] - w[1]];
        let exact = slice_tracker(&tau, &xi).unwrap().rescaled(&log_w).unwrap().lambda1().unwrap();
        let g: Vec<Vec<f64>> = (0..3).map(|r| (0..3).map(|c| if r == c { log_w[r].exp() } else { 0.0 }).collect()).collect();
        let float = lambda1(&slice_lattice(&tau, &xi).unwrap().transformed(&g).unwrap()).unwrap();
        prop_assert!((exact - float).abs() <= 1e-9 * float, "{} vs {}", exact, float);
    }

    #[test]
    fn rd_exact_and_heuristic_agree(
        root in prop::sample::select(vec![2u64, 3, 5, 7]),
        r in prop::collection::vec((-5i64..=5, 1i64..=5), 2),
        s in prop::collection::vec((1i64..=5, 1i64..=5), 2),
        split in any::<bool>(),
    ) {
        let second_root = if split { if root == 2 { 3 } else { 2 } } else { root };
        let texts = [
            format!("wrap({}/{}+{}*sqrt{}/{})", r[0].0, r[0].1, s[0].0, root, s[0].1),
            format!("wrap({}/{}+{}*sqrt{}/{})", r[1].0, r[1].1, s[1].0, second_root, s[1].1),
        ];
        let xi: Vec<Value> = texts.iter().map(|t| parse_value(t).unwrap()).collect();
        let spec = TargetSpec { xi: xi.clone(), theta: None };
        let exact = r_d_membership(&spec);
        prop_assert_eq!(&exact, &RdMembership::Exact(!split));
        let floats: Vec<f64> = xi.iter().map(Value::to_f64).collect();
        prop_assert_eq!(relation_heuristic(&floats).0, !split);
        let heuristic = r_d_membership(&TargetSpec { xi: floats.into_iter().map(Value::Float).collect(), theta: None });
        prop_assert_eq!(heuristic.member(), !split);
    }

    #[test]
    fn escape_at_zero_follows_closed_form(t in 0.3f64..2.0, eps in 0.01f64..0.6, n in 1usize..12) {
        let bound = -eps.ln();
        // Orbit point a_τℤ³ has λ₁ = e^{−Στ}, so it stays in K_ε iff Στ ≤ −log ε.
        let near_tie = (1..=2 * n).any(|k| (k as f64 * t - bound).abs() < 1e-9);
        prop_assume!(!near_tie);
        let base = OrbitBase::from_xi(vec![Value::Float(0.0); 2]);
        let params = HeightParams::default();
        let consts = CalibratedConstants::uncalibrated(&params, 3);
        let series = escape_of_mass(&base, n, t, Gate::Epsilon(eps), &params, &consts).unwrap().series;
        for (m, density) in series {
            let inside = (1..=m).flat_map(|a| (1..=m).map(move |b| (a + b) as f64 * t)).filter(|s| *s <= bound).count();
            let want = 1.0 - inside as f64 / (m * m) as f64;
            prop_assert!((density - want).abs() < 1e-12, "N={} got {} want {}", m, density, want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn covering_count_shrinks_with_h_and_grows_with_delta(h in 1.0f64..2.0, dh in 0.0f64..2.0, delta in 0.2f64..0.5, dd in 0.0f64..0.4) {
        let params = HeightParams::default();
        let consts = CalibratedConstants::uncalibrated(&params, 3);
        let x = XPrimePoint::new(vec![0.5, 0.5], vec![0.0, 0.0]).unwrap();
        let count = |h: f64, delta: f64| {
            covering_counts(&x, &[2], delta, h, 0.25, &params, &consts, 1.5, COVERING_BUDGET).unwrap().rows[0].covering_count
        };
        let d2 = (delta + dd).min(0.95);
        prop_assert!(count(h + dh, delta) <= count(h, delta));
        prop_assert!(count(h, d2) >= count(h, delta));
    }
}

#[test]
fn wrap_matches_circle() {
    for v in [-2.75, -0.5, 0.0, 0.49, 0.5, 3.25] {
        let w = wrap_unit(v);
        assert!((-0.5..0.5).contains(&w));
        assert!(circle_dist(w, v) < 1e-15);
    }
}
