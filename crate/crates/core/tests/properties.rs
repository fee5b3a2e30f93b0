mod common;

use gm3_core::certificate::{
    assemble_q, check_triple, find_admissible_triple, kappa_bound, minor_identity_check, second_minor_closed_form,
    ExponentTriple,
};
use gm3_core::grid::{field_norm, integrate_field, laplacian, Field, Grid, NormOrder};
use gm3_core::integrator::State;
use gm3_core::model::{check_exponent_condition, reaction_rates, Branch, RawParams};
use gm3_core::monitor::{lyapunov_density, lyapunov_value, quadratic_form_min};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{direct_minors, min_eigenvalue, random_admissible, reference_q, rel_err};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (3usize..120, 0.1f64..10.0).prop_map(|(n, l)| Grid::new_1d(n, l).unwrap()),
        (3usize..24, 3usize..24, 0.1f64..10.0, 0.1f64..10.0)
            .prop_map(|(nx, ny, lx, ly)| Grid::new_2d(nx, ny, lx, ly).unwrap()),
    ]
}

fn field_on(grid: Grid, lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    proptest::collection::vec(lo..hi, grid.len()).prop_map(move |v| Field::new(grid, v).unwrap())
}

fn grid_and_field(lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    grid_strategy().prop_flat_map(move |g| field_on(g, lo, hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neumann_laplacian_conserves_mass(f in grid_and_field(-10.0, 10.0)) {
        let lap = laplacian(&f);
        let scale = lap.values().iter().map(|x| x.abs()).sum::<f64>() * f.grid().cell_volume();
        prop_assert!(integrate_field(&lap).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn laplacian_is_negative_semidefinite(f in grid_and_field(-3.0, 3.0)) {
        let lap = laplacian(&f);
        let dot: f64 = lap.values().iter().zip(f.values()).map(|(a, b)| a * b).sum();
        let scale: f64 = lap.values().iter().zip(f.values()).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!(dot <= 1e-12 * scale);
    }

    #[test]
    fn averaged_norms_are_monotone(f in grid_and_field(-5.0, 5.0), p in 1.0f64..4.0, dp in 0.1f64..4.0) {
        let lo = field_norm(&f, NormOrder::L(p)).unwrap();
        let hi = field_norm(&f, NormOrder::L(p + dp)).unwrap();
        let inf = field_norm(&f, NormOrder::Inf).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(hi <= inf * (1.0 + 1e-12));
    }

    #[test]
    fn production_terms_are_homogeneous(
        u in 0.1f64..5.0, v in 0.1f64..5.0, w in 0.1f64..5.0, lambda in 0.2f64..5.0,
    ) {
        // With sigma and c zero, each fraction scales by a known power of lambda
        // when (u, v, w) are scaled together.
        let raw = RawParams {
            a: [1.0; 3], b: [1.0; 3], sigma: 0.0, c: 0.0,
            p: [2.0, 2.0, 1.0], q: [1.0, 0.0, 0.0], r: [1.0, 0.0, 0.0],
        };
        let params = raw.validate_with(gm3_core::model::Admissibility::Relaxed).unwrap();
        let base = params.fractions(u, v, w);
        let scaled = params.fractions(lambda * u, lambda * v, lambda * w);
        let degrees = [0.0, 2.0, 1.0];
        for k in 0..3 {
            prop_assert!(rel_err(scaled[k], lambda.powf(degrees[k]) * base[k]) < 1e-12, "component {k}");
        }
        // The full rates add the source and the linear decay.
        let rates = reaction_rates(u, v, w, &params).unwrap();
        prop_assert!(rel_err(rates[1], base[1] - v) < 1e-12);
    }

    #[test]
    fn found_triples_satisfy_every_condition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_admissible(&mut rng);
        let t = find_admissible_triple(&params).unwrap();
        let checks = check_triple(&t, &params).unwrap();
        prop_assert!(checks.all());
        let q = assemble_q(&t, params.a);
        prop_assert!(q.is_positive_definite());
        let oracle = reference_q(t.alpha, t.beta, t.gamma, params.a);
        prop_assert!(min_eigenvalue(&oracle) > 0.0);
        let direct = direct_minors(&oracle);
        for k in 0..3 {
            prop_assert!(rel_err(q.minors[k], direct[k]) < 1e-9);
        }
        prop_assert!(minor_identity_check(&q, &t, params.a).unwrap() < 1e-10);
        prop_assert!(rel_err(second_minor_closed_form(&t, params.a).unwrap(), q.minors[1]) < 1e-10);
    }

    #[test]
    fn kappa_is_a_root_and_monotone(
        w0 in 0.0f64..100.0, c in 0.0f64..30.0, theta in 0.05f64..0.95, extra in 0.0f64..10.0,
    ) {
        let k = kappa_bound(w0, 1.0, &[(c, theta)]).unwrap();
        prop_assert!(k >= w0);
        let g = k - c * k.powf(theta) - w0;
        prop_assert!(g >= 0.0 && g <= 1e-9 * k.max(1.0));
        let bigger = kappa_bound(w0 + extra, 1.0, &[(c, theta)]).unwrap();
        prop_assert!(bigger >= k * (1.0 - 1e-12));
        let stronger = kappa_bound(w0, 1.0, &[(c + extra, theta)]).unwrap();
        prop_assert!(stronger >= k * (1.0 - 1e-12));
    }

    #[test]
    fn lyapunov_value_scales_and_matches_cell_sum(
        f in grid_and_field(0.2, 3.0), lambda in 0.2f64..5.0,
        alpha in 1.1f64..6.0, beta in 0.05f64..1.0, gamma in 0.05f64..1.0,
    ) {
        let g = *f.grid();
        let v = f.map(|x| 1.0 / x);
        let w = Field::constant(g, 0.7);
        let t = ExponentTriple::new(alpha, beta, gamma).unwrap();
        let s = State::new(f.clone(), v.clone(), w.clone(), 0.0).unwrap();
        let l = lyapunov_value(&s, &t).unwrap();
        let brute: f64 = f.values().iter().zip(v.values())
            .map(|(&u, &v)| u.powf(alpha) / (v.powf(beta) * 0.7f64.powf(gamma)))
            .sum::<f64>() * g.cell_volume();
        prop_assert!(rel_err(l, brute) < 1e-12);
        let su = State::new(f.map(|x| lambda * x), v, w, 0.0).unwrap();
        let ls = lyapunov_value(&su, &t).unwrap();
        prop_assert!(rel_err(ls, lambda.powf(alpha) * l) < 1e-11);
        prop_assert!(lyapunov_density(1.0, 1.0, 1.0, &t) == 1.0);
    }

    #[test]
    fn qform_is_nonnegative_for_admissible_triples(seed in any::<u64>(), f in grid_and_field(0.5, 2.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_admissible(&mut rng);
        let t = find_admissible_triple(&params).unwrap();
        let q = assemble_q(&t, params.a);
        let g = *f.grid();
        let s = State::new(f.clone(), f.map(|x| 2.0 / x), Field::constant(g, 1.3), 0.0).unwrap();
        prop_assert!(quadratic_form_min(&s, &q) >= -1e-10);
    }

    #[test]
    fn exponent_condition_is_consistent(
        p1 in 1.0f64..4.0, p2 in 0.0f64..3.0, p3 in 0.0f64..3.0,
        q1 in 0.0f64..2.0, q2 in 0.0f64..2.0, q3 in 0.0f64..2.0,
        r1 in 0.0f64..2.0, r2 in 0.0f64..2.0, r3 in 0.0f64..2.0,
    ) {
        let params = RawParams {
            a: [1.0; 3], b: [1.0; 3], sigma: 0.1, c: 0.1,
            p: [p1, p2, p3], q: [q1, q2, q3], r: [r1, r2, r3],
        }.validate().unwrap();
        let rep = check_exponent_condition(&params);
        prop_assert_eq!(rep.condition_value_left, p1 - 1.0);
        match rep.selected_branch {
            Branch::ViaV => prop_assert!(rep.condition_value_left < rep.bound_v_branch),
            Branch::ViaW => prop_assert!(rep.condition_value_left < rep.bound_w_branch),
            Branch::Infeasible => prop_assert!(
                rep.condition_value_left >= rep.bound_v_branch && rep.condition_value_left >= rep.bound_w_branch
            ),
        }
        prop_assert!(rep.bound_v_branch <= p2 && rep.bound_w_branch <= p3);
    }
}

#[test]
fn indefinite_form_is_detected_by_the_monitor() {
    // A triple violating the gamma condition: the eigen oracle finds a
    // negative direction, and a state whose gradients point along it
    // must produce a negative monitor value.
    let a = [1.0, 1.0, 1.0];
    let t = ExponentTriple::new(1.2, 2.0, 2.0).unwrap();
    let q = assemble_q(&t, a);
    let oracle: Matrix3<f64> = reference_q(1.2, 2.0, 2.0, a);
    let eig = oracle.symmetric_eigen();
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
    assert!(lmin < 0.0);
    assert!(!q.is_positive_definite());
    let dir = eig.eigenvectors.column(imin);
    // Near u = v = w = 1, T = (∇u, ∇v, ∇w); linear profiles with slopes along `dir`.
    let grid = Grid::new_1d(64, 1.0).unwrap();
    let eps = 1e-3;
    let lin = |k: usize| grid.sample(|x, _| 1.0 + eps * dir[k] * (x - 0.5));
    let s = State::new(lin(0), lin(1), lin(2), 0.0).unwrap();
    assert!(quadratic_form_min(&s, &q) < 0.0);
}
