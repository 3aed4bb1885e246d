use elab_core::boundary::BoundaryExpr;
use elab_core::coefficient::{polar_conjugate, polar_frame, schur_gap, CoefficientField};
use elab_core::descriptor::{parse_ladder, parse_sweep};
use elab_core::exponent::{
    eps_max, eps_star, holder_exponent, step5_objective, surface_to_bulk_constant,
};
use elab_core::quadrature::gauss_legendre;
use elab_core::solutions::split_gradient;
use proptest::prelude::*;

fn tuple() -> impl Strategy<Value = (f64, f64, f64)> {
    (2u32..=12, 0.05f64..=1.0, 0.5f64..=5.0)
        .prop_map(|(n, ratio, big)| (n as f64, ratio * big, big))
}

proptest! {
    #[test]
    fn exponent_solves_its_quadratic((n, l, big) in tuple()) {
        let a = holder_exponent(n, l, big).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-15);
        let lhs = a * a + (n - 2.0) * a;
        prop_assert!((lhs - (n - 1.0) * l / big).abs() <= 1e-13 * (n - 1.0));
        let at = surface_to_bulk_constant(n, l, big).unwrap();
        prop_assert!((at - (2.0 * a + n - 2.0)).abs() <= 1e-12 * at);
    }

    #[test]
    fn exponent_grows_with_ratio((n, l, big) in tuple(), shrink in 0.1f64..0.99) {
        let a = holder_exponent(n, l, big).unwrap();
        let b = holder_exponent(n, l * shrink, big).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn objective_peaks_at_closed_form(
        (n, l, big) in tuple(),
        s in 0.01f64..=1.0,
        w in 0.0f64..=1.0,
    ) {
        let at = surface_to_bulk_constant(n, l, big).unwrap();
        let peak = step5_objective(eps_star(n, l, big).unwrap(), n * big, n, l, big).unwrap();
        prop_assert!((peak - at).abs() <= 1e-10 * at);
        let eps = s * eps_max(n, l, big).unwrap();
        let t = n * l + w * n * (big - l);
        let v = step5_objective(eps, t, n, l, big).unwrap();
        prop_assert!(v <= at * (1.0 + 1e-10));
    }

    #[test]
    fn schur_gap_is_nonnegative(
        n in 2usize..=4,
        seed in any::<u64>(),
        x in prop::collection::vec(-1.0f64..1.0, 4),
        xi in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let field = CoefficientField::random_constant(n, 1.0, 4.0, seed).unwrap();
        let x = &x[..n];
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let xi = &xi[..n - 1];
        prop_assume!(xi.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let blocks = polar_conjugate(&field, x).unwrap();
        let gap = schur_gap(&blocks, field.lambda(), xi).unwrap();
        prop_assert!(gap >= -1e-10);
        let eig = field.matrix(x).symmetric_eigenvalues();
        prop_assert!(eig.min() >= field.lambda() - 1e-12);
        prop_assert!(eig.max() <= field.big_lambda() + 1e-12);
    }

    #[test]
    fn polar_frame_is_orthogonal(x in prop::collection::vec(-1.0f64..1.0, 2..=4)) {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let q = polar_frame(&x).unwrap();
        let n = x.len();
        let defect = (q.transpose() * &q - nalgebra::DMatrix::<f64>::identity(n, n)).abs().max();
        prop_assert!(defect < 1e-12);
        for i in 0..n {
            prop_assert!((q[(i, 0)] - x[i] / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_split_preserves_length(
        x in prop::collection::vec(-1.0f64..1.0, 3),
        g in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let s = split_gradient(&g, &x).unwrap();
        let total: f64 = g.iter().map(|v| v * v).sum();
        prop_assert!((s.u_n * s.u_n + s.tangential_sq() - total).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn gauss_legendre_is_exact(m in 1usize..=40, k in 0u32..=79) {
        prop_assume!((k as usize) < 2 * m);
        let (x, w) = gauss_legendre(m);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
        let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        prop_assert!((q - exact).abs() < 1e-13);
    }

    #[test]
    fn boundary_display_round_trips(dim in 2usize..=3, degree in 1usize..=4, seed in any::<u64>()) {
        let expr = BoundaryExpr::random(dim, degree, seed).unwrap();
        let again = BoundaryExpr::parse(&expr.to_string(), dim).unwrap();
        for p in [[0.6, 0.8, 0.0], [0.0, 0.6, 0.8], [-0.48, 0.6, -0.64]] {
            let p = &p[..dim];
            prop_assert!((expr.value(p) - again.value(p)).abs() < 1e-9);
        }
    }

    #[test]
    fn geometric_ladder_is_increasing(a in 1e-4f64..0.5, m in 2usize..200) {
        let r = parse_ladder(&format!("{a}..1x{m}")).unwrap();
        prop_assert_eq!(r.len(), m);
        prop_assert!(r.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((r[0] - a).abs() <= 1e-15 * a && r[m - 1] == 1.0);
    }

    #[test]
    fn sweep_row_count(lo in 2u32..6, span in 0u32..6, count in 2usize..20) {
        let s = parse_sweep(&format!("n={lo}..{},ratio=0.1..1x{count}", lo + span)).unwrap();
        prop_assert_eq!(s.ns.len() * s.ratios.len(), (span as usize + 1) * count);
    }
}
