use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mot_core::generate::{plant_swap, random_forbidden, random_separated, SeparatedInstance};
use mot_core::lp::{solve_lp, LpStatus, Sense};
use mot_core::measures::{common_mass_split, convex_order_check, moments, quantize, DiscreteMeasure, GridDensity};
use mot_core::mot1d::{solve_sweep, symmetric_solve, SeparationInterval};
use mot_core::radial::{induce_1d, r_equivalent_with_tol, OrthogonalMatrix, RadialProfile};
use mot_core::verify::{
    check_decreasing, deformation_curve, detect_forbidden, swap_gain, validate_coupling, DeformationInstance,
    FORBIDDEN_TOL,
};

fn instance(seed: u64, max_atoms: usize) -> SeparatedInstance {
    random_separated(&mut ChaCha8Rng::seed_from_u64(seed), max_atoms).unwrap()
}

fn atoms_1d(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, 0.01..1.0f64), 1..max)
}

/// Splits every atom into the two points `y ± d` with equal mass.
fn spread(m: &DiscreteMeasure, d: f64) -> DiscreteMeasure {
    let atoms: Vec<(f64, f64)> = m
        .atoms_1d()
        .flat_map(|(y, w)| [(y - d, 0.5 * w), (y + d, 0.5 * w)])
        .collect();
    DiscreteMeasure::from_1d(&atoms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_is_reflexive(atoms in atoms_1d(20)) {
        let mu = DiscreteMeasure::from_1d(&atoms).unwrap();
        prop_assert!(convex_order_check(&mu, &mu, 0.0).unwrap().in_order);
    }

    #[test]
    fn order_is_transitive(seed in any::<u64>(), d in 0.05..1.0f64) {
        let inst = instance(seed, 10);
        let rho = spread(&inst.nu, d);
        prop_assert!(convex_order_check(&inst.mu, &inst.nu, 1e-9).unwrap().in_order);
        prop_assert!(convex_order_check(&inst.nu, &rho, 1e-9).unwrap().in_order);
        prop_assert!(convex_order_check(&inst.mu, &rho, 1e-9).unwrap().in_order);
    }

    #[test]
    fn quantize_keeps_mass_and_mean(values in prop::collection::vec(0.0..2.0f64, 2..60), lo in -3.0..0.0f64, width in 0.1..4.0f64) {
        prop_assume!(values.iter().any(|v| *v > 0.0));
        let g = GridDensity::new(lo, lo + width, values.clone()).unwrap();
        let q = quantize(&g, false).unwrap();
        let h = width / values.len() as f64;
        let exact_moment: f64 = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (a, b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
                v * (b * b - a * a) / 2.0
            })
            .sum();
        let (mass, mean) = moments(&q);
        prop_assert!((mass - g.total_mass()).abs() <= 1e-12 * mass.max(1.0));
        prop_assert!((mean[0] * mass - exact_moment).abs() <= 1e-12 * mass.max(1.0));
    }

    #[test]
    fn common_mass_leaves_disjoint_residuals(a in atoms_1d(10), b in atoms_1d(10), shared in prop::collection::vec(-3i32..3, 0..5)) {
        let extra: Vec<(f64, f64)> = shared.iter().map(|k| (*k as f64, 0.3)).collect();
        let mu = DiscreteMeasure::from_1d(&[a, extra.clone()].concat()).unwrap();
        let nu = DiscreteMeasure::from_1d(&[b, extra].concat()).unwrap();
        let split = common_mass_split(&mu, &nu).unwrap();
        for (x, _) in split.mu_bar.atoms() {
            prop_assert_eq!(split.nu_bar.mass_at(x), 0.0);
        }
        let total = split.common.total_mass() + split.mu_bar.total_mass();
        prop_assert!((total - mu.total_mass()).abs() <= 1e-12);
    }

    #[test]
    fn sweep_output_is_a_clean_optimal_plan(seed in any::<u64>()) {
        let inst = instance(seed, 15);
        let sol = solve_sweep(&inst.mu, &inst.nu, inst.interval, 1e-9).unwrap();
        let res = validate_coupling(&sol.coupling, &inst.mu, &inst.nu, 1e-9).unwrap();
        prop_assert!(res.is_clean(), "{:?}", res);
        prop_assert!(check_decreasing(&sol.maps));
        prop_assert!(detect_forbidden(&sol.coupling, FORBIDDEN_TOL).unwrap().is_empty());
    }

    #[test]
    fn sweep_rows_take_contiguous_runs(seed in any::<u64>()) {
        let inst = instance(seed, 15);
        let sol = solve_sweep(&inst.mu, &inst.nu, inst.interval, 1e-9).unwrap();
        let lower: Vec<f64> = inst.nu.atoms_1d().map(|(y, _)| y).filter(|y| *y < inst.interval.a + 1e-12).collect();
        let upper: Vec<f64> = inst.nu.atoms_1d().map(|(y, _)| y).filter(|y| *y > inst.interval.b - 1e-12).collect();
        for row in sol.coupling.rows() {
            for side in [&lower, &upper] {
                let idx: Vec<usize> = row
                    .targets
                    .iter()
                    .filter_map(|(y, _)| side.iter().position(|s| *s == y[0]))
                    .collect();
                prop_assert!(idx.windows(2).all(|w| w[1] == w[0] + 1), "{:?}", idx);
            }
        }
    }

    #[test]
    fn feasible_plans_cost_at_least_the_optimum(seed in any::<u64>(), p in 0.1..=1.0f64) {
        let inst = instance(seed, 10);
        let sol = solve_sweep(&inst.mu, &inst.nu, inst.interval, 1e-9).unwrap();
        let best = sol.coupling.cost(p);
        let max = solve_lp(&inst.mu, &inst.nu, p, Sense::Max).unwrap();
        prop_assert_eq!(max.status, LpStatus::Optimal);
        prop_assert!(max.objective >= best - 1e-9);
        if let Some(planted) = plant_swap(&sol.coupling) {
            prop_assert!(planted.cost(p) > best);
        }
    }

    #[test]
    fn sweep_is_deterministic(seed in any::<u64>()) {
        let inst = instance(seed, 15);
        let a = solve_sweep(&inst.mu, &inst.nu, inst.interval, 1e-9).unwrap();
        let b = solve_sweep(&inst.mu, &inst.nu, inst.interval, 1e-9).unwrap();
        prop_assert_eq!(a.coupling, b.coupling);
        prop_assert_eq!(a.maps, b.maps);
    }

    #[test]
    fn symmetric_marginals_give_symmetric_plans(xs in prop::collection::vec((0.0..0.9f64, 0.05..1.0f64), 1..6), ys in prop::collection::vec((1.0..3.0f64, 0.05..1.0f64), 1..6)) {
        let mirror = |v: &[(f64, f64)]| -> Vec<(f64, f64)> { v.iter().flat_map(|&(x, m)| [(-x, m), (x, m)]).collect() };
        let mu = DiscreteMeasure::from_1d(&mirror(&xs)).unwrap();
        let mass = mu.total_mass();
        let nu_raw = DiscreteMeasure::from_1d(&mirror(&ys)).unwrap();
        let nu = nu_raw.scaled(mass / nu_raw.total_mass()).unwrap();
        let sol = symmetric_solve(&mu, &nu, SeparationInterval::new(-1.0, 1.0).unwrap()).unwrap();
        prop_assert!(sol.coupling.entrywise_distance(&sol.coupling.reflected()) <= 1e-10);
    }

    #[test]
    fn swap_gains_are_positive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, ym, yp, xp, yq, p) = random_forbidden(&mut rng);
        prop_assert!(swap_gain(x, ym, yp, xp, yq, p).unwrap() > 0.0);
    }

    #[test]
    fn deformation_decreases_below_two(b in 0.2..2.0f64, sign in any::<bool>(), r in 0.5..2.0f64, u in -0.9..0.9f64, q in 0.05..1.95f64) {
        let b = if sign { b } else { -b };
        let inst = DeformationInstance::new(b, r, r * u, q).unwrap();
        let c = deformation_curve(&inst, 101).unwrap();
        prop_assert!(c.windows(2).all(|w| w[1].1 < w[0].1));
        let flat = DeformationInstance::new(b, r, r * u, 2.0).unwrap();
        let c = deformation_curve(&flat, 101).unwrap();
        prop_assert!(c.iter().all(|(_, v)| (v - c[0].1).abs() <= 1e-12));
    }

    #[test]
    fn induced_densities_are_even_probabilities(edges in prop::collection::vec(0.1..1.0f64, 1..5), f in prop::collection::vec(0.0..1.0f64, 5), d in 2usize..5, n in 2usize..200) {
        let mut r = vec![0.0];
        for e in &edges {
            r.push(r.last().unwrap() + e);
        }
        let values = f[..edges.len()].to_vec();
        prop_assume!(values.iter().any(|v| *v > 0.0));
        let profile = RadialProfile::density(d, r, values).unwrap();
        let g = induce_1d(&profile, n).unwrap();
        let v = g.values();
        prop_assert!((0..n).all(|i| v[i] == v[n - 1 - i]));
        prop_assert!((g.total_mass() - profile.total_mass()).abs() <= 1e-12 * profile.total_mass().max(1.0));
    }

    #[test]
    fn r_equivalence_is_an_equivalence(pts in prop::collection::vec((0.1..2.0f64, 0.0..6.3f64, 0.1..1.0f64), 1..6), a1 in 0.0..6.3f64, a2 in 0.0..6.3f64) {
        let atoms: Vec<(Vec<f64>, f64)> = pts.iter().map(|&(r, t, m)| (vec![r * t.cos(), r * t.sin()], m)).collect();
        let phi = DiscreteMeasure::from_points(2, &atoms).unwrap();
        let rot = |m: &DiscreteMeasure, a: f64| m.map_points(|p| OrthogonalMatrix::rotation_2d(a).apply(p)).unwrap();
        let psi = rot(&phi, a1);
        let chi = rot(&psi, a2);
        let edges = [0.0, 0.5, 1.0, 1.5, 2.5];
        prop_assert!(r_equivalent_with_tol(&phi, &phi, &edges, 0.0));
        prop_assert_eq!(r_equivalent_with_tol(&phi, &psi, &edges, 0.0), r_equivalent_with_tol(&psi, &phi, &edges, 0.0));
        if r_equivalent_with_tol(&phi, &psi, &edges, 0.0) && r_equivalent_with_tol(&psi, &chi, &edges, 0.0) {
            prop_assert!(r_equivalent_with_tol(&phi, &chi, &edges, 0.0));
        }
    }
}
