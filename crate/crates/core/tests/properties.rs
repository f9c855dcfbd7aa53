//! Randomized checks of the library's structural properties.

use std::f64::consts::PI;

use acfid::bose_hubbard::{build_fock_basis, build_hardwall_tilted, BhOperators, BhParams, FockBasis, Integrator};
use acfid::fidelity::{
    ac_density, detect_events, fidelity_change, overlap, probe_column, sweep, uniform_edges, validate_delta,
    DetectConfig, SweepConfig,
};
use acfid::hamiltonian::{
    analytic_two_level, build_goe_interp, build_linear_pair, build_triple, build_two_level,
    ParametricHamiltonianSpec,
};
use acfid::matrix::{HermitianMatrix, UnitaryMatrix};
use acfid::rmt::{run_ensemble, sample_goe, EnsembleConfig, GoeSampleConfig};
use acfid::spectral::{eig_hermitian, eigenphases, wrap_phase};
use acfid::stats::{mixture_cdf, normalize_unit_mean, unfold_values, wigner_chi2, SpacingSample};
use acfid::spectral::SpectrumKind;
use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_hermitian(dim: usize, seed: u64, complex: bool) -> HermitianMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut re = vec![0.0; dim * dim];
    let mut im = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let x: f64 = rng.gen_range(-1.0..1.0);
            re[i * dim + j] = x;
            re[j * dim + i] = x;
            if complex && i != j {
                let y: f64 = rng.gen_range(-1.0..1.0);
                im[i * dim + j] = y;
                im[j * dim + i] = -y;
            }
        }
    }
    if complex {
        HermitianMatrix::from_complex_rows(dim, &re, &im).unwrap()
    } else {
        HermitianMatrix::from_real_rows(dim, &re).unwrap()
    }
}

fn family(choice: u8, dim: usize, seed: u64) -> ParametricHamiltonianSpec {
    match choice % 5 {
        0 => build_two_level(0.1 + (seed % 50) as f64 / 10.0).unwrap(),
        1 => build_triple((seed % 7) as f64 - 3.0, 2.0, 3.0).unwrap(),
        2 => build_goe_interp(
            sample_goe(&GoeSampleConfig::new(dim, seed)).unwrap(),
            sample_goe(&GoeSampleConfig::new(dim, seed + 1)).unwrap(),
        )
        .unwrap(),
        3 => build_linear_pair(random_hermitian(dim, seed, true), random_hermitian(dim, seed ^ 0x55, true)).unwrap(),
        _ => build_hardwall_tilted(0.038, 0.032, 3, 3).unwrap(),
    }
}

/// Hardwall families are parametrized by 1/F > 0.
fn point(choice: u8, x: f64) -> f64 {
    if choice % 5 == 4 {
        1.0 + x.abs()
    } else {
        x
    }
}

fn dense(m: &HermitianMatrix) -> Mat<C64> {
    m.to_complex()
}

fn max_abs(m: &Mat<C64>) -> f64 {
    let mut x = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            x = x.max(m[(i, j)].norm());
        }
    }
    x
}

/// exp(-i H) by a truncated Taylor series; fine for ||H|| < 1.
fn expm_minus_i(h: &HermitianMatrix) -> Mat<C64> {
    let d = h.dim();
    let h = dense(h);
    let mut term = Mat::<C64>::identity(d, d);
    let mut sum = term.clone();
    for k in 1..40 {
        let next = &term * &h;
        let c = C64::new(0.0, -1.0 / k as f64);
        term = Mat::from_fn(d, d, |i, j| c * next[(i, j)]);
        sum += &term;
    }
    sum
}

fn sorted_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    acfid::bose_hubbard::floquet::phase_discrepancy(&a, &b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn families_are_hermitian(choice in 0u8..5, dim in 2usize..9, seed in 0u64..10_000, x in -10.0f64..10.0) {
        let spec = family(choice, dim, seed);
        let x = point(choice, x);
        prop_assert!(spec.evaluate_hermitian(x).unwrap().hermiticity_defect() < 1e-12);
        prop_assert!(spec.derivative_matrix(x).unwrap().hermiticity_defect() < 1e-12);
    }

    #[test]
    fn derivative_matches_central_difference(choice in 0u8..5, dim in 2usize..9, seed in 0u64..10_000, x in -5.0f64..5.0) {
        let spec = family(choice, dim, seed);
        let x = point(choice, x);
        let h = 1e-5;
        let fd = HermitianMatrix::combine(
            0.5 / h, &spec.evaluate_hermitian(x + h).unwrap(),
            -0.5 / h, &spec.evaluate_hermitian(x - h).unwrap(),
        );
        let dh = spec.derivative_matrix(x).unwrap();
        prop_assert!(dh.max_abs_diff(&fd) < 1e-8 * (1.0 + dh.max_norm()), "{}", dh.max_abs_diff(&fd));
    }

    #[test]
    fn two_level_is_a_linear_pair(g in 1e-3f64..10.0, x in -20.0f64..20.0) {
        let sx = HermitianMatrix::from_real_rows(2, &[0.0, g, g, 0.0]).unwrap();
        let sz = HermitianMatrix::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let lp = build_linear_pair(sx, sz).unwrap();
        let tl = build_two_level(g).unwrap();
        prop_assert_eq!(lp.evaluate_hermitian(x).unwrap(), tl.evaluate_hermitian(x).unwrap());
    }

    // 1 - f ~ (dl/g)^2 / (8 (1 + (x/g)^2)^2) must stay above the precision
    // floor, which bounds g from above at dl = 1e-5.
    #[test]
    fn numeric_s_matches_two_level_formula(g in 0.05f64..1.25, u in -5.0f64..5.0) {
        let spec = build_two_level(g).unwrap();
        let x = u * g;
        let want = analytic_two_level(g, x).unwrap().s;
        let col = probe_column(&spec, x, 1e-5).unwrap();
        for n in 0..2 {
            prop_assert!((col.s[n] - want).abs() / want < 1e-6, "{} vs {}", col.s[n], want);
        }
    }

    #[test]
    fn trace_and_frobenius_sums(dim in 1usize..13, seed in 0u64..10_000, complex in any::<bool>()) {
        let m = random_hermitian(dim, seed, complex);
        let s = eig_hermitian(&m, 0.0).unwrap();
        let trace: f64 = (0..dim).map(|i| m.get(i, i).re).sum();
        let frob: f64 = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| m.get(i, j).norm_sqr()).sum();
        let tol = 1e-9 * dim as f64;
        prop_assert!((s.values.iter().sum::<f64>() - trace).abs() <= tol * trace.abs().max(1.0));
        prop_assert!((s.values.iter().map(|v| v * v).sum::<f64>() - frob).abs() <= tol * frob.max(1.0));
    }

    #[test]
    fn eigendecomposition_reconstructs(dim in 1usize..13, seed in 0u64..10_000, complex in any::<bool>()) {
        let m = random_hermitian(dim, seed, complex);
        let s = eig_hermitian(&m, 0.0).unwrap();
        let lam = Mat::<C64>::from_fn(dim, dim, |i, j| if i == j { C64::new(s.values[i], 0.0) } else { C64::new(0.0, 0.0) });
        let back = &s.vectors * &lam * s.vectors.adjoint();
        prop_assert!(max_abs(&(back - dense(&m))) < 1e-9 * (1.0 + m.max_norm()));
    }

    #[test]
    fn eigenphases_of_exponential(dim in 2usize..9, seed in 0u64..10_000) {
        let h = random_hermitian(dim, seed, true);
        let h = h.scaled(0.9 / (dim as f64 * h.max_norm()));
        let u = UnitaryMatrix(expm_minus_i(&h));
        let phases = eigenphases(&u, 0.0).unwrap().values;
        let want: Vec<f64> = eig_hermitian(&h, 0.0).unwrap().values.iter().map(|e| wrap_phase(-e)).collect();
        prop_assert!(sorted_distance(phases, want) < 1e-8);
    }

    #[test]
    fn phase_convention_is_deterministic(dim in 1usize..13, seed in 0u64..10_000) {
        let m = random_hermitian(dim, seed, true);
        let a = eig_hermitian(&m, 0.0).unwrap();
        let b = eig_hermitian(&m, 0.0).unwrap();
        prop_assert_eq!(a.values, b.values);
        prop_assert!(a.vectors == b.vectors);
    }

    #[test]
    fn fidelity_is_symmetric(choice in 0u8..4, dim in 2usize..9, seed in 0u64..10_000, x in -3.0f64..3.0, dl in 1e-6f64..0.1) {
        let spec = family(choice, dim, seed);
        let a = spec.snapshot(x).unwrap();
        let b = spec.snapshot(x + dl).unwrap();
        for n in 0..a.dim() {
            prop_assert_eq!(overlap(&a.vector(n), &b.vector(n)).0, overlap(&b.vector(n), &a.vector(n)).0);
        }
    }

    #[test]
    fn overlaps_are_complete(choice in 0u8..4, dim in 2usize..9, seed in 0u64..10_000, x in -3.0f64..3.0, dl in 1e-6f64..0.1) {
        let spec = family(choice, dim, seed);
        let a = spec.snapshot(x).unwrap();
        let b = spec.snapshot(x + dl).unwrap();
        for n in 0..a.dim() {
            let bn = b.vector(n);
            let total: f64 = (0..a.dim()).map(|m| {
                let am = a.vector(m);
                am.iter().zip(&bn).map(|(p, q)| p.conj() * q).sum::<C64>().norm_sqr()
            }).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn halving_delta_is_consistent(g in 0.05f64..2.0, u in -3.0f64..3.0, r in 1e-5f64..1e-3) {
        let spec = build_two_level(g).unwrap();
        let dl = r * g;
        let check = validate_delta(&spec, u * g, dl, 0).unwrap();
        prop_assert!(check.ok, "{:?}", check);
        let s1 = fidelity_change(&spec, u * g, dl, 0).unwrap().s;
        let s2 = fidelity_change(&spec, u * g, dl / 2.0, 0).unwrap().s;
        prop_assert!((s1 - s2).abs() / s1 < 0.01);
    }

    #[test]
    fn curvature_is_four_times_s_at_two_level_peak(g in 0.05f64..5.0) {
        let spec = build_two_level(g).unwrap();
        let mut cfg = SweepConfig::new(-10.0 * g, 10.0 * g, 2001);
        cfg.curvature = true;
        let sw = sweep(&spec, &cfg).unwrap();
        let c = sw.curvature.as_ref().unwrap();
        for row in 0..2 {
            let ratio = c[row][1000] / sw.s[row][1000];
            prop_assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn mixture_cdf_shape(gamma in 0.01f64..=1.0, a in 0.0f64..6.0, b in 0.0f64..6.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(mixture_cdf(lo, gamma).unwrap() <= mixture_cdf(hi, gamma).unwrap());
        prop_assert_eq!(mixture_cdf(0.0, gamma).unwrap(), 1.0 - gamma);
        prop_assert!((1.0 - mixture_cdf(60.0 / gamma, gamma).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn unfolded_spacings_have_unit_mean(seed in 0u64..10_000, dim in 20usize..200, circular in any::<bool>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let values: Vec<f64> = if circular {
            (0..dim).map(|_| rng.gen_range(-PI..PI)).collect()
        } else {
            (0..dim).map(|_| rng.gen_range(-30.0..30.0)).collect()
        };
        let kind = if circular { SpectrumKind::Circular } else { SpectrumKind::Linear };
        let s = unfold_values(&values, kind).unwrap();
        prop_assert!(s.spacings.iter().all(|&x| x >= 0.0));
        prop_assert!((s.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_ignores_order_and_unit_rescaling(seed in 0u64..10_000, extra in 0usize..100, bins in 1usize..30) {
        let n = 10 * bins + extra;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..n).map(|_| acfid::stats::sample_wigner(&mut rng)).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let sample = SpacingSample { spacings: raw.iter().map(|x| x / mean).collect() };
        let base = wigner_chi2(&sample, bins).unwrap();
        let mut shuffled = sample.clone();
        shuffled.spacings.shuffle(&mut rng);
        prop_assert_eq!(&wigner_chi2(&shuffled, bins).unwrap(), &base);
        let pooled = SpacingSample::pooled(&[sample.clone()]).unwrap();
        let again = wigner_chi2(&pooled, bins).unwrap();
        prop_assert!((again.chi2 - base.chi2).abs() <= 1e-9 * base.chi2.max(1.0));
        prop_assert_eq!(again.observed, base.observed);
    }

    #[test]
    fn density_conserves_counts(seed in 0u64..10_000, n in 0usize..300, bins in 1usize..40, dim in 1usize..50) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let events: Vec<_> = (0..n).map(|i| acfid::fidelity::ACEvent {
            level_pair: (0, 1),
            lambda_star: rng.gen_range(0.0..10.0),
            s_max: 1.0,
            c_est: 0.5,
            gap: 0.5,
            grid_index: i,
            refinement_depth: 0,
            paired: true,
        }).collect();
        let edges = uniform_edges(0.0, 10.0, bins).unwrap();
        let h = ac_density(&events, &edges, dim).unwrap();
        prop_assert_eq!(h.total() + h.overflow, n);
        for (b, &c) in h.counts.iter().enumerate() {
            let w = edges[b + 1] - edges[b];
            prop_assert_eq!((h.density[b] * w * dim as f64).round() as usize, c);
        }
        let coarse = ac_density(&events, &uniform_edges(0.0, 10.0, 1).unwrap(), dim).unwrap();
        prop_assert_eq!(coarse.total(), h.total());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hamiltonian_commutes_with_translation(t in 0.0f64..500.0, f in 0.02f64..1.0, l in 2usize..5) {
        let basis = build_fock_basis(3, l).unwrap();
        let ops = BhOperators::full(&basis);
        let p = BhParams::new(0.038, 0.032, f).unwrap();
        let h = ops.hamiltonian(&p, t);
        let d = basis.len();
        let mut tr = Mat::<C64>::zeros(d, d);
        for (i, s) in basis.states.iter().enumerate() {
            tr[(basis.index_of(&FockBasis::translate(s)).unwrap(), i)] = C64::new(1.0, 0.0);
        }
        let comm = &h * &tr - &tr * &h;
        prop_assert!(max_abs(&comm) < 1e-12);
    }

    #[test]
    fn floquet_spectrum_ignores_time_origin(shift in 0.0f64..1.0, inv_f in 5.0f64..40.0) {
        let basis = build_fock_basis(3, 3).unwrap();
        let ops = BhOperators::full(&basis);
        let p = BhParams::new(0.038, 0.032, 1.0 / inv_f).unwrap();
        let tb = p.bloch_period();
        let steps = 512;
        let u0 = ops.propagate(&p, 0.0, tb, steps, Integrator::Magnus4).unwrap();
        let us = ops.propagate(&p, shift * tb, tb, steps, Integrator::Magnus4).unwrap();
        let a = acfid::spectral::eigenphase_values(&u0, 0.0).unwrap();
        let b = acfid::spectral::eigenphase_values(&us, 0.0).unwrap();
        prop_assert!(sorted_distance(a, b) < 1e-9);
    }

    #[test]
    fn floquet_operator_conserves_norm(seed in 0u64..10_000, inv_f in 5.0f64..40.0) {
        let basis = build_fock_basis(3, 3).unwrap();
        let ops = BhOperators::full(&basis);
        let p = BhParams::new(0.038, 0.032, 1.0 / inv_f).unwrap();
        let u = acfid::bose_hubbard::floquet_operator(&p, &ops, 64, Integrator::Magnus4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..basis.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = |x: &[C64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm(&u.apply(&v)) - norm(&v)).abs() < 1e-10);
    }
}

#[test]
fn two_level_pipeline_recovers_width() {
    for g in [0.05, 0.2, 1.0, 5.0] {
        let spec = build_two_level(g).unwrap();
        let sw = sweep(&spec, &SweepConfig::new(-10.0 * g, 10.0 * g, 2001)).unwrap();
        let det = detect_events(&spec, &sw, &DetectConfig::default()).unwrap();
        assert_eq!(det.events.len(), 1, "g = {g}");
        let ev = &det.events[0];
        let ratio = ev.c_est / (2.0 * g);
        assert!((0.99..=1.01).contains(&ratio), "g = {g}: {ratio}");
        assert!((ev.gap - ev.c_est).abs() / ev.gap < 0.5);
    }
}

#[test]
fn triple_model_eigenvalues_at_origin() {
    let v = build_triple(0.0, 2.0, 3.0).unwrap().values(0.0).unwrap();
    let r = 13f64.sqrt();
    for (x, want) in v.iter().zip([-r, 0.0, r]) {
        assert!((x - want).abs() < 1e-10);
    }
}

fn small_ensemble(scale: f64) -> EnsembleConfig {
    let mut cfg = EnsembleConfig::new(12, 2, 7);
    cfg.variance_scale = scale;
    cfg
}

#[test]
fn normalized_widths_ignore_variance_scale() {
    let base = run_ensemble(&small_ensemble(1.0)).unwrap();
    let (norm, _) = normalize_unit_mean(&base.widths).unwrap();
    for s in [0.25, 3.0] {
        let other = run_ensemble(&small_ensemble(s)).unwrap();
        let (o, _) = normalize_unit_mean(&other.widths).unwrap();
        assert_eq!(o.len(), norm.len());
        for (a, b) in norm.iter().zip(&o) {
            assert!((a - b).abs() < 1e-6, "scale {s}: {a} vs {b}");
        }
    }
}

#[test]
fn ensemble_ignores_worker_count() {
    let cfg = small_ensemble(1.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&cfg).unwrap().to_json())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
    let widths = acfid::rmt::WidthEnsemble::from_json(&one).unwrap().widths;
    let (norm, _) = normalize_unit_mean(&widths).unwrap();
    assert!((norm.iter().sum::<f64>() / norm.len() as f64 - 1.0).abs() < 1e-12);
}
