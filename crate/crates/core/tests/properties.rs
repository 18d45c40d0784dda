use multiport_ttf_core::montecarlo::{
    block_rng, reduce_in_order, run_sequential, sample_simplex_uniform, simplex_moment, BlockTask,
    RunningStats, SimplexSampler,
};
use multiport_ttf_core::povm::{amplitudes_binomial, amplitudes_finite, DeviceConfig, Ports};
use multiport_ttf_core::tomography::{crb, frame_operator, gram, PhotonDistribution, TomographyKit};
use multiport_ttf_core::ttf::{ttf_closed_form, ttf_monte_carlo, TtfMonteCarlo};
use multiport_ttf_core::{AmplitudeMatrix, Matrix, Vector};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn device(ports: Ports, d: usize, eps: f64) -> AmplitudeMatrix {
    AmplitudeMatrix::for_device(&DeviceConfig::new(ports, d, eps).unwrap()).unwrap()
}

fn ic_ports(d: usize) -> impl Strategy<Value = Ports> {
    prop_oneof![
        Just(Ports::Infinite),
        ((d as u64 - 1)..=40).prop_map(Ports::Finite),
    ]
}

prop_compose! {
    fn interior_rho(d: usize)(w in prop::collection::vec(0.05f64..1.0, d)) -> PhotonDistribution {
        let total: f64 = w.iter().sum();
        let mut v = Vector::from_vec(w) / total;
        // force the sum to one to within rounding
        let head: f64 = v.rows(0, d - 1).sum();
        v[d - 1] = 1.0 - head;
        PhotonDistribution::new(v).unwrap()
    }
}

fn device_and_rho(max_d: usize) -> impl Strategy<Value = (AmplitudeMatrix, PhotonDistribution)> {
    (2..=max_d)
        .prop_flat_map(|d| (Just(d), ic_ports(d), 0.0f64..0.6, interior_rho(d)))
        .prop_map(|(d, ports, eps, rho)| (device(ports, d, eps), rho))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn column_normalization(d in 2usize..=15, s in 1u64..=100, eps in 0.0f64..0.95) {
        for b in [device(Ports::Finite(s), d, eps), amplitudes_binomial(d, eps).unwrap()] {
            for n in 0..d {
                prop_assert!((b.entries().column(n).sum() - 1.0).abs() < 1e-12);
                prop_assert!((b.get(0, n) - eps.powi(n as i32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn crb_routes_agree((b, rho) in device_and_rho(10)) {
        let kit = TomographyKit::new(&b).unwrap();
        let fisher_route = crb(&b, &rho).unwrap();
        let dual_route = kit.crb_dual(&rho).unwrap();
        prop_assert!((fisher_route - dual_route).abs() <= 1e-9 * fisher_route,
            "{} vs {}", fisher_route, dual_route);
    }

    #[test]
    fn duals_are_biorthogonal(d in 2usize..=12, extra in 0u64..30, eps in 0.0f64..0.8, inf in any::<bool>()) {
        let ports = if inf { Ports::Infinite } else { Ports::Finite(d as u64 - 1 + extra) };
        let b = device(ports, d, eps);
        // heavy loss pushes the frame below the singularity threshold
        prop_assume!(!frame_operator(&b.povm()).is_singular());
        let kit = TomographyKit::new(&b).unwrap();
        // rounding floors scale with the size of the duals and of F^{-1}
        let dual_scale = kit.duals().amax().max(1.0);
        prop_assert!(kit.biorthogonality_residual() < 1e-10 * dual_scale);
        let finv_scale = kit.frame_inverse().unwrap().amax().max(1.0);
        let sandwich = kit.frame_sandwich().unwrap();
        let target = Matrix::from_diagonal(kit.traces());
        prop_assert!((sandwich - target).amax() < 1e-9 * finv_scale);
        let last = kit.frame_inverse_trace().unwrap() - kit.frame_inverse_trace_support().unwrap();
        prop_assert!((last - 1.0 / kit.traces()[d - 1]).abs() < 1e-9 * finv_scale);
    }

    #[test]
    fn estimator_is_exact_at_the_mean((b, rho) in device_and_rho(8)) {
        let kit = TomographyKit::new(&b).unwrap();
        let est = kit.estimate(&kit.probabilities(&rho));
        prop_assert!((est - rho.probs()).amax() < 1e-9);
    }
}

#[test]
fn gram_and_frame_lose_rank_together() {
    for d in 3..=9usize {
        for s in 1..=(d as u64 - 2) {
            let povm = device(Ports::Finite(s), d, 0.0).povm();
            let frame = frame_operator(&povm);
            let g = gram(&povm).symmetric_eigenvalues().min();
            assert!(frame.is_singular() && g < 1e-12, "s={s} d={d}");
        }
        let povm = device(Ports::Finite(d as u64 - 1), d, 0.0).povm();
        assert!(!frame_operator(&povm).is_singular());
        assert!(gram(&povm).symmetric_eigenvalues().min() > 1e-12);
    }
}

#[test]
fn simplex_moments_match_dirichlet_samples() {
    for d in 1..=8usize {
        let mut rng = block_rng(2024, d as u64);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| sample_simplex_uniform(d, &mut rng).probs()[0])
            .collect();
        for m in 0..=4u32 {
            let stats: RunningStats = samples.iter().map(|p| p.powi(m as i32)).collect();
            let exact = simplex_moment(d, m).unwrap().to_f64().unwrap();
            let tol = 3.0 * stats.std_error() + 1e-15;
            assert!((stats.mean() - exact).abs() <= tol, "d={d} m={m}: {} vs {exact}", stats.mean());
        }
    }
}

#[test]
fn haar_and_dirichlet_routes_agree() {
    let b = amplitudes_finite(&DeviceConfig::finite(4, 4, 0.2).unwrap()).unwrap();
    let uniform = TtfMonteCarlo::new(&b, 50_000, 1).unwrap();
    let haar = TtfMonteCarlo::new(&b, 50_000, 2).unwrap().with_sampler(SimplexSampler::Haar);
    let u = uniform.finish(run_sequential(&uniform)).unwrap();
    let h = haar.finish(run_sequential(&haar)).unwrap();
    let se = (u.standard_error().unwrap().powi(2) + h.standard_error().unwrap().powi(2)).sqrt();
    assert!((u.value - h.value).abs() < 3.0 * se);
}

#[test]
fn block_schedule_does_not_change_result() {
    let b = amplitudes_binomial(4, 0.3).unwrap();
    let task = TtfMonteCarlo::new(&b, 30_000, 77).unwrap().with_block_size(1000);
    let mut shuffled: Vec<(u64, _)> = (0..task.plan().n_blocks())
        .rev()
        .map(|k| (k, task.run_block(k)))
        .collect();
    shuffled.sort_by_key(|(k, _)| *k);
    let reordered = reduce_in_order(shuffled.into_iter().map(|(_, o)| o));
    let sequential = reduce_in_order(run_sequential(&task));
    assert_eq!(reordered, sequential);
}

#[test]
fn monte_carlo_is_calibrated() {
    let cfg = DeviceConfig::finite(3, 3, 0.2).unwrap();
    let closed = ttf_closed_form(&cfg).unwrap().value;
    let b = AmplitudeMatrix::for_device(&cfg).unwrap();
    let hits = (0..100u64)
        .filter(|&seed| {
            let r = ttf_monte_carlo(&b, 5_000, seed).unwrap();
            (r.value - closed).abs() < 3.0 * r.standard_error().unwrap()
        })
        .count();
    // P[Bin(100, 0.9973) < 99] is about 3%, so allow 97 as well
    assert!(hits >= 97, "{hits}/100 runs within 3 SE");
}
