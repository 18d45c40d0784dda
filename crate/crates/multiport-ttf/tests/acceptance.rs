//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line
//! to stdout, bypassing the test harness capture.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use multiport_ttf::parallel::{self, build_pool, map_ordered};
use multiport_ttf_core::montecarlo::{block_rng, sample_simplex_uniform, simplex_moment, RunningStats};
use multiport_ttf_core::povm::{
    amplitudes_binomial, amplitudes_finite, identity_residual, inverse_binomial, inverse_general,
    inverse_lossless, DeviceConfig,
};
use multiport_ttf_core::resolvability::{critical_eps_finite, critical_eps_infinite, phase_diagram};
use multiport_ttf_core::sim::ExperimentSpec;
use multiport_ttf_core::tomography::crb;
use multiport_ttf_core::ttf::{
    ttf_closed_form, ttf_finite_lossy, ttf_fock, ttf_fock_exact, ttf_infinite_lossy, ttf_master,
    TtfMonteCarlo,
};
use multiport_ttf_core::{AmplitudeMatrix, PhotonDistribution, Ports, TomographyKit};
use num_traits::ToPrimitive;
use rand::Rng;

fn report(id: u32, title: &str, pass: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let verdict = if pass && elapsed <= budget { "PASS" } else { "FAIL" };
    let line = format!(
        "ACCEPTANCE {id:>2} {verdict} {title}: {detail} [{:.2}s of {:.0}s]\n",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(elapsed <= budget, "criterion {id} exceeded its runtime budget");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn finite(s: u64, d: usize, eps: f64) -> AmplitudeMatrix {
    amplitudes_finite(&DeviceConfig::finite(s, d, eps).unwrap()).unwrap()
}

#[test]
fn criterion_01_fock_constants() {
    let t = Instant::now();
    let mut bad = Vec::new();
    for d in 2..=20u64 {
        let r = ttf_fock_exact(d);
        // cross-multiplied so the comparison does not rely on reduction
        let exact = *r.numer() * d * (d + 1) == *r.denom() * (d - 1) * (d - 1);
        if !exact {
            bad.push(d);
        }
    }
    let half = ttf_fock_exact(2);
    let pass = bad.is_empty() && (*half.numer(), *half.denom()) == (1, 6) && ttf_fock(2) == 1.0 / 6.0;
    report(1, "Fock TTF constants", pass, &format!("d = 2..20 exact, failures {bad:?}, d=2 gives {half}"), t.elapsed(), secs(1));
}

#[test]
fn criterion_02_qubit_lossy_constant() {
    let t = Instant::now();
    let eps = 0.3;
    let want = (1.0 + 2.0 * eps) / (6.0 - 6.0 * eps);
    let mut values = vec![ttf_infinite_lossy(2, eps).unwrap()];
    values.extend([2, 4, 8].map(|s| ttf_finite_lossy(s, 2, eps).unwrap()));
    let worst = values.iter().map(|v| (v - want).abs()).fold(0.0, f64::max);
    let pass = worst < 1e-9 && (want - 0.380952).abs() < 1e-6;
    report(2, "d=2 lossy constant", pass, &format!("target {want:.9}, max deviation {worst:.1e}"), t.elapsed(), secs(1));
}

#[test]
fn criterion_03_route_agreement() {
    let t = Instant::now();
    let mut worst: (f64, String) = (0.0, String::new());
    let mut count = 0;
    for d in 2..=10usize {
        for eps in [0.0, 0.1, 0.3, 0.5] {
            let mut check = |closed: f64, master: f64, label: String| {
                let rel = (closed - master).abs() / closed;
                count += 1;
                if rel > worst.0 {
                    worst = (rel, label);
                }
            };
            let b = amplitudes_binomial(d, eps).unwrap();
            check(ttf_infinite_lossy(d, eps).unwrap(), ttf_master(&b).unwrap().value, format!("s=inf d={d} eps={eps}"));
            for s in (d as u64 - 1)..=40 {
                let cfg = DeviceConfig::finite(s, d, eps).unwrap();
                let closed = ttf_closed_form(&cfg).unwrap().value;
                let master = ttf_master(&finite(s, d, eps)).unwrap().value;
                check(closed, master, format!("s={s} d={d} eps={eps}"));
            }
        }
    }
    report(
        3,
        "master formula vs closed forms",
        worst.0 < 1e-8,
        &format!("{count} devices, worst relative gap {:.1e} at {}", worst.0, worst.1),
        t.elapsed(),
        secs(30),
    );
}

#[test]
fn criterion_04_monte_carlo_reproduction() {
    let t = Instant::now();
    let mut rng = block_rng(4, 0);
    let configs: Vec<DeviceConfig> = (0..20)
        .map(|_| {
            let d = rng.random_range(2..=6usize);
            let ports = if rng.random_bool(0.25) {
                Ports::Infinite
            } else {
                Ports::Finite(rng.random_range(d as u64 - 1..=40))
            };
            DeviceConfig::new(ports, d, rng.random_range(0.0..0.5)).unwrap()
        })
        .collect();
    let results = map_ordered(&configs, |cfg| {
        let closed = ttf_closed_form(cfg).unwrap().value;
        let b = AmplitudeMatrix::for_device(cfg).unwrap();
        let seed = 1000 + (cfg.d() as u64) * 100 + (cfg.eps() * 1e6) as u64;
        let mc = parallel::ttf_monte_carlo(&TtfMonteCarlo::new(&b, 100_000, seed).unwrap()).unwrap();
        let z = (mc.value - closed).abs() / mc.standard_error().unwrap();
        (z, format!("s={} d={} eps={:.3}", cfg.ports(), cfg.d(), cfg.eps()))
    });
    let hits = results.iter().filter(|(z, _)| *z < 3.0).count();
    let worst = results.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    report(
        4,
        "Monte Carlo vs closed form",
        hits >= 19,
        &format!("{hits}/20 within 3 SE, largest |z| = {:.2} at {}", worst.0, worst.1),
        t.elapsed(),
        secs(120),
    );
}

#[test]
fn criterion_05_fock_optimality() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut count = 0;
    for d in 2..=10usize {
        for s in (d as u64 - 1)..=40 {
            let b = finite(s, d, 0.0);
            let master = ttf_master(&b).unwrap().value;
            let kit = TomographyKit::new(&b).unwrap();
            let tr_f = kit.frame().matrix.trace();
            let tr_finv = kit.frame_inverse_trace().unwrap();
            let dd = d as f64;
            count += 1;
            if master < ttf_fock(d) - 1e-12 || tr_f > dd + 1e-12 || tr_f * tr_finv < dd * dd * (1.0 - 1e-12) {
                failures.push(format!("s={s} d={d}"));
            }
        }
    }
    report(
        5,
        "Fock optimality",
        failures.is_empty(),
        &format!("{count} lossless devices, failures {failures:?}"),
        t.elapsed(),
        secs(30),
    );
}

#[test]
fn criterion_06_crb_identity() {
    let t = Instant::now();
    let mut rng = block_rng(6, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(2..=10usize);
        let ports = if rng.random_bool(0.25) {
            Ports::Infinite
        } else {
            Ports::Finite(rng.random_range(d as u64 - 1..=40))
        };
        let eps = rng.random_range(0.0..0.7);
        let b = AmplitudeMatrix::for_device(&DeviceConfig::new(ports, d, eps).unwrap()).unwrap();
        let rho = loop {
            let r = sample_simplex_uniform(d, &mut rng);
            if r.is_interior(1e-6) {
                break r;
            }
        };
        let fisher_route = crb(&b, &rho).unwrap();
        let dual_route = TomographyKit::new(&b).unwrap().crb_dual(&rho).unwrap();
        worst = worst.max((fisher_route - dual_route).abs() / fisher_route);
    }
    report(6, "Fisher and dual CRB routes", worst < 1e-9, &format!("100 pairs, worst relative gap {worst:.1e}"), t.elapsed(), secs(10));
}

#[test]
fn criterion_07_analytic_inverses() {
    let t = Instant::now();
    let mut worst = [0.0f64; 3];
    for d in 1..=15usize {
        for eps in [0.0, 0.1, 0.3, 0.5, 0.7] {
            let b = amplitudes_binomial(d, eps).unwrap().into_entries();
            worst[0] = worst[0].max(identity_residual(&(inverse_binomial(d, eps).unwrap() * b)));
        }
    }
    for d in 2..=15usize {
        for s in (d as u64 - 1)..=60 {
            let b = finite(s, d, 0.0).into_entries();
            worst[1] = worst[1].max(identity_residual(&(inverse_lossless(s, d).unwrap() * b)));
            for eps in [0.1, 0.3, 0.5, 0.7] {
                let cfg = DeviceConfig::finite(s, d, eps).unwrap();
                let inv = inverse_general(&cfg).unwrap();
                let b = amplitudes_finite(&cfg).unwrap().into_entries();
                worst[2] = worst[2].max(identity_residual(&(&inv.matrix * b)));
            }
        }
    }
    let pass = worst.iter().all(|&r| r < 1e-10);
    report(
        7,
        "analytic inverse exactness",
        pass,
        &format!("max |A B - I|: binomial {:.1e}, lossless {:.1e}, lossy {:.1e}", worst[0], worst[1], worst[2]),
        t.elapsed(),
        secs(10),
    );
}

#[test]
fn criterion_08_simplex_moments() {
    let t = Instant::now();
    let dims: Vec<usize> = (1..=8).collect();
    let per_dim = map_ordered(&dims, |&d| {
        let mut rng = block_rng(8, d as u64);
        let samples: Vec<f64> = (0..100_000).map(|_| sample_simplex_uniform(d, &mut rng).probs()[0]).collect();
        let mut worst_z: f64 = 0.0;
        let mut ok = true;
        for m in 0..=4u32 {
            let stats: RunningStats = samples.iter().map(|p| p.powi(m as i32)).collect();
            let exact = simplex_moment(d, m).unwrap().to_f64().unwrap();
            let gap = (stats.mean() - exact).abs();
            if gap > 3.0 * stats.std_error() + 1e-15 {
                ok = false;
            }
            if stats.std_error() > 0.0 {
                worst_z = worst_z.max(gap / stats.std_error());
            }
        }
        let df = d as f64;
        let special = (simplex_moment(d, 1).unwrap().to_f64().unwrap() - 1.0 / df).abs() < 1e-15
            && (simplex_moment(d, 2).unwrap().to_f64().unwrap() - 2.0 / (df * (df + 1.0))).abs() < 1e-15;
        (ok && special, worst_z)
    });
    let pass = per_dim.iter().all(|r| r.0);
    let worst = per_dim.iter().map(|r| r.1).fold(0.0, f64::max);
    report(8, "simplex moments", pass, &format!("d <= 8, m <= 4, largest |z| = {worst:.2}"), t.elapsed(), secs(30));
}

#[test]
fn criterion_09_critical_eps_scaling() {
    let t = Instant::now();
    let mut worst = (0.0f64, 0usize);
    for d in 50..=200usize {
        let c = critical_eps_infinite(d, 1e-3).unwrap();
        let rel = (c.exact - c.approx).abs() / c.approx;
        if rel > worst.0 {
            worst = (rel, d);
        }
    }
    let limit = 0.998f64.atanh();
    let scaled = critical_eps_infinite(200, 1e-3).unwrap().exact * 200.0;
    let scaled_rel = (scaled - limit).abs() / limit;
    report(
        9,
        "critical eps vs atanh(1 - 2 mu)/d",
        worst.0 < 0.1 && scaled_rel < 0.1,
        &format!(
            "worst relative gap {:.3} at d={}, d * eps_crit(200) = {scaled:.4} vs {limit:.4}",
            worst.0, worst.1
        ),
        t.elapsed(),
        secs(5),
    );
}

#[test]
fn criterion_10_finite_s_trend_and_bound() {
    let t = Instant::now();
    let mu = 1e-3;
    let mut trend_failures = Vec::new();
    for d in 4..=12usize {
        let s = d as u64;
        let values: Vec<Option<f64>> = [s, 2 * s, 4 * s]
            .iter()
            .map(|&s| critical_eps_finite(s, d, mu).unwrap())
            .collect();
        // Option orders None below any value
        if values.windows(2).any(|w| w[1] < w[0]) {
            trend_failures.push(format!("d={d}: {values:?}"));
        }
    }
    let grid: Vec<f64> = (0..=95).map(|k| k as f64 / 100.0).collect();
    let mut bound_failures = Vec::new();
    for d in [20usize, 50, 100, 200] {
        for row in phase_diagram(d, mu, &grid).unwrap() {
            if row.clamped_bound(d) > row.d_res_numeric as f64 {
                bound_failures.push(format!("d={d} eps={}", row.eps));
            }
        }
    }
    report(
        10,
        "finite-s trend and conservative bound",
        trend_failures.is_empty() && bound_failures.is_empty(),
        &format!("trend failures {trend_failures:?}, bound failures {bound_failures:?}"),
        t.elapsed(),
        secs(30),
    );
}

#[test]
fn criterion_11_crb_saturation() {
    let t = Instant::now();
    let b = finite(4, 3, 0.2);
    let rho = PhotonDistribution::from_slice(&[0.5, 0.3, 0.2]).unwrap();
    let spec = ExperimentSpec::new(&b, rho, 1_000_000, 1000, 11).unwrap();
    let bound = crb(&b, spec.rho()).unwrap();
    let mse = build_pool(0).install(|| parallel::empirical_mse(&spec));
    let ratio = mse.n_mse / bound;
    report(
        11,
        "CRB saturation at N = 1e6",
        (0.95..=1.05).contains(&ratio),
        &format!("N MSE / CRB = {ratio:.4} (SE {:.4}), CRB = {bound:.6}", mse.std_error / bound),
        t.elapsed(),
        secs(120),
    );
}

fn run_cli(args: &[&str], threads: &str) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_multiport-ttf"))
        .args(args)
        .env("MULTIPORT_TTF_THREADS", threads)
        .output()
        .unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

#[test]
fn criterion_12_determinism() {
    let t = Instant::now();
    let runs: [&[&str]; 2] = [
        &["simulate", "--s", "4", "--d", "3", "--eps", "0.2", "--rho", "0.5,0.3,0.2", "--shots", "100,10000", "--trials", "300", "--seed", "12"],
        &["ttf", "--d", "2..4", "--s", "3,inf", "--eps", "0.1", "--mc-samples", "20000", "--seed", "12"],
    ];
    let mut same = true;
    let mut across_threads = true;
    for args in runs {
        let (first, c1) = run_cli(args, "3");
        let (second, c2) = run_cli(args, "3");
        let (single, c3) = run_cli(args, "1");
        same &= c1 == 0 && c2 == 0 && !first.is_empty() && first == second;
        across_threads &= c3 == 0 && single == first;
    }
    report(
        12,
        "seeded reruns are byte-identical",
        same,
        &format!("identical reruns {same}, also identical across thread counts {across_threads}"),
        t.elapsed(),
        secs(60),
    );
}
