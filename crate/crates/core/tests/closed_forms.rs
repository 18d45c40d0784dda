use multiport_ttf_core::povm::{
    amplitudes_binomial, amplitudes_finite, identity_residual, inverse_binomial, inverse_general,
    inverse_lossless, DeviceConfig,
};
use multiport_ttf_core::tomography::TomographyKit;
use multiport_ttf_core::ttf::{
    ttf_closed_form, ttf_finite_lossless, ttf_finite_lossy, ttf_fock, ttf_infinite_lossy,
    ttf_master,
};
use multiport_ttf_core::AmplitudeMatrix;

const EPS_GRID: [f64; 4] = [0.0, 0.1, 0.3, 0.5];

fn finite(s: u64, d: usize, eps: f64) -> AmplitudeMatrix {
    amplitudes_finite(&DeviceConfig::finite(s, d, eps).unwrap()).unwrap()
}

#[test]
fn master_formula_agrees_with_every_closed_form() {
    let mut worst: f64 = 0.0;
    for d in 2..=10usize {
        for &eps in &EPS_GRID {
            let closed = ttf_infinite_lossy(d, eps).unwrap();
            let master = ttf_master(&amplitudes_binomial(d, eps).unwrap()).unwrap().value;
            worst = worst.max((closed - master).abs() / closed);
            for s in (d as u64 - 1)..=40 {
                let closed = ttf_finite_lossy(s, d, eps).unwrap();
                let master = ttf_master(&finite(s, d, eps)).unwrap().value;
                let rel = (closed - master).abs() / closed;
                let tol = if eps == 0.0 { 1e-9 } else { 1e-8 };
                assert!(rel < tol, "s={s} d={d} eps={eps}: {closed} vs {master}");
                worst = worst.max(rel);
            }
        }
    }
    assert!(worst < 1e-8);
}

#[test]
fn dispatcher_uses_regime_tags() {
    let cfg = DeviceConfig::finite(5, 4, 0.0).unwrap();
    assert_eq!(ttf_closed_form(&cfg).unwrap().value, ttf_finite_lossless(5, 4).unwrap());
    let inf = DeviceConfig::infinite(4, 0.0).unwrap();
    assert_eq!(ttf_closed_form(&inf).unwrap().value, ttf_fock(4));
}

#[test]
fn lossless_devices_never_beat_fock() {
    for d in 2..=10usize {
        for s in (d as u64 - 1)..=40 {
            let b = finite(s, d, 0.0);
            let master = ttf_master(&b).unwrap().value;
            assert!(master >= ttf_fock(d) - 1e-12, "s={s} d={d}");
            let kit = TomographyKit::new(&b).unwrap();
            let tr_f = kit.frame().matrix.trace();
            let tr_finv = kit.frame_inverse_trace().unwrap();
            assert!(tr_f <= d as f64 + 1e-12);
            assert!(tr_f * tr_finv >= (d * d) as f64 * (1.0 - 1e-12));
        }
    }
}

#[test]
fn analytic_inverses_invert() {
    for d in 1..=15usize {
        for eps in [0.0, 0.1, 0.3, 0.5, 0.7] {
            let b = amplitudes_binomial(d, eps).unwrap().into_entries();
            assert!(identity_residual(&(inverse_binomial(d, eps).unwrap() * b)) < 1e-10);
        }
    }
    for d in 2..=15usize {
        for s in (d as u64 - 1)..=60 {
            let b = finite(s, d, 0.0).into_entries();
            let r = identity_residual(&(inverse_lossless(s, d).unwrap() * b));
            assert!(r < 1e-10, "lossless s={s} d={d}: {r:e}");
            for eps in [0.1, 0.3, 0.5, 0.7] {
                let cfg = DeviceConfig::finite(s, d, eps).unwrap();
                let inv = inverse_general(&cfg).unwrap();
                let b = amplitudes_finite(&cfg).unwrap().into_entries();
                let r = identity_residual(&(&inv.matrix * b));
                assert!(r < 1e-10, "lossy s={s} d={d} eps={eps}: {r:e}");
            }
        }
    }
}
