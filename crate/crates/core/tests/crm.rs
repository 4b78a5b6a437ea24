mod common;

use microcluster::crm::{kappa, laplace_exponent, psi_base_integral, sample_truncated_crm};
use microcluster::numeric::{integrate, Tolerance};
use microcluster::{GgpParams, ModelParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::mean_sd;

#[test]
fn psi_base_matches_gamma_closed_form() {
    let params = ModelParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
    for tau in [0.1f64, 1.0, 10.0, 100.0] {
        let exact = (1.0 + tau) * tau.ln_1p() - tau;
        let quad = psi_base_integral(tau, &params).unwrap();
        let closed = params.psi_base(tau).unwrap();
        assert!((quad - exact).abs() < 1e-8 * exact.max(1.0), "{tau}: {quad} vs {exact}");
        assert!((closed - exact).abs() < 1e-8 * exact.max(1.0), "{tau}: {closed} vs {exact}");
    }
    assert_eq!(psi_base_integral(0.0, &params).unwrap(), 0.0);
}

// ∫_eps^∞ ρ and ∫_eps^∞ ω ρ by brute quadrature on a log scale.
fn levy_tail(levy: &GgpParams, eps: f64, power: i32) -> f64 {
    let hi = (60.0 / levy.zeta()).ln();
    integrate(
        |s| {
            let w = s.exp();
            w.powi(power + 1) * levy.levy_density(w)
        },
        eps.ln(),
        hi,
        Tolerance::new(1e-14, 1e-12),
    )
    .unwrap()
    .value
}

#[test]
fn truncated_crm_count_and_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for &(xi, sigma, zeta, eps, t_max) in &[(1.0, 0.5, 1.0, 1e-3, 2.0), (2.0, 0.0, 2.0, 1e-2, 1.5)] {
        let params = ModelParams::new(xi, 1.0, sigma, zeta).unwrap();
        let (mut counts, mut masses) = (Vec::new(), Vec::new());
        for _ in 0..10_000 {
            let atoms = sample_truncated_crm(t_max, eps, &params, &mut rng).unwrap();
            assert!(atoms.iter().all(|a| a.weight > eps && a.location > 0.0 && a.location <= t_max));
            counts.push(atoms.len() as f64);
            masses.push(atoms.iter().map(|a| a.weight).sum::<f64>());
        }
        let abar = t_max.powf(xi);
        let want_count = abar * levy_tail(&params.levy, eps, 0);
        let want_mass = abar * levy_tail(&params.levy, eps, 1);
        let (mc, sc) = mean_sd(&counts);
        let (mm, sm) = mean_sd(&masses);
        assert!((mc - want_count).abs() < 3.0 * sc / 100.0, "count {mc} vs {want_count}");
        assert!((mm - want_mass).abs() < 3.0 * sm / 100.0, "mass {mm} vs {want_mass}");
    }
}

#[test]
fn smaller_truncation_gives_more_atoms() {
    let levy = GgpParams::new(0.3, 1.0).unwrap();
    let mut prev = 0.0;
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let m = levy.tail_mass(eps).unwrap();
        assert!(m > prev);
        assert!((m / levy_tail(&levy, eps, 0) - 1.0).abs() < 1e-8);
        prev = m;
    }
}

#[test]
fn first_moment_matches_kappa() {
    for sigma in [0.0, 0.25, 0.5, 0.9] {
        let levy = GgpParams::new(sigma, 1.5).unwrap();
        let full = levy_tail(&levy, 1e-100, 1);
        assert!((levy.first_moment() - kappa(1, 0.0, &levy).unwrap()).abs() < 1e-14);
        assert!((full / levy.first_moment() - 1.0).abs() < 1e-6, "{sigma}");
    }
}

proptest! {
    #[test]
    fn kappa_recursion(m in 1u64..50, ui in 0usize..4, si in 0usize..4) {
        let u = [0.0, 0.5, 1.0, 10.0][ui];
        let sigma = [0.0, 0.25, 0.5, 0.9][si];
        let levy = GgpParams::new(sigma, 1.0).unwrap();
        let a = kappa(m + 1, u, &levy).unwrap();
        let b = kappa(m, u, &levy).unwrap() * (m as f64 - sigma) / (1.0 + u);
        prop_assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_exponent_is_increasing(sigma in 0.0f64..0.99, zeta in 0.1f64..10.0, t in 0.0f64..100.0, dt in 1e-3f64..10.0) {
        let levy = GgpParams::new(sigma, zeta).unwrap();
        prop_assert!(laplace_exponent(t + dt, &levy).unwrap() > laplace_exponent(t, &levy).unwrap());
    }
}
