#![allow(dead_code)]

use microcluster::numeric::{integrate, Tolerance};
use microcluster::Partition;

/// All canonical partitions of `[n]` (restricted growth strings).
pub fn all_partitions(n: usize) -> Vec<Partition> {
    fn grow(prefix: &mut Vec<u32>, max: u32, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_labels(prefix).unwrap());
            return;
        }
        for c in 1..=max + 1 {
            prefix.push(c);
            grow(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), 0, n, &mut out);
    out
}

/// `Pr(Π_3 = labels)` in the gamma case `ξ = γ = ζ = 1, σ = 0`.
///
/// The joint density `e^{-Ψ(τ₃)} Π_j Γ(m_j)(1+τ₃-θ_j)^{-m_j}` is
/// integrated over the locations and `τ₂` in closed form and over
/// `0 < τ₁ < τ₃` by nested quadrature; `Ψ(τ) = (1+τ)ln(1+τ) - τ`.
pub fn gamma_case_prob3(labels: &[u32]) -> f64 {
    let big_u = |t1: f64, t3: f64| 1.0 + t3 - t1;
    // ∫_{τ₁}^{τ₃} ln((1+τ₃)/(1+τ₃-τ₂)) dτ₂
    let single_mid = |t1: f64, t3: f64| {
        let u = big_u(t1, t3);
        (t3 - t1) * t3.ln_1p() - (u * u.ln() - u + 1.0)
    };
    let f = |t1: f64, t3: f64| -> f64 {
        let l3 = t3.ln_1p();
        let u = big_u(t1, t3);
        match labels {
            // ∫₀^{τ₁} 2(1+τ₃-θ)^{-3} dθ, τ₂ free
            [1, 1, 1] => (t3 - t1) * (u.powi(-2) - (1.0 + t3).powi(-2)),
            [1, 1, 2] => (t3 - t1) * (1.0 / u - 1.0 / (1.0 + t3)) * l3,
            [1, 2, 1] => (1.0 / u - 1.0 / (1.0 + t3)) * single_mid(t1, t3),
            [1, 2, 2] => (l3 - u.ln()) * (u.ln() - (t3 - t1) / (1.0 + t3)),
            [1, 2, 3] => (l3 - u.ln()) * single_mid(t1, t3) * l3,
            _ => panic!("not a partition of [3]"),
        }
    };
    let tol = Tolerance::new(1e-13, 1e-11);
    integrate(
        |t3| {
            let psi = (1.0 + t3) * t3.ln_1p() - t3;
            let inner = integrate(|t1| f(t1, t3), 0.0, t3, tol).unwrap().value;
            (-psi).exp() * inner
        },
        0.0,
        60.0,
        tol,
    )
    .unwrap()
    .value
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Two-sample-free KS distance of sorted `xs` against a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(xs: &mut [f64], cdf: F) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}
