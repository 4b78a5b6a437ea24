//! Generalized gamma process primitives.
//!
//! The Lévy intensity is `ρ(dω) = ω^{-1-σ} e^{-ζω} / Γ(1-σ) dω` with `σ ∈ [0,1)`
//! and `ζ > 0`; the base measure is `α(dθ) = γ ξ θ^{ξ-1} dθ` on `(0, ∞)`, so that
//! `ᾱ(t) = γ t^ξ`.
//!
//! Two kernels of the base measure drive every sampler and likelihood:
//!
//! * `Ψ(τ) = ∫₀^τ ψ(τ-θ) α(dθ)`, the integrated Laplace exponent, and
//! * `H̄(τ) = ∫₀^τ α(θ) (τ-θ+ζ)^{σ-1} dθ`, the total mass offered to a new cluster.
//!
//! Note that `Ψ' = H̄`. For integer `ξ ≤ 4` both are evaluated in closed form
//! from `J_p(b; T) = ∫₀^b x^p (T-x)^{σ-1} dx`; other values of `ξ` fall back to
//! adaptive quadrature. [`psi_base_integral`] always integrates `ψ` directly and
//! serves as the reference route.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{domain, Error, Result};
use crate::numeric::{integrate, newton_bracketed, upper_incomplete_gamma, Tolerance};

const CLOSED_FORM_MAX_XI: f64 = 4.0;

/// Lévy-measure parameters of a generalized gamma process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGgp")]
pub struct GgpParams {
    sigma: f64,
    zeta: f64,
}

#[derive(Deserialize)]
struct RawGgp {
    sigma: f64,
    zeta: f64,
}

impl TryFrom<RawGgp> for GgpParams {
    type Error = Error;
    fn try_from(raw: RawGgp) -> Result<Self> {
        Self::new(raw.sigma, raw.zeta)
    }
}

impl GgpParams {
    pub fn new(sigma: f64, zeta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(domain(format!("sigma must lie in [0, 1), got {sigma}")));
        }
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(domain(format!("zeta must be positive and finite, got {zeta}")));
        }
        Ok(Self { sigma, zeta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Lévy density `ρ(ω)`.
    pub fn levy_density(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        (-(1.0 + self.sigma) * w.ln() - self.zeta * w - ln_gamma(1.0 - self.sigma)).exp()
    }

    /// Laplace exponent `ψ(t)`.
    pub fn laplace_exponent(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("laplace exponent needs t >= 0, got {t}")));
        }
        Ok(self.psi(t))
    }

    pub(crate) fn psi(&self, t: f64) -> f64 {
        let x = (t / self.zeta).ln_1p();
        if self.sigma == 0.0 {
            x
        } else {
            self.zeta.powf(self.sigma) * (self.sigma * x).exp_m1() / self.sigma
        }
    }

    /// `ψ(a) - ψ(b)` without cancellation when `a ≈ b`.
    pub(crate) fn psi_diff(&self, a: f64, b: f64) -> f64 {
        let x = ((a - b) / (b + self.zeta)).ln_1p();
        if self.sigma == 0.0 {
            x
        } else {
            (b + self.zeta).powf(self.sigma) * (self.sigma * x).exp_m1() / self.sigma
        }
    }

    /// `ψ'(t) = (t + ζ)^{σ-1}`.
    pub(crate) fn psi_prime(&self, t: f64) -> f64 {
        (t + self.zeta).powf(self.sigma - 1.0)
    }

    /// Tilted moment `κ(m, u) = ∫ ω^m e^{-uω} ρ(dω) = Γ(m-σ) / (Γ(1-σ) (ζ+u)^{m-σ})`.
    pub fn kappa(&self, m: u64, u: f64) -> Result<f64> {
        if m < 1 {
            return Err(domain("kappa needs m >= 1"));
        }
        if !(u >= 0.0) {
            return Err(domain(format!("kappa needs u >= 0, got {u}")));
        }
        let base = self.zeta + u;
        if m <= 100 {
            let mut value = base.powf(self.sigma - 1.0);
            for k in 1..m {
                value *= (k as f64 - self.sigma) / base;
            }
            Ok(value)
        } else {
            Ok(self.ln_kappa(m, u).exp())
        }
    }

    pub fn ln_kappa(&self, m: u64, u: f64) -> f64 {
        let m = m as f64;
        ln_gamma(m - self.sigma) - ln_gamma(1.0 - self.sigma) - (m - self.sigma) * (self.zeta + u).ln()
    }

    /// `κ(1, 0) = ∫ ω ρ(dω)`, the mean mass per unit of base measure.
    pub fn first_moment(&self) -> f64 {
        self.zeta.powf(self.sigma - 1.0)
    }

    /// Tail intensity `ρ̄(eps) = ∫_eps^∞ ρ(dω)`.
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(domain("tail mass is infinite for eps <= 0 (infinite activity)"));
        }
        let x = self.zeta * eps;
        if self.sigma == 0.0 {
            return Ok(crate::numeric::exp_integral_e1(x));
        }
        let scale = self.zeta.powf(self.sigma) / statrs::function::gamma::gamma(1.0 - self.sigma);
        Ok(scale * upper_incomplete_gamma(-self.sigma, x))
    }

    /// `∫_eps^∞ ω ρ(dω)`.
    pub fn truncated_first_moment(&self, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) {
            return Err(domain("eps must be non-negative"));
        }
        if eps == 0.0 {
            return Ok(self.first_moment());
        }
        Ok(self.first_moment() * gamma_ur(1.0 - self.sigma, self.zeta * eps))
    }
}

/// Power-law base measure `α(dθ) = γ ξ θ^{ξ-1} dθ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBase")]
pub struct BaseMeasureParams {
    xi: f64,
    gamma_coef: f64,
}

#[derive(Deserialize)]
struct RawBase {
    xi: f64,
    gamma_coef: f64,
}

impl TryFrom<RawBase> for BaseMeasureParams {
    type Error = Error;
    fn try_from(raw: RawBase) -> Result<Self> {
        Self::new(raw.xi, raw.gamma_coef)
    }
}

impl BaseMeasureParams {
    pub fn new(xi: f64, gamma_coef: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(domain(format!("xi must be positive, got {xi}")));
        }
        if !(gamma_coef > 0.0 && gamma_coef.is_finite()) {
            return Err(domain(format!("gamma must be positive, got {gamma_coef}")));
        }
        Ok(Self { xi, gamma_coef })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn gamma_coef(&self) -> f64 {
        self.gamma_coef
    }

    /// Density `α(θ)`.
    pub fn density(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return if self.xi < 1.0 { f64::INFINITY } else if self.xi == 1.0 { self.gamma_coef } else { 0.0 };
        }
        self.gamma_coef * self.xi * theta.powf(self.xi - 1.0)
    }

    pub fn ln_density(&self, theta: f64) -> f64 {
        (self.gamma_coef * self.xi).ln() + (self.xi - 1.0) * theta.ln()
    }

    /// `ᾱ(t) = γ t^ξ`.
    pub fn cumulative(&self, t: f64) -> f64 {
        self.gamma_coef * t.max(0.0).powf(self.xi)
    }

    /// Inverse of the normalised cumulative on `(0, t_max]`.
    pub fn quantile(&self, t_max: f64, u: f64) -> f64 {
        t_max * u.powf(1.0 / self.xi)
    }

    /// `∫_a^b f(θ) α(dθ)`; for `ξ < 1` the substitution `u = θ^ξ` removes the
    /// singularity of the density at the origin.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
        if self.xi < 1.0 {
            let inv = 1.0 / self.xi;
            let r = integrate(|u| f(u.powf(inv)), a.powf(self.xi), b.powf(self.xi), tol)?;
            Ok(self.gamma_coef * r.value)
        } else {
            let r = integrate(|t| f(t) * self.density(t), a, b, tol)?;
            Ok(r.value)
        }
    }

    fn integer_xi(&self) -> Option<u32> {
        (self.xi.fract() == 0.0 && self.xi <= CLOSED_FORM_MAX_XI).then_some(self.xi as u32)
    }
}

/// Full hyperparameter set `η = (ξ, γ, σ, ζ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub base: BaseMeasureParams,
    pub levy: GgpParams,
}

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-10, 1e-13)
}

/// `J_p(b; T) = ∫₀^b x^p (T-x)^{σ-1} dx` for `0 <= b < T`.
fn j_integral(p: u32, b: f64, t: f64, sigma: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    let y = b / t;
    let pf = p as f64;
    if y <= 0.5 {
        // (T - b u)^{σ-1} = T^{σ-1} Σ_l (1-σ)_l / l! (y u)^l, all terms positive.
        let mut coef = 1.0;
        let mut sum = 1.0 / (pf + 1.0);
        for l in 0..400 {
            let lf = l as f64;
            coef *= (lf + 1.0 - sigma) / (lf + 1.0) * y;
            let add = coef / (pf + lf + 2.0);
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        b.powf(pf + 1.0) * t.powf(sigma - 1.0) * sum
    } else {
        // s = T - x: Σ_i C(p,i) (-1)^i T^{p-i} ∫_{T-b}^T s^{i+σ-1} ds.
        let lower = t - b;
        let ln_ratio = (lower / t).ln();
        let mut total = 0.0;
        let mut binom = 1.0;
        for i in 0..=p {
            let e = i as f64 + sigma;
            let piece = if e == 0.0 {
                t.powi(p as i32) * (-ln_ratio)
            } else {
                t.powf(pf + sigma) * (-(e * ln_ratio).exp_m1()) / e
            };
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * binom * piece;
            binom = binom * (pf - i as f64) / (i as f64 + 1.0);
        }
        total
    }
}

impl ModelParams {
    pub fn new(xi: f64, gamma_coef: f64, sigma: f64, zeta: f64) -> Result<Self> {
        Ok(Self {
            base: BaseMeasureParams::new(xi, gamma_coef)?,
            levy: GgpParams::new(sigma, zeta)?,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.levy.sigma
    }

    pub fn zeta(&self) -> f64 {
        self.levy.zeta
    }

    pub fn xi(&self) -> f64 {
        self.base.xi
    }

    /// Whether `Ψ` and `H̄` have closed forms (integer `ξ ≤ 4`).
    pub fn has_closed_form(&self) -> bool {
        self.base.integer_xi().is_some()
    }

    /// `Ψ(τ) = ∫₀^τ ψ(τ-θ) α(dθ)`; closed form when available.
    pub fn psi_base(&self, tau: f64) -> Result<f64> {
        if tau <= 0.0 {
            return Ok(0.0);
        }
        match self.base.integer_xi() {
            // Integration by parts: Ψ(τ) = γ ∫₀^τ θ^ξ ψ'(τ-θ) dθ.
            Some(k) => Ok(self.base.gamma_coef * j_integral(k, tau, tau + self.zeta(), self.sigma())),
            None => psi_base_integral(tau, self),
        }
    }

    /// `Ψ(τ) - Ψ(τ0)` for `τ >= τ0`.
    pub fn psi_base_increment(&self, tau0: f64, tau: f64) -> Result<f64> {
        if tau <= tau0 {
            return Ok(0.0);
        }
        if self.base.integer_xi().is_some() {
            return Ok(self.psi_base(tau)? - self.psi_base(tau0)?);
        }
        let levy = self.levy;
        let old = self.base.integrate(|th| levy.psi_diff(tau - th, tau0 - th), 0.0, tau0, quad_tol())?;
        let fresh = self.base.integrate(|th| levy.psi(tau - th), tau0, tau, quad_tol())?;
        Ok(old + fresh)
    }

    /// `H̄(τ) = ∫₀^τ α(θ) (τ-θ+ζ)^{σ-1} dθ`, the new-cluster intensity at time `τ`.
    pub fn new_cluster_mass(&self, tau: f64) -> Result<f64> {
        self.new_location_mass(tau, tau)
    }

    /// `∫₀^θ α(x) (τ-x+ζ)^{σ-1} dx` for `0 <= θ <= τ`.
    pub fn new_location_mass(&self, theta: f64, tau: f64) -> Result<f64> {
        if theta <= 0.0 {
            return Ok(0.0);
        }
        let theta = theta.min(tau);
        let t = tau + self.zeta();
        match self.base.integer_xi() {
            Some(k) => Ok(self.base.gamma_coef * self.base.xi * j_integral(k - 1, theta, t, self.sigma())),
            None => {
                let levy = self.levy;
                self.base.integrate(|x| levy.psi_prime(tau - x), 0.0, theta, quad_tol())
            }
        }
    }

    /// Density `α(θ) (τ-θ+ζ)^{σ-1}` of the diffuse part of the location law.
    pub fn new_location_density(&self, theta: f64, tau: f64) -> f64 {
        if theta <= 0.0 || theta > tau {
            return 0.0;
        }
        self.base.density(theta) * self.levy.psi_prime(tau - theta)
    }
}

/// Laplace exponent of the generalized gamma process.
pub fn laplace_exponent(t: f64, levy: &GgpParams) -> Result<f64> {
    levy.laplace_exponent(t)
}

/// Tilted Lévy moment `κ(m, u)`.
pub fn kappa(m: u64, u: f64, levy: &GgpParams) -> Result<f64> {
    levy.kappa(m, u)
}

/// `∫₀^τ ψ(τ-θ) α(dθ)` by adaptive Gauss–Kronrod quadrature
/// (absolute tolerance `1e-10`).
pub fn psi_base_integral(tau: f64, params: &ModelParams) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(domain(format!("tau must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let levy = params.levy;
    params.base.integrate(|th| levy.psi(tau - th), 0.0, tau, quad_tol())
}

/// One jump of a CRM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub weight: f64,
    pub location: f64,
}

/// Draws one weight from `ρ` restricted to `(eps, ∞)` and normalised, by
/// inverting `ρ̄` on a log scale.
pub fn sample_levy_weight<R: Rng + ?Sized>(eps: f64, levy: &GgpParams, rng: &mut R) -> Result<f64> {
    let total = levy.tail_mass(eps)?;
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let target = u.ln() + total.ln();
    // h(x) = ln(u ρ̄(eps)) - ln ρ̄(e^x), increasing in x, h(ln eps) <= 0.
    let h = |x: f64| -> (f64, f64) {
        let w = x.exp();
        let tail = levy.tail_mass(w).unwrap_or(0.0);
        if tail <= 0.0 {
            return (f64::INFINITY, f64::NAN);
        }
        (target - tail.ln(), levy.levy_density(w) * w / tail)
    };
    let lo = eps.ln();
    let mut step = 1.0;
    let mut hi = lo + step;
    while h(hi).0 < 0.0 {
        step *= 2.0;
        hi = lo + step;
        if step > 1e3 {
            return Err(Error::Numerical {
                routine: "sample_levy_weight",
                achieved: step,
                requested: 1e3,
            });
        }
    }
    let x = newton_bracketed(h, lo, hi, lo + 0.5 * step, 1e-13)?;
    Ok(x.exp())
}

/// Jumps of the CRM with weight above `eps` and location in `(0, t_max]`.
///
/// The number of jumps is Poisson with mean `ᾱ(t_max) ρ̄(eps)`; weights are
/// drawn by inversion of `ρ̄` and locations from the normalised base measure.
pub fn sample_truncated_crm<R: Rng + ?Sized>(
    t_max: f64,
    eps: f64,
    params: &ModelParams,
    rng: &mut R,
) -> Result<Vec<Atom>> {
    if !(t_max > 0.0) {
        return Err(domain("t_max must be positive"));
    }
    let mean = params.base.cumulative(t_max) * params.levy.tail_mass(eps)?;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| domain(format!("poisson mean {mean}: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let weight = sample_levy_weight(eps, &params.levy, rng)?;
        let location = params.base.quantile(t_max, rng.random::<f64>());
        atoms.push(Atom { weight, location });
    }
    Ok(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn laplace_exponent_examples() {
        let half = GgpParams::new(0.5, 1.0).unwrap();
        let gam = GgpParams::new(0.0, 1.0).unwrap();
        assert_eq!(laplace_exponent(0.0, &half).unwrap(), 0.0);
        assert!(close(laplace_exponent(E - 1.0, &gam).unwrap(), 1.0, 1e-15));
        assert!(close(laplace_exponent(3.0, &half).unwrap(), 2.0, 1e-14));
        assert!(laplace_exponent(-1.0, &half).is_err());
    }

    #[test]
    fn laplace_exponent_increasing_concave_unbounded() {
        for &s in &[0.0, 0.3, 0.9] {
            let p = GgpParams::new(s, 2.0).unwrap();
            let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
            let vals: Vec<f64> = ts.iter().map(|&t| p.psi(t)).collect();
            for w in vals.windows(3) {
                assert!(w[1] > w[0]);
                assert!(w[2] - w[1] <= w[1] - w[0] + 1e-12);
            }
            assert!(p.psi(1e12) > 10.0);
        }
    }

    #[test]
    fn kappa_examples() {
        let gam = GgpParams::new(0.0, 1.0).unwrap();
        let half = GgpParams::new(0.5, 1.0).unwrap();
        assert!(close(kappa(1, 0.0, &gam).unwrap(), 1.0, 1e-15));
        assert!(close(kappa(2, 0.0, &half).unwrap(), 0.5, 1e-15));
        assert!(close(kappa(3, 1.0, &gam).unwrap(), 0.25, 1e-15));
        assert!(kappa(0, 1.0, &gam).is_err());
    }

    #[test]
    fn kappa_recursion() {
        for &s in &[0.0, 0.25, 0.5, 0.9] {
            let p = GgpParams::new(s, 1.3).unwrap();
            for &u in &[0.0, 0.5, 1.0, 10.0] {
                for m in 1..=50u64 {
                    let lhs = p.kappa(m + 1, u).unwrap();
                    let rhs = p.kappa(m, u).unwrap() * (m as f64 - s) / (p.zeta() + u);
                    assert!(((lhs - rhs) / rhs).abs() <= 1e-12, "s={s} u={u} m={m}");
                }
            }
        }
    }

    #[test]
    fn kappa_matches_log_route() {
        let p = GgpParams::new(0.37, 2.5).unwrap();
        for m in [1u64, 7, 40, 99] {
            let a = p.kappa(m, 3.0).unwrap();
            let b = p.ln_kappa(m, 3.0).exp();
            assert!(((a - b) / b).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_base_gamma_closed_form() {
        let params = ModelParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(psi_base_integral(0.0, &params).unwrap(), 0.0);
        let v = psi_base_integral(1.0, &params).unwrap();
        assert!(close(v, 2.0 * 2f64.ln() - 1.0, 1e-12));
        for tau in [0.1f64, 1.0, 10.0, 100.0] {
            let exact = (tau + 1.0) * tau.ln_1p() - tau;
            assert!(close(psi_base_integral(tau, &params).unwrap(), exact, 1e-8), "tau={tau}");
            assert!(close(params.psi_base(tau).unwrap(), exact, 1e-8), "tau={tau}");
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for &(xi, s, z) in &[(1.0, 0.5, 1.0), (2.0, 0.25, 0.3), (3.0, 0.9, 10.0), (2.0, 0.0, 2.0), (4.0, 0.4, 1.0)] {
            let params = ModelParams::new(xi, 1.7, s, z).unwrap();
            for &tau in &[0.01, 0.2, 1.0, 7.5, 60.0] {
                let quad = psi_base_integral(tau, &params).unwrap();
                let closed = params.psi_base(tau).unwrap();
                assert!(((quad - closed) / quad).abs() < 1e-10, "xi={xi} s={s} tau={tau}: {quad} vs {closed}");
                let levy = params.levy;
                let hq = params
                    .base
                    .integrate(|x| levy.psi_prime(tau - x), 0.0, tau, Tolerance::new(1e-14, 1e-13))
                    .unwrap();
                let hc = params.new_cluster_mass(tau).unwrap();
                assert!(((hq - hc) / hq).abs() < 1e-10, "xi={xi} s={s} tau={tau}: {hq} vs {hc}");
            }
        }
    }

    #[test]
    fn non_integer_xi_uses_quadrature_consistently() {
        let params = ModelParams::new(0.6, 1.0, 0.3, 1.0).unwrap();
        let a = params.psi_base(2.0).unwrap();
        let b = params.psi_base(2.5).unwrap();
        let inc = params.psi_base_increment(2.0, 2.5).unwrap();
        assert!(close(b - a, inc, 1e-9));
        // Ψ' = H̄ by central differences.
        let h = 1e-4;
        let d = (params.psi_base(2.0 + h).unwrap() - params.psi_base(2.0 - h).unwrap()) / (2.0 * h);
        assert!(close(d, params.new_cluster_mass(2.0).unwrap(), 1e-6));
    }

    #[test]
    fn psi_base_monotone() {
        let params = ModelParams::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let mut prev = 0.0;
        for i in 1..100 {
            let v = params.psi_base(i as f64 * 0.3).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn psi_base_trapezoid_oracle() {
        // τ=2, ξ=2, γ=1, σ=0.5, ζ=1 against a 10⁶-point trapezoid rule.
        let params = ModelParams::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let tau = 2.0;
        let n = 1_000_000;
        let h = tau / n as f64;
        let f = |th: f64| {
            let psi = 2.0 * ((tau - th + 1.0).sqrt() - 1.0);
            psi * 2.0 * th
        };
        let mut acc = 0.5 * (f(0.0) + f(tau));
        for i in 1..n {
            acc += f(i as f64 * h);
        }
        let oracle = acc * h;
        assert!(close(psi_base_integral(tau, &params).unwrap(), oracle, 1e-8));
    }

    #[test]
    fn tail_mass_matches_quadrature() {
        for &(s, z) in &[(0.0, 1.0), (0.5, 1.0), (0.25, 3.0), (0.9, 0.5), (1e-4, 1.0)] {
            let p = GgpParams::new(s, z).unwrap();
            let eps = 0.05;
            let upper = 60.0 / z;
            let q = integrate(|w| p.levy_density(w), eps, upper, Tolerance::new(1e-13, 1e-12)).unwrap();
            let t = p.tail_mass(eps).unwrap();
            assert!(((q.value - t) / t).abs() < 1e-6, "s={s}: {} vs {t}", q.value);
            let m = integrate(|w| w * p.levy_density(w), eps, upper, Tolerance::new(1e-13, 1e-12)).unwrap();
            let tm = p.truncated_first_moment(eps).unwrap();
            assert!(((m.value - tm) / tm).abs() < 1e-8);
        }
        assert!(GgpParams::new(0.5, 1.0).unwrap().tail_mass(0.0).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GgpParams::new(-0.1, 1.0).is_err());
        assert!(GgpParams::new(1.0, 1.0).is_err());
        assert!(GgpParams::new(0.5, 0.0).is_err());
        assert!(BaseMeasureParams::new(0.0, 1.0).is_err());
        assert!(BaseMeasureParams::new(1.0, -1.0).is_err());
        let bad: std::result::Result<GgpParams, _> = serde_json::from_str(r#"{"sigma": 1.5, "zeta": 1.0}"#);
        assert!(bad.is_err());
    }
}
