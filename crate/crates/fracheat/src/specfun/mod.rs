//! Scalar special functions behind the fractional-in-time calculus: the real
//! Gamma function, the subordination density M_a with its moment identities,
//! and E_{a,b} on the negative axis. The two nontrivial families are computed
//! by unrelated algorithms (series against quadrature) and checked against
//! each other through the Laplace-type identity
//!
//!   int_0^inf M_a(theta) e^{-lambda theta} dtheta = E_a(-lambda),
//!   a int_0^inf theta M_a(theta) e^{-lambda theta} dtheta = E_{a,a}(-lambda).

pub mod gamma;
pub mod mittag_leffler;
pub mod quad;
pub mod wright;

pub use gamma::{gamma_fn, ln_gamma, recip_gamma};
pub use mittag_leffler::{mittag_leffler, MlEvaluator};
pub use wright::{
    subordinate, wright_moment, wright_phi, PhiEval, Subordinated, WrightEvaluator,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_duality_links_density_and_symbol() {
        for alpha in [0.3, 0.7] {
            let w = WrightEvaluator::new(alpha).unwrap();
            let e1 = MlEvaluator::new(alpha, 1.0).unwrap();
            let ea = MlEvaluator::new(alpha, alpha).unwrap();
            for k in 0..7 {
                let lam = 1e-3 * (10.0f64).powf(k as f64);
                let lhs = w.laplace(lam);
                let rhs = e1.eval(-lam).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-8,
                    "alpha={alpha} lambda={lam}: {lhs} vs {rhs}"
                );
                let lhs = w.laplace_weighted(lam);
                let rhs = ea.eval(-lam).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-8,
                    "weighted alpha={alpha} lambda={lam}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn subordinating_the_exponential_recovers_the_symbol() {
        let s = subordinate(0.5, |t| (-t).exp(), 0).unwrap();
        // e * erfc(1)
        assert!((s.value - 0.42758357615580700).abs() <= 1e-9);
    }
}
