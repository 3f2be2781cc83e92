//! Single knob surface for every numerical threshold in the crate.
//!
//! Each operation reads its tolerances from a [`ToleranceProfile`] so that a
//! run is fully reproducible from its configuration. Fields left out of a
//! config file keep the defaults below.

use serde::{Deserialize, Serialize};

macro_rules! tolerance_profile {
    ($( $(#[doc = $doc:expr])* $field:ident : $ty:ty = $default:expr ),+ $(,)?) => {
        /// Numerical thresholds threaded through every operation.
        ///
        /// Fields missing from a deserialized table fall back to the defaults.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default)]
        pub struct ToleranceProfile {
            $(
                $(#[doc = $doc])*
                pub $field: $ty,
            )+
        }

        impl Default for ToleranceProfile {
            fn default() -> Self {
                Self { $( $field: $default, )+ }
            }
        }
    };
}

tolerance_profile! {
    /// Relative residual allowed for `Q diag(alpha) Q^-1` to reproduce `A`.
    reconstruct_rel: f64 = 1e-6,
    /// Residual allowed for `exp(log A) = A` (absolute, inputs of unit scale).
    exp_residual: f64 = 1e-12,
    /// Relative asymmetry allowed when accepting a matrix as Hermitian.
    hermitian_rel: f64 = 1e-10,
    /// Eigenvector-matrix condition number above which a map is treated as
    /// non-diagonalizable.
    diag_cond_limit: f64 = 1e8,
    /// Distance to the branch cut (arg = pi) below which the principal log
    /// refuses to choose a branch.
    branch_cut: f64 = 1e-12,
    /// Relative eigenvalue modulus below which a map counts as singular.
    singular_rel: f64 = 1e-14,
    /// Residual allowed for the Lyapunov identity `L* P + P L + I = 0`.
    lyapunov_residual: f64 = 1e-10,
    /// Condition-estimate bound for the vectorized Lyapunov system.
    lyapunov_cond_limit: f64 = 1e12,
    /// Residual `|F - 1|` at which the orbit-time solve stops.
    root_residual: f64 = 1e-13,
    /// How far (in flow time) bracketing walks before giving up.
    bracket_limit: f64 = 200.0,
    /// Iteration cap for the safeguarded Newton orbit solve.
    solver_max_iters: usize = 200,
    /// Relative finite-difference step, eps^(1/3) by default.
    fd_rel_step: f64 = 6.055454452393343e-6,
    /// Enable Richardson extrapolation of the Hessian finite differences.
    richardson: bool = false,
    /// `|F - 1|` below which a point counts as lying on the shell.
    on_shell: f64 = 1e-9,
    /// Positivity margin required of the sampled complex Hessian.
    psd_margin: f64 = 0.0,
    /// Relative agreement required between analytic and FD gradients.
    grad_check_rel: f64 = 1e-6,
    /// Relative residual allowed for the deck automorphy law.
    automorphy_rel: f64 = 1e-8,
    /// Relative residual for the dd^c power identity at a <= 2.
    ddc_rel: f64 = 1e-6,
    /// Extra factor allowed at a = 3 (one more finite-difference layer).
    ddc_deep_factor: f64 = 10.0,
    /// Relative residual for the closedness of the Lee form.
    dtheta_rel: f64 = 1e-5,
    /// Componentwise relative residual for `d omega = theta ^ omega`.
    lck_rel: f64 = 1e-4,
    /// Relative residual for deck pullback laws of omega-tilde and omega.
    pullback_rel: f64 = 1e-6,
    /// Relative agreement of the measured pullback factor with exp(-lambda).
    pullback_factor_rel: f64 = 1e-8,
    /// Frobenius residual allowed for `U* U = I`.
    unitary_residual: f64 = 1e-10,
    /// Frobenius residual allowed for `A xi = xi A`.
    commutation_residual: f64 = 1e-10,
    /// Allowed spread of the measured homothety constant across samples.
    constancy_rel: f64 = 1e-6,
    /// Step used for logarithmic derivatives along auxiliary flows.
    lie_step: f64 = 1e-5,
    /// Scaled bound on `|dF(xi)|` for shell tangency.
    transversal_tangency: f64 = 1e-8,
    /// Scaled lower bound on `|dF(I xi)|` for transversality.
    transversal_margin: f64 = 1e-6,
    /// Bound on the normalized `grad theta` residual (Lee-parallel check).
    lee_residual: f64 = 1e-2,
    /// Hessian-asymmetry budget above which Lee-parallel output is withheld.
    lee_noise_budget: f64 = 1e-4,
    /// Relative coordinate step for the metric-derivative layer.
    lee_fd_step: f64 = 1e-3,
    /// Relative width at which the lambda bisection stops.
    min_lambda_rel: f64 = 1e-3,
    /// Orbits sampled by the empirical admissibility mode.
    empirical_orbits: usize = 32,
    /// Grid points per orbit in the empirical admissibility mode.
    empirical_grid: usize = 2001,
    /// Flow-time half-span scanned per orbit in empirical mode.
    empirical_span: f64 = 40.0,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_positive() {
        let t = ToleranceProfile::default();
        for v in [
            t.reconstruct_rel,
            t.exp_residual,
            t.hermitian_rel,
            t.diag_cond_limit,
            t.branch_cut,
            t.lyapunov_residual,
            t.root_residual,
            t.fd_rel_step,
            t.lck_rel,
            t.min_lambda_rel,
        ] {
            assert!(v > 0.0);
        }
    }

    #[test]
    fn fd_step_is_cbrt_eps() {
        let t = ToleranceProfile::default();
        assert!((t.fd_rel_step - f64::EPSILON.cbrt()).abs() < 1e-18);
    }

    #[test]
    fn partial_override_keeps_defaults() {
        let t: ToleranceProfile = toml::from_str("root_residual = 1e-11").unwrap();
        assert_eq!(t.root_residual, 1e-11);
        assert_eq!(t.lck_rel, ToleranceProfile::default().lck_rel);
    }
}
