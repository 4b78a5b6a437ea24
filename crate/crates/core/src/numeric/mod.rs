//! Numerical building blocks shared by the model modules.

pub mod quad;
pub mod roots;
pub mod special;

pub use quad::{integrate, Integral, Tolerance};
pub use roots::{expand_upper, newton_bracketed};
pub use special::{exp_integral_e1, log1p_small, log_sum_exp, upper_incomplete_gamma};
