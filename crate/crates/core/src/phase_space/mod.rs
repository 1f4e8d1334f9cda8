//! Weyl-calculus content: symbols, Poisson brackets, the escape function
//! and its bracket inequality, grid Weyl quantization, Moyal composition
//! and Gårding certificates.

pub mod escape;
pub mod symbol;
pub mod weyl;

pub use escape::{
    check_escape_inequality, check_escape_inequality_for, check_htheta_inequality, escape_symbol, eval_lambda,
    evaluate_margin, EscapeFunctionParams, EscapeReport, HThetaReport, PhaseGrid,
};
pub use symbol::{hamiltonian_derivative, moyal_two_term, poisson_bracket, SymbolField};
pub use weyl::{garding_certificate, moyal_leading_check, weyl_quantize_1d, GardingCertificate, MoyalDefects, WeylGrid};
