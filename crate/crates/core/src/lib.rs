//! Stickelberger elements over abelian extensions of `Q`, their
//! congruences, and a finite-level simulator for the annihilation and
//! Euler-system statements built on top of them.

pub mod checks;
pub mod cyclotomic_galois;
pub mod euler_system;
pub mod exact_arith;
pub mod finite_field_k;
pub mod partial_zeta;
pub mod module_splitting;
pub mod splitting_sim;
pub mod stickelberger;
