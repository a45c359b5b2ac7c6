//! Simulation and verification tools for multimode bosonic codes that protect
//! a qubit against photon loss.
//!
//! The crate covers Fock-space bookkeeping ([`fock`]), passive linear optics
//! and heralded networks ([`linear_optics`]), amplitude damping
//! ([`loss_channel`]), recoverability checks and recovery ([`qec_core`]), the
//! three-photon code and its passive gate group ([`code_gates`]), tomography
//! in the code subspace ([`tomography`]), and the heralded encoding and
//! conditional-gate circuits ([`heralded`]).

pub mod code_gates;
pub mod error;
pub mod fock;
pub mod heralded;
pub mod linear_optics;
pub mod loss_channel;
pub mod optimize;
pub mod permanent;
pub mod qec_core;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
