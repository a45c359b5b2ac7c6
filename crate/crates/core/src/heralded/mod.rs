//! Heralded (post-selected) linear-optics protocols on the three-photon code:
//! the universal encoder and the conditional single-mode phase gate.

pub mod encoding;
pub mod phase_gate;

pub use encoding::*;
pub use phase_gate::*;

use std::f64::consts::PI;

/// Reduces an angle into `(−π/3, π/3]`, i.e. modulo `2π/3`.
pub fn reduce_third(x: f64) -> f64 {
    let period = 2.0 * PI / 3.0;
    let mut y = (x + PI / 3.0).rem_euclid(period) - PI / 3.0;
    if y <= -PI / 3.0 + 1e-15 {
        y += period;
    }
    y
}

/// Lexicographic comparison, used to break ties between equally good
/// optimizer results so that parallel runs reduce deterministically.
pub(crate) fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}
