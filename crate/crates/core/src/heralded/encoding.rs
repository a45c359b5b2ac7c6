//! The heralded encoder from a dual-rail photon into the three-photon code.
//!
//! Three auxiliary photons pass a tritter and leave in `|T_3⟩`. One of its
//! modes (`s`) meets the dual-rail qubit and a fourth auxiliary photon in a
//! four-mode box `U`, ordered `[s, a, q_L, q_H]`. The encoder succeeds when
//! `(a, q_L, q_H)` read `(1, 1, 0)`; on mode `s` the box then acts as
//!
//! ```text
//! |n⟩_s|1⟩|10⟩ → c_ln |n⟩_s|110⟩ + …      |n⟩_s|1⟩|01⟩ → c_hn |n⟩_s|110⟩ + …
//! ```
//!
//! and the output is `√p (α|L⟩ + β|H⟩)` exactly when
//! `c_l0 = c_l3`, `c_h1 = −√2 c_l0`, `c_h0 = c_l1 = c_h3 = 0`, with
//! `p = |c_h1|²/3`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::code_gates::{codewords, corrective_gate, corrective_words, GateWord, LogicalQubit};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, Occupation, PureState};
use crate::linear_optics::{apply_transform, beam_splitter, embed, matrix_element, phase_shift, tritter, BsSign, ModeTransform};
use crate::optimize::{nelder_mead, project_feasible, sqp_minimize, SimplexOptions, SqpOptions};
use crate::qec_core::{annihilators, kl_check, CodeSubspace, KLReport};

use super::lex_less;

/// Constraint tolerance for accepting a candidate.
pub const ENCODING_TOL: f64 = 1e-6;

const BOX_MODES: usize = 4;

const TRIVIAL_RATE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EncodingCoefficients {
    pub c_l0: C64,
    pub c_l1: C64,
    pub c_l3: C64,
    pub c_h0: C64,
    pub c_h1: C64,
    pub c_h3: C64,
}

impl EncodingCoefficients {
    /// Herald-`110` amplitudes of a box on `4 + k` modes; modes past the
    /// fourth enter and leave empty.
    pub fn of(u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() < BOX_MODES || u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch { expected: BOX_MODES, found: u.nrows() });
        }
        let occ = |v: [usize; 4]| {
            let mut o = v.to_vec();
            o.resize(u.nrows(), 0);
            Occupation(o)
        };
        let amp = |n: usize, qubit: [usize; 2]| matrix_element(u, &occ([n, 1, 1, 0]), &occ([n, 1, qubit[0], qubit[1]]));
        Ok(Self {
            c_l0: amp(0, [1, 0])?,
            c_l1: amp(1, [1, 0])?,
            c_l3: amp(3, [1, 0])?,
            c_h0: amp(0, [0, 1])?,
            c_h1: amp(1, [0, 1])?,
            c_h3: amp(3, [0, 1])?,
        })
    }

    pub fn success_rate(&self) -> f64 {
        self.c_h1.norm_sqr() / 3.0
    }

    /// `[c_l0 − c_l3, c_h1 + √2 c_l0, c_h0, c_l1, c_h3]`.
    pub fn residuals(&self) -> [C64; 5] {
        [self.c_l0 - self.c_l3, self.c_h1 + 2f64.sqrt() * self.c_l0, self.c_h0, self.c_l1, self.c_h3]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    fn real_residuals(&self) -> Vec<f64> {
        self.residuals().iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

/// `exp(iH)` with `H` Hermitian, filled from `n²` reals: the diagonal first,
/// then the upper triangle as (real, imaginary) pairs, row by row.
pub fn exp_i_hermitian(x: &[f64], n: usize) -> DMatrix<C64> {
    assert_eq!(x.len(), n * n, "need n² parameters");
    let mut h = DMatrix::<C64>::zeros(n, n);
    let mut k = n;
    for i in 0..n {
        h[(i, i)] = C64::new(x[i], 0.0);
        for j in (i + 1)..n {
            h[(i, j)] = C64::new(x[k], x[k + 1]);
            h[(j, i)] = h[(i, j)].conj();
            k += 2;
        }
    }
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn serialize_unitary<S: Serializer>(t: &ModeTransform, s: S) -> std::result::Result<S::Ok, S::Error> {
    let m = t.matrix();
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    rows.serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodingCandidate {
    /// Rows of `(re, im)` pairs, mode order `[s, a, q_L, q_H, vacuum…]`.
    #[serde(serialize_with = "serialize_unitary")]
    pub dashed_box: ModeTransform,
    pub coefficients: EncodingCoefficients,
    pub success_rate: f64,
    /// Moduli of [`EncodingCoefficients::residuals`].
    pub residuals: [f64; 5],
    pub max_residual: f64,
    /// Restarts that ended within [`ENCODING_TOL`].
    pub feasible_restarts: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl EncodingCandidate {
    pub fn from_transform(dashed_box: ModeTransform, restarts: usize, feasible_restarts: usize, seed: u64) -> Result<Self> {
        let coefficients = EncodingCoefficients::of(dashed_box.matrix())?;
        let residuals = coefficients.residuals().map(|r| r.norm());
        Ok(Self {
            success_rate: coefficients.success_rate(),
            max_residual: coefficients.max_residual(),
            dashed_box,
            coefficients,
            residuals,
            feasible_restarts,
            restarts,
            seed,
        })
    }
}

#[derive(Clone, Debug)]
pub struct EncodingSearchOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Vacuum modes added to the box, entering and heralded empty.
    pub extra_vacuum_modes: usize,
    pub sqp: SqpOptions,
}

impl Default for EncodingSearchOptions {
    fn default() -> Self {
        Self { restarts: 100, seed: 0, extra_vacuum_modes: 0, sqp: SqpOptions::default() }
    }
}

struct Run {
    x: Vec<f64>,
    p: f64,
    violation: f64,
}

/// Maximizes `p` over boxes `exp(iH)` subject to the five complex equality
/// constraints: SQP from uniform random starts, repeated refinement of
/// promising feasible points, then a Gauss–Newton pull onto the constraint
/// surface. Start `k` draws from a ChaCha8 stream seeded with `seed`.
pub fn encoding_search(opts: &EncodingSearchOptions) -> Result<EncodingCandidate> {
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    let n = BOX_MODES + opts.extra_vacuum_modes;
    let coeffs = move |x: &[f64]| EncodingCoefficients::of(&exp_i_hermitian(x, n)).expect("box has ≥ 4 modes");
    let objective = |x: &[f64]| -coeffs(x).success_rate();
    let residuals = |x: &[f64]| coeffs(x).real_residuals();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.restarts).map(|_| (0..n * n).map(|_| rng.random_range(-PI..PI)).collect()).collect();

    let runs: Vec<Run> = starts
        .par_iter()
        .map(|x0| {
            let mut x = sqp_minimize(objective, residuals, x0, &opts.sqp).x;
            let c = coeffs(&x);
            if c.max_residual() < 1e-9 && c.success_rate() > 0.02 {
                let long = SqpOptions { max_iter: 3000, ..opts.sqp.clone() };
                for _ in 0..3 {
                    x = sqp_minimize(objective, residuals, &x, &long).x;
                }
            }
            let (x, _) = project_feasible(residuals, &x, 1e-14, 20);
            let c = coeffs(&x);
            Run { p: c.success_rate(), violation: c.max_residual(), x }
        })
        .collect();

    // p = 0 satisfies every constraint and encodes nothing
    let feasible: Vec<&Run> = runs.iter().filter(|r| r.violation < ENCODING_TOL && r.p > TRIVIAL_RATE).collect();
    let best = feasible.iter().copied().fold(None::<&Run>, |acc, r| match acc {
        Some(b) if r.p < b.p - 1e-12 || ((r.p - b.p).abs() <= 1e-12 && !lex_less(&r.x, &b.x)) => Some(b),
        _ => Some(r),
    });
    match best {
        Some(b) => {
            let u = ModeTransform::unitary(exp_i_hermitian(&b.x, n))?;
            EncodingCandidate::from_transform(u, opts.restarts, feasible.len(), opts.seed)
        }
        None => {
            let least = runs.iter().map(|r| r.violation).fold(f64::INFINITY, f64::min);
            Err(Error::Infeasible(format!(
                "no non-trivial encoding box met the constraints; least violation {least:e}"
            )))
        }
    }
}

/// `R(Γ2)|111⟩`, the resource state fed to the box.
pub fn resource_state() -> Result<PureState> {
    apply_transform(tritter().matrix(), &PureState::fock(&Occupation::from([1, 1, 1]))?)
}

/// The whole encoder on `6 + k` modes: modes `0..3` carry the code, mode 2
/// doubles as `s`, mode 3 is the auxiliary photon, modes 4 and 5 the
/// dual-rail input.
pub fn full_circuit(dashed_box: &ModeTransform) -> Result<ModeTransform> {
    let m = dashed_box.modes() + 2;
    let box_modes: Vec<usize> = (2..m).collect();
    Ok(embed(&tritter(), &[0, 1, 2], m)?.then(&embed(dashed_box, &box_modes, m)?))
}

/// Heralded output on the three code modes and its probability for the
/// dual-rail input `α|10⟩ + β|01⟩`.
pub fn encode_qubit(dashed_box: &ModeTransform, qubit: &LogicalQubit) -> Result<(DVector<C64>, f64)> {
    let circuit = full_circuit(dashed_box)?;
    let m = circuit.modes();
    let pad = |head: &[usize]| {
        let mut v = head.to_vec();
        v.resize(m, 0);
        Occupation(v)
    };
    let input = PureState::superposition(
        m,
        &[(pad(&[1, 1, 1, 1, 1, 0]), qubit.alpha_l), (pad(&[1, 1, 1, 1, 0, 1]), qubit.alpha_h)],
    )?;
    let out = apply_transform(circuit.matrix(), &input)?;
    let code_basis = FockBasis::new(3, 3)?;
    let v = DVector::from_iterator(
        code_basis.len(),
        code_basis.states().iter().map(|o| out.amplitude(&pad(&[o.0[0], o.0[1], o.0[2], 1, 1, 0]))),
    );
    let prob = v.norm_squared();
    Ok((v, prob))
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodingVerification {
    pub trials: usize,
    /// Smallest `|⟨α L + β H|ψ_out⟩|²/‖ψ_out‖²` over the trials.
    pub min_fidelity: f64,
    /// Largest `|P(herald) − p|`.
    pub max_probability_error: f64,
    pub kl: KLReport,
}

/// Runs [`encode_qubit`] on `trials` Haar-random qubits and checks the
/// heralded output against `√p (α|L⟩ + β|H⟩)`; the two heralded codewords
/// also go through the loss-recoverability check.
pub fn verify_encoding(candidate: &EncodingCandidate, trials: usize, seed: u64) -> Result<EncodingVerification> {
    if candidate.success_rate <= TRIVIAL_RATE {
        return Err(Error::Infeasible("candidate never heralds success".into()));
    }
    let (l, h) = codewords();
    let basis = FockBasis::new(3, 3)?;
    let (lv, hv) = (l.sector_vector(&basis), h.sector_vector(&basis));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_fidelity = f64::INFINITY;
    let mut max_probability_error: f64 = 0.0;
    for _ in 0..trials {
        let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
        let phi = rng.random_range(-PI..PI);
        let q = LogicalQubit::new(C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi));
        let (out, prob) = encode_qubit(&candidate.dashed_box, &q)?;
        let target = &lv * q.alpha_l + &hv * q.alpha_h;
        let fid = if prob > 0.0 { target.dotc(&out).norm_sqr() / prob } else { 0.0 };
        min_fidelity = min_fidelity.min(fid);
        max_probability_error = max_probability_error.max((prob - candidate.success_rate).abs());
    }
    let (out_l, _) = encode_qubit(&candidate.dashed_box, &LogicalQubit::l())?;
    let (out_h, _) = encode_qubit(&candidate.dashed_box, &LogicalQubit::h())?;
    let norm = |v: DVector<C64>| {
        let n = v.norm();
        if n > 0.0 { v / C64::new(n, 0.0) } else { v }
    };
    let code = CodeSubspace::from_vectors(basis.clone(), &[norm(out_l), norm(out_h)])?;
    let kl = kl_check(&code, &annihilators(&basis)?)?;
    Ok(EncodingVerification { trials, min_fidelity, max_probability_error, kl })
}

/// Corrective word for Bell outcome `k ∈ 0..4` of the teleportation step:
/// the outcome leaves the byproduct `corrective_words()[k]` on the encoded
/// qubit, and the word returned here undoes it.
pub fn teleportation_correction(outcome: usize) -> Result<GateWord> {
    let words = corrective_words();
    let byproduct = words
        .get(outcome)
        .ok_or_else(|| Error::InvalidParameter(format!("Bell outcome must be 0..4, got {outcome}")))?;
    corrective_gate(&byproduct.logical()?)
}

/// One element of a hypothesised encoder layout on the four box modes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LayoutElement {
    /// Splitter between two modes using reflectivity `r_k` (1-based index).
    Splitter { i: usize, j: usize, r: usize, sign: i32 },
    /// Phase shift on a mode; the value is scanned.
    Phase { mode: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct LayoutReport {
    pub reflectivities: [f64; 6],
    pub phases: Vec<f64>,
    pub success_rate: f64,
    pub max_residual: f64,
    pub confirmed: bool,
}

/// Reference reflectivities of the six encoder splitters.
pub const ENCODER_REFLECTIVITIES: [f64; 6] = [0.586, 0.728, 0.448, 0.625, 0.837, 0.984];

/// A six-splitter triangle over `[s, a, q_L, q_H]` with a phase on each
/// output of the first four splitters, `r_1 … r_6` in drawing order.
pub fn encoder_layout_hypothesis() -> Vec<LayoutElement> {
    use LayoutElement::{Phase, Splitter};
    vec![
        Splitter { i: 2, j: 3, r: 1, sign: 1 },
        Phase { mode: 3 },
        Splitter { i: 1, j: 2, r: 2, sign: 1 },
        Phase { mode: 2 },
        Splitter { i: 0, j: 1, r: 3, sign: 1 },
        Phase { mode: 1 },
        Splitter { i: 2, j: 3, r: 4, sign: 1 },
        Phase { mode: 0 },
        Splitter { i: 1, j: 2, r: 5, sign: 1 },
        Splitter { i: 2, j: 3, r: 6, sign: 1 },
    ]
}

fn layout_transform(layout: &[LayoutElement], r: &[f64; 6], phases: &[f64]) -> Result<ModeTransform> {
    let mut t = ModeTransform::identity(BOX_MODES);
    let mut slot = 0;
    for e in layout {
        let step = match *e {
            LayoutElement::Splitter { i, j, r: k, sign } => {
                if !(1..=6).contains(&k) {
                    return Err(Error::InvalidParameter(format!("reflectivity index {k} outside 1..=6")));
                }
                beam_splitter(i, j, r[k - 1], BsSign::from_int(sign)?, BOX_MODES)?
            }
            LayoutElement::Phase { mode } => {
                slot += 1;
                phase_shift(mode, phases[slot - 1], BOX_MODES)?
            }
        };
        t = t.then(&step);
    }
    Ok(t)
}

/// Scores a layout with fixed reflectivities: a grid over the unknown phases
/// (`steps` values per phase in `[−π, π)`), then a simplex refinement of the
/// best grid point, minimizing the largest constraint residual relative to
/// `|c_h1|` so that the trivial all-zero solution does not win.
pub fn reconstruct_layout(layout: &[LayoutElement], reflectivities: [f64; 6], steps: usize) -> Result<LayoutReport> {
    let slots = layout.iter().filter(|e| matches!(e, LayoutElement::Phase { .. })).count();
    if steps == 0 || (steps as f64).powi(slots as i32) > 5e6 {
        return Err(Error::InvalidParameter("phase grid empty or too large".into()));
    }
    let score = |phases: &[f64]| -> f64 {
        match layout_transform(layout, &reflectivities, phases).and_then(|t| EncodingCoefficients::of(t.matrix())) {
            Ok(c) => c.max_residual() / c.c_h1.norm().max(1e-6),
            Err(_) => f64::INFINITY,
        }
    };
    let grid: Vec<f64> = (0..steps).map(|k| -PI + 2.0 * PI * k as f64 / steps as f64).collect();
    let total = steps.pow(slots as u32);
    let best_idx = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut ph = vec![0.0; slots];
            for p in ph.iter_mut() {
                *p = grid[idx % steps];
                idx /= steps;
            }
            (score(&ph), ph)
        })
        .reduce(|| (f64::INFINITY, vec![]), |a, b| if b.0 < a.0 || (b.0 == a.0 && lex_less(&b.1, &a.1)) { b } else { a });
    let refined = nelder_mead(|ph| score(ph), &best_idx.1, &SimplexOptions { max_evals: 20_000, initial_step: 0.2, ..Default::default() });
    let phases: Vec<f64> = refined.x.iter().map(|p| (p + PI).rem_euclid(2.0 * PI) - PI).collect();
    let c = EncodingCoefficients::of(layout_transform(layout, &reflectivities, &phases)?.matrix())?;
    let (p, res) = (c.success_rate(), c.max_residual());
    Ok(LayoutReport {
        reflectivities,
        phases,
        success_rate: p,
        max_residual: res,
        confirmed: res < 1e-3 && (p - 0.0486).abs() < 5e-4,
    })
}
