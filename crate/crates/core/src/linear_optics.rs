//! Passive mode transformations and their action on Fock sectors.
//!
//! A transform `Ω` relates input to output creation operators as
//! `a_i† = Σ_j Ω_ij b_j†`, so rows index input modes and columns index output
//! modes. Cascading `first` and then `second` gives the transform
//! `first · second`, and the induced operator of the cascade is
//! `R(second) · R(first)`.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{max_abs, FockBasis, Occupation, PureState, Sector};
use crate::permanent::permanent;

const UNITARY_TOL: f64 = 1e-10;

/// `exp(2πi/3)`.
pub fn zeta() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Unitary,
    Subunitary,
}

#[derive(Clone, Debug)]
pub struct ModeTransform {
    matrix: DMatrix<C64>,
    kind: TransformKind,
}

impl ModeTransform {
    pub fn unitary(matrix: DMatrix<C64>) -> Result<Self> {
        let dev = unitarity_error(&matrix)?;
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { matrix, kind: TransformKind::Unitary })
    }

    /// Accepts any contraction, `Ω†Ω ≤ 1`.
    pub fn subunitary(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let top = largest_gram_eigenvalue(&matrix);
        if top > 1.0 + UNITARY_TOL {
            return Err(Error::NotSubunitary(top));
        }
        let kind = if unitarity_error(&matrix)? <= UNITARY_TOL {
            TransformKind::Unitary
        } else {
            TransformKind::Subunitary
        };
        Ok(Self { matrix, kind })
    }

    pub fn identity(modes: usize) -> Self {
        Self { matrix: DMatrix::identity(modes, modes), kind: TransformKind::Unitary }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    /// The cascade "`self`, then `next`".
    pub fn then(&self, next: &ModeTransform) -> Self {
        let kind = if self.kind == TransformKind::Unitary && next.kind == TransformKind::Unitary {
            TransformKind::Unitary
        } else {
            TransformKind::Subunitary
        };
        Self { matrix: &self.matrix * &next.matrix, kind }
    }

    /// `c · Ω` for `|c| ≤ 1`.
    pub fn scaled(&self, c: C64) -> Result<Self> {
        Self::subunitary(&self.matrix * c)
    }

    /// Multiplies by a global phase; the result stays unitary if `self` was.
    pub fn with_phase(&self, theta: f64) -> Self {
        Self { matrix: &self.matrix * C64::from_polar(1.0, theta), kind: self.kind }
    }
}

fn unitarity_error(m: &DMatrix<C64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let n = m.nrows();
    Ok(max_abs(&(m.adjoint() * m - DMatrix::<C64>::identity(n, n))))
}

fn largest_gram_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let gram = m.adjoint() * m;
    gram.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Orientation of the reflection sign in a beam splitter.
///
/// `Plus` is `[[t, r], [−r, t]]` on `(i, j)`, `Minus` is `[[t, −r], [r, t]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsSign {
    Plus,
    Minus,
}

impl BsSign {
    pub fn from_int(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Self::Plus),
            -1 => Ok(Self::Minus),
            _ => Err(Error::InvalidParameter(format!("beam splitter sign must be ±1, got {s}"))),
        }
    }

    fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

fn check_mode(i: usize, modes: usize) -> Result<()> {
    if i >= modes {
        return Err(Error::InvalidParameter(format!("mode {i} out of range for {modes} modes")));
    }
    Ok(())
}

/// Real beam splitter with amplitude reflectivity `r` between modes `i` and `j`.
pub fn beam_splitter(i: usize, j: usize, r: f64, sign: BsSign, modes: usize) -> Result<ModeTransform> {
    check_mode(i, modes)?;
    check_mode(j, modes)?;
    if i == j {
        return Err(Error::InvalidParameter("beam splitter modes must differ".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("reflectivity {r} outside [0, 1]")));
    }
    let t = (1.0 - r * r).sqrt();
    let s = sign.value();
    let mut m = DMatrix::<C64>::identity(modes, modes);
    m[(i, i)] = C64::new(t, 0.0);
    m[(j, j)] = C64::new(t, 0.0);
    m[(i, j)] = C64::new(s * r, 0.0);
    m[(j, i)] = C64::new(-s * r, 0.0);
    Ok(ModeTransform { matrix: m, kind: TransformKind::Unitary })
}

pub fn phase_shift(i: usize, phase: f64, modes: usize) -> Result<ModeTransform> {
    check_mode(i, modes)?;
    let mut m = DMatrix::<C64>::identity(modes, modes);
    m[(i, i)] = C64::from_polar(1.0, phase);
    Ok(ModeTransform { matrix: m, kind: TransformKind::Unitary })
}

/// Relabels modes `i` and `j`.
pub fn swap(i: usize, j: usize, modes: usize) -> Result<ModeTransform> {
    check_mode(i, modes)?;
    check_mode(j, modes)?;
    let mut m = DMatrix::<C64>::identity(modes, modes);
    if i != j {
        m[(i, i)] = C64::new(0.0, 0.0);
        m[(j, j)] = C64::new(0.0, 0.0);
        m[(i, j)] = C64::new(1.0, 0.0);
        m[(j, i)] = C64::new(1.0, 0.0);
    }
    Ok(ModeTransform { matrix: m, kind: TransformKind::Unitary })
}

/// The symmetric three-port splitter, `(1/√3) ζ^{(i−1)(j−1)}`.
pub fn tritter() -> ModeTransform {
    let z = zeta();
    let s = 1.0 / 3f64.sqrt();
    let m = DMatrix::from_fn(3, 3, |i, j| z.powi((i * j) as i32) * s);
    ModeTransform { matrix: m, kind: TransformKind::Unitary }
}

/// `diag(1, 1, ζ)`.
pub fn gamma3() -> ModeTransform {
    let mut m = DMatrix::<C64>::identity(3, 3);
    m[(2, 2)] = zeta();
    ModeTransform { matrix: m, kind: TransformKind::Unitary }
}

/// Embeds a `k × k` transform acting on the listed modes into `modes` modes.
pub fn embed(inner: &ModeTransform, targets: &[usize], modes: usize) -> Result<ModeTransform> {
    if targets.len() != inner.modes() {
        return Err(Error::DimensionMismatch { expected: inner.modes(), found: targets.len() });
    }
    for &t in targets {
        check_mode(t, modes)?;
    }
    let mut m = DMatrix::<C64>::identity(modes, modes);
    for (a, &i) in targets.iter().enumerate() {
        for (b, &j) in targets.iter().enumerate() {
            m[(i, j)] = inner.matrix[(a, b)];
        }
    }
    Ok(ModeTransform { matrix: m, kind: inner.kind })
}

/// Image of a single input Fock state under `R(Ω)`, as a vector over the
/// output basis of the same photon number. Works for any square `Ω`.
fn expand_column(omega: &DMatrix<C64>, input: &Occupation, out_basis: &FockBasis) -> DVector<C64> {
    let n = omega.nrows();
    let zero = C64::new(0.0, 0.0);
    // Monomial coefficients of ∏_i (Σ_j Ω_ij b_j†)^{k_i}, keyed by exponent vector.
    let mut poly: HashMap<Vec<usize>, C64> = HashMap::new();
    poly.insert(vec![0; n], C64::new(1.0, 0.0));
    for (i, &k) in input.0.iter().enumerate() {
        for _ in 0..k {
            let mut next: HashMap<Vec<usize>, C64> = HashMap::with_capacity(poly.len() * n);
            for (mono, c) in &poly {
                for j in 0..n {
                    let w = omega[(i, j)];
                    if w == zero {
                        continue;
                    }
                    let mut raised = mono.clone();
                    raised[j] += 1;
                    *next.entry(raised).or_insert(zero) += c * w;
                }
            }
            poly = next;
        }
    }
    let norm_in = input.factorial_product().sqrt();
    let mut out = DVector::zeros(out_basis.len());
    for (mono, c) in poly {
        let occ = Occupation(mono);
        if let Some(idx) = out_basis.index_of(&occ) {
            out[idx] = c * (occ.factorial_product().sqrt() / norm_in);
        }
    }
    out
}

/// Matrix of `R(Ω)` on one sector, by monomial expansion of each column.
pub fn induced_representation(transform: &ModeTransform, basis: &FockBasis) -> Result<DMatrix<C64>> {
    induced_matrix(transform.matrix(), basis)
}

/// Same as [`induced_representation`] for an arbitrary square matrix, which
/// need not be a contraction.
pub fn induced_matrix(omega: &DMatrix<C64>, basis: &FockBasis) -> Result<DMatrix<C64>> {
    if omega.nrows() != basis.modes() || !omega.is_square() {
        return Err(Error::DimensionMismatch { expected: basis.modes(), found: omega.nrows() });
    }
    let mut out = DMatrix::zeros(basis.len(), basis.len());
    for (col, occ) in basis.states().iter().enumerate() {
        out.set_column(col, &expand_column(omega, occ, basis));
    }
    Ok(out)
}

/// `⟨out|R(Ω)|in⟩` via the permanent of `Ω` with row `i` repeated `in_i`
/// times and column `j` repeated `out_j` times.
pub fn induced_matrix_element(transform: &ModeTransform, out: &Occupation, input: &Occupation) -> Result<C64> {
    matrix_element(transform.matrix(), out, input)
}

pub fn matrix_element(omega: &DMatrix<C64>, out: &Occupation, input: &Occupation) -> Result<C64> {
    let n = omega.nrows();
    if out.modes() != n || input.modes() != n {
        return Err(Error::DimensionMismatch { expected: n, found: out.modes().max(input.modes()) });
    }
    if out.photons() != input.photons() {
        return Ok(C64::new(0.0, 0.0));
    }
    let rows: Vec<usize> = repeated_indices(input);
    let cols: Vec<usize> = repeated_indices(out);
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |a, b| omega[(rows[a], cols[b])]);
    let norm = (input.factorial_product() * out.factorial_product()).sqrt();
    Ok(permanent(&sub) / norm)
}

fn repeated_indices(occ: &Occupation) -> Vec<usize> {
    occ.0
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat_n(i, k))
        .collect()
}

/// `R(Ω)|ψ⟩`, sector by sector, without materializing the full matrix.
pub fn apply_transform(omega: &DMatrix<C64>, state: &PureState) -> Result<PureState> {
    if omega.nrows() != state.modes() {
        return Err(Error::DimensionMismatch { expected: state.modes(), found: omega.nrows() });
    }
    let mut out = PureState::zero(state.modes());
    for sector in state.sectors() {
        let mut acc = DVector::zeros(sector.basis.len());
        for (occ, a) in sector.basis.states().iter().zip(sector.amplitudes.iter()) {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            acc += expand_column(omega, occ, &sector.basis) * *a;
        }
        out.insert_sector(Sector { basis: sector.basis.clone(), amplitudes: acc })?;
    }
    Ok(out)
}

/// A transform on signal and ancilla modes, an ancilla input, and the photon
/// pattern that must be seen on the ancilla outputs for acceptance.
#[derive(Clone, Debug)]
pub struct ConditionalNetwork {
    transform: ModeTransform,
    signal_modes: Vec<usize>,
    ancilla_modes: Vec<usize>,
    ancilla_input: Occupation,
    herald: Occupation,
}

impl ConditionalNetwork {
    /// Ancilla modes are all modes not listed in `signal_modes`, ascending.
    /// The same modes are monitored at the output.
    pub fn new(
        transform: ModeTransform,
        signal_modes: Vec<usize>,
        ancilla_input: Occupation,
        herald: Occupation,
    ) -> Result<Self> {
        let n = transform.modes();
        let signal: BTreeSet<usize> = signal_modes.iter().copied().collect();
        if signal.len() != signal_modes.len() {
            return Err(Error::InvalidParameter("signal modes repeat".into()));
        }
        for &m in &signal_modes {
            check_mode(m, n)?;
        }
        let ancilla_modes: Vec<usize> = (0..n).filter(|m| !signal.contains(m)).collect();
        if ancilla_input.modes() != ancilla_modes.len() {
            return Err(Error::DimensionMismatch { expected: ancilla_modes.len(), found: ancilla_input.modes() });
        }
        if herald.modes() != ancilla_modes.len() {
            return Err(Error::DimensionMismatch { expected: ancilla_modes.len(), found: herald.modes() });
        }
        Ok(Self { transform, signal_modes, ancilla_modes, ancilla_input, herald })
    }

    pub fn transform(&self) -> &ModeTransform {
        &self.transform
    }

    pub fn signal_modes(&self) -> &[usize] {
        &self.signal_modes
    }

    pub fn ancilla_modes(&self) -> &[usize] {
        &self.ancilla_modes
    }

    pub fn ancilla_input(&self) -> &Occupation {
        &self.ancilla_input
    }

    pub fn herald(&self) -> &Occupation {
        &self.herald
    }

    /// Vacuum-in, vacuum-heralded dilation of a contraction `Ω̃`.
    ///
    /// With `D_A = (1 − A A†)^{1/2}` and `D_{A†} = (1 − A† A)^{1/2}`, the block
    /// matrix `[[A, D_A], [D_{A†}, −A†]]` is unitary; its first `n` modes are
    /// the signal.
    pub fn from_contraction(sector: &ModeTransform) -> Result<Self> {
        let a = sector.matrix();
        let n = a.nrows();
        let id = DMatrix::<C64>::identity(n, n);
        let d_a = hermitian_sqrt(&(&id - a * a.adjoint()));
        let d_adj = hermitian_sqrt(&(&id - a.adjoint() * a));
        let mut u = DMatrix::<C64>::zeros(2 * n, 2 * n);
        u.view_mut((0, 0), (n, n)).copy_from(a);
        u.view_mut((0, n), (n, n)).copy_from(&d_a);
        u.view_mut((n, 0), (n, n)).copy_from(&d_adj);
        u.view_mut((n, n), (n, n)).copy_from(&(-a.adjoint()));
        let transform = ModeTransform::unitary(u)?;
        Self::new(transform, (0..n).collect(), Occupation::vacuum(n), Occupation::vacuum(n))
    }

    /// Herald-conditioned output on the signal modes (unnormalized) and its
    /// probability.
    pub fn apply_conditional(&self, signal_in: &PureState) -> Result<(PureState, f64)> {
        let ns = self.signal_modes.len();
        let n = self.transform.modes();
        if signal_in.modes() != ns {
            return Err(Error::DimensionMismatch { expected: ns, found: signal_in.modes() });
        }
        // Assemble the full input in the network's mode order.
        let mut full = PureState::zero(n);
        for (occ, a) in signal_in.terms() {
            full.add_amplitude(&self.merge(&occ, &self.ancilla_input), a)?;
        }
        let evolved = apply_transform(self.transform.matrix(), &full)?;
        let mut out = PureState::zero(ns);
        for (occ, a) in evolved.terms() {
            if occ.select(&self.ancilla_modes) == self.herald {
                out.add_amplitude(&occ.select(&self.signal_modes), a)?;
            }
        }
        let p = out.norm_sqr();
        Ok((out, p))
    }

    /// Matrix of the conditional map from the signal sector with `photons`
    /// photons to the sector it lands in, if any photons survive the herald.
    pub fn conditional_matrix(&self, photons: usize) -> Result<(Arc<FockBasis>, Arc<FockBasis>, DMatrix<C64>)> {
        let ns = self.signal_modes.len();
        let input = FockBasis::new(ns, photons)?;
        let total = photons + self.ancilla_input.photons();
        let out_photons = total.checked_sub(self.herald.photons());
        let output = FockBasis::new(ns, out_photons.unwrap_or(0))?;
        let mut m = DMatrix::zeros(output.len(), input.len());
        if out_photons.is_some() {
            for (col, occ) in input.states().iter().enumerate() {
                let (img, _) = self.apply_conditional(&PureState::fock(occ)?)?;
                m.set_column(col, &img.sector_vector(&output));
            }
        }
        Ok((input, output, m))
    }

    fn merge(&self, signal: &Occupation, ancilla: &Occupation) -> Occupation {
        let mut v = vec![0; self.transform.modes()];
        for (a, &m) in self.signal_modes.iter().enumerate() {
            v[m] = signal.0[a];
        }
        for (a, &m) in self.ancilla_modes.iter().enumerate() {
            v[m] = ancilla.0[a];
        }
        Occupation(v)
    }
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut d = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = C64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Per-mode attenuators: `|n_1…n_N⟩ → ∏ η_i^{n_i} |n_1…n_N⟩` when no photon
/// is seen in any reflected port.
pub fn attenuator(transmissivities: &[C64]) -> Result<ConditionalNetwork> {
    let n = transmissivities.len();
    for eta in transmissivities {
        if eta.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("|η| = {} exceeds 1", eta.norm())));
        }
    }
    let mut u = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for (i, &eta) in transmissivities.iter().enumerate() {
        let s = (1.0 - eta.norm_sqr()).max(0.0).sqrt();
        u[(i, i)] = eta;
        u[(i, n + i)] = C64::new(s, 0.0);
        u[(n + i, i)] = C64::new(-s, 0.0);
        u[(n + i, n + i)] = eta.conj();
    }
    ConditionalNetwork::new(
        ModeTransform::unitary(u)?,
        (0..n).collect(),
        Occupation::vacuum(n),
        Occupation::vacuum(n),
    )
}

/// One element of a network description file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    /// `[i, j, r, sign]`
    Bs(usize, usize, f64, i32),
    /// `[i, phi]`
    Phase(usize, f64),
    /// `[i, j]`
    Swap(usize, usize),
    /// `[i, j, k]`
    Tritter(usize, usize, usize),
    /// Row-major `[[[re, im], ...], ...]` acting on all modes.
    Matrix(Vec<Vec<(f64, f64)>>),
}

/// JSON network description consumed by the command-line tools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub modes: usize,
    pub elements: Vec<Element>,
    #[serde(default)]
    pub ancilla_input: Vec<usize>,
    #[serde(default)]
    pub herald: Vec<usize>,
    #[serde(default)]
    pub signal_modes: Option<Vec<usize>>,
}

impl NetworkSpec {
    /// The cascade of all elements, in file order.
    pub fn transform(&self) -> Result<ModeTransform> {
        let n = self.modes;
        let mut acc = ModeTransform::identity(n);
        for el in &self.elements {
            let step = match el {
                Element::Bs(i, j, r, s) => beam_splitter(*i, *j, *r, BsSign::from_int(*s)?, n)?,
                Element::Phase(i, phi) => phase_shift(*i, *phi, n)?,
                Element::Swap(i, j) => swap(*i, *j, n)?,
                Element::Tritter(i, j, k) => embed(&tritter(), &[*i, *j, *k], n)?,
                Element::Matrix(rows) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(Error::Format(format!("matrix element must be {n}×{n}")));
                    }
                    ModeTransform::subunitary(DMatrix::from_fn(n, n, |i, j| {
                        C64::new(rows[i][j].0, rows[i][j].1)
                    }))?
                }
            };
            acc = acc.then(&step);
        }
        Ok(acc)
    }

    pub fn network(&self) -> Result<ConditionalNetwork> {
        let signal = self.signal_modes.clone().unwrap_or_else(|| (0..self.modes).collect());
        let n_anc = self.modes - signal.len().min(self.modes);
        let pad = |v: &Vec<usize>| if v.is_empty() { vec![0; n_anc] } else { v.clone() };
        ConditionalNetwork::new(
            self.transform()?,
            signal,
            Occupation(pad(&self.ancilla_input)),
            Occupation(pad(&self.herald)),
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn identity_induces_identity() {
        let b = FockBasis::new(3, 3).unwrap();
        let r = induced_representation(&ModeTransform::identity(3), &b).unwrap();
        assert!(max_abs(&(r - DMatrix::identity(10, 10))) < 1e-15);
    }

    #[test]
    fn tritter_on_single_photons() {
        let b = FockBasis::new(3, 3).unwrap();
        let r = induced_representation(&tritter(), &b).unwrap();
        let col = b.index_of(&[1, 1, 1].into()).unwrap();
        let third = 2f64.sqrt() / 3.0;
        for (i, occ) in b.states().iter().enumerate() {
            let expected = match occ.0.as_slice() {
                [1, 1, 1] => -1.0 / 3f64.sqrt(),
                [3, 0, 0] | [0, 3, 0] | [0, 0, 3] => third,
                _ => 0.0,
            };
            assert!(close(r[(i, col)], C64::new(expected, 0.0), 1e-12), "{occ}: {}", r[(i, col)]);
        }
    }

    #[test]
    fn gamma3_fixes_triple_occupation() {
        let b = FockBasis::new(3, 3).unwrap();
        let r = induced_representation(&gamma3(), &b).unwrap();
        let i = b.index_of(&[0, 0, 3].into()).unwrap();
        assert!(close(r[(i, i)], C64::new(1.0, 0.0), 1e-12));
    }

    #[test]
    fn single_photon_element_is_matrix_entry() {
        let m = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.6, 0.0), C64::new(0.0, 0.8),
            C64::new(0.0, 0.8), C64::new(0.6, 0.0),
        ]);
        let u = ModeTransform::unitary(m.clone()).unwrap();
        let e = induced_matrix_element(&u, &[1, 0].into(), &[0, 1].into()).unwrap();
        assert_eq!(e, m[(1, 0)]);
    }

    #[test]
    fn permanent_path_on_tritter() {
        let t = tritter();
        let h: Occupation = [1, 1, 1].into();
        let e = induced_matrix_element(&t, &h, &h).unwrap();
        assert!(close(e, C64::new(-1.0 / 3f64.sqrt(), 0.0), 1e-12));
        let e = induced_matrix_element(&t, &[3, 0, 0].into(), &h).unwrap();
        assert!(close(e, C64::new(2f64.sqrt() / 3.0, 0.0), 1e-12));
    }

    #[test]
    fn photon_number_mismatch_is_zero() {
        let e = induced_matrix_element(&tritter(), &[1, 0, 0].into(), &[1, 1, 0].into()).unwrap();
        assert_eq!(e, C64::new(0.0, 0.0));
    }

    #[test]
    fn beam_splitter_limits() {
        let id = beam_splitter(0, 1, 0.0, BsSign::Plus, 2).unwrap();
        assert!(max_abs(&(id.matrix() - DMatrix::identity(2, 2))) < 1e-15);
        let sw = beam_splitter(0, 1, 1.0, BsSign::Plus, 2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0), C64::new(0.0, 0.0),
        ]);
        assert!(max_abs(&(sw.matrix() - expected)) < 1e-15);
        assert!(beam_splitter(0, 1, 1.5, BsSign::Plus, 2).is_err());
        assert!(beam_splitter(0, 0, 0.5, BsSign::Plus, 2).is_err());
        assert!(beam_splitter(0, 2, 0.5, BsSign::Plus, 2).is_err());
    }

    #[test]
    fn tritter_entries() {
        let t = tritter();
        let z = zeta();
        let s = 1.0 / 3f64.sqrt();
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(t.matrix()[(i, j)], z.powi((i * j) as i32) * s, 1e-15));
            }
        }
    }

    #[test]
    fn identity_network_is_transparent() {
        let net = ConditionalNetwork::new(
            ModeTransform::identity(3),
            vec![0, 1],
            Occupation::vacuum(1),
            Occupation::vacuum(1),
        )
        .unwrap();
        let psi = PureState::fock(&[1, 1].into()).unwrap();
        let (out, p) = net.apply_conditional(&psi).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(close(out.amplitude(&[1, 1].into()), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn hong_ou_mandel_heralding() {
        let bs = beam_splitter(0, 1, FRAC_1_SQRT_2, BsSign::Plus, 2).unwrap();
        // Herald zero photons in mode 1; the pair input |11⟩ is the signal of a
        // two-mode network whose second mode is also the monitored one, so
        // give it an explicit ancilla instead.
        let net = ConditionalNetwork::new(bs, vec![0], Occupation(vec![1]), Occupation(vec![0])).unwrap();
        let (out, p) = net.apply_conditional(&PureState::fock(&[1].into()).unwrap()).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((out.amplitude(&[2].into()).norm() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn herald_exceeding_photons_gives_zero() {
        let net = ConditionalNetwork::new(
            ModeTransform::identity(2),
            vec![0],
            Occupation(vec![0]),
            Occupation(vec![2]),
        )
        .unwrap();
        let (out, p) = net.apply_conditional(&PureState::fock(&[1].into()).unwrap()).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(out.norm_sqr(), 0.0);
    }

    #[test]
    fn attenuator_scales_by_powers() {
        let eta = C64::from_polar(0.7, 0.3);
        let att = attenuator(&[eta, C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let (out, _) = att.apply_conditional(&PureState::fock(&[3, 0, 0].into()).unwrap()).unwrap();
        assert!(close(out.amplitude(&[3, 0, 0].into()), eta.powi(3), 1e-12));

        let one = C64::new(1.0, 0.0);
        let att = attenuator(&[one, one, one]).unwrap();
        let (_, p) = att.apply_conditional(&PureState::fock(&[1, 1, 1].into()).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);

        assert!(attenuator(&[C64::new(1.1, 0.0)]).is_err());
    }

    #[test]
    fn attenuator_balances_l_components() {
        let kappa = FRAC_1_SQRT_2;
        let e = C64::new(kappa.powf(1.0 / 3.0), 0.0);
        let att = attenuator(&[e, e, C64::new(1.0, 0.0)]).unwrap();
        for (occ, expected) in [([3, 0, 0], kappa), ([0, 3, 0], kappa), ([0, 0, 3], 1.0)] {
            let (out, _) = att.apply_conditional(&PureState::fock(&occ.into()).unwrap()).unwrap();
            assert!(close(out.amplitude(&occ.into()), C64::new(expected, 0.0), 1e-12));
        }
    }

    #[test]
    fn contraction_dilation_matches_direct_expansion() {
        let a = tritter().scaled(C64::new(0.8, 0.0)).unwrap();
        let net = ConditionalNetwork::from_contraction(&a).unwrap();
        let b = FockBasis::new(3, 2).unwrap();
        let direct = induced_representation(&a, &b).unwrap();
        let (_, _, conditional) = net.conditional_matrix(2).unwrap();
        assert!(max_abs(&(direct - conditional)) < 1e-12);
    }

    #[test]
    fn non_contraction_rejected() {
        let m = DMatrix::<C64>::identity(2, 2) * C64::new(1.01, 0.0);
        assert!(ModeTransform::subunitary(m.clone()).is_err());
        assert!(ModeTransform::unitary(m).is_err());
    }

    #[test]
    fn network_spec_parses() {
        let json = r#"{"modes": 3,
            "elements": [{"bs": [1, 2, 0.5, 1]}, {"phase": [2, 0.25]}, {"swap": [1, 2]}],
            "ancilla_input": [1, 0], "herald": [1, 0], "signal_modes": [0]}"#;
        let spec = NetworkSpec::from_json(json).unwrap();
        let net = spec.network().unwrap();
        assert_eq!(net.ancilla_modes(), &[1, 2]);
        let expected = beam_splitter(1, 2, 0.5, BsSign::Plus, 3)
            .unwrap()
            .then(&phase_shift(2, 0.25, 3).unwrap())
            .then(&swap(1, 2, 3).unwrap());
        assert!(max_abs(&(net.transform().matrix() - expected.matrix())) < 1e-15);
    }
}
