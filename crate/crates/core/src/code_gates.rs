//! The three-photon code `|L⟩ = (|300⟩+|030⟩+|003⟩)/√3`, `|H⟩ = |111⟩`, its
//! deterministic linear-optics gates and the classification of mode
//! transforms by how they treat the code.
//!
//! Logical vectors are ordered `(L, H)`. On the Bloch sphere `|H⟩` is the
//! north pole: `z = |α_H|² − |α_L|²`, `x = 2 Re(α_H α_L*)`, `y = 2 Im(α_L α_H*)`.
//! Gate words are products of mode matrices read left to right, so the word
//! `Γ3Γ2` is the transform `Γ3 · Γ2`: `Γ3` acts first.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{max_abs, Occupation, PureState};
use crate::linear_optics::{gamma3, induced_representation, tritter, zeta, ModeTransform};
use crate::qec_core::CodeSubspace;

const GATE_TOL: f64 = 1e-9;

/// `(|L⟩, |H⟩)`.
pub fn codewords() -> (PureState, PureState) {
    let s = C64::new(1.0 / 3f64.sqrt(), 0.0);
    let l = PureState::superposition(
        3,
        &[(Occupation::from([3, 0, 0]), s), (Occupation::from([0, 3, 0]), s), (Occupation::from([0, 0, 3]), s)],
    )
    .expect("three-mode occupations");
    let h = PureState::fock(&Occupation::from([1, 1, 1])).expect("three-mode occupation");
    (l, h)
}

pub fn three_photon_code() -> CodeSubspace {
    let (l, h) = codewords();
    CodeSubspace::new(&[l, h]).expect("codewords are orthonormal")
}

/// A state of the encoded qubit, `α_L|L⟩ + α_H|H⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogicalQubit {
    pub alpha_l: C64,
    pub alpha_h: C64,
}

impl LogicalQubit {
    pub fn new(alpha_l: C64, alpha_h: C64) -> Self {
        Self { alpha_l, alpha_h }
    }

    pub fn l() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::default())
    }

    pub fn h() -> Self {
        Self::new(C64::default(), C64::new(1.0, 0.0))
    }

    /// `(|H⟩ − √2 ζ^l |L⟩)/√3`, `l ∈ {1, 2, 3}`.
    pub fn tetrahedron(l: usize) -> Result<Self> {
        if !(1..=3).contains(&l) {
            return Err(Error::InvalidParameter(format!("tetrahedron index must be 1, 2 or 3, got {l}")));
        }
        let s = 1.0 / 3f64.sqrt();
        Ok(Self::new(-zeta().powi(l as i32) * (2f64.sqrt() * s), C64::new(s, 0.0)))
    }

    /// `[H, T_1, T_2, T_3]`.
    pub fn vertices() -> [Self; 4] {
        [
            Self::h(),
            Self::tetrahedron(1).unwrap(),
            Self::tetrahedron(2).unwrap(),
            Self::tetrahedron(3).unwrap(),
        ]
    }

    pub fn vector(&self) -> DVector<C64> {
        DVector::from_column_slice(&[self.alpha_l, self.alpha_h])
    }

    pub fn from_vector(v: &DVector<C64>) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha_l.norm_sqr() + self.alpha_h.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::NotNormalized(n));
        }
        let s = 1.0 / n.sqrt();
        Ok(Self::new(self.alpha_l * s, self.alpha_h * s))
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &Self) -> f64 {
        (self.alpha_l.conj() * other.alpha_l + self.alpha_h.conj() * other.alpha_h).norm_sqr()
    }

    pub fn bloch(&self) -> [f64; 3] {
        let hl = self.alpha_h * self.alpha_l.conj();
        [2.0 * hl.re, -2.0 * hl.im, self.alpha_h.norm_sqr() - self.alpha_l.norm_sqr()]
    }

    /// The Fock-space state on the three code modes.
    pub fn to_state(&self) -> PureState {
        three_photon_code().encode(&[self.alpha_l, self.alpha_h])
    }
}

/// `|T_l⟩` on the three code modes.
pub fn tetrahedron_state(l: usize) -> Result<PureState> {
    Ok(LogicalQubit::tetrahedron(l)?.to_state())
}

/// Max-norm distance between `a` and `e^{iθ} b` for the phase that best
/// aligns them.
pub fn projective_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    max_abs(&(a - b * phase))
}

/// Action of a transform on the code, in the `(L, H)` basis.
#[derive(Clone, Debug, Serialize)]
pub struct LogicalGate {
    #[serde(serialize_with = "crate::qec_core::serialize_matrix")]
    pub matrix: DMatrix<C64>,
    /// Spectral norm of `(1 − P) R P`.
    pub leakage: f64,
    /// Largest singular value of the logical block: the success amplitude of
    /// a heralded realization.
    pub scale: f64,
}

impl LogicalGate {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        let scale = spectral_norm(&matrix);
        Self { matrix, leakage: 0.0, scale }
    }

    /// `max |M†M/s² − 1|`; zero for a scaled unitary.
    pub fn unitarity_error(&self) -> f64 {
        if self.scale == 0.0 {
            return f64::INFINITY;
        }
        let u = &self.matrix / C64::new(self.scale, 0.0);
        max_abs(&(u.adjoint() * &u - DMatrix::identity(2, 2)))
    }

    /// The logical matrix scaled to unit norm with `det` made real positive.
    pub fn normalized(&self) -> DMatrix<C64> {
        let det = self.matrix[(0, 0)] * self.matrix[(1, 1)] - self.matrix[(0, 1)] * self.matrix[(1, 0)];
        if det.norm() == 0.0 {
            return self.matrix.clone() / C64::new(self.scale.max(f64::MIN_POSITIVE), 0.0);
        }
        &self.matrix / det.sqrt()
    }

    pub fn projectively_equal(&self, other: &LogicalGate, tol: f64) -> bool {
        projective_distance(&self.normalized(), &other.normalized()) < tol
    }

    pub fn is_projective_identity(&self, tol: f64) -> bool {
        projective_distance(&self.normalized(), &DMatrix::identity(2, 2)) < tol
    }

    pub fn apply(&self, q: &LogicalQubit) -> LogicalQubit {
        LogicalQubit::from_vector(&(&self.matrix * q.vector()))
    }

    /// `self` after `first`.
    pub fn after(&self, first: &LogicalGate) -> LogicalGate {
        let m = &self.matrix * &first.matrix;
        LogicalGate { scale: spectral_norm(&m), matrix: m, leakage: self.leakage.max(first.leakage) }
    }

    /// The Bloch-sphere rotation of the normalized gate.
    pub fn rotation(&self) -> Matrix3<f64> {
        let u = self.normalized();
        // in (H, L) order the Pauli matrices take their textbook form
        let swap = DMatrix::from_row_slice(2, 2, &[C64::default(), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::default()]);
        let u = &swap * u * &swap;
        let paulis = pauli();
        Matrix3::from_fn(|i, j| 0.5 * (&paulis[i] * &u * &paulis[j] * u.adjoint()).trace().re)
    }

    /// `(axis, angle)` of [`rotation`](Self::rotation); the axis is
    /// `[0, 0, 1]` for the identity and its sign is fixed to point into the
    /// upper half space (then `+x`, `+y`) for π rotations.
    pub fn axis_angle(&self) -> ([f64; 3], f64) {
        let r = self.rotation();
        let cos = (r.trace() - 1.0) / 2.0;
        let anti = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
        let angle = (anti.norm() / 2.0).atan2(cos);
        if angle < 1e-9 {
            return ([0.0, 0.0, 1.0], 0.0);
        }
        let axis = if (std::f64::consts::PI - angle).abs() < 1e-6 {
            // R = 2nnᵀ − 1
            let m = (r + Matrix3::identity()) / 2.0;
            let col = (0..3).max_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)])).unwrap();
            let mut n: Vector3<f64> = m.column(col).into_owned().normalize();
            let lead = if n.z.abs() > 1e-9 { n.z } else if n.x.abs() > 1e-9 { n.x } else { n.y };
            if lead < 0.0 {
                n = -n;
            }
            n
        } else {
            anti.normalize()
        };
        ([axis.x, axis.y, axis.z], angle)
    }
}

fn pauli() -> [DMatrix<C64>; 3] {
    let o = C64::default();
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        DMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

pub(crate) fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Logical block and leakage of `R(Ω̃)` on the code.
pub fn logical_action(transform: &ModeTransform) -> Result<LogicalGate> {
    if transform.modes() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: transform.modes() });
    }
    let code = three_photon_code();
    let r = induced_representation(transform, code.basis())?;
    let v = code.vectors();
    let rv = &r * v;
    let matrix = v.adjoint() * &rv;
    let leaked = &rv - v * &matrix;
    Ok(LogicalGate { scale: spectral_norm(&matrix), leakage: spectral_norm(&leaked), matrix })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Generator {
    #[serde(rename = "Γ2")]
    Gamma2,
    #[serde(rename = "Γ3")]
    Gamma3,
}

impl Generator {
    pub fn transform(self) -> ModeTransform {
        match self {
            Generator::Gamma2 => tritter(),
            Generator::Gamma3 => gamma3(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Gamma2 => write!(f, "Γ2"),
            Generator::Gamma3 => write!(f, "Γ3"),
        }
    }
}

/// A product of generators, read left to right as a product of mode matrices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GateWord(pub Vec<Generator>);

impl GateWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn transform(&self) -> ModeTransform {
        self.0.iter().fold(ModeTransform::identity(3), |acc, g| acc.then(&g.transform()))
    }

    pub fn logical(&self) -> Result<LogicalGate> {
        logical_action(&self.transform())
    }

    pub fn append(&self, g: Generator) -> Self {
        let mut w = self.0.clone();
        w.push(g);
        Self(w)
    }

    /// Parses words such as `Γ3Γ2Γ3²`, `G3 G2 G3^2` or `1` (empty word).
    pub fn parse(s: &str) -> Result<Self> {
        let cleaned: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '^' && *c != '·' && *c != '*')
            .map(|c| match c {
                'Γ' | 'g' | 'G' => 'G',
                '²' => '2',
                '³' => '3',
                c => c,
            })
            .collect();
        if cleaned.is_empty() || cleaned == "1" || cleaned.eq_ignore_ascii_case("id") {
            return Ok(Self::identity());
        }
        let bad = || Error::Format(format!("cannot parse gate word {s:?}"));
        let chars: Vec<char> = cleaned.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i] != 'G' || i + 1 >= chars.len() {
                return Err(bad());
            }
            let g = match chars[i + 1] {
                '2' => Generator::Gamma2,
                '3' => Generator::Gamma3,
                _ => return Err(bad()),
            };
            i += 2;
            let mut power = 1;
            if i < chars.len() && chars[i].is_ascii_digit() {
                power = chars[i].to_digit(10).unwrap() as usize;
                i += 1;
            }
            out.extend(std::iter::repeat_n(g, power));
        }
        Ok(Self(out))
    }
}

impl fmt::Display for GateWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut i = 0;
        while i < self.0.len() {
            let g = self.0[i];
            let run = self.0[i..].iter().take_while(|&&x| x == g).count();
            write!(f, "{g}")?;
            match run {
                1 => {}
                2 => write!(f, "²")?,
                3 => write!(f, "³")?,
                n => write!(f, "^{n}")?,
            }
            i += run;
        }
        Ok(())
    }
}

impl Serialize for GateWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupElement {
    pub word: GateWord,
    pub gate: LogicalGate,
    pub axis: [f64; 3],
    pub angle: f64,
    /// `perm[v]` is the index of the image of vertex `v` in `[H, T_1, T_2, T_3]`.
    pub vertex_permutation: [usize; 4],
}

const CLOSURE_GUARD: usize = 1000;

/// Where each tetrahedron vertex goes under `gate`.
pub fn vertex_permutation(gate: &LogicalGate) -> Result<[usize; 4]> {
    let vertices = LogicalQubit::vertices();
    let mut perm = [0; 4];
    for (v, q) in vertices.iter().enumerate() {
        let image = gate.apply(q).normalized()?;
        perm[v] = vertices
            .iter()
            .position(|w| (w.fidelity(&image) - 1.0).abs() < 1e-10)
            .ok_or_else(|| Error::InvalidParameter("gate does not permute the tetrahedron vertices".into()))?;
    }
    Ok(perm)
}

/// Breadth-first closure of `{Γ2, Γ3}` up to global phase. Words are the
/// shortest found, generators tried in the order Γ2, Γ3.
pub fn group_closure() -> Result<Vec<GroupElement>> {
    let mut elements: Vec<(GateWord, LogicalGate)> = vec![(GateWord::identity(), GateWord::identity().logical()?)];
    let mut frontier = 0;
    let mut products = 0;
    while frontier < elements.len() {
        let word = elements[frontier].0.clone();
        for g in [Generator::Gamma2, Generator::Gamma3] {
            products += 1;
            if products > CLOSURE_GUARD {
                return Err(Error::InvalidParameter("group closure did not terminate".into()));
            }
            let next = word.append(g);
            let gate = next.logical()?;
            if gate.leakage > GATE_TOL || gate.unitarity_error() > GATE_TOL {
                return Err(Error::InvalidParameter(format!("{next} does not act unitarily on the code")));
            }
            if !elements.iter().any(|(_, e)| e.projectively_equal(&gate, 1e-9)) {
                elements.push((next, gate));
            }
        }
        frontier += 1;
    }
    elements
        .into_iter()
        .map(|(word, gate)| {
            let (axis, angle) = gate.axis_angle();
            let vertex_permutation = vertex_permutation(&gate)?;
            Ok(GroupElement { word, gate, axis, angle, vertex_permutation })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    /// The code is mapped onto itself by a multiple of a unitary.
    PreservingUnitary { scale: f64 },
    /// Every codeword is sent to zero.
    CodeAnnihilating,
    /// Leakage out of the code, or a non-unitary logical action.
    NonPreserving { leakage: f64, unitarity_error: f64 },
}

/// Numeric verdict at tolerance `1e-9`.
pub fn classify_preserving(transform: &ModeTransform) -> Result<Verdict> {
    let gate = logical_action(transform)?;
    if gate.leakage > GATE_TOL {
        return Ok(Verdict::NonPreserving { leakage: gate.leakage, unitarity_error: gate.unitarity_error() });
    }
    if gate.scale <= GATE_TOL {
        return Ok(Verdict::CodeAnnihilating);
    }
    let err = gate.unitarity_error();
    if err > GATE_TOL {
        return Ok(Verdict::NonPreserving { leakage: gate.leakage, unitarity_error: err });
    }
    Ok(Verdict::PreservingUnitary { scale: gate.scale })
}

/// Words undoing the π rotations of the four-element subgroup, identity first.
pub fn corrective_words() -> [GateWord; 4] {
    use Generator::{Gamma2 as G2, Gamma3 as G3};
    [
        GateWord::identity(),
        GateWord(vec![G2]),
        GateWord(vec![G3, G2, G3, G3]),
        GateWord(vec![G3, G3, G2, G3]),
    ]
}

/// The word from [`corrective_words`] that, applied after `g`, gives the
/// identity up to phase. Errors if `g` is not in the subgroup.
pub fn corrective_gate(g: &LogicalGate) -> Result<GateWord> {
    for w in corrective_words() {
        if w.logical()?.after(g).is_projective_identity(1e-10) {
            return Ok(w);
        }
    }
    Err(Error::NotInSubgroup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_optics::{beam_splitter, embed, BsSign};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn codeword_basics() {
        let (l, h) = codewords();
        assert!((l.norm_sqr() - 1.0).abs() < 1e-15 && (h.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(l.inner(&h).norm() < 1e-15);
        assert!((l.amplitude(&Occupation::from([3, 0, 0])).re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tetrahedron_geometry() {
        let h = LogicalQubit::h();
        let z = zeta();
        for l in 1..=3 {
            let t = LogicalQubit::tetrahedron(l).unwrap();
            assert!((t.norm_sqr() - 1.0).abs() < 1e-15);
            assert!((h.fidelity(&t) - 1.0 / 3.0).abs() < 1e-15);
            for m in 1..=3 {
                if m != l {
                    assert!((t.fidelity(&LogicalQubit::tetrahedron(m).unwrap()) - 1.0 / 3.0).abs() < 1e-14);
                }
            }
        }
        let t1 = LogicalQubit::tetrahedron(1).unwrap();
        let t2 = LogicalQubit::tetrahedron(2).unwrap();
        let overlap = t1.alpha_l.conj() * t2.alpha_l + t1.alpha_h.conj() * t2.alpha_h;
        assert!((overlap - (c(1.0) + z * 2.0) / 3.0).norm() < 1e-15);
        let sum = LogicalQubit::vertices().iter().fold([0.0; 3], |acc, q| {
            let b = q.bloch();
            [acc[0] + b[0], acc[1] + b[1], acc[2] + b[2]]
        });
        assert!(sum.iter().all(|x| x.abs() < 1e-12));
        assert!(LogicalQubit::tetrahedron(4).is_err());
        let s = tetrahedron_state(3).unwrap();
        assert!((s.inner(&codewords().1).norm() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gamma3_is_phase_gate() {
        let g = logical_action(&gamma3()).unwrap();
        assert!(g.leakage < 1e-12);
        let expected = DMatrix::from_row_slice(2, 2, &[c(1.0), C64::default(), C64::default(), zeta()]);
        assert!(projective_distance(&g.matrix, &expected) < 1e-12);
    }

    #[test]
    fn gamma2_prepares_t3() {
        let g = logical_action(&tritter()).unwrap();
        assert!(g.leakage < 1e-12);
        let image = g.apply(&LogicalQubit::h());
        let t3 = LogicalQubit::tetrahedron(3).unwrap();
        assert!((image.alpha_l + t3.alpha_l).norm() < 1e-12 && (image.alpha_h + t3.alpha_h).norm() < 1e-12);
    }

    #[test]
    fn random_unitary_leaks() {
        let theta = 0.7;
        let m = DMatrix::from_fn(3, 3, |i, j| C64::from_polar(1.0, theta * (i * 3 + j * j) as f64) / 3f64.sqrt());
        // orthonormalize
        let q = m.qr().q();
        let g = logical_action(&ModeTransform::unitary(q).unwrap()).unwrap();
        assert!(g.leakage > 0.1, "{}", g.leakage);
    }

    #[test]
    fn closure_is_tetrahedral() {
        let group = group_closure().unwrap();
        assert_eq!(group.len(), 12);
        let pi_rotations = group.iter().filter(|e| (e.angle - std::f64::consts::PI).abs() < 1e-9).count();
        let thirds = group.iter().filter(|e| (e.angle - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-9).count();
        assert_eq!((pi_rotations, thirds), (3, 8));
        let mut perms: Vec<[usize; 4]> = group.iter().map(|e| e.vertex_permutation).collect();
        perms.sort();
        perms.dedup();
        assert_eq!(perms.len(), 12);
    }

    #[test]
    fn generator_orders() {
        let g3 = GateWord(vec![Generator::Gamma3; 3]).logical().unwrap();
        assert!(g3.is_projective_identity(1e-10));
        assert!(!GateWord(vec![Generator::Gamma3]).logical().unwrap().is_projective_identity(1e-3));
        let g2 = GateWord(vec![Generator::Gamma2]).logical().unwrap();
        assert!(g2.after(&g2).is_projective_identity(1e-10));
        assert!((g2.axis_angle().1 - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn word_display_and_parse() {
        let w = GateWord::parse("Γ3Γ2Γ3²").unwrap();
        assert_eq!(w.0.len(), 4);
        assert_eq!(w.to_string(), "Γ3Γ2Γ3²");
        assert_eq!(GateWord::parse("G3^2 G2 G3").unwrap(), corrective_words()[3]);
        assert!(GateWord::parse("1").unwrap().is_identity());
        assert!(GateWord::parse("X2").is_err());
    }

    #[test]
    fn classifier_battery() {
        assert!(matches!(classify_preserving(&gamma3()).unwrap(), Verdict::PreservingUnitary { .. }));
        let z = zeta();
        let perm = DMatrix::from_row_slice(3, 3, &[C64::default(), z, C64::default(), C64::default(), C64::default(), z * z, c(1.0), C64::default(), C64::default()]);
        assert!(matches!(classify_preserving(&ModeTransform::unitary(perm).unwrap()).unwrap(), Verdict::PreservingUnitary { .. }));
        match classify_preserving(&tritter().scaled(c(0.9)).unwrap()).unwrap() {
            Verdict::PreservingUnitary { scale } => assert!((scale - 0.729).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        let bs = embed(&beam_splitter(0, 1, (std::f64::consts::PI / 7.0).sin(), BsSign::Plus, 2).unwrap(), &[0, 1], 3).unwrap();
        match classify_preserving(&bs).unwrap() {
            Verdict::NonPreserving { leakage, .. } => assert!(leakage > 0.01),
            v => panic!("{v:?}"),
        }
        // rank one with row weights (1, −1, 0): both codewords vanish
        let s = 1.0 / 2f64.sqrt();
        let dead = DMatrix::from_row_slice(3, 3, &[c(s), c(0.0), c(0.0), c(-s), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
        assert_eq!(classify_preserving(&ModeTransform::subunitary(dead).unwrap()).unwrap(), Verdict::CodeAnnihilating);
    }

    #[test]
    fn corrective_words_invert_pi_rotations() {
        assert!(corrective_gate(&GateWord::identity().logical().unwrap()).unwrap().is_identity());
        let words = corrective_words();
        for (i, w) in words.iter().enumerate().skip(1) {
            let g = w.logical().unwrap();
            assert!((g.axis_angle().1 - std::f64::consts::PI).abs() < 1e-9, "{w}");
            assert_eq!(&corrective_gate(&g).unwrap(), w);
            let hits = words[1..].iter().filter(|v| v.logical().unwrap().after(&g).is_projective_identity(1e-10)).count();
            assert_eq!(hits, 1, "{i}");
        }
        assert!(matches!(corrective_gate(&gamma3_logical()), Err(Error::NotInSubgroup)));
    }

    fn gamma3_logical() -> LogicalGate {
        logical_action(&gamma3()).unwrap()
    }
}
