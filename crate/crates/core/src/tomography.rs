//! State and process tomography of the encoded qubit with deterministic
//! gates and photon counting.
//!
//! Each setting applies a gate word and counts photons. The `(1,1,1)`
//! pattern projects onto one vertex of the tetrahedron `{H, T_1, T_2, T_3}`,
//! which vertex being fixed by the word's logical action. The four vertices
//! form an informationally complete frame, so linear inversion of the four
//! H-class frequencies returns the full (possibly subnormalized) logical
//! density matrix.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code_gates::{three_photon_code, GateWord, Generator, LogicalGate, LogicalQubit};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Occupation};
use crate::linear_optics::induced_representation;

/// Photon-counting outcome classes on three modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeClass {
    /// A permutation of `(3, 0, 0)`.
    L,
    /// `(1, 1, 1)`.
    H,
    /// Anything else, including other photon numbers.
    Err,
}

impl OutcomeClass {
    pub fn of(pattern: &Occupation) -> Self {
        let mut p = pattern.0.clone();
        p.sort_unstable();
        match p.as_slice() {
            [0, 0, 3] => OutcomeClass::L,
            [1, 1, 1] => OutcomeClass::H,
            _ => OutcomeClass::Err,
        }
    }
}

/// A pre-gate followed by photon counting. `vertex` is the logical state
/// whose projector the H-class outcome realizes.
#[derive(Clone, Debug)]
pub struct MeasurementSetting {
    pub word: GateWord,
    pub gate: LogicalGate,
    pub vertex: LogicalQubit,
    /// Index into `[H, T_1, T_2, T_3]`.
    pub vertex_index: usize,
}

impl MeasurementSetting {
    pub fn id(&self) -> String {
        self.word.to_string()
    }
}

/// The four settings `1, Γ2, Γ3Γ2, Γ3²Γ2`, each paired with the vertex
/// `U†|H⟩` that its counting projects onto. The pairing is computed, and
/// it is an error if the words do not cover all four vertices.
pub fn settings() -> Result<Vec<MeasurementSetting>> {
    use Generator::{Gamma2 as G2, Gamma3 as G3};
    let words = [GateWord::identity(), GateWord(vec![G2]), GateWord(vec![G3, G2]), GateWord(vec![G3, G3, G2])];
    let vertices = LogicalQubit::vertices();
    let mut out = Vec::with_capacity(4);
    for word in words {
        let gate = word.logical()?;
        let u = gate.normalized();
        let pulled = u.adjoint().column(1).into_owned();
        let q = LogicalQubit::new(pulled[0], pulled[1]).normalized()?;
        let vertex_index = vertices
            .iter()
            .position(|v| (v.fidelity(&q) - 1.0).abs() < 1e-10)
            .ok_or_else(|| Error::Tomography(format!("setting {word} does not project onto a tetrahedron vertex")))?;
        out.push(MeasurementSetting { word, gate, vertex: vertices[vertex_index], vertex_index });
    }
    let mut seen: Vec<usize> = out.iter().map(|s| s.vertex_index).collect();
    seen.sort_unstable();
    if seen != [0, 1, 2, 3] {
        return Err(Error::Tomography("settings do not cover the tetrahedron".into()));
    }
    Ok(out)
}

/// Exact probabilities `[L, H, err]` after the setting's gate. Blocks with
/// a photon number other than three count as `err`.
pub fn outcome_probabilities(state: &DensityMatrix, setting: &MeasurementSetting) -> Result<[f64; 3]> {
    if state.modes() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: state.modes() });
    }
    let transform = setting.word.transform();
    let mut probs = [0.0; 3];
    for block in state.blocks() {
        let r = induced_representation(&transform, &block.basis)?;
        let rho = &r * &block.matrix * r.adjoint();
        for (i, occ) in block.basis.states().iter().enumerate() {
            let p = rho[(i, i)].re;
            match OutcomeClass::of(occ) {
                OutcomeClass::L => probs[0] += p,
                OutcomeClass::H => probs[1] += p,
                OutcomeClass::Err => probs[2] += p,
            }
        }
    }
    // a subnormalized input leaves the remainder undetected; book it as err
    let missing = 1.0 - probs.iter().sum::<f64>();
    if missing > 0.0 {
        probs[2] += missing;
    }
    Ok(probs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    #[serde(rename = "L")]
    pub l: u64,
    #[serde(rename = "H")]
    pub h: u64,
    pub err: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: String,
    pub classes: ClassCounts,
    pub shots: u64,
}

impl CountRecord {
    pub fn validate(&self) -> Result<()> {
        let total = self.classes.l + self.classes.h + self.classes.err;
        if total != self.shots {
            return Err(Error::Tomography(format!(
                "counts for setting {} sum to {total}, not {} shots",
                self.setting, self.shots
            )));
        }
        if self.shots == 0 {
            return Err(Error::Tomography(format!("setting {} has no shots", self.setting)));
        }
        Ok(())
    }
}

const SAMPLE_BITS: u32 = 53;

/// Multinomial counts with ChaCha8 seeded by `seed`. Each shot draws a
/// 53-bit integer and compares it with integer cumulative thresholds, so a
/// seed gives the same record on every platform.
pub fn simulate_counts(state: &DensityMatrix, setting: &MeasurementSetting, shots: u64, seed: u64) -> Result<CountRecord> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let probs = outcome_probabilities(state, setting)?;
    let scale = (1u64 << SAMPLE_BITS) as f64;
    let total: f64 = probs.iter().sum();
    let t0 = ((probs[0] / total).clamp(0.0, 1.0) * scale).round() as u64;
    let t1 = (((probs[0] + probs[1]) / total).clamp(0.0, 1.0) * scale).round() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = ClassCounts::default();
    for _ in 0..shots {
        let u: u64 = rng.random::<u64>() >> (64 - SAMPLE_BITS);
        if u < t0 {
            counts.l += 1;
        } else if u < t1 {
            counts.h += 1;
        } else {
            counts.err += 1;
        }
    }
    Ok(CountRecord { setting: setting.id(), classes: counts, shots })
}

/// Exact-probability records, with `shots` scaling the (fractional) counts
/// away. Used where an infinite-statistics tomogram is wanted.
fn exact_frequencies(state: &DensityMatrix, sets: &[MeasurementSetting]) -> Result<Vec<(usize, f64, f64)>> {
    sets.iter()
        .map(|s| {
            let p = outcome_probabilities(state, s)?;
            Ok((s.vertex_index, p[1], p[0] + p[1]))
        })
        .collect()
}

/// Rows `(1, n_v)/2` of the frame: `P_H(v) = ⟨v|ρ|v⟩ = (t + s·n_v)/2` for a
/// logical operator with trace `t` and Bloch vector `s`.
pub fn frame_matrix() -> Matrix4<f64> {
    let vertices = LogicalQubit::vertices();
    Matrix4::from_fn(|v, j| {
        let b = vertices[v].bloch();
        0.5 * if j == 0 { 1.0 } else { b[j - 1] }
    })
}

/// `(t, s)` from the four H-class probabilities, indexed by vertex.
fn invert_frame(p_by_vertex: &Vector4<f64>) -> Result<Vector4<f64>> {
    frame_matrix()
        .lu()
        .solve(p_by_vertex)
        .ok_or_else(|| Error::Tomography("frame matrix is singular".into()))
}

/// `(t·1 + s·σ)/2` in the `(L, H)` basis.
pub fn logical_operator(t: f64, s: [f64; 3]) -> DMatrix<C64> {
    let hh = C64::new((t + s[2]) / 2.0, 0.0);
    let ll = C64::new((t - s[2]) / 2.0, 0.0);
    let hl = C64::new(s[0] / 2.0, -s[1] / 2.0);
    DMatrix::from_row_slice(2, 2, &[ll, hl.conj(), hl, hh])
}

/// Nearest (Frobenius) unit-trace positive semidefinite matrix to the
/// Hermitian part of `m`.
pub fn project_to_density(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    // Euclidean projection of the spectrum onto the probability simplex
    let mut sorted = vals.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for v in vals.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&v| C64::new(v, 0.0))));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Bloch vector of a 2×2 logical density matrix in the `(L, H)` basis.
pub fn bloch_of(rho: &DMatrix<C64>) -> [f64; 3] {
    let hl = rho[(1, 0)];
    [2.0 * hl.re, -2.0 * hl.im, (rho[(1, 1)] - rho[(0, 0)]).re]
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_to(rho: &DMatrix<C64>, psi: &LogicalQubit) -> f64 {
    let v = psi.vector();
    (v.adjoint() * rho * v)[(0, 0)].re
}

fn records_by_vertex(records: &[CountRecord], sets: &[MeasurementSetting]) -> Result<Vec<(usize, f64, f64)>> {
    let mut out = Vec::with_capacity(4);
    for s in sets {
        let word = &s.word;
        let rec = records
            .iter()
            .find(|r| GateWord::parse(&r.setting).map(|w| &w == word).unwrap_or(false))
            .ok_or_else(|| Error::Tomography(format!("no counts for setting {word}")))?;
        rec.validate()?;
        let n = rec.shots as f64;
        out.push((s.vertex_index, rec.classes.h as f64 / n, (rec.classes.l + rec.classes.h) as f64 / n));
    }
    Ok(out)
}

fn reconstruct_from(freqs: &[(usize, f64, f64)]) -> Result<DMatrix<C64>> {
    let mut p = Vector4::zeros();
    let mut accepted = 0.0;
    for &(v, ph, pin) in freqs {
        p[v] = ph;
        accepted += pin;
    }
    if accepted <= 0.0 {
        return Err(Error::Tomography("every shot landed in the error class; the state is outside the code".into()));
    }
    let ts = invert_frame(&p)?;
    let t = ts[0];
    if t <= 0.0 {
        return Err(Error::Tomography("reconstructed trace is not positive".into()));
    }
    let op = logical_operator(1.0, [ts[1] / t, ts[2] / t, ts[3] / t]);
    Ok(project_to_density(&op))
}

/// Linear inversion of the four settings' H-class frequencies, normalized
/// by the reconstructed trace and projected onto density matrices.
pub fn reconstruct_state(records: &[CountRecord]) -> Result<DMatrix<C64>> {
    let sets = settings()?;
    reconstruct_from(&records_by_vertex(records, &sets)?)
}

/// Reconstruction from exact outcome probabilities.
pub fn reconstruct_exact(state: &DensityMatrix) -> Result<DMatrix<C64>> {
    let sets = settings()?;
    reconstruct_from(&exact_frequencies(state, &sets)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProcessTomogram {
    /// Pauli transfer matrix: `(t', s') = T (1, s)` for the unnormalized
    /// logical output of each input.
    #[serde(serialize_with = "serialize_rows")]
    pub transfer: Matrix4<f64>,
    /// Mean probability, over the four probe states, of leaving the code.
    pub leakage: f64,
}

fn serialize_rows<S: serde::Serializer>(m: &Matrix4<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<[f64; 4]> = (0..4).map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)], m[(i, 3)]]).collect();
    rows.serialize(s)
}

impl ProcessTomogram {
    /// `tr(T)/4`.
    pub fn entanglement_fidelity(&self) -> f64 {
        self.transfer.trace() / 4.0
    }
}

/// Feeds `|H⟩, |T_1⟩, |T_2⟩, |T_3⟩` through `channel` and reconstructs the
/// transfer matrix from exact outcome probabilities. The channel may be
/// trace decreasing or leak out of the code; leaked weight appears as a
/// reduced output trace and in `leakage`.
pub fn process_tomography<F>(channel: F) -> Result<ProcessTomogram>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    let sets = settings()?;
    let code = three_photon_code();
    let vertices = LogicalQubit::vertices();
    let mut inputs = Matrix4::zeros();
    let mut outputs = Matrix4::zeros();
    let mut leakage = 0.0;
    for (k, q) in vertices.iter().enumerate() {
        let rho_in = DensityMatrix::from_pure(&code.encode(&[q.alpha_l, q.alpha_h]));
        let rho_out = channel(&rho_in)?;
        let freqs = exact_frequencies(&rho_out, &sets)?;
        let mut p = Vector4::zeros();
        for &(v, ph, _) in &freqs {
            p[v] = ph;
        }
        leakage += 1.0 - freqs[0].2;
        let b = q.bloch();
        inputs.set_column(k, &Vector4::new(1.0, b[0], b[1], b[2]));
        outputs.set_column(k, &invert_frame(&p)?);
    }
    let inv = inputs
        .try_inverse()
        .ok_or_else(|| Error::Tomography("probe states are not independent".into()))?;
    Ok(ProcessTomogram { transfer: outputs * inv, leakage: leakage / 4.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_gates::tetrahedron_state;
    use crate::fock::{max_abs, PureState};
    use crate::linear_optics::{apply_transform, gamma3};

    fn pure(q: &LogicalQubit) -> DensityMatrix {
        DensityMatrix::from_pure(&q.to_state())
    }

    #[test]
    fn class_partition() {
        let basis = crate::fock::FockBasis::new(3, 3).unwrap();
        let classes: Vec<OutcomeClass> = basis.states().iter().map(OutcomeClass::of).collect();
        assert_eq!(classes.iter().filter(|c| **c == OutcomeClass::L).count(), 3);
        assert_eq!(classes.iter().filter(|c| **c == OutcomeClass::H).count(), 1);
        assert_eq!(classes.iter().filter(|c| **c == OutcomeClass::Err).count(), 6);
    }

    #[test]
    fn setting_frame() {
        let s = settings().unwrap();
        let ids: Vec<(String, usize)> = s.iter().map(|s| (s.id(), s.vertex_index)).collect();
        assert_eq!(ids[0], ("1".to_string(), 0));
        assert_eq!(ids[1], ("Γ2".to_string(), 3));
        let svd = frame_matrix().svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        assert!(cond < 4.0, "{cond}");
        let v = LogicalQubit::vertices();
        for a in 0..4 {
            for b in (a + 1)..4 {
                let (x, y) = (v[a].bloch(), v[b].bloch());
                let dot: f64 = (0..3).map(|i| x[i] * y[i]).sum();
                assert!((dot + 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn h_and_t3_are_deterministic() {
        let s = settings().unwrap();
        let p = outcome_probabilities(&pure(&LogicalQubit::h()), &s[0]).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12);
        let rec = simulate_counts(&pure(&LogicalQubit::h()), &s[0], 500, 1).unwrap();
        assert_eq!(rec.classes.h, 500);
        let t3 = DensityMatrix::from_pure(&tetrahedron_state(3).unwrap());
        let p = outcome_probabilities(&t3, &s[1]).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12);
        for set in &s {
            assert!(outcome_probabilities(&t3, set).unwrap()[2].abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let s = settings().unwrap();
        let rho = pure(&LogicalQubit::tetrahedron(1).unwrap());
        let a = simulate_counts(&rho, &s[0], 1000, 42).unwrap();
        let b = simulate_counts(&rho, &s[0], 1000, 42).unwrap();
        let c = simulate_counts(&rho, &s[0], 1000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.validate().unwrap();
    }

    #[test]
    fn exact_round_trip() {
        let rho = reconstruct_exact(&pure(&LogicalQubit::h())).unwrap();
        let b = bloch_of(&rho);
        assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12 && (b[2] - 1.0).abs() < 1e-12);
        let q = LogicalQubit::new(C64::new(0.3, -0.4), C64::new(0.1, 0.5)).normalized().unwrap();
        let rho = reconstruct_exact(&pure(&q)).unwrap();
        assert!((fidelity_to(&rho, &q) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_t1() {
        let s = settings().unwrap();
        let q = LogicalQubit::tetrahedron(1).unwrap();
        let rho = pure(&q);
        let records: Vec<CountRecord> = s
            .iter()
            .enumerate()
            .map(|(i, set)| simulate_counts(&rho, set, 10_000, 7 + i as u64).unwrap())
            .collect();
        let est = reconstruct_state(&records).unwrap();
        assert!(fidelity_to(&est, &q) > 0.99);
        assert!(reconstruct_state(&records[..3]).is_err());
    }

    #[test]
    fn all_error_data_is_rejected() {
        let rec: Vec<CountRecord> = settings()
            .unwrap()
            .iter()
            .map(|s| CountRecord { setting: s.id(), classes: ClassCounts { l: 0, h: 0, err: 10 }, shots: 10 })
            .collect();
        assert!(matches!(reconstruct_state(&rec), Err(Error::Tomography(_))));
    }

    #[test]
    fn psd_projection() {
        let bad = logical_operator(1.0, [1.5, 0.0, 0.0]);
        let rho = project_to_density(&bad);
        let b = bloch_of(&rho);
        assert!((b[0] - 1.0).abs() < 1e-12 && (rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_and_gamma3_processes() {
        let id = process_tomography(|rho| Ok(rho.clone())).unwrap();
        assert!((id.transfer - Matrix4::identity()).abs().max() < 1e-10);
        assert!(id.leakage.abs() < 1e-12);

        let g3 = gamma3();
        let pt = process_tomography(|rho| {
            // pure probes only
            let b = rho.block(3).unwrap();
            let eig = b.matrix.clone().symmetric_eigen();
            let i = eig.eigenvalues.imax();
            let psi = PureState::from_sector(b.basis.clone(), eig.eigenvectors.column(i).into_owned());
            Ok(DensityMatrix::from_pure(&apply_transform(g3.matrix(), &psi)?))
        })
        .unwrap();
        let angle = 2.0 * std::f64::consts::PI / 3.0;
        let rot = pt.transfer.fixed_view::<3, 3>(1, 1).into_owned();
        assert!((rot[(2, 2)] - 1.0).abs() < 1e-10);
        assert!((rot[(0, 0)] - angle.cos()).abs() < 1e-10 && (rot[(1, 1)] - angle.cos()).abs() < 1e-10);
        assert!((rot[(0, 1)].abs() - angle.sin()).abs() < 1e-10);
        let _ = max_abs;
    }
}
