//! Code subspaces, the Knill–Laflamme test, numeric no-go witnesses and an
//! idealized recovery channel.
//!
//! The recovery built here is an abstract channel on the Fock space. It is
//! not a linear-optics circuit, and nothing in this module claims one exists.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{max_abs, FockBasis, PureState, SectorOperator};
use crate::loss_channel::{annihilation, KrausSet, LossParameters};

/// Tolerance for [`KLReport::satisfied`].
pub const KL_TOLERANCE: f64 = 1e-9;

/// An orthonormal set of codewords in a single photon-number sector.
#[derive(Clone, Debug)]
pub struct CodeSubspace {
    basis: Arc<FockBasis>,
    /// Codewords as columns.
    vectors: DMatrix<C64>,
    projector: DMatrix<C64>,
}

impl CodeSubspace {
    pub fn new(codewords: &[PureState]) -> Result<Self> {
        let first = codewords
            .first()
            .ok_or_else(|| Error::InvalidParameter("a code needs at least one codeword".into()))?;
        let mut sectors = first.sectors().filter(|s| s.amplitudes.iter().any(|a| a.norm() > 0.0));
        let sector = sectors
            .next()
            .ok_or_else(|| Error::InvalidParameter("codeword is the zero vector".into()))?;
        if sectors.next().is_some() {
            return Err(Error::InvalidParameter("codewords must have a definite photon number".into()));
        }
        let basis = sector.basis.clone();
        let mut columns = Vec::with_capacity(codewords.len());
        for w in codewords {
            if w.modes() != basis.modes() {
                return Err(Error::DimensionMismatch { expected: basis.modes(), found: w.modes() });
            }
            let stray = w.norm_sqr() - w.sector_vector(&basis).norm_squared();
            if stray.abs() > 1e-20 {
                return Err(Error::InvalidParameter("codewords must share one photon-number sector".into()));
            }
            columns.push(w.sector_vector(&basis));
        }
        Self::from_vectors(basis, &columns)
    }

    pub fn from_vectors(basis: Arc<FockBasis>, columns: &[DVector<C64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter("a code needs at least one codeword".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != basis.len()) {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: c.len() });
        }
        let vectors = DMatrix::from_columns(columns);
        let gram = vectors.adjoint() * &vectors;
        let dev = max_abs(&(gram - DMatrix::identity(columns.len(), columns.len())));
        if dev > 1e-10 {
            return Err(Error::NotOrthonormal(dev));
        }
        let projector = &vectors * vectors.adjoint();
        Ok(Self { basis, vectors, projector })
    }

    /// The whole sector as a code.
    pub fn full_sector(basis: Arc<FockBasis>) -> Self {
        let n = basis.len();
        let vectors = DMatrix::identity(n, n);
        Self { basis, projector: vectors.clone(), vectors }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn photons(&self) -> usize {
        self.basis.photons()
    }

    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn projector(&self) -> &DMatrix<C64> {
        &self.projector
    }

    /// Codewords as the columns of a `sector × rank` isometry.
    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn codeword(&self, i: usize) -> PureState {
        PureState::from_sector(self.basis.clone(), self.vectors.column(i).into_owned())
    }

    /// `Σ c_i |w_i⟩`.
    pub fn encode(&self, coefficients: &[C64]) -> PureState {
        let c = DVector::from_column_slice(coefficients);
        PureState::from_sector(self.basis.clone(), &self.vectors * c)
    }

    /// `P ⊗ P'` as a code on the concatenated modes.
    pub fn tensor(&self, ancilla: &PureState) -> Result<Self> {
        let words: Vec<PureState> = (0..self.rank())
            .map(|i| self.codeword(i).tensor(ancilla))
            .collect::<Result<_>>()?;
        Self::new(&words)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KLReport {
    #[serde(serialize_with = "serialize_matrix")]
    pub g_matrix: DMatrix<C64>,
    pub residual: f64,
    pub satisfied: bool,
}

impl KLReport {
    /// `max |G − g·1|` with `g` the mean diagonal entry.
    pub fn scalar_deviation(&self) -> f64 {
        let n = self.g_matrix.nrows();
        let g = self.g_matrix.trace() / n as f64;
        max_abs(&(&self.g_matrix - DMatrix::identity(n, n) * g))
    }
}

pub(crate) fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<(f64, f64)> = (0..m.ncols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Least-squares `G_ij = tr(P E_i†E_j P)/rank` and the worst deviation of
/// `P E_i†E_j P` from `G_ij P`.
pub fn kl_check(code: &CodeSubspace, errors: &[SectorOperator]) -> Result<KLReport> {
    for e in errors {
        if !e.source.same_sector(code.basis()) {
            return Err(Error::InvalidParameter("error operator does not act on the code's sector".into()));
        }
    }
    let p = code.projector();
    let rank = code.rank() as f64;
    let n = errors.len();
    let mut g = DMatrix::<C64>::zeros(n, n);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = p * errors[i].adjoint_times(&errors[j]) * p;
            let gij = m.trace() / rank;
            residual = residual.max(max_abs(&(m - p * gij)));
            g[(i, j)] = gij;
        }
    }
    Ok(KLReport { g_matrix: g, residual, satisfied: residual <= KL_TOLERANCE })
}

/// Bare annihilation operators on the code's sector.
pub fn annihilators(basis: &Arc<FockBasis>) -> Result<Vec<SectorOperator>> {
    (0..basis.modes()).map(|i| annihilation(i, basis)).collect()
}

/// Runs the recoverability test on `input ⊗ ancilla` with single-photon
/// annihilation errors. A nonzero residual rules out any passive,
/// deterministic network encoding that input into a loss-tolerant code.
pub fn encoding_nogo_witness(input: &CodeSubspace, ancilla: Option<&PureState>) -> Result<KLReport> {
    let joint = match ancilla {
        Some(a) => input.tensor(a)?,
        None => input.clone(),
    };
    kl_check(&joint, &annihilators(joint.basis())?)
}

/// The operator `Σ Λ_ij â_i†â_j` on `basis` for a Hermitian mode matrix `Λ`.
pub fn number_conserving_operator(lambda: &DMatrix<C64>, basis: &Arc<FockBasis>) -> Result<DMatrix<C64>> {
    let n = basis.modes();
    if lambda.nrows() != n || lambda.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: lambda.nrows() });
    }
    let ops = annihilators(basis)?;
    let mut out = DMatrix::<C64>::zeros(basis.len(), basis.len());
    for i in 0..n {
        for j in 0..n {
            if lambda[(i, j)] != C64::default() {
                out += ops[i].adjoint_times(&ops[j]) * lambda[(i, j)];
            }
        }
    }
    Ok(out)
}

/// The `N² − 1` Hermitian generators of su(N): symmetric and antisymmetric
/// off-diagonal pairs, then consecutive diagonal differences.
pub fn su_generators(n: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = DMatrix::<C64>::zeros(n, n);
            s[(i, j)] = C64::new(1.0, 0.0);
            s[(j, i)] = C64::new(1.0, 0.0);
            out.push(s);
            // i(â_i†â_j − â_j†â_i)
            let mut a = DMatrix::<C64>::zeros(n, n);
            a[(i, j)] = C64::new(0.0, 1.0);
            a[(j, i)] = C64::new(0.0, -1.0);
            out.push(a);
        }
    }
    for i in 0..n.saturating_sub(1) {
        let mut d = DMatrix::<C64>::zeros(n, n);
        d[(i, i)] = C64::new(1.0, 0.0);
        d[(i + 1, i + 1)] = C64::new(-1.0, 0.0);
        out.push(d);
    }
    out
}

/// `max_Λ ‖P R̂(Λ) P‖_max` over the su(N) generators. Zero means no
/// continuous family of passive gates acts within the code. Refuses codes
/// whose error matrix is not proportional to the identity.
pub fn lie_algebra_witness(code: &CodeSubspace) -> Result<f64> {
    let report = kl_check(code, &annihilators(code.basis())?)?;
    let dev = report.scalar_deviation();
    if dev > KL_TOLERANCE {
        return Err(Error::GNotScalar(dev));
    }
    let p = code.projector();
    let mut worst: f64 = 0.0;
    for lambda in su_generators(code.modes()) {
        let r = number_conserving_operator(&lambda, code.basis())?;
        worst = worst.max(max_abs(&(p * r * p)));
    }
    Ok(worst)
}

/// Kraus operators of a trace-decreasing recovery channel. Photon-number
/// sectors without a recovery operator are discarded.
#[derive(Clone, Debug)]
pub struct RecoveryMap {
    code: CodeSubspace,
    operators: Vec<SectorOperator>,
}

impl RecoveryMap {
    /// Projection onto the code; no correction.
    pub fn identity(code: &CodeSubspace) -> Self {
        let op = SectorOperator {
            source: code.basis().clone(),
            target: Some(code.basis().clone()),
            matrix: code.projector().clone(),
        };
        Self { code: code.clone(), operators: vec![op] }
    }

    pub fn code(&self) -> &CodeSubspace {
        &self.code
    }

    pub fn operators(&self) -> &[SectorOperator] {
        &self.operators
    }

    /// `max |Σ R†R − Π|` per source sector, where `Π` is the projector onto
    /// the operators' joint support. Zero means the map is a partial isometry.
    pub fn isometry_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut sectors: Vec<usize> = self.operators.iter().map(|o| o.source.photons()).collect();
        sectors.dedup();
        for k in sectors {
            let ops: Vec<&SectorOperator> = self.operators.iter().filter(|o| o.source.photons() == k).collect();
            let mut sum = DMatrix::<C64>::zeros(ops[0].source.len(), ops[0].source.len());
            for o in &ops {
                sum += o.adjoint_times(o);
            }
            // an orthogonal projector squares to itself
            worst = worst.max(max_abs(&(&sum * &sum - &sum)));
        }
        worst
    }

    /// Applies the channel to every stored block of `rho`.
    pub fn apply(&self, rho: &crate::fock::DensityMatrix) -> crate::fock::DensityMatrix {
        let mut out = crate::fock::DensityMatrix::zero(rho.modes());
        for block in rho.blocks() {
            for op in self.operators.iter().filter(|o| o.source.same_sector(&block.basis)) {
                let m = &op.matrix * &block.matrix * op.matrix.adjoint();
                out.add_block(op.target.clone().expect("recovery lands in the code sector"), &m);
            }
        }
        out
    }
}

/// For each mode `i`, the isometry `â_i|w⟩/√g ↦ |w⟩` on the codewords,
/// plus the projection onto the code on the undamaged sector. Requires the
/// single-loss error matrix to be `g·1` with `g > 0`.
pub fn build_recovery(code: &CodeSubspace) -> Result<RecoveryMap> {
    let ops = annihilators(code.basis())?;
    let report = kl_check(code, &ops)?;
    if !report.satisfied {
        return Err(Error::NotCorrectable(report.residual));
    }
    let dev = report.scalar_deviation();
    if dev > KL_TOLERANCE {
        return Err(Error::GNotScalar(dev));
    }
    let g = report.g_matrix[(0, 0)].re;
    if g <= KL_TOLERANCE {
        return Err(Error::NotCorrectable(report.residual));
    }
    let mut recovery = RecoveryMap::identity(code);
    let scale = C64::new(1.0 / g.sqrt(), 0.0);
    for a in &ops {
        let Some(damaged) = &a.target else { continue };
        // Σ_w |w⟩⟨â_i w|
        let images = &a.matrix * code.vectors();
        let matrix = code.vectors() * images.adjoint() * scale;
        recovery.operators.push(SectorOperator {
            source: damaged.clone(),
            target: Some(code.basis().clone()),
            matrix,
        });
    }
    Ok(recovery)
}

/// Entanglement fidelity of recovery ∘ loss on the code: `Σ_k |tr M_k|²/d²`
/// over the composite Kraus operators `M_k = V† R A_k V`.
pub fn entanglement_fidelity(recovery: &RecoveryMap, params: &LossParameters) -> Result<f64> {
    let code = recovery.code();
    let d = code.rank() as f64;
    let kraus = KrausSet::for_sector(params, code.basis())?;
    let v = code.vectors();
    let mut total = 0.0;
    for (_, a) in &kraus.operators {
        let Some(damaged) = &a.target else { continue };
        let av = &a.matrix * v;
        for r in recovery.operators().iter().filter(|r| r.source.same_sector(damaged)) {
            let m = v.adjoint() * &r.matrix * &av;
            total += m.trace().norm_sqr();
        }
    }
    Ok(total / (d * d))
}

/// Corrected entanglement fidelity of `code` under uniform damping `gamma`.
pub fn corrected_fidelity(code: &CodeSubspace, gamma: f64) -> Result<f64> {
    let recovery = build_recovery(code)?;
    entanglement_fidelity(&recovery, &LossParameters::uniform(gamma, code.modes())?)
}

/// Entanglement fidelity of a single photon in two modes, no correction.
pub fn bare_dual_rail_fidelity(gamma: f64) -> Result<f64> {
    let basis = FockBasis::new(2, 1)?;
    let code = CodeSubspace::full_sector(basis);
    entanglement_fidelity(&RecoveryMap::identity(&code), &LossParameters::uniform(gamma, 2)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityPoint {
    pub gamma: f64,
    pub encoded: f64,
    pub bare: f64,
}

/// `steps` log-spaced damping exponents from `gamma_min` to `gamma_max`.
pub fn log_grid(gamma_min: f64, gamma_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(gamma_min > 0.0 && gamma_max >= gamma_min && steps >= 1) {
        return Err(Error::InvalidParameter("need 0 < gamma_min ≤ gamma_max and steps ≥ 1".into()));
    }
    if steps == 1 {
        return Ok(vec![gamma_min]);
    }
    let (a, b) = (gamma_min.ln(), gamma_max.ln());
    Ok((0..steps).map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp()).collect())
}

/// Corrected and bare fidelities over `gammas`.
pub fn fidelity_curve(code: &CodeSubspace, gammas: &[f64]) -> Result<Vec<FidelityPoint>> {
    use rayon::prelude::*;
    let recovery = build_recovery(code)?;
    gammas
        .par_iter()
        .map(|&gamma| {
            Ok(FidelityPoint {
                gamma,
                encoded: entanglement_fidelity(&recovery, &LossParameters::uniform(gamma, code.modes())?)?,
                bare: bare_dual_rail_fidelity(gamma)?,
            })
        })
        .collect()
}

/// Least-squares slope of `ln(1 − F)` against `ln γ`.
pub fn infidelity_slope(points: &[(f64, f64)]) -> f64 {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(g, f)| (g.ln(), (1.0 - f).ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{DensityMatrix, Occupation};
    use crate::loss_channel::one_photon_loss_ops;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn three_photon() -> CodeSubspace {
        let s = 1.0 / 3f64.sqrt();
        let l = PureState::superposition(
            3,
            &[(Occupation::from([3, 0, 0]), c(s)), (Occupation::from([0, 3, 0]), c(s)), (Occupation::from([0, 0, 3]), c(s))],
        )
        .unwrap();
        let h = PureState::fock(&Occupation::from([1, 1, 1])).unwrap();
        CodeSubspace::new(&[l, h]).unwrap()
    }

    fn dual_rail() -> CodeSubspace {
        CodeSubspace::new(&[
            PureState::fock(&Occupation::from([1, 0])).unwrap(),
            PureState::fock(&Occupation::from([0, 1])).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_bad_codewords() {
        let a = PureState::fock(&Occupation::from([1, 0])).unwrap();
        let b = PureState::fock(&Occupation::from([2, 0])).unwrap();
        assert!(CodeSubspace::new(&[a.clone(), b]).is_err());
        assert!(matches!(CodeSubspace::new(&[a.clone(), a]), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn three_photon_code_passes() {
        let code = three_photon();
        let r = kl_check(&code, &annihilators(code.basis()).unwrap()).unwrap();
        assert!(r.residual < 1e-12 && r.satisfied);
        assert!(max_abs(&(r.g_matrix - DMatrix::identity(3, 3))) < 1e-12);

        let g = 0.2;
        let r = kl_check(&code, &one_photon_loss_ops(3, g, 3).unwrap()).unwrap();
        let expected = (1.0 - (-2.0 * g).exp()) * (-4.0 * g).exp();
        assert!((r.g_matrix[(1, 1)].re - expected).abs() < 1e-14);
    }

    #[test]
    fn dual_rail_fails() {
        let code = dual_rail();
        let r = kl_check(&code, &annihilators(code.basis()).unwrap()).unwrap();
        assert!(!r.satisfied && r.residual >= 0.5 - 1e-12);
    }

    #[test]
    fn identity_error() {
        let code = three_photon();
        let r = kl_check(&code, &[SectorOperator::identity(code.basis().clone())]).unwrap();
        assert!((r.g_matrix[(0, 0)].re - 1.0).abs() < 1e-15 && r.residual < 1e-15);
    }

    #[test]
    fn nogo_witnesses() {
        let ancilla = PureState::fock(&Occupation::from([1, 1])).unwrap();
        let r = encoding_nogo_witness(&dual_rail(), Some(&ancilla)).unwrap();
        assert!(r.residual >= 0.5 - 1e-12);
        assert!(encoding_nogo_witness(&three_photon(), None).unwrap().residual < 1e-12);
        let single = CodeSubspace::new(&[PureState::fock(&Occupation::from([1])).unwrap()]).unwrap();
        assert!(encoding_nogo_witness(&single, None).unwrap().residual < 1e-15);
    }

    #[test]
    fn lie_witness() {
        assert!(lie_algebra_witness(&three_photon()).unwrap() < 1e-12);
        assert!(lie_algebra_witness(&dual_rail()).unwrap() >= 0.5);
        let full = CodeSubspace::full_sector(FockBasis::new(3, 2).unwrap());
        let basis = full.basis().clone();
        let own = su_generators(3)
            .iter()
            .map(|l| max_abs(&number_conserving_operator(l, &basis).unwrap()))
            .fold(0.0, f64::max);
        assert!((lie_algebra_witness(&full).unwrap() - own).abs() < 1e-14);
        assert_eq!(su_generators(3).len(), 8);
        let lopsided = CodeSubspace::new(&[
            PureState::fock(&Occupation::from([2, 0])).unwrap(),
            PureState::fock(&Occupation::from([1, 1])).unwrap(),
        ])
        .unwrap();
        assert!(matches!(lie_algebra_witness(&lopsided), Err(Error::GNotScalar(_))));
    }

    #[test]
    fn recovery_restores_damaged_states() {
        let code = three_photon();
        let rec = build_recovery(&code).unwrap();
        assert!(rec.isometry_error() < 1e-12);
        let a = annihilators(code.basis()).unwrap();
        for (k, (alpha, beta)) in [(c(1.0), c(0.0)), (c(0.6), C64::new(0.0, 0.8)), (c(0.28), c(-0.96))].iter().enumerate() {
            let psi = code.encode(&[*alpha, *beta]);
            let damaged = a[k % 3].apply(&psi).normalized().unwrap();
            let out = rec.apply(&DensityMatrix::from_pure(&damaged));
            assert!((out.expectation(&psi) - 1.0).abs() < 1e-10);
            assert!((out.trace() - 1.0).abs() < 1e-10);
        }
        assert!(build_recovery(&dual_rail()).is_err());
    }

    #[test]
    fn recovery_after_single_loss_is_scalar() {
        let code = three_photon();
        let rec = build_recovery(&code).unwrap();
        let g = 0.13;
        let f = one_photon_loss_ops(3, g, 3).unwrap();
        let pre = crate::loss_channel::one_photon_prefactor(3, g);
        let v = code.vectors();
        for (i, fi) in f.iter().enumerate() {
            let m = v.adjoint() * &rec.operators()[i + 1].matrix * &fi.matrix * v;
            assert!(max_abs(&(m - DMatrix::identity(2, 2) * c(pre))) < 1e-12);
        }
    }

    #[test]
    fn fidelity_closed_forms() {
        let code = three_photon();
        for g in [0.0, 0.01, 0.1, 0.4] {
            let f = corrected_fidelity(&code, g).unwrap();
            let exact = 3.0 * (-4.0 * g).exp() - 2.0 * (-6.0 * g).exp();
            assert!((f - exact).abs() < 1e-12, "{g}: {f} vs {exact}");
            assert!((bare_dual_rail_fidelity(g).unwrap() - (-2.0 * g).exp()).abs() < 1e-12);
        }
        assert!((corrected_fidelity(&code, 0.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn slopes() {
        let code = three_photon();
        let curve = fidelity_curve(&code, &log_grid(1e-3, 1e-2, 9).unwrap()).unwrap();
        let enc: Vec<(f64, f64)> = curve.iter().map(|p| (p.gamma, p.encoded)).collect();
        let bare: Vec<(f64, f64)> = curve.iter().map(|p| (p.gamma, p.bare)).collect();
        assert!((infidelity_slope(&enc) - 2.0).abs() < 0.05);
        assert!((infidelity_slope(&bare) - 1.0).abs() < 0.05);
    }
}
