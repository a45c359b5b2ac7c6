//! Photon loss (amplitude damping) on bosonic modes.
//!
//! A mode with damping exponent `γ` has amplitude transmission `e^{−γ}` and
//! Kraus operators `Â_n = (1−e^{−2γ})^{n/2} e^{−γ â†â} âⁿ / √n!`. On a finite
//! photon-number sector the sum over `n` terminates, so the channel is exact.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{binomial, max_abs, DensityMatrix, FockBasis, Occupation, SectorOperator};

/// Damping exponents, one per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LossParameters {
    gammas: Vec<f64>,
}

impl LossParameters {
    pub fn uniform(gamma: f64, modes: usize) -> Result<Self> {
        Self::per_mode(vec![gamma; modes])
    }

    pub fn per_mode(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::NoModes);
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidParameter(format!("damping exponent must be finite and ≥ 0, got {g}")));
        }
        Ok(Self { gammas })
    }

    /// From the intensity transmission `T = e^{−2γ}`, `0 < T ≤ 1`.
    pub fn from_transmission(t: f64, modes: usize) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(format!("transmission must lie in (0, 1], got {t}")));
        }
        Self::uniform(-0.5 * t.ln(), modes)
    }

    pub fn modes(&self) -> usize {
        self.gammas.len()
    }

    pub fn gamma(&self, mode: usize) -> f64 {
        self.gammas[mode]
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// The common exponent, if all modes share it.
    pub fn uniform_gamma(&self) -> Option<f64> {
        let g = self.gammas[0];
        self.gammas.iter().all(|&x| x == g).then_some(g)
    }
}

/// `⟨m|Â_n|m+n⟩` for a single mode.
pub fn kraus_element(n: usize, gamma: f64, m: usize) -> f64 {
    let lost = -(-2.0 * gamma).exp_m1();
    (binomial(m + n, n) as f64).sqrt() * lost.powf(n as f64 / 2.0) * (-gamma * m as f64).exp()
}

/// Multimode Kraus operators restricted to one input sector, keyed by the
/// number of photons lost from each mode.
#[derive(Clone, Debug)]
pub struct KrausSet {
    pub source: Arc<FockBasis>,
    pub operators: Vec<(Occupation, SectorOperator)>,
}

impl KrausSet {
    pub fn for_sector(params: &LossParameters, basis: &Arc<FockBasis>) -> Result<Self> {
        let modes = basis.modes();
        if params.modes() != modes {
            return Err(Error::DimensionMismatch { expected: modes, found: params.modes() });
        }
        let k = basis.photons();
        let mut operators = Vec::new();
        for lost_total in 0..=k {
            let target = FockBasis::new(modes, k - lost_total)?;
            let patterns = FockBasis::new(modes, lost_total)?;
            for pattern in patterns.states() {
                let mut m = DMatrix::<C64>::zeros(target.len(), basis.len());
                for (col, occ) in basis.states().iter().enumerate() {
                    if occ.0.iter().zip(&pattern.0).any(|(have, lose)| have < lose) {
                        continue;
                    }
                    let out = Occupation(occ.0.iter().zip(&pattern.0).map(|(a, b)| a - b).collect());
                    let amp: f64 = (0..modes)
                        .map(|i| kraus_element(pattern.0[i], params.gamma(i), out.0[i]))
                        .product();
                    m[(target.index_of(&out).unwrap(), col)] = C64::new(amp, 0.0);
                }
                let op = SectorOperator { source: basis.clone(), target: Some(target.clone()), matrix: m };
                operators.push((pattern.clone(), op));
            }
        }
        Ok(Self { source: basis.clone(), operators })
    }

    /// `max |Σ Â†Â − 1|` on the source sector.
    pub fn completeness_error(&self) -> f64 {
        let n = self.source.len();
        let mut sum = DMatrix::<C64>::zeros(n, n);
        for (_, op) in &self.operators {
            sum += op.adjoint_times(op);
        }
        max_abs(&(sum - DMatrix::identity(n, n)))
    }
}

/// `ρ → Σ Â ρ Â†`, sector by sector.
pub fn apply_loss(state: &DensityMatrix, params: &LossParameters) -> Result<DensityMatrix> {
    let mut out = DensityMatrix::zero(state.modes());
    let mut by_target: BTreeMap<usize, (Arc<FockBasis>, DMatrix<C64>)> = BTreeMap::new();
    for block in state.blocks() {
        let kraus = KrausSet::for_sector(params, &block.basis)?;
        for (_, op) in &kraus.operators {
            let target = op.target.clone().expect("loss keeps at least the vacuum sector");
            let contribution = &op.matrix * &block.matrix * op.matrix.adjoint();
            by_target
                .entry(target.photons())
                .and_modify(|(_, m)| *m += &contribution)
                .or_insert((target, contribution));
        }
    }
    for (_, (basis, m)) in by_target {
        out.add_block(basis, &m);
    }
    Ok(out)
}

/// The annihilation operator of `mode` restricted to `basis`.
pub fn annihilation(mode: usize, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    if mode >= basis.modes() {
        return Err(Error::InvalidParameter(format!("mode {mode} out of range for {} modes", basis.modes())));
    }
    if basis.photons() == 0 {
        return Ok(SectorOperator { source: basis.clone(), target: None, matrix: DMatrix::zeros(0, basis.len()) });
    }
    let target = FockBasis::new(basis.modes(), basis.photons() - 1)?;
    let mut m = DMatrix::<C64>::zeros(target.len(), basis.len());
    for (col, occ) in basis.states().iter().enumerate() {
        let k = occ.0[mode];
        if k == 0 {
            continue;
        }
        let mut out = occ.clone();
        out.0[mode] -= 1;
        m[(target.index_of(&out).unwrap(), col)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(SectorOperator { source: basis.clone(), target: Some(target), matrix: m })
}

/// `√(1−e^{−2γ}) e^{−γ(K−1)}`, the weight of a single loss from a K-photon state.
pub fn one_photon_prefactor(photons: usize, gamma: f64) -> f64 {
    if photons == 0 {
        return 0.0;
    }
    (-(-2.0 * gamma).exp_m1()).sqrt() * (-gamma * (photons - 1) as f64).exp()
}

/// The one-photon-loss operators `F̂_i` on the `photons`-photon sector of
/// `modes` modes, for uniform damping `gamma`.
pub fn one_photon_loss_ops(photons: usize, gamma: f64, modes: usize) -> Result<Vec<SectorOperator>> {
    let basis = FockBasis::new(modes, photons)?;
    let c = C64::new(one_photon_prefactor(photons, gamma), 0.0);
    (0..modes)
        .map(|i| {
            let mut op = annihilation(i, &basis)?;
            op.matrix *= c;
            Ok(op)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;

    #[test]
    fn element_values() {
        for m in 0..5 {
            assert!((kraus_element(0, 0.0, m) - 1.0).abs() < 1e-15);
        }
        let g: f64 = 0.3;
        let l = 1.0 - (-2.0 * g).exp();
        assert!((kraus_element(1, g, 0) - l.sqrt()).abs() < 1e-15);
        assert!((kraus_element(2, g, 1) - 3f64.sqrt() * l * (-g).exp()).abs() < 1e-15);
    }

    #[test]
    fn complete_on_small_sectors() {
        let params = LossParameters::per_mode(vec![0.1, 0.45, 1.3]).unwrap();
        for k in 0..=6 {
            let basis = FockBasis::new(3, k).unwrap();
            let set = KrausSet::for_sector(&params, &basis).unwrap();
            assert!(set.completeness_error() < 1e-12, "K = {k}");
        }
    }

    #[test]
    fn single_photon_decay() {
        let g = 0.2;
        let rho = DensityMatrix::from_pure(&PureState::fock(&Occupation::from([1])).unwrap());
        let out = apply_loss(&rho, &LossParameters::uniform(g, 1).unwrap()).unwrap();
        let t = (-2.0 * g).exp();
        assert!((out.block(1).unwrap().matrix[(0, 0)].re - t).abs() < 1e-14);
        assert!((out.block(0).unwrap().matrix[(0, 0)].re - (1.0 - t)).abs() < 1e-14);
    }

    #[test]
    fn three_photon_survival() {
        let g = 0.07;
        let rho = DensityMatrix::from_pure(&PureState::fock(&Occupation::from([1, 1, 1])).unwrap());
        let out = apply_loss(&rho, &LossParameters::uniform(g, 3).unwrap()).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!((out.block(3).unwrap().matrix.trace().re - (-6.0 * g).exp()).abs() < 1e-14);
        assert_eq!(out.blocks().count(), 4);
    }

    #[test]
    fn zero_loss_is_identity() {
        let psi = PureState::superposition(
            2,
            &[(Occupation::from([2, 0]), C64::new(0.6, 0.0)), (Occupation::from([1, 1]), C64::new(0.0, 0.8))],
        )
        .unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let out = apply_loss(&rho, &LossParameters::uniform(0.0, 2).unwrap()).unwrap();
        for b in out.blocks().filter(|b| b.basis.photons() < 2) {
            assert_eq!(max_abs(&b.matrix), 0.0);
        }
        assert!(max_abs(&(&out.block(2).unwrap().matrix - &rho.block(2).unwrap().matrix)) < 1e-15);
    }

    #[test]
    fn one_photon_ops() {
        let g = 0.05;
        let ops = one_photon_loss_ops(3, g, 3).unwrap();
        let pre = one_photon_prefactor(3, g);
        assert!((pre - (1.0 - (-2.0 * g).exp()).sqrt() * (-2.0 * g).exp()).abs() < 1e-15);
        let out = ops[0].apply(&PureState::fock(&Occupation::from([1, 1, 1])).unwrap());
        assert!((out.amplitude(&Occupation::from([0, 1, 1])).re - pre).abs() < 1e-15);
        let out = ops[0].apply(&PureState::fock(&Occupation::from([3, 0, 0])).unwrap());
        assert!((out.amplitude(&Occupation::from([2, 0, 0])).re - pre * 3f64.sqrt()).abs() < 1e-15);
        for op in one_photon_loss_ops(3, 0.0, 3).unwrap() {
            assert_eq!(max_abs(&op.matrix), 0.0);
        }
        let empty = one_photon_loss_ops(0, g, 2).unwrap();
        assert!(empty.iter().all(|op| op.target.is_none() && op.matrix.nrows() == 0));
    }

    #[test]
    fn kraus_block_matches_one_photon_ops() {
        let g = 0.11;
        let basis = FockBasis::new(3, 3).unwrap();
        let set = KrausSet::for_sector(&LossParameters::uniform(g, 3).unwrap(), &basis).unwrap();
        let ops = one_photon_loss_ops(3, g, 3).unwrap();
        for (pattern, op) in set.operators.iter().filter(|(p, _)| p.photons() == 1) {
            let i = pattern.0.iter().position(|&x| x == 1).unwrap();
            assert!(max_abs(&(&op.matrix - &ops[i].matrix)) < 1e-14);
        }
    }

    #[test]
    fn transmission_round_trip() {
        let p = LossParameters::from_transmission((-0.6f64).exp(), 2).unwrap();
        assert!((p.gamma(1) - 0.3).abs() < 1e-15);
        assert!(LossParameters::from_transmission(0.0, 1).is_err());
        assert!(LossParameters::uniform(-0.1, 1).is_err());
    }
}
