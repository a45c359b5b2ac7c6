//! Fixed-photon-number Fock bases and the state types built on them.
//!
//! A sector is the span of all occupation vectors of `N` modes carrying `K`
//! photons in total. Sectors are enumerated in lexicographically descending
//! order, so `(K, 0, …, 0)` is always index 0 and `(0, …, 0, K)` is the last
//! element. Emitted state dumps depend on this order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Photons per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occupation(pub Vec<usize>);

impl Occupation {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().sum()
    }

    /// `∏ k_i!` as a float.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    pub fn concat(&self, other: &Occupation) -> Occupation {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Occupation(v)
    }

    /// Picks out the listed modes, in the listed order.
    pub fn select(&self, modes: &[usize]) -> Occupation {
        Occupation(modes.iter().map(|&m| self.0[m]).collect())
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        let single_digit = self.0.iter().all(|&k| k < 10);
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 && !single_digit {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "⟩")
    }
}

impl From<&[usize]> for Occupation {
    fn from(v: &[usize]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for Occupation {
    fn from(v: [usize; N]) -> Self {
        Self(v.to_vec())
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All occupation vectors of `modes` modes with `photons` photons in total.
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: usize,
    photons: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockBasis {
    pub fn new(modes: usize, photons: usize) -> Result<Arc<Self>> {
        if modes == 0 {
            return Err(Error::NoModes);
        }
        let mut states = Vec::with_capacity(binomial(modes + photons - 1, photons));
        let mut current = vec![0; modes];
        fill_descending(&mut current, 0, photons, &mut states);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Arc::new(Self { modes, photons, states, index }))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &Occupation {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &Occupation) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn same_sector(&self, other: &FockBasis) -> bool {
        self.modes == other.modes && self.photons == other.photons
    }
}

fn fill_descending(current: &mut [usize], mode: usize, remaining: usize, out: &mut Vec<Occupation>) {
    if mode == current.len() - 1 {
        current[mode] = remaining;
        out.push(Occupation(current.to_vec()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[mode] = k;
        fill_descending(current, mode + 1, remaining - k, out);
    }
    current[mode] = 0;
}

/// Shorthand for [`FockBasis::new`].
pub fn enumerate_basis(modes: usize, photons: usize) -> Result<Arc<FockBasis>> {
    FockBasis::new(modes, photons)
}

/// Amplitudes over one photon-number sector.
#[derive(Clone, Debug)]
pub struct Sector {
    pub basis: Arc<FockBasis>,
    pub amplitudes: DVector<C64>,
}

/// A pure state stored sector by sector. Sectors that are not present have
/// zero amplitude.
#[derive(Clone, Debug)]
pub struct PureState {
    modes: usize,
    sectors: BTreeMap<usize, Sector>,
}

impl PureState {
    pub fn zero(modes: usize) -> Self {
        Self { modes, sectors: BTreeMap::new() }
    }

    pub fn fock(occ: &Occupation) -> Result<Self> {
        let basis = FockBasis::new(occ.modes(), occ.photons())?;
        let mut amps = DVector::zeros(basis.len());
        amps[basis.index_of(occ).expect("occupation belongs to its own sector")] = C64::new(1.0, 0.0);
        Ok(Self::from_sector(basis, amps))
    }

    pub fn from_sector(basis: Arc<FockBasis>, amplitudes: DVector<C64>) -> Self {
        assert_eq!(basis.len(), amplitudes.len(), "amplitude vector must match the basis");
        let modes = basis.modes();
        let mut sectors = BTreeMap::new();
        sectors.insert(basis.photons(), Sector { basis, amplitudes });
        Self { modes, sectors }
    }

    /// Builds `Σ c_j |occ_j⟩`. Terms may live in different sectors.
    pub fn superposition(modes: usize, terms: &[(Occupation, C64)]) -> Result<Self> {
        let mut state = Self::zero(modes);
        for (occ, c) in terms {
            if occ.modes() != modes {
                return Err(Error::DimensionMismatch { expected: modes, found: occ.modes() });
            }
            state.add_amplitude(occ, *c)?;
        }
        Ok(state)
    }

    pub fn add_amplitude(&mut self, occ: &Occupation, c: C64) -> Result<()> {
        if occ.modes() != self.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, found: occ.modes() });
        }
        let k = occ.photons();
        if !self.sectors.contains_key(&k) {
            let basis = FockBasis::new(self.modes, k)?;
            let amplitudes = DVector::zeros(basis.len());
            self.sectors.insert(k, Sector { basis, amplitudes });
        }
        let sector = self.sectors.get_mut(&k).unwrap();
        let i = sector.basis.index_of(occ).unwrap();
        sector.amplitudes[i] += c;
        Ok(())
    }

    pub fn insert_sector(&mut self, sector: Sector) -> Result<()> {
        if sector.basis.modes() != self.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, found: sector.basis.modes() });
        }
        self.sectors.insert(sector.basis.photons(), sector);
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sectors(&self) -> impl Iterator<Item = &Sector> {
        self.sectors.values()
    }

    pub fn sector(&self, photons: usize) -> Option<&Sector> {
        self.sectors.get(&photons)
    }

    pub fn amplitude(&self, occ: &Occupation) -> C64 {
        self.sectors
            .get(&occ.photons())
            .and_then(|s| s.basis.index_of(occ).map(|i| s.amplitudes[i]))
            .unwrap_or_default()
    }

    /// Nonzero `(occupation, amplitude)` pairs in canonical order.
    pub fn terms(&self) -> Vec<(Occupation, C64)> {
        self.sectors
            .values()
            .flat_map(|s| {
                s.basis
                    .states()
                    .iter()
                    .zip(s.amplitudes.iter())
                    .filter(|(_, a)| a.norm_sqr() > 0.0)
                    .map(|(o, a)| (o.clone(), *a))
            })
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors.values().map(|s| s.amplitudes.norm_squared()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        for s in out.sectors.values_mut() {
            s.amplitudes *= c;
        }
        out
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.sectors
            .iter()
            .filter_map(|(k, a)| other.sectors.get(k).map(|b| a.amplitudes.dotc(&b.amplitudes)))
            .sum()
    }

    pub fn add(&self, other: &PureState) -> Result<Self> {
        if other.modes != self.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, found: other.modes });
        }
        let mut out = self.clone();
        for (k, s) in &other.sectors {
            match out.sectors.get_mut(k) {
                Some(t) => t.amplitudes += &s.amplitudes,
                None => {
                    out.sectors.insert(*k, s.clone());
                }
            }
        }
        Ok(out)
    }

    /// Tensor product; the modes of `other` are appended after those of `self`.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let modes = self.modes + other.modes;
        let mut out = Self::zero(modes);
        for (oa, a) in self.terms() {
            for (ob, b) in other.terms() {
                out.add_amplitude(&oa.concat(&ob), a * b)?;
            }
        }
        Ok(out)
    }

    /// The amplitudes of sector `photons` as a dense vector over a given basis
    /// (zeros if the sector is absent).
    pub fn sector_vector(&self, basis: &FockBasis) -> DVector<C64> {
        match self.sectors.get(&basis.photons()) {
            Some(s) if s.basis.same_sector(basis) => s.amplitudes.clone(),
            _ => DVector::zeros(basis.len()),
        }
    }

    pub fn to_dump(&self) -> StateDump {
        let sectors = self
            .sectors
            .iter()
            .map(|(k, s)| {
                let entries = s
                    .amplitudes
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm_sqr() > 0.0)
                    .map(|(i, a)| (i, a.re, a.im))
                    .collect();
                (k.to_string(), entries)
            })
            .collect();
        StateDump { modes: self.modes, sectors }
    }

    pub fn from_dump(dump: &StateDump) -> Result<Self> {
        let mut state = Self::zero(dump.modes);
        for (k, entries) in &dump.sectors {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Format(format!("sector key {k:?} is not a photon number")))?;
            let basis = FockBasis::new(dump.modes, k)?;
            let mut amplitudes = DVector::zeros(basis.len());
            for &(i, re, im) in entries {
                if i >= basis.len() {
                    return Err(Error::Format(format!("index {i} out of range for sector {k}")));
                }
                amplitudes[i] = C64::new(re, im);
            }
            state.insert_sector(Sector { basis, amplitudes })?;
        }
        Ok(state)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dump())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_dump(&serde_json::from_str(s)?)
    }
}

/// On-disk form of a [`PureState`]:
/// `{"modes": N, "sectors": {"K": [[index, re, im], ...]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub modes: usize,
    pub sectors: BTreeMap<String, Vec<(usize, f64, f64)>>,
}

/// Block-diagonal density operator: one block per total photon number.
///
/// Coherences between different photon numbers are not stored. Loss and
/// photon counting never couple them back into anything observable here.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    modes: usize,
    blocks: BTreeMap<usize, Block>,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub basis: Arc<FockBasis>,
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn zero(modes: usize) -> Self {
        Self { modes, blocks: BTreeMap::new() }
    }

    pub fn from_pure(state: &PureState) -> Self {
        let blocks = state
            .sectors()
            .map(|s| {
                let m = &s.amplitudes * s.amplitudes.adjoint();
                (s.basis.photons(), Block { basis: s.basis.clone(), matrix: m })
            })
            .collect();
        Self { modes: state.modes(), blocks }
    }

    pub fn from_block(basis: Arc<FockBasis>, matrix: DMatrix<C64>) -> Self {
        let modes = basis.modes();
        let mut out = Self::zero(modes);
        out.add_block(basis, &matrix);
        out
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn block(&self, photons: usize) -> Option<&Block> {
        self.blocks.get(&photons)
    }

    /// Adds `matrix` into the block with the basis' photon number.
    pub fn add_block(&mut self, basis: Arc<FockBasis>, matrix: &DMatrix<C64>) {
        assert_eq!(basis.modes(), self.modes);
        assert_eq!(matrix.nrows(), basis.len());
        match self.blocks.get_mut(&basis.photons()) {
            Some(b) => b.matrix += matrix,
            None => {
                self.blocks.insert(basis.photons(), Block { basis, matrix: matrix.clone() });
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.blocks.values().map(|b| b.matrix.trace().re).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            b.matrix *= C64::new(c, 0.0);
        }
        out
    }

    /// Largest deviation from Hermiticity over all blocks.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| max_abs(&(&b.matrix - b.matrix.adjoint())))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks (after Hermitian symmetrization).
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| {
                let h = (&b.matrix + b.matrix.adjoint()) * C64::new(0.5, 0.0);
                h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian blocks, unit trace and PSD within the given tolerances.
    pub fn is_valid(&self, herm_tol: f64, psd_tol: f64) -> bool {
        self.hermiticity_error() <= herm_tol
            && (self.trace() - 1.0).abs() <= herm_tol
            && self.min_eigenvalue() >= -psd_tol
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure state supported on the stored sectors.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        psi.sectors()
            .filter_map(|s| {
                self.blocks.get(&s.basis.photons()).map(|b| {
                    (s.amplitudes.adjoint() * &b.matrix * &s.amplitudes)[(0, 0)].re
                })
            })
            .sum()
    }
}

/// A linear map from one photon-number sector into another. `target` is
/// `None` when the image is empty, e.g. an annihilation operator acting on
/// the vacuum sector; `matrix` then has no rows.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    pub source: Arc<FockBasis>,
    pub target: Option<Arc<FockBasis>>,
    pub matrix: DMatrix<C64>,
}

impl SectorOperator {
    pub fn identity(basis: Arc<FockBasis>) -> Self {
        let n = basis.len();
        Self { source: basis.clone(), target: Some(basis), matrix: DMatrix::identity(n, n) }
    }

    /// `self† · other`, an operator on the common source sector.
    pub fn adjoint_times(&self, other: &SectorOperator) -> DMatrix<C64> {
        assert!(self.source.same_sector(&other.source));
        if self.matrix.nrows() == 0 || other.matrix.nrows() == 0 {
            return DMatrix::zeros(self.source.len(), other.source.len());
        }
        self.matrix.adjoint() * &other.matrix
    }

    pub fn apply(&self, state: &PureState) -> PureState {
        let Some(target) = &self.target else {
            return PureState::zero(self.source.modes());
        };
        let v = state.sector_vector(&self.source);
        PureState::from_sector(target.clone(), &self.matrix * v)
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
