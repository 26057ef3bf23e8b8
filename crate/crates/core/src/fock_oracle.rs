//! Brute-force ground truth in a truncated Fock space.
//!
//! Operators are stored sparsely over an explicit list of occupied basis
//! vectors instead of the full tensor-product space. A two-mode squeezed
//! state with cutoff 25 then costs 25 basis vectors rather than 625, and
//! the four-mode purification used for the dephasing check stays at 625
//! instead of 390625. Entropies split the operator into connected blocks
//! and diagonalize each block densely.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dephasing;
use crate::distribution::PhotonDistribution;
use crate::error::{check_energy, domain, Error, Result};
use crate::phase_encoding::{thermal_cutoff, thermal_prob, thermal_tail};

/// Tolerance on trace and on negative eigenvalues for density operators.
pub const STATE_TOL: f64 = 1e-10;
/// Largest connected block handed to a dense eigensolver.
pub const MAX_DENSE_BLOCK: usize = 4096;
/// Largest support the oracle will build.
pub const MAX_SUPPORT: usize = 200_000;
/// Default mass left out of a truncated thermal environment.
pub const ENV_TAIL: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-12;

/// Photon numbers per mode, `n = (n_1, ..., n_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex(Vec<usize>);

impl ModeIndex {
    pub fn new(photons: Vec<usize>) -> Self {
        ModeIndex(photons)
    }

    pub fn photons(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Photons summed over the listed modes.
    pub fn total_in(&self, modes: &[usize]) -> usize {
        modes.iter().map(|&k| self.0[k]).sum()
    }

    fn project(&self, modes: &[usize]) -> ModeIndex {
        ModeIndex(modes.iter().map(|&k| self.0[k]).collect())
    }

    fn with(&self, mode: usize, n: usize) -> ModeIndex {
        let mut v = self.0.clone();
        v[mode] = n;
        ModeIndex(v)
    }
}

/// A ladder operator acting on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Operator on a truncated multimode Fock space, stored as nonzero entries
/// over its support basis.
#[derive(Clone, Debug)]
pub struct FockOperator {
    dims: Vec<usize>,
    basis: Vec<ModeIndex>,
    index: HashMap<ModeIndex, usize>,
    entries: BTreeMap<(usize, usize), Complex64>,
}

struct Builder {
    dims: Vec<usize>,
    basis: Vec<ModeIndex>,
    index: HashMap<ModeIndex, usize>,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl Builder {
    fn new(dims: Vec<usize>) -> Self {
        Builder {
            dims,
            basis: Vec::new(),
            index: HashMap::new(),
            entries: BTreeMap::new(),
        }
    }

    fn intern(&mut self, idx: ModeIndex) -> Result<usize> {
        if let Some(&i) = self.index.get(&idx) {
            return Ok(i);
        }
        if idx.0.len() != self.dims.len() || idx.0.iter().zip(&self.dims).any(|(n, d)| n >= d) {
            return Err(domain(format!(
                "basis vector {:?} does not fit cutoffs {:?}",
                idx.0, self.dims
            )));
        }
        if self.basis.len() >= MAX_SUPPORT {
            return Err(Error::Resource {
                needed: self.basis.len() + 1,
                limit: MAX_SUPPORT,
            });
        }
        let i = self.basis.len();
        self.index.insert(idx.clone(), i);
        self.basis.push(idx);
        Ok(i)
    }

    fn add(&mut self, row: usize, col: usize, v: Complex64) {
        *self.entries.entry((row, col)).or_default() += v;
    }

    fn finish(self) -> FockOperator {
        FockOperator {
            dims: self.dims,
            basis: self.basis,
            index: self.index,
            entries: self.entries,
        }
    }
}

impl FockOperator {
    /// `|ψ><ψ|` for `ψ = Σ c_n |n>`. Amplitudes are used as given.
    pub fn from_pure(dims: &[usize], amplitudes: &[(Vec<usize>, Complex64)]) -> Result<Self> {
        let mut b = Builder::new(dims.to_vec());
        let mut kets = Vec::with_capacity(amplitudes.len());
        for (photons, c) in amplitudes {
            if *c != Complex64::new(0.0, 0.0) {
                kets.push((b.intern(ModeIndex(photons.clone()))?, *c));
            }
        }
        for &(i, ci) in &kets {
            for &(j, cj) in &kets {
                b.add(i, j, ci * cj.conj());
            }
        }
        Ok(b.finish())
    }

    /// Operator diagonal in the Fock basis.
    pub fn from_diagonal(dims: &[usize], weights: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut b = Builder::new(dims.to_vec());
        for (photons, w) in weights {
            let i = b.intern(ModeIndex(photons.clone()))?;
            b.add(i, i, Complex64::new(*w, 0.0));
        }
        Ok(b.finish())
    }

    pub fn fock_state(dims: &[usize], photons: &[usize]) -> Result<Self> {
        Self::from_diagonal(dims, &[(photons.to_vec(), 1.0)])
    }

    /// Single-mode thermal state truncated at `cutoff` photons. Fails when
    /// more than [`STATE_TOL`] of the mass would be dropped.
    pub fn thermal(mean: f64, cutoff: usize) -> Result<Self> {
        check_energy(mean)?;
        check_tail(mean, cutoff, STATE_TOL)?;
        let w: Vec<_> = (0..cutoff).map(|n| (vec![n], thermal_prob(mean, n))).collect();
        Self::from_diagonal(&[cutoff], &w)
    }

    /// Two-mode squeezed vacuum `Σ sqrt(E^n/(E+1)^(n+1)) |n, n>` with the
    /// signal in mode 0 and the idler in mode 1.
    pub fn tmsv(energy: f64, cutoff: usize) -> Result<Self> {
        check_energy(energy)?;
        check_tail(energy, cutoff, STATE_TOL)?;
        let amps: Vec<_> = (0..cutoff)
            .map(|n| (vec![n, n], Complex64::new(thermal_prob(energy, n).sqrt(), 0.0)))
            .collect();
        Self::from_pure(&[cutoff, cutoff], &amps)
    }

    /// `A ⊗ B`, with the modes of `other` appended after those of `self`.
    pub fn tensor(&self, other: &FockOperator) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut b = Builder::new(dims);
        let concat = |x: &ModeIndex, y: &ModeIndex| {
            let mut v = x.0.clone();
            v.extend_from_slice(&y.0);
            ModeIndex(v)
        };
        for (&(i, j), &v) in &self.entries {
            for (&(k, l), &w) in &other.entries {
                let r = b.intern(concat(&self.basis[i], &other.basis[k]))?;
                let c = b.intern(concat(&self.basis[j], &other.basis[l]))?;
                b.add(r, c, v * w);
            }
        }
        Ok(b.finish())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    /// Number of support basis vectors.
    pub fn support(&self) -> usize {
        self.basis.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: &ModeIndex, col: &ModeIndex) -> Complex64 {
        match (self.index.get(row), self.index.get(col)) {
            (Some(&i), Some(&j)) => self.entries.get(&(i, j)).copied().unwrap_or_default(),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (&(i, j), v) in &self.entries {
            if i == j {
                let t = acc + v.re;
                comp += if acc.abs() >= v.re.abs() { (acc - t) + v.re } else { (v.re - t) + acc };
                acc = t;
            }
        }
        acc + comp
    }

    /// Diagonal elements keyed by basis vector, in support order.
    pub fn diagonal(&self) -> Vec<(ModeIndex, f64)> {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, idx)| {
                let v = self.entries.get(&(i, i)).map_or(0.0, |v| v.re);
                (idx.clone(), v)
            })
            .collect()
    }

    pub fn max_offdiagonal(&self) -> f64 {
        self.entries
            .iter()
            .filter(|((i, j), _)| i != j)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Largest element-wise difference, over the union of both supports.
    pub fn max_abs_diff(&self, other: &FockOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(i, j), v) in &self.entries {
            let w = other.get(&self.basis[i], &self.basis[j]);
            worst = worst.max((v - w).norm());
        }
        for (&(i, j), w) in &other.entries {
            if !self.index.contains_key(&other.basis[i]) || !self.index.contains_key(&other.basis[j]) {
                worst = worst.max(w.norm());
            }
        }
        worst
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let scale = self.entries.values().map(|v| v.norm()).fold(1.0, f64::max);
        for (&(i, j), v) in &self.entries {
            let t = self.entries.get(&(j, i)).copied().unwrap_or_default();
            if (v - t.conj()).norm() > HERMITIAN_TOL * scale {
                return Err(domain(format!(
                    "operator is not Hermitian at ({:?}, {:?})",
                    self.basis[i].0, self.basis[j].0
                )));
            }
        }
        Ok(())
    }

    /// Hermitian with trace within [`STATE_TOL`] of one. Positivity is
    /// checked where eigenvalues are computed.
    pub fn validate_state(&self) -> Result<()> {
        self.check_hermitian()?;
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }

    fn check_modes(&self, modes: &[usize]) -> Result<()> {
        match modes.iter().find(|&&k| k >= self.dims.len()) {
            Some(k) => Err(domain(format!("mode {k} out of range for {} modes", self.dims.len()))),
            None => Ok(()),
        }
    }

    /// Reduced operator on `keep`, in the listed order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        self.check_modes(keep)?;
        let traced: Vec<usize> = (0..self.modes()).filter(|k| !keep.contains(k)).collect();
        let mut b = Builder::new(keep.iter().map(|&k| self.dims[k]).collect());
        let kept: Vec<usize> = self
            .basis
            .iter()
            .map(|idx| b.intern(idx.project(keep)))
            .collect::<Result<_>>()?;
        let rest: Vec<ModeIndex> = self.basis.iter().map(|idx| idx.project(&traced)).collect();
        for (&(i, j), &v) in &self.entries {
            if rest[i] == rest[j] {
                b.add(kept[i], kept[j], v);
            }
        }
        Ok(b.finish())
    }

    /// Keeps only elements whose two basis vectors carry the same total
    /// photon number in `modes`. An empty list leaves the operator as is.
    pub fn apply_dephasing(&self, modes: &[usize]) -> Result<Self> {
        self.check_modes(modes)?;
        let totals: Vec<usize> = self.basis.iter().map(|idx| idx.total_in(modes)).collect();
        let mut out = self.clone();
        if !modes.is_empty() {
            out.entries.retain(|&(i, j), _| totals[i] == totals[j]);
        }
        Ok(out)
    }

    /// Environment output of the dephasing channel on `modes`: the law of
    /// the total photon number in those modes.
    pub fn complementary_dephasing(&self, modes: &[usize]) -> Result<PhotonDistribution> {
        self.check_modes(modes)?;
        let max_total = self.basis.iter().map(|idx| idx.total_in(modes)).max().unwrap_or(0);
        let mut probs = vec![0.0; max_total + 1];
        for (idx, p) in self.diagonal() {
            probs[idx.total_in(modes)] += p;
        }
        for p in probs.iter_mut() {
            if *p < 0.0 && *p > -STATE_TOL {
                *p = 0.0;
            }
        }
        let mass: f64 = probs.iter().sum();
        PhotonDistribution::new(probs, (1.0 - mass).max(0.0))
    }

    /// `e^{iθN} ρ e^{-iθN}` with `N` the photon number summed over `modes`.
    pub fn apply_phase(&self, modes: &[usize], theta: f64) -> Result<Self> {
        self.check_modes(modes)?;
        let totals: Vec<f64> = self.basis.iter().map(|idx| idx.total_in(modes) as f64).collect();
        let mut out = self.clone();
        for (&(i, j), v) in out.entries.iter_mut() {
            if totals[i] != totals[j] {
                *v *= Complex64::from_polar(1.0, theta * (totals[i] - totals[j]));
            }
        }
        Ok(out)
    }

    /// Thermal-loss channel on one mode through its beamsplitter dilation:
    /// the mode meets an environment holding a thermal state of mean
    /// `n_b / (1 - kappa)`, truncated at `env_cutoff` photons, and the
    /// environment is traced out. The mode's cutoff grows by
    /// `env_cutoff - 1` so that no output photons are lost.
    ///
    /// `kappa = 1` with `n_b = 0` is the identity.
    pub fn apply_thermal_loss(&self, mode: usize, kappa: f64, n_b: f64, env_cutoff: usize) -> Result<Self> {
        self.check_modes(&[mode])?;
        if !(kappa > 0.0 && kappa <= 1.0) || !(n_b >= 0.0 && n_b.is_finite()) {
            return Err(domain(format!("invalid loss parameters kappa={kappa}, n_b={n_b}")));
        }
        if kappa == 1.0 {
            if n_b == 0.0 {
                return Ok(self.clone());
            }
            return Err(domain("kappa = 1 with n_b > 0 has no beamsplitter dilation"));
        }
        let env_mean = n_b / (1.0 - kappa);
        if env_cutoff == 0 {
            return Err(domain("environment cutoff must be positive"));
        }
        check_tail(env_mean, env_cutoff, STATE_TOL)?;

        let d_in = self.dims[mode];
        let amps = beamsplitter_amplitudes(kappa.sqrt(), (1.0 - kappa).sqrt(), d_in, env_cutoff);
        let env_weights: Vec<f64> = (0..env_cutoff).map(|e| thermal_prob(env_mean, e)).collect();

        let mut dims = self.dims.clone();
        dims[mode] = d_in + env_cutoff - 1;
        let mut b = Builder::new(dims);
        // out_index[i][n'] is the output basis index of basis[i] with the
        // lossy mode set to n'.
        let mut out_index = Vec::with_capacity(self.basis.len());
        for idx in &self.basis {
            let top = idx.0[mode] + env_cutoff;
            let row = (0..top).map(|n| b.intern(idx.with(mode, n))).collect::<Result<Vec<_>>>()?;
            out_index.push(row);
        }
        for (&(i, j), &v) in &self.entries {
            let (ni, nj) = (self.basis[i].0[mode], self.basis[j].0[mode]);
            for (e, &pe) in env_weights.iter().enumerate() {
                let (ai, aj) = (&amps[e][ni], &amps[e][nj]);
                // The environment keeps e' photons on both sides.
                for e_out in 0..=ni.min(nj) + e {
                    let (oi, oj) = (ni + e - e_out, nj + e - e_out);
                    let w = pe * ai[oi] * aj[oj];
                    if w != 0.0 {
                        b.add(out_index[i][oi], out_index[j][oj], v * w);
                    }
                }
            }
        }
        Ok(b.finish())
    }

    /// `Tr(ρ O)` for `O = ops[0] ops[1] ... ops[k-1]`.
    pub fn expect(&self, ops: &[Ladder]) -> Result<Complex64> {
        for op in ops {
            let (Ladder::Create(k) | Ladder::Annihilate(k)) = *op;
            self.check_modes(&[k])?;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        'kets: for (i, idx) in self.basis.iter().enumerate() {
            let mut photons = idx.0.clone();
            let mut coeff = 1.0;
            for op in ops.iter().rev() {
                match *op {
                    Ladder::Create(k) => {
                        photons[k] += 1;
                        coeff *= (photons[k] as f64).sqrt();
                    }
                    Ladder::Annihilate(k) => {
                        if photons[k] == 0 {
                            continue 'kets;
                        }
                        coeff *= (photons[k] as f64).sqrt();
                        photons[k] -= 1;
                    }
                }
            }
            if let Some(&k) = self.index.get(&ModeIndex(photons)) {
                if let Some(v) = self.entries.get(&(i, k)) {
                    acc += v * coeff;
                }
            }
        }
        Ok(acc)
    }

    pub fn mean_photons(&self, mode: usize) -> Result<f64> {
        Ok(self.expect(&[Ladder::Create(mode), Ladder::Annihilate(mode)])?.re)
    }

    /// Covariance matrix of the quadratures `x = a + a†`, `p = i(a† - a)`
    /// of `modes`, ordered `(x_1, p_1, x_2, p_2, ...)`; vacuum is the
    /// identity.
    pub fn covariance(&self, modes: &[usize]) -> Result<DMatrix<f64>> {
        self.check_modes(modes)?;
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        // Each quadrature as a combination of ladder operators.
        let quads: Vec<[(Complex64, Ladder); 2]> = modes
            .iter()
            .flat_map(|&k| {
                [
                    [(one, Ladder::Annihilate(k)), (one, Ladder::Create(k))],
                    [(-i, Ladder::Annihilate(k)), (i, Ladder::Create(k))],
                ]
            })
            .collect();
        let n = quads.len();
        let mut first = vec![0.0; n];
        for (u, q) in quads.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for &(c, op) in q {
                s += c * self.expect(&[op])?;
            }
            first[u] = s.re;
        }
        let mut cm = DMatrix::zeros(n, n);
        for u in 0..n {
            for v in u..n {
                let mut s = Complex64::new(0.0, 0.0);
                for &(cu, ou) in &quads[u] {
                    for &(cv, ov) in &quads[v] {
                        s += cu * cv * (self.expect(&[ou, ov])? + self.expect(&[ov, ou])?);
                    }
                }
                let val = s.re / 2.0 - first[u] * first[v];
                cm[(u, v)] = val;
                cm[(v, u)] = val;
            }
        }
        Ok(cm)
    }

    /// Groups of basis indices coupled by nonzero entries.
    fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.basis.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (&(i, j), v) in &self.entries {
            if i != j && v.norm() > 0.0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let r = find(&mut parent, x);
            groups.entry(r).or_default().push(x);
        }
        groups.into_values().collect()
    }

    /// Eigenvalues of a Hermitian operator, block by block.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_hermitian()?;
        let mut out = Vec::with_capacity(self.basis.len());
        for block in self.blocks() {
            if block.len() == 1 {
                let i = block[0];
                out.push(self.entries.get(&(i, i)).map_or(0.0, |v| v.re));
                continue;
            }
            if block.len() > MAX_DENSE_BLOCK {
                return Err(Error::Resource {
                    needed: block.len(),
                    limit: MAX_DENSE_BLOCK,
                });
            }
            let pos: HashMap<usize, usize> = block.iter().enumerate().map(|(a, &i)| (i, a)).collect();
            let mut m = DMatrix::<Complex64>::zeros(block.len(), block.len());
            for (a, &i) in block.iter().enumerate() {
                for (&(_, j), v) in self.entries.range((i, 0)..(i + 1, 0)) {
                    m[(a, pos[&j])] = *v;
                }
            }
            out.extend(m.symmetric_eigen().eigenvalues.iter());
        }
        Ok(out)
    }
}

fn check_tail(mean: f64, cutoff: usize, tolerance: f64) -> Result<()> {
    let tail = thermal_tail(mean, cutoff);
    if tail > tolerance {
        return Err(Error::TailBound {
            tail,
            tolerance,
            suggested: thermal_cutoff(mean, tolerance / 10.0),
        });
    }
    Ok(())
}

/// Environment cutoff leaving less than [`ENV_TAIL`] of the thermal mass.
pub fn env_cutoff(kappa: f64, n_b: f64) -> usize {
    if n_b == 0.0 {
        return 1;
    }
    thermal_cutoff(n_b / (1.0 - kappa), ENV_TAIL)
}

/// Beamsplitter output amplitudes: `amps[e][n][j]` is the amplitude of
/// `|j, n + e - j>` (signal, environment) for input `|n, e>`. Built by
/// applying normalized creation operators of the rotated modes
/// `t a† - r f†` and `r a† + t f†`, so every intermediate vector is a
/// normalized state and no factorials appear.
fn beamsplitter_amplitudes(t: f64, r: f64, d_in: usize, env_cutoff: usize) -> Vec<Vec<Vec<f64>>> {
    // Applies (alpha a† + beta f†)/sqrt(k) to a state with `len - 1` photons.
    fn raise(state: &[f64], alpha: f64, beta: f64, k: usize) -> Vec<f64> {
        let total = state.len() - 1;
        let norm = 1.0 / (k as f64).sqrt();
        let mut next = vec![0.0; state.len() + 1];
        for (j, &c) in state.iter().enumerate() {
            next[j + 1] += c * alpha * ((j + 1) as f64).sqrt() * norm;
            next[j] += c * beta * ((total - j + 1) as f64).sqrt() * norm;
        }
        next
    }
    let mut out = Vec::with_capacity(env_cutoff);
    let mut env_state = vec![1.0];
    for e in 0..env_cutoff {
        if e > 0 {
            env_state = raise(&env_state, r, t, e);
        }
        let mut per_n = Vec::with_capacity(d_in);
        let mut state = env_state.clone();
        for n in 0..d_in {
            if n > 0 {
                state = raise(&state, t, -r, n);
            }
            per_n.push(state.clone());
        }
        out.push(per_n);
    }
    out
}

/// Von Neumann entropy in bits. Eigenvalues in `[-1e-10, 0)` are treated
/// as zero; anything more negative is an invalid state.
pub fn von_neumann_entropy(state: &FockOperator) -> Result<f64> {
    state.validate_state()?;
    let mut s = 0.0;
    for lam in state.eigenvalues()? {
        if lam < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lam:e}")));
        }
        if lam > 0.0 {
            s -= lam * lam.log2();
        }
    }
    Ok(s.max(0.0))
}

/// `S(A) + S(B) - S(AB)` for the split of the modes into `a_modes` and
/// the rest.
pub fn mutual_information(state: &FockOperator, a_modes: &[usize]) -> Result<f64> {
    state.check_modes(a_modes)?;
    let b_modes: Vec<usize> = (0..state.modes()).filter(|k| !a_modes.contains(k)).collect();
    let sa = von_neumann_entropy(&state.partial_trace(a_modes)?)?;
    let sb = von_neumann_entropy(&state.partial_trace(&b_modes)?)?;
    Ok(sa + sb - von_neumann_entropy(state)?)
}

/// `Σ p_k ρ_k` over the union of the members' supports.
pub fn mixture(ensemble: &[(f64, FockOperator)]) -> Result<FockOperator> {
    let first = ensemble.first().ok_or_else(|| domain("empty ensemble"))?;
    let mut b = Builder::new(first.1.dims.clone());
    for (p, op) in ensemble {
        if op.dims != first.1.dims {
            return Err(domain("ensemble members have different cutoffs"));
        }
        let map: Vec<usize> = op.basis.iter().map(|idx| b.intern(idx.clone())).collect::<Result<_>>()?;
        for (&(i, j), &v) in &op.entries {
            b.add(map[i], map[j], v * *p);
        }
    }
    Ok(b.finish())
}

/// `S(Σ p_k ρ_k) - Σ p_k S(ρ_k)` in bits.
pub fn holevo_information(ensemble: &[(f64, FockOperator)]) -> Result<f64> {
    let total: f64 = ensemble.iter().map(|(p, _)| p).sum();
    if ensemble.iter().any(|(p, _)| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(domain(format!("ensemble probabilities sum to {total}")));
    }
    let mut avg = 0.0;
    for (p, op) in ensemble {
        avg += p * von_neumann_entropy(op)?;
    }
    Ok(von_neumann_entropy(&mixture(ensemble)?)? - avg)
}

/// Uniform ensemble of `e^{iθN}` rotations of `state` for `θ = 2πk/count`.
/// With `count` larger than the photon-number span of `modes`, the ensemble
/// average equals the continuous phase average exactly.
pub fn phase_ensemble(state: &FockOperator, modes: &[usize], count: usize) -> Result<Vec<(f64, FockOperator)>> {
    if count == 0 {
        return Err(domain("phase count must be positive"));
    }
    (0..count)
        .map(|k| Ok((1.0 / count as f64, state.apply_phase(modes, 2.0 * PI * k as f64 / count as f64)?)))
        .collect()
}

/// Phase count that makes [`phase_ensemble`] exact on `modes`: at least
/// 64 and more than the largest photon number there.
pub fn exact_phase_count(state: &FockOperator, modes: &[usize]) -> usize {
    let span = state.basis.iter().map(|idx| idx.total_in(modes)).max().unwrap_or(0);
    (span + 2).max(64)
}

/// Purification of the optimal dephasing input on `2m` modes:
/// `Σ_n sqrt(P_n) |n>_A |n>_R`, with the signal modes `0..m` and the
/// reference modes `m..2m`, each truncated at `cutoff` photons.
pub fn dephasing_optimal_input(m: usize, energy: f64, cutoff: usize) -> Result<FockOperator> {
    if m == 0 || cutoff == 0 {
        return Err(domain("need at least one mode and a positive cutoff"));
    }
    let lambda = dephasing::solve_lambda(m as u64, energy)?;
    let mut amps = Vec::new();
    let mut pattern = vec![0usize; m];
    loop {
        let nvec: Vec<u64> = pattern.iter().map(|&n| n as u64).collect();
        let w = dephasing::optimal_joint_weight(m as u64, lambda, &nvec)?;
        let mut photons = pattern.clone();
        photons.extend_from_slice(&pattern);
        amps.push((photons, Complex64::new(w.sqrt(), 0.0)));
        // Odometer over the m signal modes.
        let mut k = 0;
        while k < m {
            pattern[k] += 1;
            if pattern[k] < cutoff {
                break;
            }
            pattern[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    FockOperator::from_pure(&vec![cutoff; 2 * m], &amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::g_unchecked as g;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn dephasing_examples() {
        let diag = FockOperator::from_diagonal(&[3], &[(vec![0], 0.3), (vec![2], 0.7)]).unwrap();
        assert_eq!(diag.apply_dephasing(&[0]).unwrap().max_abs_diff(&diag), 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = FockOperator::from_pure(&[2], &[(vec![0], c(h)), (vec![1], c(h))]).unwrap();
        let d = plus.apply_dephasing(&[0]).unwrap();
        let want = FockOperator::from_diagonal(&[2], &[(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        assert!(d.max_abs_diff(&want) < 1e-15);

        let w = FockOperator::from_pure(&[2, 2], &[(vec![0, 1], c(h)), (vec![1, 0], c(h))]).unwrap();
        assert_eq!(w.apply_dephasing(&[0, 1]).unwrap().max_abs_diff(&w), 0.0);
        assert_eq!(w.apply_dephasing(&[]).unwrap().max_abs_diff(&w), 0.0);
        assert!(w.apply_dephasing(&[0]).unwrap().max_offdiagonal() == 0.0);
    }

    #[test]
    fn complementary_examples() {
        let vac = FockOperator::fock_state(&[4, 4], &[0, 0]).unwrap();
        let d = vac.complementary_dephasing(&[0, 1]).unwrap();
        assert_eq!(d.probs(), &[1.0]);

        let th = FockOperator::thermal(0.7, 80).unwrap();
        let d = th.complementary_dephasing(&[0]).unwrap();
        for n in 0..20 {
            assert!((d.get(n) - thermal_prob(0.7, n)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_photon_loss() {
        let one = FockOperator::fock_state(&[2], &[1]).unwrap();
        let out = one.apply_thermal_loss(0, 0.3, 0.0, 1).unwrap();
        let want = FockOperator::from_diagonal(&[2], &[(vec![0], 0.7), (vec![1], 0.3)]).unwrap();
        assert!(out.max_abs_diff(&want) < 1e-15);

        let vac = FockOperator::fock_state(&[3], &[0]).unwrap();
        let out = vac.apply_thermal_loss(0, 0.6, 0.0, 1).unwrap();
        assert!(out.max_abs_diff(&vac) < 1e-15);
        assert!(vac.apply_thermal_loss(0, 1.0, 0.0, 1).unwrap().max_abs_diff(&vac) == 0.0);
    }

    #[test]
    fn thermal_loss_of_vacuum_is_thermal() {
        let vac = FockOperator::fock_state(&[1], &[0]).unwrap();
        let nb = 0.4;
        let out = vac.apply_thermal_loss(0, 0.5, nb, env_cutoff(0.5, nb)).unwrap();
        for (idx, p) in out.diagonal() {
            assert!((p - thermal_prob(nb, idx.photons()[0])).abs() < 1e-13);
        }
        assert!((out.trace() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn too_small_environment_is_reported() {
        let vac = FockOperator::fock_state(&[1], &[0]).unwrap();
        match vac.apply_thermal_loss(0, 0.5, 1.0, 5) {
            Err(Error::TailBound { suggested, .. }) => assert!(suggested > 40),
            other => panic!("{other:?}"),
        }
        assert!(vac.apply_thermal_loss(0, 1.0, 0.5, 5).is_err());
    }

    #[test]
    fn entanglement_and_holevo_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = FockOperator::from_pure(&[2, 2], &[(vec![0, 0], c(h)), (vec![1, 1], c(h))]).unwrap();
        assert!((mutual_information(&bell, &[0]).unwrap() - 2.0).abs() < 1e-12);

        let a = FockOperator::thermal(0.3, 40).unwrap();
        let b = FockOperator::thermal(1.2, 200).unwrap();
        let prod = a.tensor(&b).unwrap();
        assert!(mutual_information(&prod, &[0]).unwrap().abs() < 1e-9);
        assert!((von_neumann_entropy(&prod).unwrap() - g(0.3) - g(1.2)).abs() < 1e-9);

        let zero = FockOperator::fock_state(&[2], &[0]).unwrap();
        let one = FockOperator::fock_state(&[2], &[1]).unwrap();
        let chi = holevo_information(&[(0.5, zero.clone()), (0.5, one)]).unwrap();
        assert!((chi - 1.0).abs() < 1e-12);
        let chi = holevo_information(&[(0.5, zero.clone()), (0.5, zero)]).unwrap();
        assert!(chi.abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut op = FockOperator::fock_state(&[2], &[0]).unwrap();
        op.entries.insert((0, 0), Complex64::new(1.0, 0.5));
        assert!(matches!(von_neumann_entropy(&op), Err(Error::Domain(_))));
    }

    #[test]
    fn tmsv_moments_and_entropy() {
        let e = 0.4;
        let st = FockOperator::tmsv(e, 60).unwrap();
        let cm = st.covariance(&[0, 1]).unwrap();
        let corr = 2.0 * (e * (e + 1.0)).sqrt();
        assert!((cm[(0, 0)] - (2.0 * e + 1.0)).abs() < 1e-12);
        assert!((cm[(0, 2)] - corr).abs() < 1e-12);
        assert!((cm[(1, 3)] + corr).abs() < 1e-12);
        assert!(cm[(0, 1)].abs() < 1e-14);
        assert!(von_neumann_entropy(&st).unwrap().abs() < 1e-10);
        let sa = von_neumann_entropy(&st.partial_trace(&[0]).unwrap()).unwrap();
        assert!((sa - g(e)).abs() < 1e-10);
    }

    #[test]
    fn optimal_input_single_mode_is_tmsv() {
        let a = dephasing_optimal_input(1, 0.5, 50).unwrap();
        let b = FockOperator::tmsv(0.5, 50).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    fn random_state() -> impl Strategy<Value = FockOperator> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 18).prop_map(|raw| {
            // Two pure states on a 3x3 two-mode space, mixed 0.7 / 0.3.
            let make = |chunk: &[(f64, f64)]| {
                let norm: f64 = chunk.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt().max(1e-3);
                let amps: Vec<_> = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, b))| (vec![k / 3, k % 3], Complex64::new(a / norm, b / norm)))
                    .collect();
                FockOperator::from_pure(&[3, 3], &amps).unwrap()
            };
            let (p, q) = (make(&raw[..9]), make(&raw[9..]));
            let norm = 0.7 * p.trace() + 0.3 * q.trace();
            mixture(&[(0.7 / norm, p), (0.3 / norm, q)]).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn dephasing_is_idempotent(st in random_state()) {
            let once = st.apply_dephasing(&[0, 1]).unwrap();
            let twice = once.apply_dephasing(&[0, 1]).unwrap();
            prop_assert_eq!(once.max_abs_diff(&twice), 0.0);
            prop_assert!((once.trace() - st.trace()).abs() < 1e-15);
        }

        #[test]
        fn loss_commutes_with_dephasing(st in random_state(), k in 0.2f64..0.95, nb in 0.0f64..0.5) {
            let ec = env_cutoff(k, nb);
            let a = st.apply_dephasing(&[0, 1]).unwrap().apply_thermal_loss(0, k, nb, ec).unwrap();
            let b = st.apply_thermal_loss(0, k, nb, ec).unwrap().apply_dephasing(&[0, 1]).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-9);
            prop_assert!((a.trace() - st.trace()).abs() < 1e-9);
            let lam_min = a.eigenvalues().unwrap().into_iter().fold(f64::INFINITY, f64::min);
            prop_assert!(lam_min > -STATE_TOL);
        }

        #[test]
        fn complementary_output_is_normalized(st in random_state()) {
            let d = st.complementary_dephasing(&[0, 1]).unwrap();
            prop_assert!((d.mass() - 1.0).abs() < 1e-10);
        }
    }
}
