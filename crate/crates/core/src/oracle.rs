//! Brute-force finite chains for checking the transfer-matrix results.
//!
//! Two constructions are available. Dense mode builds the full `8^N`
//! Hamiltonian of a periodic chain and diagonalizes it. Enumeration mode sums
//! over all `2^N` Ising configurations, using that the dimers are
//! independent once the Ising spins are fixed. Neither uses the closed forms
//! of the `transfer` or `channel` modules.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::channel::channel_density_matrix;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::model::{CouplingSet, IsingPair, Thermo};
use crate::transfer::{free_energy_per_cell, ising_statistics};
use crate::xstate::XStateDensityMatrix;

pub const DENSE_CELL_LIMIT: usize = 3;
pub const ENUMERATION_CELL_LIMIT: usize = 16;

/// Periodic chain of `cells` unit cells (Ising spin plus dimer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteChainSpec {
    pub cells: usize,
    pub couplings: CouplingSet,
}

impl FiniteChainSpec {
    pub fn new(cells: usize, couplings: CouplingSet) -> Result<Self> {
        if cells < 2 {
            return Err(invalid("cells", format!("need at least 2 cells, got {cells}")));
        }
        couplings.validate()?;
        Ok(Self { cells, couplings })
    }

    fn check_capacity(&self, mode: OracleMode) -> Result<()> {
        let (name, limit) = match mode {
            OracleMode::Dense => ("dense", DENSE_CELL_LIMIT),
            OracleMode::Enumeration => ("enumeration", ENUMERATION_CELL_LIMIT),
        };
        if self.cells > limit {
            return Err(Error::Capacity {
                mode: name,
                cells: self.cells,
                limit,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Dense,
    Enumeration,
}

/// Dimer part of the bond Hamiltonian for fixed Ising neighbours, in the
/// basis (up up, up down, down up, down down).
pub fn dimer_hamiltonian_matrix(pair: IsingPair, c: &CouplingSet) -> Matrix4<f64> {
    let field_left = c.h - c.j1 * pair.s_left();
    let field_right = c.h - c.j1 * pair.s_right();
    let mut m = Matrix4::zeros();
    for idx in 0..4 {
        let a = spin_z(idx >> 1);
        let b = spin_z(idx & 1);
        m[(idx, idx)] = c.j * a * b - field_left * a - field_right * b;
    }
    m[(1, 2)] = c.j / 2.0;
    m[(2, 1)] = c.j / 2.0;
    m
}

/// `S^z` for a local bit (0 = up).
fn spin_z(bit: usize) -> f64 {
    if bit == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Sites per cell: Ising, left dimer spin, right dimer spin.
const SITES_PER_CELL: usize = 3;

struct ChainLayout {
    sites: usize,
}

impl ChainLayout {
    fn new(cells: usize) -> Self {
        Self {
            sites: SITES_PER_CELL * cells,
        }
    }

    fn dim(&self) -> usize {
        1 << self.sites
    }

    /// Bit position of a site; site 0 is the most significant bit.
    fn shift(&self, site: usize) -> usize {
        self.sites - 1 - site
    }

    fn sz(&self, state: usize, site: usize) -> f64 {
        spin_z((state >> self.shift(site)) & 1)
    }

    fn ising(&self, cell: usize) -> usize {
        SITES_PER_CELL * cell
    }

    fn left(&self, cell: usize) -> usize {
        SITES_PER_CELL * cell + 1
    }

    fn right(&self, cell: usize) -> usize {
        SITES_PER_CELL * cell + 2
    }
}

/// Adds bond `k` (dimer `k` with Ising spins `k` and `k+1`) to `m`.
fn add_bond(m: &mut DMatrix<f64>, layout: &ChainLayout, cells: usize, k: usize, c: &CouplingSet) {
    let next = (k + 1) % cells;
    let (i0, i1) = (layout.ising(k), layout.ising(next));
    let (l, r) = (layout.left(k), layout.right(k));
    for state in 0..layout.dim() {
        let (s0, s1) = (layout.sz(state, i0), layout.sz(state, i1));
        let (sl, sr) = (layout.sz(state, l), layout.sz(state, r));
        m[(state, state)] += c.j * sl * sr + c.j1 * (s0 * sl + sr * s1) - c.h * (sl + sr) - 0.5 * c.h * (s0 + s1);
        if sl != sr {
            let flipped = state ^ (1 << layout.shift(l)) ^ (1 << layout.shift(r));
            m[(flipped, state)] += c.j / 2.0;
        }
    }
}

/// Full Hamiltonian of the periodic chain (dense mode only).
pub fn build_chain_hamiltonian(spec: &FiniteChainSpec) -> Result<DMatrix<f64>> {
    spec.check_capacity(OracleMode::Dense)?;
    let layout = ChainLayout::new(spec.cells);
    let mut m = DMatrix::zeros(layout.dim(), layout.dim());
    for k in 0..spec.cells {
        add_bond(&mut m, &layout, spec.cells, k, &spec.couplings);
    }
    Ok(m)
}

/// Bond Hamiltonians of the periodic chain; they sum to the full Hamiltonian.
pub fn build_bond_hamiltonians(spec: &FiniteChainSpec) -> Result<Vec<DMatrix<f64>>> {
    spec.check_capacity(OracleMode::Dense)?;
    let layout = ChainLayout::new(spec.cells);
    Ok((0..spec.cells)
        .map(|k| {
            let mut m = DMatrix::zeros(layout.dim(), layout.dim());
            add_bond(&mut m, &layout, spec.cells, k, &spec.couplings);
            m
        })
        .collect())
}

/// Largest element of any commutator between two bond Hamiltonians.
pub fn bond_commutator_defect(spec: &FiniteChainSpec) -> Result<f64> {
    let bonds = build_bond_hamiltonians(spec)?;
    let mut worst = 0.0f64;
    for a in 0..bonds.len() {
        for b in (a + 1)..bonds.len() {
            let comm = &bonds[a] * &bonds[b] - &bonds[b] * &bonds[a];
            worst = worst.max(comm.amax());
        }
    }
    Ok(worst)
}

/// Spectrum and Gibbs weights of a dense chain.
pub struct DenseGibbs {
    cells: usize,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    /// `exp(-beta (E - E_min))`.
    weights: Vec<f64>,
    ground_energy: f64,
    beta: f64,
}

impl DenseGibbs {
    pub fn new(spec: &FiniteChainSpec, t: &Thermo) -> Result<Self> {
        let h = build_chain_hamiltonian(spec)?;
        let eigen = h.symmetric_eigen();
        let ground_energy = eigen.eigenvalues.min();
        let beta = t.beta();
        let weights = eigen
            .eigenvalues
            .iter()
            .map(|e| (-beta * (e - ground_energy)).exp())
            .collect();
        Ok(Self {
            cells: spec.cells,
            eigen,
            weights,
            ground_energy,
            beta,
        })
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn ln_partition_function(&self) -> f64 {
        -self.beta * self.ground_energy + self.weights.iter().sum::<f64>().ln()
    }

    /// Reduced density matrix of dimer `k`, as a full 4x4 matrix.
    pub fn reduced_dimer(&self, k: usize) -> Result<Matrix4<f64>> {
        if k >= self.cells {
            return Err(invalid(
                "dimer",
                format!("index {k} outside a {}-cell chain", self.cells),
            ));
        }
        let layout = ChainLayout::new(self.cells);
        let z: f64 = self.weights.iter().sum();
        let vectors = &self.eigen.eigenvectors;
        let (shift_l, shift_r) = (layout.shift(layout.left(k)), layout.shift(layout.right(k)));
        let dimer_mask = (1 << shift_l) | (1 << shift_r);
        let local = |state: usize| (((state >> shift_l) & 1) << 1) | ((state >> shift_r) & 1);
        let with_local = |rest: usize, d: usize| rest | (((d >> 1) & 1) << shift_l) | ((d & 1) << shift_r);
        let mut rho = Matrix4::zeros();
        for (n, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let v = vectors.column(n);
            for state in 0..layout.dim() {
                if v[state] == 0.0 {
                    continue;
                }
                let rest = state & !dimer_mask;
                let row = local(state);
                for col in 0..4 {
                    rho[(row, col)] += w * v[state] * v[with_local(rest, col)];
                }
            }
        }
        Ok(rho / z)
    }
}

/// Per-pair dimer Gibbs block and log Boltzmann factor from a dense 4x4
/// diagonalization.
#[derive(Debug, Clone, Copy)]
struct PairBlock {
    log_weight: f64,
    gibbs: Matrix4<f64>,
}

fn pair_block(pair: IsingPair, c: &CouplingSet, beta: f64) -> PairBlock {
    let eigen = dimer_hamiltonian_matrix(pair, c).symmetric_eigen();
    let e_min = eigen.eigenvalues.min();
    let w = eigen.eigenvalues.map(|e| (-beta * (e - e_min)).exp());
    let sum = w.sum();
    let v = eigen.eigenvectors;
    let gibbs = v * Matrix4::from_diagonal(&(w / sum)) * v.transpose();
    let ising_zeeman = 0.5 * beta * c.h * pair.sum();
    PairBlock {
        log_weight: ising_zeeman - beta * e_min + sum.ln(),
        gibbs,
    }
}

fn pair_index(up_left: bool, up_right: bool) -> usize {
    match (up_left, up_right) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    }
}

fn blocks(c: &CouplingSet, beta: f64) -> [PairBlock; 4] {
    IsingPair::ALL.map(|p| pair_block(p, c, beta))
}

fn x_part(m: &Matrix4<f64>) -> XStateDensityMatrix {
    XStateDensityMatrix::real(
        m[(0, 0)],
        m[(1, 1)],
        m[(2, 2)],
        m[(3, 3)],
        0.5 * (m[(1, 2)] + m[(2, 1)]),
    )
}

/// Finite-chain observables for one dimer and its left Ising spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainObservables {
    pub free_energy: f64,
    pub m_ising: f64,
    pub eps_ising: f64,
    pub rho: XStateDensityMatrix,
}

impl ChainObservables {
    fn from_pair_probabilities(free_energy: f64, probs: [f64; 4], blocks: &[PairBlock; 4]) -> Self {
        let mut m = 0.0;
        let mut eps = 0.0;
        let mut rho = Matrix4::zeros();
        for (p, (pair, block)) in probs.iter().zip(IsingPair::ALL.iter().zip(blocks)) {
            m += p * pair.s_left();
            eps += p * pair.s_left() * pair.s_right();
            rho += block.gibbs * *p;
        }
        Self {
            free_energy,
            m_ising: m,
            eps_ising: eps,
            rho: x_part(&rho),
        }
    }

    pub fn max_deviation(&self, other: &Self) -> Deviation {
        Deviation {
            free_energy: (self.free_energy - other.free_energy).abs(),
            m_ising: (self.m_ising - other.m_ising).abs(),
            eps_ising: (self.eps_ising - other.eps_ising).abs(),
            rho: self.rho.max_abs_diff_x(&other.rho),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub free_energy: f64,
    pub m_ising: f64,
    pub eps_ising: f64,
    pub rho: f64,
}

impl Deviation {
    pub fn max(&self) -> f64 {
        self.free_energy.max(self.m_ising).max(self.eps_ising).max(self.rho)
    }
}

const ENUMERATION_CHUNK: usize = 1024;

/// Exact observables of a periodic chain by summing over every Ising
/// configuration.
pub fn enumerate_chain(spec: &FiniteChainSpec, t: &Thermo, exec: Execution) -> Result<ChainObservables> {
    spec.check_capacity(OracleMode::Enumeration)?;
    let n = spec.cells;
    let beta = t.beta();
    let blocks = blocks(&spec.couplings, beta);
    let configs = 1usize << n;
    let log_weight = |config: usize| -> (f64, usize) {
        // bit k set = Ising spin k down
        let up = |k: usize| (config >> (k % n)) & 1 == 0;
        let lw = (0..n).map(|k| blocks[pair_index(up(k), up(k + 1))].log_weight).sum();
        (lw, pair_index(up(0), up(1)))
    };
    let chunks = configs.div_ceil(ENUMERATION_CHUNK);
    let chunk_range = |i: usize| (i * ENUMERATION_CHUNK)..((i + 1) * ENUMERATION_CHUNK).min(configs);
    let max_lw = exec
        .map(chunks, |i| {
            chunk_range(i)
                .map(|cfg| log_weight(cfg).0)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let partial = exec.map(chunks, |i| {
        let mut acc = [0.0; 4];
        for cfg in chunk_range(i) {
            let (lw, first) = log_weight(cfg);
            acc[first] += (lw - max_lw).exp();
        }
        acc
    });
    let mut sums = [0.0; 4];
    for acc in &partial {
        for (s, a) in sums.iter_mut().zip(acc) {
            *s += a;
        }
    }
    let z: f64 = sums.iter().sum();
    let ln_z = max_lw + z.ln();
    let probs = sums.map(|s| s / z);
    Ok(ChainObservables::from_pair_probabilities(
        -ln_z / (beta * n as f64),
        probs,
        &blocks,
    ))
}

/// Reduced density matrix of one dimer of a finite periodic chain.
pub fn gibbs_reduced_dimer(spec: &FiniteChainSpec, t: &Thermo, mode: OracleMode) -> Result<XStateDensityMatrix> {
    match mode {
        OracleMode::Dense => Ok(x_part(&DenseGibbs::new(spec, t)?.reduced_dimer(0)?)),
        OracleMode::Enumeration => Ok(enumerate_chain(spec, t, Execution::Sequential)?.rho),
    }
}

/// Exact finite-chain observables from the 2x2 transfer matrix product,
/// keeping both eigenvalues.
pub fn transfer_product_observables(spec: &FiniteChainSpec, t: &Thermo) -> Result<ChainObservables> {
    spec.check_capacity(OracleMode::Enumeration)?;
    let n = spec.cells as i32;
    let beta = t.beta();
    let blocks = blocks(&spec.couplings, beta);
    let scale = blocks.iter().map(|b| b.log_weight).fold(f64::NEG_INFINITY, f64::max);
    let w = blocks.map(|b| (b.log_weight - scale).exp());
    let transfer = Matrix2::new(w[0], w[1], w[2], w[3]);
    let eigen = transfer.symmetric_eigen();
    let (ip, im) = if eigen.eigenvalues[0] >= eigen.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let (lp, lm) = (eigen.eigenvalues[ip], eigen.eigenvalues[im]);
    let (u, v) = (eigen.eigenvectors.column(ip), eigen.eigenvectors.column(im));
    let r = lm / lp;
    // T^(N-1) / lp^(N-1)
    let power = u * u.transpose() + v * v.transpose() * r.powi(n - 1);
    let trace = 1.0 + r.powi(n);
    let mut probs = [0.0; 4];
    for (idx, pair) in IsingPair::ALL.iter().enumerate() {
        let a = usize::from(pair.s_left() < 0.0);
        let b = usize::from(pair.s_right() < 0.0);
        probs[idx] = transfer[(a, b)] / lp * power[(b, a)] / trace;
    }
    let ln_z = f64::from(n) * (scale + lp.ln()) + trace.ln();
    Ok(ChainObservables::from_pair_probabilities(
        -ln_z / (beta * f64::from(n)),
        probs,
        &blocks,
    ))
}

/// `ln(lambda_+^N + lambda_-^N)` from the closed-form transfer eigenvalues.
pub fn transfer_ln_partition_function(c: &CouplingSet, t: &Thermo, cells: usize) -> Result<f64> {
    let w = crate::transfer::transfer_weights(c, t)?;
    let ev = crate::transfer::transfer_eigenvalues(&w);
    let n = cells as i32;
    Ok(f64::from(n) * ev.ln_lambda_plus() + (1.0 + ev.ratio.powi(n)).ln())
}

/// Thermodynamic-limit observables from the closed forms.
pub fn limit_observables(c: &CouplingSet, t: &Thermo) -> Result<ChainObservables> {
    let stats = ising_statistics(c, t)?;
    Ok(ChainObservables {
        free_energy: free_energy_per_cell(c, t)?,
        m_ising: stats.m_ising,
        eps_ising: stats.eps_ising,
        rho: channel_density_matrix(c, t)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferComparison {
    pub cells: usize,
    /// `|lambda_- / lambda_+|^N`, the expected scale of finite-size effects.
    pub finite_size_scale: f64,
    pub transfer_product: ChainObservables,
    pub enumeration: ChainObservables,
    pub limit: ChainObservables,
    pub finite_vs_limit: Deviation,
    pub enumeration_vs_product: Deviation,
}

pub fn compare_with_transfer(spec: &FiniteChainSpec, t: &Thermo) -> Result<TransferComparison> {
    let c = &spec.couplings;
    let product = transfer_product_observables(spec, t)?;
    let enumeration = enumerate_chain(spec, t, Execution::Sequential)?;
    let limit = limit_observables(c, t)?;
    let ev = crate::transfer::transfer_eigenvalues(&crate::transfer::transfer_weights(c, t)?);
    Ok(TransferComparison {
        cells: spec.cells,
        finite_size_scale: ev.ratio.abs().powi(spec.cells as i32),
        transfer_product: product,
        enumeration,
        limit,
        finite_vs_limit: product.max_deviation(&limit),
        enumeration_vs_product: enumeration.max_deviation(&product),
    })
}
