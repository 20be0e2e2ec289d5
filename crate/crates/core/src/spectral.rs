//! Compact form of the network flow and its spectral guarantees.
//!
//! Stacking every agent's states gives the affine system
//!
//! ```text
//! d/dt col{x, z} = Q · col{x, z} + col{Âᵀ b̂, −b̂}
//! ```
//!
//! with `Â = diag{A_ij}`, `b̂ = col{b_ij}` and two lifted Laplacians: `L̂`
//! (block-diagonal over the agent graphs) and `L̂_𝔾` (cluster graph). The
//! row scheme uses `Q = [[−ÂᵀÂ − L̂_𝔾, ÂᵀL̂], [Â, −L̂]]`, the column scheme
//! swaps the two Laplacians. Both are instances of
//! `M = [[−M₁ᵀM₁ − M₂, M₁ᵀM₃], [M₁, −M₃]]` with `M₂`, `M₃` symmetric PSD,
//! whose eigenvalues are real and non-positive with a non-defective zero.
//!
//! The simulator never propagates states through `Q`; this module exists for
//! cross-checks, step sizing and verification.

use alloc::vec::Vec;

use crate::dynamics::NetworkState;
use crate::graph::Topology;
use crate::linalg::{eig, eigenvalues_symmetric, solve_least_squares, DenseMatrix, DenseVector, LinalgError, Spectrum};
use crate::partition::{Partition, Scheme};

/// Relative tolerance for the symmetry and PSD checks on `M₂`, `M₃`.
pub const PSD_TOL: f64 = 1e-10;
/// Relative tolerance on `Im λ` and `Re λ`, scaled by `1 + ‖M‖₂`.
pub const SPECTRUM_TOL: f64 = 1e-8;
/// Relative least-squares residual above which `Ax = b` counts as inconsistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{which} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { which: &'static str, asymmetry: f64 },
    #[error("{which} is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { which: &'static str, min_eigenvalue: f64 },
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape { what: &'static str, expected: usize, found: usize },
    #[error("A x = b has no solution (least-squares residual {residual:e})")]
    InconsistentSystem { residual: f64 },
}

/// The three blocks of a Lemma-structured matrix, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheckInput {
    m1: DenseMatrix,
    m2: DenseMatrix,
    m3: DenseMatrix,
}

fn check_psd(which: &'static str, m: &DenseMatrix) -> Result<(), SpectralError> {
    let scale = 1.0 + m.frobenius_norm();
    let asymmetry = m.asymmetry().ok_or(SpectralError::Shape { what: which, expected: m.rows(), found: m.cols() })?;
    if asymmetry > PSD_TOL * scale {
        return Err(SpectralError::NotSymmetric { which, asymmetry });
    }
    let min_eigenvalue = eigenvalues_symmetric(m)?.first().copied().unwrap_or(0.0);
    if min_eigenvalue < -PSD_TOL * scale {
        return Err(SpectralError::NotPsd { which, min_eigenvalue });
    }
    Ok(())
}

impl LemmaCheckInput {
    /// `m1` is `p×q`; `m2` must be `q×q` and `m3` `p×p`, both symmetric PSD.
    pub fn new(m1: DenseMatrix, m2: DenseMatrix, m3: DenseMatrix) -> Result<Self, SpectralError> {
        if m2.rows() != m1.cols() {
            return Err(SpectralError::Shape { what: "M2 size vs M1 columns", expected: m1.cols(), found: m2.rows() });
        }
        if m3.rows() != m1.rows() {
            return Err(SpectralError::Shape { what: "M3 size vs M1 rows", expected: m1.rows(), found: m3.rows() });
        }
        check_psd("M2", &m2)?;
        check_psd("M3", &m3)?;
        Ok(Self { m1, m2, m3 })
    }

    pub fn m1(&self) -> &DenseMatrix {
        &self.m1
    }

    pub fn m2(&self) -> &DenseMatrix {
        &self.m2
    }

    pub fn m3(&self) -> &DenseMatrix {
        &self.m3
    }

    /// `M = [[−M₁ᵀM₁ − M₂, M₁ᵀM₃], [M₁, −M₃]]`
    pub fn matrix(&self) -> DenseMatrix {
        lemma_matrix(&self.m1, &self.m2, &self.m3)
    }

    /// `M̄ = diag(I, M₃ᵀ) · M`, symmetric negative semi-definite.
    pub fn symmetrized(&self) -> DenseMatrix {
        let m1t = self.m1.transpose();
        let m3t = self.m3.transpose();
        DenseMatrix::from_blocks(
            &m1t.matmul(&self.m1).add(&self.m2).scale(-1.0),
            &m1t.matmul(&self.m3),
            &m3t.matmul(&self.m1),
            &m3t.matmul(&self.m3).scale(-1.0),
        )
    }
}

fn lemma_matrix(m1: &DenseMatrix, m2: &DenseMatrix, m3: &DenseMatrix) -> DenseMatrix {
    let m1t = m1.transpose();
    DenseMatrix::from_blocks(
        &m1t.matmul(m1).add(m2).scale(-1.0),
        &m1t.matmul(m3),
        m1,
        &m3.scale(-1.0),
    )
}

/// Pass/fail of the three spectral conditions plus the raw spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVerdict {
    pub spectrum: Spectrum,
    /// `1 + ‖M‖₂`
    pub scale: f64,
    pub max_abs_imag: f64,
    pub max_real: f64,
    pub imag_ok: bool,
    pub real_ok: bool,
    pub rank_ok: bool,
}

impl SpectralVerdict {
    pub fn passed(&self) -> bool {
        self.imag_ok && self.real_ok && self.rank_ok
    }
}

/// Evaluates the three conditions on any square matrix without checking
/// that it has the Lemma structure.
pub fn spectral_verdict(m: &DenseMatrix) -> Result<SpectralVerdict, SpectralError> {
    let spectrum = eig(m)?;
    let scale = 1.0 + spectrum.spectral_norm;
    let max_abs_imag = spectrum.max_abs_imag();
    let max_real = if spectrum.eigenvalues.is_empty() { 0.0 } else { spectrum.max_real() };
    Ok(SpectralVerdict {
        imag_ok: max_abs_imag < SPECTRUM_TOL * scale,
        real_ok: max_real < SPECTRUM_TOL * scale,
        rank_ok: spectrum.zero_is_non_defective(),
        max_abs_imag,
        max_real,
        scale,
        spectrum,
    })
}

pub fn check_lemma1(inp: &LemmaCheckInput) -> Result<SpectralVerdict, SpectralError> {
    spectral_verdict(&inp.matrix())
}

/// Stacked matrices of the whole network and the drift matrix `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSystem {
    pub scheme: Scheme,
    pub a_hat: DenseMatrix,
    pub b_hat: DenseVector,
    /// Block-diagonal lifted agent-graph Laplacians.
    pub l_hat: DenseMatrix,
    /// Lifted cluster-graph Laplacian.
    pub l_hat_g: DenseMatrix,
    pub q: DenseMatrix,
}

impl CompactSystem {
    /// Builds `Q` from its ingredients without validating them.
    pub fn from_parts(
        scheme: Scheme,
        a_hat: DenseMatrix,
        b_hat: DenseVector,
        l_hat: DenseMatrix,
        l_hat_g: DenseMatrix,
    ) -> Self {
        let q = match scheme {
            Scheme::Row => lemma_matrix(&a_hat, &l_hat_g, &l_hat),
            Scheme::Column => lemma_matrix(&a_hat, &l_hat, &l_hat_g),
        };
        Self { scheme, a_hat, b_hat, l_hat, l_hat_g, q }
    }

    pub fn x_dim(&self) -> usize {
        self.a_hat.cols()
    }

    pub fn z_dim(&self) -> usize {
        self.a_hat.rows()
    }

    /// Constant term `col{Âᵀ b̂, −b̂}`.
    pub fn drift(&self) -> DenseVector {
        DenseVector::stack([&self.a_hat.tr_matvec(&self.b_hat), &self.b_hat.scale(-1.0)])
    }

    /// `Q · state + drift`
    pub fn apply(&self, state: &DenseVector) -> DenseVector {
        self.q.matvec(state).add(&self.drift())
    }

    /// Which Laplacian plays `M₂` and which `M₃` depends on the scheme.
    pub fn lemma_input(&self) -> Result<LemmaCheckInput, SpectralError> {
        match self.scheme {
            Scheme::Row => LemmaCheckInput::new(self.a_hat.clone(), self.l_hat_g.clone(), self.l_hat.clone()),
            Scheme::Column => LemmaCheckInput::new(self.a_hat.clone(), self.l_hat.clone(), self.l_hat_g.clone()),
        }
    }

    /// Largest absolute row sum of `Q`, an upper bound on its spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        self.q.norm_inf()
    }
}

pub fn assemble_compact(part: &Partition, topo: &Topology) -> Result<CompactSystem, SpectralError> {
    let c = part.cluster_count();
    if topo.cluster_count() != c {
        return Err(SpectralError::Shape { what: "cluster count", expected: c, found: topo.cluster_count() });
    }
    let mut blocks = Vec::new();
    let mut offsets = Vec::new();
    let mut laplacians = Vec::with_capacity(c);
    for i in 0..c {
        if topo.agent_count(i) != part.agent_count(i) {
            return Err(SpectralError::Shape {
                what: "agent count",
                expected: part.agent_count(i),
                found: topo.agent_count(i),
            });
        }
        for j in 0..part.agent_count(i) {
            blocks.push(part.block(i, j).clone());
            offsets.push(part.offset(i, j));
        }
        // agent-layer lift: coordination dim (row scheme) or solution dim (column scheme)
        let lift = match part.scheme() {
            Scheme::Row => part.z_dim(i, 0),
            Scheme::Column => part.x_dim(i, 0),
        };
        laplacians.push(topo.agent_graph(i).lifted_laplacian(lift));
    }
    let cluster_lift = match part.scheme() {
        Scheme::Row => part.n(),
        Scheme::Column => part.m(),
    };
    Ok(CompactSystem::from_parts(
        part.scheme(),
        DenseMatrix::block_diag(&blocks),
        DenseVector::stack(offsets),
        DenseMatrix::block_diag(&laplacians),
        topo.cluster_graph().lifted_laplacian(cluster_lift),
    ))
}

pub fn check_q_spectrum(cs: &CompactSystem) -> Result<SpectralVerdict, SpectralError> {
    cs.lemma_input()?;
    spectral_verdict(&cs.q)
}

/// A constant state that is an equilibrium of the compact flow, as
/// `(x̂, ẑ)` in stacked order.
///
/// `x̂` replicates a least-squares solution `y` of `Ax = b` (whole `y` per
/// cluster in the row scheme, the cluster's slice `y_i` per agent in the
/// column scheme); `ẑ` is the minimum-norm solution of `L ẑ = Â x̂ − b̂` for
/// the Laplacian that multiplies `z`.
pub fn equilibrium_certificate(
    cs: &CompactSystem,
    part: &Partition,
) -> Result<(DenseVector, DenseVector), SpectralError> {
    let a = part.assemble_a();
    let b = part.assemble_b();
    let y = solve_least_squares(&a, &b)?;
    let residual = a.matvec(&y).sub(&b).norm2();
    if residual > CONSISTENCY_TOL * (1.0 + b.norm2()) {
        return Err(SpectralError::InconsistentSystem { residual });
    }
    let (x_hat, z_lap) = match part {
        Partition::Row(p) => (y.repeat(p.cluster_count()), &cs.l_hat),
        Partition::Column(p) => {
            let parts: Vec<DenseVector> = (0..p.cluster_count())
                .map(|i| y.segment(p.col_range(i)).repeat(p.agent_count(i)))
                .collect();
            (DenseVector::stack(&parts), &cs.l_hat_g)
        }
    };
    if x_hat.dim() != cs.x_dim() {
        return Err(SpectralError::Shape { what: "certificate x", expected: cs.x_dim(), found: x_hat.dim() });
    }
    let rhs = cs.a_hat.matvec(&x_hat).sub(&cs.b_hat);
    let z_hat = solve_least_squares(z_lap, &rhs)?;
    Ok((x_hat, z_hat))
}

/// The certificate as a [`NetworkState`] at time zero.
pub fn certificate_state(cs: &CompactSystem, part: &Partition) -> Result<NetworkState, SpectralError> {
    let (x, z) = equilibrium_certificate(cs, part)?;
    NetworkState::from_stacked(part, &DenseVector::stack([&x, &z]))
        .map_err(|_| SpectralError::Shape { what: "certificate state", expected: cs.q.rows(), found: x.dim() + z.dim() })
}
