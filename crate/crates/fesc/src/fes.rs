//! The finite element system framework: families of form spaces indexed by
//! (cell, degree) with restriction operators of a declared kind per degree,
//! differentials, constants and evaluation maps.
//!
//! The numerical core (`FesCore`) is matrix-only, so the axioms, extension
//! and exactness checks, dimension audits, inverse limits and harmonic
//! degrees of freedom run on anything that provides the matrices — including
//! hand-built counterexamples on non-simplicial cells. The geometric layer
//! (`FESystem`) realizes the spaces as piecewise polynomial pairs and builds
//! all matrices from traces, pullbacks and exact integration.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::linalg::{self, Rat, RatMatrix};
use crate::polyform::{
    alt, double_trace, space::FormSpace, Carrier, Chart, PairForm, PolyForm, Superspace,
};
use crate::simplicial::{CellId, SimplicialComplex};
use crate::{Error, Result};

/// The three restriction notions, matching the regularity they encode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RestrictionKind {
    /// tangential action only (H⁰_d-type continuity)
    Pullback,
    /// all components (H¹)
    Trace,
    /// the pair (u, du) (H¹_d)
    DoubleTrace,
}

// ---------------------------------------------------------------------------
// Matrix-level core
// ---------------------------------------------------------------------------

/// Abstract cell of a core system.
#[derive(Clone, Debug)]
pub struct CoreCell {
    pub dim: usize,
    pub name: String,
    /// codimension-one faces with relative orientations
    pub facets: Vec<(usize, i32)>,
}

/// Matrix-only finite element system data. Spaces are given by their
/// dimensions; all structure maps are explicit matrices.
pub struct FesCore {
    pub cells: Vec<CoreCell>,
    pub max_k: usize,
    pub dims: BTreeMap<(usize, usize), usize>,
    /// differential per (cell, k): A^k(cell) → A^{k+1}(cell)
    pub d: BTreeMap<(usize, usize), RatMatrix>,
    /// restriction per (cell, facet position, k)
    pub r: BTreeMap<(usize, usize, usize), RatMatrix>,
    /// inclusion of constants per cell (column vector into A⁰)
    pub c: BTreeMap<usize, Vec<Rat>>,
    /// evaluation per cell (row over A^{dim cell}(cell))
    pub e: BTreeMap<usize, Vec<Rat>>,
    /// inner-product Gram per (cell, k), optional (needed for harmonic DoFs)
    pub gram: BTreeMap<(usize, usize), RatMatrix>,
    /// transitive restrictions (sub, cell, k) for all strict containments
    r_all: BTreeMap<(usize, usize, usize), RatMatrix>,
}

impl FesCore {
    pub fn dim(&self, cell: usize, k: usize) -> usize {
        self.dims.get(&(cell, k)).copied().unwrap_or(0)
    }

    pub fn d_matrix(&self, cell: usize, k: usize) -> RatMatrix {
        self.d
            .get(&(cell, k))
            .cloned()
            .unwrap_or_else(|| RatMatrix::zeros(self.dim(cell, k + 1), self.dim(cell, k)))
    }

    /// Restriction matrix for any strict containment, composed along the
    /// facet graph; validated single-valued at construction.
    pub fn restriction(&self, sub: usize, cell: usize, k: usize) -> Option<&RatMatrix> {
        self.r_all.get(&(sub, cell, k))
    }

    /// Build with validation of all axioms. `raw_r` holds restrictions to
    /// facets only; the transitive closure is computed and checked.
    pub fn new(
        cells: Vec<CoreCell>,
        max_k: usize,
        dims: BTreeMap<(usize, usize), usize>,
        d: BTreeMap<(usize, usize), RatMatrix>,
        r: BTreeMap<(usize, usize, usize), RatMatrix>,
        c: BTreeMap<usize, Vec<Rat>>,
        e: BTreeMap<usize, Vec<Rat>>,
        gram: BTreeMap<(usize, usize), RatMatrix>,
    ) -> Result<Self> {
        let mut core = FesCore { cells, max_k, dims, d, r, c, e, gram, r_all: BTreeMap::new() };
        core.close_restrictions()?;
        core.validate()?;
        Ok(core)
    }

    /// All strict sub-cells of a cell (by repeated facets).
    pub fn strict_subcells(&self, cell: usize) -> Vec<usize> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<usize> = self.cells[cell].facets.iter().map(|&(f, _)| f).collect();
        while let Some(f) = stack.pop() {
            if seen.insert(f) {
                stack.extend(self.cells[f].facets.iter().map(|&(g, _)| g));
            }
        }
        seen.into_iter().collect()
    }

    fn close_restrictions(&mut self) -> Result<()> {
        for cell in 0..self.cells.len() {
            for k in 0..=self.max_k {
                // BFS down the facet graph
                let mut maps: BTreeMap<usize, RatMatrix> = BTreeMap::new();
                let mut frontier = vec![cell];
                maps.insert(cell, RatMatrix::identity(self.dim(cell, k)));
                while let Some(t) = frontier.pop() {
                    let from = maps[&t].clone();
                    for (fi, &(f, _)) in self.cells[t].facets.iter().enumerate() {
                        let step = self
                            .r
                            .get(&(t, fi, k))
                            .cloned()
                            .unwrap_or_else(|| RatMatrix::zeros(self.dim(f, k), self.dim(t, k)));
                        let comp = step.matmul(&from);
                        match maps.get(&f) {
                            None => {
                                maps.insert(f, comp);
                                frontier.push(f);
                            }
                            Some(prev) => {
                                if *prev != comp {
                                    return Err(Error::FesAxiom(format!(
                                        "restriction composition law fails from {} to {} at k={}",
                                        self.cells[cell].name, self.cells[f].name, k
                                    )));
                                }
                            }
                        }
                    }
                }
                for (sub, m) in maps {
                    if sub != cell {
                        self.r_all.insert((sub, cell, k), m);
                    }
                }
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        // r d = d r across facets
        for (t, cellmeta) in self.cells.iter().enumerate() {
            for (fi, &(f, _)) in cellmeta.facets.iter().enumerate() {
                for k in 0..self.max_k {
                    let rt = self
                        .r
                        .get(&(t, fi, k))
                        .cloned()
                        .unwrap_or_else(|| RatMatrix::zeros(self.dim(f, k), self.dim(t, k)));
                    let rt1 = self
                        .r
                        .get(&(t, fi, k + 1))
                        .cloned()
                        .unwrap_or_else(|| RatMatrix::zeros(self.dim(f, k + 1), self.dim(t, k + 1)));
                    let lhs = rt1.matmul(&self.d_matrix(t, k));
                    let rhs = self.d_matrix(f, k).matmul(&rt);
                    if lhs != rhs {
                        return Err(Error::FesAxiom(format!(
                            "restriction does not commute with d from {} to {} at k={}",
                            cellmeta.name, self.cells[f].name, k
                        )));
                    }
                }
            }
        }
        // d ∘ d = 0
        for (t, _) in self.cells.iter().enumerate() {
            for k in 0..self.max_k.saturating_sub(1) {
                let dd = self.d_matrix(t, k + 1).matmul(&self.d_matrix(t, k));
                if !dd.is_zero() {
                    return Err(Error::FesAxiom(format!(
                        "d∘d ≠ 0 on {} at k={k}",
                        self.cells[t].name
                    )));
                }
            }
        }
        // constants: d c = 0 and r c_T = c_{T'}
        for (t, cellmeta) in self.cells.iter().enumerate() {
            let Some(ct) = self.c.get(&t) else {
                return Err(Error::FesAxiom(format!("missing constants map on {}", cellmeta.name)));
            };
            if !self.d_matrix(t, 0).mul_vec(ct).iter().all(|x| x.is_zero()) {
                return Err(Error::FesAxiom(format!("d∘c ≠ 0 on {}", cellmeta.name)));
            }
            for (fi, &(f, _)) in cellmeta.facets.iter().enumerate() {
                let rt = self
                    .r
                    .get(&(t, fi, 0))
                    .cloned()
                    .unwrap_or_else(|| RatMatrix::zeros(self.dim(f, 0), self.dim(t, 0)));
                if rt.mul_vec(ct) != self.c[&f] {
                    return Err(Error::FesAxiom(format!(
                        "constants incompatible from {} to {}",
                        cellmeta.name, self.cells[f].name
                    )));
                }
            }
        }
        // Stokes: e_T d = Σ orient(T,F) e_F r_F on A^{dim T − 1}(T)
        for (t, cellmeta) in self.cells.iter().enumerate() {
            let kt = cellmeta.dim;
            if kt == 0 {
                continue;
            }
            let et = self
                .e
                .get(&t)
                .cloned()
                .unwrap_or_else(|| vec![Rat::zero(); self.dim(t, kt)]);
            let d = self.d_matrix(t, kt - 1);
            let mut lhs = vec![Rat::zero(); self.dim(t, kt - 1)];
            for (j, l) in lhs.iter_mut().enumerate() {
                for i in 0..d.rows {
                    *l += &et[i] * d.get(i, j);
                }
            }
            let mut rhs = vec![Rat::zero(); self.dim(t, kt - 1)];
            for (fi, &(f, orient)) in cellmeta.facets.iter().enumerate() {
                let ef = self
                    .e
                    .get(&f)
                    .cloned()
                    .unwrap_or_else(|| vec![Rat::zero(); self.dim(f, kt - 1)]);
                let rt = self
                    .r
                    .get(&(t, fi, kt - 1))
                    .cloned()
                    .unwrap_or_else(|| RatMatrix::zeros(self.dim(f, kt - 1), self.dim(t, kt - 1)));
                for (j, rv) in rhs.iter_mut().enumerate() {
                    for i in 0..rt.rows {
                        *rv += linalg::rat(orient as i64) * &ef[i] * rt.get(i, j);
                    }
                }
            }
            if lhs != rhs {
                return Err(Error::FesAxiom(format!(
                    "Stokes identity fails on {}",
                    cellmeta.name
                )));
            }
        }
        Ok(())
    }

    /// Basis of the inverse limit over a set of cells: families stable under
    /// restriction, as a basis matrix over the direct sum of cell spaces.
    pub fn inverse_limit(&self, cells: &[usize], k: usize) -> RatMatrix {
        let offsets = self.offsets(cells, k);
        let total: usize = cells.iter().map(|&c| self.dim(c, k)).sum();
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for (ci, &cell) in cells.iter().enumerate() {
            for (fi, &(f, _)) in self.cells[cell].facets.iter().enumerate() {
                let Some(fj) = cells.iter().position(|&x| x == f) else { continue };
                let r = self
                    .r
                    .get(&(cell, fi, k))
                    .cloned()
                    .unwrap_or_else(|| RatMatrix::zeros(self.dim(f, k), self.dim(cell, k)));
                for i in 0..r.rows {
                    let mut row = vec![Rat::zero(); total];
                    row[offsets[fj] + i] = Rat::one();
                    for j in 0..r.cols {
                        row[offsets[ci] + j] -= r.get(i, j);
                    }
                    rows.push(row);
                }
            }
        }
        if rows.is_empty() {
            return RatMatrix::identity(total);
        }
        linalg::nullspace(&RatMatrix::from_rows(rows))
    }

    pub fn offsets(&self, cells: &[usize], k: usize) -> Vec<usize> {
        let mut off = Vec::with_capacity(cells.len());
        let mut acc = 0;
        for &c in cells {
            off.push(acc);
            acc += self.dim(c, k);
        }
        off
    }

    /// Kernel of the restriction to the boundary: A^k_0(T).
    pub fn zero_boundary_basis(&self, cell: usize, k: usize) -> RatMatrix {
        let subs = self.strict_subcells(cell);
        if subs.is_empty() {
            return RatMatrix::identity(self.dim(cell, k));
        }
        let mut stacked = RatMatrix::zeros(0, self.dim(cell, k));
        for s in subs {
            if let Some(r) = self.restriction(s, cell, k) {
                stacked = stacked.vstack(r);
            }
        }
        linalg::nullspace(&stacked)
    }

    /// Surjectivity of A^k(T) → A^k(∂T), by exact rank.
    pub fn check_extensions(&self, cell: usize, k: usize) -> bool {
        let subs = self.strict_subcells(cell);
        if subs.is_empty() {
            return true;
        }
        let limit = self.inverse_limit(&subs, k);
        let mut stacked = RatMatrix::zeros(0, self.dim(cell, k));
        for &s in &subs {
            stacked = stacked.vstack(self.restriction(s, cell, k).unwrap());
        }
        // image must lie inside the limit and fill it
        let rank_image = linalg::rank(&stacked);
        let dim_limit = limit.cols;
        let union = linalg::rank_of_union(&limit, &stacked);
        union == dim_limit && rank_image == dim_limit
    }

    /// Cohomology dimensions of `0 → R → A⁰(T) → A¹(T) → …` per degree.
    pub fn local_cohomology(&self, cell: usize) -> Vec<usize> {
        let mut dims = Vec::new();
        let mut prev_rank = 1usize; // rank of the constants inclusion
        let c_ok = !self.c[&cell].iter().all(|x| x.is_zero());
        if !c_ok {
            prev_rank = 0;
        }
        for k in 0..=self.max_k {
            let d = self.d_matrix(cell, k);
            let nul = linalg::nullity(&d);
            dims.push(nul - prev_rank.min(nul));
            prev_rank = linalg::rank(&d);
        }
        dims
    }

    /// Cohomology of the zero-boundary complex A^•_0(T), plus whether the
    /// evaluation functional is an isomorphism on H^{dim T}.
    pub fn zero_boundary_cohomology(&self, cell: usize) -> (Vec<usize>, bool) {
        let kt = self.cells[cell].dim;
        let mut dims = Vec::new();
        let mut prev_image: Option<RatMatrix> = None;
        let mut e_iso = false;
        for k in 0..=self.max_k {
            let basis = self.zero_boundary_basis(cell, k);
            let d = self.d_matrix(cell, k);
            let d_on = d.matmul(&basis);
            let ker_coords = linalg::nullspace(&d_on);
            let kernel = basis.matmul(&ker_coords); // in A^k coords
            let prev = prev_image.take().unwrap_or_else(|| RatMatrix::zeros(self.dim(cell, k), 0));
            // d(A^{k−1}_0) ⊆ ker(d)∩A^k_0 since restrictions commute with d,
            // so the cohomology dimension is a difference of ranks
            let hdim = linalg::rank(&kernel) - linalg::rank(&prev);
            dims.push(hdim);
            if k == kt {
                // e functional on the kernel, vanishing on the image
                let e = self
                    .e
                    .get(&cell)
                    .cloned()
                    .unwrap_or_else(|| vec![Rat::zero(); self.dim(cell, k)]);
                let on_kernel: Vec<Rat> = (0..kernel.cols)
                    .map(|j| {
                        let col = kernel.column(j);
                        col.iter().zip(&e).map(|(a, b)| a * b).fold(Rat::zero(), |x, y| x + y)
                    })
                    .collect();
                let nonzero = on_kernel.iter().any(|x| !x.is_zero());
                e_iso = hdim == 1 && nonzero;
            }
            prev_image = Some(d.matmul(&basis));
        }
        (dims, e_iso)
    }

    /// Full compatibility verdict with a per-cell report.
    pub fn check_compatibility(&self) -> CompatibilityReport {
        let mut cells = Vec::new();
        let mut compatible = true;
        for (ci, meta) in self.cells.iter().enumerate() {
            let extensions: Vec<bool> =
                (0..=self.max_k).map(|k| self.check_extensions(ci, k)).collect();
            let cohomology = self.local_cohomology(ci);
            let exact = cohomology.iter().all(|&x| x == 0);
            let (h0, e_iso) = self.zero_boundary_cohomology(ci);
            let concentrated = h0
                .iter()
                .enumerate()
                .all(|(k, &x)| if k == meta.dim { x == 1 } else { x == 0 });
            let ok = extensions.iter().all(|&b| b) && exact;
            compatible &= ok;
            cells.push(CellReport {
                cell: meta.name.clone(),
                dim: meta.dim,
                space_dims: (0..=self.max_k).map(|k| self.dim(ci, k)).collect(),
                zero_boundary_dims: (0..=self.max_k)
                    .map(|k| self.zero_boundary_basis(ci, k).cols)
                    .collect(),
                extensions,
                local_cohomology: cohomology,
                zero_boundary_cohomology: h0,
                zero_boundary_concentrated: concentrated,
                evaluation_iso_at_top: e_iso,
            });
        }
        CompatibilityReport { compatible, cells }
    }

    /// lhs = dim A^k(complex) via inverse limit, rhs = Σ_T dim A^k_0(T).
    pub fn dimension_audit(&self, k: usize) -> (usize, usize, bool) {
        let all: Vec<usize> = (0..self.cells.len()).collect();
        let lhs = self.inverse_limit(&all, k).cols;
        let rhs: usize = all.iter().map(|&c| self.zero_boundary_basis(c, k).cols).sum();
        (lhs, rhs, lhs == rhs)
    }

    /// Cohomology dimensions of the global complex A^•(complex).
    pub fn global_cohomology(&self) -> Vec<usize> {
        let all: Vec<usize> = (0..self.cells.len()).collect();
        let mut dims = Vec::new();
        let mut prev_rank = 0usize;
        for k in 0..=self.max_k {
            let dk = self.global_d(k);
            let nul = linalg::nullity(&dk);
            dims.push(nul - prev_rank);
            prev_rank = linalg::rank(&dk);
        }
        let _ = all;
        dims
    }

    /// Global differential in inverse-limit bases.
    pub fn global_d(&self, k: usize) -> RatMatrix {
        let all: Vec<usize> = (0..self.cells.len()).collect();
        let bk = self.inverse_limit(&all, k);
        let bk1 = self.inverse_limit(&all, k + 1);
        let off_k = self.offsets(&all, k);
        let off_k1 = self.offsets(&all, k + 1);
        let total1: usize = all.iter().map(|&c| self.dim(c, k + 1)).sum();
        let mut image = RatMatrix::zeros(total1, bk.cols);
        for j in 0..bk.cols {
            let col = bk.column(j);
            for (ci, &cell) in all.iter().enumerate() {
                let d = self.d_matrix(cell, k);
                for i in 0..d.rows {
                    let mut acc = Rat::zero();
                    for l in 0..d.cols {
                        let v = &col[off_k[ci] + l];
                        if !v.is_zero() {
                            acc += d.get(i, l) * v;
                        }
                    }
                    *image.get_mut(off_k1[ci] + i, j) = acc;
                }
            }
        }
        linalg::solve_many(&bk1, &image).expect("global differential leaves the inverse limit")
    }

    /// Evaluation cochain map e: A^k(complex) → C^k, rows per k-cell in the
    /// order of `cells_of_dim(k)`.
    pub fn global_evaluation(&self, k: usize) -> RatMatrix {
        let all: Vec<usize> = (0..self.cells.len()).collect();
        let bk = self.inverse_limit(&all, k);
        let off = self.offsets(&all, k);
        let kcells: Vec<usize> = (0..self.cells.len()).filter(|&c| self.cells[c].dim == k).collect();
        let mut m = RatMatrix::zeros(kcells.len(), bk.cols);
        for (row, &cell) in kcells.iter().enumerate() {
            let e = self
                .e
                .get(&cell)
                .cloned()
                .unwrap_or_else(|| vec![Rat::zero(); self.dim(cell, k)]);
            let ci = all.iter().position(|&x| x == cell).unwrap();
            for j in 0..bk.cols {
                let col = bk.column(j);
                let mut acc = Rat::zero();
                for (l, ev) in e.iter().enumerate() {
                    let v = &col[off[ci] + l];
                    if !v.is_zero() {
                        acc += ev * v;
                    }
                }
                *m.get_mut(row, j) = acc;
            }
        }
        m
    }

    /// Harmonic degrees of freedom per (cell, k), as functional rows over
    /// A^k(cell) coordinates (plus a flag for functionals applied through d).
    ///
    /// Away from the top degree the pairing weights run over
    /// `ker d | A^k_0(T)` together with `⟨d·|v⟩` for `v ∈ d A^k_0(T)`; at
    /// `k = dim T` the weights run over `d A^{k−1}_0(T)` (equal to the kernel
    /// for compatible systems up to the one top cohomology direction, which
    /// the total-integral functional covers), keeping the count at
    /// `dim A^k_0(T)`.
    pub fn harmonic_dofs(&self, cell: usize, k: usize) -> Result<Vec<DofFunctional>> {
        if self.dim(cell, k) == 0 {
            return Ok(Vec::new());
        }
        let gram_k = self
            .gram
            .get(&(cell, k))
            .ok_or_else(|| Error::FesAxiom(format!("no inner product on {} k={k}", self.cells[cell].name)))?;
        let a0 = self.zero_boundary_basis(cell, k);
        let d = self.d_matrix(cell, k);
        let d_on = d.matmul(&a0);
        let mut out = Vec::new();
        if k == self.cells[cell].dim {
            let weights = if k == 0 {
                RatMatrix::zeros(self.dim(cell, k), 0)
            } else {
                let a0_prev = self.zero_boundary_basis(cell, k - 1);
                let image = self.d_matrix(cell, k - 1).matmul(&a0_prev);
                let keep = linalg::column_space_basis(&image);
                RatMatrix::from_columns(keep.into_iter().map(|j| image.column(j)).collect())
            };
            for j in 0..weights.cols {
                let v = weights.column(j);
                let row = gram_row(gram_k, &v);
                out.push(DofFunctional { row, through_d: false, weight: v, is_integral: false });
            }
            let e = self
                .e
                .get(&cell)
                .cloned()
                .unwrap_or_else(|| vec![Rat::zero(); self.dim(cell, k)]);
            out.push(DofFunctional { row: e.clone(), through_d: false, weight: e, is_integral: true });
        } else {
            let ker_coords = linalg::nullspace(&d_on);
            let kernel = a0.matmul(&ker_coords);
            for j in 0..kernel.cols {
                let v = kernel.column(j);
                // functional u ↦ ⟨u, v⟩ = vᵀ G u
                let row = gram_row(gram_k, &v);
                out.push(DofFunctional { row, through_d: false, weight: v, is_integral: false });
            }
            let gram_k1 = self.gram.get(&(cell, k + 1)).ok_or_else(|| {
                Error::FesAxiom(format!("no inner product on {} k={}", self.cells[cell].name, k + 1))
            })?;
            // image basis: independent columns of d·A_0
            let keep = linalg::column_space_basis(&d_on);
            for j in keep {
                let w = d_on.column(j);
                let grow = gram_row(gram_k1, &w);
                // functional u ↦ ⟨d u, w⟩ = (wᵀ G_{k+1}) D u
                let row = (0..d.cols)
                    .map(|col| {
                        let mut acc = Rat::zero();
                        for i in 0..d.rows {
                            acc += &grow[i] * d.get(i, col);
                        }
                        acc
                    })
                    .collect();
                out.push(DofFunctional { row, through_d: true, weight: w, is_integral: false });
            }
        }
        Ok(out)
    }
}

fn gram_row(gram: &RatMatrix, v: &[Rat]) -> Vec<Rat> {
    (0..gram.cols)
        .map(|j| {
            let mut acc = Rat::zero();
            for i in 0..gram.rows {
                if !v[i].is_zero() {
                    acc += &v[i] * gram.get(i, j);
                }
            }
            acc
        })
        .collect()
}

/// One harmonic degree of freedom on a cell.
#[derive(Clone, Debug)]
pub struct DofFunctional {
    /// row over A^k(cell) coordinates
    pub row: Vec<Rat>,
    /// whether the functional pairs d(·) rather than the argument itself
    pub through_d: bool,
    /// pairing weight (coords in A^k or A^{k+1})
    pub weight: Vec<Rat>,
    /// the total-integral functional (top degree)
    pub is_integral: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub cell: String,
    pub dim: usize,
    pub space_dims: Vec<usize>,
    pub zero_boundary_dims: Vec<usize>,
    pub extensions: Vec<bool>,
    pub local_cohomology: Vec<usize>,
    pub zero_boundary_cohomology: Vec<usize>,
    pub zero_boundary_concentrated: bool,
    pub evaluation_iso_at_top: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    pub cells: Vec<CellReport>,
}

// ---------------------------------------------------------------------------
// Geometric layer
// ---------------------------------------------------------------------------

/// A concrete space of admissible pairs on one cell.
#[derive(Clone, Debug)]
pub struct PairSpace {
    pub kind: RestrictionKind,
    pub u_sup: Superspace,
    pub v_sup: Option<Superspace>,
    /// (u_dim + v_dim) × dim basis matrix
    pub basis: RatMatrix,
}

impl PairSpace {
    pub fn dim(&self) -> usize {
        self.basis.cols
    }

    pub fn single(space: &FormSpace, kind: RestrictionKind) -> PairSpace {
        PairSpace { kind, u_sup: space.sup.clone(), v_sup: None, basis: space.basis.clone() }
    }

    pub fn pair_of(&self, coords: &[Rat]) -> PairForm {
        let v = self.basis.mul_vec(coords);
        self.pair_of_raw(&v)
    }

    pub fn pair_of_raw(&self, raw: &[Rat]) -> PairForm {
        let du = self.u_sup.dim();
        let u0 = self.u_sup.form_of(&raw[..du]);
        let u1 = self.v_sup.as_ref().map(|vs| vs.form_of(&raw[du..]));
        PairForm { u0, u1 }
    }

    pub fn basis_pair(&self, i: usize) -> PairForm {
        let col = self.basis.column(i);
        self.pair_of_raw(&col)
    }

    pub fn raw_dim(&self) -> usize {
        self.u_sup.dim() + self.v_sup.as_ref().map_or(0, |s| s.dim())
    }
}

/// Geometric finite element system on a simplicial complex. Cells with
/// refined carriers hold pairs `(u, du)`; lower-dimensional cells hold
/// restriction data per the declared kind of each degree.
pub struct FESystem {
    pub mesh: SimplicialComplex,
    pub kinds: Vec<RestrictionKind>,
    pub spaces: BTreeMap<(CellId, usize), PairSpace>,
    pub core: FesCore,
    /// core index per mesh cell
    pub cell_index: BTreeMap<CellId, usize>,
    pub cell_order: Vec<CellId>,
}

impl FESystem {
    /// Assemble the core matrices from concrete spaces and validate every
    /// axiom. `spaces` must contain an entry for every cell and degree
    /// 0..=max_k (zero-dimensional spaces may use an empty basis).
    pub fn assemble(
        mesh: SimplicialComplex,
        kinds: Vec<RestrictionKind>,
        spaces: BTreeMap<(CellId, usize), PairSpace>,
    ) -> Result<FESystem> {
        let max_k = kinds.len() - 1;
        let cell_order = mesh.all_cells();
        let cell_index: BTreeMap<CellId, usize> =
            cell_order.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut cells = Vec::new();
        for &cid in &cell_order {
            let facets = if cid.0 == 0 {
                Vec::new()
            } else {
                mesh.subcells(cid, cid.0 - 1)
                    .into_iter()
                    .map(|f| (cell_index[&f], mesh.relative_orientation(cid, f)))
                    .collect()
            };
            cells.push(CoreCell { dim: cid.0, name: format!("{}:{}", cid.0, cid.1), facets });
        }

        let mut dims = BTreeMap::new();
        for (&(cid, k), sp) in &spaces {
            dims.insert((cell_index[&cid], k), sp.dim());
        }

        // differentials
        let mut d = BTreeMap::new();
        for &cid in &cell_order {
            for k in 0..max_k {
                let src = &spaces[&(cid, k)];
                let dst = &spaces[&(cid, k + 1)];
                let m = differential_matrix(&mesh, cid, src, dst, k)?;
                d.insert((cell_index[&cid], k), m);
            }
        }

        // restrictions to facets
        let mut r = BTreeMap::new();
        for &cid in &cell_order {
            if cid.0 == 0 {
                continue;
            }
            for (fi, f) in mesh.subcells(cid, cid.0 - 1).into_iter().enumerate() {
                for k in 0..=max_k {
                    let src = &spaces[&(cid, k)];
                    let dst = &spaces[&(f, k)];
                    let m = restriction_matrix(&mesh, cid, f, src, dst)?;
                    r.insert((cell_index[&cid], fi, k), m);
                }
            }
        }

        // constants and evaluation
        let mut c = BTreeMap::new();
        let mut e = BTreeMap::new();
        for &cid in &cell_order {
            let ci = cell_index[&cid];
            c.insert(ci, constants_vector(&mesh, cid, &spaces[&(cid, 0)])?);
            e.insert(ci, evaluation_row(&mesh, cid, &spaces[&(cid, cid.0)])?);
        }

        // inner products
        let mut gram = BTreeMap::new();
        for (&(cid, k), sp) in &spaces {
            gram.insert((cell_index[&cid], k), gram_matrix(&mesh, cid, sp)?);
        }

        let core = FesCore::new(cells, max_k, dims, d, r, c, e, gram)?;
        Ok(FESystem { mesh, kinds, spaces, core, cell_index, cell_order })
    }

    pub fn space(&self, cid: CellId, k: usize) -> &PairSpace {
        &self.spaces[&(cid, k)]
    }

    pub fn dim(&self, cid: CellId, k: usize) -> usize {
        self.space(cid, k).dim()
    }

    /// Double trace of an external form (defined cellwise on top carriers)
    /// onto a cell, expressed in the cell space's raw coordinates. The input
    /// is given per top cell of the mesh.
    pub fn external_restriction(
        &self,
        input: &BTreeMap<CellId, PolyForm>,
        cid: CellId,
        k: usize,
    ) -> Result<Vec<Rat>> {
        let sp = self.space(cid, k);
        // pick any top cell containing cid
        let top = self
            .mesh
            .top_cells()
            .into_iter()
            .find(|&t| self.mesh.is_subcell(cid, t))
            .ok_or_else(|| Error::Form("cell not contained in a top cell".into()))?;
        let u = input
            .get(&top)
            .ok_or_else(|| Error::Form("missing input on a top cell".into()))?;
        let corners = self.mesh.coords(self.mesh.simplex(cid));
        express_pair_in_space(sp, u, &corners)
    }
}

/// Canonical chart of a cell: corners sorted by vertex id.
pub fn cell_chart(mesh: &SimplicialComplex, cid: CellId) -> Result<Chart> {
    Chart::new(&mesh.coords(mesh.simplex(cid)))
}

/// Express the restriction data of a genuine form `u` (defined on a carrier
/// covering the cell) in a cell space's raw superspace coordinates.
pub fn express_pair_in_space(
    sp: &PairSpace,
    u: &PolyForm,
    corners: &[Vec<Rat>],
) -> Result<Vec<Rat>> {
    match sp.kind {
        RestrictionKind::DoubleTrace => {
            let fu = u.carrier.face_carrier(corners)?;
            let du = u.d()?;
            let fv = du.carrier.face_carrier(corners)?;
            let t0 = u.trace_onto(&fu)?;
            let t1 = du.trace_onto(&fv)?;
            let v0 = vec_on_fine(&sp.u_sup, &t0)?;
            let v1 = vec_on_fine(sp.v_sup.as_ref().unwrap(), &t1)?;
            Ok([v0, v1].concat())
        }
        RestrictionKind::Trace => {
            let fu = u.carrier.face_carrier(corners)?;
            let t0 = u.trace_onto(&fu)?;
            vec_on_fine(&sp.u_sup, &t0)
        }
        RestrictionKind::Pullback => {
            let chart = Chart::new(corners)?;
            let fu = u.carrier.face_carrier(corners)?;
            let t0 = u.pullback_onto(&fu, &chart)?;
            vec_on_fine(&sp.u_sup, &t0)
        }
    }
}

/// Express a form on a possibly finer carrier in the coordinates of a
/// superspace on a coarser carrier, by refining the superspace basis.
fn vec_on_fine(sup: &Superspace, fine: &PolyForm) -> Result<Vec<Rat>> {
    let m = express_forms_in_sup(sup, std::slice::from_ref(fine))?;
    Ok(m.column(0))
}

/// Express forms (sharing one carrier) in the coordinates of a superspace,
/// refining the superspace basis onto the forms' carrier and batch-solving.
pub fn debug_express(sup: &Superspace, forms: &[PolyForm]) -> Result<RatMatrix> { express_forms_in_sup(sup, forms) }

fn express_forms_in_sup(sup: &Superspace, forms: &[PolyForm]) -> Result<RatMatrix> {
    if forms.is_empty() {
        return Ok(RatMatrix::zeros(sup.dim(), 0));
    }
    if forms[0].carrier == sup.carrier {
        let cols: Result<Vec<Vec<Rat>>> = forms.iter().map(|f| sup.vec_of(f)).collect();
        return Ok(RatMatrix::from_columns(cols?));
    }
    let max_deg = forms.iter().map(|f| f.deg).max().unwrap().max(sup.deg);
    let fine_sup = Superspace::new(forms[0].carrier.clone(), sup.k, max_deg);
    let coarse_to_fine =
        crate::polyform::space::map_matrix(sup, &fine_sup, |u| u.refine_onto(&fine_sup.carrier))?;
    let cols: Result<Vec<Vec<Rat>>> = forms.iter().map(|f| fine_sup.vec_of(f)).collect();
    let fine_vecs = RatMatrix::from_columns(cols?);
    let x = linalg::solve_many(&coarse_to_fine, &fine_vecs)
        .ok_or_else(|| Error::Form("restriction data leaves the face space".into()))?;
    if coarse_to_fine.matmul(&x) != fine_vecs {
        return Err(Error::Form("restriction data leaves the face space".into()));
    }
    Ok(x)
}

fn restriction_matrix(
    mesh: &SimplicialComplex,
    cell: CellId,
    face: CellId,
    src: &PairSpace,
    dst: &PairSpace,
) -> Result<RatMatrix> {
    let corners = mesh.coords(mesh.simplex(face));
    let pairs: Vec<PairForm> = (0..src.dim()).map(|i| src.basis_pair(i)).collect();
    let raws: RatMatrix = match (src.kind, dst.kind) {
        (RestrictionKind::DoubleTrace, RestrictionKind::DoubleTrace) => {
            let t0s: Vec<PolyForm>;
            let t1s: Vec<PolyForm>;
            if let Some(first) = pairs.first() {
                let fu = first.u0.carrier.face_carrier(&corners)?;
                let fv = first.u1.as_ref().unwrap().carrier.face_carrier(&corners)?;
                t0s = pairs.iter().map(|p| p.u0.trace_onto(&fu)).collect::<Result<_>>()?;
                t1s = pairs
                    .iter()
                    .map(|p| p.u1.as_ref().unwrap().trace_onto(&fv))
                    .collect::<Result<_>>()?;
            } else {
                t0s = Vec::new();
                t1s = Vec::new();
            }
            let a = express_forms_in_sup(&dst.u_sup, &t0s)?;
            let b = express_forms_in_sup(dst.v_sup.as_ref().unwrap(), &t1s)?;
            a.vstack(&b)
        }
        (RestrictionKind::DoubleTrace, RestrictionKind::Trace)
        | (RestrictionKind::Trace, RestrictionKind::Trace) => {
            let t0s: Vec<PolyForm> = if let Some(first) = pairs.first() {
                let fu = first.u0.carrier.face_carrier(&corners)?;
                pairs.iter().map(|p| p.u0.trace_onto(&fu)).collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            express_forms_in_sup(&dst.u_sup, &t0s)?
        }
        (RestrictionKind::Pullback, RestrictionKind::Pullback) => {
            // source stored intrinsically in its own canonical chart: map
            // the face corners through that chart first
            let src_chart = cell_chart(mesh, cell)?;
            let local_corners: Result<Vec<Vec<Rat>>> = corners
                .iter()
                .map(|p| {
                    src_chart
                        .to_intrinsic(p)
                        .ok_or_else(|| Error::Form("face outside source chart".into()))
                })
                .collect();
            let local_corners = local_corners?;
            let t0s: Vec<PolyForm> = if let Some(first) = pairs.first() {
                let chart = Chart::new(&local_corners)?;
                let fu = first.u0.carrier.face_carrier(&local_corners)?;
                pairs
                    .iter()
                    .map(|p| p.u0.pullback_onto(&fu, &chart))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            express_forms_in_sup(&dst.u_sup, &t0s)?
        }
        (_, RestrictionKind::Pullback) => {
            let t0s: Vec<PolyForm> = if let Some(first) = pairs.first() {
                let chart = Chart::new(&corners)?;
                let fu = first.u0.carrier.face_carrier(&corners)?;
                pairs
                    .iter()
                    .map(|p| p.u0.pullback_onto(&fu, &chart))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            express_forms_in_sup(&dst.u_sup, &t0s)?
        }
        (a, b) => {
            return Err(Error::FesAxiom(format!(
                "unsupported restriction kind combination {a:?} → {b:?}"
            )))
        }
    };
    linalg::solve_many(&dst.basis, &raws).ok_or_else(|| {
        Error::FesAxiom(format!(
            "restriction from {:?} to {:?} leaves the declared face space",
            mesh.simplex(cell),
            mesh.simplex(face)
        ))
    })
}

fn differential_matrix(
    mesh: &SimplicialComplex,
    cid: CellId,
    src: &PairSpace,
    dst: &PairSpace,
    _k: usize,
) -> Result<RatMatrix> {
    let corners = mesh.coords(mesh.simplex(cid));
    let pairs: Vec<PairForm> = (0..src.dim()).map(|i| src.basis_pair(i)).collect();
    let raws: RatMatrix = match (src.kind, dst.kind) {
        (RestrictionKind::DoubleTrace, RestrictionKind::DoubleTrace) => {
            let u1s: Vec<PolyForm> =
                pairs.iter().map(|p| p.u1.clone().expect("double-trace pair")).collect();
            let a = express_forms_in_sup(&dst.u_sup, &u1s)?;
            let vs = dst.v_sup.as_ref().unwrap();
            let b = RatMatrix::zeros(vs.dim(), a.cols);
            a.vstack(&b)
        }
        (RestrictionKind::DoubleTrace, RestrictionKind::Trace) => {
            let u1s: Vec<PolyForm> =
                pairs.iter().map(|p| p.u1.clone().expect("double-trace pair")).collect();
            express_forms_in_sup(&dst.u_sup, &u1s)?
        }
        (RestrictionKind::DoubleTrace, RestrictionKind::Pullback) => {
            let chart = cell_chart(mesh, cid)?;
            let t: Vec<PolyForm> = if let Some(first) = pairs.first() {
                let u1c = first.u1.as_ref().unwrap().carrier.clone();
                let fu = u1c.face_carrier(&corners)?;
                pairs
                    .iter()
                    .map(|p| p.u1.as_ref().unwrap().pullback_onto(&fu, &chart))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            express_forms_in_sup(&dst.u_sup, &t)?
        }
        (RestrictionKind::Trace, RestrictionKind::Pullback) => {
            let chart = cell_chart(mesh, cid)?;
            let t: Vec<PolyForm> = if let Some(first) = pairs.first() {
                let fu = first.u0.carrier.face_carrier(&corners)?;
                pairs
                    .iter()
                    .map(|p| p.u0.pullback_onto(&fu, &chart)?.d())
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            express_forms_in_sup(&dst.u_sup, &t)?
        }
        (RestrictionKind::Trace, RestrictionKind::Trace) => {
            if dst.dim() == 0 && dst.u_sup.dim() == 0 {
                RatMatrix::zeros(0, src.dim())
            } else if cid.0 == mesh.ambient {
                let dus: Vec<PolyForm> = pairs.iter().map(|p| p.u0.d()).collect::<Result<_>>()?;
                express_forms_in_sup(&dst.u_sup, &dus)?
            } else {
                return Err(Error::FesAxiom(
                    "trace-to-trace differential undefined on lower cells".into(),
                ));
            }
        }
        (RestrictionKind::Pullback, RestrictionKind::Pullback) => {
            let dus: Vec<PolyForm> = pairs.iter().map(|p| p.u0.d()).collect::<Result<_>>()?;
            express_forms_in_sup(&dst.u_sup, &dus)?
        }
        (a, b) => {
            return Err(Error::FesAxiom(format!(
                "unsupported differential kind combination {a:?} → {b:?}"
            )))
        }
    };
    linalg::solve_many(&dst.basis, &raws).ok_or_else(|| {
        Error::FesAxiom(format!(
            "differential on {:?} leaves the declared target space",
            mesh.simplex(cid)
        ))
    })
}

fn constants_vector(
    mesh: &SimplicialComplex,
    cid: CellId,
    sp: &PairSpace,
) -> Result<Vec<Rat>> {
    // the constant function 1 as a pair (1, 0) or single 1
    let one_u = {
        let mut f = PolyForm::zero(sp.u_sup.carrier.clone(), 0, 0);
        for ci in 0..sp.u_sup.carrier.cells.len() {
            f.add_term(ci, vec![0; sp.u_sup.carrier.nvars()], vec![], Rat::one());
        }
        f
    };
    let raw = match sp.kind {
        RestrictionKind::DoubleTrace => {
            let vs = sp.v_sup.as_ref().unwrap();
            let zero = PolyForm::zero(vs.carrier.clone(), vs.k, vs.deg);
            [sp.u_sup.vec_of(&one_u.homogenized(sp.u_sup.deg))?, vs.vec_of(&zero)?].concat()
        }
        _ => sp.u_sup.vec_of(&one_u.homogenized(sp.u_sup.deg))?,
    };
    linalg::solve(&sp.basis, &raw).ok_or_else(|| {
        Error::FesAxiom(format!("constants missing from A⁰ on {:?}", mesh.simplex(cid)))
    })
}

fn evaluation_row(
    mesh: &SimplicialComplex,
    cid: CellId,
    sp: &PairSpace,
) -> Result<Vec<Rat>> {
    // e(u) = ∫ over the cell (with its ascending-vertex orientation) of the
    // pullback of u₀
    let corners = mesh.coords(mesh.simplex(cid));
    let mut row = Vec::with_capacity(sp.dim());
    for i in 0..sp.dim() {
        let pair = sp.basis_pair(i);
        let val = if sp.kind == RestrictionKind::Pullback {
            // intrinsic form: integrate over its own carrier footprint
            integrate_intrinsic(&pair.u0)?
        } else {
            pair.u0.integrate_over(&corners)?
        };
        row.push(val);
    }
    Ok(row)
}

/// Integral of an intrinsic top-degree form over its carrier (chart
/// coordinates carry the orientation of the cell's canonical chart).
fn integrate_intrinsic(u: &PolyForm) -> Result<Rat> {
    if u.k != u.carrier.frame {
        return Err(Error::Form("intrinsic integral needs a top-degree form".into()));
    }
    if u.k == 0 {
        let vals = u.eval_in_cell(0, &[Rat::one()]);
        return Ok(vals.into_iter().map(|(c, _)| c).next().unwrap_or_else(Rat::zero));
    }
    let top: alt::AltIdx = (0..u.k as u8).collect();
    let mut acc = Rat::zero();
    for ci in 0..u.carrier.cells.len() {
        let coords = u.carrier.cell_coords(ci);
        // orientation lives in the coefficients; cells carry positive measure
        let flip = linalg::signed_volume(&coords)?< Rat::zero();
        let p = u.component(ci, &top);
        for (m, c) in p {
            if !c.is_zero() {
                let v = linalg::integrate_monomial(&m, &coords)?;
                acc += if flip { -c * v } else { c * v };
            }
        }
    }
    Ok(acc)
}

/// Gram matrix of the L²-type pairing on a pair space: Euclidean metric on
/// the alternating components and the chart (reference) measure on each
/// cell; pairs sum their two components.
fn gram_matrix(mesh: &SimplicialComplex, cid: CellId, sp: &PairSpace) -> Result<RatMatrix> {
    // pullback-kind carriers already live in chart coordinates
    let chart = if sp.kind == RestrictionKind::Pullback {
        None
    } else {
        Some(cell_chart(mesh, cid)?)
    };
    let chart = chart.as_ref();
    let gu = superspace_gram(&sp.u_sup, chart)?;
    let mut g = gu;
    if let Some(vs) = &sp.v_sup {
        let gv = superspace_gram(vs, chart)?;
        // block diagonal
        let n = g.rows + gv.rows;
        let mut big = RatMatrix::zeros(n, n);
        for i in 0..g.rows {
            for j in 0..g.cols {
                *big.get_mut(i, j) = g.get(i, j).clone();
            }
        }
        for i in 0..gv.rows {
            for j in 0..gv.cols {
                *big.get_mut(g.rows + i, g.cols + j) = gv.get(i, j).clone();
            }
        }
        g = big;
    }
    // push through the basis: G_space = Bᵀ G_raw B
    let bt = sp.basis.transpose();
    Ok(bt.matmul(&g).matmul(&sp.basis))
}

/// Raw Gram over superspace coordinates. Cells are measured in the chart
/// coordinates of the containing cell (exact and positive; a per-cell
/// rescaling of the Euclidean measure that leaves DoF spans unchanged).
fn superspace_gram(sup: &Superspace, chart: Option<&Chart>) -> Result<RatMatrix> {
    let n = sup.dim();
    let mut g = RatMatrix::zeros(n, n);
    for ci in 0..sup.carrier.cells.len() {
        let coords = sup.carrier.cell_coords(ci);
        // measure: chart coordinates when a chart is provided
        let measured: Vec<Vec<Rat>> = match chart {
            Some(ch) => coords
                .iter()
                .map(|p| ch.to_intrinsic(p).ok_or_else(|| Error::Form("cell outside chart".into())))
                .collect::<Result<_>>()?,
            None => coords,
        };
        let vol_sign = if measured.len() > 1 {
            linalg::signed_volume(&measured)?
        } else {
            Rat::one()
        };
        let flip = vol_sign < Rat::zero();
        for (i1, m1) in sup.monos.iter().enumerate() {
            for (i2, m2) in sup.monos.iter().enumerate() {
                let m: crate::polyform::poly::MultiIdx =
                    m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                let mut integral = linalg::integrate_monomial(&m, &measured)?;
                if flip {
                    integral = -integral;
                }
                if integral.is_zero() {
                    continue;
                }
                for ai in 0..sup.alts.len() {
                    let row = ci * sup.per_cell() + i1 * sup.alts.len() + ai;
                    let col = ci * sup.per_cell() + i2 * sup.alts.len() + ai;
                    *g.get_mut(row, col) += &integral;
                }
            }
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// DoF sets, interpolation and extension on geometric systems
// ---------------------------------------------------------------------------

/// Harmonic degrees of freedom for every cell of a system at one degree.
pub struct DofSet {
    pub k: usize,
    /// per cell (core order): the functionals
    pub per_cell: BTreeMap<CellId, Vec<DofFunctional>>,
}

pub fn harmonic_dofs(sys: &FESystem, k: usize) -> Result<DofSet> {
    let mut per_cell = BTreeMap::new();
    for &cid in &sys.cell_order {
        let ci = sys.cell_index[&cid];
        per_cell.insert(cid, sys.core.harmonic_dofs(ci, k)?);
    }
    Ok(DofSet { k, per_cell })
}

impl DofSet {
    pub fn total(&self) -> usize {
        self.per_cell.values().map(|v| v.len()).sum()
    }
}

/// DoF values of an external form given per top cell.
pub fn external_dof_values(
    sys: &FESystem,
    dofs: &DofSet,
    input: &BTreeMap<CellId, PolyForm>,
) -> Result<Vec<Rat>> {
    let mut out = Vec::new();
    for (&cid, funcs) in &dofs.per_cell {
        if funcs.is_empty() {
            continue;
        }
        let raw = sys.external_restriction(input, cid, dofs.k)?;
        let coords = linalg::solve(&sys.space(cid, dofs.k).basis, &raw).ok_or_else(|| {
            Error::Form(format!(
                "input restriction leaves the space on {:?}",
                sys.mesh.simplex(cid)
            ))
        })?;
        for f in funcs {
            let mut acc = Rat::zero();
            for (i, c) in coords.iter().enumerate() {
                if !c.is_zero() {
                    acc += &f.row[i] * c;
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// The square DoF matrix (functionals × inverse-limit basis) of the system.
pub fn dof_matrix(sys: &FESystem, dofs: &DofSet) -> RatMatrix {
    let all: Vec<usize> = (0..sys.core.cells.len()).collect();
    let basis = sys.core.inverse_limit(&all, dofs.k);
    let off = sys.core.offsets(&all, dofs.k);
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for (&cid, funcs) in &dofs.per_cell {
        let ci = sys.cell_index[&cid];
        let pos = all.iter().position(|&x| x == ci).unwrap();
        for f in funcs {
            let mut row = vec![Rat::zero(); basis.cols];
            for j in 0..basis.cols {
                let col = basis.column(j);
                let mut acc = Rat::zero();
                for (l, rv) in f.row.iter().enumerate() {
                    let v = &col[off[pos] + l];
                    if !v.is_zero() {
                        acc += rv * v;
                    }
                }
                row[j] = acc;
            }
            rows.push(row);
        }
    }
    if rows.is_empty() {
        RatMatrix::zeros(0, basis.cols)
    } else {
        RatMatrix::from_rows(rows)
    }
}

/// Interpolate an external form (given per top cell) into the global space:
/// the unique element matching all harmonic DoFs. Returns coordinates in the
/// inverse-limit basis.
pub fn interpolate(
    sys: &FESystem,
    dofs: &DofSet,
    input: &BTreeMap<CellId, PolyForm>,
) -> Result<Vec<Rat>> {
    let m = dof_matrix(sys, dofs);
    if m.rows != m.cols {
        return Err(Error::Unisolvence(format!(
            "DoF matrix is {}×{}, not square",
            m.rows, m.cols
        )));
    }
    let values = external_dof_values(sys, dofs, input)?;
    linalg::solve(&m, &values)
        .ok_or_else(|| Error::Unisolvence("harmonic DoF matrix is singular".into()))
}

/// Per-cell components of a global element in the inverse-limit basis.
pub fn global_components(
    sys: &FESystem,
    k: usize,
    coords: &[Rat],
) -> BTreeMap<CellId, Vec<Rat>> {
    let all: Vec<usize> = (0..sys.core.cells.len()).collect();
    let basis = sys.core.inverse_limit(&all, k);
    let off = sys.core.offsets(&all, k);
    let v = basis.mul_vec(coords);
    let mut out = BTreeMap::new();
    for (pos, &cid) in sys.cell_order.iter().enumerate() {
        let d = sys.dim(cid, k);
        out.insert(cid, v[off[pos]..off[pos] + d].to_vec());
    }
    out
}

/// Extension by the dimension sweep: given boundary data as components per
/// boundary cell, produce an element of A^k(T) restricting to it. Each step
/// lifts residual data supported on one face with the minimum-norm solve.
pub fn extend(
    sys: &FESystem,
    cid: CellId,
    k: usize,
    boundary: &BTreeMap<CellId, Vec<Rat>>,
) -> Result<Vec<Rat>> {
    let ci = sys.cell_index[&cid];
    let mut u = vec![Rat::zero(); sys.dim(cid, k)];
    for l in 0..cid.0 {
        for f in sys.mesh.subcells(cid, l) {
            let fi = sys.cell_index[&f];
            let r = sys
                .core
                .restriction(fi, ci, k)
                .cloned()
                .unwrap_or_else(|| RatMatrix::zeros(sys.dim(f, k), sys.dim(cid, k)));
            let target = boundary
                .get(&f)
                .cloned()
                .unwrap_or_else(|| vec![Rat::zero(); sys.dim(f, k)]);
            let current = r.mul_vec(&u);
            let resid: Vec<Rat> = target.iter().zip(&current).map(|(a, b)| a - b).collect();
            if resid.iter().all(|x| x.is_zero()) {
                continue;
            }
            // lift the residual from face f with zero restriction to the
            // other faces of the same dimension (single-face extension)
            let mut rows = r.clone();
            let mut rhs = resid.clone();
            for g in sys.mesh.subcells(cid, l) {
                if g == f {
                    continue;
                }
                let gi = sys.cell_index[&g];
                let rg = sys
                    .core
                    .restriction(gi, ci, k)
                    .cloned()
                    .unwrap_or_else(|| RatMatrix::zeros(sys.dim(g, k), sys.dim(cid, k)));
                rows = rows.vstack(&rg);
                rhs.extend(vec![Rat::zero(); rg.rows]);
            }
            // also preserve lower-dimensional data already matched
            for ll in 0..l {
                for g in sys.mesh.subcells(cid, ll) {
                    let gi = sys.cell_index[&g];
                    let rg = sys
                        .core
                        .restriction(gi, ci, k)
                        .cloned()
                        .unwrap_or_else(|| RatMatrix::zeros(sys.dim(g, k), sys.dim(cid, k)));
                    rows = rows.vstack(&rg);
                    rhs.extend(vec![Rat::zero(); rg.rows]);
                }
            }
            let lift = linalg::min_norm_solve(&rows, &rhs)
                .or_else(|| linalg::solve(&rows, &rhs).filter(|x| rows.mul_vec(x) == rhs))
                .ok_or_else(|| {
                    Error::NoExtension(format!(
                        "no single-face extension from {:?} into {:?} at k={k}",
                        sys.mesh.simplex(f),
                        sys.mesh.simplex(cid)
                    ))
                })?;
            for (ui, lv) in u.iter_mut().zip(&lift) {
                *ui += lv;
            }
        }
    }
    // final check
    for (f, data) in boundary {
        let fi = sys.cell_index[f];
        if let Some(r) = sys.core.restriction(fi, ci, k) {
            if &r.mul_vec(&u) != data {
                return Err(Error::NoExtension("sweep failed to match boundary data".into()));
            }
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio};

    /// P¹ finite element system on a quadrilateral: the restriction from the
    /// cell to the boundary limit is not onto (dim 3 into dim 4).
    fn quad_p1_core() -> FesCore {
        // cells: 0..=3 vertices, 4..=7 edges (01,12,23,30), 8 quad
        let mut cells = Vec::new();
        for v in 0..4 {
            cells.push(CoreCell { dim: 0, name: format!("v{v}"), facets: vec![] });
        }
        let edges = [(0usize, 1usize), (1, 2), (2, 3), (3, 0)];
        for (i, (a, b)) in edges.iter().enumerate() {
            cells.push(CoreCell {
                dim: 1,
                name: format!("e{i}"),
                facets: vec![(*b, 1), (*a, -1)],
            });
        }
        cells.push(CoreCell {
            dim: 2,
            name: "quad".into(),
            facets: vec![(4, 1), (5, 1), (6, 1), (7, 1)],
        });

        // corners of the square
        let pts = [(rat(0), rat(0)), (rat(1), rat(0)), (rat(1), rat(1)), (rat(0), rat(1))];
        let mut dims = BTreeMap::new();
        let mut d = BTreeMap::new();
        let mut r = BTreeMap::new();
        let mut c = BTreeMap::new();
        let mut e = BTreeMap::new();
        for v in 0..4usize {
            dims.insert((v, 0), 1);
            c.insert(v, vec![Rat::one()]);
            e.insert(v, vec![Rat::one()]);
        }
        // edge spaces: A⁰ = values at the two endpoints (P¹ on the edge),
        // A¹ = constants in the unit edge parametrization (pullback kind)
        for i in 0..4usize {
            let cell = 4 + i;
            dims.insert((cell, 0), 2);
            dims.insert((cell, 1), 1);
            c.insert(cell, vec![Rat::one(), Rat::one()]);
            e.insert(cell, vec![Rat::one()]); // ∫ of the constant 1-form
            // edge dofs are (value at a, value at b); d(u) = b − a
            d.insert((cell, 0), RatMatrix::from_rows(vec![vec![rat(-1), rat(1)]]));
            // facets listed as (endpoint b, +1), (endpoint a, −1)
            r.insert((cell, 0, 0), RatMatrix::from_rows(vec![vec![rat(0), rat(1)]]));
            r.insert((cell, 1, 0), RatMatrix::from_rows(vec![vec![rat(1), rat(0)]]));
        }
        // quad spaces: A⁰ = affine functions (1, x, y), A¹ = constant forms
        // (w₁ dx + w₂ dy), A² = 0
        dims.insert((8, 0), 3);
        dims.insert((8, 1), 2);
        c.insert(8, vec![Rat::one(), Rat::zero(), Rat::zero()]);
        e.insert(8, vec![]);
        d.insert(
            (8, 0),
            RatMatrix::from_rows(vec![vec![rat(0), rat(1), rat(0)], vec![rat(0), rat(0), rat(1)]]),
        );
        d.insert((8, 1), RatMatrix::zeros(0, 2));
        for (i, (a, b)) in edges.iter().enumerate() {
            let eval = |v: usize| -> Vec<Rat> {
                vec![Rat::one(), pts[v].0.clone(), pts[v].1.clone()]
            };
            r.insert((8, i, 0), RatMatrix::from_rows(vec![eval(*a), eval(*b)]));
            // pullback of w₁dx + w₂dy to the edge a→b: w·(b − a)
            let dx = &pts[*b].0 - &pts[*a].0;
            let dy = &pts[*b].1 - &pts[*a].1;
            r.insert((8, i, 1), RatMatrix::from_rows(vec![vec![dx, dy]]));
        }
        FesCore::new(cells, 1, dims, d, r, c, e, BTreeMap::new()).unwrap()
    }

    #[test]
    fn quad_counterexample_has_no_extensions() {
        let core = quad_p1_core();
        assert!(!core.check_extensions(8, 0));
        // vertices and edges extend fine
        for v in 0..4 {
            assert!(core.check_extensions(v, 0));
        }
        for eidx in 4..8 {
            assert!(core.check_extensions(eidx, 0));
        }
        let (lhs, rhs, equal) = core.dimension_audit(0);
        assert_eq!(lhs, 3);
        assert_eq!(rhs, 4);
        assert!(!equal);
    }

    /// P¹–P⁰ on a single interval: a complete compatible system.
    fn interval_core() -> FesCore {
        let cells = vec![
            CoreCell { dim: 0, name: "v0".into(), facets: vec![] },
            CoreCell { dim: 0, name: "v1".into(), facets: vec![] },
            CoreCell { dim: 1, name: "edge".into(), facets: vec![(1, 1), (0, -1)] },
        ];
        let mut dims = BTreeMap::new();
        dims.insert((0, 0), 1);
        dims.insert((1, 0), 1);
        dims.insert((2, 0), 2); // values at endpoints
        dims.insert((2, 1), 1); // constants (du)
        let mut d = BTreeMap::new();
        // d(u) = u(1) − u(0) on the unit interval in the P⁰ basis
        d.insert((2, 0), RatMatrix::from_rows(vec![vec![rat(-1), rat(1)]]));
        let mut r = BTreeMap::new();
        r.insert((2, 0, 0), RatMatrix::from_rows(vec![vec![rat(0), rat(1)]]));
        r.insert((2, 1, 0), RatMatrix::from_rows(vec![vec![rat(1), rat(0)]]));
        let mut c = BTreeMap::new();
        c.insert(0, vec![Rat::one()]);
        c.insert(1, vec![Rat::one()]);
        c.insert(2, vec![Rat::one(), Rat::one()]);
        let mut e = BTreeMap::new();
        e.insert(0, vec![Rat::one()]);
        e.insert(1, vec![Rat::one()]);
        e.insert(2, vec![Rat::one()]); // ∫ of the constant 1-form over [0,1]
        let mut gram = BTreeMap::new();
        // L² Grams on the interval: P1 mass matrix and P0 mass
        gram.insert(
            (2, 0),
            RatMatrix::from_rows(vec![
                vec![ratio(1, 3), ratio(1, 6)],
                vec![ratio(1, 6), ratio(1, 3)],
            ]),
        );
        gram.insert((2, 1), RatMatrix::from_rows(vec![vec![rat(1)]]));
        gram.insert((0, 0), RatMatrix::identity(1));
        gram.insert((1, 0), RatMatrix::identity(1));
        FesCore::new(cells, 1, dims, d, r, c, e, gram).unwrap()
    }

    #[test]
    fn interval_system_is_compatible() {
        let core = interval_core();
        let rep = core.check_compatibility();
        assert!(rep.compatible, "{rep:?}");
        let (lhs, rhs, equal) = core.dimension_audit(0);
        assert!(equal);
        assert_eq!(lhs, 2);
        assert_eq!(rhs, 2);
        // global cohomology of an interval: (1, 0)
        assert_eq!(core.global_cohomology(), vec![1, 0]);
    }

    #[test]
    fn interval_harmonic_dofs() {
        let core = interval_core();
        // vertex, k=0: one value functional (the integral over the point)
        let v = core.harmonic_dofs(0, 0).unwrap();
        assert_eq!(v.len(), 1);
        // edge, k=0: A⁰₀ = 0 so no functionals at all
        let e0 = core.harmonic_dofs(2, 0).unwrap();
        assert_eq!(e0.len(), 0);
        // edge, k=1 (top degree): d(A⁰₀) = 0 pairings plus the integral → 1
        // functional, matching dim A¹₀ = 1
        let e1 = core.harmonic_dofs(2, 1).unwrap();
        assert_eq!(e1.len(), 1);
        assert!(e1[0].is_integral);
        // every functional count matches dim A^k₀
        for cell in 0..3 {
            for k in 0..=1 {
                let f = core.harmonic_dofs(cell, k).unwrap();
                assert_eq!(f.len(), core.zero_boundary_basis(cell, k).cols);
            }
        }
    }

    #[test]
    fn stokes_axiom_rejects_bad_orientation() {
        // flip one orientation sign in the interval system: Stokes fails
        let cells = vec![
            CoreCell { dim: 0, name: "v0".into(), facets: vec![] },
            CoreCell { dim: 0, name: "v1".into(), facets: vec![] },
            CoreCell { dim: 1, name: "edge".into(), facets: vec![(1, 1), (0, 1)] },
        ];
        let mut dims = BTreeMap::new();
        dims.insert((0, 0), 1);
        dims.insert((1, 0), 1);
        dims.insert((2, 0), 2);
        dims.insert((2, 1), 1);
        let mut d = BTreeMap::new();
        d.insert((2, 0), RatMatrix::from_rows(vec![vec![rat(-1), rat(1)]]));
        let mut r = BTreeMap::new();
        r.insert((2, 0, 0), RatMatrix::from_rows(vec![vec![rat(0), rat(1)]]));
        r.insert((2, 1, 0), RatMatrix::from_rows(vec![vec![rat(1), rat(0)]]));
        let mut c = BTreeMap::new();
        c.insert(0, vec![Rat::one()]);
        c.insert(1, vec![Rat::one()]);
        c.insert(2, vec![Rat::one(), Rat::one()]);
        let mut e = BTreeMap::new();
        e.insert(0, vec![Rat::one()]);
        e.insert(1, vec![Rat::one()]);
        e.insert(2, vec![Rat::one()]);
        let bad = FesCore::new(cells, 1, dims, d, r, c, e, BTreeMap::new());
        assert!(bad.is_err());
    }
}
