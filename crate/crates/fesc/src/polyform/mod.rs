//! Piecewise polynomial differential forms on simplicial carriers, with the
//! exterior derivative, Koszul and Poincaré operators, traces, pullbacks,
//! admissibility, and constrained-space construction.
//!
//! A form stores, per top cell of its carrier, polynomial coefficients in the
//! homogeneous barycentric basis of that cell against a fixed coordinate
//! frame for the alternating part. Traces are then coefficient comparisons
//! and pullbacks an exact linear map on the alternating index.

pub mod alt;
pub mod poly;
pub mod space;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::linalg::{self, binomial, Rat, RatMatrix};
use crate::simplicial::barycentric_coords;
use crate::splits::RefinedComplex;
use crate::{Error, Result};

use alt::AltIdx;
use poly::{MultiIdx, Poly};

pub use space::{constrained_space, augment, Continuity, FormSpace, Superspace};

/// Piecewise-linear carrier: top cells of one dimension over shared vertices.
/// `labels` are stable vertex identifiers (refined-complex vertex ids) used
/// to match faces across carriers; `verts` are coordinates in the carrier's
/// frame, whose dimension is `frame`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Carrier {
    pub frame: usize,
    pub dim: usize,
    pub labels: Vec<usize>,
    pub verts: Vec<Vec<Rat>>,
    /// per top cell: positions into `verts`/`labels`, sorted by label
    pub cells: Vec<Vec<usize>>,
}

impl Carrier {
    /// Single-simplex carrier in its own ambient frame.
    pub fn simplex(coords: Vec<Vec<Rat>>) -> Arc<Carrier> {
        let n = coords[0].len();
        let d = coords.len() - 1;
        Arc::new(Carrier {
            frame: n,
            dim: d,
            labels: (0..coords.len()).collect(),
            verts: coords,
            cells: vec![(0..=d).collect()],
        })
    }

    /// Carrier of the refined cells lying inside one base cell.
    pub fn from_refined(rc: &RefinedComplex, base: crate::simplicial::CellId) -> Arc<Carrier> {
        let tops = rc.tops_within(base);
        Self::from_complex_cells(&rc.refined, &tops)
    }

    /// Carrier of all top cells of a complex.
    pub fn from_complex(c: &crate::simplicial::SimplicialComplex) -> Arc<Carrier> {
        let tops = c.top_cells();
        Self::from_complex_cells(c, &tops)
    }

    pub fn from_complex_cells(
        c: &crate::simplicial::SimplicialComplex,
        tops: &[crate::simplicial::CellId],
    ) -> Arc<Carrier> {
        let mut used: BTreeSet<usize> = BTreeSet::new();
        for &t in tops {
            used.extend(c.simplex(t).iter().copied());
        }
        let labels: Vec<usize> = used.into_iter().collect();
        let pos: BTreeMap<usize, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let verts: Vec<Vec<Rat>> = labels.iter().map(|&l| c.vertices[l].clone()).collect();
        let dim = tops.first().map_or(0, |t| t.0);
        let cells = tops.iter().map(|&t| c.simplex(t).iter().map(|v| pos[v]).collect()).collect();
        Arc::new(Carrier { frame: c.ambient, dim, labels, verts, cells })
    }

    pub fn nvars(&self) -> usize {
        self.dim + 1
    }

    pub fn cell_coords(&self, cell: usize) -> Vec<Vec<Rat>> {
        self.cells[cell].iter().map(|&v| self.verts[v].clone()).collect()
    }

    pub fn cell_labels(&self, cell: usize) -> Vec<usize> {
        self.cells[cell].iter().map(|&v| self.labels[v]).collect()
    }

    /// Gradients of the barycentric coordinates of a cell in frame
    /// coordinates. Requires cell dimension equal to the frame dimension.
    pub fn gradients(&self, cell: usize) -> Result<Vec<Vec<Rat>>> {
        let n = self.frame;
        if self.dim != n {
            return Err(Error::Form(format!(
                "gradients need full-dimensional cells (dim {} in frame {})",
                self.dim, n
            )));
        }
        let coords = self.cell_coords(cell);
        // rows of the inverse of [[V_i; 1]] give (∇λ_i, const)
        let mut m = RatMatrix::zeros(n + 1, n + 1);
        for (j, v) in coords.iter().enumerate() {
            for i in 0..n {
                *m.get_mut(i, j) = v[i].clone();
            }
            *m.get_mut(n, j) = Rat::one();
        }
        let inv = linalg::solve_many(&m, &RatMatrix::identity(n + 1))
            .ok_or_else(|| Error::DegenerateSimplex("cell is degenerate".into()))?;
        Ok((0..=n).map(|i| (0..n).map(|a| inv.get(i, a).clone()).collect()).collect())
    }

    /// Barycentric coordinates of a frame point in a cell.
    pub fn barycentric_in_cell(&self, cell: usize, point: &[Rat]) -> Option<Vec<Rat>> {
        barycentric_coords(&self.cell_coords(cell), point)
    }

    /// First cell whose closed realization contains the point.
    pub fn locate(&self, point: &[Rat]) -> Option<(usize, Vec<Rat>)> {
        for c in 0..self.cells.len() {
            if let Some(l) = self.barycentric_in_cell(c, point) {
                if l.iter().all(|x| !x.is_negative()) {
                    return Some((c, l));
                }
            }
        }
        None
    }

    /// Facets (codimension-one faces of cells) by sorted label tuple, with
    /// the list of incident cells.
    pub fn facets(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            for skip in 0..cell.len() {
                let f: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &v)| self.labels[v])
                    .collect();
                map.entry(f).or_default().push(ci);
            }
        }
        map
    }

    /// Interior facets: shared by exactly two cells.
    pub fn interior_facets(&self) -> Vec<(Vec<usize>, usize, usize)> {
        self.facets()
            .into_iter()
            .filter(|(_, cs)| cs.len() == 2)
            .map(|(f, cs)| (f, cs[0], cs[1]))
            .collect()
    }

    /// Build the carrier of a face: all `face_dim`-faces of cells contained
    /// in the closed simplex with the given corner coordinates. The face
    /// carrier keeps the parent's frame and labels.
    pub fn face_carrier(&self, face_corners: &[Vec<Rat>]) -> Result<Arc<Carrier>> {
        let fd = face_corners.len() - 1;
        let inside = |p: &[Rat]| crate::simplicial::inside_closed(face_corners, p);
        let mut face_cells: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut used: BTreeSet<usize> = BTreeSet::new();
        for cell in &self.cells {
            // vertices of this cell on the face
            let on_face: Vec<usize> =
                cell.iter().copied().filter(|&v| inside(&self.verts[v])).collect();
            if on_face.len() < fd + 1 {
                continue;
            }
            for sub in combinations(&on_face, fd + 1) {
                face_cells.insert(sub.clone());
                used.extend(sub);
            }
        }
        if face_cells.is_empty() {
            return Err(Error::Form("face does not meet the carrier".into()));
        }
        let vlist: Vec<usize> = used.into_iter().collect();
        let pos: BTreeMap<usize, usize> = vlist.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let carrier = Carrier {
            frame: self.frame,
            dim: fd,
            labels: vlist.iter().map(|&v| self.labels[v]).collect(),
            verts: vlist.iter().map(|&v| self.verts[v].clone()).collect(),
            cells: face_cells.iter().map(|cl| cl.iter().map(|v| pos[&v]).collect()).collect(),
        };
        // keep only cells that tile the face: drop lower-dimensional overlaps
        // (faces of other face cells) by checking volume in the face chart
        let chart = Chart::new(face_corners)?;
        let mut kept = Vec::new();
        let mut total = Rat::zero();
        for (i, _) in carrier.cells.iter().enumerate() {
            let coords = carrier.cell_coords(i);
            let intr: Option<Vec<Vec<Rat>>> = coords.iter().map(|p| chart.to_intrinsic(p)).collect();
            let Some(intr) = intr else { continue };
            if let Ok(v) = linalg::signed_volume(&intr) {
                if !v.is_zero() {
                    kept.push(carrier.cells[i].clone());
                    total += v.abs();
                }
            }
        }
        let expected = Rat::new(num_bigint::BigInt::one(), linalg::factorial(fd));
        if total != expected {
            return Err(Error::Form(format!(
                "face cells do not tile the face: covered {} of {}",
                total, expected
            )));
        }
        let mut c2 = carrier;
        c2.cells = kept;
        Ok(Arc::new(c2))
    }

    /// Intrinsic version of a face carrier: coordinates mapped through the
    /// chart of the face, frame dimension = face dimension.
    pub fn to_intrinsic(&self, chart: &Chart) -> Result<Arc<Carrier>> {
        let verts: Result<Vec<Vec<Rat>>> = self
            .verts
            .iter()
            .map(|p| {
                chart
                    .to_intrinsic(p)
                    .ok_or_else(|| Error::Form("vertex outside face chart".into()))
            })
            .collect();
        Ok(Arc::new(Carrier {
            frame: chart.edges.len(),
            dim: self.dim,
            labels: self.labels.clone(),
            verts: verts?,
            cells: self.cells.clone(),
        }))
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > items.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut pick: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
        pick.sort_unstable();
        out.push(pick);
        let n = items.len();
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Affine chart of a face: `x = origin + Σ y_j · edges[j]`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub origin: Vec<Rat>,
    pub edges: Vec<Vec<Rat>>,
}

impl Chart {
    pub fn new(corners: &[Vec<Rat>]) -> Result<Chart> {
        let origin = corners[0].clone();
        let edges: Vec<Vec<Rat>> = corners[1..]
            .iter()
            .map(|v| v.iter().zip(&origin).map(|(a, b)| a - b).collect())
            .collect();
        Ok(Chart { origin, edges })
    }

    /// Solve `origin + E y = point`; `None` when outside the affine hull.
    pub fn to_intrinsic(&self, point: &[Rat]) -> Option<Vec<Rat>> {
        let n = self.origin.len();
        let d = self.edges.len();
        let mut m = RatMatrix::zeros(n, d);
        for j in 0..d {
            for i in 0..n {
                *m.get_mut(i, j) = self.edges[j][i].clone();
            }
        }
        let b: Vec<Rat> = point.iter().zip(&self.origin).map(|(p, o)| p - o).collect();
        let y = linalg::solve(&m, &b)?;
        // verify consistency (solve() zero-fills free vars; the hull check
        // is the residual)
        let back = m.mul_vec(&y);
        if back == b {
            Some(y)
        } else {
            None
        }
    }
}

/// A piecewise polynomial differential k-form.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm {
    pub k: usize,
    /// homogeneous barycentric degree of every coefficient table
    pub deg: u32,
    pub carrier: Arc<Carrier>,
    /// per top cell: (multi-index, alt index) → coefficient
    pub cells: Vec<BTreeMap<(MultiIdx, AltIdx), Rat>>,
}

impl PolyForm {
    pub fn zero(carrier: Arc<Carrier>, k: usize, deg: u32) -> Self {
        let cells = vec![BTreeMap::new(); carrier.cells.len()];
        PolyForm { k, deg, carrier, cells }
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|t| t.values().all(|c| c.is_zero()))
    }

    pub fn add_term(&mut self, cell: usize, alpha: MultiIdx, idx: AltIdx, c: Rat) {
        assert_eq!(poly::deg(&alpha), self.deg, "term degree mismatch");
        assert_eq!(idx.len(), self.k, "alt index arity mismatch");
        if c.is_zero() {
            return;
        }
        let e = self.cells[cell].entry((alpha, idx)).or_insert_with(Rat::zero);
        *e += c;
    }

    pub fn scaled(&self, s: &Rat) -> Self {
        let mut out = self.clone();
        for t in &mut out.cells {
            for v in t.values_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.carrier, &other.carrier) && self.carrier != other.carrier {
            return Err(Error::Form("adding forms on different carriers".into()));
        }
        if self.k != other.k {
            return Err(Error::Form("adding forms of different degrees".into()));
        }
        let deg = self.deg.max(other.deg);
        let mut a = self.homogenized(deg);
        let b = other.homogenized(deg);
        for (ta, tb) in a.cells.iter_mut().zip(&b.cells) {
            for ((m, i), c) in tb {
                let e = ta.entry((m.clone(), i.clone())).or_insert_with(Rat::zero);
                *e += c;
            }
        }
        a.prune();
        Ok(a)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(&-Rat::one()))
    }

    pub fn prune(&mut self) {
        for t in &mut self.cells {
            t.retain(|_, c| !c.is_zero());
        }
    }

    /// Re-express at a higher homogeneous degree.
    pub fn homogenized(&self, target: u32) -> Self {
        if target == self.deg {
            return self.clone();
        }
        assert!(target > self.deg);
        let nv = self.carrier.nvars();
        let mut out = PolyForm::zero(self.carrier.clone(), self.k, target);
        for (ci, table) in self.cells.iter().enumerate() {
            // group by alt index
            let mut by_alt: BTreeMap<AltIdx, Poly> = BTreeMap::new();
            for ((m, i), c) in table {
                poly::add_term(by_alt.entry(i.clone()).or_default(), m.clone(), c.clone());
            }
            for (i, p) in by_alt {
                let h = poly::homogenize(&p, nv, target);
                for (m, c) in h {
                    out.add_term(ci, m, i.clone(), c);
                }
            }
        }
        out
    }

    /// Express at a lower homogeneous degree when possible.
    pub fn dehomogenized(&self, target: u32) -> Option<Self> {
        if target >= self.deg {
            return Some(self.homogenized(target));
        }
        let nv = self.carrier.nvars();
        let mut out = PolyForm::zero(self.carrier.clone(), self.k, target);
        for (ci, table) in self.cells.iter().enumerate() {
            let mut by_alt: BTreeMap<AltIdx, Poly> = BTreeMap::new();
            for ((m, i), c) in table {
                poly::add_term(by_alt.entry(i.clone()).or_default(), m.clone(), c.clone());
            }
            for (i, p) in by_alt {
                let q = poly::dehomogenize(&p, nv, self.deg, target)?;
                for (m, c) in q {
                    out.add_term(ci, m, i.clone(), c);
                }
            }
        }
        Some(out)
    }

    /// Scalar polynomial of one alternating component on one cell.
    pub fn component(&self, cell: usize, idx: &AltIdx) -> Poly {
        let mut p = Poly::new();
        for ((m, i), c) in &self.cells[cell] {
            if i == idx {
                poly::add_term(&mut p, m.clone(), c.clone());
            }
        }
        p
    }

    /// Exterior derivative, computed cellwise; degree drops by one unless
    /// the form is constant-in-λ (deg 0), where the result is zero.
    pub fn d(&self) -> Result<Self> {
        let n = self.carrier.frame;
        if self.k >= n {
            // (n+1)-forms vanish; represent at degree saturating 0
            return Ok(PolyForm::zero(self.carrier.clone(), self.k + 1, self.deg.saturating_sub(1)));
        }
        let out_deg = self.deg.saturating_sub(1);
        let mut out = PolyForm::zero(self.carrier.clone(), self.k + 1, out_deg);
        if self.deg == 0 {
            return Ok(out);
        }
        for (ci, table) in self.cells.iter().enumerate() {
            let grads = self.carrier.gradients(ci)?;
            for ((m, i), c) in table {
                if c.is_zero() {
                    continue;
                }
                for (var, &e) in m.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let mut m2 = m.clone();
                    m2[var] -= 1;
                    let coef = c * Rat::from_integer(num_bigint::BigInt::from(e));
                    // dλ_var ∧ e^I with dλ_var = Σ_a g[a] e^a
                    for (a, g) in grads[var].iter().enumerate() {
                        if g.is_zero() {
                            continue;
                        }
                        if let Some((s, w)) = alt::wedge(&vec![a as u8], i) {
                            out.add_term(ci, m2.clone(), w, &coef * g * linalg::rat(s as i64));
                        }
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Partial derivative of every component along a frame axis (used for
    /// first-derivative continuity constraints). Degree drops by one.
    pub fn partial(&self, axis: usize) -> Result<Self> {
        let out_deg = self.deg.saturating_sub(1);
        let mut out = PolyForm::zero(self.carrier.clone(), self.k, out_deg);
        if self.deg == 0 {
            return Ok(out);
        }
        for (ci, table) in self.cells.iter().enumerate() {
            let grads = self.carrier.gradients(ci)?;
            for ((m, i), c) in table {
                for (var, &e) in m.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let g = &grads[var][axis];
                    if g.is_zero() {
                        continue;
                    }
                    let mut m2 = m.clone();
                    m2[var] -= 1;
                    out.add_term(ci, m2, i.clone(), c * g * Rat::from_integer(e.into()));
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Contraction with the affine vector field `x ↦ x − W` (the Koszul
    /// operator at `W`). Returns the zero form for k = 0.
    pub fn koszul(&self, w: &[Rat]) -> Self {
        if self.k == 0 {
            // contraction of 0-forms is zero by convention
            return PolyForm::zero(self.carrier.clone(), 0, self.deg + 1);
        }
        let mut out = PolyForm::zero(self.carrier.clone(), self.k - 1, self.deg + 1);
        for (ci, table) in self.cells.iter().enumerate() {
            let coords = self.carrier.cell_coords(ci);
            // x − W = Σ_j λ_j (V_j − W)
            let dirs: Vec<Vec<Rat>> = coords
                .iter()
                .map(|v| v.iter().zip(w).map(|(a, b)| a - b).collect())
                .collect();
            for ((m, i), c) in table {
                if c.is_zero() {
                    continue;
                }
                for (j, dir) in dirs.iter().enumerate() {
                    for (cc, rest) in alt::contract_basis(i, dir) {
                        let mut m2 = m.clone();
                        m2[j] += 1;
                        out.add_term(ci, m2, rest, c * &cc);
                    }
                }
            }
        }
        out.prune();
        out
    }

    /// The carrier is cone-shaped with respect to `W`: single cell, or `W`
    /// is a shared vertex of every cell.
    pub fn cone_check(&self, w: &[Rat]) -> Result<()> {
        if self.carrier.cells.len() == 1 {
            return Ok(());
        }
        for ci in 0..self.carrier.cells.len() {
            let has = self.carrier.cell_coords(ci).iter().any(|v| v.as_slice() == w);
            if !has {
                return Err(Error::Form(format!(
                    "carrier is not star-invariant under contraction to the given point \
                     (cell {ci} does not touch it)"
                )));
            }
        }
        Ok(())
    }

    /// Poincaré operator at `W`: per cell,
    /// `p_W(λ^α ⊗ w) = Σ_{β ≤ α} C(α,β) λ(W)^{α−β} ℓ^β / (k+|β|) · (w ⌞ (x−W))`
    /// with `ℓ_i` the homogeneous linear form `λ_i − λ_i(W)·Σλ`.
    /// Zero on 0-forms. The homotopy identity `p d + d p = id` holds for
    /// k ≥ 1 and `p(du) = u − u(W)` for k = 0.
    pub fn poincare(&self, w: &[Rat]) -> Result<Self> {
        self.cone_check(w)?;
        if self.k == 0 {
            return Ok(PolyForm::zero(self.carrier.clone(), 0, self.deg + 1));
        }
        let nv = self.carrier.nvars();
        let target = self.deg + 1;
        let mut out = PolyForm::zero(self.carrier.clone(), self.k - 1, target);
        for (ci, table) in self.cells.iter().enumerate() {
            let coords = self.carrier.cell_coords(ci);
            let lw = self
                .carrier
                .barycentric_in_cell(ci, w)
                .ok_or_else(|| Error::Form("center outside cell affine hull".into()))?;
            // ℓ_i coefficients: (δ_ij − λ_i(W)) over j
            let ell: Vec<Poly> = (0..nv)
                .map(|i| {
                    let coefs: Vec<Rat> = (0..nv)
                        .map(|j| if i == j { Rat::one() - &lw[i] } else { -lw[i].clone() })
                        .collect();
                    poly::linear_form(&coefs)
                })
                .collect();
            let dirs: Vec<Vec<Rat>> = coords
                .iter()
                .map(|v| v.iter().zip(w).map(|(a, b)| a - b).collect())
                .collect();
            for ((m, i), c) in table {
                if c.is_zero() {
                    continue;
                }
                // contraction factor Σ_j λ_j (w ⌞ (V_j − W)) as polynomial
                // per surviving alt index
                let mut contr: BTreeMap<AltIdx, Poly> = BTreeMap::new();
                for (j, dir) in dirs.iter().enumerate() {
                    for (cc, rest) in alt::contract_basis(i, dir) {
                        let mut mono = vec![0u32; nv];
                        mono[j] = 1;
                        poly::add_term(contr.entry(rest).or_default(), mono, cc);
                    }
                }
                if contr.is_empty() {
                    continue;
                }
                // sum over β ≤ α
                for beta in sub_multi_indices(m) {
                    let bdeg = poly::deg(&beta);
                    let mut scalar = Rat::new(
                        num_bigint::BigInt::one(),
                        num_bigint::BigInt::from(self.k as u32 + bdeg),
                    );
                    let mut lpow = Rat::one();
                    for idx in 0..nv {
                        scalar *= Rat::from_integer(binomial(m[idx] as usize, beta[idx] as usize));
                        for _ in 0..(m[idx] - beta[idx]) {
                            lpow *= &lw[idx];
                        }
                    }
                    scalar *= lpow;
                    if scalar.is_zero() {
                        continue;
                    }
                    // ℓ^β
                    let mut lbeta: Poly = [(vec![0u32; nv], Rat::one())].into_iter().collect();
                    for idx in 0..nv {
                        for _ in 0..beta[idx] {
                            lbeta = poly::poly_mul(&lbeta, &ell[idx]);
                        }
                    }
                    let coef = c * &scalar;
                    for (rest, contr_poly) in &contr {
                        let prod = poly::poly_mul(&lbeta, contr_poly);
                        for (mono, pc) in prod {
                            if pc.is_zero() {
                                continue;
                            }
                            // homogenize each term to the target degree
                            let h = poly::homogenize(
                                &[(mono, pc)].into_iter().collect(),
                                nv,
                                target,
                            );
                            for (m2, c2) in h {
                                out.add_term(ci, m2, rest.clone(), &coef * c2);
                            }
                        }
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Homogeneous component of degree `r` around `W`, expressed back in the
    /// homogeneous barycentric basis at the form's own degree.
    pub fn homogeneous_component(&self, w: &[Rat], r: u32) -> Result<Self> {
        self.cone_check(w)?;
        let nv = self.carrier.nvars();
        let mut out = PolyForm::zero(self.carrier.clone(), self.k, self.deg);
        for (ci, table) in self.cells.iter().enumerate() {
            let lw = self
                .carrier
                .barycentric_in_cell(ci, w)
                .ok_or_else(|| Error::Form("center outside cell affine hull".into()))?;
            let ell: Vec<Poly> = (0..nv)
                .map(|i| {
                    let coefs: Vec<Rat> = (0..nv)
                        .map(|j| if i == j { Rat::one() - &lw[i] } else { -lw[i].clone() })
                        .collect();
                    poly::linear_form(&coefs)
                })
                .collect();
            for ((m, i), c) in table {
                for beta in sub_multi_indices(m) {
                    if poly::deg(&beta) != r {
                        continue;
                    }
                    let mut scalar = c.clone();
                    for idx in 0..nv {
                        scalar *= Rat::from_integer(binomial(m[idx] as usize, beta[idx] as usize));
                        for _ in 0..(m[idx] - beta[idx]) {
                            scalar *= &lw[idx];
                        }
                    }
                    if scalar.is_zero() {
                        continue;
                    }
                    let mut lbeta: Poly = [(vec![0u32; nv], Rat::one())].into_iter().collect();
                    for idx in 0..nv {
                        for _ in 0..beta[idx] {
                            lbeta = poly::poly_mul(&lbeta, &ell[idx]);
                        }
                    }
                    let h = poly::homogenize(&lbeta, nv, self.deg);
                    for (m2, c2) in h {
                        out.add_term(ci, m2, i.clone(), &scalar * c2);
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Trace onto a face carrier (same frame, lower cell dimension).
    /// Errors when one-sided limits disagree.
    pub fn trace_onto(&self, face: &Arc<Carrier>) -> Result<PolyForm> {
        assert_eq!(face.frame, self.carrier.frame);
        let mut out = PolyForm::zero(face.clone(), self.k, self.deg);
        for (fi, fcell) in face.cells.iter().enumerate() {
            let flabels: Vec<usize> = fcell.iter().map(|&v| face.labels[v]).collect();
            let mut found: Option<BTreeMap<(MultiIdx, AltIdx), Rat>> = None;
            let mut disagree: Vec<usize> = Vec::new();
            for (ci, cell) in self.carrier.cells.iter().enumerate() {
                let clabels: Vec<usize> = cell.iter().map(|&v| self.carrier.labels[v]).collect();
                // positions of the face vertices inside this cell
                let Some(positions) = flabels
                    .iter()
                    .map(|l| clabels.iter().position(|cl| cl == l))
                    .collect::<Option<Vec<usize>>>()
                else {
                    continue;
                };
                // restrict: keep monomials supported on those positions
                let mut table: BTreeMap<(MultiIdx, AltIdx), Rat> = BTreeMap::new();
                for ((m, i), c) in &self.cells[ci] {
                    if c.is_zero() {
                        continue;
                    }
                    let mut ok = true;
                    for (pos, &e) in m.iter().enumerate() {
                        if e > 0 && !positions.contains(&pos) {
                            ok = false;
                            break;
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let m2: MultiIdx = positions.iter().map(|&p| m[p]).collect();
                    let e = table.entry((m2, i.clone())).or_insert_with(Rat::zero);
                    *e += c;
                }
                table.retain(|_, c| !c.is_zero());
                match &found {
                    None => found = Some(table),
                    Some(prev) => {
                        if *prev != table {
                            disagree.push(ci);
                        }
                    }
                }
            }
            let Some(table) = found else {
                return Err(Error::Form(format!("face cell {flabels:?} not in carrier")));
            };
            if !disagree.is_empty() {
                return Err(Error::MultiValued {
                    face: format!("{flabels:?}"),
                    cells: disagree,
                });
            }
            out.cells[fi] = table;
        }
        Ok(out)
    }

    /// Pullback onto a face: trace, then restrict the alternating action to
    /// the face chart's tangent vectors. The result lives on the intrinsic
    /// face carrier.
    pub fn pullback_onto(&self, face: &Arc<Carrier>, chart: &Chart) -> Result<PolyForm> {
        let traced = self.trace_onto(face)?;
        let intr = face.to_intrinsic(chart)?;
        let mut out = PolyForm::zero(intr, self.k, self.deg);
        for (ci, table) in traced.cells.iter().enumerate() {
            for ((m, i), c) in table {
                for (det, j) in alt::pullback_basis(i, &chart.edges) {
                    out.add_term(ci, m.clone(), j, c * &det);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Exact integral of the pullback over an oriented simplex given by its
    /// corner coordinates in frame space (orientation = corner order). The
    /// simplex must be tiled by faces of the carrier cells.
    pub fn integrate_over(&self, corners: &[Vec<Rat>]) -> Result<Rat> {
        if corners.len() - 1 != self.k {
            return Err(Error::Form(format!(
                "integrating a {}-form over a {}-simplex",
                self.k,
                corners.len() - 1
            )));
        }
        if self.k == 0 {
            // evaluation of the 0-form at the point
            let vals = self.eval(&corners[0])?;
            return Ok(vals.into_iter().map(|(c, _)| c).next().unwrap_or_else(Rat::zero));
        }
        let chart = Chart::new(corners)?;
        let face = self.carrier.face_carrier(corners)?;
        let pulled = self.pullback_onto(&face, &chart)?;
        let top: AltIdx = (0..self.k as u8).collect();
        let mut acc = Rat::zero();
        for (ci, _) in pulled.carrier.cells.iter().enumerate() {
            let coords = pulled.carrier.cell_coords(ci);
            // orientation lives in the pullback coefficients; cells carry a
            // positive measure in chart coordinates
            let flip = linalg::signed_volume(&coords)?.is_negative();
            let p = pulled.component(ci, &top);
            for (m, c) in p {
                if c.is_zero() {
                    continue;
                }
                let v = linalg::integrate_monomial(&m, &coords)?;
                acc += if flip { -c * v } else { c * v };
            }
        }
        Ok(acc)
    }

    /// Evaluate all alternating components at a frame point.
    pub fn eval(&self, point: &[Rat]) -> Result<Vec<(Rat, AltIdx)>> {
        let (ci, lambda) = self
            .carrier
            .locate(point)
            .ok_or_else(|| Error::Form("evaluation point outside carrier".into()))?;
        Ok(self.eval_in_cell(ci, &lambda))
    }

    pub fn eval_in_cell(&self, cell: usize, lambda: &[Rat]) -> Vec<(Rat, AltIdx)> {
        let mut by_alt: BTreeMap<AltIdx, Rat> = BTreeMap::new();
        for ((m, i), c) in &self.cells[cell] {
            if c.is_zero() {
                continue;
            }
            let mut term = c.clone();
            for (vi, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    term *= &lambda[vi];
                }
            }
            *by_alt.entry(i.clone()).or_insert_with(Rat::zero) += term;
        }
        by_alt.into_iter().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (c, i)).collect()
    }

    /// Re-express on a finer carrier whose cells each lie inside one cell of
    /// the current carrier.
    pub fn refine_onto(&self, finer: &Arc<Carrier>) -> Result<PolyForm> {
        assert_eq!(finer.frame, self.carrier.frame);
        let mut out = PolyForm::zero(finer.clone(), self.k, self.deg);
        for (fi, _) in finer.cells.iter().enumerate() {
            let fcoords = finer.cell_coords(fi);
            // find a coarse cell containing all vertices
            let mut host = None;
            'outer: for ci in 0..self.carrier.cells.len() {
                let ccoords = self.carrier.cell_coords(ci);
                let mut transfer: Vec<Vec<Rat>> = vec![Vec::new(); ccoords.len()];
                for fv in &fcoords {
                    match barycentric_coords(&ccoords, fv) {
                        Some(l) if l.iter().all(|x| !x.is_negative()) => {
                            for (i, li) in l.into_iter().enumerate() {
                                transfer[i].push(li);
                            }
                        }
                        _ => continue 'outer,
                    }
                }
                host = Some((ci, transfer));
                break;
            }
            let Some((ci, transfer)) = host else {
                return Err(Error::Form("fine cell not contained in any coarse cell".into()));
            };
            let mut by_alt: BTreeMap<AltIdx, Poly> = BTreeMap::new();
            for ((m, i), c) in &self.cells[ci] {
                poly::add_term(by_alt.entry(i.clone()).or_default(), m.clone(), c.clone());
            }
            for (i, p) in by_alt {
                let q = poly::compose_affine(&p, &transfer);
                for (m, c) in q {
                    out.add_term(fi, m, i.clone(), c);
                }
            }
        }
        out.prune();
        Ok(out)
    }
}

fn sub_multi_indices(m: &MultiIdx) -> Vec<MultiIdx> {
    let mut out: Vec<MultiIdx> = vec![vec![]];
    for &e in m {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for partial in &out {
            for v in 0..=e {
                let mut p = partial.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Double trace: `(trace u, trace du)` on a face carrier.
pub fn double_trace(u: &PolyForm, face: &Arc<Carrier>) -> Result<(PolyForm, PolyForm)> {
    let du = u.d()?;
    Ok((u.trace_onto(face)?, du.trace_onto(face)?))
}

/// Admissibility of face data: `d pull v0 = pull v1` exactly.
pub fn is_admissible(v0: &PolyForm, v1: &PolyForm, chart: &Chart) -> Result<bool> {
    let p0 = v0.pullback_onto(&v0.carrier, chart)?;
    let p1 = v1.pullback_onto(&v1.carrier, chart)?;
    let d0 = p0.d()?;
    Ok(d0.sub(&p1.homogenized(d0.deg.max(p1.deg)))?.is_zero())
}

/// A pair `(v0, v1)` intended to satisfy the admissibility condition; on a
/// full-dimensional cell `v1 = d v0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairForm {
    pub u0: PolyForm,
    pub u1: Option<PolyForm>,
}

impl PairForm {
    pub fn single(u0: PolyForm) -> Self {
        PairForm { u0, u1: None }
    }

    pub fn pair(u0: PolyForm, u1: PolyForm) -> Self {
        PairForm { u0, u1: Some(u1) }
    }

    /// The differential on admissible pairs: `(v0, v1) ↦ (v1, 0)`.
    pub fn admissible_differential(&self) -> Result<PairForm> {
        let v1 = self
            .u1
            .as_ref()
            .ok_or_else(|| Error::Form("pair differential needs the second component".into()))?;
        let zero = PolyForm::zero(v1.carrier.clone(), v1.k + 1, v1.deg);
        Ok(PairForm::pair(v1.clone(), zero))
    }
}

/// Random polynomial form with small rational coefficients; used by property
/// checks and the verification spot tests.
pub fn random_polyform<R: rand::Rng>(
    rng: &mut R,
    carrier: Arc<Carrier>,
    k: usize,
    deg: u32,
) -> PolyForm {
    let nv = carrier.nvars();
    let n = carrier.frame;
    let mut out = PolyForm::zero(carrier, k, deg);
    let monos = poly::monomials(nv, deg);
    let alts = alt::alt_basis(n, k);
    for ci in 0..out.carrier.cells.len() {
        for m in &monos {
            for a in &alts {
                let c = linalg::random_rats(rng, 1).pop().unwrap();
                out.add_term(ci, m.clone(), a.clone(), c);
            }
        }
    }
    out.prune();
    out
}

/// Random rational barycentric point strictly inside the unit simplex.
pub fn random_interior_barycentric<R: rand::Rng>(rng: &mut R, nvars: usize) -> Vec<Rat> {
    loop {
        let mut w: Vec<Rat> = (0..nvars)
            .map(|_| Rat::new(num_bigint::BigInt::from(rng.gen_range(1..=9)), 10.into()))
            .collect();
        let total: Rat = w.iter().fold(Rat::zero(), |a, b| a + b);
        if total.is_zero() {
            continue;
        }
        for x in &mut w {
            *x /= &total;
        }
        return w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio};
    use rand::SeedableRng;

    fn unit_triangle() -> Arc<Carrier> {
        Carrier::simplex(vec![
            vec![rat(0), rat(0)],
            vec![rat(1), rat(0)],
            vec![rat(0), rat(1)],
        ])
    }

    /// x·dy on the unit triangle: x = λ1, dy = e^1.
    fn x_dy() -> PolyForm {
        let c = unit_triangle();
        let mut u = PolyForm::zero(c, 1, 1);
        u.add_term(0, vec![0, 1, 0], vec![1], rat(1));
        u
    }

    #[test]
    fn exterior_derivative_x_dy() {
        let u = x_dy();
        let du = u.d().unwrap();
        // d(x dy) = dx ∧ dy
        assert_eq!(du.k, 2);
        let vals = du.eval(&[ratio(1, 4), ratio(1, 4)]).unwrap();
        assert_eq!(vals, vec![(rat(1), vec![0, 1])]);
    }

    #[test]
    fn dd_is_zero_on_random_forms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in 0..=1usize {
            let u = random_polyform(&mut rng, unit_triangle(), k, 3);
            let ddu = u.d().unwrap().d().unwrap();
            assert!(ddu.is_zero());
        }
    }

    #[test]
    fn derivative_of_barycentric_product() {
        // u = λ0²λ1, du = 2λ0λ1 dλ0 + λ0² dλ1, checked by evaluation against
        // a symbolic expansion at rational points
        let c = unit_triangle();
        let mut u = PolyForm::zero(c.clone(), 0, 3);
        u.add_term(0, vec![2, 1, 0], vec![], rat(1));
        let du = u.d().unwrap();
        // at (x,y): λ0 = 1−x−y, λ1 = x; dλ0 = (−1,−1), dλ1 = (1,0)
        let pts = [(ratio(1, 3), ratio(1, 5)), (ratio(1, 7), ratio(2, 7))];
        for (x, y) in pts {
            let l0 = rat(1) - &x - &y;
            let l1 = x.clone();
            let c_dx = rat(2) * &l0 * &l1 * rat(-1) + &l0 * &l0;
            let c_dy = rat(2) * &l0 * &l1 * rat(-1);
            let vals: BTreeMap<AltIdx, Rat> =
                du.eval(&[x, y]).unwrap().into_iter().map(|(c, i)| (i, c)).collect();
            assert_eq!(vals.get(&vec![0u8]).cloned().unwrap_or_else(Rat::zero), c_dx);
            assert_eq!(vals.get(&vec![1u8]).cloned().unwrap_or_else(Rat::zero), c_dy);
        }
    }

    #[test]
    fn koszul_of_x_dy_at_origin() {
        // κ_0(x dy) evaluated: (x dy)(x−W) = x·y with W = origin
        let u = x_dy();
        let k = u.koszul(&[rat(0), rat(0)]);
        assert_eq!(k.k, 0);
        let v = k.eval(&[ratio(1, 2), ratio(1, 3)]).unwrap();
        assert_eq!(v, vec![(ratio(1, 6), vec![])]);
    }

    #[test]
    fn poincare_homotopy_identities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let w = vec![ratio(1, 4), ratio(1, 4)];
        for k in 1..=2usize {
            for deg in 0..=3u32 {
                let u = random_polyform(&mut rng, unit_triangle(), k, deg);
                let pdu = u.d().unwrap().poincare(&w).unwrap();
                let dpu = u.poincare(&w).unwrap().d().unwrap();
                let sum = pdu.add(&dpu).unwrap();
                let diff = sum.sub(&u.homogenized(sum.deg)).unwrap();
                assert!(diff.is_zero(), "p d + d p = id failed at k={k} deg={deg}");
            }
        }
        // k = 0: p(du) = u − u(W)
        let u = random_polyform(&mut rng, unit_triangle(), 0, 3);
        let pdu = u.d().unwrap().poincare(&w).unwrap();
        let uw = u.eval(&w).unwrap().pop().map(|(c, _)| c).unwrap_or_else(Rat::zero);
        let mut cst = PolyForm::zero(unit_triangle(), 0, 0);
        cst.add_term(0, vec![0, 0, 0], vec![], uw);
        let rhs = u.sub(&cst.homogenized(u.deg)).unwrap();
        let diff = pdu.sub(&rhs.homogenized(pdu.deg)).unwrap();
        assert!(diff.is_zero());
    }

    #[test]
    fn poincare_squared_is_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let w = vec![ratio(1, 3), ratio(1, 3)];
        let u = random_polyform(&mut rng, unit_triangle(), 2, 2);
        let pp = u.poincare(&w).unwrap().poincare(&w).unwrap();
        assert!(pp.is_zero());
    }

    #[test]
    fn poincare_x_dy_is_half_xy() {
        // p_0(x dy) = κ(x dy)/(k+r) with k=1, r=1 → xy/2
        let u = x_dy();
        let p = u.poincare(&[rat(0), rat(0)]).unwrap();
        let v = p.eval(&[ratio(1, 2), ratio(1, 2)]).unwrap();
        assert_eq!(v, vec![(ratio(1, 8), vec![])]);
        // and p(du) + d(p u) = x dy exactly
        let both = u.d().unwrap().poincare(&[rat(0), rat(0)]).unwrap().add(&p.d().unwrap()).unwrap();
        let diff = both.sub(&u.homogenized(both.deg)).unwrap();
        assert!(diff.is_zero());
    }

    #[test]
    fn poincare_dx_at_origin_is_x() {
        let c = unit_triangle();
        let mut dx = PolyForm::zero(c, 1, 0);
        dx.add_term(0, vec![0, 0, 0], vec![0], rat(1));
        let p = dx.poincare(&[rat(0), rat(0)]).unwrap();
        let v = p.eval(&[ratio(1, 3), ratio(1, 7)]).unwrap();
        assert_eq!(v, vec![(ratio(1, 3), vec![])]);
    }

    #[test]
    fn homogeneous_components_sum_to_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let w = vec![ratio(1, 5), ratio(2, 5)];
        let u = random_polyform(&mut rng, unit_triangle(), 1, 3);
        let mut sum = PolyForm::zero(unit_triangle(), 1, 3);
        for r in 0..=3u32 {
            let h = u.homogeneous_component(&w, r).unwrap();
            sum = sum.add(&h).unwrap();
        }
        assert!(sum.sub(&u).unwrap().is_zero());
    }

    #[test]
    fn poincare_equals_scaled_koszul_on_homogeneous_parts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let w = vec![ratio(1, 6), ratio(1, 2)];
        let k = 1usize;
        let u = random_polyform(&mut rng, unit_triangle(), k, 2);
        let p = u.poincare(&w).unwrap();
        let mut expect = PolyForm::zero(unit_triangle(), k - 1, 3);
        for r in 0..=2u32 {
            let h = u.homogeneous_component(&w, r).unwrap();
            let kh = h.koszul(&w);
            let scale = Rat::new(1.into(), (k as u32 + r).into());
            expect = expect.add(&kh.scaled(&scale)).unwrap();
        }
        assert!(p.sub(&expect).unwrap().is_zero());
    }

    #[test]
    fn trace_vs_pullback_on_edge() {
        // On the x-axis edge of the unit triangle, the trace of dy survives
        // while the pullback vanishes.
        let tri = unit_triangle();
        let mut dy = PolyForm::zero(tri.clone(), 1, 0);
        dy.add_term(0, vec![0, 0, 0], vec![1], rat(1));
        let corners = vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)]];
        let face = tri.face_carrier(&corners).unwrap();
        let tr = dy.trace_onto(&face).unwrap();
        assert!(!tr.is_zero());
        let chart = Chart::new(&corners).unwrap();
        let pb = dy.pullback_onto(&face, &chart).unwrap();
        assert!(pb.is_zero());
    }

    #[test]
    fn pullback_commutes_with_d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let tri = unit_triangle();
        let u = random_polyform(&mut rng, tri.clone(), 0, 3);
        let corners = vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]];
        let face = tri.face_carrier(&corners).unwrap();
        let chart = Chart::new(&corners).unwrap();
        let du = u.d().unwrap();
        let lhs = du.pullback_onto(&face, &chart).unwrap();
        let rhs = u.pullback_onto(&face, &chart).unwrap().d().unwrap();
        assert!(lhs.sub(&rhs.homogenized(lhs.deg.max(rhs.deg))).unwrap().is_zero());
    }

    #[test]
    fn integrate_dx_over_edge() {
        let tri = unit_triangle();
        let mut dx = PolyForm::zero(tri, 1, 0);
        dx.add_term(0, vec![0, 0, 0], vec![0], rat(1));
        let edge = vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)]];
        assert_eq!(dx.integrate_over(&edge).unwrap(), rat(1));
        let back = vec![vec![rat(1), rat(0)], vec![rat(0), rat(0)]];
        assert_eq!(dx.integrate_over(&back).unwrap(), rat(-1));
    }

    #[test]
    fn stokes_on_triangle() {
        // ∫_T du = Σ orient(T,T') ∫_{T'} u for u = x² dy
        let tri = unit_triangle();
        let mut u = PolyForm::zero(tri.clone(), 1, 2);
        u.add_term(0, vec![0, 2, 0], vec![1], rat(1));
        let du = u.d().unwrap();
        let corners = vec![
            vec![rat(0), rat(0)],
            vec![rat(1), rat(0)],
            vec![rat(0), rat(1)],
        ];
        let lhs = du.integrate_over(&corners).unwrap();
        // faces with signs (−1)^i omitting vertex i
        let mut rhs = Rat::zero();
        let signs = [rat(1), rat(-1), rat(1)];
        for i in 0..3 {
            let face: Vec<Vec<Rat>> = corners
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.clone())
                .collect();
            rhs += signs[i].clone() * u.integrate_over(&face).unwrap();
        }
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn integral_of_dl0_wedge_dl1() {
        // dλ0 ∧ dλ1 over the reference triangle with ascending orientation
        let tri = unit_triangle();
        let mut u = PolyForm::zero(tri.clone(), 0, 1);
        u.add_term(0, vec![1, 0, 0], vec![], rat(1));
        let dl0 = u.d().unwrap();
        let mut v = PolyForm::zero(tri.clone(), 0, 1);
        v.add_term(0, vec![0, 1, 0], vec![], rat(1));
        let dl1 = v.d().unwrap();
        // wedge the two constant 1-forms by hand
        let mut w = PolyForm::zero(tri, 2, 0);
        for (c0, i0) in dl0.eval(&[ratio(1, 3), ratio(1, 3)]).unwrap() {
            for (c1, i1) in dl1.eval(&[ratio(1, 3), ratio(1, 3)]).unwrap() {
                if let Some((s, m)) = alt::wedge(&i0, &i1) {
                    w.add_term(0, vec![0, 0, 0], m, &c0 * &c1 * rat(s as i64));
                }
            }
        }
        let corners = vec![
            vec![rat(0), rat(0)],
            vec![rat(1), rat(0)],
            vec![rat(0), rat(1)],
        ];
        // dλ0∧dλ1 = (−dx−dy)∧dx = dx∧dy; ∫ over T = 1/2... times 2 = 1?
        // (dλ0∧dλ1)(e1,e2) = det[[-1,-1],[1,0]]·... evaluate directly:
        let got = w.integrate_over(&corners).unwrap();
        assert_eq!(got, ratio(1, 2));
    }

    #[test]
    fn admissibility_checks() {
        let tri = unit_triangle();
        let corners = vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)]];
        let face = tri.face_carrier(&corners).unwrap();
        let chart = Chart::new(&corners).unwrap();
        // (v0, dv0) is admissible
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let u = random_polyform(&mut rng, tri.clone(), 0, 3);
        let (t0, t1) = double_trace(&u, &face).unwrap();
        assert!(is_admissible(&t0, &t1, &chart).unwrap());
        // v0 = x (λ1 on the edge), v1 = 2dx: d pull v0 = dx ≠ 2dx
        let mut v0 = PolyForm::zero(face.clone(), 0, 1);
        for (ci, cl) in face.cells.iter().enumerate() {
            for (pos, &v) in cl.iter().enumerate() {
                let x = face.verts[v][0].clone();
                let mut m = vec![0u32; face.nvars()];
                m[pos] = 1;
                v0.add_term(ci, m, vec![], x);
            }
        }
        let mut v1 = PolyForm::zero(face.clone(), 1, 0);
        for ci in 0..face.cells.len() {
            v1.add_term(ci, vec![0; face.nvars()], vec![0], rat(2));
        }
        assert!(!is_admissible(&v0, &v1, &chart).unwrap());
        // v0 = 0, v1 with vanishing pullback: admissible
        let mut v1t = PolyForm::zero(face.clone(), 1, 0);
        for ci in 0..face.cells.len() {
            v1t.add_term(ci, vec![0; face.nvars()], vec![1], rat(5));
        }
        let z = PolyForm::zero(face, 0, 1);
        assert!(is_admissible(&z, &v1t, &chart).unwrap());
    }

    #[test]
    fn multivalued_trace_detected() {
        // two triangles sharing an edge, different polynomials
        let carrier = Arc::new(Carrier {
            frame: 2,
            dim: 2,
            labels: vec![0, 1, 2, 3],
            verts: vec![
                vec![rat(0), rat(0)],
                vec![rat(1), rat(0)],
                vec![rat(0), rat(1)],
                vec![rat(1), rat(1)],
            ],
            cells: vec![vec![0, 1, 2], vec![1, 2, 3]],
        });
        let mut u = PolyForm::zero(carrier.clone(), 0, 1);
        u.add_term(0, vec![0, 1, 0], vec![], rat(1)); // λ_1 on cell 0
        u.add_term(1, vec![1, 0, 0], vec![], rat(2)); // 2λ_1 on cell 1
        let shared = vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]];
        let face = carrier.face_carrier(&shared).unwrap();
        assert!(matches!(u.trace_onto(&face), Err(Error::MultiValued { .. })));
    }

    #[test]
    fn refine_onto_preserves_values() {
        use crate::splits::{refine, InpointAssignment};
        let tri = crate::simplicial::fixtures::triangle();
        let rc = refine(&tri, 1, InpointAssignment::isobarycenters(&tri)).unwrap();
        let coarse = unit_triangle();
        let fine = Carrier::from_refined(&rc, (2, 0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let u = random_polyform(&mut rng, coarse, 1, 2);
        let v = u.refine_onto(&fine).unwrap();
        let pt = vec![ratio(1, 8), ratio(1, 8)];
        let a: BTreeMap<_, _> = u.eval(&pt).unwrap().into_iter().map(|(c, i)| (i, c)).collect();
        let b: BTreeMap<_, _> = v.eval(&pt).unwrap().into_iter().map(|(c, i)| (i, c)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_differential_squares_to_zero() {
        let tri = unit_triangle();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let u = random_polyform(&mut rng, tri, 0, 3);
        let p = PairForm::pair(u.clone(), u.d().unwrap());
        let dp = p.admissible_differential().unwrap();
        let ddp = dp.admissible_differential().unwrap();
        assert!(ddp.u0.is_zero() && ddp.u1.unwrap().is_zero());
    }
}
