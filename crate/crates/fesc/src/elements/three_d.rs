//! The low-order composite complex on Worsey-Piper split tetrahedra, built
//! from closed piecewise-affine forms and their Koszul augmentation, with
//! optional branching into Whitney forms at a chosen index.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::fes::{FESystem, PairSpace, RestrictionKind};
use crate::linalg::{self, Rat, RatMatrix};
use crate::polyform::space::{
    augment, constrained_space, continuity_rows, global_poly_space, map_matrix, polydeg_rows,
    Continuity, FormSpace,
};
use crate::polyform::{Carrier, Chart, PolyForm, Superspace};
use crate::simplicial::{CellId, SimplicialComplex};
use crate::splits::{refine, worsey_piper_inpoints, InpointAssignment, RefinedComplex};
use crate::{Error, Result};

use super::{vertex_pair_space, vertex_trace_space, whitney_space, wt_span};

/// Carriers of the refinements `R_0`, `R_1`, `R_2` restricted to one cell.
pub struct SplitCarriers {
    pub rc: Vec<RefinedComplex>,
}

impl SplitCarriers {
    pub fn new(mesh: &SimplicialComplex, ips: &InpointAssignment) -> Result<Self> {
        let rc = (0..=2)
            .map(|m| refine(mesh, m, ips.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SplitCarriers { rc })
    }

    /// Carrier of `R_m` within a cell; indices above 2 fall back to the
    /// coarsest (they only ever hold zero-dimensional alternating parts).
    pub fn carrier(&self, m: usize, cell: CellId) -> Arc<Carrier> {
        Carrier::from_refined(&self.rc[m.min(2)], cell)
    }
}

/// The closed-forms space `K^k` on a cell: continuous piecewise affine
/// k-forms on `R_{k−1}` with vanishing exterior derivative (constants for
/// k = 0). Built on the given carrier.
pub fn k_space(carrier: Arc<Carrier>, k: usize) -> Result<FormSpace> {
    if k == 0 {
        return global_poly_space(&carrier, 0, 0);
    }
    if k > carrier.frame {
        let sup = Superspace::new(carrier, k, 1);
        let dim = sup.dim();
        return Ok(FormSpace { sup, basis: RatMatrix::identity(dim) });
    }
    let f = constrained_space(carrier.clone(), 1, k, Continuity::C0)?;
    if k == carrier.frame {
        return Ok(f); // top-degree forms are automatically closed
    }
    let rows = crate::polyform::space::closedness_rows(&f.sup)?;
    Ok(f.constrain(&rows))
}

/// `A^k = K^k ⊕ κ(K^{k+1})` on a cell, refined to the carrier of `K^k`.
pub fn a_space(
    carriers: &SplitCarriers,
    cell: CellId,
    k: usize,
    w: &[Rat],
) -> Result<(FormSpace, usize, usize)> {
    let ck = carriers.carrier(k.max(1) - 1, cell);
    let ck1 = carriers.carrier(k.min(2), cell);
    let kk = k_space(ck, k)?;
    let kk1 = k_space(ck1, k + 1)?;
    let (a, rep) = augment(&kk, &kk1, w)?;
    if !rep.direct {
        return Err(Error::Form(format!(
            "Koszul augmentation is not a direct sum on {cell:?} at k={k}"
        )));
    }
    Ok((a, rep.dim_v, rep.dim_pv))
}

/// Rows over `sup` forcing membership of a mapped quantity in a subspace.
fn rows_into_subspace<F>(
    sup: &Superspace,
    target: &FormSpace,
    f: F,
) -> Result<RatMatrix>
where
    F: Fn(PolyForm) -> Result<PolyForm>,
{
    let m = map_matrix(sup, &target.sup, f)?;
    Ok(crate::polyform::space::membership_rows(target, &m))
}

/// Rows over `sup` forcing a mapped quantity to be a globally polynomial
/// form of degree ≤ `maxdeg` on the target carrier.
fn rows_into_global_poly<F>(
    sup: &Superspace,
    target_sup: &Superspace,
    maxdeg: u32,
    f: F,
) -> Result<RatMatrix>
where
    F: Fn(PolyForm) -> Result<PolyForm>,
{
    let m = map_matrix(sup, target_sup, f)?;
    let g = global_poly_space(&target_sup.carrier, maxdeg, target_sup.k)?;
    // express the global basis in target_sup (handles degree lift)
    let cols: Result<Vec<Vec<Rat>>> = (0..g.dim()).map(|i| target_sup.vec_of(&g.basis_form(i))).collect();
    let basis = RatMatrix::from_columns(cols?);
    let ann = linalg::annihilator(&basis);
    Ok(ann.matmul(&m))
}

/// The intrinsic `M^k(T) = K^k + κ_T K^{k+1}` on a face, in the face chart.
fn m_space_intrinsic(
    carriers: &SplitCarriers,
    face: CellId,
    k: usize,
    chart: &Chart,
    w_intr: &[Rat],
) -> Result<FormSpace> {
    let ck = carriers.carrier(k.max(1) - 1, face).to_intrinsic(chart)?;
    let ck1 = carriers.carrier(k.min(2), face).to_intrinsic(chart)?;
    let kk = k_space(ck, k)?;
    let kk1 = k_space(ck1, k + 1)?;
    let (m, _) = augment(&kk, &kk1, w_intr)?;
    Ok(m)
}

/// The intrinsic space `N^k(T)` used at the branching index: piecewise
/// quadratic k-forms with constant exterior derivative whose Koszul defect
/// `u − κ_T du` is piecewise affine.
fn n_space_intrinsic(
    carriers: &SplitCarriers,
    face: CellId,
    k: usize,
    chart: &Chart,
    w_intr: &[Rat],
) -> Result<FormSpace> {
    let ck = carriers.carrier(k.max(1) - 1, face).to_intrinsic(chart)?;
    let sup = Superspace::new(ck.clone(), k, 2);
    let mut rows = continuity_rows(&sup, Continuity::C0)?;
    // du constant
    let dsup = Superspace::new(ck.clone(), k + 1, 1);
    if dsup.dim() > 0 {
        rows = rows.vstack(&rows_into_global_poly(&sup, &dsup, 0, |u| u.d())?);
    }
    // u − κ du piecewise affine (per cell degree ≤ 1)
    let w = w_intr.to_vec();
    let defect = map_matrix(&sup, &sup, move |u| {
        let du = u.d()?;
        let kdu = du.koszul(&w);
        u.homogenized(2).sub(&kdu.homogenized(2))
    })?;
    let ann = polydeg_rows(&sup, 1);
    rows = rows.vstack(&ann.matmul(&defect));
    let basis = linalg::nullspace(&rows);
    Ok(FormSpace { sup, basis })
}

/// Debug hook used by development probes.
pub fn debug_face_space(
    mesh: &SimplicialComplex,
    carriers: &SplitCarriers,
    ips: &InpointAssignment,
    face: CellId,
    k: usize,
) -> Result<PairSpace> {
    face_pair_space(mesh, carriers, ips, face, k)
}

/// Face space of the double-trace system: admissible pairs with membership
/// of the pullback in `M^k` and affinity of the span contractions.
#[allow(clippy::too_many_arguments)]
fn face_pair_space(
    mesh: &SimplicialComplex,
    carriers: &SplitCarriers,
    ips: &InpointAssignment,
    face: CellId,
    k: usize,
) -> Result<PairSpace> {
    let corners = mesh.coords(mesh.simplex(face));
    let chart = Chart::new(&corners)?;
    let cu = carriers.carrier(k.max(1) - 1, face);
    let cv = carriers.carrier(k.min(2), face);
    let su = Superspace::new(cu.clone(), k, 2);
    let sv = Superspace::new(cv.clone(), k + 1, 1);
    let w_f = ips
        .get(face)
        .ok_or_else(|| Error::Split(format!("missing inpoint on {:?}", mesh.simplex(face))))?
        .clone();
    let w_intr = chart
        .to_intrinsic(&w_f)
        .ok_or_else(|| Error::Form("face inpoint outside its chart".into()))?;

    let mut rows = RatMatrix::zeros(0, su.dim() + sv.dim());
    // continuity of both components
    let ru = continuity_rows(&su, Continuity::C0)?;
    rows = rows.vstack(&ru.hstack(&RatMatrix::zeros(ru.rows, sv.dim())));
    let rv = continuity_rows(&sv, Continuity::C0)?;
    rows = rows.vstack(&RatMatrix::zeros(rv.rows, su.dim()).hstack(&rv));
    // admissibility
    rows = rows.vstack(&super::admissibility_rows(&su, &sv, &chart)?);
    // pullback of u lies in M^k
    let m = m_space_intrinsic(carriers, face, k, &chart, &w_intr)?;
    if m.sup.dim() > 0 {
        let ch = chart.clone();
        let mrows = rows_into_subspace(&su, &m, move |u| {
            u.pullback_onto(&u.carrier.clone(), &ch)
        })?;
        rows = rows.vstack(&mrows.hstack(&RatMatrix::zeros(mrows.rows, sv.dim())));
    }
    // span-contraction affinity
    let span = wt_span(mesh, ips, face)?;
    for y in &span.basis {
        // pull(v ⌞ Y) affine: a k-form quantity of degree 1
        let tgt_v = Superspace::new(cv.to_intrinsic(&chart)?, k, 1);
        if tgt_v.dim() > 0 {
            let ch = chart.clone();
            let yv = y.clone();
            let mv = map_matrix(&sv, &tgt_v, move |v| {
                v.contract_constant(&yv).pullback_onto(&v.carrier.clone(), &ch)
            })?;
            let g = global_basis_in(&tgt_v, 1)?;
            let ann = linalg::annihilator(&g);
            let arows = ann.matmul(&mv);
            rows = rows.vstack(&RatMatrix::zeros(arows.rows, su.dim()).hstack(&arows));
        }
        // pull((u − κ_F v) ⌞ Y) affine: a (k−1)-form quantity of degree 2
        if k >= 1 {
            let tgt = Superspace::new(cu.to_intrinsic(&chart)?, k - 1, 2);
            if tgt.dim() > 0 {
                let ch = chart.clone();
                let yv = y.clone();
                let mu = map_matrix(&su, &tgt, {
                    let ch = ch.clone();
                    let yv = yv.clone();
                    move |u| u.contract_constant(&yv).pullback_onto(&u.carrier.clone(), &ch)
                })?;
                let wf = w_f.clone();
                let mk = map_matrix(&sv, &tgt, move |v| {
                    v.koszul(&wf)
                        .contract_constant(&yv)
                        .pullback_onto(&v.carrier.clone(), &ch)
                })?;
                let g = global_basis_in(&tgt, 1)?;
                let ann = linalg::annihilator(&g);
                let au = ann.matmul(&mu);
                let ak = ann.matmul(&mk).scaled_neg_local();
                rows = rows.vstack(&au.hstack(&ak));
            }
        }
    }
    let basis = linalg::nullspace(&rows);
    Ok(PairSpace { kind: RestrictionKind::DoubleTrace, u_sup: su, v_sup: Some(sv), basis })
}

/// Face space at the branching index: a single-form space with membership of
/// the pullback in `N^k` and affinity of span contractions.
fn face_branch_space(
    mesh: &SimplicialComplex,
    carriers: &SplitCarriers,
    ips: &InpointAssignment,
    face: CellId,
    k: usize,
) -> Result<PairSpace> {
    let corners = mesh.coords(mesh.simplex(face));
    let chart = Chart::new(&corners)?;
    let cu = carriers.carrier(k.max(1) - 1, face);
    let su = Superspace::new(cu.clone(), k, 2);
    let w_f = ips
        .get(face)
        .ok_or_else(|| Error::Split(format!("missing inpoint on {:?}", mesh.simplex(face))))?
        .clone();
    let w_intr = chart
        .to_intrinsic(&w_f)
        .ok_or_else(|| Error::Form("face inpoint outside its chart".into()))?;
    let mut rows = continuity_rows(&su, Continuity::C0)?;
    let n = n_space_intrinsic(carriers, face, k, &chart, &w_intr)?;
    if n.sup.dim() > 0 {
        let ch = chart.clone();
        rows = rows.vstack(&rows_into_subspace(&su, &n, move |u| {
            u.pullback_onto(&u.carrier.clone(), &ch)
        })?);
    }
    let span = wt_span(mesh, ips, face)?;
    for y in &span.basis {
        if k >= 1 {
            let tgt = Superspace::new(cu.to_intrinsic(&chart)?, k - 1, 2);
            if tgt.dim() > 0 {
                let ch = chart.clone();
                let yv = y.clone();
                let mu = map_matrix(&su, &tgt, move |u| {
                    u.contract_constant(&yv).pullback_onto(&u.carrier.clone(), &ch)
                })?;
                let g = global_basis_in(&tgt, 1)?;
                let ann = linalg::annihilator(&g);
                rows = rows.vstack(&ann.matmul(&mu));
            }
        }
    }
    let basis = linalg::nullspace(&rows);
    Ok(PairSpace { kind: RestrictionKind::Trace, u_sup: su, v_sup: None, basis })
}

/// Basis matrix of globally polynomial forms of degree ≤ maxdeg inside a
/// superspace of higher homogeneous degree.
fn global_basis_in(sup: &Superspace, maxdeg: u32) -> Result<RatMatrix> {
    let g = global_poly_space(&sup.carrier, maxdeg, sup.k)?;
    let cols: Result<Vec<Vec<Rat>>> = (0..g.dim()).map(|i| sup.vec_of(&g.basis_form(i))).collect();
    Ok(RatMatrix::from_columns(cols?))
}

impl RatMatrix {
    fn scaled_neg_local(&self) -> RatMatrix {
        let mut out = self.clone();
        for i in 0..out.rows {
            for j in 0..out.cols {
                let v = -out.get(i, j).clone();
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Empty pullback space for degrees above the frame at vertices.
fn zero_vertex_pullback(coords: &[Rat], k: usize) -> PairSpace {
    let carrier = Carrier::simplex(vec![coords.to_vec()]);
    let intr = Arc::new(Carrier {
        frame: 0,
        dim: 0,
        labels: carrier.labels.clone(),
        verts: vec![vec![]],
        cells: carrier.cells.clone(),
    });
    let su = Superspace::new(intr, k, 0);
    PairSpace {
        kind: RestrictionKind::Pullback,
        u_sup: su,
        v_sup: None,
        basis: RatMatrix::identity(0),
    }
}

/// Whitney space on a cell as an intrinsic pullback-kind pair space.
fn whitney_pair_space(mesh: &SimplicialComplex, cell: CellId, k: usize) -> Result<PairSpace> {
    let corners = mesh.coords(mesh.simplex(cell));
    let w = whitney_space(&corners, k)?;
    Ok(PairSpace::single(&w, RestrictionKind::Pullback))
}

/// Build the 3D system; `branch = None` gives the plain complex, otherwise
/// degrees above the index use Whitney forms.
pub fn build_ps3d(mesh: &SimplicialComplex, branch: Option<usize>) -> Result<FESystem> {
    if mesh.dim() != 3 {
        return Err(Error::ElementSpec("the 3D family needs a tetrahedral mesh".into()));
    }
    if let Some(l) = branch {
        if !(1..=2).contains(&l) {
            return Err(Error::ElementSpec(format!(
                "branch index must be 1 or 2, got {l}"
            )));
        }
    }
    let ips = worsey_piper_inpoints(mesh)?;
    let carriers = SplitCarriers::new(mesh, &ips)?;
    let ell = branch.unwrap_or(4);
    let kinds: Vec<RestrictionKind> = (0..=3)
        .map(|k| {
            if k < ell {
                RestrictionKind::DoubleTrace
            } else if k == ell {
                RestrictionKind::Trace
            } else {
                RestrictionKind::Pullback
            }
        })
        .collect();

    let mut spaces: BTreeMap<(CellId, usize), PairSpace> = BTreeMap::new();

    // vertices
    for vi in 0..mesh.count(0) {
        let v = (0, vi);
        let coords = mesh.vertices[mesh.simplex(v)[0]].clone();
        for k in 0..=3usize {
            let sp = if k < ell {
                vertex_pair_space(&coords, k)
            } else if k == ell {
                vertex_trace_space(&coords, k)
            } else {
                zero_vertex_pullback(&coords, k)
            };
            spaces.insert((v, k), sp);
        }
    }

    // edges and faces
    for d in 1..=2usize {
        for i in 0..mesh.count(d) {
            let f = (d, i);
            for k in 0..=3usize {
                let sp = if k < ell {
                    face_pair_space(mesh, &carriers, &ips, f, k)?
                } else if k == ell {
                    face_branch_space(mesh, &carriers, &ips, f, k)?
                } else {
                    whitney_pair_space(mesh, f, k)?
                };
                spaces.insert((f, k), sp);
            }
        }
    }

    // cells
    for ci in 0..mesh.count(3) {
        let cell = (3, ci);
        let w = ips.get(cell).unwrap().clone();
        for k in 0..=3usize {
            let sp = if k < ell {
                let (a, _, _) = a_space(&carriers, cell, k, &w)?;
                super::pairs_with_d(&a, RestrictionKind::DoubleTrace)?
            } else if k == ell {
                // K^ℓ + κ(constant (ℓ+1)-forms)
                let ck = carriers.carrier(k.max(1) - 1, cell);
                let kk = k_space(ck.clone(), k)?;
                let consts = global_poly_space(&ck, 0, k + 1)?;
                let (a, rep) = augment(&kk, &consts, &w)?;
                if !rep.direct {
                    return Err(Error::Form("branch augmentation is not direct".into()));
                }
                PairSpace::single(&a, RestrictionKind::Trace)
            } else {
                whitney_pair_space(mesh, cell, k)?
            };
            spaces.insert((cell, k), sp);
        }
    }

    FESystem::assemble(mesh.clone(), kinds, spaces)
}

/// Dimensions of the `K` spaces on one cell (for reporting).
pub fn k_dims(mesh: &SimplicialComplex, cell: CellId) -> Result<Vec<usize>> {
    let ips = worsey_piper_inpoints(mesh)?;
    let carriers = SplitCarriers::new(mesh, &ips)?;
    (0..=3usize)
        .map(|k| Ok(k_space(carriers.carrier(k.max(1) - 1, cell), k)?.dim()))
        .collect()
}

/// The two minimal continuous/discontinuous-divergence pairs of the last
/// proposition, in any dimension n: `A^{n−1} = K^{n−1} + κ Λ^n` and
/// `A^n = Λ^n`, with vertex values and (n−1)-face integrals as DoFs.
/// Returns (dim A^{n−1}, dim A^n, dofs unisolvent).
pub fn branch_last_pair_dims(mesh: &SimplicialComplex) -> Result<(usize, usize, bool)> {
    let n = mesh.dim();
    let cell = (n, 0);
    let ips: InpointAssignment = if n == 3 {
        worsey_piper_inpoints(mesh)?
    } else {
        InpointAssignment::isobarycenters(mesh)
    };
    let rc = refine(mesh, n.saturating_sub(2), ips)?;
    let carrier = Carrier::from_refined(&rc, cell);
    let kk = k_space(carrier.clone(), n - 1)?;
    let consts = global_poly_space(&carrier, 0, n)?;
    let w = rc.inpoints.get(cell).unwrap().clone();
    let (a, rep) = augment(&kk, &consts, &w)?;
    if !rep.direct {
        return Err(Error::Form("last-pair augmentation is not direct".into()));
    }
    let an = 1usize; // constants
    // DoFs: vertex values + integrals over (n−1)-faces
    let dofs = super::classical_dof_rows(mesh, &a, n - 1, false)?;
    let unisolvent = linalg::rank(&dofs) == a.dim();
    Ok((a.dim(), an, unisolvent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::fixtures;

    #[test]
    fn k_space_dims_on_regular_tet() {
        let mesh = fixtures::regular_tet();
        let dims = k_dims(&mesh, (3, 0)).unwrap();
        assert_eq!(dims, vec![1, 15, 15, 5]);
    }

    #[test]
    fn unconstrained_intermediate_dims() {
        // the two piecewise-affine continuous spaces behind the K counts
        let mesh = fixtures::regular_tet();
        let ips = worsey_piper_inpoints(&mesh).unwrap();
        let carriers = SplitCarriers::new(&mesh, &ips).unwrap();
        let c1 = carriers.carrier(1, (3, 0));
        let s2 = constrained_space(c1, 1, 2, Continuity::C0).unwrap();
        assert_eq!(s2.dim(), 27);
        let c0 = carriers.carrier(0, (3, 0));
        let s1 = constrained_space(c0, 1, 1, Continuity::C0).unwrap();
        assert_eq!(s1.dim(), 45);
    }

    #[test]
    fn a_space_dims_on_regular_tet() {
        let mesh = fixtures::regular_tet();
        let ips = worsey_piper_inpoints(&mesh).unwrap();
        let carriers = SplitCarriers::new(&mesh, &ips).unwrap();
        let w = ips.get((3, 0)).unwrap().clone();
        let expect = [16usize, 30, 20, 5];
        for k in 0..=3usize {
            let (a, _, _) = a_space(&carriers, (3, 0), k, &w).unwrap();
            assert_eq!(a.dim(), expect[k], "A^{k}");
        }
    }

    #[test]
    fn overdetermining_dofs_full_rank() {
        let mesh = fixtures::regular_tet();
        let ips = worsey_piper_inpoints(&mesh).unwrap();
        let carriers = SplitCarriers::new(&mesh, &ips).unwrap();
        let w = ips.get((3, 0)).unwrap().clone();
        let (a2, _, _) = a_space(&carriers, (3, 0), 2, &w).unwrap();
        let rows = super::super::classical_dof_rows(&mesh, &a2, 2, true).unwrap();
        assert_eq!(linalg::rank(&rows), 20);
    }

    #[test]
    fn branch_dims() {
        let mesh = fixtures::regular_tet();
        let ips = worsey_piper_inpoints(&mesh).unwrap();
        let carriers = SplitCarriers::new(&mesh, &ips).unwrap();
        let w = ips.get((3, 0)).unwrap().clone();
        // ℓ = 2: dim A² = 15 + 1 = 16
        let ck = carriers.carrier(1, (3, 0));
        let kk = k_space(ck.clone(), 2).unwrap();
        let consts = global_poly_space(&ck, 0, 3).unwrap();
        let (a, rep) = augment(&kk, &consts, &w).unwrap();
        assert!(rep.direct);
        assert_eq!(a.dim(), 16);
        // ℓ = 1: dim A¹ = 15 + 3 = 18
        let ck = carriers.carrier(0, (3, 0));
        let kk = k_space(ck.clone(), 1).unwrap();
        let consts = global_poly_space(&ck, 0, 2).unwrap();
        let (a, rep) = augment(&kk, &consts, &w).unwrap();
        assert!(rep.direct);
        assert_eq!(a.dim(), 18);
    }

    #[test]
    fn last_pair_dims_2d_and_3d() {
        let tri = fixtures::triangle();
        let (a1, a2, uni) = branch_last_pair_dims(&tri).unwrap();
        assert_eq!((a1, a2), (9, 1)); // (n+1)² with n = 2
        assert!(uni);
        let tet = fixtures::regular_tet();
        let (a2, a3, uni) = branch_last_pair_dims(&tet).unwrap();
        assert_eq!((a2, a3), (16, 1)); // (n+1)² with n = 3
        assert!(uni);
    }
}
