//! The Clough-Tocher family in two dimensions: the cubic complex with
//! continuous pressure, its reduced (minimal) variant, the discontinuous
//! pressure complex, its minimal variant, and the arbitrary-degree family.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::fes::{FESystem, PairSpace, RestrictionKind};
use crate::linalg::{Rat, RatMatrix};
use crate::polyform::space::{
    constrained_space, global_poly_space, map_matrix, polydeg_rows, Continuity, FormSpace,
};
use crate::polyform::{Carrier, Chart, PolyForm, Superspace};
use crate::simplicial::{CellId, SimplicialComplex};
use crate::splits::{refine, InpointAssignment, RefinedComplex};
use crate::Result;

use super::{admissible_pair_space, pairs_with_d, vertex_pair_space, vertex_trace_space};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtVariant {
    /// full spaces, continuous pressure (degree p ≥ 3)
    Full,
    /// reduced spaces, continuous pressure
    Minimal,
    /// full spaces, discontinuous pressure
    Dg,
    /// reduced spaces, discontinuous pressure
    DgMinimal,
}

/// Transverse direction of an edge: the 90° rotation of the edge vector (in
/// ascending vertex order). Any transverse direction gives the same reduced
/// spaces only if fixed consistently mesh-wide, which this convention is.
fn edge_transverse(mesh: &SimplicialComplex, edge: CellId) -> Vec<Rat> {
    let vs = mesh.simplex(edge);
    let a = &mesh.vertices[vs[0]];
    let b = &mesh.vertices[vs[1]];
    vec![-(&b[1] - &a[1]), &b[0] - &a[0]]
}

/// Rows over `sup` forcing the trace of `quantity(u) ⌞ ν` onto an edge to be
/// an affine function of the edge parameter. `through_d` applies the
/// constraint to du instead of u.
fn transverse_affine_rows(
    sup: &Superspace,
    edge_carrier: &Arc<Carrier>,
    nu: &[Rat],
    through_d: bool,
) -> Result<RatMatrix> {
    let out_deg = if through_d { sup.deg.saturating_sub(1) } else { sup.deg };
    let dst = Superspace::new(edge_carrier.clone(), sup.k.saturating_sub(if through_d { 0 } else { 1 }), out_deg);
    // quantity: (d)u ⌞ ν, traced onto the edge
    let dst = if through_d {
        Superspace::new(edge_carrier.clone(), sup.k, out_deg)
    } else {
        dst
    };
    let m = map_matrix(sup, &dst, |u| {
        let v = if through_d { u.d()? } else { u };
        let contracted = v.contract_constant(nu);
        contracted.trace_onto(edge_carrier)
    })?;
    let ann = polydeg_rows(&dst, 1);
    Ok(ann.matmul(&m))
}

/// Full, reduced, discontinuous and minimal Clough-Tocher systems on a
/// triangular mesh, at polynomial degree `p` (p = 3 except for the full
/// high-order family).
pub fn build_ct(mesh: &SimplicialComplex, p: u32, variant: CtVariant) -> Result<FESystem> {
    let rc = refine(mesh, 1, InpointAssignment::isobarycenters(mesh))?;
    let kinds = match variant {
        CtVariant::Full | CtVariant::Minimal => vec![
            RestrictionKind::DoubleTrace,
            RestrictionKind::DoubleTrace,
            RestrictionKind::Trace,
        ],
        CtVariant::Dg | CtVariant::DgMinimal => vec![
            RestrictionKind::DoubleTrace,
            RestrictionKind::Trace,
            RestrictionKind::Pullback,
        ],
    };
    let mut spaces: BTreeMap<(CellId, usize), PairSpace> = BTreeMap::new();

    // vertices
    for vi in 0..mesh.count(0) {
        let v = (0, vi);
        let coords = mesh.vertices[mesh.simplex(v)[0]].clone();
        spaces.insert((v, 0), vertex_pair_space(&coords, 0));
        match variant {
            CtVariant::Full | CtVariant::Minimal => {
                spaces.insert((v, 1), vertex_pair_space(&coords, 1));
                spaces.insert((v, 2), vertex_trace_space(&coords, 2));
            }
            CtVariant::Dg | CtVariant::DgMinimal => {
                spaces.insert((v, 1), vertex_trace_space(&coords, 1));
                spaces.insert((v, 2), zero_pullback_space(&coords));
            }
        }
    }

    // edges
    for ei in 0..mesh.count(1) {
        let e = (1, ei);
        let carrier = Carrier::from_refined(&rc, e);
        let chart = Chart::new(&mesh.coords(mesh.simplex(e)))?;
        let nu = edge_transverse(mesh, e);
        let reduced = matches!(variant, CtVariant::Minimal | CtVariant::DgMinimal);

        // A⁰(E): admissible pairs (P^p, P^{p−1} ⊗ Alt¹)
        let su = Superspace::new(carrier.clone(), 0, p);
        let sv = Superspace::new(carrier.clone(), 1, p - 1);
        let extra = if reduced {
            let rows_v = transverse_affine_rows(&sv, &carrier, &nu, false)?;
            RatMatrix::zeros(rows_v.rows, su.dim()).hstack(&rows_v)
        } else {
            RatMatrix::zeros(0, su.dim() + sv.dim())
        };
        spaces.insert((e, 0), admissible_pair_space(su, sv, &chart, extra)?);

        // A¹(E)
        match variant {
            CtVariant::Full | CtVariant::Minimal => {
                let su = Superspace::new(carrier.clone(), 1, p - 1);
                let sv = Superspace::new(carrier.clone(), 2, p - 2);
                let extra = if reduced {
                    let rows_u = transverse_affine_rows(&su, &carrier, &nu, false)?;
                    rows_u.hstack(&RatMatrix::zeros(rows_u.rows, sv.dim()))
                } else {
                    RatMatrix::zeros(0, su.dim() + sv.dim())
                };
                spaces.insert((e, 1), admissible_pair_space(su, sv, &chart, extra)?);
            }
            CtVariant::Dg | CtVariant::DgMinimal => {
                let su = Superspace::new(carrier.clone(), 1, p - 1);
                let basis = if reduced {
                    let rows = transverse_affine_rows(&su, &carrier, &nu, false)?;
                    crate::linalg::nullspace(&rows)
                } else {
                    RatMatrix::identity(su.dim())
                };
                spaces.insert(
                    (e, 1),
                    PairSpace { kind: RestrictionKind::Trace, u_sup: su, v_sup: None, basis },
                );
            }
        }

        // A²(E)
        match variant {
            CtVariant::Full | CtVariant::Minimal => {
                let su = Superspace::new(carrier.clone(), 2, p - 2);
                let dim = su.dim();
                spaces.insert(
                    (e, 2),
                    PairSpace {
                        kind: RestrictionKind::Trace,
                        u_sup: su,
                        v_sup: None,
                        basis: RatMatrix::identity(dim),
                    },
                );
            }
            CtVariant::Dg | CtVariant::DgMinimal => {
                // pullback of 2-forms onto an edge: the zero space
                let intr = carrier.to_intrinsic(&chart)?;
                let su = Superspace::new(intr, 2, p - 2);
                let dim = su.dim();
                spaces.insert(
                    (e, 2),
                    PairSpace {
                        kind: RestrictionKind::Pullback,
                        u_sup: su,
                        v_sup: None,
                        basis: RatMatrix::identity(dim),
                    },
                );
            }
        }
    }

    // triangles
    for ti in 0..mesh.count(2) {
        let t = (2, ti);
        let carrier = Carrier::from_refined(&rc, t);
        let w = rc
            .inpoints
            .get(t)
            .expect("triangle inpoint")
            .clone();
        let reduced = matches!(variant, CtVariant::Minimal | CtVariant::DgMinimal);

        // A⁰(T)
        let mut a0 = constrained_space(carrier.clone(), p, 0, Continuity::C1)?;
        if reduced {
            let mut rows = RatMatrix::zeros(0, a0.sup.dim());
            for e in mesh.subcells(t, 1) {
                let ec = Carrier::from_refined(&rc, e);
                let nu = edge_transverse(mesh, e);
                rows = rows.vstack(&transverse_affine_rows(&a0.sup, &ec, &nu, true)?);
            }
            a0 = a0.constrain(&rows);
        }
        spaces.insert((t, 0), pairs_with_d(&a0, RestrictionKind::DoubleTrace)?);

        // A¹(T)
        match variant {
            CtVariant::Full => {
                let a1 = constrained_space(carrier.clone(), p - 1, 1, Continuity::C0d)?;
                spaces.insert((t, 1), pairs_with_d(&a1, RestrictionKind::DoubleTrace)?);
            }
            CtVariant::Minimal => {
                let mut a1 = constrained_space(carrier.clone(), p - 1, 1, Continuity::C0d)?;
                let mut rows = RatMatrix::zeros(0, a1.sup.dim());
                for e in mesh.subcells(t, 1) {
                    let ec = Carrier::from_refined(&rc, e);
                    let nu = edge_transverse(mesh, e);
                    rows = rows.vstack(&transverse_affine_rows(&a1.sup, &ec, &nu, false)?);
                }
                a1 = a1.constrain(&rows);
                spaces.insert((t, 1), pairs_with_d(&a1, RestrictionKind::DoubleTrace)?);
            }
            CtVariant::Dg => {
                let a1 = constrained_space(carrier.clone(), p - 1, 1, Continuity::C0)?;
                spaces.insert((t, 1), PairSpace::single(&a1, RestrictionKind::Trace));
            }
            CtVariant::DgMinimal => {
                // d(reduced A⁰) + Poincaré of the constant volume form
                let a0_space = {
                    // rebuild (same as A⁰ above)
                    let sp = &spaces[&(t, 0)];
                    let mut forms = Vec::new();
                    for i in 0..sp.dim() {
                        forms.push(sp.basis_pair(i).u0);
                    }
                    forms
                };
                let sup1 = Superspace::new(carrier.clone(), 1, 2);
                let mut forms = Vec::new();
                for f in &a0_space {
                    forms.push(f.d()?);
                }
                let mut vol = PolyForm::zero(carrier.clone(), 2, 0);
                for ci in 0..carrier.cells.len() {
                    vol.add_term(ci, vec![0; carrier.nvars()], vec![0, 1], Rat::one());
                }
                forms.push(vol.poincare(&w)?);
                let a1 = FormSpace::from_forms(sup1, &forms)?;
                spaces.insert((t, 1), PairSpace::single(&a1, RestrictionKind::Trace));
            }
        }

        // A²(T)
        match variant {
            CtVariant::Full | CtVariant::Minimal => {
                let a2 = constrained_space(carrier.clone(), p - 2, 2, Continuity::C0)?;
                spaces.insert((t, 2), PairSpace::single(&a2, RestrictionKind::Trace));
            }
            CtVariant::Dg => {
                let chart = crate::fes::cell_chart(mesh, t)?;
                let intr = carrier.to_intrinsic(&chart)?;
                let a2 = constrained_space(intr, p - 2, 2, Continuity::None)?;
                spaces.insert((t, 2), PairSpace::single(&a2, RestrictionKind::Pullback));
            }
            CtVariant::DgMinimal => {
                let chart = crate::fes::cell_chart(mesh, t)?;
                let intr = carrier.to_intrinsic(&chart)?;
                let a2 = global_poly_space(&intr, 0, 2)?;
                spaces.insert((t, 2), PairSpace::single(&a2, RestrictionKind::Pullback));
            }
        }
    }

    FESystem::assemble(mesh.clone(), kinds, spaces)
}

/// Zero-dimensional pullback space at a point (restriction of k ≥ 1 forms).
fn zero_pullback_space(coords: &[Rat]) -> PairSpace {
    let carrier = Carrier::simplex(vec![coords.to_vec()]);
    // intrinsic frame of a point has dimension zero: Alt^k = 0 for k ≥ 1
    let intr = Arc::new(Carrier {
        frame: 0,
        dim: 0,
        labels: carrier.labels.clone(),
        verts: vec![vec![]],
        cells: carrier.cells.clone(),
    });
    let su = Superspace::new(intr, 2, 0);
    PairSpace {
        kind: RestrictionKind::Pullback,
        u_sup: su,
        v_sup: None,
        basis: RatMatrix::identity(0),
    }
}

/// Clough-Tocher refinement shared by builders and the extension operators.
pub fn ct_refinement(mesh: &SimplicialComplex) -> Result<RefinedComplex> {
    refine(mesh, 1, InpointAssignment::isobarycenters(mesh))
}

impl PolyForm {
    /// Contraction with a constant vector (frame coordinates).
    pub fn contract_constant(&self, v: &[Rat]) -> PolyForm {
        if self.k == 0 {
            return PolyForm::zero(self.carrier.clone(), 0, self.deg);
        }
        let mut out = PolyForm::zero(self.carrier.clone(), self.k - 1, self.deg);
        for (ci, table) in self.cells.iter().enumerate() {
            for ((m, i), c) in table {
                if c.is_zero() {
                    continue;
                }
                for (cc, rest) in crate::polyform::alt::contract_basis(i, v) {
                    out.add_term(ci, m.clone(), rest, c * &cc);
                }
            }
        }
        out.prune();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::fixtures;

    #[test]
    fn ct_full_dims_on_triangle() {
        let mesh = fixtures::triangle();
        let sys = build_ct(&mesh, 3, CtVariant::Full).unwrap();
        let t = (2, 0);
        assert_eq!(sys.dim(t, 0), 12);
        assert_eq!(sys.dim(t, 1), 15);
        assert_eq!(sys.dim(t, 2), 4);
        // edge dims 2p+1, 3p−1, p−1
        let e = (1, 0);
        assert_eq!(sys.dim(e, 0), 7);
        assert_eq!(sys.dim(e, 1), 8);
        assert_eq!(sys.dim(e, 2), 2);
    }

    #[test]
    fn ct_full_is_compatible() {
        let mesh = fixtures::triangle();
        let sys = build_ct(&mesh, 3, CtVariant::Full).unwrap();
        let rep = sys.core.check_compatibility();
        assert!(rep.compatible, "{rep:#?}");
    }

    #[test]
    fn ct_minimal_dims() {
        let mesh = fixtures::triangle();
        let sys = build_ct(&mesh, 3, CtVariant::Minimal).unwrap();
        let t = (2, 0);
        assert_eq!(sys.dim(t, 0), 9);
        assert_eq!(sys.dim(t, 1), 12);
        assert_eq!(sys.dim(t, 2), 4);
        assert!(sys.core.check_compatibility().compatible);
    }

    #[test]
    fn ct_dg_dims() {
        let mesh = fixtures::triangle();
        let sys = build_ct(&mesh, 3, CtVariant::Dg).unwrap();
        let t = (2, 0);
        assert_eq!(sys.dim(t, 0), 12);
        assert_eq!(sys.dim(t, 1), 20);
        assert_eq!(sys.dim(t, 2), 9);
        assert!(sys.core.check_compatibility().compatible);
    }

    #[test]
    fn ct_dg_minimal_dims() {
        let mesh = fixtures::triangle();
        let sys = build_ct(&mesh, 3, CtVariant::DgMinimal).unwrap();
        let t = (2, 0);
        assert_eq!(sys.dim(t, 0), 9);
        assert_eq!(sys.dim(t, 1), 9);
        assert_eq!(sys.dim(t, 2), 1);
        assert!(sys.core.check_compatibility().compatible);
    }
}
