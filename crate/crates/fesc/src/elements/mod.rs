//! The catalog of concrete composite finite element complexes, their bespoke
//! extension formulas, and the unisolvence property checks.

pub mod extensions;
pub mod three_d;
pub mod two_d;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::fes::{FESystem, PairSpace, RestrictionKind};
use crate::linalg::{self, Rat, RatMatrix};
use crate::polyform::space::{constrained_space, map_matrix, Continuity, FormSpace};
use crate::polyform::{alt, Carrier, Chart, PolyForm, Superspace};
use crate::simplicial::{CellId, SimplicialComplex};
use crate::{Error, Result};

/// Catalog element names as accepted by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ElementName {
    CtFull,
    CtMinimal,
    CtDg,
    CtDgMinimal,
    CtHighOrder,
    Ps3d,
    Ps3dBranch,
}

/// Parameters of a catalog element.
#[derive(Clone, Debug, Serialize)]
pub struct ElementSpec {
    pub name: ElementName,
    /// polynomial degree (high-order family only, p ≥ 3)
    pub p: Option<u32>,
    /// branching index (branched 3D family only)
    pub ell: Option<usize>,
}

impl ElementSpec {
    pub fn parse(name: &str, p: Option<u32>, ell: Option<usize>) -> Result<ElementSpec> {
        let name = match name {
            "ct-full" => ElementName::CtFull,
            "ct-minimal" => ElementName::CtMinimal,
            "ct-dg" => ElementName::CtDg,
            "ct-dg-minimal" => ElementName::CtDgMinimal,
            "ct-highorder" => ElementName::CtHighOrder,
            "ps3d" => ElementName::Ps3d,
            "ps3d-branch" => ElementName::Ps3dBranch,
            other => return Err(Error::ElementSpec(format!("unknown element {other:?}"))),
        };
        let spec = ElementSpec { name, p, ell };
        spec.validate_params()?;
        Ok(spec)
    }

    pub fn id(&self) -> String {
        let base = match self.name {
            ElementName::CtFull => "ct-full",
            ElementName::CtMinimal => "ct-minimal",
            ElementName::CtDg => "ct-dg",
            ElementName::CtDgMinimal => "ct-dg-minimal",
            ElementName::CtHighOrder => "ct-highorder",
            ElementName::Ps3d => "ps3d",
            ElementName::Ps3dBranch => "ps3d-branch",
        };
        let mut s = base.to_string();
        if let Some(p) = self.p {
            s.push_str(&format!("-p{p}"));
        }
        if let Some(l) = self.ell {
            s.push_str(&format!("-l{l}"));
        }
        s
    }

    fn validate_params(&self) -> Result<()> {
        match self.name {
            ElementName::CtHighOrder => {
                let p = self.p.ok_or_else(|| {
                    Error::ElementSpec("ct-highorder needs a polynomial degree p".into())
                })?;
                if p < 3 {
                    return Err(Error::ElementSpec(format!(
                        "ct-highorder needs p ≥ 3, got {p}"
                    )));
                }
            }
            ElementName::Ps3dBranch => {
                let l = self.ell.ok_or_else(|| {
                    Error::ElementSpec("ps3d-branch needs a branching index".into())
                })?;
                if l > 3 {
                    return Err(Error::ElementSpec(format!("branch index {l} exceeds 3")));
                }
            }
            _ => {
                if self.p.is_some() && self.name != ElementName::CtFull {
                    return Err(Error::ElementSpec(format!(
                        "{} takes no degree parameter",
                        self.id()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Mesh dimension this element expects.
    pub fn dimension(&self) -> usize {
        match self.name {
            ElementName::Ps3d | ElementName::Ps3dBranch => 3,
            _ => 2,
        }
    }

    /// Does the pressure space (top degree) have inter-element continuity?
    pub fn continuous_pressure(&self) -> bool {
        matches!(
            self.name,
            ElementName::CtFull | ElementName::CtMinimal | ElementName::CtHighOrder | ElementName::Ps3d
        )
    }
}

/// Build the finite element system of a catalog element on a mesh.
pub fn build(spec: &ElementSpec, mesh: &SimplicialComplex) -> Result<FESystem> {
    spec.validate_params()?;
    if mesh.dim() != spec.dimension() {
        return Err(Error::ElementSpec(format!(
            "{} expects a {}D mesh, got {}D",
            spec.id(),
            spec.dimension(),
            mesh.dim()
        )));
    }
    match spec.name {
        ElementName::CtFull => two_d::build_ct(mesh, 3, two_d::CtVariant::Full),
        ElementName::CtHighOrder => two_d::build_ct(mesh, spec.p.unwrap(), two_d::CtVariant::Full),
        ElementName::CtMinimal => two_d::build_ct(mesh, 3, two_d::CtVariant::Minimal),
        ElementName::CtDg => two_d::build_ct(mesh, 3, two_d::CtVariant::Dg),
        ElementName::CtDgMinimal => two_d::build_ct(mesh, 3, two_d::CtVariant::DgMinimal),
        ElementName::Ps3d => three_d::build_ps3d(mesh, None),
        ElementName::Ps3dBranch => three_d::build_ps3d(mesh, Some(spec.ell.unwrap())),
    }
}

// ---------------------------------------------------------------------------
// Shared space builders
// ---------------------------------------------------------------------------

/// Vertex pair space `Alt^k ⊕ Alt^{k+1}` at a point (double-trace kind).
pub fn vertex_pair_space(coords: &[Rat], k: usize) -> PairSpace {
    let carrier = Carrier::simplex(vec![coords.to_vec()]);
    let u_sup = Superspace::new(carrier.clone(), k, 0);
    let v_sup = Superspace::new(carrier, k + 1, 0);
    let dim = u_sup.dim() + v_sup.dim();
    PairSpace {
        kind: RestrictionKind::DoubleTrace,
        u_sup,
        v_sup: Some(v_sup),
        basis: RatMatrix::identity(dim),
    }
}

/// Vertex space `Alt^k` at a point (trace kind).
pub fn vertex_trace_space(coords: &[Rat], k: usize) -> PairSpace {
    let carrier = Carrier::simplex(vec![coords.to_vec()]);
    let u_sup = Superspace::new(carrier, k, 0);
    let dim = u_sup.dim();
    PairSpace { kind: RestrictionKind::Trace, u_sup, v_sup: None, basis: RatMatrix::identity(dim) }
}

/// Pair space with components in the two superspaces, cut out by the
/// admissibility condition `d pull v₀ = pull v₁` plus extra rows.
pub fn admissible_pair_space(
    su: Superspace,
    sv: Superspace,
    chart: &Chart,
    extra_rows: RatMatrix,
) -> Result<PairSpace> {
    let rows = admissibility_rows(&su, &sv, chart)?;
    let all = if extra_rows.rows > 0 { rows.vstack(&extra_rows) } else { rows };
    let basis = if all.rows == 0 {
        RatMatrix::identity(su.dim() + sv.dim())
    } else {
        linalg::nullspace(&all)
    };
    Ok(PairSpace { kind: RestrictionKind::DoubleTrace, u_sup: su, v_sup: Some(sv), basis })
}

/// Rows over `[su | sv]` expressing `d pull v₀ − pull v₁ = 0` on the face
/// whose chart is given.
pub fn admissibility_rows(su: &Superspace, sv: &Superspace, chart: &Chart) -> Result<RatMatrix> {
    let intr_carrier = su.carrier.to_intrinsic(chart)?;
    let out_deg = su.deg.saturating_sub(1).max(sv.deg);
    let dst = Superspace::new(intr_carrier.clone(), su.k + 1, out_deg);
    if dst.dim() == 0 {
        return Ok(RatMatrix::zeros(0, su.dim() + sv.dim()));
    }
    let mu = map_matrix(su, &dst, |u| {
        let p = u.pullback_onto(&u.carrier.clone(), chart)?;
        p.d()
    })?;
    let mv = map_matrix(sv, &dst, |v| v.pullback_onto(&v.carrier.clone(), chart))?;
    // rows: mu·x_u − mv·x_v = 0
    let neg = mv.scaled_neg();
    Ok(mu.hstack(&neg))
}

impl RatMatrix {
    fn scaled_neg(&self) -> RatMatrix {
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

/// Pair space `(u, du)` over a form space of genuine forms on a cell.
pub fn pairs_with_d(f: &FormSpace, kind: RestrictionKind) -> Result<PairSpace> {
    let v_sup = Superspace::new(f.sup.carrier.clone(), f.sup.k + 1, f.sup.deg.saturating_sub(1));
    let mut cols = Vec::with_capacity(f.dim());
    for i in 0..f.dim() {
        let u = f.basis_form(i);
        let du = u.d()?;
        cols.push([f.sup.vec_of(&u)?, v_sup.vec_of(&du)?].concat());
    }
    let basis = if cols.is_empty() {
        RatMatrix::zeros(f.sup.dim() + v_sup.dim(), 0)
    } else {
        RatMatrix::from_columns(cols)
    };
    Ok(PairSpace { kind, u_sup: f.sup.clone(), v_sup: Some(v_sup), basis })
}

/// The space of Whitney k-forms on a simplex: constant forms plus the
/// Poincaré image of constant (k+1)-forms. Stored intrinsically in the
/// simplex's canonical chart; dimension `binom(d+1, k+1)`.
pub fn whitney_space(corners: &[Vec<Rat>], k: usize) -> Result<FormSpace> {
    let chart = Chart::new(corners)?;
    let d = corners.len() - 1;
    // intrinsic unit simplex
    let mut unit = vec![vec![Rat::zero(); d]];
    for j in 0..d {
        let mut e = vec![Rat::zero(); d];
        e[j] = Rat::one();
        unit.push(e);
    }
    let carrier = Carrier::simplex(unit);
    let _ = chart;
    let consts_k = constrained_space(carrier.clone(), 0, k, Continuity::None)?;
    let consts_k1 = constrained_space(carrier.clone(), 0, k + 1, Continuity::None)?;
    let w = crate::polyform::space::augment(
        &consts_k,
        &consts_k1,
        &barycenter_intrinsic(d),
    )?;
    Ok(w.0)
}

fn barycenter_intrinsic(d: usize) -> Vec<Rat> {
    let den = Rat::from_integer((d as i64 + 1).into());
    vec![Rat::one() / den; d]
}

/// The span `𝕎_T = span{W_S − W_U : T ⊴ U ⊴ S}` over all top cells S
/// containing T, from an inpoint assignment. Checks exactly that
/// `𝕎_T ⊕ vect(T) = 𝕍`; alignment failures are errors.
pub struct WTSpan {
    pub vectors: Vec<Vec<Rat>>,
    pub basis: Vec<Vec<Rat>>,
}

pub fn wt_span(
    mesh: &SimplicialComplex,
    inpoints: &crate::splits::InpointAssignment,
    face: CellId,
) -> Result<WTSpan> {
    let n = mesh.ambient;
    let mut vectors: Vec<Vec<Rat>> = Vec::new();
    for &top in &mesh.top_cells() {
        if !mesh.is_subcell(face, top) {
            continue;
        }
        let ws = inpoints
            .get(top)
            .ok_or_else(|| Error::Split(format!("missing inpoint on {:?}", mesh.simplex(top))))?;
        for d in face.0..=top.0 {
            for u in mesh.subcells(top, d) {
                if !mesh.is_subcell(face, u) {
                    continue;
                }
                let wu = inpoints
                    .get(u)
                    .map(|p| p.clone())
                    .or_else(|| {
                        if u.0 == 0 {
                            Some(mesh.vertices[mesh.simplex(u)[0]].clone())
                        } else {
                            None
                        }
                    })
                    .ok_or_else(|| Error::Split(format!("missing inpoint on {:?}", mesh.simplex(u))))?;
                let v: Vec<Rat> = ws.iter().zip(&wu).map(|(a, b)| a - b).collect();
                if v.iter().any(|x| !x.is_zero()) {
                    vectors.push(v);
                }
            }
        }
    }
    // basis by rank
    let m = if vectors.is_empty() {
        RatMatrix::zeros(n, 0)
    } else {
        RatMatrix::from_columns(vectors.clone())
    };
    let keep = linalg::column_space_basis(&m);
    let basis: Vec<Vec<Rat>> = keep.iter().map(|&j| m.column(j)).collect();
    // vect(T)
    let corners = mesh.coords(mesh.simplex(face));
    let tangents: Vec<Vec<Rat>> = corners[1..]
        .iter()
        .map(|v| v.iter().zip(&corners[0]).map(|(a, b)| a - b).collect())
        .collect();
    let expected = n - face.0;
    if basis.len() != expected {
        return Err(Error::Split(format!(
            "alignment failure: span at {:?} has dimension {} (need {})",
            mesh.simplex(face),
            basis.len(),
            expected
        )));
    }
    let mut all = basis.clone();
    all.extend(tangents);
    let rank = linalg::rank(&RatMatrix::from_columns(all));
    if rank != n {
        return Err(Error::Split(format!(
            "alignment failure: span at {:?} is not transversal to the face",
            mesh.simplex(face)
        )));
    }
    Ok(WTSpan { vectors, basis })
}

// ---------------------------------------------------------------------------
// Four-sector fixture
// ---------------------------------------------------------------------------

/// The aligned four-sector complex around the origin: spaces
/// (C¹P²Λ⁰, C⁰P¹Λ¹, P⁰Λ²) with the alternating end evaluation.
pub struct FourSector {
    pub a0: FormSpace,
    pub a1: FormSpace,
    pub a2: FormSpace,
    /// the end map A² → R: alternating sum of sector values
    pub end_map: Vec<Rat>,
}

pub fn four_sector() -> Result<FourSector> {
    let mesh = crate::simplicial::fixtures::four_sectors();
    let carrier = Carrier::from_complex(&mesh);
    let a0 = constrained_space(carrier.clone(), 2, 0, Continuity::C1)?;
    let a1 = constrained_space(carrier.clone(), 1, 1, Continuity::C0)?;
    let a2 = constrained_space(carrier.clone(), 0, 2, Continuity::None)?;
    // end map: u(++) − u(−+) + u(−−) − u(+−) of the dx∧dy coefficient.
    // Sector cells in the carrier: [0,1,2] (+,+), [0,2,3] (−,+),
    // [0,3,4] (−,−), [0,1,4] (+,−) by construction of the fixture.
    let signs = sector_signs(&carrier);
    let mut end_map = Vec::with_capacity(a2.dim());
    for i in 0..a2.dim() {
        let f = a2.basis_form(i);
        let mut acc = Rat::zero();
        for (ci, s) in signs.iter().enumerate() {
            let vals = f.eval_in_cell(ci, &barycentric_center(f.carrier.nvars()));
            for (c, idx) in vals {
                if idx == vec![0u8, 1u8] {
                    acc += c * s;
                }
            }
        }
        end_map.push(acc);
    }
    Ok(FourSector { a0, a1, a2, end_map })
}

fn sector_signs(carrier: &Arc<Carrier>) -> Vec<Rat> {
    // sign per cell by quadrant of its barycenter: (+,+) → +, (−,+) → −,
    // (−,−) → +, (+,−) → −
    carrier
        .cells
        .iter()
        .enumerate()
        .map(|(ci, _)| {
            let coords = carrier.cell_coords(ci);
            let bary = crate::splits::isobarycenter(&coords);
            let sx = bary[0] >= Rat::zero();
            let sy = bary[1] >= Rat::zero();
            if sx == sy {
                Rat::one()
            } else {
                -Rat::one()
            }
        })
        .collect()
}

fn barycentric_center(nv: usize) -> Vec<Rat> {
    let den = Rat::from_integer((nv as i64).into());
    vec![Rat::one() / den; nv]
}

/// Report of the four-sector sequence checks.
#[derive(Clone, Debug, Serialize)]
pub struct FourSectorReport {
    pub dims: (usize, usize, usize),
    pub exact_at_a0: bool,
    pub exact_at_a1: bool,
    pub exact_at_a2: bool,
    pub end_map_surjective: bool,
}

pub fn four_sector_report() -> Result<FourSectorReport> {
    let fs = four_sector()?;
    let d0 = space_d_matrix(&fs.a0, &fs.a1)?;
    let d1 = space_d_matrix(&fs.a1, &fs.a2)?;
    let nullity0 = linalg::nullity(&d0);
    let rank0 = linalg::rank(&d0);
    let nullity1 = linalg::nullity(&d1);
    let rank1 = linalg::rank(&d1);
    let end = RatMatrix::from_rows(vec![fs.end_map.clone()]);
    let end_rank = linalg::rank(&end);
    let end_nullity = linalg::nullity(&end);
    Ok(FourSectorReport {
        dims: (fs.a0.dim(), fs.a1.dim(), fs.a2.dim()),
        exact_at_a0: nullity0 == 1,
        exact_at_a1: nullity1 == rank0,
        exact_at_a2: end_nullity == rank1,
        end_map_surjective: end_rank == 1,
    })
}

/// Matrix of d between two form spaces over the same carrier.
pub fn space_d_matrix(src: &FormSpace, dst: &FormSpace) -> Result<RatMatrix> {
    let mut cols = Vec::with_capacity(src.dim());
    for i in 0..src.dim() {
        let du = src.basis_form(i).d()?;
        let coords = dst
            .coords_of(&du)
            .ok_or_else(|| Error::Form("derivative leaves the target space".into()))?;
        cols.push(coords);
    }
    if cols.is_empty() {
        return Ok(RatMatrix::zeros(dst.dim(), 0));
    }
    Ok(RatMatrix::from_columns(cols))
}

// ---------------------------------------------------------------------------
// Unisolvence property tests
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct UnisolvenceReport {
    pub element: String,
    pub checks: Vec<(String, bool)>,
}

impl UnisolvenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// DoF matrix rows: vertex values, vertex values of d, integrals over
/// k-faces; used by the overdetermination checks of the 3D family.
pub fn classical_dof_rows(
    mesh: &SimplicialComplex,
    space: &FormSpace,
    k: usize,
    with_d_at_vertices: bool,
) -> Result<RatMatrix> {
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let forms = space.basis_forms();
    let dforms: Vec<PolyForm> = forms.iter().map(|f| f.d()).collect::<Result<_>>()?;
    let n = mesh.ambient;
    // vertex values of u and du
    for vi in 0..mesh.count(0) {
        let pt = mesh.vertices[mesh.simplex((0, vi))[0]].clone();
        for a in alt::alt_basis(n, k) {
            let mut row = Vec::with_capacity(space.dim());
            for f in &forms {
                let vals = f.eval(&pt)?;
                let c = vals
                    .into_iter()
                    .find(|(_, i)| *i == a)
                    .map(|(c, _)| c)
                    .unwrap_or_else(Rat::zero);
                row.push(c);
            }
            rows.push(row);
        }
        if with_d_at_vertices {
            for a in alt::alt_basis(n, k + 1) {
                let mut row = Vec::with_capacity(space.dim());
                for df in &dforms {
                    let vals = df.eval(&pt)?;
                    let c = vals
                        .into_iter()
                        .find(|(_, i)| *i == a)
                        .map(|(c, _)| c)
                        .unwrap_or_else(Rat::zero);
                    row.push(c);
                }
                rows.push(row);
            }
        }
    }
    // integrals over k-faces
    if k >= 1 {
        for fi in 0..mesh.count(k) {
            let corners = mesh.coords(mesh.simplex((k, fi)));
            let mut row = Vec::with_capacity(space.dim());
            for f in &forms {
                row.push(f.integrate_over(&corners)?);
            }
            rows.push(row);
        }
    }
    Ok(RatMatrix::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;

    #[test]
    fn elementspec_validation() {
        assert!(ElementSpec::parse("ct-highorder", Some(2), None).is_err());
        assert!(ElementSpec::parse("ct-highorder", Some(3), None).is_ok());
        assert!(ElementSpec::parse("nope", None, None).is_err());
        assert!(ElementSpec::parse("ps3d-branch", None, Some(2)).is_ok());
        assert!(ElementSpec::parse("ps3d-branch", None, None).is_err());
    }

    #[test]
    fn whitney_dimensions() {
        // n = 2
        let tri = vec![
            vec![rat(0), rat(0)],
            vec![rat(1), rat(0)],
            vec![rat(0), rat(1)],
        ];
        assert_eq!(whitney_space(&tri, 0).unwrap().dim(), 3);
        assert_eq!(whitney_space(&tri, 1).unwrap().dim(), 3);
        assert_eq!(whitney_space(&tri, 2).unwrap().dim(), 1);
        // n = 3
        let tet = vec![
            vec![rat(0), rat(0), rat(0)],
            vec![rat(1), rat(0), rat(0)],
            vec![rat(0), rat(1), rat(0)],
            vec![rat(0), rat(0), rat(1)],
        ];
        assert_eq!(whitney_space(&tet, 1).unwrap().dim(), 6);
        assert_eq!(whitney_space(&tet, 2).unwrap().dim(), 4);
    }

    #[test]
    fn whitney_face_integral_dofs_unisolvent() {
        // n=3, k=2: face integrals are unisolvent on Whitney 2-forms
        let tet = crate::simplicial::fixtures::tetrahedron();
        let corners = tet.coords(tet.simplex((3, 0)));
        let w2 = whitney_space(&corners, 2).unwrap();
        // integrate over the four faces (in intrinsic chart coordinates)
        let chart = Chart::new(&corners).unwrap();
        let mut rows = Vec::new();
        for fi in 0..tet.count(2) {
            let fc = tet.coords(tet.simplex((2, fi)));
            let intr: Vec<Vec<Rat>> = fc.iter().map(|p| chart.to_intrinsic(p).unwrap()).collect();
            let mut row = Vec::new();
            for i in 0..w2.dim() {
                row.push(w2.basis_form(i).integrate_over(&intr).unwrap());
            }
            rows.push(row);
        }
        let m = RatMatrix::from_rows(rows);
        assert_eq!(linalg::rank(&m), 4);
    }

    #[test]
    fn four_sector_fixture() {
        let rep = four_sector_report().unwrap();
        assert_eq!(rep.dims, (8, 10, 4));
        assert!(rep.exact_at_a0);
        assert!(rep.exact_at_a1);
        assert!(rep.exact_at_a2);
        assert!(rep.end_map_surjective);
    }
}
