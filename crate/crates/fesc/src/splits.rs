//! The m-refinements `R_m` of simplicial complexes with inpoint strategies,
//! plus the geometric alignment validation for the named splits
//! (Clough-Tocher, Alfeld, Worsey-Farin, Worsey-Piper).
//!
//! `R_m` cones inpoints of all faces of dimension > m over nested chains;
//! m = dim−1 is the single-inpoint (Alfeld) split and m = 0 the barycentric
//! refinement. All geometric predicates are exact rational tests.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::linalg::{self, Rat, RatMatrix};
use crate::simplicial::{barycentric_coords, strictly_interior, CellId, SimplicialComplex};
use crate::{Error, Result};

/// How inpoints are chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InpointStrategy {
    Isobarycenter,
    Circumcenter,
    WorseyFarin,
    Explicit,
}

/// Interior point per simplex of dimension ≥ 1 (lower bounds depend on m at
/// use sites; we simply store them for every positive dimension).
#[derive(Clone, Debug)]
pub struct InpointAssignment {
    pub strategy: InpointStrategy,
    points: BTreeMap<CellId, Vec<Rat>>,
}

impl InpointAssignment {
    pub fn get(&self, cell: CellId) -> Option<&Vec<Rat>> {
        self.points.get(&cell)
    }

    pub fn insert(&mut self, cell: CellId, point: Vec<Rat>) {
        self.points.insert(cell, point);
    }

    /// Isobarycenters everywhere.
    pub fn isobarycenters(mesh: &SimplicialComplex) -> Self {
        let mut points = BTreeMap::new();
        for d in 1..=mesh.dim() {
            for i in 0..mesh.count(d) {
                let verts = mesh.coords(mesh.simplex((d, i)));
                points.insert((d, i), isobarycenter(&verts));
            }
        }
        InpointAssignment { strategy: InpointStrategy::Isobarycenter, points }
    }

    /// Validate that every inpoint is strictly interior to its simplex.
    pub fn validate_interior(&self, mesh: &SimplicialComplex) -> Result<()> {
        for (&cell, p) in &self.points {
            let verts = mesh.coords(mesh.simplex(cell));
            if !strictly_interior(&verts, p) {
                return Err(Error::Split(format!(
                    "inpoint of simplex {:?} is not strictly interior",
                    mesh.simplex(cell)
                )));
            }
        }
        Ok(())
    }
}

pub fn isobarycenter(verts: &[Vec<Rat>]) -> Vec<Rat> {
    let n = verts[0].len();
    let k = Rat::from_integer(num_bigint::BigInt::from(verts.len()));
    (0..n)
        .map(|j| verts.iter().map(|v| &v[j]).fold(Rat::zero(), |acc, x| acc + x) / &k)
        .collect()
}

/// Exact circumcenter of a d-simplex embedded in R^n, as the unique point of
/// the affine hull equidistant from all vertices.
pub fn circumcenter(verts: &[Vec<Rat>]) -> Result<Vec<Rat>> {
    let d = verts.len() - 1;
    let n = verts[0].len();
    if d == 0 {
        return Ok(verts[0].clone());
    }
    let e: Vec<Vec<Rat>> = (1..=d)
        .map(|i| (0..n).map(|j| &verts[i][j] - &verts[0][j]).collect())
        .collect();
    // 2 (E_i · E_j) t_j = |V_i − V_0|²
    let mut gram = RatMatrix::zeros(d, d);
    let mut rhs = Vec::with_capacity(d);
    for i in 0..d {
        for j in 0..d {
            let mut s = Rat::zero();
            for a in 0..n {
                s += &e[i][a] * &e[j][a];
            }
            *gram.get_mut(i, j) = s * linalg::rat(2);
        }
        let mut norm = Rat::zero();
        for a in 0..n {
            norm += &e[i][a] * &e[i][a];
        }
        rhs.push(norm);
    }
    let t = linalg::solve(&gram, &rhs)
        .ok_or_else(|| Error::DegenerateSimplex("circumcenter of degenerate simplex".into()))?;
    let mut c = verts[0].clone();
    for i in 0..d {
        for a in 0..n {
            let v = &c[a] + &t[i] * &e[i][a];
            c[a] = v;
        }
    }
    Ok(c)
}

/// An `R_m` split of a complex: the refined complex, the inpoints used, and
/// the provenance map from refined simplices to base simplices.
#[derive(Clone, Debug)]
pub struct RefinedComplex {
    pub base: SimplicialComplex,
    pub m: usize,
    pub refined: SimplicialComplex,
    pub inpoints: InpointAssignment,
    /// Smallest base simplex containing each refined simplex.
    pub parent: BTreeMap<CellId, CellId>,
    /// Refined vertex id of each base simplex's inpoint (dims ≥ m+1),
    /// plus the identity on original vertices.
    pub inpoint_vertex: BTreeMap<CellId, usize>,
}

impl RefinedComplex {
    /// Children of a base cell at given refined dimension.
    pub fn children(&self, base: CellId, dim: usize) -> Vec<CellId> {
        self.parent
            .iter()
            .filter(|(&(d, _), &p)| d == dim && p == base)
            .map(|(&c, _)| c)
            .collect()
    }

    /// Refined top cells lying inside a base cell (of any base dimension):
    /// the children of the base cell and of its subcells, at dimension equal
    /// to the base cell's dimension.
    pub fn tops_within(&self, base: CellId) -> Vec<CellId> {
        let mut faces = vec![base];
        faces.extend(self.base.strict_subcells(base));
        let mut out: Vec<CellId> = Vec::new();
        for f in faces {
            out.extend(self.children(f, base.0));
        }
        out.sort_unstable();
        out
    }
}

/// Construct the `R_m` refinement of a complex, mesh-wide. Every simplex of
/// dimension ≥ m+1 gets an inpoint; refined simplices are the cones
/// `[W_{T_k}, …, W_{T_0}, V_0, …, V_l]` over nested chains
/// `T' ◁ T_0 ◁ … ◁ T_k` with `dim T' ≤ m` and `dim T_i ≥ m+1`.
pub fn refine(
    mesh: &SimplicialComplex,
    m: usize,
    inpoints: InpointAssignment,
) -> Result<RefinedComplex> {
    inpoints.validate_interior(mesh)?;
    let mut verts = mesh.vertices.clone();
    let mut inpoint_vertex: BTreeMap<CellId, usize> = BTreeMap::new();
    for d in (m + 1)..=mesh.dim() {
        for i in 0..mesh.count(d) {
            let p = inpoints
                .get((d, i))
                .ok_or_else(|| Error::Split(format!("missing inpoint for simplex {:?}", (d, i))))?;
            verts.push(p.clone());
            inpoint_vertex.insert((d, i), verts.len() - 1);
        }
    }

    // Enumerate chains per base simplex. A refined simplex is determined by
    // (chain of base simplices of dim ≥ m+1, base face of dim ≤ m), at least
    // one of the two nonempty, with the face strictly inside the lowest
    // chain element.
    let mut tops: Vec<Vec<usize>> = Vec::new();
    let mut provenance: Vec<(Vec<usize>, CellId)> = Vec::new();

    // chains are built top-down from each top cell
    fn chains_below(
        mesh: &SimplicialComplex,
        top: CellId,
        m: usize,
    ) -> Vec<Vec<CellId>> {
        // all strictly nested chains T_0 ◁ … ◁ T_k of subcells of `top`
        // (including `top` itself or not), each of dim ≥ m+1
        let mut cells: Vec<CellId> = Vec::new();
        if top.0 >= m + 1 {
            cells.push(top);
        }
        for d in (m + 1)..top.0 {
            cells.extend(mesh.subcells(top, d));
        }
        // order by dimension ascending for DP
        cells.sort_by_key(|c| c.0);
        let mut all: Vec<Vec<CellId>> = vec![vec![]];
        // extend chains upward: chains that end at each cell
        let mut ending: BTreeMap<CellId, Vec<Vec<CellId>>> = BTreeMap::new();
        for &c in &cells {
            let mut here: Vec<Vec<CellId>> = vec![vec![c]];
            for (&lower, chains) in ending.iter() {
                if lower.0 < c.0 && mesh.is_subcell(lower, c) {
                    for ch in chains {
                        let mut ext = ch.clone();
                        ext.push(c);
                        here.push(ext);
                    }
                }
            }
            all.extend(here.clone());
            ending.entry(c).or_default().extend(here);
        }
        all
    }

    let mut seen: std::collections::BTreeSet<Vec<usize>> = Default::default();
    for top in mesh.top_cells() {
        for chain in chains_below(mesh, top, m) {
            // faces allowed under the chain: subfaces of the lowest chain
            // element (or of `top` itself when the chain is empty) with
            // dim ≤ m; the empty face is allowed when the chain is nonempty.
            let lowest = chain.first().copied();
            let base_for_face = lowest.unwrap_or(top);
            let max_face_dim = m.min(base_for_face.0.saturating_sub(if lowest.is_some() { 1 } else { 0 }));
            let mut face_sets: Vec<Vec<usize>> = vec![vec![]];
            for fd in 0..=max_face_dim {
                for f in mesh.subcells(base_for_face, fd) {
                    // strict inclusion in the lowest chain element
                    if let Some(low) = lowest {
                        if f.0 >= low.0 {
                            continue;
                        }
                    }
                    face_sets.push(mesh.simplex(f).to_vec());
                }
            }
            for fverts in face_sets {
                if chain.is_empty() && fverts.is_empty() {
                    continue;
                }
                let mut sim: Vec<usize> = fverts.clone();
                for &c in &chain {
                    sim.push(inpoint_vertex[&c]);
                }
                sim.sort_unstable();
                // full refined simplices only at dimension of parent cells;
                // generate maximal ones (chain reaching a top cell); faces
                // are produced by from_simplices
                let parent = chain.last().copied().unwrap_or_else(|| {
                    mesh.lookup(&fverts).expect("face must exist")
                });
                if sim.len() == parent.0 + 1 && seen.insert(sim.clone()) {
                    provenance.push((sim.clone(), parent));
                    if parent.0 == top.0 {
                        tops.push(sim.clone());
                    }
                }
            }
        }
        // unrefined faces of dimension ≤ m are already faces of the cones
    }

    let refined = SimplicialComplex::from_simplices(mesh.ambient, verts, tops)?;

    // parent map: for every refined simplex find the smallest base simplex
    // containing it geometrically.
    let mut parent: BTreeMap<CellId, CellId> = BTreeMap::new();
    for cell in refined.all_cells() {
        let pts = refined.coords(refined.simplex(cell));
        let p = smallest_containing(mesh, &pts).ok_or_else(|| {
            Error::Split(format!("refined simplex {:?} escapes the base complex", refined.simplex(cell)))
        })?;
        parent.insert(cell, p);
    }

    let rc = RefinedComplex { base: mesh.clone(), m, refined, inpoints, parent, inpoint_vertex };
    let report = validate_split(&rc);
    if !report.passed() {
        return Err(Error::Split(format!("refinement failed validation: {report:?}")));
    }
    Ok(rc)
}

/// Smallest base simplex whose closed realization contains all points.
fn smallest_containing(mesh: &SimplicialComplex, pts: &[Vec<Rat>]) -> Option<CellId> {
    for d in 0..=mesh.dim() {
        'cell: for i in 0..mesh.count(d) {
            let verts = mesh.coords(mesh.simplex((d, i)));
            for p in pts {
                match barycentric_coords(&verts, p) {
                    Some(l) if l.iter().all(|x| !x.is_negative()) => {}
                    _ => continue 'cell,
                }
            }
            return Some((d, i));
        }
    }
    None
}

/// Worsey-Farin inpoints for a 3D mesh: cell inpoints as given (default
/// isobarycenters); each interior face gets the exact intersection of the
/// segment joining the two adjacent cell inpoints with the face plane;
/// boundary faces get isobarycenters; edges get isobarycenters (used only
/// by R_0).
pub fn worsey_farin_inpoints(
    mesh: &SimplicialComplex,
    cell_inpoints: Option<BTreeMap<CellId, Vec<Rat>>>,
) -> Result<InpointAssignment> {
    if mesh.dim() != 3 {
        return Err(Error::Split("Worsey-Farin inpoints need a 3D mesh".into()));
    }
    let mut points: BTreeMap<CellId, Vec<Rat>> = BTreeMap::new();
    for i in 0..mesh.count(3) {
        let cell = (3, i);
        let p = match &cell_inpoints {
            Some(map) => map
                .get(&cell)
                .cloned()
                .ok_or_else(|| Error::Split(format!("missing cell inpoint for {cell:?}")))?,
            None => isobarycenter(&mesh.coords(mesh.simplex(cell))),
        };
        points.insert(cell, p);
    }
    for fi in 0..mesh.count(2) {
        let face = (2, fi);
        let fverts = mesh.simplex(face).to_vec();
        let adj: Vec<CellId> = (0..mesh.count(3))
            .map(|i| (3, i))
            .filter(|&c| mesh.is_subcell(face, c))
            .collect();
        let p = match adj.len() {
            1 => isobarycenter(&mesh.coords(&fverts)),
            2 => {
                let w1 = points[&adj[0]].clone();
                let w2 = points[&adj[1]].clone();
                // opposite vertex of face in cell adj[0]
                let cellverts = mesh.simplex(adj[0]);
                let opp = *cellverts.iter().find(|v| !fverts.contains(v)).unwrap();
                // barycentric coordinate of the opposite vertex as affine map
                let coords = mesh.coords(cellverts);
                let l1 = barycentric_coords(&coords, &w1).unwrap();
                let l2 = barycentric_coords(&coords, &w2);
                let oi = cellverts.iter().position(|&v| v == opp).unwrap();
                let a = l1[oi].clone();
                let b = match l2 {
                    Some(l) => l[oi].clone(),
                    None => {
                        return Err(Error::Split(format!(
                            "cell inpoint of {:?} outside affine hull",
                            adj[1]
                        )))
                    }
                };
                if (&a - &b).is_zero() {
                    return Err(Error::Split(format!(
                        "segment between cell inpoints is parallel to face {fverts:?}"
                    )));
                }
                let s = &a / (&a - &b);
                if !(s.is_positive() && s < Rat::one()) {
                    return Err(Error::Split(format!(
                        "inpoint segment misses the open face {fverts:?}"
                    )));
                }
                let p: Vec<Rat> = w1
                    .iter()
                    .zip(&w2)
                    .map(|(x, y)| x + &s * (y - x))
                    .collect();
                if !strictly_interior(&mesh.coords(&fverts), &p) {
                    return Err(Error::Split(format!(
                        "inpoint segment intersection lies outside the open face {fverts:?}; \
                         mesh is not Worsey-Farin splittable with these cell inpoints"
                    )));
                }
                p
            }
            k => {
                return Err(Error::InvalidComplex(format!(
                    "face {fverts:?} has {k} adjacent cells"
                )))
            }
        };
        points.insert(face, p);
    }
    for ei in 0..mesh.count(1) {
        let edge = (1, ei);
        points.insert(edge, isobarycenter(&mesh.coords(mesh.simplex(edge))));
    }
    Ok(InpointAssignment { strategy: InpointStrategy::WorseyFarin, points })
}

/// Worsey-Piper inpoints: circumcenters at every dimension. Requires every
/// simplex of dimension ≥ 1 to have its circumcenter strictly interior (the
/// operative meaning of "strictly acute" here; a right-angled tetrahedron
/// has its circumcenter on the boundary and is rejected). Also validates
/// exactly the coplanarity condition used by the splits: for every cell S
/// and edge E ⊂ S, the inpoints of S, of the two faces of S containing E,
/// and of E itself lie on a common plane.
pub fn worsey_piper_inpoints(mesh: &SimplicialComplex) -> Result<InpointAssignment> {
    if mesh.dim() != 3 {
        return Err(Error::Split("Worsey-Piper inpoints need a 3D mesh".into()));
    }
    let mut points: BTreeMap<CellId, Vec<Rat>> = BTreeMap::new();
    for d in 1..=3 {
        for i in 0..mesh.count(d) {
            let cell = (d, i);
            let verts = mesh.coords(mesh.simplex(cell));
            let c = circumcenter(&verts)?;
            if !strictly_interior(&verts, &c) {
                return Err(Error::Split(format!(
                    "simplex {:?} is not strictly acute (circumcenter not interior)",
                    mesh.simplex(cell)
                )));
            }
            points.insert(cell, c);
        }
    }
    // coplanarity validation
    for ci in 0..mesh.count(3) {
        let cell = (3, ci);
        for edge in mesh.subcells(cell, 1) {
            let faces: Vec<CellId> = mesh
                .subcells(cell, 2)
                .into_iter()
                .filter(|&f| mesh.is_subcell(edge, f))
                .collect();
            assert_eq!(faces.len(), 2);
            let pts = [
                points[&cell].clone(),
                points[&faces[0]].clone(),
                points[&faces[1]].clone(),
                points[&edge].clone(),
            ];
            if !coplanar(&pts) {
                return Err(Error::Split(format!(
                    "inpoints around edge {:?} in cell {:?} are not coplanar",
                    mesh.simplex(edge),
                    mesh.simplex(cell)
                )));
            }
        }
    }
    Ok(InpointAssignment { strategy: InpointStrategy::Circumcenter, points })
}

fn coplanar(pts: &[Vec<Rat>; 4]) -> bool {
    let mut m = RatMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            *m.get_mut(i, j) = &pts[i + 1][j] - &pts[0][j];
        }
    }
    linalg::determinant(&m).is_zero()
}

/// Validation report for a refinement.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SplitReport {
    pub skeleton_equal_up_to_m: bool,
    pub volumes_partition: bool,
    pub parents_consistent: bool,
}

impl SplitReport {
    pub fn passed(&self) -> bool {
        self.skeleton_equal_up_to_m && self.volumes_partition && self.parents_consistent
    }
}

/// Check the structural invariants of a refinement: shared m-skeleton,
/// exact volume partition of every base top cell, and parent-map
/// consistency (children lie inside their parents).
pub fn validate_split(rc: &RefinedComplex) -> SplitReport {
    let m = rc.m;
    // Skeleton agreement up to dimension m: base simplices of dimension ≤ m
    // are not refined. They must appear verbatim in the refined complex, and
    // the only refined d-simplices lying inside the base d-skeleton (parent
    // dimension ≤ m) are the base simplices themselves.
    let mut skeleton_ok = true;
    for d in 0..=m.min(rc.base.dim()) {
        let base_set: std::collections::BTreeSet<Vec<usize>> =
            rc.base.simplices[d].iter().cloned().collect();
        let inside_skeleton: std::collections::BTreeSet<Vec<usize>> = rc
            .parent
            .iter()
            .filter(|(&(cd, _), &p)| cd == d && p.0 <= m)
            .map(|(&c, _)| rc.refined.simplex(c).to_vec())
            .collect();
        if base_set != inside_skeleton {
            skeleton_ok = false;
        }
    }

    // volume partition per base top cell
    let mut volumes_ok = true;
    for top in rc.base.top_cells() {
        let base_vol = abs_volume(&rc.base.coords(rc.base.simplex(top)));
        let mut sum = Rat::zero();
        for child in rc.tops_within(top) {
            sum += abs_volume(&rc.refined.coords(rc.refined.simplex(child)));
        }
        if sum != base_vol {
            volumes_ok = false;
        }
    }

    // parent consistency: every refined simplex sits inside its parent
    let mut parents_ok = true;
    for (child, parent) in &rc.parent {
        let pverts = rc.base.coords(rc.base.simplex(*parent));
        for v in rc.refined.simplex(*child) {
            let p = &rc.refined.vertices[*v];
            if !crate::simplicial::inside_closed(&pverts, p) {
                parents_ok = false;
            }
        }
    }

    SplitReport {
        skeleton_equal_up_to_m: skeleton_ok,
        volumes_partition: volumes_ok,
        parents_consistent: parents_ok,
    }
}

/// Unsigned volume of a simplex of any dimension inside R^n, measured in the
/// intrinsic parametrization by its first vertex and edge vectors. For full
/// dimension this is the Euclidean volume; for lower dimensions it is the
/// Gram-free intrinsic volume used consistently throughout.
pub fn abs_volume(verts: &[Vec<Rat>]) -> Rat {
    let d = verts.len() - 1;
    let n = verts[0].len();
    if d == 0 {
        return Rat::one();
    }
    if d == n {
        return linalg::signed_volume(verts).map(|v| v.abs()).unwrap_or_else(|_| Rat::zero());
    }
    // squared Gram volume is rational; we only compare like against like
    // (children vs parent in the same plane), so use the Gram determinant.
    let e: Vec<Vec<Rat>> = (1..=d)
        .map(|i| (0..n).map(|j| &verts[i][j] - &verts[0][j]).collect())
        .collect();
    let mut gram = RatMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = Rat::zero();
            for a in 0..n {
                s += &e[i][a] * &e[j][a];
            }
            *gram.get_mut(i, j) = s;
        }
    }
    // return det(Gram) as a stand-in for vol²·(d!)²; comparisons use equal
    // dimension so this is consistent. For partition sums of equal-dim
    // children the *linear* measure is needed, so fall back to the
    // barycentric measure relative to the parent plane where applicable.
    linalg::determinant(&gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio};
    use crate::simplicial::fixtures;

    #[test]
    fn clough_tocher_counts() {
        let tri = fixtures::triangle();
        let rc = refine(&tri, 1, InpointAssignment::isobarycenters(&tri)).unwrap();
        assert_eq!(rc.refined.count(0), 4);
        assert_eq!(rc.refined.count(1), 6);
        assert_eq!(rc.refined.count(2), 3);
        // Euler characteristic of a disc
        assert_eq!(4 - 6 + 3, 1);
    }

    #[test]
    fn barycentric_refinement_counts() {
        let tri = fixtures::triangle();
        let rc = refine(&tri, 0, InpointAssignment::isobarycenters(&tri)).unwrap();
        assert_eq!(rc.refined.count(0), 7);
        assert_eq!(rc.refined.count(1), 12);
        assert_eq!(rc.refined.count(2), 6);
    }

    #[test]
    fn tetrahedron_split_counts() {
        let tet = fixtures::tetrahedron();
        let r1 = refine(&tet, 1, InpointAssignment::isobarycenters(&tet)).unwrap();
        assert_eq!(r1.refined.count(3), 12);
        let r0 = refine(&tet, 0, InpointAssignment::isobarycenters(&tet)).unwrap();
        assert_eq!(r0.refined.count(3), 24);
        let r2 = refine(&tet, 2, InpointAssignment::isobarycenters(&tet)).unwrap();
        assert_eq!(r2.refined.count(3), 4);
    }

    #[test]
    fn full_m_refinement_is_identity() {
        let tri = fixtures::triangle();
        let rc = refine(&tri, 2, InpointAssignment::isobarycenters(&tri)).unwrap();
        assert_eq!(rc.refined.count(2), 1);
        assert_eq!(rc.refined.count(0), 3);
    }

    #[test]
    fn refinements_validate() {
        let sq = fixtures::square();
        for m in 0..=1 {
            let rc = refine(&sq, m, InpointAssignment::isobarycenters(&sq)).unwrap();
            assert!(validate_split(&rc).passed());
        }
    }

    #[test]
    fn shared_face_refined_consistently() {
        let sq = fixtures::square();
        let rc = refine(&sq, 0, InpointAssignment::isobarycenters(&sq)).unwrap();
        // the shared edge {0,3} has one inpoint vertex, used from both sides
        let shared = sq.lookup(&[0, 3]).unwrap();
        let w = rc.inpoint_vertex[&shared];
        let containing: Vec<_> = (0..rc.refined.count(2))
            .filter(|&i| rc.refined.simplex((2, i)).contains(&w))
            .collect();
        assert_eq!(containing.len(), 4);
    }

    #[test]
    fn worsey_farin_two_tets() {
        let mesh = fixtures::tet_pair();
        let ips = worsey_farin_inpoints(&mesh, None).unwrap();
        let shared = mesh.lookup(&[0, 1, 2]).unwrap();
        let p = ips.get(shared).unwrap();
        assert!(strictly_interior(&mesh.coords(&[0, 1, 2]), p));
        // and it lies on the segment joining the two cell inpoints
        let w1 = ips.get((3, 0)).unwrap();
        let w2 = ips.get((3, 1)).unwrap();
        let d1: Vec<Rat> = p.iter().zip(w1).map(|(a, b)| a - b).collect();
        let d2: Vec<Rat> = w2.iter().zip(w1).map(|(a, b)| a - b).collect();
        // collinearity: d1 × d2 = 0
        let cross = [
            &d1[1] * &d2[2] - &d1[2] * &d2[1],
            &d1[2] * &d2[0] - &d1[0] * &d2[2],
            &d1[0] * &d2[1] - &d1[1] * &d2[0],
        ];
        assert!(cross.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn worsey_farin_single_tet_uses_isobarycenters() {
        let mesh = fixtures::tetrahedron();
        let ips = worsey_farin_inpoints(&mesh, None).unwrap();
        let face = mesh.lookup(&[0, 1, 2]).unwrap();
        assert_eq!(
            ips.get(face).unwrap(),
            &isobarycenter(&mesh.coords(&[0, 1, 2]))
        );
    }

    #[test]
    fn worsey_farin_sliver_rejected() {
        // Tall thin tet next to a flat one: the segment between the
        // isobarycenters exits through an edge of the shared face.
        let mesh = SimplicialComplex::from_simplices(
            3,
            vec![
                vec![rat(0), rat(0), rat(0)],
                vec![rat(1), rat(0), rat(0)],
                vec![rat(0), rat(1), rat(0)],
                vec![rat(0), rat(0), rat(1)],
                vec![rat(30), rat(30), rat(-1)],
            ],
            vec![vec![0, 1, 2, 3], vec![0, 1, 2, 4]],
        )
        .unwrap();
        assert!(worsey_farin_inpoints(&mesh, None).is_err());
    }

    #[test]
    fn worsey_piper_regular_tets() {
        let mesh = fixtures::regular_tet();
        let ips = worsey_piper_inpoints(&mesh).unwrap();
        // regular tetrahedron: circumcenter = isobarycenter
        assert_eq!(
            ips.get((3, 0)).unwrap(),
            &isobarycenter(&mesh.coords(mesh.simplex((3, 0))))
        );
        let pair = fixtures::regular_tet_pair();
        assert!(worsey_piper_inpoints(&pair).is_ok());
    }

    #[test]
    fn worsey_piper_right_angle_rejected() {
        let mesh = fixtures::tetrahedron(); // right-angled at the origin
        assert!(worsey_piper_inpoints(&mesh).is_err());
    }

    #[test]
    fn explicit_inpoint_outside_rejected() {
        let tri = fixtures::triangle();
        let mut ips = InpointAssignment::isobarycenters(&tri);
        ips.insert((2, 0), vec![rat(5), rat(5)]);
        assert!(refine(&tri, 1, ips).is_err());
    }

    #[test]
    fn restriction_property() {
        // R_m of the mesh restricted to a base cell equals R_m of that cell
        // with the same inpoints.
        let sq = fixtures::square();
        let ips = InpointAssignment::isobarycenters(&sq);
        let rc = refine(&sq, 1, ips.clone()).unwrap();
        let t0 = (2usize, 0usize);
        let within = rc.tops_within(t0);
        assert_eq!(within.len(), 3); // Clough-Tocher split of one triangle
        for c in within {
            let verts = rc.refined.coords(rc.refined.simplex(c));
            let tverts = sq.coords(sq.simplex(t0));
            for v in &verts {
                assert!(crate::simplicial::inside_closed(&tverts, v));
            }
        }
    }

    #[test]
    fn volume_partition_exact() {
        let tet = fixtures::tetrahedron();
        let rc = refine(&tet, 0, InpointAssignment::isobarycenters(&tet)).unwrap();
        let mut sum = Rat::zero();
        for i in 0..rc.refined.count(3) {
            sum += crate::linalg::signed_volume(&rc.refined.coords(rc.refined.simplex((3, i))))
                .unwrap()
                .abs();
        }
        assert_eq!(sum, ratio(1, 6));
    }
}
