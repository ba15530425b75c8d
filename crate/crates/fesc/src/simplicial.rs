//! Simplicial complexes with exact rational vertex coordinates, the subcell
//! lattice, relative orientations and the cellular cochain complex.
//!
//! The orientation convention is fixed globally: a simplex is oriented by its
//! ascending vertex order, and the codimension-one face omitting the vertex
//! at position `i` carries the sign `(−1)^i`. With this convention the
//! one-dimensional Stokes identity reads `∫ du = u(V₁) − u(V₀)`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::linalg::{self, parse_rat, rat_to_string, Rat, RatMatrix};
use crate::{Error, Result};

/// Identifier of a simplex inside a complex: `(dimension, index)`.
pub type CellId = (usize, usize);

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    /// Ambient dimension.
    pub ambient: usize,
    /// Vertex coordinates, each of length `ambient`.
    pub vertices: Vec<Vec<Rat>>,
    /// For each dimension `k`, the sorted vertex tuples of the k-simplices,
    /// listed in lexicographic order.
    pub simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<BTreeMap<Vec<usize>, usize>>,
}

impl SimplicialComplex {
    /// Build a complex from vertices and top-level simplices; all faces are
    /// generated. Top simplices may have mixed dimensions.
    pub fn from_simplices(
        ambient: usize,
        vertices: Vec<Vec<Rat>>,
        tops: Vec<Vec<usize>>,
    ) -> Result<Self> {
        for v in &vertices {
            if v.len() != ambient {
                return Err(Error::InvalidComplex(format!(
                    "vertex has {} coordinates, ambient dimension is {}",
                    v.len(),
                    ambient
                )));
            }
        }
        let max_dim = tops.iter().map(|t| t.len().saturating_sub(1)).max().unwrap_or(0);
        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); max_dim + 1];
        for t in &tops {
            let mut s = t.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != t.len() {
                return Err(Error::InvalidComplex(format!("repeated vertex in simplex {t:?}")));
            }
            if s.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidComplex(format!("vertex index out of range in {t:?}")));
            }
            for mask in 1u64..(1 << s.len()) {
                let face: Vec<usize> =
                    s.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
                sets[face.len() - 1].insert(face);
            }
        }
        let simplices: Vec<Vec<Vec<usize>>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let index = simplices
            .iter()
            .map(|dim| dim.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect())
            .collect();
        let complex = SimplicialComplex { ambient, vertices, simplices, index };
        complex.check_disjoint_interiors()?;
        Ok(complex)
    }

    /// Maximum simplex dimension present.
    pub fn dim(&self) -> usize {
        self.simplices.len() - 1
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, |v| v.len())
    }

    pub fn simplex(&self, id: CellId) -> &[usize] {
        &self.simplices[id.0][id.1]
    }

    pub fn lookup(&self, verts: &[usize]) -> Option<CellId> {
        let mut s = verts.to_vec();
        s.sort_unstable();
        let dim = s.len() - 1;
        self.index.get(dim)?.get(&s).map(|&i| (dim, i))
    }

    pub fn coords(&self, verts: &[usize]) -> Vec<Vec<Rat>> {
        verts.iter().map(|&v| self.vertices[v].clone()).collect()
    }

    /// All cells, ordered by (dimension, index).
    pub fn all_cells(&self) -> Vec<CellId> {
        (0..self.simplices.len())
            .flat_map(|d| (0..self.count(d)).map(move |i| (d, i)))
            .collect()
    }

    /// Top cells: simplices not contained in a higher-dimensional simplex.
    pub fn top_cells(&self) -> Vec<CellId> {
        let mut contained: Vec<Vec<bool>> =
            self.simplices.iter().map(|d| vec![false; d.len()]).collect();
        for d in (1..self.simplices.len()).rev() {
            for t in &self.simplices[d] {
                for f in subsets_of_len(t, d) {
                    if let Some((fd, fi)) = self.lookup(&f) {
                        contained[fd][fi] = true;
                    }
                }
            }
        }
        self.all_cells().into_iter().filter(|&(d, i)| !contained[d][i]).collect()
    }

    /// The `k`-dimensional subcells of a simplex: all `k+1`-subsets of its
    /// vertex tuple, in lexicographic order.
    pub fn subcells(&self, id: CellId, k: usize) -> Vec<CellId> {
        let t = self.simplex(id);
        if k > id.0 {
            return Vec::new();
        }
        subsets_of_len(t, k + 1)
            .into_iter()
            .map(|f| self.lookup(&f).expect("face closure violated"))
            .collect()
    }

    /// Strict subcells of every dimension (the boundary lattice of `id`).
    pub fn strict_subcells(&self, id: CellId) -> Vec<CellId> {
        (0..id.0).flat_map(|k| self.subcells(id, k)).collect()
    }

    /// Is `sub` a subcell of `sup` (vertex subset, allowing equality)?
    pub fn is_subcell(&self, sub: CellId, sup: CellId) -> bool {
        let a = self.simplex(sub);
        let b = self.simplex(sup);
        a.iter().all(|v| b.contains(v))
    }

    /// Relative orientation: 0 unless `face` is a codimension-one subcell of
    /// `cell`; otherwise `(−1)^i` with `i` the position of the omitted vertex
    /// in the sorted tuple of `cell`.
    pub fn relative_orientation(&self, cell: CellId, face: CellId) -> i32 {
        if cell.0 != face.0 + 1 {
            return 0;
        }
        let t = self.simplex(cell);
        let f = self.simplex(face);
        if !f.iter().all(|v| t.contains(v)) {
            return 0;
        }
        let omitted = t.iter().position(|v| !f.contains(v)).unwrap();
        if omitted % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Matrix of the coboundary `δ : 𝒞^k → 𝒞^{k+1}` in the canonical bases.
    pub fn coboundary_matrix(&self, k: usize) -> RatMatrix {
        let rows = self.count(k + 1);
        let cols = self.count(k);
        let mut m = RatMatrix::zeros(rows, cols);
        for i in 0..rows {
            let cell = (k + 1, i);
            for face in self.subcells(cell, k) {
                let s = self.relative_orientation(cell, face);
                if s != 0 {
                    *m.get_mut(i, face.1) = linalg::rat(s as i64);
                }
            }
        }
        m
    }

    /// Exact cellular cohomology dimensions per degree:
    /// `nullity(δ^k) − rank(δ^{k−1})`.
    pub fn cellular_cohomology(&self) -> Vec<usize> {
        let n = self.dim();
        let mut dims = Vec::with_capacity(n + 1);
        let mut prev_rank = 0usize;
        for k in 0..=n {
            let d = self.coboundary_matrix(k);
            let nul = linalg::nullity(&d);
            dims.push(nul - prev_rank);
            prev_rank = linalg::rank(&d);
        }
        dims
    }

    /// δδ = 0 over all degrees; checked on construction paths that build
    /// complexes by hand.
    pub fn check_coboundary_squares_to_zero(&self) -> bool {
        (0..self.dim()).all(|k| {
            let a = self.coboundary_matrix(k + 1);
            let b = self.coboundary_matrix(k);
            a.matmul(&b).is_zero()
        })
    }

    /// Boundary complex of a simplex: the complex of its strict faces.
    /// The boundary of a vertex is the empty complex.
    pub fn boundary_complex(&self, id: CellId) -> Result<SimplicialComplex> {
        if id.0 == 0 {
            return SimplicialComplex::from_simplices(self.ambient, self.vertices.clone(), vec![]);
        }
        let t = self.simplex(id);
        let facets = subsets_of_len(t, id.0);
        SimplicialComplex::from_simplices(self.ambient, self.vertices.clone(), facets)
    }

    /// Barycentric coordinates of a point with respect to a simplex of this
    /// complex (full-dimensional or lower). Returns `None` when the point is
    /// not in the affine hull.
    pub fn barycentric(&self, verts: &[usize], point: &[Rat]) -> Option<Vec<Rat>> {
        barycentric_coords(&self.coords(verts), point)
    }

    fn check_disjoint_interiors(&self) -> Result<()> {
        let tops: Vec<CellId> = self.top_cells().into_iter().filter(|&(d, _)| d == self.ambient).collect();
        if tops.len() > 100 {
            return Ok(()); // desk-scale check only; large meshes come from validated refiners
        }
        for (a_pos, &a) in tops.iter().enumerate() {
            for &b in &tops[a_pos + 1..] {
                let va = self.coords(self.simplex(a));
                let vb = self.coords(self.simplex(b));
                if !simplices_weakly_separated(&va, &vb) {
                    return Err(Error::InvalidComplex(format!(
                        "top simplices {:?} and {:?} have overlapping interiors",
                        self.simplex(a),
                        self.simplex(b)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Barycentric coordinates of `point` with respect to the simplex with the
/// given vertex coordinates, or `None` if outside the affine hull.
pub fn barycentric_coords(verts: &[Vec<Rat>], point: &[Rat]) -> Option<Vec<Rat>> {
    let d = verts.len() - 1;
    let n = point.len();
    // Solve sum λ_i V_i = point, sum λ_i = 1 as an (n+1) × (d+1) system.
    let mut m = RatMatrix::zeros(n + 1, d + 1);
    let mut b = Vec::with_capacity(n + 1);
    for r in 0..n {
        for (c, v) in verts.iter().enumerate() {
            *m.get_mut(r, c) = v[r].clone();
        }
        b.push(point[r].clone());
    }
    for c in 0..=d {
        *m.get_mut(n, c) = Rat::one();
    }
    b.push(Rat::one());
    linalg::solve(&m, &b)
}

/// Strictly inside the open simplex: all barycentric coordinates positive.
pub fn strictly_interior(verts: &[Vec<Rat>], point: &[Rat]) -> bool {
    barycentric_coords(verts, point).is_some_and(|l| l.iter().all(|x| x.is_positive()))
}

/// Inside the closed simplex.
pub fn inside_closed(verts: &[Vec<Rat>], point: &[Rat]) -> bool {
    barycentric_coords(verts, point).is_some_and(|l| l.iter().all(|x| !x.is_negative()))
}

fn subsets_of_len(t: &[usize], len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = t.len();
    if len == 0 || len > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..len).collect();
    loop {
        out.push(idx.iter().map(|&i| t[i]).collect());
        // next combination
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - len {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..len {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Weak separating-axis test for two simplices of full dimension. Interiors
/// of convex bodies are disjoint iff some axis weakly separates them; for
/// simplices it suffices to test facet normals (2D/3D) and, in 3D, cross
/// products of edge pairs.
fn simplices_weakly_separated(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> bool {
    let n = a[0].len();
    let mut axes: Vec<Vec<Rat>> = Vec::new();
    match n {
        1 => axes.push(vec![Rat::one()]),
        2 => {
            for s in [a, b] {
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        let ex = &s[j][0] - &s[i][0];
                        let ey = &s[j][1] - &s[i][1];
                        axes.push(vec![-ey, ex]);
                    }
                }
            }
        }
        3 => {
            let edges = |s: &[Vec<Rat>]| -> Vec<[Vec<Rat>; 2]> {
                let mut e = Vec::new();
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        e.push([s[i].clone(), s[j].clone()]);
                    }
                }
                e
            };
            let facet_normals = |s: &[Vec<Rat>]| -> Vec<Vec<Rat>> {
                let mut out = Vec::new();
                for skip in 0..s.len() {
                    let f: Vec<&Vec<Rat>> = s.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v).collect();
                    if f.len() >= 3 {
                        out.push(cross3(&sub(f[1], f[0]), &sub(f[2], f[0])));
                    }
                }
                out
            };
            axes.extend(facet_normals(a));
            axes.extend(facet_normals(b));
            for ea in edges(a) {
                for eb in edges(b) {
                    let c = cross3(&sub(&ea[1], &ea[0]), &sub(&eb[1], &eb[0]));
                    if c.iter().any(|x| !x.is_zero()) {
                        axes.push(c);
                    }
                }
            }
        }
        _ => return true, // no exact overlap check beyond 3D
    }
    'axis: for ax in &axes {
        if ax.iter().all(|x| x.is_zero()) {
            continue;
        }
        let proj = |s: &[Vec<Rat>]| -> (Rat, Rat) {
            let vals: Vec<Rat> = s.iter().map(|v| dot(v, ax)).collect();
            let mut lo = vals[0].clone();
            let mut hi = vals[0].clone();
            for v in &vals[1..] {
                if *v < lo {
                    lo = v.clone();
                }
                if *v > hi {
                    hi = v.clone();
                }
            }
            (lo, hi)
        };
        let (alo, ahi) = proj(a);
        let (blo, bhi) = proj(b);
        if ahi <= blo || bhi <= alo {
            return true;
        }
        continue 'axis;
    }
    false
}

fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).fold(Rat::zero(), |acc, v| acc + v)
}

fn cross3(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

/// Cochain with one rational per k-simplex, ordered by simplex index.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub values: Vec<Rat>,
}

impl Cochain {
    pub fn new(degree: usize, values: Vec<Rat>) -> Self {
        Cochain { degree, values }
    }
}

// ---------------------------------------------------------------------------
// Mesh text format
//
//   line 1:  dim n
//   then     v <c1> ... <cn>       rational coordinates, `p/q` or integers
//   then     s <i1> ... <i(n+1)>   0-based vertex indices of top simplices
//   optional p <child> <d>:<i>     parent annotations for refined meshes
//
// `#` starts a comment; tokens are whitespace separated.
// ---------------------------------------------------------------------------

pub struct ParsedMesh {
    pub complex: SimplicialComplex,
    /// parent annotations: refined top-cell index → base (dim, index)
    pub parents: Vec<(usize, CellId)>,
}

pub fn read_mesh(text: &str) -> Result<ParsedMesh> {
    let mut dim: Option<usize> = None;
    let mut verts: Vec<Vec<Rat>> = Vec::new();
    let mut tops: Vec<Vec<usize>> = Vec::new();
    let mut parents: Vec<(usize, CellId)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| Error::MeshFormat(format!("line {}: {}", lineno + 1, msg));
        match toks[0] {
            "dim" => {
                let n: usize =
                    toks.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| err("bad dim".into()))?;
                dim = Some(n);
            }
            "v" => {
                let n = dim.ok_or_else(|| err("dim line must come first".into()))?;
                if toks.len() != n + 1 {
                    return Err(err(format!("expected {n} coordinates")));
                }
                let coords: Result<Vec<Rat>> = toks[1..].iter().map(|t| parse_rat(t)).collect();
                verts.push(coords?);
            }
            "s" => {
                let ids: std::result::Result<Vec<usize>, _> =
                    toks[1..].iter().map(|t| t.parse::<usize>()).collect();
                tops.push(ids.map_err(|e| err(format!("bad simplex index: {e}")))?);
            }
            "p" => {
                if toks.len() != 3 {
                    return Err(err("expected: p <child> <dim>:<index>".into()));
                }
                let child: usize = toks[1].parse().map_err(|e| err(format!("bad child: {e}")))?;
                let (d, i) = toks[2]
                    .split_once(':')
                    .ok_or_else(|| err("base id must be <dim>:<index>".into()))?;
                let d: usize = d.parse().map_err(|e| err(format!("bad dim: {e}")))?;
                let i: usize = i.parse().map_err(|e| err(format!("bad index: {e}")))?;
                parents.push((child, (d, i)));
            }
            other => return Err(err(format!("unknown record {other:?}"))),
        }
    }
    let n = dim.ok_or_else(|| Error::MeshFormat("missing dim line".into()))?;
    let complex = SimplicialComplex::from_simplices(n, verts, tops)?;
    Ok(ParsedMesh { complex, parents })
}

pub fn write_mesh(complex: &SimplicialComplex, parents: Option<&[(usize, CellId)]>) -> String {
    let mut out = String::new();
    out.push_str(&format!("dim {}\n", complex.ambient));
    for v in &complex.vertices {
        out.push('v');
        for c in v {
            out.push(' ');
            out.push_str(&rat_to_string(c));
        }
        out.push('\n');
    }
    for t in complex.top_cells() {
        out.push('s');
        for &v in complex.simplex(t) {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    if let Some(ps) = parents {
        for (child, (d, i)) in ps {
            out.push_str(&format!("p {child} {d}:{i}\n"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Fixture meshes used by tests and the CLI mesh generator.
// ---------------------------------------------------------------------------

pub mod fixtures {
    use super::*;
    use crate::linalg::rat;

    /// Reference triangle (0,0), (1,0), (0,1).
    pub fn triangle() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            2,
            vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)], vec![rat(0), rat(1)]],
            vec![vec![0, 1, 2]],
        )
        .unwrap()
    }

    /// Unit square split along the diagonal into two triangles.
    pub fn square() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            2,
            vec![
                vec![rat(0), rat(0)],
                vec![rat(1), rat(0)],
                vec![rat(0), rat(1)],
                vec![rat(1), rat(1)],
            ],
            vec![vec![0, 1, 3], vec![0, 2, 3]],
        )
        .unwrap()
    }

    /// Square ring of 8 triangles between the squares [−2,2]² and [−1,1]².
    /// Cohomology (1, 1, 0).
    pub fn annulus() -> SimplicialComplex {
        let outer = [
            (rat(-2), rat(-2)),
            (rat(2), rat(-2)),
            (rat(2), rat(2)),
            (rat(-2), rat(2)),
        ];
        let inner = [
            (rat(-1), rat(-1)),
            (rat(1), rat(-1)),
            (rat(1), rat(1)),
            (rat(-1), rat(1)),
        ];
        let mut verts = Vec::new();
        for (x, y) in outer.iter().chain(inner.iter()) {
            verts.push(vec![x.clone(), y.clone()]);
        }
        // outer i, outer i+1, inner i and inner i, inner i+1, outer i+1
        let mut tops = Vec::new();
        for i in 0..4 {
            let o0 = i;
            let o1 = (i + 1) % 4;
            let i0 = 4 + i;
            let i1 = 4 + (i + 1) % 4;
            tops.push(vec![o0, o1, i0]);
            tops.push(vec![i0, i1, o1]);
        }
        SimplicialComplex::from_simplices(2, verts, tops).unwrap()
    }

    /// Reference tetrahedron.
    pub fn tetrahedron() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            3,
            vec![
                vec![rat(0), rat(0), rat(0)],
                vec![rat(1), rat(0), rat(0)],
                vec![rat(0), rat(1), rat(0)],
                vec![rat(0), rat(0), rat(1)],
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    /// Two unit tetrahedra glued along the face {0,1,2}.
    pub fn tet_pair() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            3,
            vec![
                vec![rat(0), rat(0), rat(0)],
                vec![rat(1), rat(0), rat(0)],
                vec![rat(0), rat(1), rat(0)],
                vec![rat(0), rat(0), rat(1)],
                vec![rat(1), rat(1), rat(-1)],
            ],
            vec![vec![0, 1, 2, 3], vec![0, 1, 2, 4]],
        )
        .unwrap()
    }

    /// Two regular tetrahedra glued along a shared equilateral face.
    /// All simplices are strictly acute, so the mesh is Worsey-Piper
    /// splittable with circumcenter inpoints.
    pub fn regular_tet_pair() -> SimplicialComplex {
        // Shared face: equilateral triangle with rational coordinates is
        // impossible in the plane, so use the standard trick: vertices of a
        // regular tetrahedron sit on alternating cube corners.
        // T1 = {(0,0,0),(1,1,0),(1,0,1),(0,1,1)} edge length √2.
        // Reflect the apex (0,0,0) across the plane of the other three:
        // plane x+y+z = 2, image (4/3,4/3,4/3).
        SimplicialComplex::from_simplices(
            3,
            vec![
                vec![rat(0), rat(0), rat(0)],
                vec![rat(1), rat(1), rat(0)],
                vec![rat(1), rat(0), rat(1)],
                vec![rat(0), rat(1), rat(1)],
                vec![ratq(4, 3), ratq(4, 3), ratq(4, 3)],
            ],
            vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4]],
        )
        .unwrap()
    }

    /// Regular tetrahedron on alternating cube corners (strictly acute).
    pub fn regular_tet() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            3,
            vec![
                vec![rat(0), rat(0), rat(0)],
                vec![rat(1), rat(1), rat(0)],
                vec![rat(1), rat(0), rat(1)],
                vec![rat(0), rat(1), rat(1)],
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    /// Unit cube split into six tetrahedra around the main diagonal.
    pub fn cube() -> SimplicialComplex {
        let mut verts = Vec::new();
        for z in 0..2i64 {
            for y in 0..2i64 {
                for x in 0..2i64 {
                    verts.push(vec![rat(x), rat(y), rat(z)]);
                }
            }
        }
        let tets = vec![
            vec![0, 1, 3, 7],
            vec![0, 1, 5, 7],
            vec![0, 2, 3, 7],
            vec![0, 2, 6, 7],
            vec![0, 4, 5, 7],
            vec![0, 4, 6, 7],
        ];
        SimplicialComplex::from_simplices(3, verts, tets).unwrap()
    }

    /// Four sectors around the origin with aligned axes: the vertex star
    /// with vertices (±1,0), (0,±1). A singular-vertex configuration.
    pub fn four_sectors() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            2,
            vec![
                vec![rat(0), rat(0)],
                vec![rat(1), rat(0)],
                vec![rat(0), rat(1)],
                vec![rat(-1), rat(0)],
                vec![rat(0), rat(-1)],
            ],
            vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 4], vec![0, 1, 4]],
        )
        .unwrap()
    }

    /// Criss-cross square: both diagonals drawn, center is a singular vertex.
    pub fn crisscross_square() -> SimplicialComplex {
        SimplicialComplex::from_simplices(
            2,
            vec![
                vec![rat(0), rat(0)],
                vec![rat(1), rat(0)],
                vec![rat(1), rat(1)],
                vec![rat(0), rat(1)],
                vec![ratq(1, 2), ratq(1, 2)],
            ],
            vec![vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![0, 3, 4]],
        )
        .unwrap()
    }

    fn ratq(n: i64, d: i64) -> Rat {
        crate::linalg::ratio(n, d)
    }

    /// Uniform refinement of a 2D mesh: each triangle is split into four by
    /// the edge midpoints.
    pub fn refine_uniform_2d(mesh: &SimplicialComplex) -> SimplicialComplex {
        assert_eq!(mesh.ambient, 2);
        let mut verts = mesh.vertices.clone();
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec<Rat>>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = mid.get(&key) {
                return m;
            }
            let two = rat(2);
            let p: Vec<Rat> = verts[a].iter().zip(&verts[b]).map(|(x, y)| (x + y) / &two).collect();
            verts.push(p);
            let id = verts.len() - 1;
            mid.insert(key, id);
            id
        };
        let mut tops = Vec::new();
        for t in mesh.top_cells() {
            let s = mesh.simplex(t);
            let (a, b, c) = (s[0], s[1], s[2]);
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ac = midpoint(a, c, &mut verts);
            tops.push(vec![a, ab, ac]);
            tops.push(vec![b, ab, bc]);
            tops.push(vec![c, ac, bc]);
            tops.push(vec![ab, bc, ac]);
        }
        SimplicialComplex::from_simplices(2, verts, tops).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;

    #[test]
    fn subcells_counts() {
        let tet = fixtures::tetrahedron();
        let cell = (3, 0);
        assert_eq!(tet.subcells(cell, 1).len(), 6);
        let tri = fixtures::triangle();
        assert_eq!(tri.subcells((2, 0), 0).len(), 3);
        let edge = tri.lookup(&[0, 1]).unwrap();
        assert_eq!(tri.subcells(edge, 1), vec![edge]);
    }

    #[test]
    fn orientation_convention() {
        let tri = fixtures::triangle();
        let e01 = tri.lookup(&[0, 1]).unwrap();
        let v1 = tri.lookup(&[1]).unwrap();
        let v0 = tri.lookup(&[0]).unwrap();
        assert_eq!(tri.relative_orientation(e01, v1), 1);
        assert_eq!(tri.relative_orientation(e01, v0), -1);
        let t = (2, 0);
        let e02 = tri.lookup(&[0, 2]).unwrap();
        assert_eq!(tri.relative_orientation(t, e02), -1);
        assert_eq!(tri.relative_orientation(t, v0), 0);
    }

    #[test]
    fn coboundary_squares_to_zero() {
        for mesh in [fixtures::triangle(), fixtures::square(), fixtures::annulus(), fixtures::tet_pair()] {
            assert!(mesh.check_coboundary_squares_to_zero());
        }
    }

    #[test]
    fn coboundary_ranks() {
        // path graph with 2 edges: rank(δ⁰) = 2
        let path = SimplicialComplex::from_simplices(
            1,
            vec![vec![rat(0)], vec![rat(1)], vec![rat(2)]],
            vec![vec![0, 1], vec![1, 2]],
        )
        .unwrap();
        assert_eq!(linalg::rank(&path.coboundary_matrix(0)), 2);
        // single triangle: rank δ⁰ = #vertices − 1 = 2
        let tri = fixtures::triangle();
        assert_eq!(linalg::rank(&tri.coboundary_matrix(0)), 2);
    }

    #[test]
    fn cohomology_fixtures() {
        assert_eq!(fixtures::triangle().cellular_cohomology(), vec![1, 0, 0]);
        assert_eq!(fixtures::annulus().cellular_cohomology(), vec![1, 1, 0]);
        // two disjoint triangles
        let two = SimplicialComplex::from_simplices(
            2,
            vec![
                vec![rat(0), rat(0)],
                vec![rat(1), rat(0)],
                vec![rat(0), rat(1)],
                vec![rat(5), rat(0)],
                vec![rat(6), rat(0)],
                vec![rat(5), rat(1)],
            ],
            vec![vec![0, 1, 2], vec![3, 4, 5]],
        )
        .unwrap();
        assert_eq!(two.cellular_cohomology(), vec![2, 0, 0]);
    }

    #[test]
    fn overlapping_interiors_rejected() {
        let bad = SimplicialComplex::from_simplices(
            2,
            vec![
                vec![rat(0), rat(0)],
                vec![rat(2), rat(0)],
                vec![rat(0), rat(2)],
                vec![rat(1), rat(1)],
                vec![rat(-1), rat(1)],
            ],
            // second triangle pokes into the first
            vec![vec![0, 1, 2], vec![3, 4, 0]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn mesh_roundtrip() {
        let mesh = fixtures::annulus();
        let text = write_mesh(&mesh, None);
        let parsed = read_mesh(&text).unwrap();
        assert_eq!(parsed.complex.vertices, mesh.vertices);
        assert_eq!(parsed.complex.simplices, mesh.simplices);
    }

    #[test]
    fn mesh_comments_and_rationals() {
        let text = "# a mesh\ndim 2\nv 0 0\nv 1/2 0 # midpoint-ish\nv 0 1/3\ns 0 1 2\n";
        let parsed = read_mesh(text).unwrap();
        assert_eq!(parsed.complex.vertices[1][0], linalg::ratio(1, 2));
        assert_eq!(parsed.complex.count(2), 1);
    }

    #[test]
    fn boundary_of_vertex_is_empty() {
        let tri = fixtures::triangle();
        let v = tri.lookup(&[0]).unwrap();
        let b = tri.boundary_complex(v).unwrap();
        assert_eq!(b.count(0), 0);
    }

    #[test]
    fn orientation_double_sum_vanishes() {
        // Σ orient(T,T')·orient(T',T'') = 0 over intermediate faces
        let tet = fixtures::tetrahedron();
        for dim in 2..=3 {
            for i in 0..tet.count(dim) {
                let t = (dim, i);
                for t2 in tet.subcells(t, dim - 2) {
                    let mut sum = 0i32;
                    for t1 in tet.subcells(t, dim - 1) {
                        sum += tet.relative_orientation(t, t1) * tet.relative_orientation(t1, t2);
                    }
                    assert_eq!(sum, 0);
                }
            }
        }
    }
}
