//! Exact rational linear algebra, exact polynomial integration over
//! simplices, and the small dense float solvers used by the Stokes harness.
//!
//! All space constructions, dimension counts and exactness claims go through
//! the rational routines here. Pivoting is deterministic (first nonzero in
//! row-major order) so kernel bases are reproducible across runs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Exact scalar used everywhere outside the float solver harness.
/// `BigRational` keeps values in lowest terms with a positive denominator.
pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `p/q` or a plain integer.
pub fn parse_rat(s: &str) -> Result<Rat> {
    s.parse::<BigRational>()
        .map_err(|e| Error::MeshFormat(format!("bad rational {s:?}: {e}")))
}

/// Canonical text form: `p/q`, or just `p` when the denominator is one.
pub fn rat_to_string(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Dense matrix over the rationals, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl std::fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "RatMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            let row: Vec<String> = (0..self.cols.min(12)).map(|j| rat_to_string(self.get(i, j))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.get_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_columns(cols: Vec<Vec<Rat>>) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        assert!(cols.iter().all(|x| x.len() == r), "ragged columns");
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                *m.get_mut(i, j) = v.clone();
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Rat>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.get_mut(j, i) = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(l, j);
                    if !b.is_zero() {
                        *out.get_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.cols {
                    let a = self.get(i, j);
                    if !a.is_zero() && !v[j].is_zero() {
                        acc += a * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// Stack vertically: `[self; other]`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        RatMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Stack horizontally: `[self, other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.get_mut(i, j) = self.get(i, j).clone();
            }
            for j in 0..other.cols {
                *out.get_mut(i, self.cols + j) = other.get(i, j).clone();
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Rescale a row to coprime integers. Keeps entry growth in check during
    /// elimination without changing row spans.
    fn normalize_row(&mut self, i: usize) {
        use num_integer::Integer;
        let mut lcm = BigInt::one();
        for j in 0..self.cols {
            let d = self.get(i, j).denom();
            lcm = lcm.lcm(d);
        }
        let mut gcd = BigInt::zero();
        for j in 0..self.cols {
            let v = self.get(i, j) * Rat::from_integer(lcm.clone());
            gcd = gcd.gcd(v.numer());
        }
        if gcd.is_zero() {
            return;
        }
        let scale = Rat::new(lcm, gcd);
        for j in 0..self.cols {
            let v = self.get(i, j) * &scale;
            self.set(i, j, v);
        }
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    /// Pivot choice is the first nonzero entry scanning rows top down, so the
    /// result is deterministic.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = {
                let piv = self.get(r, c).clone();
                piv.recip()
            };
            for j in c..self.cols {
                let v = self.get(r, j) * &inv;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let f = self.get(i, c).clone();
                for j in c..self.cols {
                    let v = self.get(i, j) - &f * self.get(r, j);
                    self.set(i, j, v);
                }
                if i > r {
                    // rows without a pivot yet may be rescaled freely
                    self.normalize_row(i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let p = m.rref_in_place();
        (m, p)
    }
}

/// Exact rank over the rationals.
pub fn rank(m: &RatMatrix) -> usize {
    m.rref().1.len()
}

/// Exact kernel basis: columns of the result satisfy `M v = 0` and
/// `rank(M) + cols(result) = cols(M)`. The basis is the reduced echelon
/// kernel basis (free variable set to one, pivot variables solved).
pub fn nullspace(m: &RatMatrix) -> RatMatrix {
    let (r, pivots) = m.rref();
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let free: Vec<usize> = (0..m.cols).filter(|&j| !is_pivot[j]).collect();
    let mut basis = RatMatrix::zeros(m.cols, free.len());
    for (bi, &f) in free.iter().enumerate() {
        *basis.get_mut(f, bi) = Rat::one();
        for (ri, &p) in pivots.iter().enumerate() {
            *basis.get_mut(p, bi) = -r.get(ri, f).clone();
        }
    }
    basis
}

/// Exact nullity (kernel dimension).
pub fn nullity(m: &RatMatrix) -> usize {
    m.cols - rank(m)
}

/// Solve `M x = b` exactly. Returns `None` when the system is inconsistent.
/// Free variables are set to zero, which makes the solution deterministic.
pub fn solve(m: &RatMatrix, b: &[Rat]) -> Option<Vec<Rat>> {
    assert_eq!(m.rows, b.len());
    let bm = RatMatrix::from_columns(vec![b.to_vec()]);
    let aug = m.hstack(&bm);
    let (r, pivots) = aug.rref();
    if pivots.contains(&m.cols) {
        return None; // pivot in the rhs column
    }
    let mut x = vec![Rat::zero(); m.cols];
    for (ri, &p) in pivots.iter().enumerate() {
        x[p] = r.get(ri, m.cols).clone();
    }
    Some(x)
}

/// Solve `M X = B` column by column, sharing one elimination.
/// Returns `None` if any column is inconsistent.
pub fn solve_many(m: &RatMatrix, b: &RatMatrix) -> Option<RatMatrix> {
    assert_eq!(m.rows, b.rows);
    let aug = m.hstack(b);
    let (r, pivots) = aug.rref();
    if pivots.iter().any(|&p| p >= m.cols) {
        return None;
    }
    let mut x = RatMatrix::zeros(m.cols, b.cols);
    for (ri, &p) in pivots.iter().enumerate() {
        for j in 0..b.cols {
            *x.get_mut(p, j) = r.get(ri, m.cols + j).clone();
        }
    }
    Some(x)
}

/// Minimal-coefficient-norm solution of `M x = b` for surjective `M`:
/// `x = Mᵀ (M Mᵀ)⁻¹ b`. Used as the canonical extension lift.
pub fn min_norm_solve(m: &RatMatrix, b: &[Rat]) -> Option<Vec<Rat>> {
    let mt = m.transpose();
    let gram = m.matmul(&mt);
    let w = solve(&gram, b)?;
    let x = mt.mul_vec(&w);
    // Consistency check: the min-norm formula assumes b lies in the range.
    let back = m.mul_vec(&x);
    if back.iter().zip(b).all(|(u, v)| u == v) {
        Some(x)
    } else {
        None
    }
}

/// A basis (as columns) for the span of the given columns, chosen
/// deterministically: the first maximal independent subset in column order.
pub fn column_space_basis(m: &RatMatrix) -> Vec<usize> {
    let (_, pivots) = m.rref();
    pivots
}

/// Rank of the span of the union of two column families.
pub fn rank_of_union(a: &RatMatrix, b: &RatMatrix) -> usize {
    rank(&a.hstack(b))
}

/// Do the columns of `sub` all lie in the column span of `space`?
pub fn is_subspace(sub: &RatMatrix, space: &RatMatrix) -> bool {
    solve_many(space, sub).is_some() || {
        // solve_many requires consistency for every column; rank fallback
        rank_of_union(space, sub) == rank(space)
    }
}

/// Rows annihilating the column span of `basis`: a matrix `A` with
/// `A · basis = 0` and `rank(A) = rows(basis) − rank(basis)`.
/// Used to turn "lies in the span of ..." into constraint rows.
pub fn annihilator(basis: &RatMatrix) -> RatMatrix {
    nullspace(&basis.transpose()).transpose()
}

/// Exact integral of the barycentric monomial `λ^α` over an oriented simplex
/// given by its vertex coordinates (ambient dimension = simplex dimension).
///
/// Returns `|T| · d! · Πᵢ αᵢ! / (|α| + d)!` where `|T|` is the signed volume
/// of the simplex in its vertex order and `d` its dimension.
pub fn integrate_monomial(alpha: &[u32], vertices: &[Vec<Rat>]) -> Result<Rat> {
    let d = vertices.len() - 1;
    assert_eq!(alpha.len(), vertices.len(), "multi-index length mismatch");
    let vol = signed_volume(vertices)?;
    let total: u32 = alpha.iter().sum();
    let mut num = factorial(d);
    for &a in alpha {
        num *= factorial(a as usize);
    }
    let den = factorial(total as usize + d);
    Ok(vol * Rat::new(num, den))
}

/// Signed volume of a `d`-simplex in `R^d`: `det[V₁−V₀, …, V_d−V₀] / d!`.
pub fn signed_volume(vertices: &[Vec<Rat>]) -> Result<Rat> {
    let d = vertices.len() - 1;
    for v in vertices {
        if v.len() != d {
            return Err(Error::DegenerateSimplex(format!(
                "simplex with {} vertices needs ambient dimension {}, got {}",
                d + 1,
                d,
                v.len()
            )));
        }
    }
    if d == 0 {
        return Ok(Rat::one());
    }
    let mut m = RatMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            *m.get_mut(i, j) = &vertices[i + 1][j] - &vertices[0][j];
        }
    }
    let det = determinant(&m);
    if det.is_zero() {
        return Err(Error::DegenerateSimplex("zero volume".into()));
    }
    Ok(det / Rat::from_integer(factorial(d)))
}

/// Exact determinant by fraction-normalized elimination.
pub fn determinant(m: &RatMatrix) -> Rat {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut det = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a.get(i, c).is_zero()) else {
            return Rat::zero();
        };
        if p != c {
            for j in 0..n {
                a.data.swap(p * n + j, c * n + j);
            }
            det = -det;
        }
        let piv = a.get(c, c).clone();
        det *= &piv;
        let inv = piv.recip();
        for i in c + 1..n {
            if a.get(i, c).is_zero() {
                continue;
            }
            let f = a.get(i, c) * &inv;
            for j in c..n {
                let v = a.get(i, j) - &f * a.get(c, j);
                a.set(i, j, v);
            }
        }
    }
    det
}

pub fn to_f64(x: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        // Fall back on a scaled division for very large entries.
        let n = x.numer();
        let d = x.denom();
        let shift = (n.bits().max(d.bits()) as i64 - 500).max(0) as u64;
        let nn = (n >> shift).to_f64().unwrap_or(f64::NAN);
        let dd = (d >> shift).to_f64().unwrap_or(f64::NAN);
        nn / dd
    })
}

/// samples `count` rationals with numerators in `[-9, 9]` and denominators in
/// `[1, 9]`; deterministic under a seeded rng.
pub fn random_rats<R: rand::Rng>(rng: &mut R, count: usize) -> Vec<Rat> {
    (0..count)
        .map(|_| {
            let n: i64 = rng.gen_range(-9..=9);
            let d: i64 = rng.gen_range(1..=9);
            ratio(n, d)
        })
        .collect()
}

pub mod floats {
    //! Dense float solvers used only by the Stokes/inf-sup harness.

    use crate::{Error, Result};
    use nalgebra::{DMatrix, DVector};

    /// Cholesky solve of an SPD system.
    pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("matrix not symmetric positive definite".into()))?;
        Ok(chol.solve(b))
    }

    /// Smallest generalized singular value of a divergence operator `B`
    /// measured in the `A`-norm on velocity and the `M`-norm on pressure,
    /// after deflating the given known pressure kernel directions (typically
    /// the constant pressure). Returns `sqrt(λ_min)` of the deflated pencil
    /// `B A⁻¹ Bᵀ q = λ M q`.
    ///
    /// Deflation removes exactly the supplied directions, never
    /// "numerically zero" modes, so a genuinely unstable pair reports its
    /// near-zero value instead of having it silently skipped.
    pub fn smallest_generalized_singular_value(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        m: &DMatrix<f64>,
        pressure_kernel: &[DVector<f64>],
    ) -> Result<f64> {
        let nq = b.nrows();
        assert_eq!(b.ncols(), a.nrows());
        assert_eq!(m.nrows(), nq);
        if b.iter().all(|x| *x == 0.0) {
            return Ok(0.0);
        }
        let chol_a = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("velocity norm matrix not SPD".into()))?;
        // S = B A⁻¹ Bᵀ
        let bt = b.transpose();
        let ainv_bt = chol_a.solve(&bt);
        let s = b * ainv_bt;
        // Whiten by M: M = L Lᵀ, T = L⁻¹ S L⁻ᵀ
        let chol_m = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("pressure norm matrix not SPD".into()))?;
        let l = chol_m.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
        let t = &linv * s * linv.transpose();
        // Orthonormal basis of the complement of the deflated directions.
        let mut dirs: Vec<DVector<f64>> = Vec::new();
        for k in pressure_kernel {
            let mut v = l.transpose() * k;
            for d in &dirs {
                let c = v.dot(d);
                v -= d * c;
            }
            let n = v.norm();
            if n > 1e-12 {
                dirs.push(v / n);
            }
        }
        let basis = complement_basis(nq, &dirs);
        if basis.ncols() == 0 {
            return Ok(0.0);
        }
        let reduced = basis.transpose() * t * &basis;
        let sym = (&reduced + reduced.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let lam = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(lam.max(0.0).sqrt())
    }

    /// Orthonormal basis of the orthogonal complement of `dirs` in `R^n`.
    fn complement_basis(n: usize, dirs: &[DVector<f64>]) -> DMatrix<f64> {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for d in dirs {
                let c = v.dot(d);
                v -= d * c;
            }
            for c0 in &cols {
                let c = v.dot(c0);
                v -= c0 * c;
            }
            let norm = v.norm();
            if norm > 1e-9 {
                cols.push(v / norm);
            }
            if cols.len() == n - dirs.len() {
                break;
            }
        }
        DMatrix::from_columns(&cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn rank_identity_and_zero() {
        assert_eq!(rank(&RatMatrix::identity(2)), 2);
        assert_eq!(rank(&RatMatrix::zeros(3, 5)), 0);
    }

    #[test]
    fn nullspace_identity_empty() {
        let n = nullspace(&RatMatrix::identity(4));
        assert_eq!(n.cols, 0);
    }

    #[test]
    fn nullspace_of_difference_row() {
        let m = RatMatrix::from_rows(vec![vec![rat(1), rat(-1)]]);
        let n = nullspace(&m);
        assert_eq!(n.cols, 1);
        assert_eq!(n.get(0, 0), n.get(1, 0));
        assert!(m.matmul(&n).is_zero());
    }

    #[test]
    fn rank_nullity_sums() {
        let m = RatMatrix::from_rows(vec![
            vec![rat(1), rat(2), rat(3), rat(4)],
            vec![rat(2), rat(4), rat(6), rat(8)],
            vec![rat(0), rat(1), rat(1), rat(0)],
        ]);
        assert_eq!(rank(&m) + nullity(&m), m.cols);
        let n = nullspace(&m);
        assert!(m.matmul(&n).is_zero());
    }

    #[test]
    fn integrate_monomials_on_reference_cells() {
        // unit triangle
        let tri = vec![
            vec![rat(0), rat(0)],
            vec![rat(1), rat(0)],
            vec![rat(0), rat(1)],
        ];
        assert_eq!(integrate_monomial(&[0, 0, 0], &tri).unwrap(), ratio(1, 2));
        // ∫ λ0 λ1 over the unit triangle = 1/24 by the double integral
        assert_eq!(integrate_monomial(&[1, 1, 0], &tri).unwrap(), ratio(1, 24));
        // unit interval, ∫₀¹ (1−x)² dx  = 1/3
        let seg = vec![vec![rat(0)], vec![rat(1)]];
        assert_eq!(integrate_monomial(&[2, 0], &seg).unwrap(), ratio(1, 3));
    }

    #[test]
    fn degenerate_simplex_rejected() {
        let bad = vec![
            vec![rat(0), rat(0)],
            vec![rat(1), rat(1)],
            vec![rat(2), rat(2)],
        ];
        assert!(integrate_monomial(&[0, 0, 0], &bad).is_err());
    }

    #[test]
    fn min_norm_solve_is_exact() {
        let m = RatMatrix::from_rows(vec![vec![rat(1), rat(1), rat(0)]]);
        let x = min_norm_solve(&m, &[rat(2)]).unwrap();
        assert_eq!(x, vec![rat(1), rat(1), rat(0)]);
    }

    #[test]
    fn gsv_sanity() {
        let id3 = DMatrix::<f64>::identity(3, 3);
        let b0 = DMatrix::<f64>::zeros(3, 3);
        let v = floats::smallest_generalized_singular_value(&id3, &b0, &id3, &[]).unwrap();
        assert_eq!(v, 0.0);
        let v1 = floats::smallest_generalized_singular_value(&id3, &id3, &id3, &[]).unwrap();
        assert!((v1 - 1.0).abs() < 1e-12);
        // deflating the constant direction keeps the identity's value at 1
        let ones = DVector::from_element(3, 1.0);
        let v2 = floats::smallest_generalized_singular_value(&id3, &id3, &id3, &[ones]).unwrap();
        assert!((v2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = RatMatrix::from_rows(vec![
            vec![rat(2), rat(1), rat(0)],
            vec![rat(1), rat(3), rat(1)],
            vec![rat(0), rat(1), rat(4)],
        ]);
        // 2(12-1) - 1(4-0) = 18
        assert_eq!(determinant(&m), rat(18));
    }

    #[test]
    fn annihilator_kills_span() {
        let basis = RatMatrix::from_columns(vec![
            vec![rat(1), rat(2), rat(0)],
            vec![rat(0), rat(1), rat(1)],
        ]);
        let ann = annihilator(&basis);
        assert_eq!(ann.rows, 1);
        assert!(ann.matmul(&basis).is_zero());
    }
}
