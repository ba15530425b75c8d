//! Barycentric monomial arithmetic. Polynomials on a d-simplex are stored in
//! the homogeneous basis `λ^α` with `|α|` equal to the declared degree; since
//! the barycentric coordinates sum to one, homogenizing lower-degree terms by
//! powers of `Σλ` makes coefficient vectors canonical.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::linalg::{binomial, Rat};

/// Exponent tuple over the barycentric coordinates of a cell; length is the
/// number of vertices (dim+1).
pub type MultiIdx = Vec<u32>;

/// Scalar polynomial in homogeneous barycentric form.
pub type Poly = BTreeMap<MultiIdx, Rat>;

pub fn deg(alpha: &MultiIdx) -> u32 {
    alpha.iter().sum()
}

/// All multi-indices of length `nvars` and total degree exactly `d`,
/// lexicographic.
pub fn monomials(nvars: usize, d: u32) -> Vec<MultiIdx> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(out: &mut Vec<MultiIdx>, cur: &mut MultiIdx, pos: usize, left: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            cur[pos] = 0;
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(out, cur, pos + 1, left - v);
            cur[pos] = 0;
        }
    }
    if nvars == 0 {
        return out;
    }
    rec(&mut out, &mut cur, 0, d);
    out
}

pub fn poly_add(a: &mut Poly, b: &Poly) {
    for (m, c) in b {
        add_term(a, m.clone(), c.clone());
    }
}

pub fn add_term(p: &mut Poly, m: MultiIdx, c: Rat) {
    if c.is_zero() {
        return;
    }
    let entry = p.entry(m).or_insert_with(Rat::zero);
    *entry += c;
    // keep the map sparse
    if entry.is_zero() {
        // cheap way to drop: recollect lazily; callers tolerate zeros
    }
}

pub fn poly_scale(p: &Poly, s: &Rat) -> Poly {
    if s.is_zero() {
        return Poly::new();
    }
    p.iter().map(|(m, c)| (m.clone(), c * s)).collect()
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ma, ca) in a {
        if ca.is_zero() {
            continue;
        }
        for (mb, cb) in b {
            if cb.is_zero() {
                continue;
            }
            let m: MultiIdx = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            add_term(&mut out, m, ca * cb);
        }
    }
    out
}

/// Multiply by the single barycentric variable `λ_i`.
pub fn poly_mul_var(p: &Poly, i: usize) -> Poly {
    p.iter()
        .map(|(m, c)| {
            let mut m2 = m.clone();
            m2[i] += 1;
            (m2, c.clone())
        })
        .collect()
}

/// Homogenize to total degree `target` by multiplying each term with
/// `(Σ λ_i)^(target − deg)` and expanding.
pub fn homogenize(p: &Poly, nvars: usize, target: u32) -> Poly {
    let mut out = Poly::new();
    for (m, c) in p {
        if c.is_zero() {
            continue;
        }
        let d = deg(m);
        assert!(d <= target, "cannot homogenize degree {d} down to {target}");
        let extra = target - d;
        if extra == 0 {
            add_term(&mut out, m.clone(), c.clone());
            continue;
        }
        for beta in monomials(nvars, extra) {
            let mut coef = Rat::one();
            // multinomial coefficient extra! / Π beta_i!
            let mut rem = extra as usize;
            for &b in &beta {
                coef *= Rat::from_integer(binomial(rem, b as usize));
                rem -= b as usize;
            }
            let m2: MultiIdx = m.iter().zip(&beta).map(|(x, y)| x + y).collect();
            add_term(&mut out, m2, c * &coef);
        }
    }
    drop_zeros(&mut out);
    out
}

pub fn drop_zeros(p: &mut Poly) {
    p.retain(|_, c| !c.is_zero());
}

/// Inverse of `homogenize`: express a homogeneous degree-`from` polynomial
/// at the lower degree `target`, or `None` when it does not lie in that
/// space. Solves the exact linear system of the homogenization map.
pub fn dehomogenize(p: &Poly, nvars: usize, from: u32, target: u32) -> Option<Poly> {
    use crate::linalg::{self, RatMatrix};
    assert!(target <= from);
    if target == from {
        return Some(p.clone());
    }
    let mut high = monomials(nvars, from);
    high.sort_unstable();
    let mut low = monomials(nvars, target);
    low.sort_unstable();
    let hpos: BTreeMap<&MultiIdx, usize> = high.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut mat = RatMatrix::zeros(high.len(), low.len());
    for (j, m) in low.iter().enumerate() {
        let hm = homogenize(&[(m.clone(), Rat::one())].into_iter().collect(), nvars, from);
        for (hmono, c) in hm {
            *mat.get_mut(hpos[&hmono], j) = c;
        }
    }
    let mut b = vec![Rat::zero(); high.len()];
    for (m, c) in p {
        if !c.is_zero() {
            b[hpos[m]] = c.clone();
        }
    }
    let x = linalg::solve(&mat, &b)?;
    // verify consistency (solve zero-fills free variables)
    let back = mat.mul_vec(&x);
    if back != b {
        return None;
    }
    let mut out = Poly::new();
    for (j, c) in x.into_iter().enumerate() {
        if !c.is_zero() {
            out.insert(low[j].clone(), c);
        }
    }
    Some(out)
}

/// Evaluate at given barycentric coordinates.
pub fn poly_eval(p: &Poly, lambda: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (m, c) in p {
        if c.is_zero() {
            continue;
        }
        let mut term = c.clone();
        for (i, &e) in m.iter().enumerate() {
            for _ in 0..e {
                term *= &lambda[i];
            }
        }
        acc += term;
    }
    acc
}

/// A linear form `Σ_i coefs[i] · λ_i` as a degree-1 polynomial.
pub fn linear_form(coefs: &[Rat]) -> Poly {
    let n = coefs.len();
    let mut p = Poly::new();
    for (i, c) in coefs.iter().enumerate() {
        if !c.is_zero() {
            let mut m = vec![0u32; n];
            m[i] = 1;
            add_term(&mut p, m, c.clone());
        }
    }
    p
}

/// Power of a polynomial.
pub fn poly_pow(p: &Poly, e: u32, nvars: usize) -> Poly {
    let mut acc: Poly = [(vec![0u32; nvars], Rat::one())].into_iter().collect();
    for _ in 0..e {
        acc = poly_mul(&acc, p);
    }
    acc
}

/// Re-express a polynomial given in the barycentric coordinates of a coarse
/// cell in the barycentric coordinates of a finer cell, where `transfer[i]`
/// is the affine expansion of the i-th coarse coordinate in the fine ones
/// (i.e. coarse λ_i evaluated at the fine cell's vertices).
///
/// `transfer` is a (coarse nvars) × (fine nvars) matrix of rationals.
pub fn compose_affine(p: &Poly, transfer: &[Vec<Rat>]) -> Poly {
    let fine_nvars = transfer.first().map_or(0, |r| r.len());
    let mut out = Poly::new();
    for (m, c) in p {
        if c.is_zero() {
            continue;
        }
        let mut term: Poly = [(vec![0u32; fine_nvars], c.clone())].into_iter().collect();
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let lin = linear_form(&transfer[i]);
            let pw = poly_pow(&lin, e, fine_nvars);
            term = poly_mul(&term, &pw);
        }
        poly_add(&mut out, &term);
    }
    drop_zeros(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio};

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(3, 2).len(), 6); // C(2+2,2)
        assert_eq!(monomials(4, 1).len(), 4);
        assert_eq!(monomials(2, 0).len(), 1);
    }

    #[test]
    fn homogenize_constant_on_triangle() {
        // 1 = (λ0+λ1+λ2)² expands to all degree-2 monomials with multinomials
        let one: Poly = [(vec![0, 0, 0], rat(1))].into_iter().collect();
        let h = homogenize(&one, 3, 2);
        assert_eq!(h.get(&vec![2, 0, 0]), Some(&rat(1)));
        assert_eq!(h.get(&vec![1, 1, 0]), Some(&rat(2)));
        // evaluates to 1 anywhere on the simplex
        let l = vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)];
        assert_eq!(poly_eval(&h, &l), rat(1));
    }

    #[test]
    fn compose_affine_identity() {
        let p: Poly = [(vec![2, 1], rat(3))].into_iter().collect();
        let id = vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]];
        assert_eq!(compose_affine(&p, &id), p);
    }
}
