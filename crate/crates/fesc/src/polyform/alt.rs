//! Alternating algebra on a coordinate frame: basis indices, wedge products,
//! contractions and the pullback action of linear maps.

use num_traits::Zero;

use crate::linalg::Rat;

/// Basis index of `Alt^k`: a strictly increasing tuple of axis indices.
pub type AltIdx = Vec<u8>;

/// All sorted k-subsets of `{0, .., n−1}` in lexicographic order.
pub fn alt_basis(n: usize, k: usize) -> Vec<AltIdx> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<u8> = (0..k as u8).collect();
    loop {
        out.push(idx.clone());
        if k == 0 {
            return out;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] as usize != i + n - k {
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

pub fn alt_dim(n: usize, k: usize) -> usize {
    if k > n {
        0
    } else {
        num_traits::ToPrimitive::to_usize(&crate::linalg::binomial(n, k)).unwrap()
    }
}

/// Wedge of two basis forms: `e^I ∧ e^J = sign · e^{sorted(I∪J)}`,
/// or `None` when indices repeat.
pub fn wedge(i: &AltIdx, j: &AltIdx) -> Option<(i32, AltIdx)> {
    let mut merged: Vec<u8> = i.iter().chain(j.iter()).copied().collect();
    // count inversions of the concatenation to get the sort sign
    let mut sign = 1i32;
    for a in 0..merged.len() {
        for b in a + 1..merged.len() {
            match merged[a].cmp(&merged[b]) {
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    merged.sort_unstable();
    Some((sign, merged))
}

/// Contraction of a basis form with a constant vector:
/// `e^I ⌞ v = Σ_t (−1)^{t−1} v_{i_t} e^{I \ i_t}`.
pub fn contract_basis(i: &AltIdx, v: &[Rat]) -> Vec<(Rat, AltIdx)> {
    let mut out = Vec::new();
    for (t, &axis) in i.iter().enumerate() {
        let coef = &v[axis as usize];
        if coef.is_zero() {
            continue;
        }
        let mut rest = i.clone();
        rest.remove(t);
        let signed = if t % 2 == 0 { coef.clone() } else { -coef.clone() };
        out.push((signed, rest));
    }
    out
}

/// Pullback of a basis form under the linear map sending the frame basis
/// vector `f_j` to the column `cols[j]`:
/// `(Φ* e^I)(f_{j1},…,f_{jk}) = det(cols[J] restricted to rows I)`.
/// Returns coefficients against the target frame of dimension `cols.len()`.
pub fn pullback_basis(i: &AltIdx, cols: &[Vec<Rat>]) -> Vec<(Rat, AltIdx)> {
    let k = i.len();
    let m = cols.len();
    let mut out = Vec::new();
    for j in alt_basis(m, k) {
        // minor determinant with rows i, columns j
        let mut minor = crate::linalg::RatMatrix::zeros(k, k);
        for (a, &ra) in i.iter().enumerate() {
            for (b, &cb) in j.iter().enumerate() {
                *minor.get_mut(a, b) = cols[cb as usize][ra as usize].clone();
            }
        }
        let det = crate::linalg::determinant(&minor);
        if !det.is_zero() {
            out.push((det, j));
        }
    }
    out
}

/// Euclidean pairing of `Alt^k` coefficients: basis forms are orthonormal.
pub fn alt_pairing(a: &[(Rat, AltIdx)], b: &[(Rat, AltIdx)]) -> Rat {
    let mut acc = Rat::zero();
    for (ca, ia) in a {
        for (cb, ib) in b {
            if ia == ib {
                acc += ca * cb;
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;

    #[test]
    fn basis_enumeration() {
        assert_eq!(alt_basis(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(alt_basis(2, 0), vec![Vec::<u8>::new()]);
        assert_eq!(alt_dim(4, 2), 6);
    }

    #[test]
    fn wedge_signs() {
        assert_eq!(wedge(&vec![1], &vec![0]), Some((-1, vec![0, 1])));
        assert_eq!(wedge(&vec![0], &vec![1]), Some((1, vec![0, 1])));
        assert_eq!(wedge(&vec![0], &vec![0]), None);
        assert_eq!(wedge(&vec![2], &vec![0, 1]), Some((1, vec![0, 1, 2])));
    }

    #[test]
    fn contraction_of_volume_form() {
        // (dx∧dy) ⌞ e₁ = dy
        let v = vec![rat(1), rat(0)];
        let out = contract_basis(&vec![0, 1], &v);
        assert_eq!(out, vec![(rat(1), vec![1])]);
        // (dx∧dy) ⌞ e₂ = −dx
        let v = vec![rat(0), rat(1)];
        let out = contract_basis(&vec![0, 1], &v);
        assert_eq!(out, vec![(rat(-1), vec![0])]);
    }

    #[test]
    fn contraction_lemma_constant_forms() {
        // Σᵢ fᵢ ∧ (u ⌞ eᵢ) = k·u for constant u, over n ≤ 3 and all k ≥ 1
        for n in 1..=3usize {
            for k in 1..=n {
                for u in alt_basis(n, k) {
                    let mut acc: std::collections::BTreeMap<AltIdx, Rat> = Default::default();
                    for axis in 0..n {
                        let mut e = vec![rat(0); n];
                        e[axis] = rat(1);
                        for (c, rest) in contract_basis(&u, &e) {
                            if let Some((s, w)) = wedge(&vec![axis as u8], &rest) {
                                *acc.entry(w).or_insert_with(|| rat(0)) += c * rat(s as i64);
                            }
                        }
                    }
                    let expect = rat(k as i64);
                    assert_eq!(acc.remove(&u), Some(expect));
                    assert!(acc.values().all(|v| v.is_zero()));
                }
            }
        }
    }

    #[test]
    fn pullback_to_line() {
        // pull dy back to the x-axis spanned by e₁ → 0; pull dx → ds
        let cols = vec![vec![rat(1), rat(0)]]; // the tangent vector
        assert!(pullback_basis(&vec![1], &cols).is_empty());
        assert_eq!(pullback_basis(&vec![0], &cols), vec![(rat(1), vec![0])]);
    }
}
