//! Root systems of the simple types in simple-root coordinates, and the
//! Weyl group acting on them.

use crate::error::{Error, Result};
use crate::qmath::{imat_identity, imat_mul, imat_vec, IMat, Q};
use num::{BigInt, Integer, Zero};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Some(Family::A),
            "B" => Some(Family::B),
            "C" => Some(Family::C),
            "D" => Some(Family::D),
            "E" => Some(Family::E),
            "F" => Some(Family::F),
            "G" => Some(Family::G),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Family::A => 'A',
            Family::B => 'B',
            Family::C => 'C',
            Family::D => 'D',
            Family::E => 'E',
            Family::F => 'F',
            Family::G => 'G',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimpleType {
    pub family: Family,
    pub rank: usize,
}

impl SimpleType {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let ok = match family {
            Family::A => rank >= 1,
            Family::B | Family::C => rank >= 2,
            Family::D => rank >= 4,
            Family::E => (6..=8).contains(&rank),
            Family::F => rank == 4,
            Family::G => rank == 2,
        };
        if ok {
            Ok(SimpleType { family, rank })
        } else {
            Err(Error::InvalidType(format!("{}{}", family.letter(), rank)))
        }
    }

    /// All valid types of rank at most `max_rank`, in a fixed order.
    pub fn all_up_to(max_rank: usize) -> Vec<SimpleType> {
        let mut out = Vec::new();
        for fam in [Family::A, Family::B, Family::C, Family::D, Family::E, Family::F, Family::G] {
            for r in 1..=max_rank {
                if let Ok(t) = SimpleType::new(fam, r) {
                    out.push(t);
                }
            }
        }
        out
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family.letter(), self.rank)
    }
}

fn cartan_matrix(t: SimpleType) -> IMat {
    let r = t.rank;
    let mut a = vec![vec![0i64; r]; r];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 2;
    }
    let link = |a: &mut IMat, i: usize, j: usize| {
        a[i][j] = -1;
        a[j][i] = -1;
    };
    match t.family {
        Family::A => {
            for i in 0..r.saturating_sub(1) {
                link(&mut a, i, i + 1);
            }
        }
        Family::B => {
            for i in 0..r - 1 {
                link(&mut a, i, i + 1);
            }
            a[r - 1][r - 2] = -2;
        }
        Family::C => {
            for i in 0..r - 1 {
                link(&mut a, i, i + 1);
            }
            a[r - 2][r - 1] = -2;
        }
        Family::D => {
            for i in 0..r - 2 {
                link(&mut a, i, i + 1);
            }
            link(&mut a, r - 1, r - 3);
        }
        Family::E => {
            for i in 0..r - 2 {
                link(&mut a, i, i + 1);
            }
            link(&mut a, r - 1, r - 4);
        }
        Family::F => {
            link(&mut a, 0, 1);
            link(&mut a, 1, 2);
            link(&mut a, 2, 3);
            a[2][1] = -2;
        }
        Family::G => {
            a[0][1] = -3;
            a[1][0] = -1;
        }
    }
    a
}

/// d_i with d_i A[i][j] symmetric, shortest roots getting d = 1.
fn symmetrizer(a: &IMat) -> Vec<i64> {
    let r = a.len();
    let mut d: Vec<Option<num::Rational64>> = vec![None; r];
    d[0] = Some(num::Rational64::from_integer(1));
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..r {
            for j in 0..r {
                if i != j && a[i][j] != 0 {
                    if let (Some(di), None) = (d[i], d[j]) {
                        d[j] = Some(di * num::Rational64::new(a[i][j], a[j][i]));
                        changed = true;
                    }
                }
            }
        }
    }
    let d: Vec<num::Rational64> = d.into_iter().map(|x| x.expect("connected diagram")).collect();
    let l = d.iter().fold(1i64, |acc, x| acc.lcm(x.denom()));
    let ints: Vec<i64> = d.iter().map(|x| (x * l).to_integer()).collect();
    let g = ints.iter().fold(0i64, |acc, x| acc.gcd(x));
    ints.into_iter().map(|x| x / g).collect()
}

#[derive(Clone, Debug)]
pub struct RootSystem {
    pub ty: SimpleType,
    /// A[i][j] = <alpha_j, alpha_i^vee>.
    pub cartan: IMat,
    pub symmetrizer: Vec<i64>,
    /// (alpha_i, alpha_j), short roots of squared length 2.
    pub gram: IMat,
    /// Positive roots (by height, simple roots first), then their negatives
    /// in the same order.
    pub roots: Vec<Vec<i64>>,
    pub npos: usize,
    index: HashMap<Vec<i64>, usize>,
}

#[derive(Serialize)]
pub struct RootSystemJson {
    pub family: String,
    pub rank: usize,
    pub cartan: IMat,
    pub roots: Vec<Vec<i64>>,
    pub gram_num: IMat,
    pub gram_den: IMat,
}

pub fn build_root_system(ty: SimpleType) -> Result<RootSystem> {
    let ty = SimpleType::new(ty.family, ty.rank)?;
    let r = ty.rank;
    let cartan = cartan_matrix(ty);
    let d = symmetrizer(&cartan);
    let gram: IMat = (0..r).map(|i| (0..r).map(|j| d[i] * cartan[i][j]).collect()).collect();
    let simple: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect();
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut frontier = simple.clone();
    for s in &simple {
        seen.insert(s.clone(), ());
    }
    while let Some(b) = frontier.pop() {
        for i in 0..r {
            let p: i64 = (0..r).map(|j| b[j] * cartan[i][j]).sum();
            let mut c = b.clone();
            c[i] -= p;
            if !seen.contains_key(&c) {
                seen.insert(c.clone(), ());
                frontier.push(c);
            }
        }
    }
    let mut pos: Vec<Vec<i64>> = seen.keys().filter(|v| v.iter().all(|&x| x >= 0)).cloned().collect();
    pos.sort_by(|a, b| {
        let ha: i64 = a.iter().sum();
        let hb: i64 = b.iter().sum();
        ha.cmp(&hb).then_with(|| b.cmp(a))
    });
    let npos = pos.len();
    assert_eq!(seen.len(), 2 * npos, "root closure not symmetric");
    let mut roots = pos.clone();
    roots.extend(pos.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
    let index = roots.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    Ok(RootSystem { ty, cartan, symmetrizer: d, gram, roots, npos, index })
}

impl RootSystem {
    pub fn rank(&self) -> usize {
        self.ty.rank
    }

    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn index_of(&self, v: &[i64]) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn root_index(&self, v: &[i64]) -> Result<usize> {
        self.index_of(v).ok_or_else(|| Error::NotARoot(v.to_vec()))
    }

    pub fn neg(&self, i: usize) -> usize {
        if i < self.npos {
            i + self.npos
        } else {
            i - self.npos
        }
    }

    /// Positivity in the standard positive system of the simple-root basis.
    pub fn is_std_positive(&self, i: usize) -> bool {
        i < self.npos
    }

    pub fn height(&self, i: usize) -> i64 {
        self.roots[i].iter().sum()
    }

    pub fn simple_index(&self, j: usize) -> usize {
        j
    }

    pub fn inner(&self, a: &[i64], b: &[i64]) -> i64 {
        let r = self.rank();
        let mut s = 0;
        for i in 0..r {
            if a[i] == 0 {
                continue;
            }
            for j in 0..r {
                s += a[i] * self.gram[i][j] * b[j];
            }
        }
        s
    }

    pub fn inner_f64(&self, a: &[f64], b: &[i64]) -> f64 {
        let r = self.rank();
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += a[i] * self.gram[i][j] as f64 * b[j] as f64;
            }
        }
        s
    }

    pub fn inner_ff(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.rank();
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += a[i] * self.gram[i][j] as f64 * b[j];
            }
        }
        s
    }

    pub fn inner_q(&self, a: &[Q], b: &[Q]) -> Q {
        let r = self.rank();
        let mut s = Q::zero();
        for i in 0..r {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..r {
                if self.gram[i][j] != 0 && !b[j].is_zero() {
                    s += &a[i] * Q::from_integer(BigInt::from(self.gram[i][j])) * &b[j];
                }
            }
        }
        s
    }

    pub fn norm2(&self, i: usize) -> i64 {
        self.inner(&self.roots[i], &self.roots[i])
    }

    /// <v, gamma^vee> = 2(v, gamma)/(gamma, gamma) for integer v; integral when v is in the root lattice.
    pub fn pairing(&self, v: &[i64], gamma: usize) -> i64 {
        let g = &self.roots[gamma];
        let num = 2 * self.inner(v, g);
        let den = self.inner(g, g);
        assert!(num % den == 0, "non-integral pairing");
        num / den
    }

    /// <alpha, alpha_i^vee> for simple alpha_i.
    pub fn simple_pairing(&self, v: &[i64], i: usize) -> i64 {
        (0..self.rank()).map(|j| v[j] * self.cartan[i][j]).sum()
    }

    pub fn reflect(&self, gamma: &[i64], v: &[Q]) -> Result<Vec<Q>> {
        let gi = self.root_index(gamma)?;
        let g: Vec<Q> = self.roots[gi].iter().map(|&x| Q::from_integer(BigInt::from(x))).collect();
        let c = Q::from_integer(BigInt::from(2)) * self.inner_q(v, &g) / self.inner_q(&g, &g);
        Ok(v.iter().zip(&g).map(|(a, b)| a - &c * b).collect())
    }

    pub fn reflection_matrix(&self, gamma: usize) -> IMat {
        let r = self.rank();
        let g = &self.roots[gamma];
        let mut m = imat_identity(r);
        for j in 0..r {
            let mut e = vec![0; r];
            e[j] = 1;
            let p = self.pairing(&e, gamma);
            for i in 0..r {
                m[i][j] -= p * g[i];
            }
        }
        m
    }

    /// alpha^vee in the basis of simple coroots.
    pub fn coroot_coeffs(&self, i: usize) -> Vec<i64> {
        let a = &self.roots[i];
        let n = self.norm2(i);
        (0..self.rank())
            .map(|j| {
                let c = a[j] * self.gram[j][j];
                assert!(c % n == 0);
                c / n
            })
            .collect()
    }

    pub fn add(&self, i: usize, j: usize) -> Option<usize> {
        let v: Vec<i64> = self.roots[i].iter().zip(&self.roots[j]).map(|(a, b)| a + b).collect();
        self.index_of(&v)
    }

    pub fn highest_root_height(&self) -> i64 {
        (0..self.npos).map(|i| self.height(i)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> RootSystemJson {
        let r = self.rank();
        RootSystemJson {
            family: self.ty.family.letter().to_string(),
            rank: r,
            cartan: self.cartan.clone(),
            roots: self.roots.clone(),
            gram_num: self.gram.clone(),
            gram_den: vec![vec![1; r]; r],
        }
    }

    /// Checks Delta = P u -P and closure; `pos[i]` marks membership.
    pub fn check_positive_system(&self, pos: &[bool]) -> Result<()> {
        let n = self.num_roots();
        for i in 0..n {
            if pos[i] == pos[self.neg(i)] {
                return Err(Error::InvalidPositiveSystem(format!("root {i} and its negative on the same side")));
            }
        }
        for i in 0..n {
            if !pos[i] {
                continue;
            }
            for j in 0..n {
                if pos[j] {
                    if let Some(k) = self.add(i, j) {
                        if !pos[k] {
                            return Err(Error::InvalidPositiveSystem(format!("{i}+{j} leaves the set")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Indecomposable elements of a positive system.
    pub fn simple_system(&self, pos: &[bool]) -> Result<Vec<usize>> {
        self.check_positive_system(pos)?;
        let n = self.num_roots();
        let mut decomposable = vec![false; n];
        for i in 0..n {
            if !pos[i] {
                continue;
            }
            for j in 0..n {
                if pos[j] {
                    if let Some(k) = self.add(i, j) {
                        decomposable[k] = true;
                    }
                }
            }
        }
        let simple: Vec<usize> = (0..n).filter(|&i| pos[i] && !decomposable[i]).collect();
        if simple.len() != self.rank() {
            return Err(Error::InvalidSimpleSystem(format!("{} indecomposables", simple.len())));
        }
        Ok(simple)
    }

    pub fn standard_positive(&self) -> Vec<bool> {
        (0..self.num_roots()).map(|i| i < self.npos).collect()
    }
}

/// Weyl group element: reflection word, matrix on root coordinates, root permutation, order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    pub word: Vec<usize>,
    pub matrix: IMat,
    pub perm: Vec<usize>,
    pub order: u32,
}

impl WeylElement {
    fn from_matrix(rs: &RootSystem, word: Vec<usize>, matrix: IMat) -> WeylElement {
        let perm = rs
            .roots
            .iter()
            .map(|v| rs.index_of(&imat_vec(&matrix, v)).expect("Weyl matrix must permute roots"))
            .collect();
        let id = imat_identity(rs.rank());
        let mut p = matrix.clone();
        let mut order = 1;
        while p != id {
            p = imat_mul(&p, &matrix);
            order += 1;
        }
        WeylElement { word, matrix, perm, order }
    }

    pub fn identity(rs: &RootSystem) -> WeylElement {
        Self::from_matrix(rs, vec![], imat_identity(rs.rank()))
    }

    pub fn apply(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn inverse(&self, rs: &RootSystem) -> WeylElement {
        let word = self.word.iter().rev().copied().collect();
        // W is orthogonal for the gram form, so M^-1 = G^-1 M^T G; easier to invert the permutation.
        let r = rs.rank();
        let mut inv = vec![vec![0i64; r]; r];
        let mut pinv = vec![0usize; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            pinv[j] = i;
        }
        for j in 0..r {
            let col = &rs.roots[pinv[j]];
            for i in 0..r {
                inv[i][j] = col[i];
            }
        }
        Self::from_matrix(rs, word, inv)
    }

    pub fn compose(&self, rs: &RootSystem, other: &WeylElement) -> WeylElement {
        let mut word = self.word.clone();
        word.extend(&other.word);
        Self::from_matrix(rs, word, imat_mul(&self.matrix, &other.matrix))
    }

    pub fn is_identity(&self) -> bool {
        self.order == 1
    }

    /// Preserves the gram form exactly.
    pub fn preserves_gram(&self, rs: &RootSystem) -> bool {
        let r = rs.rank();
        for i in 0..r {
            for j in 0..r {
                let mut s = 0;
                for a in 0..r {
                    for b in 0..r {
                        s += self.matrix[a][i] * rs.gram[a][b] * self.matrix[b][j];
                    }
                }
                if s != rs.gram[i][j] {
                    return false;
                }
            }
        }
        true
    }
}

pub fn weyl_from_word(rs: &RootSystem, word: &[usize]) -> WeylElement {
    let mut m = imat_identity(rs.rank());
    for &g in word {
        m = imat_mul(&m, &rs.reflection_matrix(g));
    }
    WeylElement::from_matrix(rs, word.to_vec(), m)
}

pub fn weyl_from_roots(rs: &RootSystem, word: &[Vec<i64>]) -> Result<WeylElement> {
    let idx = word.iter().map(|v| rs.root_index(v)).collect::<Result<Vec<_>>>()?;
    Ok(weyl_from_word(rs, &idx))
}

/// Inversion count |{a in P : w(a) not in P}|.
pub fn length(rs: &RootSystem, w: &WeylElement, positive: &[bool]) -> Result<usize> {
    rs.check_positive_system(positive)?;
    Ok((0..rs.num_roots()).filter(|&i| positive[i] && !positive[w.apply(i)]).count())
}

/// Reduced word as positions into `simple`: w = s_{simple[k_1]} ... s_{simple[k_L]}.
pub fn reduced_word(rs: &RootSystem, w: &WeylElement, simple: &[usize]) -> Result<Vec<usize>> {
    let n = rs.num_roots();
    if simple.len() != rs.rank() {
        return Err(Error::InvalidSimpleSystem("wrong size".into()));
    }
    // recover the positive system spanned by `simple`
    let pos = positive_from_simple(rs, simple)?;
    let mut cur = w.clone();
    let mut rev = Vec::new();
    let max_steps = n;
    while !cur.is_identity() {
        let Some(k) = simple.iter().position(|&b| !pos[cur.apply(b)]) else {
            return Err(Error::InvalidSimpleSystem("no descent found".into()));
        };
        rev.push(k);
        cur = cur.compose(rs, &weyl_from_word(rs, &[simple[k]]));
        if rev.len() > max_steps {
            return Err(Error::InvalidSimpleSystem("descent did not terminate".into()));
        }
    }
    rev.reverse();
    Ok(rev)
}

/// Positive roots as nonnegative integer combinations of `simple`.
pub fn positive_from_simple(rs: &RootSystem, simple: &[usize]) -> Result<Vec<bool>> {
    let coords = simple_coords(rs, simple)?;
    let pos: Vec<bool> = coords.iter().map(|c| c.iter().all(|&x| x >= 0)).collect();
    for (i, c) in coords.iter().enumerate() {
        if !c.iter().all(|&x| x >= 0) && !c.iter().all(|&x| x <= 0) {
            return Err(Error::InvalidSimpleSystem(format!("root {i} has mixed signs")));
        }
    }
    rs.check_positive_system(&pos).map_err(|e| Error::InvalidSimpleSystem(e.to_string()))?;
    Ok(pos)
}

/// Coordinates of every root in the basis `simple` (integral for a simple system).
pub fn simple_coords(rs: &RootSystem, simple: &[usize]) -> Result<Vec<Vec<i64>>> {
    let r = rs.rank();
    let b: IMat = (0..r).map(|i| simple.iter().map(|&s| rs.roots[s][i]).collect()).collect();
    let binv = crate::qmath::imat_inverse_unimodular(&b)
        .ok_or_else(|| Error::InvalidSimpleSystem("basis not unimodular".into()))?;
    Ok(rs.roots.iter().map(|v| imat_vec(&binv, v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::qi;

    fn rs(f: Family, r: usize) -> RootSystem {
        build_root_system(SimpleType::new(f, r).unwrap()).unwrap()
    }

    /// Independent count from Lie theory tables.
    fn classical_npos(t: SimpleType) -> usize {
        let r = t.rank;
        match t.family {
            Family::A => r * (r + 1) / 2,
            Family::B | Family::C => r * r,
            Family::D => r * (r - 1),
            Family::E => [36, 63, 120][r - 6],
            Family::F => 24,
            Family::G => 6,
        }
    }

    #[test]
    fn root_counts_match_tables() {
        for t in SimpleType::all_up_to(8) {
            let s = build_root_system(t).unwrap();
            assert_eq!(s.npos, classical_npos(t), "{t}");
            assert_eq!(s.num_roots(), 2 * s.npos);
        }
    }

    #[test]
    fn highest_root_height_is_coxeter_minus_one() {
        let h = |f, r| rs(f, r).highest_root_height();
        assert_eq!(h(Family::A, 5), 5);
        assert_eq!(h(Family::B, 4), 7);
        assert_eq!(h(Family::C, 3), 5);
        assert_eq!(h(Family::D, 5), 7);
        assert_eq!(h(Family::E, 6), 11);
        assert_eq!(h(Family::E, 7), 17);
        assert_eq!(h(Family::E, 8), 29);
        assert_eq!(h(Family::F, 4), 11);
        assert_eq!(h(Family::G, 2), 5);
    }

    #[test]
    fn invalid_types() {
        assert!(SimpleType::new(Family::D, 3).is_err());
        assert!(SimpleType::new(Family::E, 9).is_err());
        assert!(SimpleType::new(Family::G, 3).is_err());
        assert!(SimpleType::new(Family::B, 1).is_err());
    }

    #[test]
    fn a1_and_a2_examples() {
        let a1 = rs(Family::A, 1);
        assert_eq!(a1.roots, vec![vec![1], vec![-1]]);
        let a2 = rs(Family::A, 2);
        assert_eq!(a2.num_roots(), 6);
        let v = a2.reflect(&[1, 0], &[qi(1), qi(0)]).unwrap();
        assert_eq!(v, vec![qi(-1), qi(0)]);
        let v = a2.reflect(&[1, 0], &[qi(0), qi(1)]).unwrap();
        assert_eq!(v, vec![qi(1), qi(1)]);
        assert!(a2.reflect(&[2, 0], &[qi(0), qi(1)]).is_err());
    }

    #[test]
    fn g2_numbering() {
        let g = rs(Family::G, 2);
        assert_eq!(g.num_roots(), 12);
        // alpha_1 short, 3a1+2a2 highest
        assert_eq!(g.norm2(0), 2);
        assert_eq!(g.norm2(1), 6);
        assert!(g.index_of(&[3, 2]).is_some());
        assert!(g.index_of(&[3, 1]).is_some());
        let w = weyl_from_roots(&g, &[vec![3, 1], vec![0, 1]]).unwrap();
        assert_eq!(w.order, 3);
    }

    #[test]
    fn pairings_integral() {
        for t in SimpleType::all_up_to(6) {
            let s = build_root_system(t).unwrap();
            for i in 0..s.num_roots() {
                for j in 0..s.num_roots() {
                    let num = 2 * s.inner(&s.roots[i], &s.roots[j]);
                    assert_eq!(num % s.norm2(j), 0);
                }
            }
        }
    }

    #[test]
    fn coxeter_a2() {
        let a2 = rs(Family::A, 2);
        let w = weyl_from_word(&a2, &[0, 1]);
        assert_eq!(w.order, 3);
        let pos = a2.standard_positive();
        assert_eq!(length(&a2, &w, &pos).unwrap(), 2);
        let w0 = weyl_from_word(&a2, &[0, 1, 0]);
        assert_eq!(length(&a2, &w0, &pos).unwrap(), 3);
        assert_eq!(length(&a2, &WeylElement::identity(&a2), &pos).unwrap(), 0);
    }

    #[test]
    fn reduced_word_of_reflection() {
        let a2 = rs(Family::A, 2);
        let hi = a2.index_of(&[1, 1]).unwrap();
        let w = weyl_from_word(&a2, &[hi]);
        let word = reduced_word(&a2, &w, &[0, 1]).unwrap();
        assert_eq!(word.len(), 3);
        let back = weyl_from_word(&a2, &word.iter().map(|&k| [0, 1][k]).collect::<Vec<_>>());
        assert_eq!(back.matrix, w.matrix);
        assert!(reduced_word(&a2, &WeylElement::identity(&a2), &[0, 1]).unwrap().is_empty());
    }
}
