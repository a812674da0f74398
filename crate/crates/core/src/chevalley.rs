//! Adjoint Chevalley group over Q: structure constants, root subgroups,
//! torus, the normal representative of s, and big-cell factorization.

use crate::error::{Error, Result};
use crate::qmath::{qi, QMatrix, Q};
use crate::rootsys::{reduced_word, RootSystem};
use crate::spectral::SlicePlan;
use num::{One, Signed, Zero};
use serde::Serialize;

/// [e_a, e_-a] = KAPPA a^vee in this basis.
pub const KAPPA: i64 = -1;

#[derive(Clone, Debug)]
pub struct Chevalley {
    pub rs: RootSystem,
    pub dim: usize,
    /// N_{a,b} for every ordered pair of roots, 0 when a + b is not a root.
    nconst: Vec<i64>,
    /// Coefficients of a^vee in the simple coroots.
    pub coroots: Vec<Vec<i64>>,
}

fn diff(rs: &RootSystem, a: usize, b: usize) -> Option<usize> {
    let v: Vec<i64> = rs.roots[a].iter().zip(&rs.roots[b]).map(|(x, y)| x - y).collect();
    rs.index_of(&v)
}

fn string_p(rs: &RootSystem, a: usize, b: usize) -> i64 {
    let mut p = 0;
    let mut v = rs.roots[b].clone();
    loop {
        for (x, y) in v.iter_mut().zip(&rs.roots[a]) {
            *x -= y;
        }
        if rs.index_of(&v).is_none() {
            return p;
        }
        p += 1;
    }
}

/// Structure constants of a Chevalley basis with [e_a, e_-a] = a^vee,
/// built from extraspecial pairs with positive signs.
fn carter_constants(rs: &RootSystem) -> Vec<i64> {
    let n = rs.num_roots();
    let npos = rs.npos;
    let mut nn: Vec<Option<i64>> = vec![None; n * n];
    let nrm = |a: usize| rs.norm2(a);
    let set = |nn: &mut Vec<Option<i64>>, a: usize, b: usize, v: i64| {
        nn[a * n + b] = Some(v);
        nn[b * n + a] = Some(-v);
        nn[rs.neg(a) * n + rs.neg(b)] = Some(-v);
        nn[rs.neg(b) * n + rs.neg(a)] = Some(v);
    };
    fn get(rs: &RootSystem, nn: &[Option<i64>], a: usize, b: usize) -> Q {
        let n = rs.num_roots();
        let Some(c) = rs.add(a, b) else { return Q::zero() };
        if let Some(v) = nn[a * n + b] {
            return qi(v);
        }
        let pa = rs.is_std_positive(a);
        let pb = rs.is_std_positive(b);
        assert!(pa != pb, "same-sign constant requested before it was computed");
        if !pa {
            return -get(rs, nn, b, a);
        }
        // a > 0 > b, c = a + b
        let nc = qi(rs.norm2(c));
        if rs.is_std_positive(c) {
            // N_{a,b}/(c,c) = N_{b,-c}/(a,a)
            nc / qi(rs.norm2(a)) * get(rs, nn, b, rs.neg(c))
        } else {
            // N_{a,b}/(c,c) = N_{-c,a}/(b,b)
            nc / qi(rs.norm2(b)) * get(rs, nn, rs.neg(c), a)
        }
    }
    for xi in 0..npos {
        let pairs: Vec<(usize, usize)> = (0..npos)
            .filter_map(|a| diff(rs, xi, a).filter(|&b| b < npos && a < b).map(|b| (a, b)))
            .collect();
        let Some(&(a1, b1)) = pairs.first() else { continue };
        let n1 = string_p(rs, a1, b1) + 1;
        set(&mut nn, a1, b1, n1);
        for &(a, b) in &pairs[1..] {
            let mut t = Q::zero();
            if let Some(x) = diff(rs, b, a1) {
                t += get(rs, &nn, b, rs.neg(a1)) * get(rs, &nn, a, rs.neg(b1)) / qi(nrm(x));
            }
            if let Some(x) = diff(rs, a, a1) {
                t += get(rs, &nn, rs.neg(a1), a) * get(rs, &nn, b, rs.neg(b1)) / qi(nrm(x));
            }
            let v = qi(nrm(xi)) / qi(n1) * t;
            assert!(v.is_integer(), "non-integral structure constant");
            set(&mut nn, a, b, v.to_integer().try_into().unwrap());
        }
    }
    let mut out = vec![0i64; n * n];
    for a in 0..n {
        for b in 0..n {
            if rs.add(a, b).is_some() {
                out[a * n + b] = get(rs, &nn, a, b).to_integer().try_into().unwrap();
            }
        }
    }
    out
}

/// One step of a generator word.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Gen {
    /// x_root(t)
    #[serde(rename = "x")]
    X {
        root: usize,
        #[serde(serialize_with = "ser_q")]
        t: Q,
    },
    /// Adjoint torus element with the given values on the simple roots.
    #[serde(rename = "torus")]
    Torus {
        #[serde(serialize_with = "ser_qvec")]
        c: Vec<Q>,
    },
    /// Power of the normal representative.
    #[serde(rename = "s")]
    S { power: i64 },
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::qmath::q_string(q))
}

fn ser_qvec<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for q in v {
        seq.serialize_element(&crate::qmath::q_string(q))?;
    }
    seq.end()
}

impl Gen {
    pub fn inverse(&self) -> Gen {
        match self {
            Gen::X { root, t } => Gen::X { root: *root, t: -t.clone() },
            Gen::Torus { c } => Gen::Torus { c: c.iter().map(|x| x.recip()).collect() },
            Gen::S { power } => Gen::S { power: -power },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: QMatrix,
    /// Generator word whose product is `matrix`; None when only the matrix is known.
    pub word: Option<Vec<Gen>>,
}

#[derive(Serialize)]
pub struct GroupElementJson {
    pub matrix_num: Vec<Vec<String>>,
    pub matrix_den: Vec<Vec<String>>,
    pub word: Option<Vec<Gen>>,
}

impl GroupElement {
    pub fn identity(dim: usize) -> Self {
        GroupElement { matrix: QMatrix::identity(dim), word: Some(vec![]) }
    }

    pub fn from_matrix(m: QMatrix) -> Self {
        GroupElement { matrix: m, word: None }
    }

    pub fn mul(&self, o: &GroupElement) -> GroupElement {
        let word = match (&self.word, &o.word) {
            (Some(a), Some(b)) => {
                let mut w = a.clone();
                w.extend(b.iter().cloned());
                Some(w)
            }
            _ => None,
        };
        GroupElement { matrix: self.matrix.mul(&o.matrix), word }
    }

    pub fn inverse(&self) -> GroupElement {
        let matrix = self.matrix.inverse().expect("group elements are invertible");
        let word = self.word.as_ref().map(|w| w.iter().rev().map(Gen::inverse).collect());
        GroupElement { matrix, word }
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.is_identity()
    }

    pub fn to_json(&self) -> GroupElementJson {
        let (matrix_num, matrix_den) = self.matrix.to_num_den();
        GroupElementJson { matrix_num, matrix_den, word: self.word.clone() }
    }

    /// Product of x-generators in the word (ignores other kinds).
    pub fn x_params(&self) -> Vec<(usize, Q)> {
        self.word
            .iter()
            .flatten()
            .filter_map(|g| match g {
                Gen::X { root, t } => Some((*root, t.clone())),
                _ => None,
            })
            .collect()
    }
}

impl Chevalley {
    pub fn new(rs: &RootSystem) -> Chevalley {
        let n = rs.num_roots();
        let carter = carter_constants(rs);
        let sigma = |a: usize| if rs.is_std_positive(a) { 1 } else { -1 };
        let mut nconst = vec![0i64; n * n];
        for a in 0..n {
            for b in 0..n {
                if let Some(c) = rs.add(a, b) {
                    nconst[a * n + b] = sigma(a) * sigma(b) * sigma(c) * carter[a * n + b];
                }
            }
        }
        let coroots = (0..n).map(|a| rs.coroot_coeffs(a)).collect();
        Chevalley { rs: rs.clone(), dim: n + rs.rank(), nconst, coroots }
    }

    pub fn num_roots(&self) -> usize {
        self.rs.num_roots()
    }

    pub fn h_index(&self, i: usize) -> usize {
        self.num_roots() + i
    }

    pub fn n_const(&self, a: usize, b: usize) -> i64 {
        self.nconst[a * self.num_roots() + b]
    }

    /// [b_i, b_j] in the basis, as sparse integer coefficients.
    pub fn bracket(&self, i: usize, j: usize) -> Vec<(usize, i64)> {
        let n = self.num_roots();
        let rs = &self.rs;
        match (i < n, j < n) {
            (true, true) => {
                if rs.neg(i) == j {
                    self.coroots[i]
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c != 0)
                        .map(|(k, &c)| (n + k, KAPPA * c))
                        .collect()
                } else if let Some(c) = rs.add(i, j) {
                    vec![(c, self.n_const(i, j))]
                } else {
                    vec![]
                }
            }
            (false, true) => {
                let p = rs.simple_pairing(&rs.roots[j], i - n);
                if p == 0 {
                    vec![]
                } else {
                    vec![(j, p)]
                }
            }
            (true, false) => self.bracket(j, i).into_iter().map(|(k, c)| (k, -c)).collect(),
            (false, false) => vec![],
        }
    }

    /// ad(b_i) as a dense matrix.
    pub fn ad(&self, i: usize) -> QMatrix {
        let mut m = QMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for (k, c) in self.bracket(i, j) {
                m.set(k, j, qi(c));
            }
        }
        m
    }

    /// [x, y] for coordinate vectors.
    pub fn bracket_vec(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim];
        for i in 0..self.dim {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..self.dim {
                if y[j].is_zero() {
                    continue;
                }
                for (k, c) in self.bracket(i, j) {
                    out[k] += &x[i] * &y[j] * qi(c);
                }
            }
        }
        out
    }

    pub fn x_alpha(&self, a: usize, t: &Q) -> GroupElement {
        // exp(t ad e_a) column by column; ad e_a maps basis vectors to sparse combinations
        let mut m = QMatrix::identity(self.dim);
        for j in 0..self.dim {
            let mut v: Vec<(usize, Q)> = vec![(j, Q::one())];
            for k in 1..=4i64 {
                let mut next: std::collections::BTreeMap<usize, Q> = std::collections::BTreeMap::new();
                for (i, c) in &v {
                    for (l, b) in self.bracket(a, *i) {
                        *next.entry(l).or_insert_with(Q::zero) += c * qi(b);
                    }
                }
                let f = t / qi(k);
                v = next.into_iter().filter(|(_, c)| !c.is_zero()).map(|(l, c)| (l, c * &f)).collect();
                if v.is_empty() {
                    break;
                }
                for (l, c) in &v {
                    *m.at_mut(*l, j) += c;
                }
            }
        }
        GroupElement { matrix: m, word: Some(vec![Gen::X { root: a, t: t.clone() }]) }
    }

    /// Value of the character `a` on the torus element with simple-root values `c`.
    pub fn character(&self, c: &[Q], a: usize) -> Q {
        let mut v = Q::one();
        for (j, &k) in self.rs.roots[a].iter().enumerate() {
            if k > 0 {
                for _ in 0..k {
                    v *= &c[j];
                }
            } else {
                for _ in 0..(-k) {
                    v /= &c[j];
                }
            }
        }
        v
    }

    pub fn torus(&self, c: &[Q]) -> Result<GroupElement> {
        if c.iter().any(|x| x.is_zero()) {
            return Err(Error::ZeroParameter);
        }
        let mut m = QMatrix::identity(self.dim);
        for a in 0..self.num_roots() {
            m.set(a, a, self.character(c, a));
        }
        Ok(GroupElement { matrix: m, word: Some(vec![Gen::Torus { c: c.to_vec() }]) })
    }

    /// lambda(t) for a cocharacter in fundamental-coweight coordinates.
    pub fn torus_element(&self, lambda: &[i64], t: &Q) -> Result<GroupElement> {
        if t.is_zero() {
            return Err(Error::ZeroParameter);
        }
        let c: Vec<Q> = lambda
            .iter()
            .map(|&l| if l >= 0 { num::pow(t.clone(), l as usize) } else { num::pow(t.recip(), (-l) as usize) })
            .collect();
        self.torus(&c)
    }

    pub fn w_alpha(&self, a: usize, t: &Q) -> GroupElement {
        let b = self.rs.neg(a);
        self.x_alpha(a, t).mul(&self.x_alpha(b, &t.recip())).mul(&self.x_alpha(a, t))
    }

    /// Killing form on basis elements, up to a global positive scalar.
    pub fn killing(&self, i: usize, j: usize) -> Q {
        let n = self.num_roots();
        let rs = &self.rs;
        match (i < n, j < n) {
            (true, true) => {
                if rs.neg(i) == j {
                    Q::new((2 * KAPPA).into(), rs.norm2(i).into())
                } else {
                    Q::zero()
                }
            }
            (false, false) => {
                let (a, b) = (i - n, j - n);
                let na = rs.gram[a][a];
                let nb = rs.gram[b][b];
                Q::new((4 * rs.gram[a][b]).into(), (na * nb).into())
            }
            _ => Q::zero(),
        }
    }

    /// Checks Ad g [x, y] = [Ad g x, Ad g y] on all basis pairs.
    pub fn preserves_bracket(&self, g: &QMatrix) -> bool {
        let cols: Vec<Vec<Q>> = (0..self.dim).map(|j| g.col(j)).collect();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let mut lhs = vec![Q::zero(); self.dim];
                for (k, c) in self.bracket(i, j) {
                    for r in 0..self.dim {
                        lhs[r] += qi(c) * g.at(r, k);
                    }
                }
                if lhs != self.bracket_vec(&cols[i], &cols[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix of an abstract word.
    pub fn eval_word(&self, word: &[Gen], s: &GroupElement) -> Result<GroupElement> {
        let mut m = QMatrix::identity(self.dim);
        let s_inv = s.matrix.inverse().expect("invertible");
        for g in word {
            let f = match g {
                Gen::X { root, t } => self.x_alpha(*root, t).matrix,
                Gen::Torus { c } => self.torus(c)?.matrix,
                Gen::S { power } => {
                    let base = if *power >= 0 { &s.matrix } else { &s_inv };
                    base.pow(power.unsigned_abs())
                }
            };
            m = m.mul(&f);
        }
        Ok(GroupElement { matrix: m, word: Some(word.to_vec()) })
    }
}

/// Normal representative of plan.s: Ad s e_{+-a} = e_{+-s a} for a in Gamma.
pub fn normal_representative(ch: &Chevalley, plan: &SlicePlan) -> Result<GroupElement> {
    let (_, c, cand) = normal_parts(ch, plan)?;
    let t = ch.torus(&c)?;
    let s = GroupElement { matrix: cand.mul(&t.matrix), word: Some(vec![Gen::S { power: 1 }]) };
    verify_normal(ch, plan, &s)?;
    Ok(s)
}

/// The representative as w_{a_1}(1)..w_{a_k}(1) times the torus element with simple-root values c.
pub fn normal_factors(ch: &Chevalley, plan: &SlicePlan) -> Result<(Vec<usize>, Vec<Q>)> {
    normal_parts(ch, plan).map(|(r, c, _)| (r, c))
}

fn normal_parts(ch: &Chevalley, plan: &SlicePlan) -> Result<(Vec<usize>, Vec<Q>, QMatrix)> {
    let rs = &ch.rs;
    let r = rs.rank();
    let word = reduced_word(rs, &plan.s, &plan.simple)?;
    let mut cand = QMatrix::identity(ch.dim);
    for &k in &word {
        cand = cand.mul(&ch.w_alpha(plan.simple[k], &Q::one()).matrix);
    }
    // signs eps_a with Ad cand e_a = eps_a e_{s a}
    let mut eps = Vec::with_capacity(r);
    for &g in &plan.simple {
        let img = plan.s.apply(g);
        let v = cand.at(img, g).clone();
        if v.abs() != Q::one() {
            return Err(Error::NormalizationFailed(format!("coefficient {v} on simple root {g}")));
        }
        eps.push(v);
    }
    // character values: c(gamma_j) = eps_j, transported to the original simple roots
    let b: Vec<Vec<i64>> = (0..r).map(|i| plan.simple.iter().map(|&s| rs.roots[s][i]).collect()).collect();
    let c: Vec<Q> = (0..r)
        .map(|i| {
            let coords = crate::qmath::imat_inverse_unimodular(&b).map(|bi| (0..r).map(|j| bi[j][i]).collect::<Vec<i64>>());
            let coords = coords.expect("Gamma is a basis");
            let mut v = Q::one();
            for (j, &k) in coords.iter().enumerate() {
                if k.rem_euclid(2) == 1 {
                    v *= &eps[j];
                }
            }
            v
        })
        .collect();
    Ok((word.iter().map(|&k| plan.simple[k]).collect(), c, cand))
}

pub fn verify_normal(ch: &Chevalley, plan: &SlicePlan, s: &GroupElement) -> Result<()> {
    let rs = &ch.rs;
    for &g in &plan.simple {
        for a in [g, rs.neg(g)] {
            let img = plan.s.apply(a);
            for row in 0..ch.dim {
                let want = if row == img { Q::one() } else { Q::zero() };
                if *s.matrix.at(row, a) != want {
                    return Err(Error::NormalizationFailed(format!("Ad s e_{a} is not e_{img}")));
                }
            }
        }
    }
    if !s.matrix.pow(2 * plan.s.order as u64).is_identity() {
        return Err(Error::NormalizationFailed("(Ad s)^{2R} is not the identity".into()));
    }
    Ok(())
}

/// Grade of every basis vector for root weights `root_grade`; Cartan has grade 0.
pub fn basis_grades(ch: &Chevalley, root_grade: &dyn Fn(usize) -> i64) -> Vec<i64> {
    (0..ch.dim).map(|i| if i < ch.num_roots() { root_grade(i) } else { 0 }).collect()
}

/// g = lower * levi * upper with lower in the negative-grade unipotent group,
/// levi block diagonal and upper in the positive-grade group.
pub fn block_ldu(g: &QMatrix, grades: &[i64]) -> Result<(QMatrix, QMatrix, QMatrix)> {
    let dim = g.rows;
    let mut levels: Vec<i64> = grades.to_vec();
    levels.sort_unstable_by(|a, b| b.cmp(a));
    levels.dedup();
    let blocks: Vec<Vec<usize>> = levels.iter().map(|l| (0..dim).filter(|&i| grades[i] == *l).collect()).collect();
    let nb = blocks.len();
    let mut a: Vec<Vec<QMatrix>> = (0..nb).map(|i| (0..nb).map(|j| g.submatrix(&blocks[i], &blocks[j])).collect()).collect();
    let mut lo = QMatrix::identity(dim);
    let mut up = QMatrix::identity(dim);
    let mut dg = QMatrix::zeros(dim, dim);
    let place = |m: &mut QMatrix, bi: &[usize], bj: &[usize], x: &QMatrix| {
        for (r, &i) in bi.iter().enumerate() {
            for (c, &j) in bj.iter().enumerate() {
                m.set(i, j, x.at(r, c).clone());
            }
        }
    };
    for p in 0..nb {
        let d = a[p][p].clone();
        let dinv = d.inverse().ok_or_else(|| Error::NotInBigCell(format!("singular pivot block {p}")))?;
        place(&mut dg, &blocks[p], &blocks[p], &d);
        let ls: Vec<QMatrix> = ((p + 1)..nb).map(|i| a[i][p].mul(&dinv)).collect();
        let us: Vec<QMatrix> = ((p + 1)..nb).map(|j| dinv.mul(&a[p][j])).collect();
        for (off, i) in ((p + 1)..nb).enumerate() {
            place(&mut lo, &blocks[i], &blocks[p], &ls[off]);
            place(&mut up, &blocks[p], &blocks[i], &us[off]);
        }
        for (oi, i) in ((p + 1)..nb).enumerate() {
            for (oj, j) in ((p + 1)..nb).enumerate() {
                if ls[oi].is_zero() || a[p][j].is_zero() {
                    continue;
                }
                let upd = ls[oi].mul(&a[p][j]);
                let _ = oj;
                a[i][j] = a[i][j].sub(&upd);
            }
        }
    }
    Ok((lo, dg, up))
}

/// Writes a unipotent matrix as a word of x_b(t_b), b in `allowed`, ascending |height|
/// in `height`. Fails if a needed root is not allowed.
pub fn peel_unipotent(ch: &Chevalley, u: &QMatrix, allowed: &[usize], height: &dyn Fn(usize) -> i64) -> Result<GroupElement> {
    let rs = &ch.rs;
    let n = ch.num_roots();
    let r = rs.rank();
    // h with a_i(h) = 1 for every simple root: solve A^T x = 1
    let at = QMatrix::from_i64(&rs.cartan).transpose();
    let ainv = at.inverse().expect("Cartan matrix invertible");
    let x = ainv.mul_vec(&vec![Q::one(); r]);
    let mut hvec = vec![Q::zero(); ch.dim];
    for i in 0..r {
        hvec[n + i] = x[i].clone();
    }
    let std_h = |b: usize| qi(rs.height(b));
    let mut rest = u.clone();
    let mut word: Vec<Gen> = Vec::new();
    let mut result = QMatrix::identity(ch.dim);
    let mut hs: Vec<i64> = (0..n).map(|b| height(b).abs()).collect();
    hs.sort_unstable();
    hs.dedup();
    for &lev in &hs {
        if rest.is_identity() {
            break;
        }
        let v = rest.mul_vec(&hvec);
        let mut layer = QMatrix::identity(ch.dim);
        let mut layer_word = Vec::new();
        for b in 0..n {
            if height(b).abs() != lev || v[b].is_zero() {
                continue;
            }
            if !allowed.contains(&b) {
                return Err(Error::StageAssertionFailed(format!("component on root {b} outside the expected subgroup")));
            }
            let t = -v[b].clone() / std_h(b);
            layer = layer.mul(&ch.x_alpha(b, &t).matrix);
            layer_word.push(Gen::X { root: b, t });
        }
        if layer_word.is_empty() {
            continue;
        }
        rest = layer.inverse().unwrap().mul(&rest);
        result = result.mul(&layer);
        word.extend(layer_word);
    }
    if !rest.is_identity() || result != *u {
        return Err(Error::StageAssertionFailed("unipotent factor is not a product of root subgroups".into()));
    }
    Ok(GroupElement { matrix: result, word: Some(word) })
}

#[derive(Clone, Debug)]
pub struct BigCell {
    pub lower: GroupElement,
    pub levi: GroupElement,
    pub upper: GroupElement,
}

/// Factorization relative to the parabolic with grading `grade` on roots:
/// g = lower (negative grades) * levi (grade 0) * upper (positive grades).
pub fn big_cell_factorize(ch: &Chevalley, g: &QMatrix, grade: &dyn Fn(usize) -> i64, height: &dyn Fn(usize) -> i64) -> Result<BigCell> {
    let grades = basis_grades(ch, grade);
    let (lo, d, up) = block_ldu(g, &grades)?;
    let n = ch.num_roots();
    let neg: Vec<usize> = (0..n).filter(|&a| grade(a) < 0).collect();
    let pos: Vec<usize> = (0..n).filter(|&a| grade(a) > 0).collect();
    let lower = peel_unipotent(ch, &lo, &neg, height)?;
    let upper = peel_unipotent(ch, &up, &pos, height)?;
    Ok(BigCell { lower, levi: GroupElement::from_matrix(d), upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, Family, SimpleType};

    fn ch(f: Family, r: usize) -> Chevalley {
        Chevalley::new(&build_root_system(SimpleType::new(f, r).unwrap()).unwrap())
    }

    fn jacobi(c: &Chevalley) {
        let d = c.dim;
        let e = |i: usize| -> Vec<Q> { (0..d).map(|k| qi(i64::from(k == i))).collect() };
        for i in 0..d {
            for j in 0..d {
                for k in (0..d).step_by(3) {
                    let (x, y, z) = (e(i), e(j), e(k));
                    let t1 = c.bracket_vec(&x, &c.bracket_vec(&y, &z));
                    let t2 = c.bracket_vec(&y, &c.bracket_vec(&z, &x));
                    let t3 = c.bracket_vec(&z, &c.bracket_vec(&x, &y));
                    for m in 0..d {
                        assert!((&t1[m] + &t2[m] + &t3[m]).is_zero(), "Jacobi fails on {i},{j},{k}");
                    }
                }
            }
        }
    }

    #[test]
    fn jacobi_small_types() {
        for (f, r) in [(Family::A, 2), (Family::B, 2), (Family::G, 2), (Family::C, 3)] {
            jacobi(&ch(f, r));
        }
    }

    #[test]
    fn constants_are_string_lengths() {
        for (f, r) in [(Family::A, 3), (Family::B, 3), (Family::G, 2), (Family::F, 4), (Family::D, 4)] {
            let c = ch(f, r);
            let rs = &c.rs;
            for a in 0..rs.num_roots() {
                for b in 0..rs.num_roots() {
                    if rs.add(a, b).is_some() {
                        assert_eq!(c.n_const(a, b).abs(), string_p(rs, a, b) + 1);
                        let (na, nb) = (rs.neg(a), rs.neg(b));
                        assert_eq!(c.n_const(na, nb), c.n_const(a, b));
                    }
                }
            }
        }
    }

    #[test]
    fn g2_reaches_three() {
        let c = ch(Family::G, 2);
        let m = (0..12).flat_map(|a| (0..12).map(move |b| (a, b))).map(|(a, b)| c.n_const(a, b).abs()).max();
        assert_eq!(m, Some(3));
    }

    #[test]
    fn x_alpha_one_parameter() {
        let c = ch(Family::B, 2);
        for a in 0..c.num_roots() {
            assert!(c.x_alpha(a, &Q::zero()).is_identity());
            let p = c.x_alpha(a, &qi(2)).mul(&c.x_alpha(a, &qi(-2)));
            assert!(p.is_identity());
            let s = c.x_alpha(a, &qi(1)).mul(&c.x_alpha(a, &Q::new(2.into(), 3.into())));
            assert_eq!(s.matrix, c.x_alpha(a, &Q::new(5.into(), 3.into())).matrix);
            assert!(c.preserves_bracket(&c.x_alpha(a, &qi(3)).matrix));
        }
    }

    #[test]
    fn a1_adjoint_sl2() {
        let c = ch(Family::A, 1);
        let t = qi(5);
        let m = c.x_alpha(0, &t).matrix;
        // basis (e, f, h): e -> e, h -> h - 2t e, f -> f + kappa t h - kappa t^2 e
        assert_eq!(*m.at(0, 2), qi(-10));
        assert_eq!(*m.at(2, 1), qi(-5));
        assert_eq!(*m.at(0, 1), qi(25));
    }

    #[test]
    fn torus_multiplicative() {
        let c = ch(Family::A, 1);
        let t = c.torus_element(&[2], &qi(2)).unwrap();
        assert_eq!(*t.matrix.at(0, 0), qi(4));
        let a = c.torus_element(&[1], &qi(3)).unwrap().mul(&c.torus_element(&[1], &qi(5)).unwrap());
        assert_eq!(a.matrix, c.torus_element(&[1], &qi(15)).unwrap().matrix);
        assert!(c.torus_element(&[1], &Q::one()).unwrap().is_identity());
        assert_eq!(c.torus_element(&[1], &Q::zero()).unwrap_err(), Error::ZeroParameter);
    }

    #[test]
    fn weyl_element_monomial() {
        let c = ch(Family::G, 2);
        for a in 0..c.num_roots() {
            let w = c.w_alpha(a, &qi(1)).matrix;
            let refl = c.rs.reflection_matrix(a);
            for b in 0..c.num_roots() {
                let img = c.rs.index_of(&crate::qmath::imat_vec(&refl, &c.rs.roots[b])).unwrap();
                assert_eq!(w.at(img, b).abs(), Q::one());
            }
        }
    }

    #[test]
    fn sl2_weyl_not_in_big_cell() {
        let c = ch(Family::A, 1);
        let w = c.w_alpha(0, &qi(1)).matrix;
        let grade = |a: usize| if a == 0 { 1 } else { -1 };
        let h = |a: usize| c.rs.height(a);
        assert!(matches!(big_cell_factorize(&c, &w, &grade, &h), Err(Error::NotInBigCell(_))));
    }

    #[test]
    fn big_cell_recovers_factors() {
        let c = ch(Family::A, 2);
        let grade = |a: usize| -c.rs.height(a);
        let h = |a: usize| c.rs.height(a);
        // roots 0,1 simple, 2 = a1 + a2; 3,4,5 negatives
        let lower = c.x_alpha(2, &qi(3)).mul(&c.x_alpha(0, &qi(-2)));
        let torus = c.torus(&[qi(2), Q::new(1.into(), 3.into())]).unwrap();
        let upper = c.x_alpha(4, &qi(5)).mul(&c.x_alpha(5, &qi(1)));
        let g = lower.mul(&torus).mul(&upper).matrix;
        let bc = big_cell_factorize(&c, &g, &grade, &h).unwrap();
        assert_eq!(bc.lower.matrix, lower.matrix);
        assert_eq!(bc.levi.matrix, torus.matrix);
        assert_eq!(bc.upper.matrix, upper.matrix);
    }
}
