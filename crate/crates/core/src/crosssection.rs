//! Conjugation map N x N_s Z s^-1 -> N Z s^-1 N, its staged inverse,
//! and the exact transversality and decomposition checks.

use crate::chevalley::{block_ldu, normal_representative, peel_unipotent, Chevalley, Gen, GroupElement};
use crate::error::{Error, Result};
use crate::qmath::{qi, QMatrix, Q};
use crate::slicegeom::{self, LeviChain};
use crate::spectral::SlicePlan;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

/// Group-side data shared by sampling, the forward map and the inverse.
pub struct SliceGroup<'a> {
    pub plan: &'a SlicePlan,
    pub ch: Chevalley,
    pub s: GroupElement,
    pub chain: LeviChain,
    pub fixed_cochars: Vec<Vec<i64>>,
    /// Within-block order reversal for the block elimination (uniqueness probe).
    pub reverse_within: bool,
    spow_cache: RefCell<HashMap<i64, QMatrix>>,
}

#[derive(Clone, Debug)]
pub struct SlicePoint {
    pub ns: GroupElement,
    pub z: GroupElement,
    pub y: GroupElement,
}

#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub n: GroupElement,
    pub ns: GroupElement,
    pub z: GroupElement,
    pub exact: bool,
    pub stages: Vec<String>,
}

#[derive(Serialize)]
pub struct FactorizationJson {
    pub n_word: Vec<Gen>,
    pub ns_word: Vec<Gen>,
    pub z_word: Vec<Gen>,
    pub exact: bool,
    pub stages: Vec<String>,
}

impl FactorizationResult {
    pub fn to_json(&self) -> FactorizationJson {
        FactorizationJson {
            n_word: self.n.word.clone().unwrap_or_default(),
            ns_word: self.ns.word.clone().unwrap_or_default(),
            z_word: self.z.word.clone().unwrap_or_default(),
            exact: self.exact,
            stages: self.stages.clone(),
        }
    }
}

/// Integer basis of {lambda : M^T lambda = lambda} (s-fixed cocharacters, coweight coordinates).
pub fn fixed_cocharacters(plan: &SlicePlan) -> Vec<Vec<i64>> {
    let r = plan.rs.rank();
    let mt = QMatrix::from_i64(&plan.s.matrix).transpose();
    let ker = mt.sub(&QMatrix::identity(r)).kernel();
    ker.into_iter()
        .map(|v| {
            let l = v.iter().fold(num::BigInt::one(), |acc, x| num::integer::lcm(acc, x.denom().clone()));
            let ints: Vec<num::BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
            let g = ints.iter().fold(num::BigInt::zero(), |acc, x| num::integer::gcd(acc, x.clone()));
            ints.iter().map(|x| i64::try_from(x / &g).expect("small cocharacter")).collect()
        })
        .collect()
}

fn random_q(rng: &mut ChaCha8Rng, bound: i64) -> Q {
    let bound = bound.max(1);
    loop {
        let num: i64 = rng.gen_range(-bound..=bound);
        if num != 0 {
            let den: i64 = rng.gen_range(1..=bound);
            return Q::new(num.into(), den.into());
        }
    }
}

fn not_in_image(e: Error) -> Error {
    match e {
        Error::NotInBigCell(m) => Error::NotInImage(m),
        other => other,
    }
}

impl<'a> SliceGroup<'a> {
    pub fn new(plan: &'a SlicePlan) -> Result<Self> {
        let ch = Chevalley::new(&plan.rs);
        let s = normal_representative(&ch, plan)?;
        let chain = slicegeom::levi_chain(plan)?;
        let fixed_cochars = fixed_cocharacters(plan);
        Ok(SliceGroup { plan, ch, s, chain, fixed_cochars, reverse_within: false, spow_cache: RefCell::new(HashMap::new()) })
    }

    pub fn dim(&self) -> usize {
        self.ch.dim
    }

    /// s^p as a matrix.
    pub fn spow(&self, p: i64) -> QMatrix {
        if let Some(m) = self.spow_cache.borrow().get(&p) {
            return m.clone();
        }
        let m = if p == 0 {
            QMatrix::identity(self.dim())
        } else if p > 0 {
            self.spow(p - 1).mul(&self.s.matrix)
        } else if p == -1 {
            self.s.matrix.inverse().expect("invertible")
        } else {
            self.spow(p + 1).mul(&self.spow(-1))
        };
        self.spow_cache.borrow_mut().insert(p, m.clone());
        m
    }

    /// s^p x s^-p.
    fn conj(&self, p: i64, x: &QMatrix) -> QMatrix {
        self.spow(p).mul(x).mul(&self.spow(-p))
    }

    fn height(&self) -> impl Fn(usize) -> i64 + '_ {
        move |a| self.plan.gamma_height(a)
    }

    /// g = lower * levi * upper for the grading given by Gamma weights.
    fn ldu(&self, g: &QMatrix, weights: &[i64]) -> Result<(QMatrix, QMatrix, QMatrix)> {
        let n = self.ch.num_roots();
        let mut grades: Vec<i64> = (0..self.dim()).map(|i| if i < n { slicegeom::grade(self.plan, weights, i) } else { 0 }).collect();
        if self.reverse_within {
            // conjugate by the reversal permutation inside every grade block
            let perm = reversal_within(&grades);
            let pg = permute(g, &perm);
            grades = perm.iter().map(|&i| grades[i]).collect();
            let (l, d, u) = block_ldu(&pg, &grades)?;
            let inv = invert_perm(&perm);
            return Ok((permute(&l, &inv), permute(&d, &inv), permute(&u, &inv)));
        }
        block_ldu(g, &grades)
    }

    fn peel(&self, u: &QMatrix, allowed: &[usize], what: &str) -> Result<GroupElement> {
        let h = self.height();
        peel_unipotent(&self.ch, u, allowed, &h).map_err(|e| match e {
            Error::StageAssertionFailed(m) => Error::StageAssertionFailed(format!("{what}: {m}")),
            other => other,
        })
    }

    fn x_product(&self, roots: &[usize], params: &[Q]) -> GroupElement {
        let mut g = GroupElement::identity(self.dim());
        for (&a, t) in roots.iter().zip(params) {
            g = g.mul(&self.ch.x_alpha(a, t));
        }
        g
    }

    /// Seeded point n_s z s^-1 of the slice with parameters bounded by `bound`.
    pub fn sample_slice_point(&self, seed: u64, bound: i64) -> Result<SlicePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = self.plan;
        let ns_params: Vec<Q> = plan.ns_roots.iter().map(|_| random_q(&mut rng, bound)).collect();
        let ns = self.x_product(&plan.ns_roots, &ns_params);
        let levi_neg: Vec<usize> = plan.levi_roots.iter().copied().filter(|&a| !plan.positive[a]).collect();
        let levi_pos: Vec<usize> = plan.levi_roots.iter().copied().filter(|&a| plan.positive[a]).collect();
        let p1: Vec<Q> = levi_neg.iter().map(|_| random_q(&mut rng, bound)).collect();
        let mut z = self.x_product(&levi_neg, &p1);
        for lam in &self.fixed_cochars {
            let t = loop {
                let t = random_q(&mut rng, bound.max(2));
                if t.abs() != Q::one() || bound <= 1 {
                    break t;
                }
            };
            z = z.mul(&self.ch.torus_element(lam, &t)?);
        }
        let p2: Vec<Q> = levi_pos.iter().map(|_| random_q(&mut rng, bound)).collect();
        z = z.mul(&self.x_product(&levi_pos, &p2));
        let y = ns.mul(&z).mul(&self.s.inverse());
        Ok(SlicePoint { ns, z, y })
    }

    /// Seeded element of N: product over the nilradical roots.
    pub fn sample_n(&self, seed: u64, bound: i64) -> GroupElement {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0F4E);
        let roots = &self.plan.nilradical_roots;
        let params: Vec<Q> = roots.iter().map(|_| random_q(&mut rng, bound)).collect();
        self.x_product(roots, &params)
    }

    pub fn forward(&self, n: &GroupElement, p: &SlicePoint) -> GroupElement {
        n.mul(&p.y).mul(&n.inverse())
    }

    /// z in Z: Levi triangular factorization with a torus middle, commuting with s.
    fn certify_z(&self, z: &QMatrix) -> Result<GroupElement> {
        let plan = self.plan;
        let g0 = &self.chain.levels[0].simple;
        let w = slicegeom::weights_on(plan, g0);
        let (lo, d, up) = self.ldu(z, &w).map_err(|_| Error::StageAssertionFailed("z' outside the Levi big cell".into()))?;
        let levi_neg: Vec<usize> = plan.levi_roots.iter().copied().filter(|&a| !plan.positive[a]).collect();
        let levi_pos: Vec<usize> = plan.levi_roots.iter().copied().filter(|&a| plan.positive[a]).collect();
        let lo = self.peel(&lo, &levi_neg, "z' lower Levi part")?;
        let up = self.peel(&up, &levi_pos, "z' upper Levi part")?;
        let r = plan.rs.rank();
        let c: Vec<Q> = (0..r).map(|j| d.at(j, j).clone()).collect();
        let t = self.ch.torus(&c).map_err(|_| Error::StageAssertionFailed("z' torus part singular".into()))?;
        if t.matrix != d {
            return Err(Error::StageAssertionFailed("z' middle factor is not a torus element".into()));
        }
        let zz = lo.mul(&t).mul(&up);
        if zz.matrix != *z {
            return Err(Error::StageAssertionFailed("z' word does not reproduce z'".into()));
        }
        if self.s.matrix.mul(z) != z.mul(&self.s.matrix) {
            return Err(Error::StageAssertionFailed("z' does not commute with s".into()));
        }
        Ok(zz)
    }

    /// Inverse of the conjugation map, following the level/sector induction.
    pub fn factorize(&self, g: &GroupElement) -> Result<FactorizationResult> {
        let plan = self.plan;
        let dim = self.dim();
        let mut stages = Vec::new();
        let x = g.matrix.mul(&self.s.matrix);
        let w0 = slicegeom::aggregate_weights(plan, &self.chain, 0);
        let (_, zmat, _) = self.ldu(&x, &w0).map_err(not_in_image)?;
        let z = self.certify_z(&zmat)?;
        stages.push(format!("stage 0: z' certified in Z ({} Levi roots)", plan.levi_roots.len()));
        let z_inv = zmat.inverse().expect("invertible");
        let mut b = GroupElement::identity(dim);
        let mut nsacc = GroupElement::identity(dim);
        for k in 1..=plan.num_levels() {
            let sec = &plan.sectors[k - 1];
            let d = sec.d;
            let yk = if k == plan.num_levels() {
                x.clone()
            } else {
                let wk = slicegeom::aggregate_weights(plan, &self.chain, k);
                self.ldu(&x, &wk).map_err(not_in_image)?.1
            };
            let lw = slicegeom::level_weights(plan, &self.chain, k);
            let t = b.mul(&nsacc);
            let mut m = GroupElement::identity(dim);
            let mut ns_d = GroupElement::identity(dim);
            for p in 0..=(d + 1) {
                let m_inv = m.matrix.inverse().unwrap();
                let wp = self.spow(-p).mul(&m_inv).mul(&yk).mul(&self.spow(-1)).mul(&m.matrix).mul(&self.spow(p + 1));
                let (_, _, xp) = self.ldu(&wp, &lw).map_err(not_in_image)?;
                if p <= d {
                    let np = self.conj(p + 1, &xp.inverse().unwrap());
                    let np = self.peel(&np, sec.set(p), &format!("level {k}: sector {p} component"))?;
                    m = m.mul(&np);
                } else {
                    // split x_{D+1} = x' x'' along s^{-D-1}(Delta_s^D) u s^{-D-2}(Delta^{D+1})
                    let w = self.conj(d + 2, &xp);
                    let (lo, mid, up) = self.ldu(&w.inverse().unwrap(), &lw).map_err(not_in_image)?;
                    if !mid.is_identity() {
                        return Err(Error::StageAssertionFailed(format!("level {k}: final split has a Levi part")));
                    }
                    let a = self.conj(-1, &up.inverse().unwrap());
                    let bb = self.conj(-1, &lo.inverse().unwrap());
                    let binv = b.matrix.inverse().unwrap();
                    let sbs = self.conj(-1, &b.matrix);
                    let sbinvs = self.conj(-1, &binv);
                    let nsd = zmat.mul(&sbinvs).mul(&a).mul(&sbs).mul(&z_inv);
                    ns_d = self.peel(&nsd, &sec.ns_d, &format!("level {k}: N_s^D component"))?;
                    let nlast = self.conj(1, &bb.inverse().unwrap());
                    let nlast = self.peel(&nlast, sec.set(d + 1), &format!("level {k}: sector {} component", d + 1))?;
                    m = m.mul(&nlast);
                }
            }
            let rest = t
                .matrix
                .inverse()
                .unwrap()
                .mul(&m.matrix.inverse().unwrap())
                .mul(&yk)
                .mul(&self.spow(-1))
                .mul(&m.matrix)
                .mul(&b.matrix)
                .mul(&self.s.matrix)
                .mul(&z_inv)
                .mul(&ns_d.matrix.inverse().unwrap());
            let ns_last = self.peel(&rest, sec.set(d + 1), &format!("level {k}: N_s^(D+1) component"))?;
            let sigma = ns_last.mul(&ns_d);
            stages.push(format!(
                "level {k}: D = {d}, n roots {}, N_s roots {}",
                m.x_params().iter().filter(|(_, t)| !t.is_zero()).count(),
                sigma.x_params().len()
            ));
            b = m.mul(&b);
            nsacc = nsacc.mul(&sigma);
        }
        let y = nsacc.matrix.mul(&zmat).mul(&self.spow(-1));
        let exact = b.matrix.mul(&y).mul(&b.matrix.inverse().unwrap()) == g.matrix;
        if !exact {
            return Err(Error::StageAssertionFailed("n n_s' z' s^-1 n^-1 does not reproduce the input".into()));
        }
        stages.push("reassembly exact".into());
        Ok(FactorizationResult { n: b, ns: nsacc, z, exact, stages })
    }

    /// Rank of (x, n, w) -> (Id - Ad y) x + n + w on g + n_s + z.
    pub fn transversality_rank(&self, p: &SlicePoint) -> usize {
        let dim = self.dim();
        let mut cols: Vec<Vec<Q>> = Vec::new();
        let ad = QMatrix::identity(dim).sub(&p.y.matrix);
        for j in 0..dim {
            cols.push(ad.col(j));
        }
        for &a in self.plan.ns_roots.iter().chain(&self.plan.levi_roots) {
            cols.push(unit(dim, a));
        }
        for v in self.h0_basis() {
            cols.push(v);
        }
        let m = QMatrix::from_cols(dim, &cols);
        m.rank()
    }

    /// Basis of the s-fixed part of the Cartan, as vectors of g.
    pub fn h0_basis(&self) -> Vec<Vec<Q>> {
        let n = self.ch.num_roots();
        let r = self.plan.rs.rank();
        let idx: Vec<usize> = (n..n + r).collect();
        let block = self.s.matrix.submatrix(&idx, &idx);
        block
            .sub(&QMatrix::identity(r))
            .kernel()
            .into_iter()
            .map(|v| {
                let mut full = vec![Q::zero(); self.dim()];
                for i in 0..r {
                    full[n + i] = v[i].clone();
                }
                full
            })
            .collect()
    }

    fn killing_vec(&self, x: &[Q], y: &[Q]) -> Q {
        let mut s = Q::zero();
        for i in 0..self.dim() {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..self.dim() {
                if y[j].is_zero() {
                    continue;
                }
                let k = self.ch.killing(i, j);
                if !k.is_zero() {
                    s += &x[i] * &y[j] * k;
                }
            }
        }
        s
    }

    /// g = n + z + nbar + h0^perp: orthogonality, isotropy, direct sum, and
    /// fixed-point freeness of Ad s^-1 on h0^perp.
    pub fn decomposition_check(&self) -> (bool, Vec<String>, [usize; 4]) {
        let plan = self.plan;
        let dim = self.dim();
        let n = self.ch.num_roots();
        let r = plan.rs.rank();
        let mut msgs = Vec::new();
        let nil: Vec<Vec<Q>> = plan.nilradical_roots.iter().map(|&a| unit(dim, a)).collect();
        let nbar: Vec<Vec<Q>> = plan.nilradical_roots.iter().map(|&a| unit(dim, plan.rs.neg(a))).collect();
        let h0 = self.h0_basis();
        let mut z: Vec<Vec<Q>> = plan.levi_roots.iter().map(|&a| unit(dim, a)).collect();
        z.extend(h0.iter().cloned());
        // h0^perp inside the Cartan
        let cartan: Vec<Vec<Q>> = (0..r).map(|i| unit(dim, n + i)).collect();
        let mut cond = QMatrix::zeros(h0.len().max(1), r);
        for (i, v) in h0.iter().enumerate() {
            for (j, c) in cartan.iter().enumerate() {
                cond.set(i, j, self.killing_vec(v, c));
            }
        }
        let perp: Vec<Vec<Q>> = if h0.is_empty() {
            cartan.clone()
        } else {
            cond.kernel()
                .into_iter()
                .map(|v| {
                    let mut full = vec![Q::zero(); dim];
                    for i in 0..r {
                        full[n + i] = v[i].clone();
                    }
                    full
                })
                .collect()
        };
        let spaces = [("n", &nil), ("z", &z), ("nbar", &nbar), ("h0perp", &perp)];
        for i in 0..4 {
            for j in i..4 {
                if (i, j) == (0, 2) {
                    continue;
                }
                if i == j && (i == 1 || i == 3) {
                    continue;
                }
                for x in spaces[i].1.iter() {
                    for y in spaces[j].1.iter() {
                        if !self.killing_vec(x, y).is_zero() {
                            msgs.push(format!("{} and {} not orthogonal", spaces[i].0, spaces[j].0));
                        }
                    }
                }
            }
        }
        let mut all: Vec<Vec<Q>> = Vec::new();
        for (_, sp) in &spaces {
            all.extend(sp.iter().cloned());
        }
        let rank = QMatrix::from_cols(dim, &all).rank();
        if rank != dim || all.len() != dim {
            msgs.push(format!("sum has rank {rank} from {} vectors in dim {dim}", all.len()));
        }
        // Ad s^-1 - Id has full rank on h0^perp
        if !perp.is_empty() {
            let s_inv = self.s.matrix.inverse().unwrap();
            let imgs: Vec<Vec<Q>> = perp
                .iter()
                .map(|v| s_inv.mul_vec(v).iter().zip(v).map(|(a, b)| a - b).collect())
                .collect();
            if QMatrix::from_cols(dim, &imgs).rank() != perp.len() {
                msgs.push("Ad s^-1 has fixed points on h0^perp".into());
            }
        }
        msgs.sort();
        msgs.dedup();
        (msgs.is_empty(), msgs, [nil.len(), z.len(), nbar.len(), perp.len()])
    }
}

fn unit(dim: usize, i: usize) -> Vec<Q> {
    (0..dim).map(|k| qi(i64::from(k == i))).collect()
}

fn reversal_within(grades: &[i64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..grades.len()).collect();
    let levels: BTreeSet<i64> = grades.iter().copied().collect();
    for l in levels {
        let idx: Vec<usize> = (0..grades.len()).filter(|&i| grades[i] == l).collect();
        for (a, b) in idx.iter().zip(idx.iter().rev()) {
            perm[*a] = *b;
        }
    }
    perm
}

fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// (P g P^T) with new index i holding old index perm[i].
fn permute(g: &QMatrix, perm: &[usize]) -> QMatrix {
    let n = g.rows;
    let mut m = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, g.at(perm[i], perm[j]).clone());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, weyl_from_word, Family, SimpleType};
    use crate::spectral::{build_plan, BlockOrder};
    use crate::subregular::subregular_plan;

    fn plan(f: Family, r: usize, word: &[usize]) -> SlicePlan {
        let rs = build_root_system(SimpleType::new(f, r).unwrap()).unwrap();
        build_plan(&rs, &weyl_from_word(&rs, word), &BlockOrder::Default, 5).unwrap()
    }

    #[test]
    fn identity_point_and_rank() {
        let p = plan(Family::A, 2, &[]);
        let sg = SliceGroup::new(&p).unwrap();
        assert!(sg.s.is_identity());
        let pt = sg.sample_slice_point(1, 1).unwrap();
        assert!(pt.ns.is_identity());
        assert_eq!(sg.transversality_rank(&pt), 8);
        let (ok, msgs, dims) = sg.decomposition_check();
        assert!(ok, "{msgs:?}");
        assert_eq!(dims, [0, 8, 0, 0]);
    }

    #[test]
    fn a2_coxeter_round_trip() {
        let p = plan(Family::A, 2, &[0, 1]);
        let sg = SliceGroup::new(&p).unwrap();
        let (ok, msgs, dims) = sg.decomposition_check();
        assert!(ok, "{msgs:?}");
        assert_eq!(dims, [3, 0, 3, 2]);
        for seed in 0..4 {
            let pt = sg.sample_slice_point(seed, 3).unwrap();
            assert_eq!(sg.transversality_rank(&pt), 8);
            let fr = sg.factorize(&pt.y).unwrap();
            assert!(fr.n.is_identity());
            assert_eq!(fr.ns.matrix, pt.ns.matrix);
            assert_eq!(fr.z.matrix, pt.z.matrix);
            let n = sg.sample_n(seed, 3);
            let g = sg.forward(&n, &pt);
            let fr = sg.factorize(&g).unwrap();
            assert_eq!(fr.n.matrix, n.matrix);
            assert_eq!(fr.ns.matrix, pt.ns.matrix);
            assert_eq!(fr.z.matrix, pt.z.matrix);
        }
    }

    #[test]
    fn subregular_round_trips() {
        for (f, r) in [(Family::A, 3), (Family::B, 2), (Family::G, 2)] {
            let (_, p) = subregular_plan(SimpleType::new(f, r).unwrap(), 0).unwrap();
            let sg = SliceGroup::new(&p).unwrap();
            let pt = sg.sample_slice_point(3, 2).unwrap();
            let n = sg.sample_n(3, 2);
            let fr = sg.factorize(&sg.forward(&n, &pt)).unwrap();
            assert_eq!(fr.n.matrix, n.matrix, "{f:?}{r}");
            assert_eq!(fr.ns.matrix, pt.ns.matrix);
            assert_eq!(fr.z.matrix, pt.z.matrix);
            assert_eq!(sg.transversality_rank(&pt), sg.dim());
        }
    }

    #[test]
    fn elimination_order_does_not_matter() {
        let p = plan(Family::B, 2, &[0, 1]);
        let mut sg = SliceGroup::new(&p).unwrap();
        let pt = sg.sample_slice_point(9, 2).unwrap();
        let g = sg.forward(&sg.sample_n(9, 2), &pt);
        let a = sg.factorize(&g).unwrap();
        sg.reverse_within = true;
        let b = sg.factorize(&g).unwrap();
        assert_eq!(a.n.matrix, b.n.matrix);
        assert_eq!(a.ns.matrix, b.ns.matrix);
        assert_eq!(a.z.matrix, b.z.matrix);
    }

    fn sweep(max_rank: usize, words: usize, seed: u64) {
        use crate::rootsys::SimpleType;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ty in SimpleType::all_up_to(max_rank) {
            let rs = build_root_system(ty).unwrap();
            for _ in 0..words {
                let len = rng.gen_range(0..=2 * rs.rank() + 2);
                let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..rs.rank())).collect();
                let w = weyl_from_word(&rs, &word);
                let plan = build_plan(&rs, &w, &BlockOrder::Default, rng.gen()).unwrap();
                let sg = SliceGroup::new(&plan).unwrap();
                let (ok, msgs, _) = sg.decomposition_check();
                assert!(ok, "{ty} {word:?}: {msgs:?}");
                let ps: u64 = rng.gen();
                let pt = sg.sample_slice_point(ps, 2).unwrap();
                assert_eq!(sg.transversality_rank(&pt), sg.dim(), "{ty} {word:?}");
                let n = sg.sample_n(ps, 2);
                let fr = sg.factorize(&sg.forward(&n, &pt)).unwrap_or_else(|e| panic!("{ty} {word:?}: {e}"));
                assert_eq!(fr.n.matrix, n.matrix, "{ty} {word:?}");
                assert_eq!(fr.ns.matrix, pt.ns.matrix, "{ty} {word:?}");
                assert_eq!(fr.z.matrix, pt.z.matrix, "{ty} {word:?}");
            }
        }
    }

    #[test]
    fn random_words_up_to_rank_three() {
        sweep(3, 6, 11);
    }

    #[test]
    #[ignore = "about a minute"]
    fn random_words_up_to_rank_five() {
        sweep(5, 3, 12);
    }

    #[test]
    fn perturbed_input_is_rejected() {
        let p = plan(Family::A, 2, &[0, 1]);
        let sg = SliceGroup::new(&p).unwrap();
        let pt = sg.sample_slice_point(4, 2).unwrap();
        let n = sg.sample_n(4, 2);
        // a nonzero torus factor on the left leaves the image N Z s^-1 N
        let t = sg.ch.torus(&[qi(2), qi(1)]).unwrap();
        let bad = t.mul(&sg.forward(&n, &pt));
        assert!(sg.factorize(&bad).is_err());
    }

    #[test]
    fn distinct_n_give_distinct_images() {
        let p = plan(Family::B, 2, &[0, 1]);
        let sg = SliceGroup::new(&p).unwrap();
        let pt = sg.sample_slice_point(2, 3).unwrap();
        let a = sg.forward(&sg.sample_n(2, 3), &pt);
        let b = sg.forward(&sg.sample_n(3, 3), &pt);
        assert_ne!(a.matrix, b.matrix);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_for_any_seed(seed in 0u64..100_000, bound in 1i64..6, which in 0usize..3) {
            let (f, word): (Family, &[usize]) = [(Family::A, &[0usize, 1][..]), (Family::B, &[0, 1, 0][..]), (Family::G, &[1][..])][which];
            let p = plan(f, 2, word);
            let sg = SliceGroup::new(&p).unwrap();
            let pt = sg.sample_slice_point(seed, bound).unwrap();
            let n = sg.sample_n(seed, bound);
            let fr = sg.factorize(&sg.forward(&n, &pt)).unwrap();
            proptest::prop_assert_eq!(fr.n.matrix, n.matrix);
            proptest::prop_assert_eq!(fr.ns.matrix, pt.ns.matrix);
            proptest::prop_assert_eq!(fr.z.matrix, pt.z.matrix);
        }
    }
}
