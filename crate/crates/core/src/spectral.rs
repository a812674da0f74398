//! s-invariant decomposition of the Cartan subalgebra, generator choice,
//! rescaling, and the root partition / positive system built from them.

use crate::error::{Error, Result};
use crate::qmath::{
    charpoly, cyclotomic, cyclotomic_factorization, gcd, imat_identity, imat_to_q, poly_at_matrix, q_to_f64, qi,
    IMat, QMatrix, Q,
};
use crate::rootsys::{length, simple_coords, RootSystem, WeylElement};
use crate::slicegeom::{self, LevelSectors};
use nalgebra::DMatrix;
use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const ORTH_TOL: f64 = 1e-9;
pub const SIGN_TOL: f64 = 1e-7;
const MAX_RETRIES: u64 = 16;
const MAX_EXPONENT: i32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Fixed,
    Line,
    Plane,
}

#[derive(Clone, Debug)]
pub struct InvariantBlock {
    pub kind: BlockKind,
    /// Order of the eigenvalue; s rotates the block by 2 pi j / m.
    pub m: u32,
    pub j: u32,
    /// Gram-orthonormal basis, root coordinates.
    pub basis: Vec<Vec<f64>>,
    /// Exact basis when the block is rational (fixed space, lines).
    pub exact: Option<Vec<Vec<Q>>>,
    /// Exact basis of the enclosing rational s-invariant component.
    pub component: Vec<Vec<Q>>,
    /// Sits inside a caller-pinned subspace.
    pub pinned: bool,
}

impl InvariantBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// theta / 2 pi as (j, m) in lowest terms.
    pub fn angle(&self) -> (u32, u32) {
        if self.m <= 1 {
            return (0, 1);
        }
        let g = gcd(self.j, self.m);
        (self.j / g, self.m / g)
    }

    /// Whether `root` is orthogonal to the block: exact where the block or its
    /// rational component pins it down, float otherwise.
    pub fn orthogonal_to(&self, rs: &RootSystem, root: &[i64]) -> bool {
        let rq: Vec<Q> = root.iter().map(|&x| qi(x)).collect();
        if let Some(ex) = &self.exact {
            return ex.iter().all(|u| rs.inner_q(u, &rq).is_zero());
        }
        let comp_orth = self.component.iter().all(|u| rs.inner_q(u, &rq).is_zero());
        if comp_orth {
            return true;
        }
        if self.component.len() == self.basis.len() {
            return false;
        }
        let proj: f64 = self.basis.iter().map(|b| rs.inner_f64(b, root).powi(2)).sum::<f64>().sqrt();
        proj < ORTH_TOL
    }
}

fn exact_kernel(m: &QMatrix) -> Vec<Vec<Q>> {
    m.kernel()
}

fn span_matrix(r: usize, vs: &[Vec<Q>]) -> QMatrix {
    QMatrix::from_cols(r, vs)
}

/// A cap B for subspaces given by column bases.
fn intersect(r: usize, a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut m = QMatrix::zeros(r, a.len() + b.len());
    for (j, v) in a.iter().enumerate() {
        for i in 0..r {
            m.set(i, j, v[i].clone());
        }
    }
    for (j, v) in b.iter().enumerate() {
        for i in 0..r {
            m.set(i, a.len() + j, -v[i].clone());
        }
    }
    let am = span_matrix(r, a);
    let mut out: Vec<Vec<Q>> = exact_kernel(&m).iter().map(|k| am.mul_vec(&k[..a.len()])).collect();
    reduce_basis(r, &mut out);
    out
}

fn reduce_basis(r: usize, vs: &mut Vec<Vec<Q>>) {
    if vs.is_empty() {
        return;
    }
    let mut m = span_matrix(r, vs).transpose();
    let piv = m.rref();
    *vs = (0..piv.len()).map(|i| m.row(i)).collect();
}

/// Orthogonal complement inside the whole space for the gram form.
fn orth_complement(rs: &RootSystem, a: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let r = rs.rank();
    if a.is_empty() {
        return (0..r).map(|i| (0..r).map(|j| qi(i64::from(i == j))).collect()).collect();
    }
    let g = imat_to_q(&rs.gram);
    let at = span_matrix(r, a).transpose();
    exact_kernel(&at.mul(&g))
}

/// Matrix of M restricted to the invariant subspace with basis `b`.
fn restrict(mq: &QMatrix, b: &[Vec<Q>]) -> QMatrix {
    let r = mq.rows;
    let bm = span_matrix(r, b);
    let bt = bm.transpose();
    let btb_inv = bt.mul(&bm).inverse().expect("independent basis");
    btb_inv.mul(&bt).mul(&mq.mul(&bm))
}

fn orthonormalize(rs: &RootSystem, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = rs.inner_ff(&w, u);
                for (x, y) in w.iter_mut().zip(u) {
                    *x -= c * y;
                }
            }
        }
        let n = rs.inner_ff(&w, &w).sqrt();
        if n > 1e-8 {
            out.push(w.iter().map(|x| x / n).collect());
        }
    }
    out
}

fn to_f64(v: &[Q]) -> Vec<f64> {
    v.iter().map(q_to_f64).collect()
}

fn mat_f64_vec(m: &IMat, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| *a as f64 * b).sum()).collect()
}

/// Float basis (in component coordinates) of ker(M_C^2 - 2cos(2 pi j/m) M_C + I).
fn rotation_eigenspace(mc: &QMatrix, j: u32, m: u32, expect: usize) -> Result<Vec<Vec<f64>>> {
    let d = mc.rows;
    let c = 2.0 * (2.0 * std::f64::consts::PI * j as f64 / m as f64).cos();
    let mf = DMatrix::from_fn(d, d, |a, b| q_to_f64(mc.at(a, b)));
    let qm = &mf * &mf - &mf * c + DMatrix::identity(d, d);
    let svd = qm.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let small: Vec<usize> = idx.iter().copied().filter(|&i| svd.singular_values[i] < 1e-8).collect();
    if small.len() != expect {
        return Err(Error::DimMismatch(format!(
            "eigenspace for angle {j}/{m}: expected dim {expect}, found {}",
            small.len()
        )));
    }
    Ok(small.iter().map(|&i| (0..d).map(|k| vt[(i, k)]).collect()).collect())
}

/// Decompose one rational invariant component (all eigenvalues of order m)
/// into lines or planes.
fn split_component(
    rs: &RootSystem,
    s: &WeylElement,
    comp: &[Vec<Q>],
    m: u32,
    pinned: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<InvariantBlock>> {
    let r = rs.rank();
    let mut out = Vec::new();
    if comp.is_empty() {
        return Ok(out);
    }
    if m == 2 {
        // -1 eigenspace: exact orthogonal lines
        let mut rest = comp.to_vec();
        while !rest.is_empty() {
            let v: Vec<Q> = if rest.len() == 1 {
                rest[0].clone()
            } else {
                let mut v = vec![Q::zero(); r];
                loop {
                    let coeffs: Vec<i64> = (0..rest.len()).map(|_| rng.gen_range(-3..=3)).collect();
                    if coeffs.iter().all(|&c| c == 0) {
                        continue;
                    }
                    for (c, b) in coeffs.iter().zip(&rest) {
                        for i in 0..r {
                            v[i] += qi(*c) * &b[i];
                        }
                    }
                    break;
                }
                v
            };
            let line = vec![v.clone()];
            let basis = orthonormalize(rs, &[to_f64(&v)]);
            out.push(InvariantBlock {
                kind: BlockKind::Line,
                m: 2,
                j: 1,
                basis,
                exact: Some(line.clone()),
                component: if comp.len() == 1 { comp.to_vec() } else { line.clone() },
                pinned,
            });
            rest = intersect(r, &rest, &orth_complement(rs, &line));
        }
        return Ok(out);
    }
    let mq = imat_to_q(&s.matrix);
    let mc = restrict(&mq, comp);
    let phi = crate::qmath::euler_phi(m) as usize;
    let mult = comp.len() / phi;
    let cm = span_matrix(r, comp);
    for j in 1..m {
        if 2 * j >= m || gcd(j, m) != 1 {
            continue;
        }
        let eig = rotation_eigenspace(&mc, j, m, 2 * mult)?;
        let lift = |v: &[f64]| -> Vec<f64> {
            (0..r).map(|i| (0..comp.len()).map(|k| q_to_f64(cm.at(i, k)) * v[k]).sum()).collect()
        };
        let mut space = orthonormalize(rs, &eig.iter().map(|v| lift(v)).collect::<Vec<_>>());
        for _ in 0..mult {
            let plane = if space.len() == 2 {
                space.clone()
            } else {
                let coeffs: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v: Vec<f64> = (0..r).map(|i| space.iter().zip(&coeffs).map(|(b, c)| b[i] * c).sum()).collect();
                let w = mat_f64_vec(&s.matrix, &v);
                orthonormalize(rs, &[v, w])
            };
            let exact_single = comp.len() == 2;
            out.push(InvariantBlock {
                kind: BlockKind::Plane,
                m,
                j,
                basis: plane.clone(),
                exact: None,
                component: comp.to_vec(),
                pinned,
            });
            let _ = exact_single;
            // complement of the plane inside the eigenspace
            let mut rest = Vec::new();
            for b in &space {
                let mut w = b.clone();
                for u in &plane {
                    let c = rs.inner_ff(&w, u);
                    for (x, y) in w.iter_mut().zip(u) {
                        *x -= c * y;
                    }
                }
                rest.push(w);
            }
            space = orthonormalize(rs, &rest);
        }
    }
    Ok(out)
}

/// The full decomposition: fixed block first, then lines and planes.
/// `pinned` is an optional exact s-invariant subspace whose pieces are kept apart.
pub fn invariant_decomposition_with(
    rs: &RootSystem,
    s: &WeylElement,
    pinned: Option<&[Vec<i64>]>,
    rng: &mut ChaCha8Rng,
) -> Result<(InvariantBlock, Vec<InvariantBlock>)> {
    let r = rs.rank();
    let mq = imat_to_q(&s.matrix);
    let fixed_basis = exact_kernel(&mq.sub(&QMatrix::identity(r)));
    let fixed = InvariantBlock {
        kind: BlockKind::Fixed,
        m: 1,
        j: 0,
        basis: orthonormalize(rs, &fixed_basis.iter().map(|v| to_f64(v)).collect::<Vec<_>>()),
        exact: Some(fixed_basis.clone()),
        component: fixed_basis.clone(),
        pinned: false,
    };
    let cp = charpoly(&s.matrix);
    let factors = cyclotomic_factorization(&cp, s.order)
        .ok_or_else(|| Error::DimMismatch("characteristic polynomial is not cyclotomic".into()))?;
    let pin_space: Option<(Vec<Vec<Q>>, Vec<Vec<Q>>)> = match pinned {
        Some(roots) if !roots.is_empty() => {
            let u: Vec<Vec<Q>> = roots.iter().map(|v| v.iter().map(|&x| qi(x)).collect()).collect();
            let mut u2 = u.clone();
            reduce_basis(r, &mut u2);
            // invariance check
            let su: Vec<Vec<Q>> = u2.iter().map(|v| mq.mul_vec(v)).collect();
            let mut both = u2.clone();
            both.extend(su);
            reduce_basis(r, &mut both);
            if both.len() != u2.len() {
                return Err(Error::RecipeMismatch("pinned subspace is not s-invariant".into()));
            }
            let perp = orth_complement(rs, &u2);
            Some((u2, perp))
        }
        _ => None,
    };
    let mut blocks = Vec::new();
    for (m, _k) in factors {
        if m == 1 {
            continue;
        }
        let comp = exact_kernel(&poly_at_matrix(&cyclotomic(m), &s.matrix));
        match &pin_space {
            None => blocks.extend(split_component(rs, s, &comp, m, false, rng)?),
            Some((u, perp)) => {
                let a = intersect(r, &comp, u);
                let b = intersect(r, &comp, perp);
                blocks.extend(split_component(rs, s, &a, m, true, rng)?);
                blocks.extend(split_component(rs, s, &b, m, false, rng)?);
            }
        }
    }
    let total: usize = fixed.dim() + blocks.iter().map(|b| b.dim()).sum::<usize>();
    if total != r {
        return Err(Error::DimMismatch(format!("blocks span {total} of {r} dimensions")));
    }
    Ok((fixed, blocks))
}

pub fn invariant_decomposition(rs: &RootSystem, s: &WeylElement, seed: u64) -> Result<(InvariantBlock, Vec<InvariantBlock>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    invariant_decomposition_with(rs, s, None, &mut rng)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorVec {
    /// Block index: 0 is the fixed block, i >= 1 the i-th ordered block.
    pub block: usize,
    pub vector: Vec<f64>,
    /// Power of two applied by the rescaling step.
    pub exponent: i32,
    #[serde(skip)]
    pub exact: Option<Vec<Q>>,
}

impl GeneratorVec {
    pub fn scaled(&self) -> Vec<f64> {
        let f = (2.0f64).powi(self.exponent);
        self.vector.iter().map(|x| x * f).collect()
    }
}

/// Choose h_i in every block with h_i(a) != 0 for all roots not orthogonal to it.
/// The fixed block gets an exact rational vector.
pub fn choose_generators(
    rs: &RootSystem,
    fixed: &InvariantBlock,
    blocks: &[InvariantBlock],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<GeneratorVec>> {
    let n = rs.num_roots();
    let mut out = Vec::new();
    // fixed block, exact
    {
        let basis = fixed.exact.clone().unwrap_or_default();
        let active: Vec<usize> = (0..n).filter(|&a| !fixed.orthogonal_to(rs, &rs.roots[a])).collect();
        let mut found = None;
        for attempt in 0..64 {
            if basis.is_empty() {
                found = Some(vec![Q::zero(); rs.rank()]);
                break;
            }
            let span = 3 + attempt as i64;
            let coeffs: Vec<i64> = (0..basis.len()).map(|_| rng.gen_range(-span..=span)).collect();
            let mut v = vec![Q::zero(); rs.rank()];
            for (c, b) in coeffs.iter().zip(&basis) {
                for i in 0..rs.rank() {
                    v[i] += qi(*c) * &b[i];
                }
            }
            let ok = active.iter().all(|&a| {
                let rq: Vec<Q> = rs.roots[a].iter().map(|&x| qi(x)).collect();
                !rs.inner_q(&v, &rq).is_zero()
            });
            if ok {
                found = Some(v);
                break;
            }
        }
        let v = found.ok_or(Error::GeneratorSearchFailed { block: 0, roots: active.clone() })?;
        out.push(GeneratorVec { block: 0, vector: to_f64(&v), exponent: 0, exact: Some(v) });
    }
    for (bi, b) in blocks.iter().enumerate() {
        let active: Vec<usize> = (0..n).filter(|&a| !b.orthogonal_to(rs, &rs.roots[a])).collect();
        if let Some(ex) = &b.exact {
            // lines: the exact spanning vector, up to sign
            let v = ex[0].clone();
            let ok = active.iter().all(|&a| rs.inner_f64(&to_f64(&v), &rs.roots[a]).abs() > SIGN_TOL);
            if !ok {
                return Err(Error::GeneratorSearchFailed { block: bi + 1, roots: active });
            }
            out.push(GeneratorVec { block: bi + 1, vector: to_f64(&v), exponent: 0, exact: Some(v) });
            continue;
        }
        let mut found = None;
        for _ in 0..64 {
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (phi.cos(), phi.sin());
            let v: Vec<f64> = (0..rs.rank()).map(|i| c * b.basis[0][i] + s * b.basis[1][i]).collect();
            let minv = active.iter().map(|&a| rs.inner_f64(&v, &rs.roots[a]).abs()).fold(f64::INFINITY, f64::min);
            if minv > 1e-3 {
                found = Some(v);
                break;
            }
        }
        let v = found.ok_or(Error::GeneratorSearchFailed { block: bi + 1, roots: active })?;
        out.push(GeneratorVec { block: bi + 1, vector: v, exponent: 0, exact: None });
    }
    Ok(out)
}

/// Greedy powers of two so that |h_{i_k}(a)| > |sum_{l<=j<k} h_{i_j}(a)| on each Delta-bar_{i_k}.
pub fn rescale_for_dominance(
    rs: &RootSystem,
    gens: &mut [GeneratorVec],
    levels: &[usize],
    partition: &[Vec<usize>],
) -> Result<()> {
    let vals = |g: &GeneratorVec, a: usize| rs.inner_f64(&g.scaled(), &rs.roots[a]);
    for k in 1..levels.len() {
        let mut c = 0;
        loop {
            gens[levels[k]].exponent = c;
            let ok = partition[k].iter().all(|&a| {
                let own = vals(&gens[levels[k]], a).abs();
                let mut worst: f64 = 0.0;
                for l in 0..k {
                    let s: f64 = (l..k).map(|j| vals(&gens[levels[j]], a)).sum();
                    worst = worst.max(s.abs());
                }
                own > worst + SIGN_TOL
            });
            if ok {
                break;
            }
            c += 1;
            if c > MAX_EXPONENT {
                return Err(Error::RescaleOverflow(k));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SliceDims {
    pub l: usize,
    pub dim_h0: usize,
    #[serde(rename = "dim_Z")]
    pub dim_z: usize,
    pub dim_slice: usize,
    pub dim_g: usize,
}

#[derive(Clone, Debug)]
pub enum BlockOrder {
    /// Pinned blocks first, then decreasing rotation angle (minimal angle last).
    Default,
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct SlicePlan {
    pub rs: RootSystem,
    pub s: WeylElement,
    pub s_inv: WeylElement,
    pub seed: u64,
    pub attempt: u64,
    pub fixed: InvariantBlock,
    /// Ordered non-fixed blocks; block index i >= 1 is blocks[i - 1].
    pub blocks: Vec<InvariantBlock>,
    pub block_order: Vec<usize>,
    /// One generator per block (index 0 = fixed).
    pub generators: Vec<GeneratorVec>,
    /// i_k for k = 0..M.
    pub levels: Vec<usize>,
    /// Delta-bar_{i_k}, k = 0..M.
    pub partition: Vec<Vec<usize>>,
    pub level_of: Vec<usize>,
    /// Delta_{i_k}.
    pub chain: Vec<Vec<usize>>,
    pub hbar: Vec<f64>,
    pub hbar0: Vec<f64>,
    pub positive: Vec<bool>,
    pub simple: Vec<usize>,
    /// Coordinates of each root in the basis `simple`.
    pub gamma_coords: Vec<Vec<i64>>,
    pub levi_roots: Vec<usize>,
    pub nilradical_roots: Vec<usize>,
    pub ns_roots: Vec<usize>,
    pub sectors: Vec<LevelSectors>,
    pub dims: SliceDims,
}

impl SlicePlan {
    pub fn num_levels(&self) -> usize {
        self.levels.len() - 1
    }

    /// JSON dump; root sets are indices into the root table of `root_system`.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let chain = slicegeom::levi_chain(self)?;
        let blocks: Vec<serde_json::Value> = std::iter::once(&self.fixed)
            .chain(&self.blocks)
            .enumerate()
            .map(|(i, b)| {
                let (j, m) = b.angle();
                serde_json::json!({
                    "index": i, "kind": b.kind, "m": b.m, "angle": format!("{j}/{m}"),
                    "dim": b.dim(), "pinned": b.pinned, "basis": b.basis,
                })
            })
            .collect();
        let positive: Vec<usize> = (0..self.positive.len()).filter(|&a| self.positive[a]).collect();
        Ok(serde_json::json!({
            "root_system": self.rs.to_json(),
            "word": self.s.word,
            "order": self.s.order,
            "seed": self.seed,
            "attempt": self.attempt,
            "block_order": self.block_order,
            "blocks": blocks,
            "generators": self.generators,
            "levels": self.levels,
            "hbar": self.hbar,
            "partition": self.partition,
            "chain": self.chain,
            "positive": positive,
            "simple": self.simple,
            "levi_roots": self.levi_roots,
            "nilradical_roots": self.nilradical_roots,
            "ns_roots": self.ns_roots,
            "levi_chain": chain,
            "sectors": self.sectors,
            "dims": self.dims,
            "theta_min": self.theta_min().map(|(j, m)| format!("{j}/{m}")),
        }))
    }

    pub fn gamma_height(&self, a: usize) -> i64 {
        self.gamma_coords[a].iter().sum()
    }

    pub fn theta_min(&self) -> Option<(u32, u32)> {
        self.levels.last().filter(|&&i| i > 0).map(|&i| self.blocks[i - 1].angle())
    }

    pub fn block_of_level(&self, k: usize) -> &InvariantBlock {
        let i = self.levels[k];
        if i == 0 {
            &self.fixed
        } else {
            &self.blocks[i - 1]
        }
    }
}

fn order_blocks(blocks: &[InvariantBlock], order: &BlockOrder) -> Result<Vec<usize>> {
    match order {
        BlockOrder::Default => {
            let mut idx: Vec<usize> = (0..blocks.len()).collect();
            idx.sort_by(|&a, &b| {
                let (ja, ma) = blocks[a].angle();
                let (jb, mb) = blocks[b].angle();
                blocks[b]
                    .pinned
                    .cmp(&blocks[a].pinned)
                    .then_with(|| (jb as u64 * ma as u64).cmp(&(ja as u64 * mb as u64)))
                    .then(a.cmp(&b))
            });
            Ok(idx)
        }
        BlockOrder::Explicit(p) => {
            let mut sorted = p.clone();
            sorted.sort();
            if sorted != (0..blocks.len()).collect::<Vec<_>>() {
                return Err(Error::Usage(format!("block order {p:?} is not a permutation of 0..{}", blocks.len())));
            }
            Ok(p.clone())
        }
    }
}

pub fn build_plan(rs: &RootSystem, s: &WeylElement, order: &BlockOrder, seed: u64) -> Result<SlicePlan> {
    build_plan_pinned(rs, s, order, seed, None)
}

pub fn build_plan_pinned(
    rs: &RootSystem,
    s: &WeylElement,
    order: &BlockOrder,
    seed: u64,
    pinned: Option<&[Vec<i64>]>,
) -> Result<SlicePlan> {
    let mut last_err = None;
    for attempt in 0..=MAX_RETRIES {
        let sub_seed = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match try_build(rs, s, order, seed, attempt, sub_seed, pinned) {
            Ok(p) => return Ok(p),
            Err(e @ Error::CertificateFailed(_)) | Err(e @ Error::GeneratorSearchFailed { .. }) | Err(e @ Error::RescaleOverflow(_)) => {
                last_err = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn try_build(
    rs: &RootSystem,
    s: &WeylElement,
    order: &BlockOrder,
    seed: u64,
    attempt: u64,
    sub_seed: u64,
    pinned: Option<&[Vec<i64>]>,
) -> Result<SlicePlan> {
    let n = rs.num_roots();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
    let (fixed, raw_blocks) = invariant_decomposition_with(rs, s, pinned, &mut rng)?;
    let perm = order_blocks(&raw_blocks, order)?;
    let blocks: Vec<InvariantBlock> = perm.iter().map(|&i| raw_blocks[i].clone()).collect();
    let k_blocks = blocks.len();

    // Delta-bar_i: largest block index not orthogonal to the root
    let mut raw_index = vec![0usize; n];
    for a in 0..n {
        for i in (1..=k_blocks).rev() {
            if !blocks[i - 1].orthogonal_to(rs, &rs.roots[a]) {
                raw_index[a] = i;
                break;
            }
        }
    }
    for a in 0..n {
        let fixed_exact = s.apply(a) == a;
        if fixed_exact != (raw_index[a] == 0) {
            return Err(Error::CertificateFailed(format!("root {a}: fixed-set membership disagrees")));
        }
    }
    let mut levels = vec![0usize];
    for i in 1..=k_blocks {
        if raw_index.contains(&i) {
            levels.push(i);
        }
    }
    let level_of: Vec<usize> = raw_index.iter().map(|i| levels.iter().position(|l| l == i).unwrap()).collect();
    let partition: Vec<Vec<usize>> =
        (0..levels.len()).map(|k| (0..n).filter(|&a| level_of[a] == k).collect()).collect();
    for part in &partition {
        for &a in part {
            if level_of[s.apply(a)] != level_of[a] {
                return Err(Error::CertificateFailed(format!("partition piece containing {a} not s-stable")));
            }
        }
    }

    let mut generators = choose_generators(rs, &fixed, &blocks, &mut rng)?;
    rescale_for_dominance(rs, &mut generators, &levels, &partition)?;

    let val = |g: &GeneratorVec, a: usize| rs.inner_f64(&g.scaled(), &rs.roots[a]);
    let hbar: Vec<f64> = (0..n).map(|a| levels.iter().map(|&i| val(&generators[i], a)).sum()).collect();
    let hbar0: Vec<f64> = (0..n).map(|a| levels[1..].iter().map(|&i| val(&generators[i], a)).sum()).collect();
    if let Some(a) = (0..n).find(|&a| hbar[a].abs() <= SIGN_TOL) {
        return Err(Error::CertificateFailed(format!("hbar vanishes on root {a}")));
    }
    let positive: Vec<bool> = hbar.iter().map(|&x| x > 0.0).collect();
    rs.check_positive_system(&positive).map_err(|e| Error::CertificateFailed(e.to_string()))?;
    for a in 0..n {
        let k = level_of[a];
        let own = val(&generators[levels[k]], a);
        if (own > 0.0) != positive[a] {
            return Err(Error::CertificateFailed(format!("positivity rule fails on root {a}")));
        }
    }
    let simple = rs.simple_system(&positive).map_err(|e| Error::CertificateFailed(e.to_string()))?;
    let gamma_coords = simple_coords(rs, &simple)?;

    let chain: Vec<Vec<usize>> = (0..levels.len()).map(|k| (0..n).filter(|&a| level_of[a] <= k).collect()).collect();
    let levi_roots = partition[0].clone();
    let nilradical_roots: Vec<usize> = (0..n).filter(|&a| level_of[a] > 0 && !positive[a]).collect();
    let float_nil: Vec<usize> = (0..n).filter(|&a| hbar0[a] < 0.0 && hbar0[a].abs() > SIGN_TOL).collect();
    if float_nil != nilradical_roots {
        return Err(Error::CertificateFailed("nilradical sign scan disagrees with the partition".into()));
    }
    let ns_roots: Vec<usize> = nilradical_roots.iter().copied().filter(|&a| positive[s.apply(a)]).collect();
    let l = length(rs, s, &positive)?;
    if l != ns_roots.len() {
        return Err(Error::DimMismatch(format!("l(s) = {l} but |N_s roots| = {}", ns_roots.len())));
    }
    let dim_h0 = fixed.dim();
    let dim_z = levi_roots.len() + dim_h0;
    let dims = SliceDims { l, dim_h0, dim_z, dim_slice: l + dim_z, dim_g: n + rs.rank() };

    let mut plan = SlicePlan {
        rs: rs.clone(),
        s: s.clone(),
        s_inv: s.inverse(rs),
        seed,
        attempt,
        fixed,
        blocks,
        block_order: perm,
        generators,
        levels,
        partition,
        level_of,
        chain,
        hbar,
        hbar0,
        positive,
        simple,
        gamma_coords,
        levi_roots,
        nilradical_roots,
        ns_roots,
        sectors: vec![],
        dims,
    };
    plan.sectors = slicegeom::sector_decomposition(&plan)?;
    Ok(plan)
}

/// Identity-matrix shorthand used by tests.
pub fn is_identity_weyl(s: &WeylElement) -> bool {
    s.matrix == imat_identity(s.matrix.len())
}

/// Trace of s restricted to a float block (basis is gram-orthonormal).
pub fn restricted_trace(rs: &RootSystem, s: &WeylElement, b: &InvariantBlock) -> f64 {
    b.basis.iter().map(|u| rs.inner_ff(u, &mat_f64_vec(&s.matrix, u))).sum()
}

pub fn sign_margin(plan: &SlicePlan) -> f64 {
    plan.hbar.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
}

pub fn exact_pairing_sign(rs: &RootSystem, v: &[Q], a: usize) -> i32 {
    let rq: Vec<Q> = rs.roots[a].iter().map(|&x| qi(x)).collect();
    let p = rs.inner_q(v, &rq);
    if p.is_positive() {
        1
    } else if p.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, weyl_from_roots, weyl_from_word, Family, SimpleType};

    fn rs(f: Family, r: usize) -> RootSystem {
        build_root_system(SimpleType::new(f, r).unwrap()).unwrap()
    }

    #[test]
    fn identity_single_fixed_block() {
        let a3 = rs(Family::A, 3);
        let (fixed, blocks) = invariant_decomposition(&a3, &WeylElement::identity(&a3), 0).unwrap();
        assert_eq!(fixed.dim(), 3);
        assert!(blocks.is_empty());
    }

    #[test]
    fn a2_coxeter_one_plane() {
        let a2 = rs(Family::A, 2);
        let s = weyl_from_word(&a2, &[0, 1]);
        let (fixed, blocks) = invariant_decomposition(&a2, &s, 0).unwrap();
        assert_eq!(fixed.dim(), 0);
        assert_eq!(blocks.len(), 1);
        assert_eq!((blocks[0].kind, blocks[0].m), (BlockKind::Plane, 3));
        let tr = restricted_trace(&a2, &s, &blocks[0]);
        assert!((tr - 2.0 * (std::f64::consts::TAU / 3.0).cos()).abs() < 1e-9);
    }

    #[test]
    fn b2_minus_identity_two_lines() {
        let b2 = rs(Family::B, 2);
        let s = weyl_from_roots(&b2, &[vec![1, 0], vec![1, 2]]).unwrap();
        let (fixed, blocks) = invariant_decomposition(&b2, &s, 0).unwrap();
        assert_eq!(fixed.dim(), 0);
        assert_eq!(blocks.len(), 2);
        assert!(blocks.iter().all(|b| b.kind == BlockKind::Line && b.m == 2));
        assert!((restricted_trace(&b2, &s, &blocks[0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_plan() {
        let a2 = rs(Family::A, 2);
        let p = build_plan(&a2, &WeylElement::identity(&a2), &BlockOrder::Default, 3).unwrap();
        assert_eq!(p.num_levels(), 0);
        assert_eq!(p.levi_roots.len(), 6);
        assert!(p.nilradical_roots.is_empty() && p.ns_roots.is_empty());
        assert_eq!(p.dims.dim_slice, 8);
    }

    #[test]
    fn a2_coxeter_plan_length() {
        let a2 = rs(Family::A, 2);
        let s = weyl_from_word(&a2, &[0, 1]);
        let p = build_plan(&a2, &s, &BlockOrder::Default, 0).unwrap();
        assert_eq!(p.dims.l, 2);
        assert_eq!(p.nilradical_roots.len(), 3);
    }

    #[test]
    fn blocks_orthogonal() {
        let d5 = rs(Family::D, 5);
        let s = weyl_from_word(&d5, &[0, 1, 2, 3, 4, 7, 12]);
        let (fixed, blocks) = invariant_decomposition(&d5, &s, 11).unwrap();
        let mut all: Vec<&InvariantBlock> = vec![&fixed];
        all.extend(blocks.iter());
        for (i, a) in all.iter().enumerate() {
            for b in all.iter().skip(i + 1) {
                for u in &a.basis {
                    for v in &b.basis {
                        assert!(d5.inner_ff(u, v).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
