//! Levi chain, sector sets and dimension bookkeeping on top of a plan.

use crate::error::{Error, Result};
use crate::spectral::{SliceDims, SlicePlan};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Clone, Debug, Serialize)]
pub struct LeviLevel {
    pub k: usize,
    /// Delta_{i_k}.
    pub g_roots: Vec<usize>,
    /// Negative roots of Delta-bar_{i_k} (empty for k = 0).
    pub n_roots: Vec<usize>,
    pub nbar_roots: Vec<usize>,
    /// Simple roots (from Gamma) spanning Delta_{i_k}.
    pub simple: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeviChain {
    pub levels: Vec<LeviLevel>,
    /// Aggregate N_k: negative roots outside Delta_{i_k}.
    pub aggregate_n: Vec<Vec<usize>>,
    pub aggregate_nbar: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSectors {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: i64,
    /// Delta-bar^l_{i_k}, l = 0..D+1.
    pub sets: Vec<Vec<usize>>,
    /// Delta_s^D = {a in Delta-bar^D : s a > 0}.
    pub ns_d: Vec<usize>,
}

impl LevelSectors {
    pub fn set(&self, l: i64) -> &[usize] {
        if l < 0 || l as usize >= self.sets.len() {
            &[]
        } else {
            &self.sets[l as usize]
        }
    }
}

fn power_apply(plan: &SlicePlan, a: usize, p: i64) -> usize {
    let mut x = a;
    if p >= 0 {
        for _ in 0..p {
            x = plan.s.apply(x);
        }
    } else {
        for _ in 0..(-p) {
            x = plan.s_inv.apply(x);
        }
    }
    x
}

fn image(plan: &SlicePlan, set: &[usize], p: i64) -> BTreeSet<usize> {
    set.iter().map(|&a| power_apply(plan, a, p)).collect()
}

pub fn sector_decomposition(plan: &SlicePlan) -> Result<Vec<LevelSectors>> {
    let mut out = Vec::new();
    for k in 1..plan.levels.len() {
        let neg: Vec<usize> = plan.partition[k].iter().copied().filter(|&a| !plan.positive[a]).collect();
        let mut l_of = Vec::new();
        for &a in &neg {
            let mut l = 0usize;
            let mut x = plan.s_inv.apply(a);
            while !plan.positive[x] {
                l += 1;
                x = plan.s_inv.apply(x);
                if l > plan.s.order as usize {
                    return Err(Error::StageAssertionFailed(format!("root {a}: s-orbit never becomes positive")));
                }
            }
            l_of.push(l);
        }
        let maxl = l_of.iter().copied().max().unwrap_or(0);
        let d = maxl as i64 - 1;
        let mut sets = vec![Vec::new(); maxl + 1];
        for (&a, &l) in neg.iter().zip(&l_of) {
            sets[l].push(a);
        }
        let ns_d: Vec<usize> = if d >= 0 {
            sets[d as usize].iter().copied().filter(|&a| plan.positive[plan.s.apply(a)]).collect()
        } else {
            vec![]
        };
        let sec = LevelSectors { k, d, sets, ns_d };
        check_sectors(plan, &sec)?;
        out.push(sec);
    }
    Ok(out)
}

/// Root-level forms of the sector properties used by the inverse map.
pub fn check_sectors(plan: &SlicePlan, sec: &LevelSectors) -> Result<()> {
    let k = sec.k;
    let fail = |what: &str| Err(Error::StageAssertionFailed(format!("level {k}: {what}")));
    let part: BTreeSet<usize> = plan.partition[k].iter().copied().collect();
    let pos_part: BTreeSet<usize> = part.iter().copied().filter(|&a| plan.positive[a]).collect();
    let d = sec.d;
    // sap: s^{-p} Delta^{p-1} inside the positive part, p = 1..D+2
    for p in 1..=d + 2 {
        if !image(plan, sec.set(p - 1), -p).is_subset(&pos_part) {
            return fail(&format!("s^-{p} of sector {} not positive", p - 1));
        }
    }
    // sap1: s^{-1} Delta^p inside Delta^{p-1}
    for p in 1..=d + 1 {
        let prev: BTreeSet<usize> = sec.set(p - 1).iter().copied().collect();
        if !image(plan, sec.set(p), -1).is_subset(&prev) {
            return fail(&format!("s^-1 of sector {p} leaves sector {}", p - 1));
        }
    }
    // ns cap Delta-bar_{i_k} = Delta_s^D u Delta^{D+1}
    let ns_here: BTreeSet<usize> = plan.ns_roots.iter().copied().filter(|a| part.contains(a)).collect();
    let mut predicted: BTreeSet<usize> = sec.ns_d.iter().copied().collect();
    predicted.extend(sec.set(d + 1).iter().copied());
    if ns_here != predicted {
        return fail("N_s roots differ from Delta_s^D u Delta^{D+1}");
    }
    // every root of Delta^{D+1} has s a positive
    if sec.set(d + 1).iter().any(|&a| !plan.positive[plan.s.apply(a)]) {
        return fail("Delta^{D+1} not inside s^-1(Delta_+)");
    }
    // ff: s^{-1} Delta^0 = s^{-D-1} Delta_s^D u s^{-D-2} Delta^{D+1}
    if d >= 0 {
        let lhs = image(plan, sec.set(0), -1);
        let a = image(plan, &sec.ns_d, -d - 1);
        let b = image(plan, sec.set(d + 1), -d - 2);
        if !a.is_disjoint(&b) || lhs != a.union(&b).copied().collect() {
            return fail("s^-1 Delta^0 does not split as predicted");
        }
    }
    Ok(())
}

pub fn levi_chain(plan: &SlicePlan) -> Result<LeviChain> {
    let n = plan.rs.num_roots();
    let mut levels = Vec::new();
    for k in 0..plan.levels.len() {
        let g_roots = plan.chain[k].clone();
        let (n_roots, nbar_roots) = if k == 0 {
            (vec![], vec![])
        } else {
            let part = &plan.partition[k];
            (
                part.iter().copied().filter(|&a| !plan.positive[a]).collect(),
                part.iter().copied().filter(|&a| plan.positive[a]).collect(),
            )
        };
        let simple = gamma_in(plan, &g_roots);
        levels.push(LeviLevel { k, g_roots, n_roots, nbar_roots, simple });
    }
    let aggregate_n: Vec<Vec<usize>> = (0..plan.levels.len())
        .map(|k| (0..n).filter(|&a| plan.level_of[a] > k && !plan.positive[a]).collect())
        .collect();
    let aggregate_nbar: Vec<Vec<usize>> = (0..plan.levels.len())
        .map(|k| (0..n).filter(|&a| plan.level_of[a] > k && plan.positive[a]).collect())
        .collect();
    let chain = LeviChain { levels, aggregate_n, aggregate_nbar };
    check_levi_chain(plan, &chain)?;
    Ok(chain)
}

/// Positions into plan.simple of the simple roots lying in `roots`.
pub fn gamma_in(plan: &SlicePlan, roots: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = roots.iter().copied().collect();
    (0..plan.simple.len()).filter(|&j| set.contains(&plan.simple[j])).collect()
}

fn check_levi_chain(plan: &SlicePlan, chain: &LeviChain) -> Result<()> {
    let rs = &plan.rs;
    let fail = |what: String| Err(Error::StageAssertionFailed(what));
    for k in 1..chain.levels.len() {
        let lev = &chain.levels[k];
        let below: BTreeSet<usize> = chain.levels[k - 1].g_roots.iter().copied().collect();
        let n_set: BTreeSet<usize> = lev.n_roots.iter().copied().collect();
        // Delta_{i_{k-1}} = {a in Delta_{i_k} : h_{i_k}(a) = 0}
        let zero: BTreeSet<usize> = lev.g_roots.iter().copied().filter(|&a| plan.level_of[a] < k).collect();
        if zero != below {
            return fail(format!("level {k}: chain inconsistency"));
        }
        // (Delta_{i_{k-1}} + n) cap Delta inside n, and n + n closed
        for &a in below.iter().chain(n_set.iter()) {
            for &b in &n_set {
                if let Some(c) = rs.add(a, b) {
                    if !n_set.contains(&c) {
                        return fail(format!("level {k}: n-roots not normalised by the Levi"));
                    }
                }
            }
        }
        if lev.simple.len() != lev.simple.iter().filter(|&&j| lev.g_roots.contains(&plan.simple[j])).count() {
            return fail(format!("level {k}: simple roots outside the Levi"));
        }
    }
    // nilradical = disjoint union of level n-roots
    let mut all: Vec<usize> = chain.levels.iter().flat_map(|l| l.n_roots.iter().copied()).collect();
    all.sort();
    if all != plan.nilradical_roots {
        return fail("nilradical is not the union of level nilradicals".into());
    }
    // each Levi is spanned by its simple roots
    for lev in &chain.levels {
        for &a in &lev.g_roots {
            let support_ok = (0..plan.simple.len()).all(|j| plan.gamma_coords[a][j] == 0 || lev.simple.contains(&j));
            if !support_ok {
                return fail(format!("level {}: root {a} not spanned by Levi simple roots", lev.k));
            }
        }
    }
    Ok(())
}

/// Integer grading on roots from weights on Gamma positions.
pub fn grade(plan: &SlicePlan, weights: &[i64], a: usize) -> i64 {
    plan.gamma_coords[a].iter().zip(weights).map(|(c, w)| c * w).sum()
}

/// Weights 1 on the Gamma positions in `on`, 0 elsewhere.
pub fn weights_on(plan: &SlicePlan, on: &[usize]) -> Vec<i64> {
    (0..plan.simple.len()).map(|j| i64::from(on.contains(&j))).collect()
}

/// Weights cutting out the level-k parabolic inside G_{i_k}: 1 on Gamma_k minus Gamma_{k-1}.
pub fn level_weights(plan: &SlicePlan, chain: &LeviChain, k: usize) -> Vec<i64> {
    let lo = &chain.levels[k - 1].simple;
    let hi: Vec<usize> = chain.levels[k].simple.iter().copied().filter(|j| !lo.contains(j)).collect();
    weights_on(plan, &hi)
}

/// Weights whose zero set is Delta_{i_k}: 1 on Gamma minus Gamma_k.
pub fn aggregate_weights(plan: &SlicePlan, chain: &LeviChain, k: usize) -> Vec<i64> {
    let on: Vec<usize> = (0..plan.simple.len()).filter(|j| !chain.levels[k].simple.contains(j)).collect();
    weights_on(plan, &on)
}

fn closed(plan: &SlicePlan, set: &[usize]) -> bool {
    let rs = &plan.rs;
    let inside: BTreeSet<usize> = set.iter().copied().collect();
    set.iter().all(|&a| set.iter().all(|&b| rs.add(a, b).is_none_or(|c| inside.contains(&c))))
}

/// Independent audit of a plan: partition cover, s-stability, positivity rule,
/// closure of the Levi chain and nilradicals, and |N_s roots| = l(s).
pub fn audit_plan(plan: &SlicePlan) -> Vec<String> {
    let rs = &plan.rs;
    let n = rs.num_roots();
    let mut bad = Vec::new();
    let mut seen = vec![0usize; n];
    for part in &plan.partition {
        for &a in part {
            seen[a] += 1;
        }
    }
    if seen.iter().any(|&c| c != 1) {
        bad.push("partition is not a disjoint cover".to_string());
    }
    for (k, part) in plan.partition.iter().enumerate() {
        let set: BTreeSet<usize> = part.iter().copied().collect();
        if part.iter().any(|&a| !set.contains(&plan.s.apply(a))) {
            bad.push(format!("partition piece {k} is not s-stable"));
        }
    }
    if rs.check_positive_system(&plan.positive).is_err() {
        bad.push("positive set is not a positive system".into());
    }
    for a in 0..n {
        let g = &plan.generators[plan.levels[plan.level_of[a]]];
        let own = rs.inner_f64(&g.scaled(), &rs.roots[a]);
        if plan.level_of[a] > 0 && ((own > 0.0) != plan.positive[a] || own.abs() <= crate::spectral::SIGN_TOL) {
            bad.push(format!("positivity rule fails on root {a}"));
        }
    }
    for (k, ch) in plan.chain.iter().enumerate() {
        let set: BTreeSet<usize> = ch.iter().copied().collect();
        if !closed(plan, ch) || ch.iter().any(|&a| !set.contains(&rs.neg(a))) {
            bad.push(format!("Delta_{k} is not a closed symmetric subsystem"));
        }
        if k > 0 {
            let prev: BTreeSet<usize> = plan.chain[k - 1].iter().copied().collect();
            let comp: Vec<usize> = ch.iter().copied().filter(|a| !prev.contains(a)).collect();
            if comp != plan.partition[k] {
                bad.push(format!("level {k} piece is not the complement of Delta_{}", k - 1));
            }
            let neg: Vec<usize> = comp.iter().copied().filter(|&a| !plan.positive[a]).collect();
            if !closed(plan, &neg) {
                bad.push(format!("level {k} nilradical is not closed"));
            }
        }
    }
    if !closed(plan, &plan.nilradical_roots) || !closed(plan, &plan.ns_roots) {
        bad.push("N or N_s root set is not closed".into());
    }
    match crate::rootsys::length(rs, &plan.s, &plan.positive) {
        Ok(l) if l == plan.ns_roots.len() => {}
        Ok(l) => bad.push(format!("l(s) = {l} but |N_s roots| = {}", plan.ns_roots.len())),
        Err(e) => bad.push(e.to_string()),
    }
    for sec in &plan.sectors {
        if let Err(e) = check_sectors(plan, sec) {
            bad.push(e.to_string());
        }
    }
    if let Err(e) = levi_chain(plan) {
        bad.push(e.to_string());
    }
    bad
}

pub fn slice_dims(plan: &SlicePlan) -> Result<SliceDims> {
    let l = crate::rootsys::length(&plan.rs, &plan.s, &plan.positive)?;
    if l != plan.ns_roots.len() {
        return Err(Error::DimMismatch(format!("inversions {l} vs |N_s| {}", plan.ns_roots.len())));
    }
    let dim_h0 = plan.fixed.dim();
    let dim_z = plan.levi_roots.len() + dim_h0;
    Ok(SliceDims { l, dim_h0, dim_z, dim_slice: l + dim_z, dim_g: plan.rs.num_roots() + plan.rs.rank() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, weyl_from_roots, weyl_from_word, Family, SimpleType, WeylElement};
    use crate::spectral::{build_plan, BlockOrder};

    fn plan(f: Family, r: usize, word: &[usize]) -> SlicePlan {
        let rs = build_root_system(SimpleType::new(f, r).unwrap()).unwrap();
        let s = weyl_from_word(&rs, word);
        build_plan(&rs, &s, &BlockOrder::Default, 1).unwrap()
    }

    #[test]
    fn identity_single_level() {
        let p = plan(Family::A, 3, &[]);
        let c = levi_chain(&p).unwrap();
        assert_eq!(c.levels.len(), 1);
        assert_eq!(c.levels[0].g_roots.len(), 12);
        assert!(p.sectors.is_empty());
    }

    #[test]
    fn a2_coxeter_sectors() {
        let p = plan(Family::A, 2, &[0, 1]);
        let c = levi_chain(&p).unwrap();
        assert_eq!(c.levels[1].n_roots.len(), 3);
        assert_eq!(p.sectors.len(), 1);
        assert_eq!(p.sectors[0].d, 0);
        let total: usize = p.sectors[0].sets.iter().map(|s| s.len()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn minus_identity_degenerate_level() {
        let rs = build_root_system(SimpleType::new(Family::B, 2).unwrap()).unwrap();
        let s = weyl_from_roots(&rs, &[vec![1, 0], vec![1, 2]]).unwrap();
        let p = build_plan(&rs, &s, &BlockOrder::Default, 0).unwrap();
        for sec in &p.sectors {
            assert_eq!(sec.d, -1);
            assert_eq!(sec.sets.len(), 1);
        }
        let c = levi_chain(&p).unwrap();
        let n: usize = c.levels.iter().map(|l| l.n_roots.len()).sum();
        assert_eq!(n, 4);
        assert_eq!(slice_dims(&p).unwrap().dim_slice, 4);
        let _ = WeylElement::identity(&rs);
    }
}
