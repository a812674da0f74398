//! Subregular nilpotent catalog: e, s_e, block recipes and the dimension claims.

use crate::error::{Error, Result};
use crate::qmath::{gcd, qi};
use crate::rootsys::{build_root_system, weyl_from_roots, Family, RootSystem, SimpleType};
use crate::spectral::{build_plan_pinned, BlockOrder, SlicePlan};
use num::Zero;
use serde::Serialize;

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Expected {
    pub l: usize,
    pub dim_h0: usize,
    pub dim_slice: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubregularDatum {
    #[serde(skip)]
    pub ty: SimpleType,
    pub case: u8,
    pub e_roots: Vec<Vec<i64>>,
    pub s_e_word: Vec<Vec<i64>>,
    /// The word as printed in the catalog, where it differs from `s_e_word`.
    pub text_word: Option<Vec<Vec<i64>>>,
    /// theta_min / 2 pi.
    pub theta_min: (u32, u32),
    /// Exact s_e-invariant subspace placed at block index 1.
    pub pinned: Option<Vec<Vec<i64>>>,
    pub pinned_theta: Option<(u32, u32)>,
    pub expected: Expected,
    pub degenerate: bool,
}

/// Root with the given (1-based index, coefficient) terms.
fn rt(r: usize, terms: &[(usize, i64)]) -> Vec<i64> {
    let mut v = vec![0; r];
    for &(i, c) in terms {
        v[i - 1] += c;
    }
    v
}

fn simple_range(r: usize, from: usize, to: usize) -> Vec<Vec<i64>> {
    (from..=to).map(|i| rt(r, &[(i, 1)])).collect()
}

fn reduce(p: u32, q: u32) -> (u32, u32) {
    let g = gcd(p, q);
    (p / g, q / g)
}

pub fn subregular_data(ty: SimpleType) -> Result<SubregularDatum> {
    let r = ty.rank;
    let ty = SimpleType::new(ty.family, r)?;
    let rr = r as u32;
    let (case, e_roots, word, text_word, theta, pinned, pinned_theta) = match ty.family {
        Family::A => {
            let e = if r >= 2 { simple_range(r, 1, r - 1) } else { vec![] };
            (1, e.clone(), e, None, reduce(1, rr.max(1)), None, None)
        }
        Family::B => {
            let mut e = simple_range(r, 1, r - 2);
            e.push(rt(r, &[(r - 1, 1), (r, 1)]));
            e.push(rt(r, &[(r, 1)]));
            let mut w = simple_range(r, 1, r - 1);
            w.push(rt(r, &[(r - 1, 1), (r, 2)]));
            (2, e, w, None, reduce(1, 2 * (rr - 1)), Some(vec![rt(r, &[(r, 1)])]), Some((1, 2)))
        }
        Family::C => {
            let mut e = simple_range(r, 1, r - 2);
            e.push(rt(r, &[(r - 1, 2), (r, 1)]));
            e.push(rt(r, &[(r, 1)]));
            (3, e.clone(), e, None, reduce(1, 2 * (rr - 1)), Some(vec![rt(r, &[(r, 1)])]), Some((1, 2)))
        }
        Family::D => {
            let mut e = simple_range(r, 1, r - 4);
            e.push(rt(r, &[(r - 3, 1), (r - 2, 1)]));
            e.push(rt(r, &[(r - 2, 1), (r - 1, 1)]));
            e.push(rt(r, &[(r - 1, 1)]));
            e.push(rt(r, &[(r, 1)]));
            let mut text = simple_range(r, 1, r - 1);
            text.push(rt(r, &[(r - 2, 1), (r - 1, 1), (r, 1)]));
            let d2 = vec![rt(r, &[(r - 2, 1), (r - 1, 1)]), rt(r, &[(r - 2, 1), (r, 1)])];
            (4, e.clone(), e, Some(text), reduce(1, 2 * (rr - 2)), Some(d2), Some((1, 4)))
        }
        Family::E => {
            let (e, text, theta) = match r {
                6 => {
                    let e = vec![
                        rt(6, &[(1, 1)]),
                        rt(6, &[(2, 1), (3, 1)]),
                        rt(6, &[(4, 1)]),
                        rt(6, &[(5, 1)]),
                        rt(6, &[(3, 1), (6, 1)]),
                        rt(6, &[(6, 1)]),
                    ];
                    (e, true, (1, 9))
                }
                7 => (
                    vec![
                        rt(7, &[(1, 1)]),
                        rt(7, &[(2, 1)]),
                        rt(7, &[(3, 1), (4, 1)]),
                        rt(7, &[(5, 1)]),
                        rt(7, &[(6, 1)]),
                        rt(7, &[(7, 1)]),
                        rt(7, &[(4, 1), (7, 1)]),
                    ],
                    false,
                    (1, 14),
                ),
                _ => (
                    vec![
                        rt(8, &[(1, 1)]),
                        rt(8, &[(2, 1)]),
                        rt(8, &[(3, 1)]),
                        rt(8, &[(4, 1), (5, 1)]),
                        rt(8, &[(5, 1), (8, 1)]),
                        rt(8, &[(6, 1)]),
                        rt(8, &[(7, 1)]),
                        rt(8, &[(8, 1)]),
                    ],
                    false,
                    (1, 24),
                ),
            };
            if text {
                // same reflections, reordered so the product lies in class E6(a1)
                let w = vec![e[0].clone(), e[1].clone(), e[4].clone(), e[2].clone(), e[3].clone(), e[5].clone()];
                (5, e.clone(), w, Some(e), theta, None, None)
            } else {
                (5, e.clone(), e, None, theta, None, None)
            }
        }
        Family::F => {
            let e = vec![rt(4, &[(1, 1)]), rt(4, &[(2, 1)]), rt(4, &[(2, 1), (3, 2)]), rt(4, &[(3, 1), (4, 1)])];
            (6, e.clone(), e, None, (1, 6), None, None)
        }
        Family::G => {
            let e = vec![rt(2, &[(1, 2), (2, 1)]), rt(2, &[(2, 1)])];
            let w = vec![rt(2, &[(1, 3), (2, 1)]), rt(2, &[(2, 1)])];
            (5, e, w, None, (1, 6), None, None)
        }
    };
    let degenerate = ty.family == Family::A && r == 1;
    let expected = match ty.family {
        Family::A if degenerate => Expected { l: 0, dim_h0: 1, dim_slice: 3 },
        Family::A => Expected { l: r + 1, dim_h0: 1, dim_slice: r + 2 },
        _ => Expected { l: r + 2, dim_h0: 0, dim_slice: r + 2 },
    };
    Ok(SubregularDatum {
        ty,
        case,
        e_roots,
        s_e_word: word,
        text_word,
        theta_min: theta,
        pinned,
        pinned_theta,
        expected,
        degenerate,
    })
}

/// Checks every catalog root is a root of the system.
pub fn check_well_formed(rs: &RootSystem, d: &SubregularDatum) -> Result<()> {
    let all = d.e_roots.iter().chain(&d.s_e_word).chain(d.text_word.iter().flatten()).chain(d.pinned.iter().flatten());
    for v in all {
        rs.root_index(v)?;
    }
    Ok(())
}

fn recipe_structure(plan: &SlicePlan, d: &SubregularDatum) -> std::result::Result<(), String> {
    if d.degenerate {
        return Ok(());
    }
    let rs = &plan.rs;
    let n = rs.num_roots();
    let m = plan.num_levels();
    let min_set = plan.partition.last().cloned().unwrap_or_default();
    if !plan.partition[0].is_empty() {
        return Err("s_e fixes some roots".into());
    }
    match &d.pinned {
        None => {
            if m != 1 || min_set.len() != n {
                return Err(format!("expected Delta_min = Delta, got {} levels", m));
            }
        }
        Some(pin) => {
            let pin_rank = crate::qmath::QMatrix::from_i64(pin).rank();
            let want: Vec<usize> = (0..n)
                .filter(|&i| {
                    let mut rows = pin.clone();
                    rows.push(rs.roots[i].clone());
                    crate::qmath::QMatrix::from_i64(&rows).rank() == pin_rank
                })
                .collect();
            if m != 2 || plan.partition[1] != want || min_set.len() != n - want.len() {
                return Err(format!("expected Delta_1 = {want:?} and Delta_min its complement"));
            }
            if plan.levels[1] != 1 || !plan.blocks[0].pinned {
                return Err("pinned block is not h_1".into());
            }
        }
    }
    Ok(())
}

/// The plan for s_e with the case-specific block order (h_min last).
pub fn subregular_plan(ty: SimpleType, seed: u64) -> Result<(SubregularDatum, SlicePlan)> {
    let d = subregular_data(ty)?;
    let rs = build_root_system(d.ty)?;
    check_well_formed(&rs, &d)?;
    let s = weyl_from_roots(&rs, &d.s_e_word)?;
    let mut last = String::new();
    for attempt in 0..16u64 {
        let plan = build_plan_pinned(&rs, &s, &BlockOrder::Default, seed.wrapping_add(attempt * 7919), d.pinned.as_deref())?;
        match recipe_structure(&plan, &d) {
            Ok(()) => return Ok((d, plan)),
            Err(e) => last = e,
        }
    }
    Err(Error::RecipeMismatch(format!("{}: {last}", d.ty)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SubregularReport {
    #[serde(rename = "type")]
    pub ty: String,
    pub l: usize,
    pub dim_h0: usize,
    #[serde(rename = "dim_Z")]
    pub dim_z: usize,
    pub dim_slice: usize,
    pub theta_min: String,
    pub theta_min_expected: String,
    pub borel: bool,
    pub degenerate: bool,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn frac(p: (u32, u32)) -> String {
    format!("{}/{}", p.0, p.1)
}

pub fn verify_subregular(ty: SimpleType, seed: u64) -> Result<SubregularReport> {
    let (d, plan) = subregular_plan(ty, seed)?;
    let rs = &plan.rs;
    let mut failures = Vec::new();
    let dims = &plan.dims;
    let theta = plan.theta_min();
    let borel = plan.levi_roots.is_empty();
    if !d.degenerate {
        if dims.l != d.expected.l {
            failures.push(format!("l(s_e) = {} but the catalog states {}", dims.l, d.expected.l));
        }
        if dims.dim_h0 != d.expected.dim_h0 {
            failures.push(format!("dim h0 = {} but the catalog states {}", dims.dim_h0, d.expected.dim_h0));
        }
        if dims.dim_slice != d.expected.dim_slice {
            failures.push(format!("dim slice = {} but the catalog states {}", dims.dim_slice, d.expected.dim_slice));
        }
        if !borel {
            failures.push("parabolic is not Borel".into());
        }
        if d.ty.family == Family::A {
            // h0 is the omega_r line: orthogonal to alpha_1..alpha_{r-1}
            let r = rs.rank();
            let basis = plan.fixed.exact.clone().unwrap_or_default();
            let ok = basis.len() == 1
                && (0..r - 1).all(|i| {
                    let a: Vec<_> = rs.roots[i].iter().map(|&x| qi(x)).collect();
                    rs.inner_q(&basis[0], &a).is_zero()
                });
            if !ok {
                failures.push("h0 is not the omega_r line".into());
            }
        }
        if theta != Some(d.theta_min) {
            failures.push(format!(
                "theta_min = {} of 2pi but the catalog states {}",
                theta.map(frac).unwrap_or_else(|| "none".into()),
                frac(d.theta_min)
            ));
        }
        if let Some(pt) = d.pinned_theta {
            if plan.blocks[0].angle() != pt {
                failures.push(format!("pinned block angle {} but expected {}", frac(plan.blocks[0].angle()), frac(pt)));
            }
        }
    }
    Ok(SubregularReport {
        ty: d.ty.to_string(),
        l: dims.l,
        dim_h0: dims.dim_h0,
        dim_z: dims.dim_z,
        dim_slice: dims.dim_slice,
        theta_min: theta.map(frac).unwrap_or_else(|| "none".into()),
        theta_min_expected: frac(d.theta_min),
        borel,
        degenerate: d.degenerate,
        pass: failures.is_empty(),
        failures,
    })
}
