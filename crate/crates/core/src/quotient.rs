//! Type A conjugation-quotient probe: characteristic-polynomial coordinates on
//! the subregular slice, carried as first-order jets in the slice parameters.

use crate::chevalley::{normal_factors, Chevalley, Gen, GroupElement};
use crate::crosssection::fixed_cocharacters;
use crate::error::{Error, Result};
use crate::qmath::{q_string, q_to_f64, qi, QMatrix, Q};
use crate::rootsys::{build_root_system, Family, SimpleType};
use crate::spectral::SlicePlan;
use crate::subregular::subregular_plan;
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Exact value with exact first partials.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub v: Q,
    pub d: Vec<Q>,
}

impl Jet {
    pub fn constant(v: Q, n: usize) -> Jet {
        Jet { v, d: vec![Q::zero(); n] }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { v: &self.v + &o.v, d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect() }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let d = self.d.iter().zip(&o.d).map(|(a, b)| a * &o.v + &self.v * b).collect();
        Jet { v: &self.v * &o.v, d }
    }

    pub fn scale(&self, c: &Q) -> Jet {
        Jet { v: &self.v * c, d: self.d.iter().map(|a| a * c).collect() }
    }

    fn is_zero(&self) -> bool {
        self.v.is_zero() && self.d.iter().all(Zero::is_zero)
    }
}

/// Square matrix of jets in the defining representation.
#[derive(Clone, Debug)]
pub struct DefiningRepElement {
    pub matrix: Vec<Vec<Jet>>,
    pub params: Vec<Q>,
}

impl DefiningRepElement {
    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    pub fn value(&self) -> QMatrix {
        let n = self.size();
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.matrix[i][j].v.clone());
            }
        }
        m
    }

    fn from_const(m: &QMatrix, np: usize) -> Vec<Vec<Jet>> {
        (0..m.rows).map(|i| (0..m.cols).map(|j| Jet::constant(m.at(i, j).clone(), np)).collect()).collect()
    }
}

fn jet_mat_mul(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let n = a.len();
    let np = a[0][0].d.len();
    let mut out = vec![vec![Jet::constant(Q::zero(), np); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[k][j].is_zero() {
                    continue;
                }
                out[i][j] = out[i][j].add(&a[i][k].mul(&b[k][j]));
            }
        }
    }
    out
}

/// Defining representation of sl_{r+1} matched to the Chevalley basis of A_r.
pub struct DefiningRep {
    pub rank: usize,
    /// Image of every basis vector of g (roots, then coroots).
    pub rho: Vec<QMatrix>,
}

fn eij(n: usize, i: usize, j: usize, c: Q) -> QMatrix {
    let mut m = QMatrix::zeros(n, n);
    m.set(i, j, c);
    m
}

fn commutator(a: &QMatrix, b: &QMatrix) -> QMatrix {
    a.mul(b).sub(&b.mul(a))
}

impl DefiningRep {
    pub fn new(ch: &Chevalley) -> Result<DefiningRep> {
        let rs = &ch.rs;
        if rs.ty.family != Family::A {
            return Err(Error::InvalidType(format!("quotient probe needs type A, got {}", rs.ty)));
        }
        let r = rs.rank();
        let n = r + 1;
        let nr = ch.num_roots();
        let mut rho: Vec<Option<QMatrix>> = vec![None; ch.dim];
        for i in 0..r {
            rho[i] = Some(eij(n, i, i + 1, Q::one()));
            rho[rs.neg(i)] = Some(eij(n, i + 1, i, qi(crate::chevalley::KAPPA)));
            let mut h = eij(n, i, i, Q::one());
            h.set(i + 1, i + 1, -Q::one());
            rho[ch.h_index(i)] = Some(h);
        }
        // remaining roots by height: e_{a+b} = [e_a, e_b] / N_{a,b}
        let mut order: Vec<usize> = (0..nr).collect();
        order.sort_by_key(|&a| rs.height(a).abs());
        for &c in &order {
            if rho[c].is_some() {
                continue;
            }
            let mut found = None;
            'outer: for a in 0..nr {
                if rs.height(a).abs() != 1 || rho[a].is_none() {
                    continue;
                }
                for b in 0..nr {
                    if let Some(rb) = &rho[b] {
                        if let Some(&(k, coef)) = ch.bracket(a, b).first() {
                            if k == c && coef != 0 {
                                found = Some(commutator(rho[a].as_ref().unwrap(), rb).scale(&Q::new(1.into(), coef.into())));
                                break 'outer;
                            }
                        }
                    }
                }
            }
            rho[c] = Some(found.ok_or_else(|| Error::CertificateFailed(format!("root {c} not reached")))?);
        }
        let rho: Vec<QMatrix> = rho.into_iter().map(Option::unwrap).collect();
        for i in 0..ch.dim {
            for j in 0..ch.dim {
                let mut rhs = QMatrix::zeros(n, n);
                for (k, c) in ch.bracket(i, j) {
                    rhs = rhs.add(&rho[k].scale(&qi(c)));
                }
                if commutator(&rho[i], &rho[j]) != rhs {
                    return Err(Error::CertificateFailed(format!("bracket of basis {i},{j} not preserved")));
                }
            }
        }
        Ok(DefiningRep { rank: r, rho })
    }

    pub fn size(&self) -> usize {
        self.rank + 1
    }

    /// x_a(t) = I + t rho(e_a) (root vectors square to zero here).
    pub fn x(&self, a: usize, t: &Q) -> QMatrix {
        QMatrix::identity(self.size()).add(&self.rho[a].scale(t))
    }

    /// Diagonal with simple-root values c and last entry 1 (a GL lift).
    pub fn torus(&self, c: &[Q]) -> QMatrix {
        let n = self.size();
        let mut m = QMatrix::identity(n);
        let mut d = Q::one();
        for i in (0..self.rank).rev() {
            d *= &c[i];
            m.set(i, i, d.clone());
        }
        m
    }

    pub fn lift_word(&self, word: &[Gen], s: &QMatrix) -> QMatrix {
        let mut m = QMatrix::identity(self.size());
        let s_inv = s.inverse().expect("invertible");
        for g in word {
            let f = match g {
                Gen::X { root, t } => self.x(*root, t),
                Gen::Torus { c } => self.torus(c),
                Gen::S { power } => (if *power >= 0 { s } else { &s_inv }).pow(power.unsigned_abs()),
            };
            m = m.mul(&f);
        }
        m
    }

    /// rho(Ad g x) = G rho(x) G^-1 on every basis vector.
    pub fn intertwines(&self, g: &QMatrix, lift: &QMatrix) -> bool {
        let inv = lift.inverse().expect("invertible");
        let n = self.size();
        (0..self.rho.len()).all(|j| {
            let mut rhs = QMatrix::zeros(n, n);
            for i in 0..self.rho.len() {
                if !g.at(i, j).is_zero() {
                    rhs = rhs.add(&self.rho[i].scale(g.at(i, j)));
                }
            }
            lift.mul(&self.rho[j]).mul(&inv) == rhs
        })
    }
}

/// Lifts adjoint elements given by words to GL_{r+1}, for any plan of A_r.
pub struct WordLift {
    pub rep: DefiningRep,
    /// GL lift of the normal representative of the plan.
    pub s_gl: QMatrix,
}

impl WordLift {
    pub fn new(ch: &Chevalley, plan: &SlicePlan) -> Result<WordLift> {
        let rep = DefiningRep::new(ch)?;
        let (roots, c) = normal_factors(ch, plan)?;
        let one = Q::one();
        let mut s_gl = QMatrix::identity(rep.size());
        for &a in &roots {
            let b = ch.rs.neg(a);
            s_gl = s_gl.mul(&rep.x(a, &one)).mul(&rep.x(b, &one)).mul(&rep.x(a, &one));
        }
        s_gl = s_gl.mul(&rep.torus(&c));
        Ok(WordLift { rep, s_gl })
    }

    pub fn lift(&self, g: &GroupElement) -> Result<QMatrix> {
        let word = g.word.as_ref().ok_or_else(|| Error::CertificateFailed("element has no word".into()))?;
        Ok(self.rep.lift_word(word, &self.s_gl))
    }
}

/// Subregular slice of A_r in the defining representation.
pub struct QuotientSlice {
    pub ch: Chevalley,
    pub plan: SlicePlan,
    pub rep: DefiningRep,
    /// SL lift of the representative used by the slice (s, or s lambda(-1) when s has none).
    pub s_lift: QMatrix,
    /// Adjoint matrix of that representative.
    pub s_adjoint: QMatrix,
    /// GL lift of the normal representative, used for words containing s.
    pub s_gl: QMatrix,
    /// Cocharacter of the s-fixed torus as exponents on the diagonal.
    pub mu: Vec<i64>,
}

impl QuotientSlice {
    pub fn num_params(&self) -> usize {
        self.plan.ns_roots.len() + 1
    }

    /// Point prod x_a(t_a) * z(u) * s^-1 with all partials; params = (t..., u).
    pub fn point(&self, params: &[Q]) -> Result<DefiningRepElement> {
        let np = self.num_params();
        if params.len() != np {
            return Err(Error::Usage(format!("expected {np} parameters, got {}", params.len())));
        }
        let u = &params[np - 1];
        if u.is_zero() {
            return Err(Error::ZeroParameter);
        }
        let n = self.rep.size();
        let mut acc = DefiningRepElement::from_const(&QMatrix::identity(n), np);
        for (idx, &a) in self.plan.ns_roots.iter().enumerate() {
            let mut f = DefiningRepElement::from_const(&self.rep.x(a, &params[idx]), np);
            for i in 0..n {
                for j in 0..n {
                    f[i][j].d[idx] = self.rep.rho[a].at(i, j).clone();
                }
            }
            acc = jet_mat_mul(&acc, &f);
        }
        let mut z = DefiningRepElement::from_const(&QMatrix::zeros(n, n), np);
        for (i, &m) in self.mu.iter().enumerate() {
            let p = |e: i64| if e >= 0 { num::pow(u.clone(), e as usize) } else { num::pow(u.recip(), (-e) as usize) };
            z[i][i].v = p(m);
            z[i][i].d[np - 1] = qi(m) * p(m - 1);
        }
        acc = jet_mat_mul(&acc, &z);
        let s_inv = DefiningRepElement::from_const(&self.s_lift.inverse().expect("invertible"), np);
        Ok(DefiningRepElement { matrix: jet_mat_mul(&acc, &s_inv), params: params.to_vec() })
    }
}

/// Parametrization of the subregular slice of A_r (rank >= 2) with r + 2 coordinates.
pub fn slice_parametrization_a(rank: usize, seed: u64) -> Result<QuotientSlice> {
    if rank < 2 {
        return Err(Error::InvalidType(format!("quotient probe needs rank >= 2, got {rank}")));
    }
    let ty = SimpleType::new(Family::A, rank)?;
    let (_, plan) = subregular_plan(ty, seed)?;
    let ch = Chevalley::new(&build_root_system(ty)?);
    let WordLift { rep, s_gl } = WordLift::new(&ch, &plan)?;
    let mut s_lift = s_gl.clone();
    let lam = fixed_cocharacters(&plan);
    if lam.len() != 1 {
        return Err(Error::DimMismatch(format!("s-fixed torus has dimension {}", lam.len())));
    }
    let sg = crate::crosssection::SliceGroup::new(&plan)?;
    let mut s_adjoint = sg.s.matrix.clone();
    if det(&s_lift) != Q::one() {
        if rank % 2 == 0 {
            s_lift = s_lift.scale(&(-Q::one()));
        } else {
            // absorb lambda(-1), which lies in Z, into the representative
            let c: Vec<Q> = lam[0].iter().map(|&x| if x % 2 == 0 { Q::one() } else { -Q::one() }).collect();
            s_lift = s_lift.mul(&rep.torus(&c));
            s_adjoint = s_adjoint.mul(&ch.torus(&c)?.matrix);
        }
        if det(&s_lift) != Q::one() {
            return Err(Error::NormalizationFailed("no rational SL lift of s".into()));
        }
    }
    // diagonal exponents mu with mu_i - mu_{i+1} = lambda_i and sum 0, scaled by r+1
    let l = &lam[0];
    let n = rank as i64 + 1;
    let tails: Vec<i64> = (0..=rank).map(|i| l[i.min(rank)..].iter().sum()).collect();
    let total: i64 = tails.iter().sum();
    let mut mu: Vec<i64> = tails.iter().map(|t| n * t - total).collect();
    let g = mu.iter().fold(0i64, |acc, &x| num::integer::gcd(acc, x));
    mu.iter_mut().for_each(|x| *x /= g);
    if mu[0] < 0 {
        mu.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(QuotientSlice { ch, plan, rep, s_lift, s_gl, s_adjoint, mu })
}

fn det(m: &QMatrix) -> Q {
    let n = m.rows;
    let mut a = m.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a.at(r, c).is_zero()) else { return Q::zero() };
        if p != c {
            for j in 0..n {
                let t = a.at(p, j).clone();
                a.set(p, j, a.at(c, j).clone());
                a.set(c, j, t);
            }
            d = -d;
        }
        let piv = a.at(c, c).clone();
        d *= &piv;
        for r in (c + 1)..n {
            let f = a.at(r, c) / &piv;
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let v = a.at(r, j) - &f * a.at(c, j);
                a.set(r, j, v);
            }
        }
    }
    d
}

/// Determinant value of a defining-representation element.
pub fn determinant(m: &DefiningRepElement) -> Q {
    det(&m.value())
}

/// Coefficients c_1..c_r of det(x - m) = x^n + c_1 x^{n-1} + ... (Faddeev-LeVerrier), with partials.
pub fn delta_coords(m: &DefiningRepElement) -> Vec<Jet> {
    let n = m.size();
    let np = m.matrix[0][0].d.len();
    let mut mk: Vec<Vec<Jet>> = vec![vec![Jet::constant(Q::zero(), np); n]; n];
    let mut c_prev = Jet::constant(Q::one(), np);
    let mut out = Vec::new();
    for k in 1..n {
        for (i, row) in mk.iter_mut().enumerate() {
            row[i] = row[i].add(&c_prev);
        }
        // mk <- m * (mk_prev + c_{k-1} I)
        mk = jet_mat_mul(&m.matrix, &mk);
        let mut tr = Jet::constant(Q::zero(), np);
        for (i, row) in mk.iter().enumerate() {
            tr = tr.add(&row[i]);
        }
        let ck = tr.scale(&Q::new((-1).into(), (k as i64).into()));
        out.push(ck.clone());
        c_prev = ck;
    }
    out
}

/// delta_coords on a plain matrix.
pub fn delta_values(m: &QMatrix) -> Vec<Q> {
    let e = DefiningRepElement { matrix: DefiningRepElement::from_const(m, 0), params: vec![] };
    delta_coords(&e).into_iter().map(|j| j.v).collect()
}

pub fn jacobian(coords: &[Jet]) -> QMatrix {
    let np = coords.first().map_or(0, |j| j.d.len());
    let mut m = QMatrix::zeros(coords.len(), np);
    for (i, c) in coords.iter().enumerate() {
        for j in 0..np {
            m.set(i, j, c.d[j].clone());
        }
    }
    m
}

fn random_param(rng: &mut ChaCha8Rng, bound: i64) -> Q {
    let num: i64 = rng.gen_range(-bound..=bound);
    let den: i64 = rng.gen_range(1..=bound);
    Q::new(num.into(), den.into())
}

/// Seeded slice parameters; the torus coordinate stays >= 1.
pub fn sample_params(slice: &QuotientSlice, rng: &mut ChaCha8Rng, bound: i64) -> Vec<Q> {
    let bound = bound.max(1);
    let mut p: Vec<Q> = (0..slice.num_params() - 1).map(|_| random_param(rng, bound)).collect();
    let num: i64 = rng.gen_range(0..=bound);
    let den: i64 = rng.gen_range(1..=bound);
    p.push(Q::one() + Q::new(num.into(), den.into()));
    p
}

#[derive(Clone, Debug, Serialize)]
pub struct DeficientPoint {
    pub params: Vec<String>,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankScan {
    #[serde(rename = "type")]
    pub ty: String,
    pub samples: usize,
    pub rank_histogram: BTreeMap<usize, usize>,
    pub deficient_points: Vec<DeficientPoint>,
    pub generic_fraction: f64,
}

/// Exact Jacobian ranks of delta o point at seeded slice points.
pub fn fiber_rank_scan(rank: usize, seed: u64, n_samples: usize, bound: i64) -> Result<RankScan> {
    let slice = slice_parametrization_a(rank, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = BTreeMap::new();
    let mut deficient = Vec::new();
    for _ in 0..n_samples {
        let p = sample_params(&slice, &mut rng, bound);
        let k = jacobian(&delta_coords(&slice.point(&p)?)).rank();
        *hist.entry(k).or_insert(0) += 1;
        if k < rank {
            deficient.push(DeficientPoint { params: p.iter().map(q_string).collect(), rank: k });
        }
    }
    let generic = hist.get(&rank).copied().unwrap_or(0);
    Ok(RankScan {
        ty: format!("A{rank}"),
        samples: n_samples,
        rank_histogram: hist,
        deficient_points: deficient,
        generic_fraction: if n_samples == 0 { 0.0 } else { generic as f64 / n_samples as f64 },
    })
}

/// Per parameter, the largest gap between exact partials and central differences with step h.
pub fn finite_difference_gaps(slice: &QuotientSlice, params: &[Q], h: &Q) -> Result<Vec<f64>> {
    let exact = delta_coords(&slice.point(params)?);
    let mut gaps = vec![0.0f64; params.len()];
    for (j, gap) in gaps.iter_mut().enumerate() {
        let mut plus = params.to_vec();
        let mut minus = params.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let fp = delta_values(&slice.point(&plus)?.value());
        let fm = delta_values(&slice.point(&minus)?.value());
        for (i, c) in exact.iter().enumerate() {
            let fd = q_to_f64(&((&fp[i] - &fm[i]) / (h * qi(2))));
            *gap = gap.max((fd - q_to_f64(&c.d[j])).abs());
        }
    }
    Ok(gaps)
}

pub fn finite_difference_gap(slice: &QuotientSlice, params: &[Q], h: &Q) -> Result<f64> {
    Ok(finite_difference_gaps(slice, params, h)?.into_iter().fold(0.0, f64::max))
}

/// Diagram of the rational double point attached to a component: B_n -> A_{2n-1},
/// C_n -> D_{n+1}, F4 -> E6, G2 -> D4, simply-laced types unchanged.
pub fn homogeneous_diagram(ty: SimpleType) -> Result<SimpleType> {
    let ty = SimpleType::new(ty.family, ty.rank)?;
    match ty.family {
        Family::A | Family::D | Family::E => Ok(ty),
        Family::B => SimpleType::new(Family::A, 2 * ty.rank - 1),
        // D3 is A3
        Family::C if ty.rank == 2 => SimpleType::new(Family::A, 3),
        Family::C => SimpleType::new(Family::D, ty.rank + 1),
        Family::F => SimpleType::new(Family::E, 6),
        Family::G => SimpleType::new(Family::D, 4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crosssection::SliceGroup;

    #[test]
    fn identity_gives_binomials() {
        let d = delta_values(&QMatrix::identity(4));
        assert_eq!(d, vec![qi(-4), qi(6), qi(-4)]);
    }

    #[test]
    fn diagonal_gives_elementary_symmetric() {
        let (a, b) = (qi(2), Q::new(3.into(), 5.into()));
        let c = (&a * &b).recip();
        let mut m = QMatrix::identity(3);
        m.set(0, 0, a.clone());
        m.set(1, 1, b.clone());
        m.set(2, 2, c.clone());
        let d = delta_values(&m);
        assert_eq!(d[0], -(&a + &b + &c));
        assert_eq!(d[1], &a * &b + &a * &c + &b * &c);
    }

    #[test]
    fn representation_matches_structure_constants() {
        for r in 1..=5 {
            let ch = Chevalley::new(&build_root_system(SimpleType::new(Family::A, r).unwrap()).unwrap());
            DefiningRep::new(&ch).unwrap();
        }
        let ch = Chevalley::new(&build_root_system(SimpleType::new(Family::B, 2).unwrap()).unwrap());
        assert!(matches!(DefiningRep::new(&ch), Err(Error::InvalidType(_))));
    }

    #[test]
    fn trivial_parameters_give_s_inverse() {
        for r in 2..=5 {
            let sl = slice_parametrization_a(r, 0).unwrap();
            assert_eq!(sl.num_params(), r + 2);
            let mut p = vec![Q::zero(); r + 1];
            p.push(Q::one());
            let m = sl.point(&p).unwrap();
            assert_eq!(m.value(), sl.s_lift.inverse().unwrap());
            assert_eq!(determinant(&m), Q::one());
        }
    }

    #[test]
    fn s_lift_intertwines() {
        for r in 2..=4 {
            let sl = slice_parametrization_a(r, 0).unwrap();
            let sg = SliceGroup::new(&sl.plan).unwrap();
            assert!(sl.rep.intertwines(&sg.s.matrix, &sl.s_gl));
            assert!(sl.rep.intertwines(&sl.s_adjoint, &sl.s_lift));
        }
    }

    #[test]
    fn determinant_one_and_invariance() {
        let sl = slice_parametrization_a(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = sample_params(&sl, &mut rng, 4);
            let m = sl.point(&p).unwrap();
            assert_eq!(determinant(&m), Q::one());
            let h = sl.rep.x(0, &qi(3)).mul(&sl.rep.x(sl.ch.rs.neg(1), &Q::new(1.into(), 2.into())));
            let conj = h.mul(&m.value()).mul(&h.inverse().unwrap());
            assert_eq!(delta_values(&conj), delta_values(&m.value()));
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let sl = slice_parametrization_a(3, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let p = sample_params(&sl, &mut rng, 3);
            let gaps = finite_difference_gaps(&sl, &p, &Q::new(1.into(), 1024.into())).unwrap();
            // delta is affine in each t, so those central differences are exact
            assert!(gaps[..gaps.len() - 1].iter().all(|&g| g < 1e-9), "{gaps:?}");
            assert!(gaps[gaps.len() - 1] < 1e-4);
        }
    }

    #[test]
    fn generic_rank_is_full() {
        let scan = fiber_rank_scan(2, 0, 20, 5).unwrap();
        assert!(scan.rank_histogram.keys().all(|&k| k <= 2));
        assert!(scan.generic_fraction >= 0.95);
    }

    #[test]
    fn homogeneous_rule() {
        let t = |f, r| SimpleType::new(f, r).unwrap();
        assert_eq!(homogeneous_diagram(t(Family::B, 3)).unwrap(), t(Family::A, 5));
        assert_eq!(homogeneous_diagram(t(Family::A, 7)).unwrap(), t(Family::A, 7));
        assert_eq!(homogeneous_diagram(t(Family::G, 2)).unwrap(), t(Family::D, 4));
        assert_eq!(homogeneous_diagram(t(Family::C, 4)).unwrap(), t(Family::D, 5));
        assert_eq!(homogeneous_diagram(t(Family::F, 4)).unwrap(), t(Family::E, 6));
        assert!(homogeneous_diagram(SimpleType { family: Family::G, rank: 3 }).is_err());
    }
}
