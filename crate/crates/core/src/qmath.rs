//! Exact rational matrices, kernels and integer polynomials.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Q = BigRational;

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_to_f64(x: &Q) -> f64 {
    let n = x.numer().to_f64().unwrap_or(f64::NAN);
    let d = x.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        return n / d;
    }
    // huge entries: shift both down before dividing
    let bits = x.numer().bits().max(x.denom().bits()) as i64 - 60;
    let sh = bits.max(0) as u32;
    let n = (x.numer() >> sh).to_f64().unwrap_or(0.0);
    let d = (x.denom() >> sh).to_f64().unwrap_or(1.0);
    n / d
}

/// `"p/q"` or `"p"` rendering used in JSON dumps.
pub fn q_string(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Dense row-major matrix over Q.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| q_string(self.at(i, j))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, qi(*v));
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(n: usize, cols: &[Vec<Q>]) -> Self {
        let mut m = Self::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                m.set(i, j, c[i].clone());
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Q> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.at(i, j);
                if (i == j && !v.is_one()) || (i != j && !v.is_zero()) {
                    return false;
                }
            }
        }
        true
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j).clone());
            }
        }
        t
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect();
        QMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        QMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Q) -> Self {
        let data = self.data.iter().map(|a| a * c).collect();
        QMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Product skipping zero entries on both sides; most group elements
    /// met here are sparse (unipotent or monomial).
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "dimension mismatch in product");
        let nz: Vec<Vec<usize>> = (0..o.rows)
            .map(|k| (0..o.cols).filter(|&j| !o.at(k, j).is_zero()).collect())
            .collect();
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for &j in &nz[k] {
                    let p = a * o.at(k, j);
                    *out.at_mut(i, j) += p;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![Q::zero(); self.rows];
        for (j, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for i in 0..self.rows {
                let a = self.at(i, j);
                if !a.is_zero() {
                    out[i] += a * x;
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m.set(a, b, self.at(i, j).clone());
            }
        }
        m
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.at(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = self.at(r, c).recip();
            for j in c..self.cols {
                let v = self.at(r, j) * &inv;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r || self.at(i, c).is_zero() {
                    continue;
                }
                let f = self.at(i, c).clone();
                for j in c..self.cols {
                    let sub = &f * self.at(r, j);
                    if !sub.is_zero() {
                        *self.at_mut(i, j) -= sub;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel {v : M v = 0}.
    pub fn kernel(&self) -> Vec<Vec<Q>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -m.at(r, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.at(i, j).clone());
            }
            aug.set(i, n + i, Q::one());
        }
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.at(i, n + j).clone());
            }
        }
        Some(inv)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn max_entry_bits(&self) -> u64 {
        self.data.iter().map(|x| x.numer().bits().max(x.denom().bits())).max().unwrap_or(0)
    }

    pub fn to_num_den(&self) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
        let mut num = Vec::with_capacity(self.rows);
        let mut den = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            num.push((0..self.cols).map(|j| self.at(i, j).numer().to_string()).collect());
            den.push((0..self.cols).map(|j| self.at(i, j).denom().to_string()).collect());
        }
        (num, den)
    }
}

/// Integer matrix helpers (Cartan matrices, Weyl group matrices).
pub type IMat = Vec<Vec<i64>>;

pub fn imat_identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![0i64; m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l] == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    out
}

pub fn imat_vec(a: &IMat, v: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn imat_transpose(a: &IMat) -> IMat {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn imat_to_q(a: &IMat) -> QMatrix {
    QMatrix::from_i64(a)
}

/// Inverse of a unimodular integer matrix.
pub fn imat_inverse_unimodular(a: &IMat) -> Option<IMat> {
    let inv = imat_to_q(a).inverse()?;
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = inv.at(i, j);
            if !v.denom().is_one() {
                return None;
            }
            out[i][j] = v.numer().to_i64()?;
        }
    }
    Some(out)
}

/// Integer polynomial, coefficients from degree 0 upward.
pub type IPoly = Vec<i64>;

fn poly_trim(p: &mut IPoly) {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
}

/// Characteristic polynomial det(xI - A) by Faddeev-LeVerrier over Q.
pub fn charpoly(a: &IMat) -> IPoly {
    let n = a.len();
    let aq = imat_to_q(a);
    let mut coeffs = vec![Q::one()];
    let mut m = QMatrix::zeros(n, n);
    let id = QMatrix::identity(n);
    for k in 1..=n {
        m = aq.mul(&m).add(&id.scale(coeffs.last().unwrap()));
        let am = aq.mul(&m);
        let tr: Q = (0..n).map(|i| am.at(i, i).clone()).fold(Q::zero(), |s, x| s + x);
        coeffs.push(-tr / qi(k as i64));
    }
    // coeffs[k] multiplies x^{n-k}
    let mut p: IPoly = coeffs
        .iter()
        .rev()
        .map(|c| {
            assert!(c.denom().is_one());
            c.numer().to_i64().expect("charpoly coefficient overflow")
        })
        .collect();
    poly_trim(&mut p);
    p
}

/// Exact division; None if `d` does not divide `p`.
pub fn poly_div_exact(p: &IPoly, d: &IPoly) -> Option<IPoly> {
    let dd = d.len() - 1;
    let lead = *d.last().unwrap();
    if p.len() < d.len() {
        return if p.iter().all(|&c| c == 0) { Some(vec![0]) } else { None };
    }
    let mut rem = p.clone();
    let mut quo = vec![0i64; p.len() - dd];
    for i in (0..quo.len()).rev() {
        let c = rem[i + dd];
        if c % lead != 0 {
            return None;
        }
        let q = c / lead;
        quo[i] = q;
        for j in 0..=dd {
            rem[i + j] -= q * d[j];
        }
    }
    if rem.iter().any(|&c| c != 0) {
        return None;
    }
    poly_trim(&mut quo);
    Some(quo)
}

fn divisors(m: u32) -> Vec<u32> {
    (1..=m).filter(|d| m % d == 0).collect()
}

/// The m-th cyclotomic polynomial.
pub fn cyclotomic(m: u32) -> IPoly {
    let mut p = vec![0i64; m as usize + 1];
    p[0] = -1;
    p[m as usize] = 1;
    for d in divisors(m) {
        if d < m {
            p = poly_div_exact(&p, &cyclotomic(d)).expect("cyclotomic recursion");
        }
    }
    p
}

pub fn euler_phi(m: u32) -> u32 {
    (1..=m).filter(|&k| gcd(k, m) == 1).count() as u32
}

pub fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Split an integer polynomial whose roots are roots of unity of order
/// dividing `order` into (m, multiplicity) pairs. Returns None if
/// something other than cyclotomic factors remains.
pub fn cyclotomic_factorization(p: &IPoly, order: u32) -> Option<Vec<(u32, u32)>> {
    let mut rest = p.clone();
    let mut out = Vec::new();
    for m in divisors(order) {
        let phi = cyclotomic(m);
        let mut k = 0;
        while let Some(q) = poly_div_exact(&rest, &phi) {
            if rest.len() < phi.len() {
                break;
            }
            rest = q;
            k += 1;
        }
        if k > 0 {
            out.push((m, k));
        }
    }
    if rest.len() == 1 && rest[0].abs() == 1 {
        Some(out)
    } else {
        None
    }
}

/// Evaluate an integer polynomial at an integer matrix.
pub fn poly_at_matrix(p: &IPoly, a: &IMat) -> QMatrix {
    let n = a.len();
    let aq = imat_to_q(a);
    let mut acc = QMatrix::zeros(n, n);
    for c in p.iter().rev() {
        acc = acc.mul(&aq).add(&QMatrix::identity(n).scale(&qi(*c)));
    }
    acc
}

pub fn sign_of(x: &Q) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_small() {
        assert_eq!(cyclotomic(1), vec![-1, 1]);
        assert_eq!(cyclotomic(2), vec![1, 1]);
        assert_eq!(cyclotomic(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic(12), vec![1, 0, -1, 0, 1]);
        for m in 1..40 {
            assert_eq!(cyclotomic(m).len() as u32 - 1, euler_phi(m));
        }
    }

    #[test]
    fn charpoly_of_rotation() {
        // 120 degree rotation on the A2 root lattice
        let a = vec![vec![-1, 1], vec![-1, 0]];
        let p = charpoly(&a);
        assert_eq!(p, vec![1, 1, 1]);
        assert_eq!(cyclotomic_factorization(&p, 3), Some(vec![(3, 1)]));
    }

    #[test]
    fn kernel_and_inverse() {
        let m = QMatrix::from_i64(&[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.len(), 1);
        assert!(m.mul_vec(&k[0]).iter().all(|x| x.is_zero()));
        let a = QMatrix::from_i64(&[vec![2, 1], vec![7, 4]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert!(QMatrix::from_i64(&[vec![1, 2], vec![2, 4]]).inverse().is_none());
    }

    #[test]
    fn power_by_squaring() {
        let a = QMatrix::from_i64(&[vec![1, 1], vec![0, 1]]);
        assert_eq!(a.pow(10), QMatrix::from_i64(&[vec![1, 10], vec![0, 1]]));
    }

    proptest::proptest! {
        #[test]
        fn inverse_is_two_sided(entries in proptest::collection::vec(-4i64..5, 9)) {
            let rows: Vec<Vec<i64>> = entries.chunks(3).map(|c| c.to_vec()).collect();
            let m = QMatrix::from_i64(&rows);
            match m.inverse() {
                Some(inv) => {
                    proptest::prop_assert!(m.mul(&inv).is_identity());
                    proptest::prop_assert!(inv.mul(&m).is_identity());
                }
                None => proptest::prop_assert!(m.rank() < 3),
            }
        }

        #[test]
        fn rank_plus_nullity(entries in proptest::collection::vec(-3i64..4, 12)) {
            let rows: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect();
            let m = QMatrix::from_i64(&rows);
            let ker = m.kernel();
            proptest::prop_assert_eq!(m.rank() + ker.len(), 4);
            for v in &ker {
                proptest::prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
            }
        }
    }
}
