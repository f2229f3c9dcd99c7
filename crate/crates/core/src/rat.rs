//! Exact rational scalars and small dense rational matrices.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Exact binary value of a finite float. Panics on NaN/inf.
pub fn from_f64(x: f64) -> Rat {
    Rat::from_f64(x).expect("finite float")
}

/// The shortest decimal that reads back as `x`; keeps printed coefficients
/// short where the exact binary value would not.
pub fn from_f64_decimal(x: f64) -> Rat {
    parse_rational(&format!("{x:e}")).expect("finite float")
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator may overflow f64 individually
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `"3"`, `"-3/4"`, `"0.125"`, `"2.5e-3"` exactly.
pub fn parse_rational(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (neg, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rat::from_integer(num);
    if scale >= 0 {
        r *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// `"a/b"`, or a terminating decimal when `b = 2^i 5^j` exceeds 1000.
pub fn format_rational(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let d = r.denom();
    let (mut twos, mut fives, mut rest) = (0u32, 0u32, d.clone());
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() || *d <= BigInt::from(1000) {
        return format!("{}/{}", r.numer(), d);
    }
    let k = twos.max(fives) as usize;
    let scaled = r.numer() * (num_traits::pow(BigInt::from(10), k) / d);
    let digits = scaled.abs().to_string();
    let digits = format!("{digits:0>width$}", width = k + 1);
    let (int, frac) = digits.split_at(digits.len() - k);
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{int}.{}", frac.trim_end_matches('0'))
}

/// Dense row-major matrix over the rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged matrix rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let v = rows.iter().map(|row| row.iter().map(|&x| rat(x)).collect()).collect();
        Self::from_rows(v).expect("rectangular literal")
    }

    pub fn from_f64(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = from_f64(m[(i, j)]);
            }
        }
        out
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(&self[(i, j)]))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!("{}x{} times {}x{}", self.rows, self.cols, rhs.rows, rhs.cols)));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs.data[k * rhs.cols + j];
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} plus {:?}", self.shape(), rhs.shape())));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out.data[(i * rhs.rows + k) * c + j * rhs.cols + l] = a * &rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> Rat {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero)
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &RatMatrix {
    type Output = RatMatrix;
    fn add(self, rhs: &RatMatrix) -> RatMatrix {
        self.checked_add(rhs).expect("shape mismatch in matrix sum")
    }
}

impl Sub for &RatMatrix {
    type Output = RatMatrix;
    fn sub(self, rhs: &RatMatrix) -> RatMatrix {
        self.checked_add(&-rhs).expect("shape mismatch in matrix difference")
    }
}

impl Neg for &RatMatrix {
    type Output = RatMatrix;
    fn neg(self) -> RatMatrix {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }
}

impl Mul for &RatMatrix {
    type Output = RatMatrix;
    fn mul(self, rhs: &RatMatrix) -> RatMatrix {
        self.checked_mul(rhs).expect("shape mismatch in matrix product")
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|i| (0..self.cols).map(|j| format_rational(&self[(i, j)])).collect()).collect();
        write!(f, "{rows:?}")
    }
}

/// Reduces `rows` (each of length `ncols`) to reduced row echelon form in
/// place, dropping zero rows. Returns the pivot column of each remaining row.
pub fn rref(rows: &mut Vec<Vec<Rat>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Basis of `{x : Ax = 0}` for `A` given by rows of length `ncols`.
pub fn kernel(rows: &[Vec<Rat>], ncols: usize) -> Vec<Vec<Rat>> {
    let mut r = rows.to_vec();
    let pivots = rref(&mut r, ncols);
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    (0..ncols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![Rat::zero(); ncols];
            v[f] = Rat::one();
            for (row, &p) in r.iter().zip(&pivots) {
                v[p] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Some solution of `Ax = b`, or `None` when inconsistent. Free variables are
/// set to zero.
pub fn solve(rows: &[Vec<Rat>], b: &[Rat], ncols: usize) -> Option<Vec<Rat>> {
    let mut aug: Vec<Vec<Rat>> = rows
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut v = row.clone();
            v.push(bi.clone());
            v
        })
        .collect();
    let pivots = rref(&mut aug, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rat::zero(); ncols];
    for (row, &p) in aug.iter().zip(&pivots) {
        x[p] = row[ncols].clone();
    }
    Some(x)
}

/// Exact positive semidefiniteness of a symmetric matrix by symmetric
/// Gaussian elimination.
pub fn is_psd(m: &RatMatrix) -> bool {
    let n = m.nrows();
    let mut a: Vec<Vec<Rat>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].clone()).collect()).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    while let Some(pos) = alive.iter().position(|&i| !a[i][i].is_zero()) {
        let k = alive[pos];
        if a[k][k].is_negative() {
            return false;
        }
        alive.remove(pos);
        for &i in &alive {
            let f = &a[i][k] / &a[k][k];
            if f.is_zero() {
                continue;
            }
            for &j in &alive {
                let d = &f * &a[k][j];
                a[i][j] -= d;
            }
        }
    }
    // remaining diagonal is zero, so the rest must vanish
    alive.iter().all(|&i| alive.iter().all(|&j| a[i][j].is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals_exactly() {
        assert_eq!(parse_rational("3/4"), Some(ratio(3, 4)));
        assert_eq!(parse_rational("-0.125"), Some(ratio(-1, 8)));
        assert_eq!(parse_rational("2.5e-1"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("12"), Some(rat(12)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn formatting_roundtrips() {
        assert_eq!(format_rational(&ratio(-3, 4)), "-3/4");
        assert_eq!(format_rational(&ratio(1, 3000)), "1/3000");
        assert_eq!(format_rational(&from_f64_decimal(-0.0123456)), "-0.0123456");
        assert_eq!(format_rational(&from_f64_decimal(1.0000000000002849)), "1.0000000000002849");
        for x in [0.7071067811865476, -1e-9, 123.456789, 5e-300] {
            let r = from_f64_decimal(x);
            assert_eq!(parse_rational(&format_rational(&r)), Some(r.clone()));
            assert_eq!(to_f64(&r), x);
        }
    }

    #[test]
    fn kron_matches_definition() {
        let a = RatMatrix::from_i64(&[&[1, 2], &[3, 4]]);
        let i2 = RatMatrix::identity(2);
        let k = a.kron(&i2);
        assert_eq!(k[(0, 2)], rat(2));
        assert_eq!(k[(1, 3)], rat(2));
        assert_eq!(k[(2, 0)], rat(3));
        assert_eq!(k[(0, 1)], rat(0));
    }

    #[test]
    fn exact_elimination() {
        let rows = vec![vec![rat(1), rat(2), rat(3)], vec![rat(2), rat(4), rat(6)]];
        let k = kernel(&rows, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            let dot: Rat = rows[0].iter().zip(v).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
        let x = solve(&rows, &[rat(1), rat(2)], 3).unwrap();
        assert_eq!(x, vec![rat(1), rat(0), rat(0)]);
        assert!(solve(&rows, &[rat(1), rat(3)], 3).is_none());
    }

    #[test]
    fn exact_psd() {
        assert!(is_psd(&RatMatrix::from_i64(&[&[2, 1], &[1, 2]])));
        assert!(is_psd(&RatMatrix::from_i64(&[&[1, 1], &[1, 1]])));
        assert!(is_psd(&RatMatrix::from_i64(&[&[0, 0], &[0, 3]])));
        assert!(!is_psd(&RatMatrix::from_i64(&[&[0, 1], &[1, 0]])));
        assert!(!is_psd(&RatMatrix::from_i64(&[&[1, 2], &[2, 1]])));
        assert!(!is_psd(&RatMatrix::from_i64(&[&[0, 0], &[0, -1]])));
    }
}
