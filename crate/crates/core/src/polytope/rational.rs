use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in reduced form with positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// "num/den"
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parameter(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Exactly representable rational of a float (every finite f64 is dyadic).
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Reduced row echelon form over the first `cols` columns, in place.
/// Returns the pivot columns; rows past them are zero in those columns.
pub fn rref(rows: &mut Vec<Vec<Rational>>, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Reduce `rows` to RREF over its first `cols` columns and return the rank.
pub fn rank_in_place(rows: &mut Vec<Vec<Rational>>, cols: usize) -> usize {
    rref(rows, cols).len()
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut m = rows.to_vec();
    rref(&mut m, cols).len()
}

/// Scale a rational row to the primitive integer row with the same direction.
pub fn primitive_integer_row(row: &[Rational]) -> Vec<BigInt> {
    let l = row
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = row.iter().map(|q| q.numer() * (&l / q.denom())).collect();
    make_primitive(ints)
}

pub fn make_primitive(v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        return v;
    }
    v.into_iter().map(|x| x / &g).collect()
}

/// Rank of an integer matrix by fraction-free elimination, in i128 when it fits.
pub fn integer_rank(rows: &[&[BigInt]]) -> usize {
    let small: Option<Vec<Vec<i128>>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.to_i128()).collect())
        .collect();
    if let Some(m) = small {
        if let Some(r) = bareiss_rank_i128(m) {
            return r;
        }
    }
    bareiss_rank_big(rows.iter().map(|r| r.to_vec()).collect())
}

fn bareiss_rank_i128(mut m: Vec<Vec<i128>>) -> Option<usize> {
    let cols = m.first().map_or(0, Vec::len);
    let mut prev: i128 = 1;
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        let piv = m[r][c];
        for i in r + 1..m.len() {
            let f = m[i][c];
            for j in c..cols {
                let v = piv.checked_mul(m[i][j])?.checked_sub(f.checked_mul(m[r][j])?)?;
                m[i][j] = v / prev;
            }
        }
        prev = piv;
        r += 1;
    }
    Some(r)
}

fn bareiss_rank_big(mut m: Vec<Vec<BigInt>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let piv = m[r][c].clone();
        for i in r + 1..m.len() {
            let f = m[i][c].clone();
            for j in c..cols {
                let v = &piv * &m[i][j] - &f * &m[r][j];
                m[i][j] = v / &prev;
            }
        }
        prev = piv.abs();
        if piv.is_negative() {
            prev = -prev;
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
        assert_eq!(parse_rational("-2").unwrap(), rat(-2));
        assert_eq!(format_rational(&rat(1)), "1/1");
        assert_eq!(format_rational(&ratio(-1, 2)), "-1/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn ranks_agree() {
        let rows = vec![
            vec![rat(1), rat(2), rat(3)],
            vec![rat(2), rat(4), rat(6)],
            vec![rat(0), rat(1), rat(1)],
        ];
        assert_eq!(rank(&rows), 2);
        let ints: Vec<Vec<BigInt>> = rows.iter().map(|r| primitive_integer_row(r)).collect();
        let refs: Vec<&[BigInt]> = ints.iter().map(|r| r.as_slice()).collect();
        assert_eq!(integer_rank(&refs), 2);
        assert_eq!(bareiss_rank_big(ints.clone()), 2);
    }

    #[test]
    fn primitive_rows() {
        let row = vec![ratio(1, 2), ratio(-3, 4), rat(0)];
        let p = primitive_integer_row(&row);
        assert_eq!(p, vec![BigInt::from(2), BigInt::from(-3), BigInt::from(0)]);
    }
}
