//! Exact rational B-splines on integer knots (mesh size 1) and the
//! h-scaled temporal matrices built from them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExactError {
    #[error("dimension {n} exceeds the exact-arithmetic cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("invalid arguments: {0}")]
    Invalid(String),
}

pub const DEFAULT_CAP: usize = 128;

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Polynomial in t with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Rational>);

impl Poly {
    fn zero() -> Self {
        Poly(Vec::new())
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n)
            .map(|i| {
                let a = self.0.get(i).cloned().unwrap_or_else(Rational::zero);
                let b = o.0.get(i).cloned().unwrap_or_else(Rational::zero);
                a + b
            })
            .collect())
    }

    fn mul(&self, o: &Poly) -> Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(i, c)| c * q(i as i64)).collect())
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
    }

    fn integrate(&self, a: i64, b: i64) -> Rational {
        let anti = Poly(
            std::iter::once(Rational::zero())
                .chain(self.0.iter().enumerate().map(|(i, c)| c / q(i as i64 + 1)))
                .collect(),
        );
        anti.eval(&q(b)) - anti.eval(&q(a))
    }
}

/// Open uniform B-splines of degree p on [0, n] as piecewise polynomials.
/// `pieces[i][e]` is basis function i restricted to [e, e+1].
pub fn basis_pieces(p: usize, n: usize) -> Vec<Vec<Poly>> {
    let mut knots: Vec<i64> = vec![0; p + 1];
    knots.extend(1..n as i64);
    knots.extend(std::iter::repeat(n as i64).take(p + 1));
    let nk = knots.len();
    let mut cur: Vec<Vec<Poly>> = (0..nk - 1)
        .map(|i| {
            (0..n)
                .map(|e| {
                    if knots[i] == e as i64 && knots[i + 1] == e as i64 + 1 {
                        Poly(vec![Rational::one()])
                    } else {
                        Poly::zero()
                    }
                })
                .collect()
        })
        .collect();
    for d in 1..=p {
        let mut next = Vec::with_capacity(nk - 1 - d);
        for i in 0..nk - 1 - d {
            let mut pieces = Vec::with_capacity(n);
            for e in 0..n {
                let mut acc = Poly::zero();
                let den1 = knots[i + d] - knots[i];
                if den1 != 0 && !cur[i][e].is_zero() {
                    // (t - k_i)/den1
                    let f = Poly(vec![q(-knots[i]) / q(den1), Rational::one() / q(den1)]);
                    acc = acc.add(&f.mul(&cur[i][e]));
                }
                let den2 = knots[i + d + 1] - knots[i + 1];
                if den2 != 0 && !cur[i + 1][e].is_zero() {
                    let f = Poly(vec![q(knots[i + d + 1]) / q(den2), -Rational::one() / q(den2)]);
                    acc = acc.add(&f.mul(&cur[i + 1][e]));
                }
                pieces.push(acc);
            }
            next.push(pieces);
        }
        cur = next;
    }
    cur
}

/// The h-free temporal matrices hB, C, M/h in exact arithmetic, each of
/// size (n+p-1)^2 with test index r <-> φ_r and trial index c <-> φ_{c+1}.
#[derive(Debug, Clone)]
pub struct ExactTemporal {
    pub p: usize,
    pub intervals: usize,
    pub hb: Vec<Vec<Rational>>,
    pub c: Vec<Vec<Rational>>,
    pub m_over_h: Vec<Vec<Rational>>,
}

pub fn exact_temporal(p: usize, intervals: usize) -> ExactTemporal {
    let basis = basis_pieces(p, intervals);
    let dbasis: Vec<Vec<Poly>> =
        basis.iter().map(|f| f.iter().map(Poly::derivative).collect()).collect();
    let n = intervals + p - 1;
    let inner = |a: &Vec<Poly>, b: &Vec<Poly>| -> Rational {
        (0..intervals)
            .filter(|&e| !a[e].is_zero() && !b[e].is_zero())
            .map(|e| a[e].mul(&b[e]).integrate(e as i64, e as i64 + 1))
            .fold(Rational::zero(), |x, y| x + y)
    };
    let mut hb = vec![vec![Rational::zero(); n]; n];
    let mut c = hb.clone();
    let mut m = hb.clone();
    for r in 0..n {
        for col in 0..n {
            let trial = col + 1;
            if (trial as i64 - r as i64).abs() > p as i64 {
                continue;
            }
            hb[r][col] = inner(&dbasis[trial], &dbasis[r]);
            c[r][col] = inner(&dbasis[trial], &basis[r]);
            m[r][col] = inner(&basis[trial], &basis[r]);
        }
    }
    ExactTemporal { p, intervals, hb, c, m_over_h: m }
}

/// Rank test of a rational matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_nonsingular(a: &[Vec<Rational>]) -> bool {
    let n = a.len();
    let mut rows: Vec<Vec<BigInt>> = a
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            row.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| !rows[i][k].is_zero()) else {
            return false;
        };
        rows.swap(k, piv);
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &rows[i][j] * &rows[k][k] - &rows[i][k] * &rows[k][j];
                rows[i][j] = v / &prev;
            }
            rows[i][k] = BigInt::zero();
        }
        prev = rows[k][k].clone();
    }
    !prev.is_zero()
}

pub fn to_f64(x: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_piece_values() {
        let b = basis_pieces(2, 5);
        // interior function φ_2 on knots 0,1,2,3 evaluated at 3/2
        assert_eq!(b[2][1].eval(&rational(3, 2)), rational(3, 4));
        for e in 0..5 {
            let t = rational(2 * e as i64 + 1, 2);
            let s = b.iter().fold(Rational::zero(), |acc, f| acc + f[e].eval(&t));
            assert_eq!(s, Rational::one());
        }
    }

    #[test]
    fn p1_entries() {
        let e = exact_temporal(1, 6);
        assert_eq!(e.hb[0][0], rational(-1, 1));
        assert_eq!(e.c[0][0], rational(1, 2));
        assert_eq!(e.m_over_h[2][1], rational(4, 6));
    }

    #[test]
    fn bareiss_small() {
        let a = vec![vec![rational(1, 2), rational(1, 3)], vec![rational(1, 4), rational(1, 6)]];
        assert!(!bareiss_nonsingular(&a));
        let b = vec![vec![rational(1, 2), rational(1, 3)], vec![rational(1, 4), rational(1, 5)]];
        assert!(bareiss_nonsingular(&b));
        let z = vec![vec![rational(0, 1), rational(1, 1)], vec![rational(1, 1), rational(0, 1)]];
        assert!(bareiss_nonsingular(&z));
    }
}
