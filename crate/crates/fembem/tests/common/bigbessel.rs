//! Fixed-point big-integer Bessel functions for reference values.
//!
//! Everything is evaluated from convergent power series with 1200
//! fractional bits, which leaves well over 100 correct digits for
//! arguments up to a few hundred.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::ops::{Add, Mul, Neg, Sub};

const BITS: usize = 1200;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fx(BigInt);

impl Fx {
    pub fn zero() -> Fx {
        Fx(BigInt::zero())
    }

    pub fn one() -> Fx {
        Fx(BigInt::one() << BITS)
    }

    pub fn int(n: i64) -> Fx {
        Fx(BigInt::from(n) << BITS)
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Fx {
        assert!(x.is_finite());
        if x == 0.0 {
            return Fx::zero();
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let shift = BITS as i64 + e;
        assert!(shift >= 0);
        let v = BigInt::from(mant) << shift as usize;
        Fx(if x < 0.0 { -v } else { v })
    }

    pub fn to_f64(&self) -> f64 {
        let len = self.0.bits() as usize;
        if len <= 64 {
            return self.0.to_f64().unwrap() * 2f64.powi(-(BITS as i32));
        }
        let drop = len - 64;
        let top = (self.0.abs() >> drop).to_f64().unwrap();
        let top = if self.0.is_negative() { -top } else { top };
        top * 2f64.powi(drop as i32 - BITS as i32)
    }

    pub fn div_int(&self, d: i64) -> Fx {
        Fx(&self.0 / BigInt::from(d))
    }

    pub fn mul_int(&self, m: i64) -> Fx {
        Fx(&self.0 * BigInt::from(m))
    }

    pub fn div(&self, other: &Fx) -> Fx {
        Fx((&self.0 << BITS) / &other.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Fx {
        Fx(self.0.abs())
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }
}

impl Add for &Fx {
    type Output = Fx;
    fn add(self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }
}

impl Sub for &Fx {
    type Output = Fx;
    fn sub(self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }
}

impl Mul for &Fx {
    type Output = Fx;
    fn mul(self, o: &Fx) -> Fx {
        // truncate toward zero so that vanishing terms reach zero
        let p = &self.0 * &o.0;
        let m = p.abs() >> BITS;
        Fx(if p.is_negative() { -m } else { m })
    }
}

impl Neg for &Fx {
    type Output = Fx;
    fn neg(self) -> Fx {
        Fx(-&self.0)
    }
}

/// atanh(t) for |t| < 1/2.
fn atanh(t: &Fx) -> Fx {
    let t2 = t * t;
    let mut pow = t.clone();
    let mut sum = Fx::zero();
    let mut j = 0i64;
    while !pow.is_zero() {
        sum = &sum + &pow.div_int(2 * j + 1);
        pow = &pow * &t2;
        j += 1;
    }
    sum
}

pub fn ln2() -> Fx {
    atanh(&Fx::one().div_int(3)).mul_int(2)
}

/// Natural log of a positive value.
pub fn ln(x: &Fx) -> Fx {
    assert!(!x.is_negative() && !x.is_zero());
    // x = y 2^m with y in [1/2, 1)
    let m = x.0.bits() as i64 - BITS as i64;
    let y = if m >= 0 { Fx(&x.0 >> m as usize) } else { Fx(&x.0 << (-m) as usize) };
    let t = (&y - &Fx::one()).div(&(&y + &Fx::one()));
    &atanh(&t).mul_int(2) + &ln2().mul_int(m)
}

fn atan_inv(q: i64) -> Fx {
    let mut term = Fx::one().div_int(q);
    let mut sum = Fx::zero();
    let mut j = 0i64;
    while !term.is_zero() {
        let t = term.div_int(2 * j + 1);
        sum = if j % 2 == 0 { &sum + &t } else { &sum - &t };
        term = term.div_int(q * q);
        j += 1;
    }
    sum
}

pub fn pi() -> Fx {
    &atan_inv(5).mul_int(16) - &atan_inv(239).mul_int(4)
}

/// Euler's constant by the Brent-McMillan sums.
pub fn euler_gamma() -> Fx {
    let n = 220i64;
    let mut a = -&ln(&Fx::int(n));
    let mut b = Fx::one();
    let mut u = a.clone();
    let mut v = b.clone();
    for k in 1..=4 * n {
        b = b.mul_int(n * n).div_int(k * k);
        a = (&a.mul_int(n * n).div_int(k) + &b).div_int(k);
        u = &u + &a;
        v = &v + &b;
    }
    u.div(&v)
}

pub struct Consts {
    pub pi: Fx,
    pub gamma: Fx,
}

impl Consts {
    pub fn new() -> Consts {
        Consts { pi: pi(), gamma: euler_gamma() }
    }
}

/// (J_n(z), Y_n(z)) for z > 0.
pub fn jy(c: &Consts, n: u32, z: f64) -> (Fx, Fx) {
    let n = n as i64;
    let half = Fx::from_f64(z).div_int(2);
    let q = &half * &half;
    let mut half_n = Fx::one();
    for _ in 0..n {
        half_n = &half_n * &half;
    }
    // sum_k (-q)^k / (k! (n+k)!), and the same weighted by H_k + H_{n+k}
    let mut fact_n = Fx::one();
    for j in 1..=n {
        fact_n = fact_n.div_int(j);
    }
    let mut term = fact_n;
    let mut harm_k = Fx::zero();
    let mut harm_nk = Fx::zero();
    for j in 1..=n {
        harm_nk = &harm_nk + &Fx::one().div_int(j);
    }
    let mut sj = Fx::zero();
    let mut sh = Fx::zero();
    let mut k = 0i64;
    loop {
        sj = &sj + &term;
        sh = &sh + &(&term * &(&harm_k + &harm_nk));
        k += 1;
        term = (&term * &q).div_int(k * (n + k));
        term = -&term;
        harm_k = &harm_k + &Fx::one().div_int(k);
        harm_nk = &harm_nk + &Fx::one().div_int(n + k);
        if term.is_zero() && k as f64 > z {
            break;
        }
    }
    let j = &half_n * &sj;
    // psi(k+1) + psi(n+k+1) = H_k + H_{n+k} - 2 gamma
    let psi_sum = &sh - &(&sj * &c.gamma.mul_int(2));
    let mut finite = Fx::zero();
    if n > 0 {
        // sum_{k<n} (n-k-1)!/k! q^k
        let mut t = Fx::one();
        for j in 1..n {
            t = t.mul_int(j);
        }
        let mut qk = Fx::one();
        for k in 0..n {
            finite = &finite + &(&t * &qk);
            if k + 1 < n {
                t = t.div_int((n - k - 1) * (k + 1));
                qk = &qk * &q;
            }
        }
        finite = finite.div(&half_n);
    }
    let two_ln = ln(&half).mul_int(2);
    let y_num = &(&(&two_ln * &j) - &finite) - &(&half_n * &psi_sum);
    let y = y_num.div(&c.pi);
    (j, y)
}

pub fn jy_f64(c: &Consts, n: u32, z: f64) -> (f64, f64) {
    let (j, y) = jy(c, n, z);
    (j.to_f64(), y.to_f64())
}
