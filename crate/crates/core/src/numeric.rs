//! Shared exact/float numeric plumbing: big-rational helpers, robust
//! rational→f64 conversion, compensated summation, and a small double-double
//! type for evaluating polynomials whose monomial coefficients cancel
//! catastrophically in plain f64.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Int = BigInt;
pub type Rat = Ratio<BigInt>;

pub fn int(n: i64) -> Int {
    Int::from(n)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

/// C(n, k) — exact, multiplicative form with stepwise exact division.
pub fn binomial(n: u64, k: u64) -> Int {
    if k > n {
        return Int::zero();
    }
    let k = k.min(n - k);
    let mut r = Int::one();
    for i in 1..=k {
        r = r * Int::from(n - k + i) / Int::from(i);
    }
    r
}

/// Full Pascal row [C(n,0), …, C(n,n)] for hot loops.
pub fn binomial_row(n: usize) -> Vec<Int> {
    let mut row = vec![Int::one()];
    for i in 0..n {
        row.push(&row[i] * Int::from(n - i) / Int::from(i + 1));
    }
    row
}

pub fn factorial(n: u64) -> Int {
    let mut r = Int::one();
    for i in 2..=n {
        r *= Int::from(i);
    }
    r
}

pub fn pow2(e: u64) -> Int {
    Int::one() << e
}

/// Rational→f64 that stays accurate for operands far outside f64 range:
/// scale the quotient to ~64 significant bits, convert, undo the scaling.
pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let qf = q.to_f64().unwrap_or(if q.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    });
    // 2^(−shift) as two factors so the intermediate exponent never saturates
    // even though qf itself is ~2^64.
    let half = (-shift / 2) as i32;
    let rest = (-shift - half as i64) as i32;
    qf * 2f64.powi(half) * 2f64.powi(rest)
}

/// "p/q" (or a bare integer) → reduced rational.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: Int = n
        .trim()
        .parse()
        .map_err(|e| format!("bad numerator {n:?}: {e}"))?;
    let d: Int = d
        .trim()
        .parse()
        .map_err(|e| format!("bad denominator {d:?}: {e}"))?;
    if d.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(Rat::new(n, d))
}

/// Reduced rational → "p/q", or "p" when the denominator is 1.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Neumaier-compensated sum: one stray rounding error per term max.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() {
            (s - t) + x
        } else {
            (x - t) + s
        };
        s = t;
    }
    s + c
}

/// Deterministic RNG: one base seed, independent streams per subsystem use.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

// ---- double-double -------------------------------------------------------

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2: ~31 significant decimal
/// digits. Enough headroom that degree-90 truncated-exponential coefficients
/// (terms up to ~1e20 cancelling to O(1)) evaluate to ~1e-12 absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_rat(r: &Rat) -> Dd {
        let hi = rat_to_f64(r);
        if !hi.is_finite() {
            return Dd { hi, lo: 0.0 };
        }
        let rem = r - Rat::from_float(hi).expect("finite");
        let lo = rat_to_f64(&rem);
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(Dd {
            hi: -o.hi,
            lo: -o.lo,
        })
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            Dd {
                hi: -self.hi,
                lo: -self.lo,
            }
        } else {
            self
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Lexicographic k-subsets of {0, …, n−1}.
pub struct Combinations {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            k,
            idx: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.idx.clone());
        }
        // advance rightmost index that still has room
        let mut i = self.k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - self.k + i {
                self.idx[i] += 1;
                for j in i + 1..self.k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(self.idx.clone());
            }
        }
    }
}
