//! Predicates of the form sign(a·x₁ + x₂ + … + x_k) on ±1 votes: one
//! president with integer weight a, k−1 unit-weight citizens. Requiring
//! a + k even keeps the vote sum odd, so the sign never vanishes.

use crate::error::{Error, Result};
use crate::numeric::{binomial, Combinations, Int, Rat};
use num_traits::{ToPrimitive, Zero};

/// Hard cap on 2^k-style enumeration.
pub const ENUMERATION_CAP: u32 = 24;

/// A ±1 assignment; entry 0 is the president, entries 1..k the citizens.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<i8>,
}

impl Assignment {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::Param(format!("assignment entries must be ±1, got {b}")));
        }
        Ok(Assignment { bits })
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn president(&self) -> i8 {
        self.bits[0]
    }

    /// Number of +1 citizens (written t throughout).
    pub fn plus_citizens(&self) -> u32 {
        self.bits[1..].iter().filter(|&&b| b == 1).count() as u32
    }

    pub fn negated(&self) -> Assignment {
        Assignment {
            bits: self.bits.iter().map(|&b| -b).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    /// Total arity (president + k−1 citizens).
    pub k: u32,
    /// President weight; 1 ≤ a ≤ k−2, a + k even.
    pub a: u32,
    /// u = (k+a)/2: +1 citizens needed when the president votes −1.
    pub u: u32,
    /// v = (k−a)/2: +1 citizens needed when the president votes +1.
    pub v: u32,
    /// τ = (k−a−2)/2 = v−1: largest number of +1 citizens that still rejects
    /// under a +1 president.
    pub tau: u32,
}

impl Predicate {
    pub fn new(k: u32, a: u32) -> Result<Predicate> {
        if k < 3 {
            return Err(Error::Range(format!("arity k={k} too small, need k >= 3")));
        }
        if a == 0 {
            return Err(Error::Range("president weight a must be >= 1".into()));
        }
        if a >= k - 1 {
            return Err(Error::Dictator { k, a });
        }
        if (a + k) % 2 != 0 {
            return Err(Error::Parity { k, a });
        }
        let u = (k + a) / 2;
        let v = (k - a) / 2;
        let tau = (k - a - 2) / 2;
        debug_assert_eq!(tau, v - 1);
        Ok(Predicate { k, a, u, v, tau })
    }

    /// Nearest valid integer weight to a target relative weight δ ∈ (0,1):
    /// of ⌊δk⌋ and ⌈δk⌉, exactly one has a + k even, and |δk − a| < 1 keeps
    /// the real-weighted and integer-weighted signs in agreement everywhere.
    pub fn from_delta(k: u32, delta: &Rat) -> Result<Predicate> {
        if delta <= &Rat::zero() || delta >= &Rat::from_integer(Int::from(1)) {
            return Err(Error::Range(format!(
                "relative president weight must lie in (0,1), got {delta}"
            )));
        }
        let target = delta * Rat::from_integer(Int::from(k));
        let a = if target.is_integer() {
            // no slack to adjust parity: the target itself must be valid
            let a = target
                .to_integer()
                .to_u32()
                .ok_or_else(|| Error::Range("weight target overflows u32".into()))?;
            if (a + k) % 2 != 0 {
                return Err(Error::Parity { k, a });
            }
            a
        } else {
            let f = target.floor().to_integer().to_u32().unwrap_or(u32::MAX);
            if (f + k) % 2 == 0 {
                f
            } else {
                f + 1
            }
        };
        if a < 1 || a > k.saturating_sub(2) {
            return Err(Error::Range(format!(
                "rounded president weight a={a} outside [1, {}] for k={k}",
                k.saturating_sub(2)
            )));
        }
        Predicate::new(k, a)
    }

    /// a/k, reduced.
    pub fn delta(&self) -> Rat {
        Rat::new(Int::from(self.a), Int::from(self.k))
    }

    /// a·x₁ + Σ citizens. Always odd.
    pub fn margin(&self, x: &Assignment) -> Result<i64> {
        if x.len() != self.k as usize {
            return Err(Error::Length {
                expected: self.k as usize,
                got: x.len(),
            });
        }
        let cit: i64 = x.bits()[1..].iter().map(|&b| b as i64).sum();
        Ok(self.a as i64 * x.president() as i64 + cit)
    }

    /// Margin as a function of the orbit (x₁, t): a·x₁ + 2t − (k−1).
    pub fn orbit_margin(&self, x1: i8, t: u32) -> i64 {
        self.a as i64 * x1 as i64 + 2 * t as i64 - (self.k as i64 - 1)
    }

    pub fn orbit_satisfying(&self, x1: i8, t: u32) -> bool {
        self.orbit_margin(x1, t) >= 1
    }

    /// Feasible t window for a satisfying assignment with the given president
    /// vote: t ≥ v under x₁ = +1, t ≥ u under x₁ = −1.
    pub fn feasible_t(&self, x1: i8) -> std::ops::RangeInclusive<u32> {
        let lo = if x1 == 1 { self.v } else { self.u };
        lo..=self.k - 1
    }

    /// +1 iff the weighted vote sum is positive.
    pub fn evaluate(&self, x: &Assignment) -> Result<i8> {
        let m = self.margin(x)?;
        debug_assert!(m % 2 != 0, "margin must be odd");
        Ok(if m > 0 { 1 } else { -1 })
    }

    /// Exact satisfying-assignment count: Σ over feasible orbits of C(k−1, t).
    pub fn satisfying_count(&self) -> Int {
        let mut n = Int::zero();
        for x1 in [1i8, -1] {
            for t in self.feasible_t(x1) {
                n += binomial(self.k as u64 - 1, t as u64);
            }
        }
        n
    }

    /// Fraction of all 2^k assignments that satisfy: exactly 1/2, because the
    /// odd margin makes the predicate antisymmetric (P(−x) = −P(x)).
    pub fn random_rate(&self) -> Rat {
        Rat::new(Int::from(1), Int::from(2))
    }

    /// Streaming enumeration of satisfying assignments, grouped by orbit:
    /// president +1 first, then −1; within each, t ascending; within each t,
    /// citizen subsets in lexicographic order.
    pub fn satisfying_assignments(&self) -> Result<SatisfyingIter> {
        if self.k > ENUMERATION_CAP {
            return Err(Error::Cap {
                k: self.k,
                cap: ENUMERATION_CAP,
            });
        }
        let mut groups = Vec::new();
        for x1 in [1i8, -1] {
            for t in self.feasible_t(x1) {
                groups.push((x1, t));
            }
        }
        Ok(SatisfyingIter {
            k: self.k,
            groups,
            gi: 0,
            inner: None,
        })
    }

    /// President outvoted by citizens alone in every satisfying assignment —
    /// true exactly at the maximal non-dictator weight a = k−2.
    pub fn is_monarchy(&self) -> bool {
        self.a == self.k - 2
    }
}

pub struct SatisfyingIter {
    k: u32,
    groups: Vec<(i8, u32)>,
    gi: usize,
    inner: Option<(i8, Combinations)>,
}

impl Iterator for SatisfyingIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        loop {
            if let Some((x1, combos)) = &mut self.inner {
                if let Some(subset) = combos.next() {
                    let mut bits = vec![-1i8; self.k as usize];
                    bits[0] = *x1;
                    for c in subset {
                        bits[c + 1] = 1;
                    }
                    return Some(Assignment { bits });
                }
                self.inner = None;
            }
            if self.gi >= self.groups.len() {
                return None;
            }
            let (x1, t) = self.groups[self.gi];
            self.gi += 1;
            self.inner = Some((x1, Combinations::new(self.k as usize - 1, t as usize)));
        }
    }
}

/// All 2^k assignments for brute-force checks (k ≤ cap).
pub fn all_assignments(k: u32) -> Result<impl Iterator<Item = Assignment>> {
    if k > ENUMERATION_CAP {
        return Err(Error::Cap {
            k,
            cap: ENUMERATION_CAP,
        });
    }
    Ok((0u32..1 << k).map(move |mask| {
        let bits = (0..k)
            .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        Assignment { bits }
    }))
}
