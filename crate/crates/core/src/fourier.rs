//! Exact Fourier coefficients of presidential-type predicates.
//!
//! By symmetry among citizens and antisymmetry of the predicate, the only
//! nonzero coefficients sit on odd-size sets, and depend only on whether the
//! set contains the president and how many citizens it touches. Three kinds:
//! the president singleton, t citizens (t odd), president + t citizens
//! (t even ≥ 2). Every value is a dyadic rational with denominator dividing
//! 2^(k−2).

use crate::error::{Error, Result};
use crate::numeric::{binomial, factorial, pow2, rat, rng_for, Int, Rat};
use crate::predicate::{all_assignments, Predicate};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeMap;

/// 2^k enumeration ceiling for the oracle.
pub const ORACLE_CAP: u32 = 14;

const STREAM_IDENTITIES: u64 = 0x1d;

#[derive(Clone, Debug)]
pub struct FourierTable {
    pub k: u32,
    pub a: u32,
    /// Coefficient of the president singleton.
    pub p_hat_president: Rat,
    /// Odd t → coefficient of any t-citizen set.
    pub citizens: BTreeMap<u32, Rat>,
    /// Even t ≥ 2 → coefficient of president + t citizens.
    pub president_citizens: BTreeMap<u32, Rat>,
    pub t_max: u32,
    /// Positivity of the shared numerator is expected for every valid weight;
    /// any violation is recorded here rather than silently accepted.
    pub sign_findings: Vec<String>,
}

impl FourierTable {
    pub fn citizen(&self, t: u32) -> Option<&Rat> {
        self.citizens.get(&t)
    }

    /// President + t citizens; t = 0 is the president singleton itself.
    pub fn president_citizen(&self, t: u32) -> Option<&Rat> {
        if t == 0 {
            Some(&self.p_hat_president)
        } else {
            self.president_citizens.get(&t)
        }
    }
}

/// Shared numerator N(t) with P̂(t citizens) = N(t)/2^(k−2) for odd t and
/// P̂(president + t citizens) = −N(t)/2^(k−2) for even t. The inner
/// alternating-binomial sum collapses (see `alternating_partial_sum`) to a
/// single sum over i.
fn numerator(p: &Predicate, t: u32) -> Int {
    let tau = p.tau as u64;
    let n_rest = (p.k - t - 1) as u64;
    let mut acc = Int::zero();
    for i in 0..=tau {
        let mut term = binomial(n_rest, i) * binomial(t as u64 - 1, tau - i);
        if (tau - i) % 2 == 1 {
            term = -term;
        }
        acc += term;
    }
    acc
}

/// Literal double sum Σ_i Σ_j (−1)^j C(k−t−1, i) C(t, j); test cross-check
/// for `numerator`.
#[doc(hidden)]
pub fn numerator_double_sum(p: &Predicate, t: u32) -> Int {
    let tau = p.tau as u64;
    let mut acc = Int::zero();
    for i in 0..=tau {
        let outer = binomial((p.k - t - 1) as u64, i);
        let mut inner = Int::zero();
        for j in 0..=tau - i {
            let mut term = binomial(t as u64, j);
            if j % 2 == 1 {
                term = -term;
            }
            inner += term;
        }
        acc += outer * inner;
    }
    acc
}

/// Same numerator in the factored form
/// (k−t−1)!/((u−1)!(v−1)!) · Σ_{i=0}^{t−1} (−1)^i C(t−1,i) Π_{l≤i}(v−l) Π_{l≤t−1−i}(u−l);
/// test cross-check for `numerator`.
#[doc(hidden)]
pub fn numerator_factored(p: &Predicate, t: u32) -> Rat {
    let (u, v) = (p.u as i64, p.v as i64);
    let mut sum = Int::zero();
    for i in 0..=(t as i64 - 1) {
        let mut term = binomial(t as u64 - 1, i as u64);
        for l in 1..=i {
            term *= Int::from(v - l);
        }
        for l in 1..=(t as i64 - 1 - i) {
            term *= Int::from(u - l);
        }
        if i % 2 == 1 {
            term = -term;
        }
        sum += term;
    }
    Rat::new(
        factorial((p.k - t - 1) as u64) * sum,
        factorial(p.u as u64 - 1) * factorial(p.v as u64 - 1),
    )
}

/// All three coefficient kinds up to t_max citizens.
pub fn exact_table(p: &Predicate, t_max: u32) -> Result<FourierTable> {
    if t_max > p.k - 1 {
        return Err(Error::Range(format!(
            "t_max={t_max} exceeds citizen count {}",
            p.k - 1
        )));
    }
    let denom = pow2(p.k as u64 - 2);
    let mut low_tail = Int::zero();
    for l in 0..=p.tau as u64 {
        low_tail += binomial(p.k as u64 - 1, l);
    }
    let p_hat_president = Rat::one() - Rat::new(low_tail, denom.clone());

    let mut citizens = BTreeMap::new();
    let mut president_citizens = BTreeMap::new();
    let mut sign_findings = Vec::new();
    for t in 1..=t_max {
        let n = numerator(p, t);
        if !n.is_positive() {
            sign_findings.push(format!(
                "numerator not positive at t={t}: {n} (k={}, a={})",
                p.k, p.a
            ));
        }
        if t % 2 == 1 {
            citizens.insert(t, Rat::new(n, denom.clone()));
        } else {
            president_citizens.insert(t, Rat::new(-n, denom.clone()));
        }
    }
    if !p_hat_president.is_positive() {
        sign_findings.push(format!(
            "president coefficient not positive: {p_hat_president}"
        ));
    }
    Ok(FourierTable {
        k: p.k,
        a: p.a,
        p_hat_president,
        citizens,
        president_citizens,
        t_max,
        sign_findings,
    })
}

/// 2^(−k) Σ_x P(x) Π_{i∈subset} x_i over the full cube. Indices are 1-based,
/// index 1 is the president. Ground truth for `exact_table`, capped at k ≤ 14.
pub fn brute_force_coeff(p: &Predicate, subset: &[u32]) -> Result<Rat> {
    if p.k > ORACLE_CAP {
        return Err(Error::Cap {
            k: p.k,
            cap: ORACLE_CAP,
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for &i in subset {
        if i < 1 || i > p.k {
            return Err(Error::Range(format!("subset index {i} outside 1..={}", p.k)));
        }
        if !seen.insert(i) {
            return Err(Error::Param(format!("duplicate subset index {i}")));
        }
    }
    let mut acc: i64 = 0;
    for x in all_assignments(p.k)? {
        let val = p.evaluate(&x)? as i64;
        let minus_count = subset
            .iter()
            .filter(|&&i| x.bits()[(i - 1) as usize] == -1)
            .count();
        acc += if minus_count % 2 == 0 { val } else { -val };
    }
    Ok(Rat::new(Int::from(acc), pow2(p.k as u64)))
}

/// Sum over all odd-size sets of squared coefficients, minus 1. Zero exactly
/// (the predicate is ±1-valued, so its squared Fourier mass is 1).
pub fn parseval_residual(p: &Predicate) -> Result<Rat> {
    let table = exact_table(p, p.k - 1)?;
    let mut acc = &table.p_hat_president * &table.p_hat_president;
    for (t, c) in &table.citizens {
        acc += Rat::from_integer(binomial(p.k as u64 - 1, *t as u64)) * c * c;
    }
    for (t, c) in &table.president_citizens {
        acc += Rat::from_integer(binomial(p.k as u64 - 1, *t as u64)) * c * c;
    }
    Ok(acc - Rat::one())
}

/// Leading-order closed form for the citizen-set coefficients at relative
/// weight δ = a/k:
///   2^(−(k−2)) · (k−t−1)!/((u−1)!(v−1)!) · (δ^(t−1)k^(t−1) − ((t−1)(t−2)/2)·δ^(t−3)k^(t−2)).
/// For odd t this approximates the t-citizen coefficient; for even t its
/// negation approximates the president+t-citizens coefficient. Exact at
/// t = 1, 2 (the correction term vanishes); the next corrections are
/// O(k^(t−3)) smaller, so accuracy degrades for large t — capped at t ≤ 9.
pub fn asymptotic_citizen_coeff(k: u32, delta: &Rat, t: u32) -> Result<f64> {
    let target = delta * Rat::from_integer(Int::from(k));
    if !target.is_integer() {
        return Err(Error::Param(format!(
            "delta={delta} times k={k} must be an integer weight"
        )));
    }
    let a = target
        .to_integer()
        .to_u32()
        .ok_or_else(|| Error::Range("weight overflows u32".into()))?;
    let p = Predicate::new(k, a)?;
    if t < 1 || t > (9.min(k - 1)) {
        return Err(Error::Range(format!("t={t} outside 1..=min(9, k-1)")));
    }
    let kr = Rat::from_integer(Int::from(k));
    let mut main = (delta * &kr).pow((t as i32) - 1);
    if t >= 3 {
        let corr = rat((t as i64 - 1) * (t as i64 - 2), 2)
            * delta.pow(t as i32 - 3)
            * kr.pow(t as i32 - 2);
        main -= corr;
    }
    let scale = Rat::new(
        factorial((k - t - 1) as u64),
        factorial(p.u as u64 - 1) * factorial(p.v as u64 - 1) * pow2(k as u64 - 2),
    );
    let val = scale * main;
    let val = if t % 2 == 0 { -val } else { val };
    Ok(crate::numeric::rat_to_f64(&val))
}

/// Σ_{j=0}^{l} (−1)^j C(t, j) = (−1)^l C(t−1, l) for t ≥ 1 — the collapse
/// used by `numerator`.
fn alternating_partial_sum_residual(t: u64, l: u64) -> Int {
    let mut lhs = Int::zero();
    for j in 0..=l {
        let mut term = binomial(t, j);
        if j % 2 == 1 {
            term = -term;
        }
        lhs += term;
    }
    let mut rhs = binomial(t - 1, l);
    if l % 2 == 1 {
        rhs = -rhs;
    }
    lhs - rhs
}

/// Weighted-binomial identities used by the asymptotic derivation:
///   Σ_i C(k,i) a^(i−1) b^(k−i) i(i+1)      = 2k(a+b)^(k−1) + k(k−1)a(a+b)^(k−2)
///   Σ_i C(k,i) a^i b^(k−i−1) (k−i)(k−i+1) = 2k(a+b)^(k−1) + k(k−1)b(a+b)^(k−2)
/// (terms with a zero weight factor are skipped, which also avoids negative
/// powers at i = 0 / i = k).
fn weighted_binomial_residuals(a: i64, b: i64, k: u64) -> (Int, Int) {
    let (ai, bi) = (Int::from(a), Int::from(b));
    let s = &ai + &bi;
    let mut lhs1 = Int::zero();
    let mut lhs2 = Int::zero();
    for i in 0..=k {
        let c = binomial(k, i);
        if i >= 1 {
            lhs1 += &c
                * (&ai).pow((i - 1) as u32)
                * (&bi).pow((k - i) as u32)
                * Int::from(i * (i + 1));
        }
        if i < k {
            lhs2 += &c
                * (&ai).pow(i as u32)
                * (&bi).pow((k - i - 1) as u32)
                * Int::from((k - i) * (k - i + 1));
        }
    }
    let base = Int::from(2 * k) * (&s).pow((k - 1) as u32);
    let second = if k >= 2 {
        Int::from(k * (k - 1)) * (&s).pow((k - 2) as u32)
    } else {
        Int::zero()
    };
    let rhs1 = &base + &second * &ai;
    let rhs2 = base + second * bi;
    (lhs1 - rhs1, lhs2 - rhs2)
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub trials: u32,
    pub checks: u32,
    pub failures: Vec<String>,
}

/// Randomized exact verification of the two binomial-identity families the
/// coefficient algebra rests on. Every check is in exact integers; any
/// failure is reported verbatim.
pub fn verify_identities(trials: u32, seed: u64) -> IdentityReport {
    let mut rng = rng_for(seed, STREAM_IDENTITIES);
    let mut checks = 0;
    let mut failures = Vec::new();
    for trial in 0..trials {
        let t = rng.gen_range(1u64..=30);
        let l = rng.gen_range(0u64..=30);
        let r = alternating_partial_sum_residual(t, l);
        checks += 1;
        if !r.is_zero() {
            failures.push(format!(
                "trial {trial}: alternating partial sum t={t} l={l} residual {r}"
            ));
        }

        let a = rng.gen_range(1i64..=10);
        let b = rng.gen_range(1i64..=10);
        let k = rng.gen_range(1u64..=15);
        let (r1, r2) = weighted_binomial_residuals(a, b, k);
        checks += 2;
        if !r1.is_zero() {
            failures.push(format!(
                "trial {trial}: weighted identity (rising) a={a} b={b} k={k} residual {r1}"
            ));
        }
        if !r2.is_zero() {
            failures.push(format!(
                "trial {trial}: weighted identity (falling) a={a} b={b} k={k} residual {r2}"
            ));
        }
    }
    IdentityReport {
        trials,
        checks,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat_int;
    use num_integer::Integer;
    use proptest::prelude::*;

    fn table(k: u32, a: u32) -> FourierTable {
        exact_table(&Predicate::new(k, a).unwrap(), k - 1).unwrap()
    }

    fn valid_pairs(k_max: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for k in 4..=k_max {
            for a in 1..k - 1 {
                if (a + k) % 2 == 0 {
                    out.push((k, a));
                }
            }
        }
        out
    }

    #[test]
    fn frozen_small_tables() {
        let t = table(4, 2);
        assert_eq!(t.p_hat_president, rat(3, 4));
        assert_eq!(t.citizen(1), Some(&rat(1, 4)));
        assert_eq!(t.president_citizen(2), Some(&rat(-1, 4)));
        assert_eq!(t.citizen(3), Some(&rat(1, 4)));
        assert!(t.sign_findings.is_empty());

        let t = table(10, 6);
        assert_eq!(t.p_hat_president, rat(123, 128));
        // numerator is 10−2t here: positive sign pattern holds only up to t=4,
        // dies at t=5 and flips beyond — each recorded as a finding
        assert_eq!(t.citizen(3), Some(&rat(4, 256)));
        assert_eq!(t.citizen(5), Some(&rat(0, 256)));
        assert_eq!(t.citizen(7), Some(&rat(-1, 64)));
        assert_eq!(t.president_citizen(6), Some(&rat(1, 128)));
        assert_eq!(t.sign_findings.len(), 5, "{:?}", t.sign_findings);
        // restricted to the range a cubic scheme touches minus the flip zone,
        // the pattern is clean
        let t = exact_table(&Predicate::new(10, 6).unwrap(), 4).unwrap();
        assert!(t.sign_findings.is_empty(), "{:?}", t.sign_findings);
    }

    #[test]
    fn maximal_weight_flattens_citizen_coeffs() {
        // a = k−2 means τ = 0 and every numerator collapses to 1.
        for k in [4u32, 7, 10, 13] {
            let t = table(k, k - 2);
            let expect = Rat::new(Int::one(), pow2(k as u64 - 2));
            for tt in 1..k {
                if tt % 2 == 1 {
                    assert_eq!(t.citizen(tt), Some(&expect));
                } else {
                    assert_eq!(t.president_citizen(tt).unwrap(), &(-&expect));
                }
            }
        }
    }

    #[test]
    fn table_matches_brute_force() {
        for (k, a) in valid_pairs(10) {
            let p = Predicate::new(k, a).unwrap();
            let t = table(k, a);
            assert_eq!(
                brute_force_coeff(&p, &[1]).unwrap(),
                t.p_hat_president,
                "president k={k} a={a}"
            );
            for tt in 1..k {
                let citizens: Vec<u32> = (2..2 + tt).collect();
                let plain = brute_force_coeff(&p, &citizens).unwrap();
                let mut with_pres = vec![1u32];
                with_pres.extend(&citizens);
                let pres = brute_force_coeff(&p, &with_pres).unwrap();
                if tt % 2 == 1 {
                    assert_eq!(&plain, t.citizen(tt).unwrap(), "tC k={k} a={a} t={tt}");
                    assert!(pres.is_zero(), "president+odd k={k} a={a} t={tt}");
                } else {
                    assert_eq!(
                        &pres,
                        t.president_citizen(tt).unwrap(),
                        "P+tC k={k} a={a} t={tt}"
                    );
                    assert!(plain.is_zero(), "even citizen set k={k} a={a} t={tt}");
                }
            }
        }
    }

    #[test]
    fn coeff_depends_only_on_shape() {
        let p = Predicate::new(8, 2).unwrap();
        let a = brute_force_coeff(&p, &[2, 3, 4]).unwrap();
        let b = brute_force_coeff(&p, &[3, 6, 8]).unwrap();
        assert_eq!(a, b);
        let a = brute_force_coeff(&p, &[1, 2, 5]).unwrap();
        let b = brute_force_coeff(&p, &[1, 7, 8]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_validates_input() {
        let p = Predicate::new(16, 2).unwrap();
        assert!(matches!(
            brute_force_coeff(&p, &[1]),
            Err(Error::Cap { .. })
        ));
        let p = Predicate::new(6, 2).unwrap();
        assert!(brute_force_coeff(&p, &[0]).is_err());
        assert!(brute_force_coeff(&p, &[7]).is_err());
        assert!(brute_force_coeff(&p, &[2, 2]).is_err());
    }

    #[test]
    fn denominators_are_dyadic() {
        for (k, a) in valid_pairs(12) {
            let t = table(k, a);
            let cap = pow2(k as u64 - 2);
            let all = t
                .citizens
                .values()
                .chain(t.president_citizens.values())
                .chain(std::iter::once(&t.p_hat_president));
            for c in all {
                assert!(
                    cap.is_multiple_of(c.denom()),
                    "k={k} a={a}: denom {} not dyadic under 2^(k-2)",
                    c.denom()
                );
            }
        }
    }

    #[test]
    fn parseval_holds_exactly() {
        for (k, a) in valid_pairs(12) {
            let p = Predicate::new(k, a).unwrap();
            assert!(
                parseval_residual(&p).unwrap().is_zero(),
                "parseval k={k} a={a}"
            );
        }
    }

    #[test]
    fn numerator_forms_agree() {
        for (k, a) in valid_pairs(16) {
            let p = Predicate::new(k, a).unwrap();
            for t in 1..k {
                let collapsed = numerator(&p, t);
                assert_eq!(
                    collapsed,
                    numerator_double_sum(&p, t),
                    "double sum k={k} a={a} t={t}"
                );
                assert_eq!(
                    Rat::from_integer(collapsed),
                    numerator_factored(&p, t),
                    "factored k={k} a={a} t={t}"
                );
            }
        }
    }

    #[test]
    fn asymptotic_exact_at_low_degrees() {
        for (k, a) in [(10u32, 6u32), (12, 4), (14, 8)] {
            let p = Predicate::new(k, a).unwrap();
            let t = table(k, a);
            let delta = p.delta();
            let approx1 = asymptotic_citizen_coeff(k, &delta, 1).unwrap();
            assert_eq!(approx1, crate::numeric::rat_to_f64(t.citizen(1).unwrap()));
            let approx2 = asymptotic_citizen_coeff(k, &delta, 2).unwrap();
            assert_eq!(
                approx2,
                crate::numeric::rat_to_f64(t.president_citizen(2).unwrap())
            );
        }
    }

    #[test]
    fn asymptotic_error_decays_quadratically() {
        // rel_error · k² stays bounded (and shrinks in k) over the designed
        // range t ≤ 5, δ ∈ {1/2, 3/5, 4/5}, k ∈ 20..=60.
        for (dn, dd) in [(1i64, 2i64), (3, 5), (4, 5)] {
            let delta = rat(dn, dd);
            for t in [3u32, 4, 5] {
                let mut first = None;
                let mut last = None;
                for k in 20u32..=60 {
                    let target = &delta * Rat::from_integer(Int::from(k));
                    if !target.is_integer() {
                        continue;
                    }
                    let a = target.to_integer().to_u32().unwrap();
                    let p = match Predicate::new(k, a) {
                        Ok(p) => p,
                        Err(_) => continue,
                    };
                    let tab = exact_table(&p, 5).unwrap();
                    let exact = crate::numeric::rat_to_f64(if t % 2 == 1 {
                        tab.citizen(t).unwrap()
                    } else {
                        tab.president_citizen(t).unwrap()
                    });
                    let approx = asymptotic_citizen_coeff(k, &delta, t).unwrap();
                    let scaled = ((approx - exact) / exact).abs() * (k as f64).powi(2);
                    assert!(
                        scaled < 1400.0,
                        "delta={dn}/{dd} k={k} t={t}: rel*k^2 = {scaled}"
                    );
                    if first.is_none() {
                        first = Some(scaled);
                    }
                    last = Some(scaled);
                }
                // decaying, not just bounded: the tail is below the head
                assert!(last.unwrap() <= first.unwrap() * 1.01, "delta={dn}/{dd} t={t}");
            }
        }
    }

    #[test]
    fn asymptotic_validates_input() {
        assert!(asymptotic_citizen_coeff(10, &rat(1, 3), 3).is_err());
        assert!(asymptotic_citizen_coeff(10, &rat(3, 5), 0).is_err());
        assert!(asymptotic_citizen_coeff(10, &rat(3, 5), 10).is_err());
    }

    #[test]
    fn identity_families_hold() {
        let report = verify_identities(300, 7);
        assert_eq!(report.trials, 300);
        assert_eq!(report.checks, 900);
        assert!(report.failures.is_empty(), "{:?}", report.failures);
    }

    #[test]
    fn president_coefficient_mass() {
        // τ = 1 cells: tail is C(k−1,0)+C(k−1,1) = k
        let t = table(12, 8);
        assert_eq!(t.p_hat_president, Rat::one() - Rat::new(Int::from(12), pow2(10)));
        assert_eq!(t.p_hat_president, rat_int(253) / rat_int(256));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_subset_matches_table(k in 4u32..=10, seed in 0u64..1000) {
            use rand::Rng as _;
            let choices: Vec<u32> = (1..k - 1).filter(|a| (a + k) % 2 == 0).collect();
            let mut rng = rng_for(seed, 99);
            let a = choices[rng.gen_range(0..choices.len())];
            let p = Predicate::new(k, a).unwrap();
            let tab = table(k, a);
            // random subset of 1..=k
            let mut subset: Vec<u32> = (1..=k).filter(|_| rng.gen_bool(0.4)).collect();
            if subset.is_empty() { subset.push(2); }
            let brute = brute_force_coeff(&p, &subset).unwrap();
            let pres = subset.contains(&1);
            let t = subset.len() as u32 - pres as u32;
            let expect = match (pres, t % 2) {
                (false, 1) => tab.citizen(t).cloned().unwrap(),
                (true, 0) => tab.president_citizen(t).cloned().unwrap(),
                _ => Rat::zero(),
            };
            prop_assert_eq!(brute, expect);
        }
    }
}

