//! Random constraint instances with planted assignments: the desk-scale
//! stand-in for the semidefinite pipeline. Each clause applies the predicate
//! to k signed literals. A planted assignment satisfies all but a chosen
//! fraction of the clauses, and each clause's literal pattern is exposed as a
//! vertex of the pairing polytope — repaired with the fewest flips when the
//! clause was corrupted — so the rounding value can be averaged clause by
//! clause without solving any program.

use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::ktw::{vertex, KtwPoint};
use crate::numeric::{binomial, compensated_sum, rng_for};
use crate::predicate::{Assignment, Predicate};
use crate::rounding::{evaluate_scheme, RoundingScheme};
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

const STREAM_INSTANCE: u64 = 0x11;

/// Exact orbit-weight sampling accumulates counts in u128.
const GENERATE_K_CAP: u32 = 120;

/// What the advantage proxy is and is not.
pub const PROXY_CAVEAT: &str = "per-clause polytope vertices come from the \
planted literal patterns, not from a solved semidefinite program; the \
satisfied-fraction proxy uses the conservative epsilon scale and understates \
the achievable advantage";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    /// k distinct variable ids; slot 0 plays the president.
    pub vars: Vec<usize>,
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n_vars: usize,
    pub k: u32,
    pub a: u32,
    pub planted: Vec<i8>,
    pub clauses: Vec<Clause>,
    #[serde(default)]
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepairPolicy {
    /// Flip the fewest literals to satisfy: one citizen when the margin is
    /// −1, otherwise the president first whenever that helps, then citizens
    /// lowest-index first.
    Minimal,
    /// Refuse violated clauses.
    Strict,
}

impl Instance {
    pub fn predicate(&self) -> Result<Predicate> {
        Predicate::new(self.k, self.a)
    }

    /// Structural soundness of a loaded instance: lengths, value ranges,
    /// and per-clause distinctness.
    pub fn validate(&self) -> Result<()> {
        let p = self.predicate()?;
        if self.n_vars < p.k as usize {
            return Err(Error::Param(format!(
                "n_vars = {} below arity k = {}",
                self.n_vars, p.k
            )));
        }
        if self.planted.len() != self.n_vars {
            return Err(Error::Length {
                expected: self.n_vars,
                got: self.planted.len(),
            });
        }
        if self.planted.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::Param("planted entries must be ±1".into()));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::Param(format!("eps = {} outside [0, 1]", self.eps)));
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if c.vars.len() != p.k as usize || c.signs.len() != p.k as usize {
                return Err(Error::Length {
                    expected: p.k as usize,
                    got: c.vars.len().max(c.signs.len()),
                });
            }
            if c.vars.iter().any(|&v| v >= self.n_vars) {
                return Err(Error::Param(format!("clause {i} references a missing variable")));
            }
            let mut seen = c.vars.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != c.vars.len() {
                return Err(Error::Param(format!("clause {i} repeats a variable")));
            }
            if c.signs.iter().any(|&z| z != 1 && z != -1) {
                return Err(Error::Param(format!("clause {i} has a sign outside ±1")));
            }
        }
        Ok(())
    }

    /// Literal-space pattern w of clause idx: w_j = z_j · y_{i_j}.
    pub fn literal_pattern(&self, idx: usize) -> Result<Assignment> {
        let c = self
            .clauses
            .get(idx)
            .ok_or_else(|| Error::Range(format!("clause {idx} of {}", self.clauses.len())))?;
        let bits = c
            .vars
            .iter()
            .zip(&c.signs)
            .map(|(&v, &z)| z * self.planted[v])
            .collect();
        Assignment::new(bits)
    }

    /// How many clauses the planted assignment satisfies.
    pub fn satisfied_by_planted(&self) -> Result<usize> {
        let p = self.predicate()?;
        let mut n = 0;
        for i in 0..self.clauses.len() {
            if p.evaluate(&self.literal_pattern(i)?)? == 1 {
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let inst: Instance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Cumulative orbit weights (x₁, t, count ≤ here) over satisfying patterns,
/// for uniform sampling without enumerating all 2^k assignments.
fn orbit_cumulative(p: &Predicate) -> Result<(Vec<(i8, u32, u128)>, u128)> {
    if p.k > GENERATE_K_CAP {
        return Err(Error::Cap {
            k: p.k,
            cap: GENERATE_K_CAP,
        });
    }
    let mut cum = Vec::new();
    let mut total: u128 = 0;
    for x1 in [1i8, -1] {
        for t in p.feasible_t(x1) {
            let w = binomial((p.k - 1) as u64, t as u64)
                .to_u128()
                .expect("orbit count fits u128 under the arity cap");
            total += w;
            cum.push((x1, t, total));
        }
    }
    Ok((cum, total))
}

/// Draws a uniformly random satisfying pattern: orbit by exact weight, then
/// a uniform choice of which citizens vote +1.
fn sample_satisfying(p: &Predicate, cum: &[(i8, u32, u128)], total: u128, rng: &mut impl Rng) -> Assignment {
    let r = rng.gen_range(0..total);
    let &(x1, t, _) = cum
        .iter()
        .find(|&&(_, _, c)| r < c)
        .expect("cumulative table covers the draw");
    let mut bits = vec![-1i8; p.k as usize];
    bits[0] = x1;
    for pos in rand::seq::index::sample(rng, (p.k - 1) as usize, t as usize) {
        bits[pos + 1] = 1;
    }
    Assignment::new(bits).expect("pattern has predicate arity")
}

/// Samples an instance whose planted assignment satisfies every clause, then
/// re-randomizes the signs of exactly ⌊eps·m⌋ clauses. A corrupted clause may
/// still be satisfied by luck, so at least (1−eps)·m satisfied clauses is a
/// guarantee rather than an expectation. Draw order is fixed: planted, then
/// per-clause variables / orbit / citizen positions, then the corrupted
/// subset, then fresh signs per corrupted clause in ascending index order.
pub fn generate(
    p: &Predicate,
    n_vars: usize,
    n_clauses: usize,
    eps: f64,
    seed: u64,
) -> Result<Instance> {
    if n_vars < p.k as usize {
        return Err(Error::Param(format!(
            "n_vars = {n_vars} below arity k = {}",
            p.k
        )));
    }
    if !(0.0..=1.0).contains(&eps) || !eps.is_finite() {
        return Err(Error::Param(format!("eps = {eps} outside [0, 1]")));
    }
    let (cum, total) = orbit_cumulative(p)?;
    let mut rng = rng_for(seed, STREAM_INSTANCE);

    let planted: Vec<i8> = (0..n_vars).map(|_| if rng.gen() { 1 } else { -1 }).collect();
    let mut clauses = Vec::with_capacity(n_clauses);
    for _ in 0..n_clauses {
        let vars = rand::seq::index::sample(&mut rng, n_vars, p.k as usize).into_vec();
        let w = sample_satisfying(p, &cum, total, &mut rng);
        let signs = w
            .bits()
            .iter()
            .zip(&vars)
            .map(|(&wj, &v)| wj * planted[v])
            .collect();
        clauses.push(Clause { vars, signs });
    }

    let n_corrupt = ((eps * n_clauses as f64).floor() as usize).min(n_clauses);
    let mut corrupt = rand::seq::index::sample(&mut rng, n_clauses, n_corrupt).into_vec();
    corrupt.sort_unstable();
    for idx in corrupt {
        clauses[idx].signs = (0..p.k).map(|_| if rng.gen() { 1i8 } else { -1 }).collect();
    }

    Ok(Instance {
        n_vars,
        k: p.k,
        a: p.a,
        planted,
        clauses,
        eps,
    })
}

/// Minimal-flip repair of a literal pattern. Returns the repaired pattern and
/// the number of flipped literals (0 when already satisfying).
///
/// Each citizen flip −1→+1 adds 2 to the margin; a president flip adds 2a.
/// With margin −1 a single citizen suffices. Deeper violations with the
/// president at −1 flip the president first: the citizen-only route needs a
/// more flips than the president route saves, since a ≥ 2.
pub fn repair_literals(
    p: &Predicate,
    w: &Assignment,
    policy: RepairPolicy,
) -> Result<(Assignment, u32)> {
    let mut margin = p.margin(w)?;
    if margin >= 1 {
        return Ok((w.clone(), 0));
    }
    if policy == RepairPolicy::Strict {
        return Err(Error::NotSatisfying);
    }
    let mut bits = w.bits().to_vec();
    let mut flips = 0u32;
    while margin < 1 {
        if margin < -1 && bits[0] == -1 {
            bits[0] = 1;
            margin += 2 * p.a as i64;
        } else {
            let j = bits[1..]
                .iter()
                .position(|&b| b == -1)
                .expect("a violated clause always has a −1 citizen to flip");
            bits[1 + j] = 1;
            margin += 2;
        }
        flips += 1;
    }
    Ok((Assignment::new(bits)?, flips))
}

/// The clause's literal pattern as a polytope vertex, repairing first if the
/// planted assignment violates the clause. The vertex constructor re-checks
/// satisfaction exactly.
pub fn constraint_point(inst: &Instance, idx: usize, policy: RepairPolicy) -> Result<KtwPoint> {
    let p = inst.predicate()?;
    let w = inst.literal_pattern(idx)?;
    let (repaired, _) = repair_literals(&p, &w, policy)?;
    vertex(&p, &repaired)
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceEval {
    pub n_clauses: usize,
    pub avg_v: f64,
    pub min_v: f64,
    pub max_abs_v: f64,
    /// Clauses the planted assignment satisfies outright.
    pub planted_satisfied: usize,
    /// Clauses that needed repair before evaluation.
    pub repaired: usize,
    /// 1/2 + epsilon_scale·avg_v/2: the satisfied-fraction surrogate.
    pub proxy: f64,
    pub caveat: &'static str,
}

/// Averages the scheme value over all clause vertices.
pub fn evaluate_instance(
    inst: &Instance,
    s: &RoundingScheme,
    f: &FourierTable,
) -> Result<InstanceEval> {
    inst.validate()?;
    if s.predicate.k != inst.k || s.predicate.a != inst.a {
        return Err(Error::Param(format!(
            "scheme is for ({}, {}), instance for ({}, {})",
            s.predicate.k, s.predicate.a, inst.k, inst.a
        )));
    }
    if inst.clauses.is_empty() {
        return Err(Error::Param("instance has no clauses".into()));
    }
    let p = inst.predicate()?;
    let mut values = Vec::with_capacity(inst.clauses.len());
    let mut min_v = f64::INFINITY;
    let mut max_abs_v: f64 = 0.0;
    let mut planted_satisfied = 0usize;
    let mut repaired = 0usize;
    for i in 0..inst.clauses.len() {
        let w = inst.literal_pattern(i)?;
        let (fixed, flips) = repair_literals(&p, &w, RepairPolicy::Minimal)?;
        if flips == 0 {
            planted_satisfied += 1;
        } else {
            repaired += 1;
        }
        let v = evaluate_scheme(s, f, &vertex(&p, &fixed)?)?.total;
        min_v = min_v.min(v);
        max_abs_v = max_abs_v.max(v.abs());
        values.push(v);
    }
    let avg_v = compensated_sum(values) / inst.clauses.len() as f64;
    Ok(InstanceEval {
        n_clauses: inst.clauses.len(),
        avg_v,
        min_v,
        max_abs_v,
        planted_satisfied,
        repaired,
        proxy: 0.5 + s.epsilon_scale * avg_v / 2.0,
        caveat: PROXY_CAVEAT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::vertex_sweep;
    use crate::fourier::exact_table;
    use crate::numeric::{rat, rat_to_f64};
    use crate::rounding::{build_scheme, HKind, RoundingPolynomial};
    use num_traits::Signed;

    fn ten_six() -> Predicate {
        Predicate::new(10, 6).unwrap()
    }

    /// h(x) = x: the simplest polynomial whose scheme is vertex-positive at
    /// (10, 6) — exact minimum 2545/64 at orbit (−1, 8).
    fn identity_h() -> RoundingPolynomial {
        RoundingPolynomial {
            coeffs: vec![rat(1, 1)],
            kind: HKind::Custom,
        }
    }

    #[test]
    fn eps_zero_plants_a_full_solution() {
        let p = ten_six();
        let inst = generate(&p, 50, 300, 0.0, 7).unwrap();
        inst.validate().unwrap();
        assert_eq!(inst.satisfied_by_planted().unwrap(), 300);
        // strict policy accepts every clause: all are genuine vertices
        for i in 0..300 {
            let pt = constraint_point(&inst, i, RepairPolicy::Strict).unwrap();
            assert_eq!(pt.k, 10);
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let p = ten_six();
        let a = generate(&p, 40, 100, 0.3, 99).unwrap();
        let b = generate(&p, 40, 100, 0.3, 99).unwrap();
        assert_eq!(a, b);
        let c = generate(&p, 40, 100, 0.3, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_corruption_halves_satisfaction() {
        let p = ten_six();
        // corrupted signs are uniform, and the predicate is odd, so each
        // corrupted clause is satisfied with probability exactly 1/2
        let m = 4000;
        let inst = generate(&p, 80, m, 1.0, 3).unwrap();
        let frac = inst.satisfied_by_planted().unwrap() as f64 / m as f64;
        let sigma = 0.5 / (m as f64).sqrt();
        assert!((frac - 0.5).abs() <= 3.0 * sigma, "frac = {frac}");
    }

    #[test]
    fn corruption_count_is_exact_not_binomial() {
        let p = ten_six();
        let m = 400;
        let inst = generate(&p, 60, m, 0.25, 11).unwrap();
        let sat = inst.satisfied_by_planted().unwrap();
        // at most 100 clauses were touched, so the floor is a guarantee
        assert!(sat >= 300, "sat = {sat}");
        assert!(sat < 400, "corruption left no violated clause at this seed");
    }

    #[test]
    fn margin_minus_one_repairs_with_one_citizen_flip() {
        let p = ten_six();
        // president −1, seven +1 citizens: margin −6 + 5 = −1
        let mut bits = vec![1i8; 10];
        bits[0] = -1;
        bits[8] = -1;
        bits[9] = -1;
        let w = Assignment::new(bits).unwrap();
        assert_eq!(p.margin(&w).unwrap(), -1);
        let (fixed, flips) = repair_literals(&p, &w, RepairPolicy::Minimal).unwrap();
        assert_eq!(flips, 1);
        assert_eq!(p.margin(&fixed).unwrap(), 1);
        assert_eq!(fixed.bits()[0], -1, "president untouched");
        assert_eq!(fixed.bits()[8], 1, "lowest-index −1 citizen flipped");
        assert_eq!(fixed.bits()[9], -1);
    }

    #[test]
    fn deep_violation_flips_president_first() {
        let p = ten_six();
        let w = Assignment::new(vec![-1i8; 10]).unwrap();
        assert_eq!(p.margin(&w).unwrap(), -15);
        let (fixed, flips) = repair_literals(&p, &w, RepairPolicy::Minimal).unwrap();
        // president (+12) then two citizens (+4): margin −15 → +1
        assert_eq!(flips, 3);
        assert_eq!(fixed.bits()[0], 1);
        assert_eq!(p.margin(&fixed).unwrap(), 1);
        assert_eq!(fixed.bits()[1..].iter().filter(|&&b| b == 1).count(), 2);
    }

    #[test]
    fn positive_president_is_never_flipped() {
        let p = ten_six();
        // president +1, all citizens −1: margin 6 − 9 = −3
        let mut bits = vec![-1i8; 10];
        bits[0] = 1;
        let w = Assignment::new(bits).unwrap();
        let (fixed, flips) = repair_literals(&p, &w, RepairPolicy::Minimal).unwrap();
        assert_eq!(flips, 2);
        assert_eq!(fixed.bits()[0], 1);
        assert_eq!(p.margin(&fixed).unwrap(), 1);
    }

    #[test]
    fn strict_policy_rejects_violations() {
        let p = ten_six();
        let w = Assignment::new(vec![-1i8; 10]).unwrap();
        assert!(matches!(
            repair_literals(&p, &w, RepairPolicy::Strict),
            Err(Error::NotSatisfying)
        ));
    }

    #[test]
    fn clean_instance_evaluates_above_the_sweep_floor() {
        let p = ten_six();
        let s = build_scheme(&p, identity_h()).unwrap();
        let f = exact_table(&p, 3).unwrap();
        let sweep = vertex_sweep(&s, &f).unwrap();
        assert!(sweep.min.is_positive(), "cell must be vertex-certified");
        let floor = rat_to_f64(&sweep.min);
        let inst = generate(&p, 60, 500, 0.0, 21).unwrap();
        let ev = evaluate_instance(&inst, &s, &f).unwrap();
        assert_eq!(ev.planted_satisfied, 500);
        assert_eq!(ev.repaired, 0);
        assert!(ev.avg_v > 0.0);
        assert!(ev.min_v >= floor - 1e-9, "{} vs {}", ev.min_v, floor);
        assert!((ev.proxy - 0.5 - s.epsilon_scale * ev.avg_v / 2.0).abs() < 1e-15);
        assert!((ev.proxy - 0.5).abs() <= s.epsilon_scale * ev.max_abs_v / 2.0 + 1e-15);
    }

    #[test]
    fn corrupted_instances_stay_positive_after_repair() {
        // every repaired clause is still a genuine vertex, and the scheme
        // is vertex-positive, so corruption cannot push the average below
        // zero — only move it around
        let p = ten_six();
        let s = build_scheme(&p, identity_h()).unwrap();
        let f = exact_table(&p, 3).unwrap();
        let mut last_repaired = 0;
        for (i, eps) in [0.0, 0.05, 0.1].into_iter().enumerate() {
            let inst = generate(&p, 60, 600, eps, 5).unwrap();
            let ev = evaluate_instance(&inst, &s, &f).unwrap();
            assert!(ev.avg_v > 0.0, "eps = {eps}");
            assert!(ev.min_v > 0.0, "eps = {eps}");
            if i > 0 {
                assert!(ev.repaired > last_repaired, "more corruption, more repairs");
            }
            last_repaired = ev.repaired;
        }
    }

    #[test]
    fn json_roundtrip_preserves_the_instance() {
        let p = ten_six();
        let inst = generate(&p, 30, 40, 0.5, 2).unwrap();
        let text = inst.to_json().unwrap();
        for key in ["n_vars", "planted", "clauses", "vars", "signs"] {
            assert!(text.contains(&format!("\"{key}\"")), "missing {key}");
        }
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn loading_rejects_structural_damage() {
        let p = ten_six();
        let inst = generate(&p, 30, 5, 0.0, 2).unwrap();
        let mut dup = inst.clone();
        dup.clauses[0].vars[1] = dup.clauses[0].vars[0];
        assert!(Instance::from_json(&dup.to_json().unwrap()).is_err());
        let mut bad_sign = inst.clone();
        bad_sign.clauses[2].signs[3] = 0;
        assert!(Instance::from_json(&bad_sign.to_json().unwrap()).is_err());
        let mut out_of_range = inst;
        out_of_range.clauses[1].vars[0] = 30;
        assert!(Instance::from_json(&out_of_range.to_json().unwrap()).is_err());
    }

    #[test]
    fn pattern_sampler_is_uniform_over_orbits() {
        // chi-square-style sanity: orbit frequencies proportional to C(9, t)
        let p = ten_six();
        let (cum, total) = orbit_cumulative(&p).unwrap();
        let mut rng = rng_for(123, STREAM_INSTANCE);
        let n = 20_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..n {
            let w = sample_satisfying(&p, &cum, total, &mut rng);
            assert_eq!(p.evaluate(&w).unwrap(), 1);
            let t = w.bits()[1..].iter().filter(|&&b| b == 1).count() as u32;
            *counts.entry((w.bits()[0], t)).or_insert(0usize) += 1;
        }
        for &(x1, t, _) in &cum {
            let weight = binomial(9, t as u64).to_u128().unwrap() as f64 / total as f64;
            let expected = weight * n as f64;
            let got = counts.get(&(x1, t)).copied().unwrap_or(0) as f64;
            let sigma = (expected * (1.0 - weight)).sqrt().max(1.0);
            assert!(
                (got - expected).abs() <= 5.0 * sigma,
                "orbit ({x1}, {t}): got {got}, expected {expected}"
            );
        }
    }
}
