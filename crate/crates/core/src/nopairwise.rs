//! Exact construction of a distribution over polytope points on which every
//! bias-only rounding scheme of bounded odd degree has zero expected value —
//! plus the monarchy escape hatch, whose polytope the construction cannot
//! enter.
//!
//! Points carry explicit two-vertex witness mixtures, so membership in the
//! moment polytope is constructive, never asserted.

use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::numeric::{binomial, rat, rng_for, Combinations, Int, Rat};
use crate::predicate::Predicate;
use num_traits::{Signed, Zero};
use rand::Rng;

/// A polytope point with biases in {−1, 0, +1}: the president bias, `ones`
/// citizens at +1, `minus_ones` citizens at −1, the rest at 0. The witness
/// pair of satisfying assignments averages to exactly these biases.
#[derive(Clone, Debug)]
pub struct PointType {
    pub label: String,
    pub president_bias: i8,
    pub ones: u32,
    pub minus_ones: u32,
    pub witness: (crate::predicate::Assignment, crate::predicate::Assignment),
}

impl PointType {
    /// Canonical bias vector: president first, then +1s, −1s, zeros.
    pub fn bias_vector(&self, k: u32) -> Vec<Rat> {
        let mut b = vec![rat(self.president_bias as i64, 1)];
        for i in 0..k - 1 {
            b.push(if i < self.ones {
                rat(1, 1)
            } else if i < self.ones + self.minus_ones {
                rat(-1, 1)
            } else {
                rat(0, 1)
            });
        }
        b
    }

    /// Entry values at the nonzero coordinates, president (if any) first.
    fn nonzero_entries(&self) -> Vec<i8> {
        let mut vals = Vec::new();
        if self.president_bias != 0 {
            vals.push(self.president_bias);
        }
        vals.extend(std::iter::repeat_n(1i8, self.ones as usize));
        vals.extend(std::iter::repeat_n(-1i8, self.minus_ones as usize));
        vals
    }
}

fn signed_pattern(p: &Predicate, x1: i8, fixed: &[i8], free_sum: i64) -> Result<crate::predicate::Assignment> {
    let free = p.k as usize - 1 - fixed.len();
    let plus = (free as i64 + free_sum) / 2;
    if (free as i64 + free_sum) % 2 != 0 || plus < 0 || plus > free as i64 {
        return Err(Error::Infeasible(format!(
            "free sum {free_sum} unreachable with {free} free citizens"
        )));
    }
    let mut bits = vec![x1];
    bits.extend_from_slice(fixed);
    for i in 0..free {
        bits.push(if (i as i64) < plus { 1 } else { -1 });
    }
    crate::predicate::Assignment::new(bits)
}

/// Search a two-vertex witness for the point (pb | ones, minus_ones): two
/// satisfying assignments agreeing on the nonzero coordinates and opposite
/// on the zero ones. Fails loudly when no free-coordinate sum works.
fn witness_search(
    p: &Predicate,
    pb: i8,
    ones: u32,
    minus_ones: u32,
) -> Result<(crate::predicate::Assignment, crate::predicate::Assignment)> {
    let k = p.k as i64;
    let a = p.a as i64;
    if ones + minus_ones > p.k - 1 {
        return Err(Error::Infeasible(format!(
            "{} biased citizens but only {}",
            ones + minus_ones,
            p.k - 1
        )));
    }
    let w = ones as i64 - minus_ones as i64;
    let free = k - 1 - ones as i64 - minus_ones as i64;
    let mut fixed = vec![1i8; ones as usize];
    fixed.extend(std::iter::repeat_n(-1i8, minus_ones as usize));

    // partner shares the fixed block and negates every free coordinate
    let pair = |y1: i8, s: i64| -> Result<_> {
        let x = signed_pattern(p, if pb != 0 { pb } else { 1 }, &fixed, s)?;
        let mut ybits = x.bits().to_vec();
        ybits[0] = y1;
        for bit in ybits.iter_mut().skip(1 + fixed.len()) {
            *bit = -*bit;
        }
        Ok((x, crate::predicate::Assignment::new(ybits)?))
    };

    if pb != 0 {
        // both assignments share the president sign
        for mag in 0..=free {
            for s in [mag, -mag] {
                if (free + s) % 2 != 0 {
                    continue;
                }
                if pb as i64 * a + w + s >= 1 && pb as i64 * a + w - s >= 1 {
                    return pair(pb, s);
                }
            }
        }
    } else {
        // president signs oppose; free sum σ must satisfy both margins
        let lo = (1 - a - w).max(-free);
        let hi = (w - a - 1).min(free);
        for s in lo..=hi {
            if (free + s) % 2 != 0 {
                continue;
            }
            let (x, y) = pair(-1, s)?;
            if p.evaluate(&x)? == 1 && p.evaluate(&y)? == 1 {
                return Ok((x, y));
            }
        }
    }
    Err(Error::Infeasible(format!(
        "no witness for point ({pb} | {ones}, {minus_ones}) under ({}, {})",
        p.k, p.a
    )))
}

/// Build a point type with its witness, validated exactly: both assignments
/// satisfy the predicate and their average reconstructs the bias vector.
pub fn point_type(
    p: &Predicate,
    label: &str,
    president_bias: i8,
    ones: u32,
    minus_ones: u32,
) -> Result<PointType> {
    let (x, y) = witness_search(p, president_bias, ones, minus_ones)?;
    let pt = PointType {
        label: label.to_string(),
        president_bias,
        ones,
        minus_ones,
        witness: (x, y),
    };
    validate_witness(p, &pt)?;
    Ok(pt)
}

fn validate_witness(p: &Predicate, pt: &PointType) -> Result<()> {
    let (x, y) = &pt.witness;
    if p.evaluate(x)? != 1 || p.evaluate(y)? != 1 {
        return Err(Error::Infeasible(format!(
            "witness of {} uses a non-satisfying assignment",
            pt.label
        )));
    }
    let b = pt.bias_vector(p.k);
    for i in 0..p.k as usize {
        let avg = rat((x.bits()[i] + y.bits()[i]) as i64, 2);
        if avg != b[i] {
            return Err(Error::Infeasible(format!(
                "witness of {} averages to {} at coordinate {}, want {}",
                pt.label,
                avg,
                i + 1,
                b[i]
            )));
        }
    }
    Ok(())
}

fn citizen_sign_sum(ones: u32, minus_ones: u32, size: u32) -> Int {
    let mut acc = Int::zero();
    for j in 0..=size.min(minus_ones) {
        if size - j > ones {
            continue;
        }
        let term =
            binomial(minus_ones as u64, j as u64) * binomial(ones as u64, (size - j) as u64);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Coefficient of f_degree(1,…,1) contributed by one unit of probability on
/// the point: citizen-only sets weighted by the degree-size citizen
/// coefficient, president-containing sets by the mixed coefficient times the
/// president bias. A −1 entry flips the sign, a 0 entry annihilates, so only
/// the signed subset counts of the ±1 entries survive. Even degrees vanish
/// (their Fourier coefficients are zero for odd predicates).
pub fn contribution_coefficient(f: &FourierTable, pt: &PointType, degree: u32) -> Result<Rat> {
    if degree > f.k - 1 {
        return Err(Error::Range(format!(
            "degree {degree} exceeds citizen count {}",
            f.k - 1
        )));
    }
    if degree % 2 == 0 {
        return Ok(Rat::zero());
    }
    let cit = f
        .citizen(degree)
        .ok_or_else(|| Error::Range(format!("table lacks size {degree}")))?;
    let mut total =
        cit * Rat::from_integer(citizen_sign_sum(pt.ones, pt.minus_ones, degree));
    if pt.president_bias != 0 {
        let pres = f
            .president_citizen(degree - 1)
            .ok_or_else(|| Error::Range(format!("table lacks mixed size {degree}")))?;
        total += pres
            * rat(pt.president_bias as i64, 1)
            * Rat::from_integer(citizen_sign_sum(pt.ones, pt.minus_ones, degree - 1));
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct BalanceSystem {
    pub predicate: Predicate,
    /// Odd degrees 1..=m, ascending.
    pub degrees: Vec<u32>,
    pub types: Vec<PointType>,
    /// matrix[d_idx][type_idx], exact.
    pub matrix: Vec<Vec<Rat>>,
    /// Probabilities, same order as `types`; ≥ 0 and summing to 1.
    pub solution: Vec<Rat>,
    /// Residuals M·p per degree — all exactly zero.
    pub residuals: Vec<Rat>,
    /// Residuals under the opposite sign convention for president-containing
    /// contributions (the one the source table appears to use at one entry);
    /// exposed for inspection, not used by the solver.
    pub alternative_sign_residuals: Vec<Rat>,
    /// p(full) / p(single-one filler) when both are positive.
    pub full_to_filler_ratio: Option<Rat>,
}

/// Assemble the point family {T₀} ∪ {T_d⁺, T_d⁻ : odd d ∈ [3, m]} ∪ {T_full}
/// and solve the balance system M·p = 0, Σp = 1, p ≥ 0 by descending-degree
/// elimination: the full point is the anchor, each degree is cancelled by
/// whichever of its two dedicated types takes a nonnegative weight, and the
/// single-one point absorbs the degree-1 remainder.
pub fn build_and_solve(p: &Predicate, m: u32) -> Result<BalanceSystem> {
    if m % 2 == 0 || m < 1 {
        return Err(Error::Param(format!("degree bound must be odd, got {m}")));
    }
    if m > p.k - 1 {
        return Err(Error::Param(format!(
            "degree bound {m} exceeds citizen count {}",
            p.k - 1
        )));
    }
    // construction needs δ ≤ 1 − 4/k, i.e. a ≤ k − 4
    if p.a + 4 > p.k {
        return Err(Error::Param(format!(
            "needs a <= k - 4, got ({}, {})",
            p.k, p.a
        )));
    }
    let f = crate::fourier::exact_table(p, m)?;

    let mut types = vec![point_type(p, "single-one", 0, 1, 0)?];
    let mut cancel_pair = Vec::new(); // (degree, plus_idx, minus_idx)
    let mut d = 3;
    while d <= m {
        let plus = point_type(p, &format!("{d}-ones"), 0, d, 0)?;
        let minus = point_type(p, &format!("{d}-ones-one-minus"), 0, d, 1)?;
        types.push(plus);
        types.push(minus);
        cancel_pair.push((d, types.len() - 2, types.len() - 1));
        d += 2;
    }
    types.push(point_type(p, "full", -1, p.k - 1, 0)?);
    let full_idx = types.len() - 1;
    let filler_idx = 0usize;

    let degrees: Vec<u32> = (1..=m).step_by(2).collect();
    let matrix: Vec<Vec<Rat>> = degrees
        .iter()
        .map(|d| {
            types
                .iter()
                .map(|t| contribution_coefficient(&f, t, *d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    // raw weights, anchored on the full point
    let mut q = vec![Rat::zero(); types.len()];
    q[full_idx] = Rat::from_integer(Int::from(1));
    for (deg, plus_idx, minus_idx) in cancel_pair.iter().rev() {
        let row = &matrix[degrees.iter().position(|d| d == deg).expect("present")];
        let r: Rat = (0..types.len()).map(|i| &row[i] * &q[i]).sum();
        if r.is_zero() {
            continue;
        }
        let picked = [*minus_idx, *plus_idx]
            .into_iter()
            .find(|&i| !row[i].is_zero() && (-&r / &row[i]).is_positive())
            .ok_or_else(|| {
                Error::Infeasible(format!(
                    "degree {deg}: residual {r} cannot be cancelled nonnegatively"
                ))
            })?;
        q[picked] = -&r / &row[picked];
    }
    let row1 = &matrix[0];
    let r1: Rat = (0..types.len()).map(|i| &row1[i] * &q[i]).sum();
    let filler = -&r1 / &row1[filler_idx];
    if filler.is_negative() {
        return Err(Error::Infeasible(format!(
            "degree 1: filler weight {filler} is negative"
        )));
    }
    q[filler_idx] = filler;

    let total: Rat = q.iter().sum();
    let solution: Vec<Rat> = q.iter().map(|w| w / &total).collect();

    let residuals: Vec<Rat> = matrix
        .iter()
        .map(|row| (0..types.len()).map(|i| &row[i] * &solution[i]).sum())
        .collect();
    for (d, r) in degrees.iter().zip(&residuals) {
        if !r.is_zero() {
            return Err(Error::Infeasible(format!(
                "degree {d}: solver left residual {r}"
            )));
        }
    }

    // same solution scored with the president-part sign flipped
    let alternative_sign_residuals: Vec<Rat> = degrees
        .iter()
        .map(|d| {
            let mut acc = Rat::zero();
            for (t, pr) in types.iter().zip(&solution) {
                let mut c = contribution_coefficient(&f, t, *d)?;
                if t.president_bias != 0 && *d >= 1 {
                    let pres = f.president_citizen(d - 1).expect("mixed entry");
                    let flip = pres
                        * rat(t.president_bias as i64, 1)
                        * Rat::from_integer(citizen_sign_sum(t.ones, t.minus_ones, d - 1));
                    c -= rat(2, 1) * flip;
                }
                acc += c * pr;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let full_to_filler_ratio = if solution[filler_idx].is_positive() {
        Some(&solution[full_idx] / &solution[filler_idx])
    } else {
        None
    };

    Ok(BalanceSystem {
        predicate: p.clone(),
        degrees,
        types,
        matrix,
        solution,
        residuals,
        alternative_sign_residuals,
        full_to_filler_ratio,
    })
}

#[derive(Clone, Debug)]
pub struct ZeroExpectationReport {
    pub trials: usize,
    pub checks: usize,
    pub all_zero: bool,
    /// Worst |expectation| seen; exactly 0 when all_zero.
    pub max_abs: Rat,
}

/// Independent confirmation that the solved distribution kills every
/// bias-only scheme of degree ≤ m: per type, the signed subset counts are
/// re-derived by literal enumeration over nonzero coordinates (not via
/// contribution_coefficient), then combined with random rational per-degree
/// values.
pub fn verify_zero_expectation(
    sys: &BalanceSystem,
    f: &FourierTable,
    trials: usize,
    seed: u64,
) -> Result<ZeroExpectationReport> {
    // rows[type][degree index] by brute-force subset enumeration
    let mut rows = Vec::with_capacity(sys.types.len());
    for t in &sys.types {
        let entries = t.nonzero_entries();
        let has_president = t.president_bias != 0;
        let mut row = Vec::with_capacity(sys.degrees.len());
        for d in &sys.degrees {
            let mut n_cit: i64 = 0;
            let mut n_pres: i64 = 0;
            for subset in Combinations::new(entries.len(), *d as usize) {
                let sign: i64 = subset.iter().map(|&i| entries[i] as i64).product();
                if has_president && subset[0] == 0 {
                    n_pres += sign;
                } else {
                    n_cit += sign;
                }
            }
            let mut val = f
                .citizen(*d)
                .ok_or_else(|| Error::Range(format!("table lacks size {d}")))?
                * rat(n_cit, 1);
            if n_pres != 0 {
                val += f
                    .president_citizen(d - 1)
                    .ok_or_else(|| Error::Range(format!("table lacks mixed size {d}")))?
                    * rat(n_pres, 1);
            }
            row.push(val);
        }
        rows.push(row);
    }

    let mut rng = rng_for(seed, 0);
    let mut report = ZeroExpectationReport {
        trials,
        checks: 0,
        all_zero: true,
        max_abs: Rat::zero(),
    };
    for _ in 0..trials {
        let values: Vec<Rat> = sys
            .degrees
            .iter()
            .map(|_| rat(rng.gen_range(-100..=100), rng.gen_range(1..=30)))
            .collect();
        let mut expectation = Rat::zero();
        for (row, pr) in rows.iter().zip(&sys.solution) {
            for (val, v) in row.iter().zip(&values) {
                expectation += val * v * pr;
            }
        }
        report.checks += 1;
        if !expectation.is_zero() {
            report.all_zero = false;
            if expectation.abs() > report.max_abs {
                report.max_abs = expectation.abs();
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct MonarchyReport {
    pub k: u32,
    pub a: u32,
    pub vertices_checked: u64,
    /// Every satisfying vertex obeys b_i ≥ −b₁ (so, by linearity, every
    /// polytope point does).
    pub all_vertices_ok: bool,
    /// The (0, 1, 1, −1, 0, …) candidate the balance family would need.
    pub candidate: Vec<Rat>,
    pub candidate_inside: bool,
    /// 1-based coordinate where the candidate breaks b_i ≥ −b₁.
    pub violating_coordinate: Option<usize>,
}

/// The escape hatch: for the a = k−2 predicate the polytope satisfies the
/// extra linear inequalities b_i ≥ −b₁, and the balance family's signed
/// point violates one, so the zero-advantage distribution cannot exist there.
pub fn monarchy_check(k: u32) -> Result<MonarchyReport> {
    if k < 4 {
        return Err(Error::Param(format!("needs k >= 4, got {k}")));
    }
    let p = Predicate::new(k, k - 2)?;
    let mut vertices_checked = 0u64;
    let mut all_vertices_ok = true;
    for x in p.satisfying_assignments()? {
        vertices_checked += 1;
        let b1 = x.bits()[0];
        if x.bits()[1..].iter().any(|&bi| bi < -b1) {
            all_vertices_ok = false;
        }
    }
    let mut candidate = vec![rat(0, 1), rat(1, 1), rat(1, 1), rat(-1, 1)];
    candidate.resize(k as usize, rat(0, 1));
    let b1 = candidate[0].clone();
    let violating_coordinate = candidate[1..]
        .iter()
        .position(|bi| *bi < -&b1)
        .map(|i| i + 2);
    Ok(MonarchyReport {
        k,
        a: k - 2,
        vertices_checked,
        all_vertices_ok,
        candidate,
        candidate_inside: violating_coordinate.is_none(),
        violating_coordinate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::exact_table;

    fn table(k: u32, a: u32, t_max: u32) -> FourierTable {
        exact_table(&Predicate::new(k, a).unwrap(), t_max).unwrap()
    }

    #[test]
    fn contribution_frozen_examples() {
        let p = Predicate::new(30, 16).unwrap();
        let f = exact_table(&p, 7).unwrap();
        let mk = |pb: i8, ones: u32, minus: u32| point_type(&p, "t", pb, ones, minus).unwrap();

        // (0 | 4, 1) at degree 3: C(4,3) − C(4,2) = −2
        let c = contribution_coefficient(&f, &mk(0, 4, 1), 3).unwrap();
        assert_eq!(c, f.citizen(3).unwrap() * rat(-2, 1));
        // (0 | 2, 1) at degree 3: 0 − C(2,2) = −1
        let c = contribution_coefficient(&f, &mk(0, 2, 1), 3).unwrap();
        assert_eq!(c, f.citizen(3).unwrap() * rat(-1, 1));
        // full point at degree 1: −P̂_P + (k−1)·P̂_{1C}
        let c = contribution_coefficient(&f, &mk(-1, 29, 0), 1).unwrap();
        assert_eq!(c, -&f.p_hat_president + f.citizen(1).unwrap() * rat(29, 1));
        // single nonzero citizen cannot host degree 3
        let c = contribution_coefficient(&f, &mk(0, 1, 0), 3).unwrap();
        assert!(c.is_zero());
        // (0 | 5, 1): degree 5 → 1 − C(5,4) = −4; degree 3 → C(5,3) − C(5,2) = 0
        let t = mk(0, 5, 1);
        assert_eq!(
            contribution_coefficient(&f, &t, 5).unwrap(),
            f.citizen(5).unwrap() * rat(-4, 1)
        );
        assert!(contribution_coefficient(&f, &t, 3).unwrap().is_zero());
    }

    #[test]
    fn even_degrees_contribute_nothing() {
        let p = Predicate::new(30, 16).unwrap();
        let f = exact_table(&p, 7).unwrap();
        for (pb, ones, minus) in [(0i8, 4u32, 1u32), (0, 2, 1), (-1, 29, 0), (0, 1, 0)] {
            let t = point_type(&p, "t", pb, ones, minus).unwrap();
            for d in [2u32, 4, 6] {
                assert!(contribution_coefficient(&f, &t, d).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn witnesses_validate_across_grid() {
        for k in 8..=20u32 {
            for a in 1..=k.saturating_sub(4) {
                if (a + k) % 2 != 0 {
                    continue;
                }
                let p = Predicate::new(k, a).unwrap();
                for (pb, ones, minus) in
                    [(0i8, 1u32, 0u32), (0, 3, 0), (0, 3, 1), (-1, k - 1, 0)]
                {
                    let t = point_type(&p, "t", pb, ones, minus).unwrap();
                    // constructor validates; double-check the average here
                    let (x, y) = &t.witness;
                    assert_eq!(p.evaluate(x).unwrap(), 1);
                    assert_eq!(p.evaluate(y).unwrap(), 1);
                    let b = t.bias_vector(k);
                    for i in 0..k as usize {
                        assert_eq!(rat((x.bits()[i] + y.bits()[i]) as i64, 2), b[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn balance_solves_exactly() {
        let p = Predicate::new(30, 26).unwrap();
        let sys = build_and_solve(&p, 5).unwrap();
        assert_eq!(sys.degrees, vec![1, 3, 5]);
        assert_eq!(sys.types.len(), 6); // filler, 3±, 5±, full
        for r in &sys.residuals {
            assert!(r.is_zero());
        }
        let total: Rat = sys.solution.iter().sum();
        assert_eq!(total, rat(1, 1));
        for pr in &sys.solution {
            assert!(!pr.is_negative());
        }
        // five-point support: exactly one of each ± pair is used
        let used: Vec<&str> = sys
            .types
            .iter()
            .zip(&sys.solution)
            .filter(|(_, p)| p.is_positive())
            .map(|(t, _)| t.label.as_str())
            .collect();
        assert!(used.contains(&"single-one"));
        assert!(used.contains(&"full"));
        assert_eq!(
            used.iter().filter(|l| l.starts_with("3-ones")).count(),
            1
        );
        assert_eq!(
            used.iter().filter(|l| l.starts_with("5-ones")).count(),
            1
        );
    }

    #[test]
    fn balance_prefers_minus_types() {
        // positive residual from the full point is cancelled by the
        // one-minus variants, matching the hand construction
        let p = Predicate::new(30, 26).unwrap();
        let sys = build_and_solve(&p, 5).unwrap();
        let by_label = |l: &str| -> Rat {
            sys.types
                .iter()
                .zip(&sys.solution)
                .find(|(t, _)| t.label == l)
                .map(|(_, p)| p.clone())
                .unwrap()
        };
        assert!(by_label("5-ones-one-minus").is_positive());
        assert!(by_label("5-ones").is_zero());
    }

    #[test]
    fn full_point_weight_is_tiny() {
        // reported, not asserted in general; at k=40 the ratio is far
        // below 2^{−k/4} = 2^{−10} wherever the system solves at all
        let p = Predicate::new(40, 34).unwrap();
        let sys = build_and_solve(&p, 5).unwrap();
        let ratio = sys.full_to_filler_ratio.clone().unwrap();
        assert!(ratio.is_positive());
        assert!(ratio < rat(1, 1024));
    }

    #[test]
    fn degenerate_fourier_weight_blocks_balancing() {
        // (10, 6) has a vanishing size-5 citizen coefficient but a nonzero
        // degree-5 load from the full point: no nonnegative cancellation
        let p = Predicate::new(10, 6).unwrap();
        let err = build_and_solve(&p, 5).unwrap_err();
        match err {
            Error::Infeasible(msg) => assert!(msg.contains("degree 5"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        // m = 3 avoids the dead degree, so the failure moves to the
        // degree-1 budget: k = 10 is below the threshold for any m
        match build_and_solve(&p, 3).unwrap_err() {
            Error::Infeasible(msg) => assert!(msg.contains("degree 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hypothesis_window_enforced() {
        // monarchy sits outside the δ ≤ 1 − 4/k hypothesis and is rejected
        // up front; predicates inside the window reach the solver, which
        // may still report infeasibility on its own terms
        let p = Predicate::new(12, 10).unwrap();
        assert!(matches!(build_and_solve(&p, 3), Err(Error::Param(_))));
        let p = Predicate::new(12, 8).unwrap();
        assert!(matches!(build_and_solve(&p, 3), Err(Error::Infeasible(_))));
        let p = Predicate::new(16, 12).unwrap();
        assert!(build_and_solve(&p, 3).is_ok());
    }

    #[test]
    fn feasibility_frontier_grows_with_degree() {
        // the smallest k admitting a nonnegative solution depends on m:
        // the full point's degree-d load costs ~C(k−1,d) units of filler,
        // so the degree-1 budget only covers it once the single-one
        // weight is small enough relative to the full-assignment weight
        let p = Predicate::new(14, 10).unwrap();
        assert!(matches!(build_and_solve(&p, 3), Err(Error::Infeasible(_))));
        let p = Predicate::new(15, 11).unwrap();
        assert!(build_and_solve(&p, 3).is_ok());
        let p = Predicate::new(16, 12).unwrap();
        assert!(build_and_solve(&p, 3).is_ok());
        assert!(matches!(build_and_solve(&p, 5), Err(Error::Infeasible(_))));
        let p = Predicate::new(30, 26).unwrap();
        assert!(build_and_solve(&p, 5).is_ok());
    }

    #[test]
    fn brute_force_rows_match_contribution_formula() {
        // the enumeration inside verify_zero_expectation and the binomial
        // formula are independent routes to the same row values
        let p = Predicate::new(14, 8).unwrap();
        let f = exact_table(&p, 5).unwrap();
        for (pb, ones, minus) in [(0i8, 1u32, 0u32), (0, 3, 0), (0, 3, 1), (0, 5, 1), (-1, 13, 0)]
        {
            let t = point_type(&p, "t", pb, ones, minus).unwrap();
            let entries = t.nonzero_entries();
            for d in [1u32, 3, 5] {
                let mut n_cit: i64 = 0;
                let mut n_pres: i64 = 0;
                for subset in Combinations::new(entries.len(), d as usize) {
                    let sign: i64 = subset.iter().map(|&i| entries[i] as i64).product();
                    if pb != 0 && subset[0] == 0 {
                        n_pres += sign;
                    } else {
                        n_cit += sign;
                    }
                }
                let mut expect = f.citizen(d).unwrap() * rat(n_cit, 1);
                if n_pres != 0 {
                    expect += f.president_citizen(d - 1).unwrap() * rat(n_pres, 1);
                }
                assert_eq!(
                    contribution_coefficient(&f, &t, d).unwrap(),
                    expect,
                    "type ({pb}|{ones},{minus}) degree {d}"
                );
            }
        }
    }

    #[test]
    fn zero_expectation_randomized() {
        let p = Predicate::new(30, 26).unwrap();
        let sys = build_and_solve(&p, 5).unwrap();
        let f = exact_table(&p, 5).unwrap();
        let rep = verify_zero_expectation(&sys, &f, 100, 9).unwrap();
        assert_eq!(rep.checks, 100);
        assert!(rep.all_zero);
        assert!(rep.max_abs.is_zero());
    }

    #[test]
    fn alternative_sign_breaks_balance() {
        // flipping the president-part sign leaves a nonzero residual at the
        // degrees the full point loads — evidence for the flip-rule choice
        let p = Predicate::new(30, 26).unwrap();
        let sys = build_and_solve(&p, 5).unwrap();
        assert!(sys.alternative_sign_residuals.iter().any(|r| !r.is_zero()));
    }

    #[test]
    fn monarchy_polytope_rejects_the_family() {
        for k in [4u32, 7, 10] {
            let rep = monarchy_check(k).unwrap();
            assert_eq!(rep.a, k - 2);
            assert!(rep.all_vertices_ok, "k={k}");
            assert!(!rep.candidate_inside);
            assert_eq!(rep.violating_coordinate, Some(4));
            assert_eq!(rep.vertices_checked, 1 << (k - 1));
        }
    }

    #[test]
    fn monarchy_tight_vertices() {
        // k=4: (−1,1,1,1) has b_i = 1 ≥ 1; (1,1,−1,−1) is tight at −1 ≥ −1
        let p = Predicate::new(4, 2).unwrap();
        let x = crate::predicate::Assignment::new(vec![-1, 1, 1, 1]).unwrap();
        assert_eq!(p.evaluate(&x).unwrap(), 1);
        let y = crate::predicate::Assignment::new(vec![1, 1, -1, -1]).unwrap();
        assert_eq!(p.evaluate(&y).unwrap(), 1);
        let _ = table(4, 2, 3);
    }
}
