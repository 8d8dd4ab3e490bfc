//! Positivity certification of a rounding scheme over the moment polytope:
//! exact vertex sweep (collapsed to ≤ 2k citizen-count orbits), sampled
//! interior check, the exact margin inequality behind the Δ case split, and
//! the k-threshold scan.

use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::ktw::{key_quantities, sample_mixture, vertex_delta, KtwPoint};
use crate::numeric::{binomial, rat, rat_to_f64, Int, Rat};
use crate::predicate::Predicate;
use crate::rounding::{build_scheme, evaluate_scheme, symmetric_term_count, RoundingPolynomial, RoundingScheme};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// K(s, t) = Σ_j (−1)^{s−j} C(t, j) C(k−1−t, s−j): the sum of all s-fold
/// products of distinct citizen signs when t of the k−1 citizens are +1.
/// Returned for s = 0..=s_max via the three-term recurrence
/// (s+1)·K_{s+1} = (2t−n)·K_s − (n−s+1)·K_{s−1} with n = k−1.
pub fn krawtchouk_row(k: u32, t: u32, s_max: u32) -> Vec<Int> {
    let n = Int::from(k - 1);
    let lead = Int::from(2 * t as i64 - (k as i64 - 1));
    let mut row = Vec::with_capacity(s_max as usize + 1);
    row.push(Int::one());
    if s_max == 0 {
        return row;
    }
    row.push(lead.clone());
    for s in 1..s_max {
        let prev = &row[s as usize - 1];
        let cur = &row[s as usize];
        let next = (&lead * cur - (&n - Int::from(s - 1)) * prev) / Int::from(s + 1);
        row.push(next);
    }
    row
}

/// Shared weights of the closed-form vertex value, put over one common
/// denominator so each orbit evaluation is an integer dot product:
/// D·V(x₁, t) = û_P·x₁ + û_C·(2t−k+1) + Σ_l [ŵ1_l·K(2l+1, t) + ŵ2_l·x₁·K(2l, t)].
pub struct OrbitEvaluator {
    p: Predicate,
    denom: Int,
    u_pres: Int,
    u_cit: Int,
    /// (l, citizen-side numerator, president-side numerator)
    weights: Vec<(u32, Int, Int)>,
    s_max: u32,
}

impl OrbitEvaluator {
    pub fn new(s: &RoundingScheme, f: &FourierTable) -> Result<OrbitEvaluator> {
        let p = &s.predicate;
        if f.k != p.k || f.a != p.a {
            return Err(Error::Param(format!(
                "table is for ({}, {}), scheme for ({}, {})",
                f.k, f.a, p.k, p.a
            )));
        }
        let m = s.h.degree() as u32;
        if m > 0 && f.t_max < 2 * m + 1 {
            return Err(Error::Range(format!(
                "table covers t <= {}, scheme needs t <= {}",
                f.t_max,
                2 * m + 1
            )));
        }
        let u1 = &s.c1 * &f.p_hat_president;
        let u2 = &s.c1 * f.citizen(1).expect("t=1");
        let mut rats: Vec<(u32, Rat, Rat)> = Vec::new();
        for (l, c) in &s.c_odd {
            let n_l = Rat::from_integer(symmetric_term_count(*l));
            let w1 = c * f.citizen(2 * l + 1).expect("odd") * &n_l;
            let w2 = c * f.president_citizen(2 * l).expect("even") * &n_l;
            rats.push((*l, w1, w2));
        }
        let mut denom = u1.denom().lcm(u2.denom());
        for (_, w1, w2) in &rats {
            denom = denom.lcm(w1.denom()).lcm(w2.denom());
        }
        let scale = |r: &Rat| -> Int { (r * Rat::from_integer(denom.clone())).to_integer() };
        Ok(OrbitEvaluator {
            p: p.clone(),
            u_pres: scale(&u1),
            u_cit: scale(&u2),
            weights: rats
                .iter()
                .map(|(l, w1, w2)| (*l, scale(w1), scale(w2)))
                .collect(),
            denom,
            s_max: if m > 0 { 2 * m + 1 } else { 1 },
        })
    }

    fn numerator(&self, x1: i8, kraw: &[Int], t: u32) -> Int {
        let shift = Int::from(2 * t as i64 - (self.p.k as i64 - 1));
        let mut acc = &self.u_pres * Int::from(x1) + &self.u_cit * shift;
        for (l, w1, w2) in &self.weights {
            let odd = &kraw[(2 * l + 1) as usize];
            let even = &kraw[(2 * l) as usize];
            acc += w1 * odd + w2 * even * Int::from(x1);
        }
        acc
    }

    /// Exact scheme value on the orbit (x₁, t).
    pub fn value(&self, x1: i8, t: u32) -> Result<Rat> {
        if !self.p.orbit_satisfying(x1, t) || t > self.p.k - 1 {
            return Err(Error::InfeasibleOrbit { x1, t });
        }
        let kraw = krawtchouk_row(self.p.k, t, self.s_max);
        Ok(Rat::new(self.numerator(x1, &kraw, t), self.denom.clone()))
    }
}

/// Closed-form vertex value as a float; exact inside, converted on return.
pub fn evaluate_vertex_fast(
    s: &RoundingScheme,
    f: &FourierTable,
    x1: i8,
    t: u32,
) -> Result<f64> {
    let ev = OrbitEvaluator::new(s, f)?;
    Ok(rat_to_f64(&ev.value(x1, t)?))
}

#[derive(Clone, Debug)]
pub struct OrbitRow {
    pub x1: i8,
    pub t: u32,
    pub value: Rat,
}

#[derive(Clone, Debug)]
pub struct VertexSweep {
    pub min: Rat,
    pub argmin: (i8, u32),
    pub rows: Vec<OrbitRow>,
}

/// Exact scheme value at every satisfying-vertex orbit. The sweep walks
/// x₁ = +1 then −1 with t ascending; ties keep the first minimizer.
pub fn vertex_sweep(s: &RoundingScheme, f: &FourierTable) -> Result<VertexSweep> {
    let ev = OrbitEvaluator::new(s, f)?;
    let p = &s.predicate;
    let mut rows = Vec::new();
    let mut best: Option<(Rat, (i8, u32))> = None;
    for x1 in [1i8, -1] {
        for t in p.feasible_t(x1) {
            let kraw = krawtchouk_row(p.k, t, ev.s_max);
            let value = Rat::new(ev.numerator(x1, &kraw, t), ev.denom.clone());
            if best.as_ref().is_none_or(|(m, _)| &value < m) {
                best = Some((value.clone(), (x1, t)));
            }
            rows.push(OrbitRow { x1, t, value });
        }
    }
    let (min, argmin) = best.expect("every predicate has satisfying orbits");
    Ok(VertexSweep { min, argmin, rows })
}

#[derive(Clone, Debug)]
pub struct MarginRow {
    pub x1: i8,
    pub t: u32,
    /// δk·x₁ + β − (δ²k−1)|Δ(t)|/4 − 1/2, exact.
    pub margin: Rat,
}

#[derive(Clone, Debug)]
pub struct MarginReport {
    pub ok: bool,
    pub worst: MarginRow,
    pub failures: Vec<MarginRow>,
}

/// Exact check of the linear-vs-pair-excess inequality
/// δk·α + β ≥ (δ²k − 1)·|Δ|/4 + 1/2 at every satisfying-vertex orbit.
/// |Δ| is convex over the polytope, so all orbits passing extends the bound
/// to every interior point with the same Δ budget.
pub fn verify_margin_inequality(p: &Predicate) -> Result<MarginReport> {
    let delta = p.delta();
    let kr = Rat::from_integer(Int::from(p.k));
    let quarter = (&delta * &delta * &kr - Rat::one()) / rat(4, 1);
    let mut worst: Option<MarginRow> = None;
    let mut failures = Vec::new();
    for x1 in [1i8, -1] {
        for t in p.feasible_t(x1) {
            let lhs = &delta * &kr * rat(x1 as i64, 1)
                + rat(2 * t as i64 - (p.k as i64 - 1), 1);
            let rhs = &quarter * vertex_delta(p, t)?.abs() + rat(1, 2);
            let margin = lhs - rhs;
            let row = MarginRow { x1, t, margin };
            if row.margin.is_negative() {
                failures.push(row.clone());
            }
            if worst.as_ref().is_none_or(|w| row.margin < w.margin) {
                worst = Some(row);
            }
        }
    }
    Ok(MarginReport {
        ok: failures.is_empty(),
        worst: worst.expect("satisfying orbits exist"),
        failures,
    })
}

#[derive(Clone, Debug)]
pub struct CaseSplit {
    /// Samples with Δ ≥ −0.55: count and minimum value.
    pub high_count: usize,
    pub high_min: f64,
    /// Samples with Δ < −0.55: count and minimum value.
    pub low_count: usize,
    pub low_min: f64,
    /// Sample indices with Δ < −0.55 but president bias ≤ 0.
    pub alpha_findings: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct InteriorReport {
    pub n_points: usize,
    pub support_size: usize,
    pub seed: u64,
    /// +∞ when no points were requested.
    pub min: f64,
    pub argmin_index: Option<usize>,
    pub worst_point: Option<KtwPoint>,
    pub case_split: CaseSplit,
}

/// Evaluate the scheme at sampled interior mixtures; per-sample seeds are
/// derived from the base seed by counter.
pub fn interior_certify(
    s: &RoundingScheme,
    f: &FourierTable,
    n_points: usize,
    support_size: usize,
    seed: u64,
) -> Result<InteriorReport> {
    let p = &s.predicate;
    let threshold = rat(-11, 20);
    let mut report = InteriorReport {
        n_points,
        support_size,
        seed,
        min: f64::INFINITY,
        argmin_index: None,
        worst_point: None,
        case_split: CaseSplit {
            high_count: 0,
            high_min: f64::INFINITY,
            low_count: 0,
            low_min: f64::INFINITY,
            alpha_findings: Vec::new(),
        },
    };
    for i in 0..n_points {
        let pt = sample_mixture(p, support_size, seed.wrapping_add(i as u64))?;
        let value = evaluate_scheme(s, f, &pt)?.total;
        let kq = key_quantities(&pt, p)?;
        if kq.delta < threshold {
            report.case_split.low_count += 1;
            report.case_split.low_min = report.case_split.low_min.min(value);
            if !kq.alpha.is_positive() {
                report.case_split.alpha_findings.push(i);
            }
        } else {
            report.case_split.high_count += 1;
            report.case_split.high_min = report.case_split.high_min.min(value);
        }
        if value < report.min {
            report.min = value;
            report.argmin_index = Some(i);
            report.worst_point = Some(pt);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct CertificationReport {
    pub k: u32,
    pub a: u32,
    pub min_vertex_value: Rat,
    pub argmin_orbit: (i8, u32),
    pub interior: InteriorReport,
    pub margin: MarginReport,
    /// (Δmin, Δmax) over satisfying-vertex orbits.
    pub delta_bounds: (Rat, Rat),
    pub passed: bool,
}

/// Full certification: exact vertex layer + sampled interior layer + the
/// exact margin inequality. Positivity passes only if both value layers are
/// strictly positive (an empty interior layer passes vacuously at +∞).
pub fn certify(
    s: &RoundingScheme,
    f: &FourierTable,
    n_points: usize,
    support_size: usize,
    seed: u64,
) -> Result<CertificationReport> {
    let p = &s.predicate;
    let sweep = vertex_sweep(s, f)?;
    let interior = interior_certify(s, f, n_points, support_size, seed)?;
    let margin = verify_margin_inequality(p)?;
    let mut deltas = Vec::new();
    for t in p.v..=p.k - 1 {
        deltas.push(vertex_delta(p, t)?);
    }
    let delta_min = deltas.iter().min().expect("nonempty").clone();
    let delta_max = deltas.iter().max().expect("nonempty").clone();
    let passed = sweep.min.is_positive() && interior.min > 0.0;
    Ok(CertificationReport {
        k: p.k,
        a: p.a,
        min_vertex_value: sweep.min,
        argmin_orbit: sweep.argmin,
        interior,
        margin,
        delta_bounds: (delta_min, delta_max),
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    NoPredicate,
    NoScheme(String),
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub k: u32,
    pub a: Option<u32>,
    pub status: CellStatus,
    pub delta: Option<Rat>,
    pub min_vertex_value: Option<Rat>,
    pub argmin_orbit: Option<(i8, u32)>,
    pub margin_ineq: Option<Rat>,
    pub delta_bounds: Option<(Rat, Rat)>,
    pub passed: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Smallest k with every scheme-bearing cell at k′ ≥ k vertex-positive
    /// (and at least one such cell); None when no suffix qualifies.
    pub k_star: Option<u32>,
}

fn valid_a_window(k: u32, delta0: &Rat) -> Vec<u32> {
    if k < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for a in 1..=k - 2 {
        if (a + k) % 2 != 0 {
            continue;
        }
        if Rat::new(Int::from(a), Int::from(k)) >= *delta0 {
            out.push(a);
        }
    }
    out
}

/// Sweep every (k, a) cell with a/k ∈ [δ₀, 1 − 2/k] over the k range; each
/// scheme-bearing cell gets an exact vertex sweep and margin check.
pub fn scan_k(
    delta0: &Rat,
    h: &RoundingPolynomial,
    k_min: u32,
    k_max: u32,
) -> Result<ScanReport> {
    if k_min > k_max || k_min < 3 {
        return Err(Error::Param(format!(
            "need 3 <= k_min <= k_max, got {k_min}..{k_max}"
        )));
    }
    let m = h.degree() as u32;
    let mut rows = Vec::new();
    for k in k_min..=k_max {
        let window = valid_a_window(k, delta0);
        if window.is_empty() {
            rows.push(ScanRow {
                k,
                a: None,
                status: CellStatus::NoPredicate,
                delta: None,
                min_vertex_value: None,
                argmin_orbit: None,
                margin_ineq: None,
                delta_bounds: None,
                passed: None,
            });
            continue;
        }
        for a in window {
            let p = Predicate::new(k, a)?;
            let mut row = ScanRow {
                k,
                a: Some(a),
                status: CellStatus::Ok,
                delta: Some(p.delta()),
                min_vertex_value: None,
                argmin_orbit: None,
                margin_ineq: None,
                delta_bounds: None,
                passed: None,
            };
            match build_scheme(&p, h.clone()) {
                Err(e) => {
                    row.status = CellStatus::NoScheme(e.to_string());
                }
                Ok(s) => {
                    let f = crate::fourier::exact_table(&p, if m > 0 { 2 * m + 1 } else { 1 })?;
                    let sweep = vertex_sweep(&s, &f)?;
                    let margin = verify_margin_inequality(&p)?;
                    let mut lo = vertex_delta(&p, p.v)?;
                    let mut hi = lo.clone();
                    for t in p.v + 1..=p.k - 1 {
                        let d = vertex_delta(&p, t)?;
                        if d < lo {
                            lo = d.clone();
                        }
                        if d > hi {
                            hi = d;
                        }
                    }
                    row.passed = Some(sweep.min.is_positive());
                    row.min_vertex_value = Some(sweep.min);
                    row.argmin_orbit = Some(sweep.argmin);
                    row.margin_ineq = Some(margin.worst.margin);
                    row.delta_bounds = Some((lo, hi));
                }
            }
            rows.push(row);
        }
    }

    // smallest k whose suffix has only passing scheme cells (and ≥ 1 of them)
    let mut k_star = None;
    let mut suffix_ok = true;
    let mut seen_scheme = false;
    for k in (k_min..=k_max).rev() {
        for row in rows.iter().filter(|r| r.k == k) {
            if let Some(p) = row.passed {
                seen_scheme = true;
                if !p {
                    suffix_ok = false;
                }
            }
        }
        if suffix_ok && seen_scheme {
            k_star = Some(k);
        }
        if !suffix_ok {
            break;
        }
    }
    Ok(ScanReport { rows, k_star })
}

/// Binomial-sum reference for the sign-product sum, used to pin the
/// recurrence.
#[doc(hidden)]
pub fn krawtchouk_direct(k: u32, s: u32, t: u32) -> Int {
    let n = k - 1;
    let mut acc = Int::zero();
    for j in 0..=s.min(t) {
        if s - j > n - t {
            continue;
        }
        let term = binomial(t as u64, j as u64) * binomial((n - t) as u64, (s - j) as u64);
        if (s - j) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}
