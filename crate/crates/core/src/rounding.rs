//! Rounding polynomials h(x) = Σ_{l=1}^m a_l x^l (no constant term) and the
//! schemes built from them: c₁ for the linear part plus one exact rational
//! c_{2l+1} per polynomial coefficient. The shape conditions on h (flatness
//! at x = 1, a closeness band, a unit-range band) are checked on a rational
//! grid with double-double evaluation — the monomial coefficients of the
//! truncated-exponential family reach ~1e20 and cancel to O(1), far beyond
//! plain f64.

use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::ktw::{key_quantities, sum_s, sum_s_exact_low, KtwPoint, SumShape};
use crate::numeric::{
    compensated_sum, factorial, pow2, rat, rat_to_f64, Dd, Int, Rat,
};
use crate::predicate::Predicate;
use num_traits::{One, Pow, Signed, Zero};
use std::collections::BTreeMap;

pub const TRUNCATION_SEARCH_CAP: usize = 200;

#[derive(Clone, Debug)]
pub enum HKind {
    Cubic,
    TruncatedExp {
        delta0: Rat,
        /// Decay parameter as carried in the coefficients (exact rational,
        /// rounded up at 1e−6 granularity); exposed as float downstream.
        b: Rat,
        /// Truncation order of the exponential series (polynomial degree is m+3).
        m: usize,
        /// Surviving closeness margin at the found truncation order.
        eta: f64,
    },
    Custom,
}

#[derive(Clone, Debug)]
pub struct RoundingPolynomial {
    /// coeffs[i] = a_{i+1}, the coefficient of x^(i+1).
    pub coeffs: Vec<Rat>,
    pub kind: HKind,
}

/// Double-double Horner evaluator; coefficients ascending, constant included.
#[derive(Clone, Debug)]
pub struct DdPoly {
    coeffs: Vec<Dd>,
}

impl DdPoly {
    fn from_rats(ascending_with_constant: &[Rat]) -> DdPoly {
        DdPoly {
            coeffs: ascending_with_constant.iter().map(Dd::from_rat).collect(),
        }
    }

    pub fn eval(&self, x: Dd) -> Dd {
        let mut acc = Dd::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(*c);
        }
        acc
    }
}

impl RoundingPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Exact value at a rational point.
    pub fn eval_rat(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc + c) * x;
        }
        acc
    }

    /// Σ l·a_l — exact h′(1).
    pub fn deriv1_at_one(&self) -> Rat {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| Rat::from_integer(Int::from(i as u64 + 1)) * a)
            .sum()
    }

    /// Σ l(l−1)·a_l — exact h″(1).
    pub fn deriv2_at_one(&self) -> Rat {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let l = i as u64 + 1;
                Rat::from_integer(Int::from(l * (l - 1))) * a
            })
            .sum()
    }

    /// Evaluator for h itself (constant 0 prepended).
    pub fn dd_value(&self) -> DdPoly {
        let mut cs = vec![Rat::zero()];
        cs.extend(self.coeffs.iter().cloned());
        DdPoly::from_rats(&cs)
    }

    /// Evaluator for h′.
    pub fn dd_deriv(&self) -> DdPoly {
        let cs: Vec<Rat> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| Rat::from_integer(Int::from(i as u64 + 1)) * a)
            .collect();
        DdPoly::from_rats(&cs)
    }
}

/// h(1+Δ) = 1 + Δ³: coefficients (3, −3, 1).
pub fn cubic_h() -> RoundingPolynomial {
    RoundingPolynomial {
        coeffs: vec![rat(3, 1), rat(-3, 1), rat(1, 1)],
        kind: HKind::Cubic,
    }
}

fn ceil_micro(r: &Rat) -> Rat {
    let scaled = r * Rat::from_integer(Int::from(1_000_000));
    Rat::new(scaled.ceil().to_integer(), Int::from(1_000_000))
}

/// Decay parameter B = max(5/δ₀, ln(5/δ₀²)/0.45), as an exact rational
/// rounded up at 1e−6 granularity. The logarithmic branch goes through f64
/// (its error is ~1e−15, five orders below the granularity); the 5/δ₀ branch
/// is exact.
pub fn b_parameter(delta0: &Rat) -> Rat {
    let branch1 = rat(5, 1) / delta0;
    let arg = rat_to_f64(&(rat(5, 1) / (delta0 * delta0)));
    let branch2_real = arg.ln() / 0.45;
    let branch2 = ceil_micro(&Rat::from_float(branch2_real).expect("finite"));
    ceil_micro(&branch1.max(branch2))
}

/// Smooth reference curve 1 − (1−x)³·exp(−Bx) with the real-valued B.
pub fn exp_h_reference(x: f64, delta0: &Rat) -> f64 {
    let b1 = rat_to_f64(&(rat(5, 1) / delta0));
    let b2 = rat_to_f64(&(rat(5, 1) / (delta0 * delta0))).ln() / 0.45;
    let b = b1.max(b2);
    1.0 - (1.0 - x).powi(3) * (-b * x).exp()
}

/// Monomial coefficients a_1..a_(m0+3) of 1 − (1−x)³·Σ_{l=0}^{m0} (−Bx)^l/l!.
/// The constant term is 0 by construction and is asserted, not stored.
fn truncated_coeffs(m0: usize, b: &Rat) -> Vec<Rat> {
    // series coefficients t_l = (−B)^l / l!
    let mut t = Vec::with_capacity(m0 + 1);
    let mut cur = Rat::one();
    t.push(cur.clone());
    for l in 1..=m0 {
        cur = cur * (-b) / Rat::from_integer(Int::from(l as u64));
        t.push(cur.clone());
    }
    // (1−x)³ = 1 − 3x + 3x² − x³
    let cube = [rat(1, 1), rat(-3, 1), rat(3, 1), rat(-1, 1)];
    let mut full = vec![Rat::zero(); m0 + 4];
    for (d, c) in cube.iter().enumerate() {
        for (l, tl) in t.iter().enumerate() {
            full[d + l] += c * tl;
        }
    }
    debug_assert!((Rat::one() - &full[0]).is_zero());
    full.drain(1..).map(|c| -c).collect()
}

/// Smallest truncation order whose polynomial passes all shape conditions
/// for the given δ₀, searched upward from m_hint (default 3).
pub fn truncated_h(delta0: &Rat, m_hint: Option<usize>) -> Result<RoundingPolynomial> {
    if delta0 <= &Rat::zero() || delta0 > &Rat::one() {
        return Err(Error::Param(format!("delta0 must be in (0,1], got {delta0}")));
    }
    let b = b_parameter(delta0);
    let start = m_hint.unwrap_or(3).max(1);
    for m0 in start..=TRUNCATION_SEARCH_CAP {
        let h = RoundingPolynomial {
            coeffs: truncated_coeffs(m0, &b),
            kind: HKind::TruncatedExp {
                delta0: delta0.clone(),
                b: b.clone(),
                m: m0,
                eta: 0.0,
            },
        };
        let report = check_report(&h, delta0, 1e-3, true)?;
        if report.passed {
            let eta = report.closeness.min_margin;
            return Ok(RoundingPolynomial {
                kind: HKind::TruncatedExp {
                    delta0: delta0.clone(),
                    b,
                    m: m0,
                    eta,
                },
                ..h
            });
        }
    }
    Err(Error::SearchExhausted {
        cap: TRUNCATION_SEARCH_CAP,
    })
}

/// Grid verdict and margin accounting for one band of the condition check.
#[derive(Clone, Debug)]
pub struct BandReport {
    pub points: usize,
    /// Smallest margin over interior grid points (exact endpoints sit at
    /// margin 0 by construction and are verified exactly instead).
    pub min_margin: f64,
    pub argmin: f64,
    /// Grid-estimated sup of the margin function's slope on the band.
    pub lipschitz_bound: f64,
    /// Worst possible dip between adjacent grid points: slope × step / 2.
    pub excursion_slack: f64,
    /// min_margin clears the inter-grid slack (reported accounting; the
    /// verdict is the grid itself).
    pub certified_between_grid: bool,
    pub ok: bool,
    /// (Δ, deficit) of the worst violation when !ok.
    pub worst_violation: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct HConditionReport {
    /// h′(1) = h″(1) = 0, exact.
    pub stationary_ok: bool,
    /// h(1) = 1, exact (the closeness band pins Δ = 0 to zero slack).
    pub unit_value_ok: bool,
    /// |h(1+Δ) − 1| ≤ δ₀²|Δ|/5 on [−0.55, 1/δ₀²].
    pub closeness: BandReport,
    /// 0 ≤ h(1+Δ) ≤ 1 on [−1, −0.55].
    pub range: BandReport,
    pub passed: bool,
}

fn rational_grid(lo: &Rat, hi: &Rat, step: &Rat) -> Vec<Rat> {
    // i·step clamped into [lo, hi], plus the exact endpoints
    let mut points = vec![lo.clone()];
    let i_lo = (lo / step).ceil().to_integer();
    let i_hi = (hi / step).floor().to_integer();
    let mut i = i_lo;
    while i <= i_hi {
        let x = Rat::from_integer(i.clone()) * step;
        if &x > lo && &x < hi {
            points.push(x);
        }
        i += 1;
    }
    points.push(hi.clone());
    points
}

fn check_report(
    h: &RoundingPolynomial,
    delta0: &Rat,
    grid_step: f64,
    fast_fail: bool,
) -> Result<HConditionReport> {
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(Error::Param(format!(
            "grid_step must be in (0, 1e-3], got {grid_step}"
        )));
    }
    if delta0 <= &Rat::zero() || delta0 > &Rat::one() {
        return Err(Error::Param(format!("delta0 must be in (0,1], got {delta0}")));
    }
    let step = Rat::from_float(grid_step).expect("finite");
    let stationary_ok = h.deriv1_at_one().is_zero() && h.deriv2_at_one().is_zero();
    let unit_value_ok = h.eval_rat(&Rat::one()) == Rat::one();

    let hv = h.dd_value();
    let hd = h.dd_deriv();
    let bound_rhs_slope = rat_to_f64(&((delta0 * delta0) / rat(5, 1)));

    // --- closeness band: Δ ∈ [−11/20, 1/δ₀²] ---------------------------
    let lo = rat(-11, 20);
    let hi = Rat::one() / (delta0 * delta0);
    let mut band = BandReport {
        points: 0,
        min_margin: f64::INFINITY,
        argmin: f64::NAN,
        lipschitz_bound: 0.0,
        excursion_slack: 0.0,
        certified_between_grid: false,
        ok: true,
        worst_violation: None,
    };
    for dpt in rational_grid(&lo, &hi, &step) {
        band.points += 1;
        if dpt.is_zero() {
            // |h(1) − 1| ≤ 0: must hold exactly
            if !unit_value_ok {
                band.ok = false;
                band.worst_violation = Some((0.0, f64::INFINITY));
                if fast_fail {
                    break;
                }
            }
            continue;
        }
        let x = Dd::from_rat(&(Rat::one() + &dpt));
        let lhs = hv.eval(x).sub(Dd::from_f64(1.0)).abs().to_f64();
        let rhs = rat_to_f64(&((delta0 * delta0) * dpt.abs() / rat(5, 1)));
        let margin = rhs - lhs;
        let df = rat_to_f64(&dpt);
        let slope = hd.eval(x).abs().to_f64() + bound_rhs_slope;
        if slope > band.lipschitz_bound {
            band.lipschitz_bound = slope;
        }
        if margin < band.min_margin {
            band.min_margin = margin;
            band.argmin = df;
        }
        if margin < 0.0 {
            band.ok = false;
            let deficit = -margin;
            match band.worst_violation {
                Some((_, d)) if d >= deficit => {}
                _ => band.worst_violation = Some((df, deficit)),
            }
            if fast_fail {
                break;
            }
        }
    }
    band.excursion_slack = band.lipschitz_bound * grid_step / 2.0;
    band.certified_between_grid = band.ok && band.min_margin >= band.excursion_slack;
    let closeness = band;

    // --- range band: Δ ∈ [−1, −11/20] -----------------------------------
    let lo = rat(-1, 1);
    let hi = rat(-11, 20);
    let mut band = BandReport {
        points: 0,
        min_margin: f64::INFINITY,
        argmin: f64::NAN,
        lipschitz_bound: 0.0,
        excursion_slack: 0.0,
        certified_between_grid: false,
        ok: true,
        worst_violation: None,
    };
    let run_range = !(fast_fail && !closeness.ok);
    if run_range {
        for dpt in rational_grid(&lo, &hi, &step) {
            band.points += 1;
            if dpt == rat(-1, 1) {
                // h(0) = 0 structurally: in range exactly
                continue;
            }
            let x = Dd::from_rat(&(Rat::one() + &dpt));
            let val = hv.eval(x).to_f64();
            let margin = val.min(1.0 - val);
            let df = rat_to_f64(&dpt);
            let slope = hd.eval(x).abs().to_f64();
            if slope > band.lipschitz_bound {
                band.lipschitz_bound = slope;
            }
            if margin < band.min_margin {
                band.min_margin = margin;
                band.argmin = df;
            }
            if margin < 0.0 {
                band.ok = false;
                let deficit = -margin;
                match band.worst_violation {
                    Some((_, d)) if d >= deficit => {}
                    _ => band.worst_violation = Some((df, deficit)),
                }
                if fast_fail {
                    break;
                }
            }
        }
    }
    band.excursion_slack = band.lipschitz_bound * grid_step / 2.0;
    band.certified_between_grid = band.ok && band.min_margin >= band.excursion_slack;
    let range = band;

    let passed = stationary_ok && unit_value_ok && closeness.ok && range.ok && run_range;
    Ok(HConditionReport {
        stationary_ok,
        unit_value_ok,
        closeness,
        range,
        passed,
    })
}

/// Full report when all conditions hold; ConditionFailed naming the first
/// broken condition and its worst point otherwise.
pub fn check_h_conditions(
    h: &RoundingPolynomial,
    delta0: &Rat,
    grid_step: f64,
) -> Result<HConditionReport> {
    let report = check_report(h, delta0, grid_step, false)?;
    if report.passed {
        return Ok(report);
    }
    if !report.stationary_ok {
        return Err(Error::ConditionFailed {
            which: 1,
            worst_point: 0.0,
            detail: format!(
                "h'(1) = {}, h''(1) = {} (need both exactly 0)",
                h.deriv1_at_one(),
                h.deriv2_at_one()
            ),
        });
    }
    if !report.unit_value_ok {
        return Err(Error::ConditionFailed {
            which: 2,
            worst_point: 0.0,
            detail: format!("h(1) = {} (need exactly 1)", h.eval_rat(&Rat::one())),
        });
    }
    if !report.closeness.ok {
        let (at, deficit) = report.closeness.worst_violation.unwrap_or((f64::NAN, 0.0));
        return Err(Error::ConditionFailed {
            which: 2,
            worst_point: at,
            detail: format!("closeness band broken by {deficit:.6e}"),
        });
    }
    let (at, deficit) = report.range.worst_violation.unwrap_or((f64::NAN, 0.0));
    Err(Error::ConditionFailed {
        which: 3,
        worst_point: at,
        detail: format!("range band broken by {deficit:.6e}"),
    })
}

#[derive(Clone, Debug)]
pub struct RoundingScheme {
    pub predicate: Predicate,
    pub h: RoundingPolynomial,
    /// Degree-1 scale δk² + k/δ = ak + k²/a.
    pub c1: Rat,
    /// l → c_{2l+1}, one entry per polynomial coefficient a_l.
    pub c_odd: BTreeMap<u32, Rat>,
    /// 1 / max(c1, max_l |c_{2l+1}|·N_l) with N_l = (2l+1)!/(2^l l!);
    /// converts raw values to the satisfied-fraction proxy.
    pub epsilon_scale: f64,
}

/// Number of distinct singleton×pairs products on one (2l+1)-element index
/// set: N_l = (2l+1)!/(2^l·l!).
pub fn symmetric_term_count(l: u32) -> Int {
    factorial(2 * l as u64 + 1) / (pow2(l as u64) * factorial(l as u64))
}

pub fn build_scheme(p: &Predicate, h: RoundingPolynomial) -> Result<RoundingScheme> {
    let mut coeffs = h.coeffs.clone();
    while coeffs.last().is_some_and(|c| c.is_zero()) {
        coeffs.pop();
    }
    let m = coeffs.len();
    let k = p.k as usize;
    if m > 0 && k < 2 * m + 2 {
        return Err(Error::Degree { k: p.k, m });
    }
    let e2 = p.a as i64 * p.a as i64 - p.k as i64 + 2;
    if m > 0 && e2 == 0 {
        return Err(Error::DegenerateScale { k: p.k, a: p.a });
    }
    let e = rat(e2, 2);
    let delta = p.delta();
    let kr = Rat::from_integer(Int::from(p.k));
    let c1 = &delta * &kr * &kr + &kr / &delta;

    let mut c_odd = BTreeMap::new();
    for (i, a_l) in coeffs.iter().enumerate() {
        let l = (i + 1) as u32;
        let numer = a_l
            * Rat::from_integer(pow2(p.k as u64 - 2))
            * Rat::from_integer(factorial(p.u as u64 - 1) * factorial(p.v as u64 - 1));
        let denom = Rat::from_integer(factorial((p.k - 2 * l - 2) as u64))
            * delta.clone().pow(2 * l as i32)
            * kr.clone().pow(2 * l as i32 - 1)
            * e.clone().pow(l as i32);
        c_odd.insert(l, numer / denom);
    }

    let mut scale_max = c1.clone();
    for (l, c) in &c_odd {
        let mass = c.abs() * Rat::from_integer(symmetric_term_count(*l));
        if mass > scale_max {
            scale_max = mass;
        }
    }
    let epsilon_scale = rat_to_f64(&(Rat::one() / scale_max));

    Ok(RoundingScheme {
        predicate: p.clone(),
        h: RoundingPolynomial { coeffs, ..h },
        c1,
        c_odd,
        epsilon_scale,
    })
}

#[derive(Clone, Debug)]
pub struct EvalBreakdown {
    pub total: f64,
    /// (degree, contribution): degree 1 first, then 3, 5, …
    pub per_degree: Vec<(u32, f64)>,
}

fn check_table(s: &RoundingScheme, f: &FourierTable) -> Result<()> {
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
    Ok(())
}

/// V = c1·(P̂_P·b₁ + P̂_{1C}·β) + Σ_l c_{2l+1}·(P̂_{(2l+1)C}·S1(l) +
/// P̂_{P+2lC}·(S2(l)+S3(l))). Each c·P̂ product is exact rational; only the
/// S-sums are floats.
pub fn evaluate_scheme(
    s: &RoundingScheme,
    f: &FourierTable,
    pt: &KtwPoint,
) -> Result<EvalBreakdown> {
    check_table(s, f)?;
    let p = &s.predicate;
    if pt.k != p.k {
        return Err(Error::Length {
            expected: p.k as usize,
            got: pt.k as usize,
        });
    }
    let beta: Rat = pt.b[1..].iter().sum();
    let deg1 = &s.c1 * (&f.p_hat_president * &pt.b[0] + f.citizen(1).expect("t=1") * beta);
    let mut per_degree = vec![(1u32, rat_to_f64(&deg1))];

    let kq_needed = s.c_odd.values().any(|c| !c.is_zero());
    let kq = if kq_needed {
        Some(key_quantities(pt, p)?)
    } else {
        None
    };

    for (l, c) in &s.c_odd {
        if c.is_zero() {
            per_degree.push((2 * l + 1, 0.0));
            continue;
        }
        let w1 = c * f.citizen(2 * l + 1).expect("odd coeff");
        let w2 = c * f.president_citizen(2 * l).expect("even coeff");
        let kq = kq.as_ref().expect("scalars");
        let literal = |shape: SumShape| -> Result<f64> {
            if let Some(exact) = sum_s_exact_low(pt, shape, kq) {
                Ok(rat_to_f64(&exact))
            } else {
                sum_s(pt, shape)
            }
        };
        let s1 = literal(SumShape::S1(*l))?;
        let s23 = literal(SumShape::S2(*l))? + literal(SumShape::S3(*l))?;
        per_degree.push((2 * l + 1, rat_to_f64(&w1) * s1 + rat_to_f64(&w2) * s23));
    }

    let total = compensated_sum(per_degree.iter().map(|&(_, v)| v));
    Ok(EvalBreakdown { total, per_degree })
}

#[derive(Clone, Debug)]
pub struct MainTermReport {
    pub v: f64,
    /// k(β − α/δ)·h(1+Δ) + degree-1 part.
    pub main: f64,
    pub residual: f64,
    pub delta: f64,
    pub degree1: f64,
}

/// Split V into the closed-form main term and the residual the analysis
/// bounds by O(k)·Δ + O(1).
pub fn main_term_expansion(
    s: &RoundingScheme,
    f: &FourierTable,
    pt: &KtwPoint,
) -> Result<MainTermReport> {
    let p = &s.predicate;
    let breakdown = evaluate_scheme(s, f, pt)?;
    let kq = key_quantities(pt, p)?;
    let h_at = s
        .h
        .dd_value()
        .eval(Dd::from_rat(&(Rat::one() + &kq.delta)))
        .to_f64();
    // k(β − α/δ) exactly: α/δ = α·k/a
    let kr = Rat::from_integer(Int::from(p.k));
    let envelope = &kr * (&kq.beta - &kq.alpha * &kr / Rat::from_integer(Int::from(p.a)));
    let degree1 = breakdown.per_degree[0].1;
    let main = rat_to_f64(&envelope) * h_at + degree1;
    Ok(MainTermReport {
        v: breakdown.total,
        main,
        residual: breakdown.total - main,
        delta: rat_to_f64(&kq.delta),
        degree1,
    })
}
