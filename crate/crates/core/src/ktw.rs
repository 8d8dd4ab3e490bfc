//! Points of the pairing polytope spanned by satisfying assignments: first
//! moments b_i and pairwise moments b_ij of a distribution over satisfying
//! votes. Vertices are single assignments (b_i = x_i, b_ij = x_i x_j);
//! mixtures are convex combinations. Also: the derived scalar quantities the
//! scheme analysis runs on (α, β, E, S_pair, Δ) and the three families of
//! symmetric odd-degree sums with their closed-form approximations.

use crate::error::{Error, Result};
use crate::numeric::{rat_to_f64, rng_for, Int, Rat};
use crate::predicate::{Assignment, Predicate};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeMap;

const STREAM_MIXTURE: u64 = 0x2a;

/// Enumeration budgets for the literal symmetric sums.
pub const SUM_K_CAP: u32 = 24;
pub const SUM_L_CAP: u32 = 4;

#[derive(Clone, Debug)]
pub enum Provenance {
    Vertex { assignment: Assignment },
    Mixture { parts: Vec<(Rat, Assignment)> },
}

/// First and second moments of a distribution over satisfying assignments.
/// b has k entries (index 0 = president); bij is the strict upper triangle
/// in lexicographic order (1,2),(1,3),…,(1,k),(2,3),…
#[derive(Clone, Debug)]
pub struct KtwPoint {
    pub k: u32,
    pub b: Vec<Rat>,
    pub bij: Vec<Rat>,
    pub provenance: Provenance,
}

/// Position of pair (i,j), 1-based with i < j, in the lexicographic upper
/// triangle.
pub fn pair_index(k: u32, i: u32, j: u32) -> usize {
    debug_assert!(1 <= i && i < j && j <= k);
    let (k, i, j) = (k as usize, i as usize, j as usize);
    (i - 1) * k - i * (i - 1) / 2 + (j - i - 1)
}

impl KtwPoint {
    /// Pairwise moment for unordered {i, j}, 1-based, i ≠ j.
    pub fn pair(&self, i: u32, j: u32) -> &Rat {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        &self.bij[pair_index(self.k, i, j)]
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(rat_to_f64).collect()
    }

    /// Dense symmetric k×k pair matrix (diagonal 1) for enumeration loops.
    pub fn pair_matrix_f64(&self) -> Vec<Vec<f64>> {
        let k = self.k as usize;
        let mut m = vec![vec![1.0; k]; k];
        for i in 1..=self.k {
            for j in i + 1..=self.k {
                let v = rat_to_f64(self.pair(i, j));
                m[(i - 1) as usize][(j - 1) as usize] = v;
                m[(j - 1) as usize][(i - 1) as usize] = v;
            }
        }
        m
    }
}

fn check_satisfying(p: &Predicate, x: &Assignment) -> Result<()> {
    if p.evaluate(x)? != 1 {
        return Err(Error::NotSatisfying);
    }
    Ok(())
}

/// The point of a single satisfying assignment.
pub fn vertex(p: &Predicate, x: &Assignment) -> Result<KtwPoint> {
    check_satisfying(p, x)?;
    let k = p.k;
    let b: Vec<Rat> = x
        .bits()
        .iter()
        .map(|&s| Rat::from_integer(Int::from(s)))
        .collect();
    let mut bij = Vec::with_capacity((k * (k - 1) / 2) as usize);
    for i in 1..=k {
        for j in i + 1..=k {
            let prod = x.bits()[(i - 1) as usize] * x.bits()[(j - 1) as usize];
            bij.push(Rat::from_integer(Int::from(prod)));
        }
    }
    Ok(KtwPoint {
        k,
        b,
        bij,
        provenance: Provenance::Vertex {
            assignment: x.clone(),
        },
    })
}

/// Convex combination of satisfying assignments. Weights must be nonnegative
/// and sum to 1; duplicate assignments are merged.
pub fn mixture(p: &Predicate, parts: Vec<(Rat, Assignment)>) -> Result<KtwPoint> {
    if parts.is_empty() {
        return Err(Error::Param("mixture needs at least one component".into()));
    }
    let mut merged: BTreeMap<Vec<i8>, (Rat, Assignment)> = BTreeMap::new();
    let mut total = Rat::zero();
    for (w, x) in parts {
        check_satisfying(p, &x)?;
        if w.is_negative() {
            return Err(Error::Param(format!("negative mixture weight {w}")));
        }
        total += &w;
        merged
            .entry(x.bits().to_vec())
            .and_modify(|(acc, _)| *acc += &w)
            .or_insert((w, x));
    }
    if total != Rat::one() {
        return Err(Error::Param(format!("mixture weights sum to {total}, need 1")));
    }
    let parts: Vec<(Rat, Assignment)> = merged.into_values().collect();
    let k = p.k;
    let mut b = vec![Rat::zero(); k as usize];
    let mut bij = vec![Rat::zero(); (k * (k - 1) / 2) as usize];
    for (w, x) in &parts {
        for i in 0..k as usize {
            b[i] += w * Rat::from_integer(Int::from(x.bits()[i]));
        }
        let mut idx = 0;
        for i in 1..=k {
            for j in i + 1..=k {
                let prod = x.bits()[(i - 1) as usize] * x.bits()[(j - 1) as usize];
                bij[idx] += w * Rat::from_integer(Int::from(prod));
                idx += 1;
            }
        }
    }
    Ok(KtwPoint {
        k,
        b,
        bij,
        provenance: Provenance::Mixture { parts },
    })
}

/// Random interior-ish point: support_size satisfying assignments drawn
/// uniformly (duplicates merged) with uniform-simplex rational weights.
pub fn sample_mixture(p: &Predicate, support_size: usize, seed: u64) -> Result<KtwPoint> {
    if support_size == 0 {
        return Err(Error::Param("support_size must be >= 1".into()));
    }
    let mut rng = rng_for(seed, STREAM_MIXTURE);

    // orbit table weighted by exact counts, for uniform draws without 2^k lists
    let mut orbits: Vec<(i8, u32, Int)> = Vec::new();
    let mut total = Int::zero();
    for x1 in [1i8, -1] {
        for t in p.feasible_t(x1) {
            let c = crate::numeric::binomial(p.k as u64 - 1, t as u64);
            total += &c;
            orbits.push((x1, t, c));
        }
    }
    let total_f = total.to_f64().unwrap();

    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Assignment {
        // inverse-CDF over orbits via a uniform in [0, total)
        let mut target = Int::from((rng.gen::<f64>() * total_f) as u64);
        if target >= total {
            target = &total - 1;
        }
        let mut chosen = orbits.len() - 1;
        let mut acc = Int::zero();
        for (idx, (_, _, c)) in orbits.iter().enumerate() {
            acc += c;
            if target < acc {
                chosen = idx;
                break;
            }
        }
        let (x1, t, _) = orbits[chosen];
        // uniform t-subset of the k−1 citizens: Fisher–Yates prefix
        let n = (p.k - 1) as usize;
        let mut idxs: Vec<usize> = (0..n).collect();
        for i in 0..(t as usize).min(n) {
            let j = rng.gen_range(i..n);
            idxs.swap(i, j);
        }
        let mut bits = vec![-1i8; p.k as usize];
        bits[0] = x1;
        for &c in &idxs[..t as usize] {
            bits[c + 1] = 1;
        }
        Assignment::new(bits).expect("±1 bits")
    };

    // uniform simplex weights: sorted u32 gap method, exactly rational
    let denom = Int::from(1u64 << 32);
    let mut cuts: Vec<u64> = (0..support_size - 1)
        .map(|_| rng.gen::<u32>() as u64)
        .collect();
    cuts.push(0);
    cuts.push(1u64 << 32);
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(support_size);
    for w in cuts.windows(2) {
        let weight = Rat::new(Int::from(w[1] - w[0]), denom.clone());
        parts.push((weight, draw(&mut rng)));
    }
    mixture(p, parts)
}

/// The scalars the analysis runs on.
#[derive(Clone, Debug)]
pub struct KeyQuantities {
    /// President first moment b₁.
    pub alpha: Rat,
    /// Citizen first-moment sum Σ_{i≥2} b_i.
    pub beta: Rat,
    /// Normalization scale E = (a²−k+2)/2 — the citizen pair sum at a
    /// balanced reference point.
    pub e: Rat,
    /// Citizen-citizen pair sum Σ_{2≤i<j} b_ij.
    pub s_pair: Rat,
    /// Relative pair excess: S_pair = E(1+Δ).
    pub delta: Rat,
}

pub fn key_quantities(pt: &KtwPoint, p: &Predicate) -> Result<KeyQuantities> {
    if pt.k != p.k {
        return Err(Error::Length {
            expected: p.k as usize,
            got: pt.k as usize,
        });
    }
    let e = Rat::new(
        Int::from(p.a as i64 * p.a as i64 - p.k as i64 + 2),
        Int::from(2),
    );
    if e.is_zero() {
        return Err(Error::DegenerateScale { k: p.k, a: p.a });
    }
    let alpha = pt.b[0].clone();
    let beta: Rat = pt.b[1..].iter().sum();
    let mut s_pair = Rat::zero();
    for i in 2..=p.k {
        for j in i + 1..=p.k {
            s_pair += pt.pair(i, j);
        }
    }
    let delta = &s_pair / &e - Rat::one();
    Ok(KeyQuantities {
        alpha,
        beta,
        e,
        s_pair,
        delta,
    })
}

/// Closed form for Δ at a vertex in orbit (x₁, t):
/// (2t² − 2(k−1)t + (1−δ²)k²/2 − k) / E with δ = a/k.
pub fn vertex_delta(p: &Predicate, t: u32) -> Result<Rat> {
    let (k, a, t) = (p.k as i64, p.a as i64, t as i64);
    let e2 = a * a - k + 2; // 2E
    if e2 == 0 {
        return Err(Error::DegenerateScale { k: p.k, a: p.a });
    }
    // numerator ×2: 4t² − 4(k−1)t + (k²−a²) − 2k
    let num2 = 4 * t * t - 4 * (k - 1) * t + (k * k - a * a) - 2 * k;
    Ok(Rat::new(Int::from(num2), Int::from(e2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumShape {
    /// Citizen singleton × l disjoint citizen pairs.
    S1(u32),
    /// President singleton × l disjoint citizen pairs.
    S2(u32),
    /// Citizen singleton × president-citizen pair × (l−1) citizen pairs.
    S3(u32),
}

impl SumShape {
    pub fn level(&self) -> u32 {
        match *self {
            SumShape::S1(l) | SumShape::S2(l) | SumShape::S3(l) => l,
        }
    }

    /// Distinct citizens each term touches.
    fn citizens_needed(&self) -> u32 {
        match *self {
            SumShape::S1(l) => 2 * l + 1,
            SumShape::S2(l) => 2 * l,
            SumShape::S3(l) => 2 * l,
        }
    }
}

/// Literal enumeration of the degree-(2l+1) symmetric sums over distinct
/// citizen images. f64 accumulation; exact closed forms exist for l ≤ 1 and
/// are used by `approx_s` as cross-checks.
pub fn sum_s(pt: &KtwPoint, shape: SumShape) -> Result<f64> {
    let l = shape.level();
    if pt.k > SUM_K_CAP || l > SUM_L_CAP {
        return Err(Error::Budget(format!(
            "sum enumeration needs k <= {SUM_K_CAP} and l <= {SUM_L_CAP}, got k={}, l={l}",
            pt.k
        )));
    }
    if shape.citizens_needed() > pt.k - 1 {
        return Err(Error::Range(format!(
            "shape touches {} distinct citizens, only {} exist",
            shape.citizens_needed(),
            pt.k - 1
        )));
    }
    if matches!(shape, SumShape::S3(0)) {
        return Err(Error::Range(
            "third shape needs l >= 1 (it contains a president pair)".into(),
        ));
    }
    let b = pt.b_f64();
    let m = pt.pair_matrix_f64();
    let citizens: Vec<usize> = (1..pt.k as usize).collect();

    // sum over ways to pick `pairs` disjoint unordered citizen pairs from
    // `avail` (sorted), times `prefix`, accumulated into `acc`
    fn matchings(
        avail: &[usize],
        pairs: u32,
        prefix: f64,
        m: &[Vec<f64>],
        acc: &mut f64,
    ) {
        if pairs == 0 {
            *acc += prefix;
            return;
        }
        if avail.len() < 2 * pairs as usize {
            return;
        }
        // anchor on the smallest available citizen to avoid double counting
        let first = avail[0];
        let rest = &avail[1..];
        for (pos, &j) in rest.iter().enumerate() {
            let mut remaining = Vec::with_capacity(rest.len() - 1);
            remaining.extend_from_slice(&rest[..pos]);
            remaining.extend_from_slice(&rest[pos + 1..]);
            matchings(&remaining, pairs - 1, prefix * m[first][j], m, acc);
        }
        // the smallest citizen may also be left out entirely only if enough remain
        // — not allowed here: matchings must use pairs*2 elements from avail, but
        // avail may be larger; skipping `first` means it is simply unused.
        matchings(rest, pairs, prefix, m, acc);
    }

    let mut total = 0.0;
    match shape {
        SumShape::S1(l) => {
            for &c in &citizens {
                let rest: Vec<usize> = citizens.iter().copied().filter(|&x| x != c).collect();
                matchings(&rest, l, b[c], &m, &mut total);
            }
        }
        SumShape::S2(l) => {
            matchings(&citizens, l, b[0], &m, &mut total);
        }
        SumShape::S3(l) => {
            for &c in &citizens {
                for &j in &citizens {
                    if j == c {
                        continue;
                    }
                    let rest: Vec<usize> = citizens
                        .iter()
                        .copied()
                        .filter(|&x| x != c && x != j)
                        .collect();
                    matchings(&rest, l - 1, b[c] * m[0][j], &m, &mut total);
                }
            }
        }
    }
    Ok(total)
}

/// Exact rational values of the l ≤ 1 sums (closed forms).
pub fn sum_s_exact_low(pt: &KtwPoint, shape: SumShape, kq: &KeyQuantities) -> Option<Rat> {
    let k = pt.k;
    let citizen_row_sum = |i: u32| -> Rat {
        // Σ_{j citizen, j≠i} b_{ij}
        (2..=k)
            .filter(|&j| j != i)
            .map(|j| pt.pair(i, j).clone())
            .sum()
    };
    match shape {
        SumShape::S1(0) => Some(kq.beta.clone()),
        SumShape::S2(0) => Some(kq.alpha.clone()),
        SumShape::S1(1) => {
            // Σ_i b_i (S_pair − r_i)
            let mut acc = Rat::zero();
            for i in 2..=k {
                acc += &pt.b[(i - 1) as usize] * (&kq.s_pair - citizen_row_sum(i));
            }
            Some(acc)
        }
        SumShape::S2(1) => Some(&kq.alpha * &kq.s_pair),
        SumShape::S3(1) => {
            // β·pres_pair − Σ_i b_i b_{1i}
            let pres_pair: Rat = (2..=k).map(|i| pt.pair(1, i).clone()).sum();
            let mut cross = Rat::zero();
            for i in 2..=k {
                cross += &pt.b[(i - 1) as usize] * pt.pair(1, i);
            }
            Some(&kq.beta * pres_pair - cross)
        }
        _ => None,
    }
}

/// Second-order correction inputs for the sum approximations.
#[derive(Clone, Debug)]
pub struct AuxSums {
    /// Σ over ordered distinct citizen pairs (i, {i,j}): b_i·b_ij — (k−1)(k−2) terms.
    pub sing_pair: f64,
    /// Σ over citizen i and unordered {j,l} ∌ i: b_ij·b_il — (k−1)·C(k−2,2) terms.
    pub path: f64,
    /// Σ over citizens i: president pair b_1i — (k−1) terms.
    pub pres_pair: f64,
}

/// Exact rational counterparts of `aux_sums` for the l = 1 closed forms.
pub fn aux_sums_exact(pt: &KtwPoint) -> (Rat, Rat, Rat) {
    let k = pt.k;
    let mut sing_pair = Rat::zero();
    let mut path = Rat::zero();
    let mut pres_pair = Rat::zero();
    for i in 2..=k {
        let mut row = Rat::zero();
        let mut row_sq = Rat::zero();
        for j in 2..=k {
            if j != i {
                let v = pt.pair(i, j);
                row += v;
                row_sq += v * v;
            }
        }
        sing_pair += &pt.b[(i - 1) as usize] * &row;
        path += (&row * &row - row_sq) / Rat::from_integer(Int::from(2));
        pres_pair += pt.pair(1, i);
    }
    (sing_pair, path, pres_pair)
}

pub fn aux_sums(pt: &KtwPoint) -> AuxSums {
    let k = pt.k;
    let b = pt.b_f64();
    let m = pt.pair_matrix_f64();
    let mut sing_pair = 0.0;
    let mut path = 0.0;
    let mut pres_pair = 0.0;
    for i in 1..k as usize {
        let mut row = 0.0;
        let mut row_sq = 0.0;
        for j in 1..k as usize {
            if j != i {
                row += m[i][j];
                row_sq += m[i][j] * m[i][j];
            }
        }
        sing_pair += b[i] * row;
        path += (row * row - row_sq) / 2.0;
        pres_pair += m[0][i];
    }
    AuxSums {
        sing_pair,
        path,
        pres_pair,
    }
}

/// One row of the approximation report: a literal sum vs its closed-form
/// approximation, scaled by l!/E^l as in the analysis.
#[derive(Clone, Debug)]
pub struct ApproxRow {
    pub shape: &'static str,
    pub l: u32,
    /// l!/E^l × literal sum.
    pub scaled_sum: f64,
    /// Closed-form approximation of the same quantity.
    pub approx: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct ApproxReport {
    pub l: u32,
    pub delta: f64,
    pub rows: Vec<ApproxRow>,
    /// Residual of the product-expansion identity
    /// β·S_pair^l ≈ l!·S1 + l·sing_pair·S_pair^(l−1) + β·path·l(l−1)·S_pair^(l−2).
    pub expansion_residual: f64,
}

/// Compare the three literal sums at level l against their closed-form
/// approximations in (1+Δ) powers.
pub fn approx_s(pt: &KtwPoint, p: &Predicate, l: u32) -> Result<ApproxReport> {
    if l < 1 {
        return Err(Error::Range("approximation level l must be >= 1".into()));
    }
    let kq = key_quantities(pt, p)?;
    if l == 1 {
        return Ok(approx_s_exact_l1(pt, &kq));
    }
    let aux = aux_sums(pt);
    let e = rat_to_f64(&kq.e);
    let delta = rat_to_f64(&kq.delta);
    let alpha = rat_to_f64(&kq.alpha);
    let beta = rat_to_f64(&kq.beta);
    let one_plus = 1.0 + delta;
    let lf = crate::numeric::factorial(l as u64).to_f64().unwrap();
    let scale = lf / e.powi(l as i32);

    let s1 = sum_s(pt, SumShape::S1(l))?;
    let s2 = sum_s(pt, SumShape::S2(l))?;
    let s3 = sum_s(pt, SumShape::S3(l))?;

    let lr = l as f64;
    let approx1 = beta * one_plus.powi(l as i32)
        - (aux.sing_pair / e) * lr * one_plus.powi(l as i32 - 1)
        - (beta * aux.path / (e * e)) * lr * (lr - 1.0) * one_plus.powi(l as i32 - 2);
    let approx2 = alpha * one_plus.powi(l as i32);
    let approx3 = (beta * aux.pres_pair / e) * lr * one_plus.powi(l as i32 - 1);

    let rows = vec![
        ApproxRow {
            shape: "citizen-singleton",
            l,
            scaled_sum: scale * s1,
            approx: approx1,
            residual: scale * s1 - approx1,
        },
        ApproxRow {
            shape: "president-singleton",
            l,
            scaled_sum: scale * s2,
            approx: approx2,
            residual: scale * s2 - approx2,
        },
        ApproxRow {
            shape: "president-pair",
            l,
            scaled_sum: scale * s3,
            approx: approx3,
            residual: scale * s3 - approx3,
        },
    ];

    let s_pair = rat_to_f64(&kq.s_pair);
    let expansion_residual = beta * s_pair.powi(l as i32)
        - lf * s1
        - lr * aux.sing_pair * s_pair.powi(l as i32 - 1)
        - beta * aux.path * lr * (lr - 1.0) * s_pair.powi(l as i32 - 2);

    Ok(ApproxReport {
        l,
        delta,
        rows,
        expansion_residual,
    })
}

/// l = 1 in exact rationals: the first two residuals are identically zero and
/// the third is −(Σ b_i·b_1i)/E; floats only at the report boundary.
fn approx_s_exact_l1(pt: &KtwPoint, kq: &KeyQuantities) -> ApproxReport {
    let (sing_pair, _path, pres_pair) = aux_sums_exact(pt);
    let one_plus = Rat::one() + &kq.delta;
    let s1 = sum_s_exact_low(pt, SumShape::S1(1), kq).expect("closed form");
    let s2 = sum_s_exact_low(pt, SumShape::S2(1), kq).expect("closed form");
    let s3 = sum_s_exact_low(pt, SumShape::S3(1), kq).expect("closed form");

    let scaled = |s: &Rat| s / &kq.e;
    let approx1 = &kq.beta * &one_plus - &sing_pair / &kq.e;
    let approx2 = &kq.alpha * &one_plus;
    let approx3 = &kq.beta * &pres_pair / &kq.e;

    let row = |shape: &'static str, s: &Rat, approx: &Rat| ApproxRow {
        shape,
        l: 1,
        scaled_sum: rat_to_f64(&scaled(s)),
        approx: rat_to_f64(approx),
        residual: rat_to_f64(&(scaled(s) - approx)),
    };
    let rows = vec![
        row("citizen-singleton", &s1, &approx1),
        row("president-singleton", &s2, &approx2),
        row("president-pair", &s3, &approx3),
    ];
    // β·S_pair − 1!·S1 − sing_pair — exactly zero by the expansion identity
    let expansion = &kq.beta * &kq.s_pair - &s1 - &sing_pair;
    ApproxReport {
        l: 1,
        delta: rat_to_f64(&kq.delta),
        rows,
        expansion_residual: rat_to_f64(&expansion),
    }
}
