use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// sign(a·x₁ + Σx_i) can evaluate to 0 unless a + k is even.
    #[error("parity violation: need a + k even so the vote sum is always odd (k={k}, a={a})")]
    Parity { k: u32, a: u32 },

    /// a ≥ k−1 makes the president a dictator; trivially approximable and
    /// outside scheme construction.
    #[error("dictator predicate: a={a} >= k-1 (k={k}); president alone decides")]
    Dictator { k: u32, a: u32 },

    #[error("out of range: {0}")]
    Range(String),

    #[error("assignment has {got} entries, predicate arity is {expected}")]
    Length { expected: usize, got: usize },

    #[error("enumeration over 2^k assignments refused: k={k} exceeds cap {cap}")]
    Cap { k: u32, cap: u32 },

    #[error("assignment does not satisfy the predicate")]
    NotSatisfying,

    #[error("evaluation budget exceeded: {0}")]
    Budget(String),

    /// Polynomial shape condition failure (1: stationarity at 1,
    /// 2: closeness band, 3: unit-interval range on the far-left band).
    #[error("rounding polynomial condition {which} failed at offset {worst_point}: {detail}")]
    ConditionFailed {
        which: u8,
        worst_point: f64,
        detail: String,
    },

    #[error("no truncation order up to {cap} satisfies the polynomial conditions")]
    SearchExhausted { cap: usize },

    #[error("degree too high for arity: k={k} needs k - 2m - 2 >= 0, got m={m}")]
    Degree { k: u32, m: usize },

    /// The pair-sum scale E = (a² − k + 2)/2 vanishes exactly when k = a² + 2;
    /// Δ and the odd-degree scheme coefficients divide by it.
    #[error("degenerate pair-sum scale E = 0 at k={k}, a={a} (k = a^2 + 2)")]
    DegenerateScale { k: u32, a: u32 },

    #[error("orbit (x1={x1}, t={t}) contains no satisfying assignment")]
    InfeasibleOrbit { x1: i8, t: u32 },

    #[error("no nonnegative balance solution: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for condition/feasibility failures and all other
    /// library errors; usage errors exit 2 via the CLI parser before reaching here.
    pub fn exit_code(&self) -> i32 {
        1
    }
}
