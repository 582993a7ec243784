//! Exact restricted-isometry queries by exhaustive support enumeration.
//!
//! Every query enumerates the supports of size exactly `k` in lexicographic
//! order: a vector with fewer nonzeros also lives on some size-`k` support,
//! so both extremes over "at most `k`" are attained there. Work is split into
//! contiguous rank ranges and merged with a strict (value, rank) order, which
//! makes results independent of how many workers ran.

use num::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, SymmetricEigen};
use crate::matrix::FloatMatrix;
use crate::rational::{floor_to_usize, int, Rational};
use crate::sat::E13Instance;

pub use crate::linalg::operator_norm;

pub const DEFAULT_BUDGET: u128 = 10_000_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-7;

const CHUNKS: u128 = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOptions {
    /// Maximum number of supports a single query may enumerate.
    pub budget: u128,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Absolute slack on eigenvalue comparisons.
    pub tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            budget: DEFAULT_BUDGET,
            workers: None,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl OracleOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        // r * (n - i) is divisible by (i + 1) at every step
        r = match r.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    r
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut c = 0;
    for i in 0..k {
        loop {
            let count = binomial(n - c - 1, k - i - 1);
            if rank < count {
                break;
            }
            rank -= count;
            c += 1;
        }
        out.push(c);
        c += 1;
    }
    out
}

/// Advances to the next `k`-subset of `0..n` in lexicographic order.
pub fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn check_budget(what: &str, cols: usize, k: usize, budget: u128) -> Result<u128> {
    let total = binomial(cols, k);
    if total > budget {
        return Err(Error::Capacity {
            what: format!("{what} over C({cols}, {k}) supports"),
            required: total,
            budget,
        });
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug)]
struct Extreme {
    value: f64,
    rank: u128,
}

impl Extreme {
    fn better_min(self, other: Extreme) -> Extreme {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Greater => other,
            std::cmp::Ordering::Equal => {
                if self.rank <= other.rank {
                    self
                } else {
                    other
                }
            }
        }
    }

    fn better_max(self, other: Extreme) -> Extreme {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Greater => self,
            std::cmp::Ordering::Less => other,
            std::cmp::Ordering::Equal => {
                if self.rank <= other.rank {
                    self
                } else {
                    other
                }
            }
        }
    }
}

fn run_with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::input(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Smallest and largest restricted eigenvalue of `gram` over all
/// size-`k` principal submatrices, with the ranks of the first witnesses.
fn scan_supports(
    gram: &FloatMatrix,
    k: usize,
    total: u128,
    workers: Option<usize>,
) -> Result<(Extreme, Extreme)> {
    let p = gram.cols();
    let chunks = CHUNKS.min(total).max(1);
    let scan = || {
        (0..chunks as u64)
            .into_par_iter()
            .map(|c| {
                let start = total * c as u128 / chunks;
                let end = total * (c as u128 + 1) / chunks;
                let mut comb = unrank_combination(start, p, k);
                let mut lo = Extreme {
                    value: f64::INFINITY,
                    rank: u128::MAX,
                };
                let mut hi = Extreme {
                    value: f64::NEG_INFINITY,
                    rank: u128::MAX,
                };
                for rank in start..end {
                    let e = symmetric_eigen(&gram.principal(&comb));
                    lo = lo.better_min(Extreme {
                        value: e.values[0],
                        rank,
                    });
                    hi = hi.better_max(Extreme {
                        value: e.values[k - 1],
                        rank,
                    });
                    next_combination(&mut comb, p);
                }
                (lo, hi)
            })
            .reduce(
                || {
                    (
                        Extreme {
                            value: f64::INFINITY,
                            rank: u128::MAX,
                        },
                        Extreme {
                            value: f64::NEG_INFINITY,
                            rank: u128::MAX,
                        },
                    )
                },
                |a, b| (a.0.better_min(b.0), a.1.better_max(b.1)),
            )
    };
    run_with_workers(workers, scan)
}

/// Scatters a support-local vector into a length-`p` vector, first nonzero entry positive.
fn embed(p: usize, support: &[usize], local: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for (&i, &x) in support.iter().zip(local) {
        out[i] = x;
    }
    if let Some(first) = out.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            out.iter_mut().for_each(|x| *x = -*x);
        }
    }
    out
}

/// Outcome of a restricted-spectrum query at sparsity `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    pub min_restricted_eig: f64,
    pub max_restricted_eig: f64,
    /// 0-based column indices.
    pub witness_support_min: Vec<usize>,
    pub witness_support_max: Vec<usize>,
    /// Unit vector over all columns realizing `delta_star`.
    pub witness_vector: Vec<f64>,
    pub delta_star: f64,
    pub tolerance: f64,
}

/// Extreme eigenvalues of `XᵀX` restricted to `k` columns.
pub fn restricted_extremes(x: &FloatMatrix, k: usize, opts: &OracleOptions) -> Result<RipReport> {
    let p = x.cols();
    if k == 0 || k > p {
        return Err(Error::input(format!("sparsity k={k} must lie in 1..={p}")));
    }
    let total = check_budget("restricted eigenvalue enumeration", p, k, opts.budget)?;
    let gram = x.gram();
    let (lo, hi) = scan_supports(&gram, k, total, opts.workers)?;
    let min_support = unrank_combination(lo.rank, p, k);
    let max_support = unrank_combination(hi.rank, p, k);
    let delta_star = (hi.value - 1.0).max(1.0 - lo.value).max(0.0);
    let lower_side = 1.0 - lo.value >= hi.value - 1.0;
    let (support, col) = if lower_side {
        (&min_support, 0)
    } else {
        (&max_support, k - 1)
    };
    let eig = symmetric_eigen(&gram.principal(support));
    let witness_vector = embed(p, support, &eig.vector(col));
    Ok(RipReport {
        k,
        min_restricted_eig: lo.value,
        max_restricted_eig: hi.value,
        witness_support_min: min_support,
        witness_support_max: max_support,
        witness_vector,
        delta_star,
        tolerance: opts.tolerance,
    })
}

/// Smallest δ with `X ∈ RIP(k, δ)`.
pub fn rip_delta(x: &FloatMatrix, k: usize, opts: &OracleOptions) -> Result<f64> {
    Ok(restricted_extremes(x, k, opts)?.delta_star)
}

/// Whether `X ∈ RIP(k, δ)`, up to the oracle tolerance.
pub fn is_rip(x: &FloatMatrix, k: usize, delta: f64, opts: &OracleOptions) -> Result<bool> {
    Ok(rip_delta(x, k, opts)? <= delta + opts.tolerance)
}

/// Largest `k` with `X ∈ RIP(k, δ)`, or 0 when even `k = 1` fails.
pub fn rip_max_k(x: &FloatMatrix, delta: f64, opts: &OracleOptions) -> Result<usize> {
    if delta <= 0.0 {
        return Err(Error::input("delta must be positive"));
    }
    for k in 1..=x.cols() {
        if !is_rip(x, k, delta, opts)? {
            return Ok(k - 1);
        }
    }
    Ok(x.cols())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapVerdict {
    IsRip,
    FarFromRip,
    Indeterminate,
}

impl std::fmt::Display for GapVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GapVerdict::IsRip => "IsRip",
            GapVerdict::FarFromRip => "FarFromRip",
            GapVerdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapDecision {
    pub verdict: GapVerdict,
    pub k: usize,
    pub delta_star_k: f64,
    pub k_weak: usize,
    /// `None` when `k_weak` is 0 (the weak condition is vacuous).
    pub delta_star_k_weak: Option<f64>,
    pub delta: f64,
    pub weak_delta: f64,
}

/// Decides `X ∈ RIP(k, δ)` versus `X ∉ RIP(k_weak, λ₂δ)` at explicit sparsity
/// levels. `IsRip` takes precedence.
pub fn gap_decide_at(
    x: &FloatMatrix,
    k: usize,
    k_weak: usize,
    delta: f64,
    lambda2: f64,
    opts: &OracleOptions,
) -> Result<GapDecision> {
    if lambda2 < 1.0 {
        return Err(Error::input(format!(
            "lambda2 must be at least 1, got {lambda2}"
        )));
    }
    if k_weak > k {
        return Err(Error::input("weak sparsity must not exceed k"));
    }
    let delta_star_k = rip_delta(x, k, opts)?;
    let weak_delta = lambda2 * delta;
    let delta_star_k_weak = if k_weak == 0 {
        None
    } else {
        Some(rip_delta(x, k_weak, opts)?)
    };
    let verdict = if delta_star_k <= delta + opts.tolerance {
        GapVerdict::IsRip
    } else if delta_star_k_weak.is_some_and(|d| d > weak_delta + opts.tolerance) {
        GapVerdict::FarFromRip
    } else {
        GapVerdict::Indeterminate
    };
    Ok(GapDecision {
        verdict,
        k,
        delta_star_k,
        k_weak,
        delta_star_k_weak,
        delta,
        weak_delta,
    })
}

/// Distinguishes `X ∈ RIP(k, δ)` from `X ∉ RIP(⌊k/λ₁⌋, λ₂δ)`.
pub fn gap_decide(
    x: &FloatMatrix,
    k: usize,
    delta: f64,
    lambda1: &Rational,
    lambda2: f64,
    opts: &OracleOptions,
) -> Result<GapDecision> {
    if *lambda1 < Rational::one() {
        return Err(Error::input(format!(
            "lambda1 must be at least 1, got {lambda1}"
        )));
    }
    let k_weak = floor_to_usize(&(int(k as i64) / lambda1)).unwrap_or(0);
    gap_decide_at(x, k, k_weak, delta, lambda2, opts)
}

/// Global minimizer of `‖X̃u‖²` over `‖u‖² = 2n`, `‖u‖₀ ≤ 2(1+ξ²)n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerReport {
    pub n: usize,
    /// Support size enumerated: `min(⌊2(1+ξ²)n⌋, 3n)`.
    pub support_budget: usize,
    pub objective: f64,
    pub w: Vec<f64>,
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<f64>,
    pub v: Vec<f64>,
    pub v_bar: f64,
    /// 0-based indices of the enumerated support holding the minimizer.
    pub support: Vec<usize>,
}

pub fn sparse_minimizer(
    x_tilde: &FloatMatrix,
    n: usize,
    xi: &Rational,
    opts: &OracleOptions,
) -> Result<MinimizerReport> {
    if n == 0 || x_tilde.cols() != 3 * n {
        return Err(Error::input(format!(
            "expected 3n = {} columns, matrix has {}",
            3 * n,
            x_tilde.cols()
        )));
    }
    let slack = Rational::one() + xi * xi;
    let budget_k = floor_to_usize(&(int(2 * n as i64) * slack))
        .unwrap_or(usize::MAX)
        .min(3 * n);
    let p = 3 * n;
    let total = check_budget("sparse minimizer", p, budget_k, opts.budget)?;
    let gram = x_tilde.gram();
    let (lo, _) = scan_supports(&gram, budget_k, total, opts.workers)?;
    let support = unrank_combination(lo.rank, p, budget_k);
    let eig: SymmetricEigen = symmetric_eigen(&gram.principal(&support));
    let scale = (2.0 * n as f64).sqrt();
    let mut w = vec![0.0; p];
    for (&i, x) in support.iter().zip(eig.vector(0)) {
        w[i] = x * scale;
    }
    let tail_sum: f64 = w[2 * n..].iter().sum();
    let flip = if tail_sum != 0.0 {
        tail_sum < 0.0
    } else {
        w.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
    };
    if flip {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    let v = w[2 * n..].to_vec();
    Ok(MinimizerReport {
        n,
        support_budget: budget_k,
        objective: 2.0 * n as f64 * lo.value,
        w_plus: w[..n].to_vec(),
        w_minus: w[n..2 * n].to_vec(),
        v_bar: v.iter().sum::<f64>() / n as f64,
        v,
        w,
        support,
    })
}

/// Variables and clauses that look like part of an assignment vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodBadClassification {
    /// 1-based good variables.
    pub good_variables: Vec<usize>,
    /// 1-based good clauses.
    pub good_clauses: Vec<usize>,
    pub bad_clause_count: usize,
}

/// A variable is good when exactly one of `w⁺_i, w⁻_i` is zero (within
/// `zero_tol`) and the other lies in `(2/3, 4/3)`; a clause `j` is good when
/// all of its variables are good and `v_j ∈ (5/6, 7/6)`.
pub fn classify_good_bad(
    report: &MinimizerReport,
    phi: &E13Instance,
    zero_tol: f64,
) -> Result<GoodBadClassification> {
    let n = report.n;
    if phi.num_vars() != n {
        return Err(Error::input(format!(
            "minimizer is for n={n}, instance has {} variables",
            phi.num_vars()
        )));
    }
    if phi.num_clauses() > n {
        return Err(Error::input(
            "clause goodness reads v_j, so m must not exceed n",
        ));
    }
    let is_zero = |x: f64| x.abs() <= zero_tol;
    let in_open = |x: f64, lo: f64, hi: f64| x > lo && x < hi;
    let good_var: Vec<bool> = (0..n)
        .map(|i| {
            let (a, b) = (report.w_plus[i], report.w_minus[i]);
            match (is_zero(a), is_zero(b)) {
                (true, false) => in_open(b, 2.0 / 3.0, 4.0 / 3.0),
                (false, true) => in_open(a, 2.0 / 3.0, 4.0 / 3.0),
                _ => false,
            }
        })
        .collect();
    let good_clauses: Vec<usize> = phi
        .clauses()
        .iter()
        .enumerate()
        .filter(|(j, c)| {
            c.iter().all(|&v| good_var[v - 1]) && in_open(report.v[*j], 5.0 / 6.0, 7.0 / 6.0)
        })
        .map(|(j, _)| j + 1)
        .collect();
    Ok(GoodBadClassification {
        good_variables: (0..n).filter(|&i| good_var[i]).map(|i| i + 1).collect(),
        bad_clause_count: phi.num_clauses() - good_clauses.len(),
        good_clauses,
    })
}

/// Quantities the structure bounds on the minimizer talk about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerDiagnostics {
    /// `Σ(v_i − v̄)²`.
    pub v_spread: f64,
    /// `Σ(w⁺_i + w⁻_i − v̄)²`.
    pub w_spread: f64,
    pub v_bar_sq: f64,
    /// Indices where both `w⁺_i` and `w⁻_i` are nonzero.
    pub both_nonzero: usize,
    /// Indices where both are zero.
    pub both_zero: usize,
    /// `‖w⁺‖² + ‖w⁻‖²`.
    pub top_mass: f64,
}

pub fn minimizer_diagnostics(report: &MinimizerReport, zero_tol: f64) -> MinimizerDiagnostics {
    let vb = report.v_bar;
    let nz = |x: f64| x.abs() > zero_tol;
    let pairs = report.w_plus.iter().zip(&report.w_minus);
    MinimizerDiagnostics {
        v_spread: report.v.iter().map(|v| (v - vb).powi(2)).sum(),
        w_spread: pairs.clone().map(|(a, b)| (a + b - vb).powi(2)).sum(),
        v_bar_sq: vb * vb,
        both_nonzero: pairs.clone().filter(|(a, b)| nz(**a) && nz(**b)).count(),
        both_zero: pairs.clone().filter(|(a, b)| !nz(**a) && !nz(**b)).count(),
        top_mass: pairs.map(|(a, b)| a * a + b * b).sum(),
    }
}

/// `sqrt(max_{i,j} r_i c_j)` over row and column ℓ1 norms; an upper bound on
/// the operator norm.
pub fn schur_bound(x: &FloatMatrix) -> f64 {
    let r = (0..x.rows())
        .map(|i| x.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let c = (0..x.cols())
        .map(|j| (0..x.rows()).map(|i| x.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (r * c).sqrt()
}

impl MinimizerReport {
    /// Entries of `w` with magnitude above `zero_tol`.
    pub fn nonzero_count(&self, zero_tol: f64) -> usize {
        self.w.iter().filter(|x| x.abs() > zero_tol).count()
    }
}
