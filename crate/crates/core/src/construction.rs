//! Exact construction of the clause matrix, the centering projector and the
//! five-block reduction matrix, together with the constant ledger.
//!
//! Row blocks of the reduction matrix (for `n` variables, `m` clauses):
//!
//! | block             | rows          | columns `[w⁺ \| w⁻ \| v]`      |
//! |-------------------|---------------|--------------------------------|
//! | `identity-top`    | `0..n`        | `I \| 0 \| 0`                  |
//! | `identity-second` | `n..2n`       | `0 \| I \| 0`                  |
//! | `projector`       | `2n..3n`      | `0 \| 0 \| P/ξ`                |
//! | `coupling`        | `3n..4n`      | `I/ξ \| I/ξ \| -I/ξ`           |
//! | `clause`          | `4n..4n+m`    | `εΦ \| 0 \| -εI′`              |

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::rational::{ceil_to_bigint, floor_to_usize, int, ratio, Rational};
use crate::sat::{Assignment, E13Instance};

pub const BLOCK_IDENTITY_TOP: &str = "identity-top";
pub const BLOCK_IDENTITY_SECOND: &str = "identity-second";
pub const BLOCK_PROJECTOR: &str = "projector";
pub const BLOCK_COUPLING: &str = "coupling";
pub const BLOCK_CLAUSE: &str = "clause";

/// Constants tying the SAT gap to the RIP gap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionParams {
    #[serde(with = "crate::rational::serde_rational")]
    pub epsilon: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub xi: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub alpha: Rational,
    /// Operator-norm bound `3/ξ`.
    #[serde(with = "crate::rational::serde_rational")]
    pub c1: Rational,
    /// Sparsity slack `1 + ξ²`.
    #[serde(with = "crate::rational::serde_rational")]
    pub c2: Rational,
    /// `(ε²/36)(9α/13 − 1284ξ²) − 25ξ`.
    #[serde(with = "crate::rational::serde_rational")]
    pub rho: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub delta: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub lambda1: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub lambda2: Rational,
}

impl ReductionParams {
    /// Requires `0 < ξ < ε < 1` and `0 < α ≤ 1`.
    pub fn new(epsilon: Rational, xi: Rational, alpha: Rational) -> Result<Self> {
        if !(xi.is_positive() && xi < epsilon && epsilon < Rational::one()) {
            return Err(Error::input(format!(
                "parameters must satisfy 0 < xi < epsilon < 1 (got xi={xi}, epsilon={epsilon})"
            )));
        }
        Self::new_unordered(epsilon, xi, alpha)
    }

    /// Like [`ReductionParams::new`] but only requires `ε, ξ ∈ (0, 1)`.
    /// Useful for small hand-checkable matrices; the analytic guarantees
    /// assume `ξ < ε`.
    pub fn new_unordered(epsilon: Rational, xi: Rational, alpha: Rational) -> Result<Self> {
        let unit = |x: &Rational| x.is_positive() && *x < Rational::one();
        if !(unit(&epsilon) && unit(&xi)) {
            return Err(Error::input(format!(
                "parameters must lie in (0, 1) (got xi={xi}, epsilon={epsilon})"
            )));
        }
        if !(alpha.is_positive() && alpha <= Rational::one()) {
            return Err(Error::input(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        let xi_sq = &xi * &xi;
        let eps_sq = &epsilon * &epsilon;
        let c1 = int(3) / &xi;
        let c2 = Rational::one() + &xi_sq;
        let rho =
            (&eps_sq / int(36)) * (ratio(9, 13) * &alpha - int(1284) * &xi_sq) - int(25) * &xi;
        // 2c₁² = 18ξ⁻²
        let two_c1_sq = int(18) / &xi_sq;
        let delta = Rational::one() - (Rational::one() + &rho) / &two_c1_sq;
        let lambda1 = c2.clone();
        let lambda2 = &two_c1_sq / (&two_c1_sq - &rho);
        Ok(ReductionParams {
            epsilon,
            xi,
            alpha,
            c1,
            c2,
            rho,
            delta,
            lambda1,
            lambda2,
        })
    }

    /// `ε = 1/5`, `ξ = 1/⌈10⁵/α⌉`: small enough that `ρ > 0`, so the RIP gap
    /// is genuine (at the price of entries of size ~10⁵/α).
    pub fn gap_preserving(alpha: Rational) -> Result<Self> {
        if !alpha.is_positive() {
            return Err(Error::input("alpha must be positive"));
        }
        let denom = ceil_to_bigint(&(int(100_000) / &alpha));
        let xi = Rational::new(1.into(), denom);
        Self::new(ratio(1, 5), xi, alpha)
    }

    /// `ε = 1/5`, `ξ = 1/200`: the largest ξ the bad-clause bound admits.
    pub fn demo(alpha: Rational) -> Result<Self> {
        Self::new(ratio(1, 5), ratio(1, 200), alpha)
    }

    /// `⌊2 c₂ n⌋`, the sparsity level of the gap statement.
    pub fn sparsity(&self, n: usize) -> usize {
        floor_to_usize(&(int(2) * &self.c2 * int(n as i64))).unwrap_or(usize::MAX)
    }
}

/// `Φ_ij = 1` iff variable `j+1` appears in clause `i`.
pub fn build_clause_matrix(phi: &E13Instance) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(phi.num_clauses(), phi.num_vars());
    for (i, clause) in phi.clauses().iter().enumerate() {
        for &v in clause {
            m.set(i, v - 1, Rational::one());
        }
    }
    m
}

/// `P = I − (1/n)𝟙𝟙ᵀ`.
pub fn build_projector(n: usize) -> Result<RationalMatrix> {
    if n == 0 {
        return Err(Error::input("projector dimension must be at least 1"));
    }
    let off = -ratio(1, n as i64);
    let diag = Rational::one() + &off;
    let mut p = RationalMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, if i == j { diag.clone() } else { off.clone() });
        }
    }
    Ok(p)
}

/// The `(4n+m) × 3n` reduction matrix, annotated with its row blocks.
pub fn build_reduction_matrix(
    phi: &E13Instance,
    params: &ReductionParams,
) -> Result<RationalMatrix> {
    let n = phi.num_vars();
    let m = phi.num_clauses();
    if m > n {
        return Err(Error::Construction(format!(
            "the truncated identity needs m <= n, got m={m}, n={n}"
        )));
    }
    let inv_xi = Rational::one() / &params.xi;
    let eps = &params.epsilon;
    let mut x = RationalMatrix::zeros(4 * n + m, 3 * n);
    for i in 0..n {
        x.set(i, i, Rational::one());
        x.set(n + i, n + i, Rational::one());
        x.set(3 * n + i, i, inv_xi.clone());
        x.set(3 * n + i, n + i, inv_xi.clone());
        x.set(3 * n + i, 2 * n + i, -inv_xi.clone());
    }
    let proj = build_projector(n)?.scaled(&inv_xi);
    x.paste(2 * n, 2 * n, &proj);
    for (i, clause) in phi.clauses().iter().enumerate() {
        for &v in clause {
            x.set(4 * n + i, v - 1, eps.clone());
        }
        x.set(4 * n + i, 2 * n + i, -eps.clone());
    }
    x.add_block(BLOCK_IDENTITY_TOP, 0, n)?;
    x.add_block(BLOCK_IDENTITY_SECOND, n, 2 * n)?;
    x.add_block(BLOCK_PROJECTOR, 2 * n, 3 * n)?;
    x.add_block(BLOCK_COUPLING, 3 * n, 4 * n)?;
    x.add_block(BLOCK_CLAUSE, 4 * n, 4 * n + m)?;
    Ok(x)
}

/// `X = X̃ / c₁`, with `‖Xu‖ ≤ ‖u‖` for every `u`.
pub fn build_scaled_matrix(phi: &E13Instance, params: &ReductionParams) -> Result<RationalMatrix> {
    let x = build_reduction_matrix(phi, params)?;
    Ok(x.scaled(&(Rational::one() / &params.c1)))
}

/// `{0,1}^{3n}` encoding `(u⁺ | u⁻ | 𝟙)` of a truth assignment with
/// `u⁺_i + u⁻_i = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentVector {
    entries: Vec<u8>,
}

impl AssignmentVector {
    pub fn from_entries(entries: Vec<u8>) -> Result<Self> {
        if !entries.len().is_multiple_of(3) || entries.is_empty() {
            return Err(Error::input(
                "assignment vectors have length 3n with n >= 1",
            ));
        }
        let n = entries.len() / 3;
        let ok = (0..n).all(|i| entries[i] <= 1 && entries[i] + entries[i + n] == 1)
            && entries[2 * n..].iter().all(|&e| e == 1);
        if !ok {
            return Err(Error::input("not an assignment vector"));
        }
        Ok(AssignmentVector { entries })
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len() / 3
    }

    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }

    pub fn to_rational(&self) -> Vec<Rational> {
        self.entries.iter().map(|&e| int(e as i64)).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&e| e as f64).collect()
    }

    /// Indices of the nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i] != 0)
            .collect()
    }
}

pub fn assignment_vector(a: &Assignment) -> AssignmentVector {
    let n = a.len();
    let mut entries = vec![1u8; 3 * n];
    for i in 0..n {
        entries[i] = a.bits[i] as u8;
        entries[i + n] = 1 - a.bits[i] as u8;
    }
    AssignmentVector { entries }
}

/// Exact value of `‖X̃u‖²` for an assignment vector, with its bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentValue {
    #[serde(with = "crate::rational::serde_rational")]
    pub value: Rational,
    /// `‖Φu⁺ − 𝟙‖²`.
    #[serde(with = "crate::rational::serde_rational")]
    pub clause_residual: Rational,
    pub unsatisfied: usize,
    /// `n + ε²·unsatisfied`.
    #[serde(with = "crate::rational::serde_rational")]
    pub lower_bound: Rational,
    /// `n + 4ε²·unsatisfied`.
    #[serde(with = "crate::rational::serde_rational")]
    pub upper_bound: Rational,
    /// No clause has three true variables, so the lower bound is attained.
    pub lower_bound_tight: bool,
}

/// `n + ε²‖Φu⁺ − 𝟙‖²`, computed from clause counts rather than the matrix.
pub fn assignment_value_exact(
    phi: &E13Instance,
    params: &ReductionParams,
    a: &Assignment,
) -> Result<AssignmentValue> {
    if a.len() != phi.num_vars() {
        return Err(Error::input(format!(
            "assignment has {} variables, instance has {}",
            a.len(),
            phi.num_vars()
        )));
    }
    let mut residual = 0i64;
    let mut unsatisfied = 0;
    for clause in phi.clauses() {
        let trues = clause.iter().filter(|&&v| a.value(v)).count() as i64;
        residual += (trues - 1) * (trues - 1);
        unsatisfied += (trues != 1) as usize;
    }
    let eps_sq = &params.epsilon * &params.epsilon;
    let n = int(phi.num_vars() as i64);
    let s = int(unsatisfied as i64);
    let clause_residual = int(residual);
    Ok(AssignmentValue {
        value: &n + &eps_sq * &clause_residual,
        clause_residual,
        unsatisfied,
        lower_bound: &n + &eps_sq * &s,
        upper_bound: &n + int(4) * &eps_sq * &s,
        lower_bound_tight: phi.triple_true_count(a) == 0,
    })
}

/// `max_{i,j} r_i c_j` over row and column ℓ1 norms, exactly.
pub fn schur_product_exact(x: &RationalMatrix) -> Rational {
    let row_max = (0..x.rows())
        .map(|i| {
            x.row(i)
                .iter()
                .map(|v| v.abs())
                .fold(Rational::zero(), |a, b| a + b)
        })
        .max()
        .unwrap_or_else(Rational::zero);
    let col_max = (0..x.cols())
        .map(|j| {
            (0..x.rows())
                .map(|i| x.get(i, j).abs())
                .fold(Rational::zero(), |a, b| a + b)
        })
        .max()
        .unwrap_or_else(Rational::zero);
    row_max * col_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RationalMatrix;
    use crate::rational::to_f64;

    fn demo() -> ReductionParams {
        ReductionParams::demo(ratio(1, 10)).unwrap()
    }

    #[test]
    fn clause_matrix_example() {
        let phi = E13Instance::new(3, vec![vec![1, 2], vec![2, 3]]).unwrap();
        let m = build_clause_matrix(&phi);
        let expect = RationalMatrix::from_rows(vec![
            vec![int(1), int(1), int(0)],
            vec![int(0), int(1), int(1)],
        ])
        .unwrap();
        assert_eq!(m, expect);
        let empty = E13Instance::new(4, vec![]).unwrap();
        let e = build_clause_matrix(&empty);
        assert_eq!((e.rows(), e.cols()), (0, 4));
    }

    #[test]
    fn projector_examples() {
        assert_eq!(build_projector(1).unwrap().data(), &[int(0)]);
        assert_eq!(
            build_projector(2).unwrap().data(),
            &[ratio(1, 2), ratio(-1, 2), ratio(-1, 2), ratio(1, 2)]
        );
        let p = build_projector(5).unwrap();
        assert!(p
            .mul_vec(&vec![int(1); 5])
            .unwrap()
            .iter()
            .all(|v| v.is_zero()));
        assert_eq!(p.matmul(&p).unwrap(), p);
        assert_eq!(p.transpose(), p);
        assert!(build_projector(0).is_err());
    }

    #[test]
    fn tiny_reduction_matrix() {
        let phi = E13Instance::new(1, vec![vec![1]]).unwrap();
        let params = ReductionParams::new_unordered(ratio(1, 5), ratio(1, 4), ratio(1, 2)).unwrap();
        assert!(ReductionParams::new(ratio(1, 5), ratio(1, 4), ratio(1, 2)).is_err());
        let x = build_reduction_matrix(&phi, &params).unwrap();
        let expect = RationalMatrix::from_rows(vec![
            vec![int(1), int(0), int(0)],
            vec![int(0), int(1), int(0)],
            vec![int(0), int(0), int(0)],
            vec![int(4), int(4), int(-4)],
            vec![ratio(1, 5), int(0), ratio(-1, 5)],
        ])
        .unwrap();
        assert_eq!(x.data(), expect.data());
        assert_eq!(
            x.block(BLOCK_CLAUSE).map(|b| (b.start, b.end)),
            Some((4, 5))
        );
    }

    #[test]
    fn rejects_more_clauses_than_variables() {
        let phi = E13Instance::new(1, vec![vec![1], vec![1]]).unwrap();
        assert!(matches!(
            build_reduction_matrix(&phi, &demo()),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn entry_sizes_do_not_grow_with_instance() {
        let params = demo();
        let bits = |x: &RationalMatrix| {
            x.data()
                .iter()
                .map(|r| r.numer().bits().max(r.denom().bits()))
                .max()
                .unwrap()
        };
        let small = E13Instance::new(3, vec![vec![1, 2]]).unwrap();
        let large = E13Instance::new(9, (1..=6).map(|i| vec![i, i + 1, i + 3]).collect()).unwrap();
        let b_small = bits(&build_reduction_matrix(&small, &params).unwrap());
        let b_large = bits(&build_reduction_matrix(&large, &params).unwrap());
        // only the projector's 1/n terms depend on n, through ξ⁻¹/n
        assert!(b_large <= b_small + 4, "{b_small} vs {b_large}");
    }

    #[test]
    fn assignment_vector_examples() {
        let u = assignment_vector(&Assignment::parse("TF").unwrap());
        assert_eq!(u.entries(), &[1, 0, 0, 1, 1, 1]);
        assert_eq!(u.support_size(), 4);
        let f = assignment_vector(&Assignment::all_false(3));
        assert_eq!(f.entries(), &[0, 0, 0, 1, 1, 1, 1, 1, 1]);
        assert!(AssignmentVector::from_entries(vec![1, 1, 1]).is_err());
    }

    #[test]
    fn assignment_value_examples() {
        let params = demo();
        let eps_sq = &params.epsilon * &params.epsilon;
        let phi = E13Instance::new(3, vec![vec![1, 2], vec![2, 3]]).unwrap();
        let sat =
            assignment_value_exact(&phi, &params, &Assignment::parse("FTF").unwrap()).unwrap();
        assert_eq!(sat.value, int(3));
        let none = assignment_value_exact(&phi, &params, &Assignment::all_false(3)).unwrap();
        assert_eq!(none.value, int(3) + &eps_sq * int(2));
        // clause 1 has both variables true, clause 2 is satisfied
        let one =
            assignment_value_exact(&phi, &params, &Assignment::parse("TTF").unwrap()).unwrap();
        assert_eq!(one.unsatisfied, 1);
        assert_eq!(one.value, int(3) + &eps_sq);
        let only_first = E13Instance::new(3, vec![vec![1, 2], vec![3]]).unwrap();
        let v = assignment_value_exact(&only_first, &params, &Assignment::parse("TTT").unwrap())
            .unwrap();
        assert_eq!(v.value, int(3) + eps_sq);
        assert!(v.lower_bound_tight);
    }

    #[test]
    fn matches_direct_image_norm() {
        let params = demo();
        let phi = E13Instance::new(4, vec![vec![1, 2, 3], vec![2, 4], vec![1]]).unwrap();
        let x = build_reduction_matrix(&phi, &params).unwrap();
        for a in Assignment::enumerate(4) {
            let u = assignment_vector(&a).to_rational();
            let direct = x.image_norm_sq(&u).unwrap();
            let fast = assignment_value_exact(&phi, &params, &a).unwrap();
            assert_eq!(direct, fast.value);
            assert!(fast.lower_bound <= fast.value && fast.value <= fast.upper_bound);
            if fast.lower_bound_tight {
                assert_eq!(fast.value, fast.lower_bound);
            }
        }
    }

    #[test]
    fn ledger_closed_forms() {
        let p = ReductionParams::new(ratio(1, 5), ratio(1, 200), ratio(1, 2)).unwrap();
        assert_eq!(p.c1, int(600));
        assert_eq!(p.c2, ratio(40001, 40000));
        let rho = ratio(1, 900) * (ratio(9, 26) - ratio(1284, 40000)) - ratio(1, 8);
        assert_eq!(p.rho, rho);
        assert_eq!(p.delta, int(1) - (int(1) + &rho) / int(720_000));
        assert_eq!(p.lambda2, int(720_000) / (int(720_000) - &rho));
        assert_eq!(p.lambda1, p.c2);
        assert_eq!(p.sparsity(5), 10);
        assert!(ReductionParams::new(ratio(1, 5), ratio(1, 5), ratio(1, 2)).is_err());
        assert!(ReductionParams::new(ratio(1, 5), ratio(1, 10), int(0)).is_err());
    }

    #[test]
    fn gap_preserving_parameters_give_positive_rho() {
        for alpha in [ratio(1, 1), ratio(1, 18), ratio(1, 1000), ratio(3, 7919)] {
            let p = ReductionParams::gap_preserving(alpha.clone()).unwrap();
            assert!(p.rho.is_positive(), "rho <= 0 for alpha={alpha}");
            assert!(p.lambda2 > Rational::one());
            assert!(p.delta > Rational::zero() && p.delta < Rational::one());
        }
        let p = ReductionParams::gap_preserving(ratio(1, 2)).unwrap();
        assert_eq!(p.xi, ratio(1, 200_000));
        assert!(to_f64(&p.rho) > 0.0);
    }

    #[test]
    fn schur_product_bounded_by_nine_over_xi_squared() {
        let params = demo();
        let phi = E13Instance::new(5, vec![vec![1, 2, 3], vec![3, 4, 5], vec![1, 5]]).unwrap();
        let x = build_reduction_matrix(&phi, &params).unwrap();
        let bound = &params.c1 * &params.c1;
        assert!(schur_product_exact(&x) <= bound);
    }
}
