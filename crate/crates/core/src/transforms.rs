//! Matrix transforms that move the δ parameter or the shape of a RIP
//! instance while keeping restricted-isometry membership under control.

use num::{BigInt, One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, operator_norm};
use crate::matrix::{block_diagonal, DenseMatrix, FloatMatrix, RationalMatrix};
use crate::rational::{ceil_to_bigint, int, to_f64, Rational};
use crate::rip::RipReport;

/// Largest denominator tried when searching for rational scale factors.
pub const DENOMINATOR_CAP: u64 = 1_000_000;

/// Slack used when comparing a floating-point operator norm with its bound.
pub const NORM_TOLERANCE: f64 = 1e-9;

const QR_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftParams {
    #[serde(with = "crate::rational::serde_rational")]
    pub mu: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub nu: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub tau: Rational,
    /// Gap factor the transformed instance carries.
    #[serde(with = "crate::rational::serde_rational")]
    pub lambda2_prime: Rational,
}

/// First `p/q` (by increasing `q`, then `p`) with `lo ≤ (p/q)² ≤ hi`, or
/// `< hi` when `hi_open` is set.
fn rational_sqrt_in(lo: &Rational, hi: &Rational, hi_open: bool) -> Option<Rational> {
    let lo = if lo.is_negative() {
        Rational::zero()
    } else {
        lo.clone()
    };
    for q in 1..=DENOMINATOR_CAP {
        let q = BigInt::from(q);
        let target = &lo * Rational::from_integer(&q * &q);
        let c = ceil_to_bigint(&target);
        let mut p = c.sqrt();
        if &p * &p < c {
            p += 1;
        }
        let cand = Rational::new(p, q);
        let sq = &cand * &cand;
        if sq < *hi || (!hi_open && sq == *hi) {
            return Some(cand);
        }
    }
    None
}

fn open_unit(name: &str, x: &Rational) -> Result<()> {
    if x.is_positive() && *x < Rational::one() {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// Largest admissible tolerance for [`shift_delta_down`].
pub fn max_shift_tau(delta_prime: &Rational, lambda2: &Rational) -> Rational {
    (lambda2 - Rational::one()) * delta_prime / (int(2) + int(4) * lambda2)
}

/// Stacks `μX` over `νI` so that RIP(k, δ) maps into RIP(k, δ′) for `δ′ < δ`.
///
/// `‖X′u‖² = μ²‖Xu‖² + ν²‖u‖²` holds exactly. `tau` defaults to its largest
/// admissible value.
pub fn shift_delta_down(
    x: &RationalMatrix,
    delta: &Rational,
    delta_prime: &Rational,
    lambda2: &Rational,
    tau: Option<Rational>,
) -> Result<(RationalMatrix, ShiftParams)> {
    open_unit("delta", delta)?;
    open_unit("delta'", delta_prime)?;
    if delta_prime >= delta {
        return Err(Error::input("shifting down needs delta' < delta"));
    }
    if *lambda2 <= Rational::one() {
        return Err(Error::input(format!(
            "lambda2 must exceed 1, got {lambda2}"
        )));
    }
    let tau_max = max_shift_tau(delta_prime, lambda2);
    let tau = tau.unwrap_or_else(|| tau_max.clone());
    if !tau.is_positive() {
        return Err(Error::input("tau must be positive"));
    }
    if tau > tau_max {
        return Err(Error::input(format!(
            "tau must not exceed {tau_max}, got {tau}"
        )));
    }
    let mu = rational_sqrt_in(
        &((delta_prime - int(2) * &tau) / delta),
        &((delta_prime - &tau) / delta),
        false,
    )
    .ok_or_else(|| Error::Construction("no rational mu below the denominator cap".into()))?;
    let mu_sq = &mu * &mu;
    let nu = rational_sqrt_in(
        &(Rational::one() - &tau - &mu_sq),
        &(Rational::one() - &mu_sq),
        false,
    )
    .ok_or_else(|| Error::Construction("no rational nu below the denominator cap".into()))?;
    let out = x
        .scaled(&mu)
        .vstack(&RationalMatrix::identity(x.cols()).scaled(&nu))?;
    let lambda2_prime = (lambda2 + Rational::one()) / int(2);
    Ok((
        out,
        ShiftParams {
            mu,
            nu,
            tau,
            lambda2_prime,
        },
    ))
}

/// Scales `X` by `μ ≤ 1` so that RIP(k, δ) maps into RIP(k, δ′) for `δ′ > δ`.
///
/// The input must satisfy `‖Xu‖² ≤ (1+δ)‖u‖²`, checked through its operator
/// norm. The reported `lambda2_prime` is `(1 − μ²(1 − λ₂δ))/δ′`.
pub fn shift_delta_up(
    x: &RationalMatrix,
    delta: &Rational,
    delta_prime: &Rational,
    lambda2: &Rational,
) -> Result<(RationalMatrix, ShiftParams)> {
    open_unit("delta", delta)?;
    open_unit("delta'", delta_prime)?;
    if delta_prime <= delta {
        return Err(Error::input("shifting up needs delta' > delta"));
    }
    if *lambda2 <= Rational::one() {
        return Err(Error::input(format!(
            "lambda2 must exceed 1, got {lambda2}"
        )));
    }
    let gap = Rational::one() - lambda2 * delta;
    if !gap.is_positive() {
        return Err(Error::Construction(format!(
            "lambda2 * delta = {} leaves no room for mu",
            lambda2 * delta
        )));
    }
    let norm = operator_norm(&x.to_float());
    let bound = (1.0 + to_f64(delta)).sqrt();
    if norm > bound + NORM_TOLERANCE {
        return Err(Error::Precondition(format!(
            "operator norm {norm} exceeds sqrt(1 + delta) = {bound}"
        )));
    }
    let one_minus = Rational::one() - delta_prime;
    let lo = &one_minus / (Rational::one() - delta);
    let hi = &one_minus / &gap;
    let mu = if hi > Rational::one() {
        rational_sqrt_in(&lo, &Rational::one(), false)
    } else {
        rational_sqrt_in(&lo, &hi, true)
    }
    .ok_or_else(|| Error::Construction("no rational mu below the denominator cap".into()))?;
    let lambda2_prime = (Rational::one() - &mu * &mu * &gap) / delta_prime;
    Ok((
        x.scaled(&mu),
        ShiftParams {
            mu,
            nu: Rational::zero(),
            tau: Rational::zero(),
            lambda2_prime,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareReport {
    pub matrix: FloatMatrix,
    /// `‖QR − X‖_op`.
    pub factorization_residual: f64,
    /// Largest `|‖Xu‖² − ‖X̂u‖²|` over the sampled unit vectors.
    pub sampled_deviation: f64,
    pub samples: usize,
}

/// Replaces a tall `X` by the square triangular factor of its QR
/// decomposition, which has (numerically) the same `‖Xu‖` for every `u`.
pub fn squarify(x: &FloatMatrix, tau: f64) -> Result<SquareReport> {
    if x.rows() < x.cols() {
        return Err(Error::input(format!(
            "squarify needs rows >= cols, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::input("tau must be positive"));
    }
    let norm = operator_norm(x);
    if norm > 2.0 + NORM_TOLERANCE {
        return Err(Error::Precondition(format!(
            "operator norm {norm} exceeds 2"
        )));
    }
    let p = x.cols();
    let (q, r) = householder_qr(x);
    let factorization_residual = operator_norm(&q.matmul(&r)?.sub(x)?);
    let mut top = FloatMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            top.set(i, j, *r.get(i, j));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut sampled_deviation: f64 = 0.0;
    for _ in 0..QR_SAMPLES {
        let u = random_unit(&mut rng, p);
        let d = x.image_norm_sq(&u)? - top.image_norm_sq(&u)?;
        sampled_deviation = sampled_deviation.max(d.abs());
    }
    if factorization_residual > tau / 4.0 || sampled_deviation > tau {
        return Err(Error::Construction(format!(
            "QR accuracy {factorization_residual:e} / {sampled_deviation:e} misses tau = {tau:e}"
        )));
    }
    Ok(SquareReport {
        matrix: top,
        factorization_residual,
        sampled_deviation,
        samples: QR_SAMPLES,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    use rand::Rng;
    loop {
        // Box-Muller gives an isotropic direction
        let u: Vec<f64> = (0..p)
            .map(|_| {
                let a: f64 = rng.gen_range(f64::EPSILON..1.0);
                let b: f64 = rng.gen();
                (-2.0 * a.ln()).sqrt() * (std::f64::consts::TAU * b).cos()
            })
            .collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return u.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// `A ⊕ B`; restricted isometry constants of the result are the worse of
/// the two blocks.
pub fn block_diag<T: Clone + Zero>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> DenseMatrix<T> {
    block_diagonal(a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidenReport {
    pub matrix: FloatMatrix,
    /// `cols / rows` of the assembled matrix.
    pub aspect_ratio: f64,
}

/// Appends a certified-RIP block `B` beside `A`, widening the instance
/// without changing its RIP(k, δ) status.
///
/// The certificate must be a report for `B` at sparsity at least `k` with
/// `δ* ≤ δ`; its witness vector is replayed against `B` as a sanity check.
pub fn widen_rectangular(
    a: &FloatMatrix,
    b: &FloatMatrix,
    certificate: &RipReport,
    k: usize,
    delta: f64,
) -> Result<WidenReport> {
    if certificate.witness_vector.len() != b.cols() {
        return Err(Error::input(format!(
            "certificate covers {} columns, B has {}",
            certificate.witness_vector.len(),
            b.cols()
        )));
    }
    if certificate.k < k {
        return Err(Error::input(format!(
            "certificate is for sparsity {}, need at least {k}",
            certificate.k
        )));
    }
    if certificate.delta_star > delta + certificate.tolerance {
        return Err(Error::input(format!(
            "certificate shows delta* = {}, above the requested {delta}",
            certificate.delta_star
        )));
    }
    let replay = (b.image_norm_sq(&certificate.witness_vector)? - 1.0).abs();
    if (replay - certificate.delta_star).abs() > 1e-6 {
        return Err(Error::input(
            "certificate witness does not reproduce its delta* on B",
        ));
    }
    let matrix = block_diag(a, b);
    let aspect_ratio = matrix.cols() as f64 / matrix.rows().max(1) as f64;
    Ok(WidenReport {
        matrix,
        aspect_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_f64, ratio};
    use crate::rip::{gap_decide, restricted_extremes, rip_delta, GapVerdict, OracleOptions};
    use proptest::prelude::*;
    use rand::Rng;

    fn opts() -> OracleOptions {
        OracleOptions::default()
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> FloatMatrix {
        let data = (0..r * c).map(|_| rng.gen_range(-scale..scale)).collect();
        FloatMatrix::from_row_major(r, c, data).unwrap()
    }

    fn small_rational(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RationalMatrix {
        let data = (0..r * c)
            .map(|_| ratio(rng.gen_range(-8..=8), 8))
            .collect();
        RationalMatrix::from_row_major(r, c, data).unwrap()
    }

    #[test]
    fn shift_down_brackets() {
        let x = RationalMatrix::identity(3);
        let (delta, dp, l2) = (ratio(1, 2), ratio(1, 5), ratio(3, 2));
        let (xp, s) = shift_delta_down(&x, &delta, &dp, &l2, None).unwrap();
        assert_eq!(s.tau, max_shift_tau(&dp, &l2));
        assert_eq!(s.tau, ratio(1, 80));
        let mu_sq = &s.mu * &s.mu;
        let nu_sq = &s.nu * &s.nu;
        assert!(&mu_sq * &delta >= &dp - int(2) * &s.tau);
        assert!(&mu_sq * &delta <= &dp - &s.tau);
        assert!(&mu_sq + &nu_sq >= Rational::one() - &s.tau);
        assert!(&mu_sq + &nu_sq <= Rational::one());
        assert_eq!(s.lambda2_prime, ratio(5, 4));
        assert_eq!((xp.rows(), xp.cols()), (6, 3));
    }

    #[test]
    fn shift_down_rejects_bad_tau() {
        let x = RationalMatrix::identity(2);
        let (d, dp, l2) = (ratio(1, 2), ratio(1, 5), ratio(3, 2));
        for tau in [int(0), ratio(-1, 10), ratio(1, 10)] {
            assert!(shift_delta_down(&x, &d, &dp, &l2, Some(tau)).is_err());
        }
        assert!(shift_delta_down(&x, &dp, &d, &l2, None).is_err());
        assert!(shift_delta_down(&x, &d, &dp, &int(1), None).is_err());
    }

    #[test]
    fn shift_down_preserves_rip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 5 {
            let x = small_rational(&mut rng, 4, 5);
            let d = rip_delta(&x.to_float(), 2, &opts()).unwrap();
            if !(d > 0.05 && d < 0.9) {
                continue;
            }
            let delta = from_f64(d).unwrap();
            let dp = &delta / int(3);
            let (xp, _) = shift_delta_down(&x, &delta, &dp, &ratio(2, 1), None).unwrap();
            assert!(rip_delta(&xp.to_float(), 2, &opts()).unwrap() <= to_f64(&dp) + 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn shift_down_maps_verdicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (delta, dp, l2) = (ratio(3, 10), ratio(1, 10), ratio(2, 1));
        let one = Rational::one();
        let mut seen = [false; 2];
        for _ in 0..200 {
            let x = small_rational(&mut rng, 4, 4).scaled(&ratio(3, 2));
            let v = gap_decide(&x.to_float(), 2, 0.3, &one, 2.0, &opts())
                .unwrap()
                .verdict;
            if v == GapVerdict::Indeterminate {
                continue;
            }
            let (xp, s) = shift_delta_down(&x, &delta, &dp, &l2, None).unwrap();
            let l2p = to_f64(&s.lambda2_prime);
            let w = gap_decide(&xp.to_float(), 2, 0.1, &one, l2p, &opts())
                .unwrap()
                .verdict;
            assert_eq!(v, w);
            seen[(v == GapVerdict::IsRip) as usize] = true;
        }
        assert!(seen[0], "no far instance sampled");
    }

    #[test]
    fn shift_up_example() {
        let x = RationalMatrix::identity(2);
        let (delta, dp, l2) = (ratio(3, 10), ratio(3, 5), ratio(11, 10));
        let (_, s) = shift_delta_up(&x, &delta, &dp, &l2).unwrap();
        let mu_sq = &s.mu * &s.mu;
        assert!(mu_sq >= ratio(4, 7));
        assert!(mu_sq < ratio(40, 67));
        assert!(s.mu <= Rational::one());
        assert!(s.lambda2_prime > Rational::one());
        assert_eq!(s.mu, ratio(10, 13));
    }

    #[test]
    fn shift_up_norm_boundary() {
        // ‖X‖² = 1 + δ exactly
        let x = RationalMatrix::from_rows(vec![vec![ratio(6, 5), int(0)], vec![int(0), int(1)]])
            .unwrap();
        let delta = ratio(11, 25);
        assert!(shift_delta_up(&x, &delta, &ratio(1, 2), &ratio(11, 10)).is_ok());
        let too_big = x.scaled(&ratio(11, 10));
        assert!(matches!(
            shift_delta_up(&too_big, &delta, &ratio(1, 2), &ratio(11, 10)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            shift_delta_up(&x, &ratio(1, 2), &ratio(3, 5), &int(2)),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn squarify_examples() {
        let col = FloatMatrix::from_rows(vec![vec![0.6], vec![0.8]]).unwrap();
        let sq = squarify(&col, 1e-6).unwrap();
        assert!((sq.matrix.get(0, 0) - 1.0).abs() < 1e-15);

        let tri =
            FloatMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.0, 0.75], vec![0.0, 0.0]]).unwrap();
        let sq = squarify(&tri, 1e-6).unwrap();
        assert!(
            sq.matrix.max_abs_diff(
                &FloatMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.0, 0.75]]).unwrap()
            ) < 1e-15
        );

        assert!(matches!(
            squarify(&tri.transpose(), 1e-6),
            Err(Error::Input(_))
        ));
        let big = FloatMatrix::identity(2).scaled(&3.0);
        assert!(matches!(squarify(&big, 1e-6), Err(Error::Precondition(_))));
    }

    #[test]
    fn squarify_keeps_rip_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let tau = 1e-9;
        for _ in 0..10 {
            let x = random(&mut rng, 5, 3, 0.5);
            let sq = squarify(&x, tau).unwrap();
            assert!(sq.factorization_residual <= tau / 4.0);
            for k in 1..=3 {
                let a = rip_delta(&x, k, &opts()).unwrap();
                let b = rip_delta(&sq.matrix, k, &opts()).unwrap();
                assert!((a - b).abs() <= tau);
            }
        }
    }

    #[test]
    fn block_diag_takes_worse_block() {
        let id = block_diag(&FloatMatrix::identity(2), &FloatMatrix::identity(3));
        assert_eq!(id, FloatMatrix::identity(5));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let a = random(&mut rng, 3, 3, 1.0);
            let b = random(&mut rng, 2, 3, 1.0);
            let x = block_diag(&a, &b);
            for k in 1..=3 {
                let lhs = rip_delta(&x, k, &opts()).unwrap();
                let rhs = rip_delta(&a, k, &opts())
                    .unwrap()
                    .max(rip_delta(&b, k, &opts()).unwrap());
                assert!((lhs - rhs).abs() < 1e-9);
            }
        }
        let a = FloatMatrix::identity(2);
        let b = FloatMatrix::from_rows(vec![vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(crate::rip::is_rip(&a, 2, 0.5, &opts()).unwrap());
        assert!(!crate::rip::is_rip(&block_diag(&a, &b), 2, 0.5, &opts()).unwrap());
    }

    #[test]
    fn widening() {
        let b = FloatMatrix::identity(6);
        let cert = restricted_extremes(&b, 3, &opts()).unwrap();
        let w = widen_rectangular(&FloatMatrix::identity(2), &b, &cert, 2, 0.1).unwrap();
        assert_eq!(w.aspect_ratio, 1.0);
        assert!(crate::rip::is_rip(&w.matrix, 2, 0.01, &opts()).unwrap());

        // A with δ*(2) = 0.9 stays outside RIP(2, 0.3)
        let s = 0.1f64.sqrt();
        let a = FloatMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, s]]).unwrap();
        let w = widen_rectangular(&a, &b, &cert, 2, 0.3).unwrap();
        assert!(!crate::rip::is_rip(&w.matrix, 2, 0.3, &opts()).unwrap());

        // wide B: four 2-row blocks of scaled identities side by side
        let mut wide = FloatMatrix::zeros(2, 8);
        for j in 0..8 {
            wide.set(j % 2, j, 1.0);
        }
        let wc = restricted_extremes(&wide, 1, &opts()).unwrap();
        let w = widen_rectangular(&a, &wide, &wc, 1, 0.3).unwrap();
        assert_eq!(w.aspect_ratio, 2.5);

        assert!(widen_rectangular(&a, &b, &cert, 4, 0.3).is_err());
        assert!(widen_rectangular(&a, &wide, &cert, 2, 0.3).is_err());
        let bad = restricted_extremes(&a, 2, &opts()).unwrap();
        assert!(widen_rectangular(&a, &a, &bad, 2, 0.3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn stacking_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = small_rational(&mut rng, 3, 4);
            let (xp, s) = shift_delta_down(&x, &ratio(1, 2), &ratio(1, 4), &ratio(3, 2), None).unwrap();
            let u: Vec<Rational> = (0..4).map(|_| ratio(rng.gen_range(-9..=9), rng.gen_range(1..=9))).collect();
            let u_sq: Rational = u.iter().map(|v| v * v).sum();
            let lhs = xp.image_norm_sq(&u).unwrap();
            let rhs = &s.mu * &s.mu * x.image_norm_sq(&u).unwrap() + &s.nu * &s.nu * u_sq;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn shift_up_scales_delta(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(&mut rng, 4, 6, 1.0);
            let x = x.scaled(&(1.0 / operator_norm(&x)));
            let xr = x.to_rational().unwrap();
            let (xp, s) = shift_delta_up(&xr, &ratio(1, 10), &ratio(1, 2), &ratio(3, 2)).unwrap();
            let mu_sq = to_f64(&(&s.mu * &s.mu));
            for k in 1..=3 {
                let before = restricted_extremes(&x, k, &opts()).unwrap();
                let after = restricted_extremes(&xp.to_float(), k, &opts()).unwrap();
                prop_assert!((after.min_restricted_eig - mu_sq * before.min_restricted_eig).abs() < 1e-9);
                prop_assert!((after.max_restricted_eig - mu_sq * before.max_restricted_eig).abs() < 1e-9);
            }
        }
    }
}
