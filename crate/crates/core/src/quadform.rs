//! Covariance of quadratic forms in standardized ranks.
//!
//! Let s be a standardized rank vector: s_i = sqrt(12/(n^2-1)) * (r_i - (n+1)/2)
//! with r uniform on the permutations of {1,..,n}. For symmetric A and B this
//! module computes cov(s'As, s'Bs) three ways:
//!
//! * [`enumerate_quadform_cov`] — brute force over all n! permutations (n <= 8);
//! * [`exact_quadform_cov`] — the exact term-by-term expansion in the seven
//!   pattern covariances of (s_i s_j, s_k s_l), valid for any n;
//! * [`leading_quadform_cov`] — the three leading terms
//!   `2 tr(AB) - (6/5) tr(A∘B) - (4/(5n)) tr(A) tr(B)` that survive as n grows.
//!
//! The exact expansion is the testable form of the leading-term statement:
//! nothing is dropped, so it must agree with enumeration to rounding.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest n for which full permutation enumeration is allowed (8! = 40320).
pub const MAX_ENUMERATION_N: usize = 8;

/// The seven covariance constants of products of standardized-rank entries,
/// as exact functions of n. Indices in the names refer to distinct positions:
/// e.g. `cov_s1s2_s1s3` is cov(s_1 s_2, s_1 s_3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFormCovTerms {
    pub var_s1sq: f64,
    pub cov_s1sq_s1s2: f64,
    pub cov_s1sq_s2sq: f64,
    pub cov_s1sq_s2s3: f64,
    pub var_s1s2: f64,
    pub cov_s1s2_s1s3: f64,
    pub cov_s1s2_s3s4: f64,
}

impl QuadFormCovTerms {
    /// Evaluate the constants for sample size n (needs n >= 4 so that all
    /// seven index patterns exist).
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::SampleTooSmall { n, min: 4 });
        }
        let nf = n as f64;
        // By Faulhaber's formula.
        let var_s1sq = 4.0 / 5.0 - 12.0 / (5.0 * (nf * nf - 1.0));
        // The remaining patterns follow from the constraints sum s_i = 0 and
        // sum s_i^2 = n.
        let cov_s1sq_s1s2 = -var_s1sq / (nf - 1.0);
        let cov_s1sq_s2sq = -var_s1sq / (nf - 1.0);
        let cov_s1sq_s2s3 = 2.0 * var_s1sq / ((nf - 1.0) * (nf - 2.0));
        let var_s1s2 = nf * (nf - 2.0) / ((nf - 1.0) * (nf - 1.0)) - var_s1sq / (nf - 1.0);
        let cov_s1s2_s1s3 =
            -nf / ((nf - 1.0) * (nf - 1.0)) + 2.0 * var_s1sq / ((nf - 1.0) * (nf - 2.0));
        let cov_s1s2_s3s4 = 2.0 * nf / ((nf - 1.0) * (nf - 1.0) * (nf - 3.0))
            - 6.0 * var_s1sq / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
        Ok(Self {
            var_s1sq,
            cov_s1sq_s1s2,
            cov_s1sq_s2sq,
            cov_s1sq_s2s3,
            var_s1s2,
            cov_s1s2_s1s3,
            cov_s1s2_s3s4,
        })
    }
}

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if b.nrows() != b.ncols() || b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    Ok(a.nrows())
}

/// Index-pattern sums of a symmetric pair, each computable in O(n^2).
struct PatternSums {
    tr_hadamard: f64, // sum_i a_ii b_ii = tr(A∘B)
    tr_a: f64,
    tr_b: f64,
    tr_ab: f64,
    one_b_diag_a: f64, // 1' B diag(A)
    one_a_diag_b: f64, // 1' A diag(B)
    one_a_one: f64,    // 1' A 1
    one_b_one: f64,
    one_ab_one: f64, // 1' A B 1
}

impl PatternSums {
    fn new(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut tr_hadamard = 0.0;
        let mut tr_a = 0.0;
        let mut tr_b = 0.0;
        let mut tr_ab = 0.0;
        let mut one_b_diag_a = 0.0;
        let mut one_a_diag_b = 0.0;
        let mut one_a_one = 0.0;
        let mut one_b_one = 0.0;
        let mut one_ab_one = 0.0;
        let mut a_rowsum = vec![0.0; n];
        let mut b_rowsum = vec![0.0; n];
        for i in 0..n {
            tr_hadamard += a[(i, i)] * b[(i, i)];
            tr_a += a[(i, i)];
            tr_b += b[(i, i)];
            for j in 0..n {
                tr_ab += a[(i, j)] * b[(j, i)];
                a_rowsum[i] += a[(i, j)];
                b_rowsum[i] += b[(i, j)];
            }
        }
        for i in 0..n {
            one_a_one += a_rowsum[i];
            one_b_one += b_rowsum[i];
            one_b_diag_a += a[(i, i)] * b_rowsum[i];
            one_a_diag_b += b[(i, i)] * a_rowsum[i];
            one_ab_one += a_rowsum[i] * b_rowsum[i]; // 1'AB1 = (A1)'(B1) by symmetry
        }
        Self {
            tr_hadamard,
            tr_a,
            tr_b,
            tr_ab,
            one_b_diag_a,
            one_a_diag_b,
            one_a_one,
            one_b_one,
            one_ab_one,
        }
    }
}

/// Exact cov(s'As, s'Bs) from the seven-pattern expansion; no remainder term
/// is dropped. For n < 5 the result is delegated to permutation enumeration.
pub fn exact_quadform_cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = check_pair(a, b)?;
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    if n < 5 {
        return enumerate_quadform_cov(a, b);
    }
    let c = QuadFormCovTerms::new(n)?;
    let s = PatternSums::new(a, b);

    // Ordered sums over mutually distinct indices, reduced to matrix
    // functionals (inclusion–exclusion on coincident indices).
    let t_diag_pair = s.tr_a * s.tr_b - s.tr_hadamard; // sum* a_ii b_kk
    let t_diag_a_offb = s.one_b_diag_a - s.tr_hadamard; // sum* a_kk b_kl
    let t_diag_b_offa = s.one_a_diag_b - s.tr_hadamard; // sum* a_ij b_ii
    let t_diag_a_far =
        s.tr_a * s.one_b_one + 2.0 * s.tr_hadamard - 2.0 * s.one_b_diag_a - s.tr_a * s.tr_b;
    let t_diag_b_far =
        s.tr_b * s.one_a_one + 2.0 * s.tr_hadamard - 2.0 * s.one_a_diag_b - s.tr_a * s.tr_b;
    let t_off_match = s.tr_ab - s.tr_hadamard; // sum* a_ij b_ij
    let t_off_chain = s.one_ab_one - s.tr_ab - s.one_b_diag_a - s.one_a_diag_b
        + 2.0 * s.tr_hadamard; // sum* a_ij b_jk
    let t_off_far = s.one_a_one * s.one_b_one - 4.0 * s.one_ab_one
        + 4.0 * s.one_a_diag_b
        + 4.0 * s.one_b_diag_a
        - s.tr_a * s.one_b_one
        - s.tr_b * s.one_a_one
        - 6.0 * s.tr_hadamard
        + 2.0 * s.tr_ab
        + s.tr_a * s.tr_b; // sum* a_ij b_kl, all four distinct

    Ok(c.var_s1sq * s.tr_hadamard
        + c.cov_s1sq_s2sq * t_diag_pair
        + 2.0 * c.cov_s1sq_s1s2 * (t_diag_a_offb + t_diag_b_offa)
        + c.cov_s1sq_s2s3 * (t_diag_a_far + t_diag_b_far)
        + 2.0 * c.var_s1s2 * t_off_match
        + 4.0 * c.cov_s1s2_s1s3 * t_off_chain
        + c.cov_s1s2_s3s4 * t_off_far)
}

/// The three leading terms of the quadratic-form covariance:
/// `2 tr(AB) - (6/5) tr(A∘B) - (4/(5n)) tr(A) tr(B)`.
pub fn leading_quadform_cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = check_pair(a, b)?;
    let s = PatternSums::new(a, b);
    Ok(2.0 * s.tr_ab - 1.2 * s.tr_hadamard - 0.8 / (n as f64) * s.tr_a * s.tr_b)
}

/// Brute-force cov(s'As, s'Bs) by averaging over all n! permutations.
pub fn enumerate_quadform_cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = check_pair(a, b)?;
    if n > MAX_ENUMERATION_N {
        return Err(Error::SizeTooLarge { n, max: MAX_ENUMERATION_N });
    }
    let nf = n as f64;
    let scale = (12.0 / (nf * nf - 1.0)).sqrt();
    let center = (nf + 1.0) / 2.0;

    let mut perm: Vec<usize> = (1..=n).collect();
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut sum_ab = 0.0;
    let mut count = 0usize;
    let mut s = vec![0.0; n];

    let mut eval = |perm: &[usize]| {
        for (i, &r) in perm.iter().enumerate() {
            s[i] = scale * (r as f64 - center);
        }
        let mut qa = 0.0;
        let mut qb = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = s[i] * s[j];
                qa += a[(i, j)] * w;
                qb += b[(i, j)] * w;
            }
        }
        sum_a += qa;
        sum_b += qb;
        sum_ab += qa * qb;
        count += 1;
    };

    // Heap's algorithm, iterative form.
    eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            eval(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    let m = count as f64;
    Ok(sum_ab / m - (sum_a / m) * (sum_b / m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn unit_diag(n: usize, k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        m[(k, k)] = 1.0;
        m
    }

    fn sym_pair_unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
        // s' M s = s_i s_j for M = (E_ij + E_ji)/2
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = 0.5;
        m[(j, i)] = 0.5;
        m
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    }

    #[test]
    fn enumeration_matches_hand_values_n3() {
        let e1 = unit_diag(3, 0);
        let e2 = unit_diag(3, 1);
        // s_1^2 takes value 1.5 w.p. 2/3 and 0 w.p. 1/3: var = 0.5.
        assert_abs_diff_eq!(enumerate_quadform_cov(&e1, &e1).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(enumerate_quadform_cov(&e1, &e2).unwrap(), -0.25, epsilon = 1e-12);
    }

    #[test]
    fn exact_delegates_below_n5() {
        let e1 = unit_diag(3, 0);
        let e2 = unit_diag(3, 1);
        assert_abs_diff_eq!(exact_quadform_cov(&e1, &e1).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_quadform_cov(&e1, &e2).unwrap(), -0.25, epsilon = 1e-12);
        // 4/5 - 12/(5(n^2-1)) at n = 3 is the same 0.5.
        let c = 4.0 / 5.0 - 12.0 / (5.0 * 8.0);
        assert_abs_diff_eq!(c, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn constant_form_is_degenerate() {
        for n in [3usize, 5, 6] {
            let id = DMatrix::identity(n, n);
            assert_abs_diff_eq!(exact_quadform_cov(&id, &id).unwrap(), 0.0, epsilon = 1e-10);
            if n <= MAX_ENUMERATION_N {
                assert_abs_diff_eq!(enumerate_quadform_cov(&id, &id).unwrap(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn pattern_constants_match_enumeration() {
        for n in [4usize, 5, 6] {
            let c = QuadFormCovTerms::new(n).unwrap();
            let d0 = unit_diag(n, 0);
            let d1 = unit_diag(n, 1);
            let p01 = sym_pair_unit(n, 0, 1);
            let p02 = sym_pair_unit(n, 0, 2);
            let p12 = sym_pair_unit(n, 1, 2);
            let p23 = sym_pair_unit(n, 2, 3);
            let eps = 1e-12;
            assert_abs_diff_eq!(enumerate_quadform_cov(&d0, &d0).unwrap(), c.var_s1sq, epsilon = eps);
            assert_abs_diff_eq!(enumerate_quadform_cov(&d0, &d1).unwrap(), c.cov_s1sq_s2sq, epsilon = eps);
            assert_abs_diff_eq!(enumerate_quadform_cov(&d0, &p01).unwrap(), c.cov_s1sq_s1s2, epsilon = eps);
            assert_abs_diff_eq!(enumerate_quadform_cov(&d0, &p12).unwrap(), c.cov_s1sq_s2s3, epsilon = eps);
            assert_abs_diff_eq!(enumerate_quadform_cov(&p01, &p01).unwrap(), c.var_s1s2, epsilon = eps);
            assert_abs_diff_eq!(enumerate_quadform_cov(&p01, &p02).unwrap(), c.cov_s1s2_s1s3, epsilon = eps);
            assert_abs_diff_eq!(enumerate_quadform_cov(&p01, &p23).unwrap(), c.cov_s1s2_s3s4, epsilon = eps);
        }
    }

    #[test]
    fn exact_equals_enumeration_on_random_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for n in 3..=7usize {
            for _ in 0..20 {
                let a = random_symmetric(n, &mut rng);
                let b = random_symmetric(n, &mut rng);
                let exact = exact_quadform_cov(&a, &b).unwrap();
                let brute = enumerate_quadform_cov(&a, &b).unwrap();
                assert_abs_diff_eq!(exact, brute, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn enumeration_is_bilinear() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = random_symmetric(5, &mut rng);
        let b = random_symmetric(5, &mut rng);
        let two_a = &a * 2.0;
        assert_abs_diff_eq!(
            enumerate_quadform_cov(&two_a, &b).unwrap(),
            2.0 * enumerate_quadform_cov(&a, &b).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn leading_terms_cancel_for_identity() {
        for n in [4usize, 9, 30] {
            let id = DMatrix::identity(n, n);
            assert_abs_diff_eq!(leading_quadform_cov(&id, &id).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn leading_vs_exact_single_diagonal() {
        for n in [5usize, 10, 50] {
            let e1 = unit_diag(n, 0);
            let lead = leading_quadform_cov(&e1, &e1).unwrap();
            let nf = n as f64;
            assert_abs_diff_eq!(lead, 0.8 - 0.8 / nf, epsilon = 1e-14);
            let exact = exact_quadform_cov(&e1, &e1).unwrap();
            assert_abs_diff_eq!(exact, 0.8 - 12.0 / (5.0 * (nf * nf - 1.0)), epsilon = 1e-14);
            assert!((exact - lead).abs() < 1.0 / nf);
        }
    }

    #[test]
    fn leading_error_is_operator_norm_bounded() {
        // The remainder |exact - leading| stays a bounded multiple of
        // ||A|| * ||B||; the constant below was fitted on this generator and
        // holds with slack across n.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let fitted_c = 6.0;
        for n in [20usize, 50, 100, 200] {
            for _ in 0..5 {
                let a = random_symmetric(n, &mut rng);
                let b = random_symmetric(n, &mut rng);
                let na = a.clone().symmetric_eigen().eigenvalues.amax();
                let nb = b.clone().symmetric_eigen().eigenvalues.amax();
                let exact = exact_quadform_cov(&a, &b).unwrap();
                let lead = leading_quadform_cov(&a, &b).unwrap();
                assert!(
                    (exact - lead).abs() <= fitted_c * na * nb,
                    "n={n}: |{exact} - {lead}| > {fitted_c} * {na} * {nb}"
                );
            }
        }
    }

    #[test]
    fn terms_identity_from_zero_sum() {
        for n in [4usize, 10, 100] {
            let c = QuadFormCovTerms::new(n).unwrap();
            let nf = n as f64;
            assert_abs_diff_eq!(c.var_s1sq + (nf - 1.0) * c.cov_s1sq_s1s2, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(c.var_s1sq + (nf - 1.0) * c.cov_s1sq_s2sq, 0.0, epsilon = 1e-15);
        }
    }
}
