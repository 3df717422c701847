//! Dense vector helpers with a fixed, documented summation order.
//!
//! Every aggregation in the simulator (minibatch means, client averages,
//! estimator updates) must produce bit-identical results across reruns and
//! across worker layouts. These helpers pin the arithmetic down: sums always
//! accumulate left to right over ascending indices, and means divide the
//! finished sum exactly once. Callers are responsible for presenting their
//! operands in a canonical order (the engine sorts client subsets and batch
//! indices ascending before aggregating).
//!
//! Length mismatches are programming errors on the caller's side, so these
//! functions assert rather than return `Result` — the checks are hoisted out
//! of the loops and cost nothing in the hot paths.

/// `y += a * x`, element-wise.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(
        x.len(),
        y.len(),
        "axpy length mismatch: x has {} entries, y has {}",
        x.len(),
        y.len()
    );
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Inner product, accumulated over ascending indices.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(
        x.len(),
        y.len(),
        "dot length mismatch: x has {} entries, y has {}",
        x.len(),
        y.len()
    );
    let mut acc = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        acc += xi * yi;
    }
    acc
}

/// Squared Euclidean norm.
pub fn norm_sq(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for xi in x {
        acc += xi * xi;
    }
    acc
}

/// `x - y` as a new vector.
pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(
        x.len(),
        y.len(),
        "sub length mismatch: x has {} entries, y has {}",
        x.len(),
        y.len()
    );
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// In-place scaling `x *= a`.
pub fn scale(x: &mut [f64], a: f64) {
    for xi in x {
        *xi *= a;
    }
}

/// Mean of a non-empty list of equal-length vectors: vectors are summed in
/// the order given (index 0 first), then divided by the count exactly once.
pub fn mean_vecs(vecs: &[Vec<f64>]) -> Vec<f64> {
    assert!(!vecs.is_empty(), "mean_vecs needs at least one vector");
    let dim = vecs[0].len();
    let mut acc = vec![0.0; dim];
    for v in vecs {
        assert_eq!(
            v.len(),
            dim,
            "mean_vecs length mismatch: expected {dim}, found {}",
            v.len()
        );
        for (ai, vi) in acc.iter_mut().zip(v) {
            *ai += vi;
        }
    }
    let inv = 1.0 / vecs.len() as f64;
    scale(&mut acc, inv);
    acc
}

/// True iff every entry is a finite number (no NaN, no infinities).
pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norm_sq_of_3_4_is_25() {
        assert_eq!(norm_sq(&[3.0, 4.0]), 25.0);
    }

    #[test]
    fn mean_of_two_vectors_is_halfway() {
        assert_eq!(
            mean_vecs(&[vec![1.0, 2.0], vec![3.0, 4.0]]),
            vec![2.0, 3.0]
        );
    }

    #[test]
    fn axpy_accumulates_into_destination() {
        let mut y = vec![1.0, 1.0];
        axpy(2.0, &[10.0, -3.0], &mut y);
        assert_eq!(y, vec![21.0, -5.0]);
    }

    #[test]
    fn mean_of_single_vector_divides_by_one_and_is_bitwise_identity() {
        let v = vec![0.1, -0.7, 3.3e-9];
        let m = mean_vecs(&[v.clone()]);
        // x / 1.0 is exact in IEEE arithmetic, so a singleton mean must be
        // bit-identical to its input.
        assert_eq!(m, v);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn dot_rejects_mismatched_lengths() {
        dot(&[1.0], &[1.0, 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn mean_is_permutation_of_sum_then_single_divide(
            xs in proptest::collection::vec(
                proptest::collection::vec(-1e6f64..1e6, 4),
                1..20,
            )
        ) {
            let m = mean_vecs(&xs);
            let mut acc = vec![0.0; 4];
            for v in &xs {
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
            }
            // The convention is a single reciprocal multiply after the sum.
            let inv = 1.0 / xs.len() as f64;
            for (a, &mi) in acc.iter().zip(&m) {
                prop_assert_eq!(a * inv, mi);
            }
        }

        #[test]
        fn norm_sq_is_dot_with_self(x in proptest::collection::vec(-1e3f64..1e3, 0..32)) {
            prop_assert_eq!(norm_sq(&x), dot(&x, &x));
        }
    }
}
