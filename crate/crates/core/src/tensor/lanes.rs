//! Separable per-mode passes over a row-major buffer.
//!
//! Each pass runs the same 1-D recurrence along every lane of every mode.
//! Running a 1-D transform along all modes realizes its tensor product,
//! which is how the product-order zeta/Möbius sums are computed in O(N·D).

fn for_each_lane(values: &mut [f64], dims: &[usize], mut f: impl FnMut(&mut [f64], usize, usize)) {
    let len: usize = dims.iter().product();
    debug_assert_eq!(values.len(), len);
    for d in 0..dims.len() {
        let n = dims[d];
        if n < 2 {
            continue;
        }
        let inner: usize = dims[d + 1..].iter().product();
        let outer = len / (n * inner);
        for o in 0..outer {
            for j in 0..inner {
                let start = o * n * inner + j;
                f(&mut values[start..], n, inner);
            }
        }
    }
}

/// `x_i <- sum_{k >= i} x_k` along every mode.
pub(crate) fn suffix_sum(values: &mut [f64], dims: &[usize]) {
    for_each_lane(values, dims, |lane, n, stride| {
        for k in (0..n - 1).rev() {
            lane[k * stride] += lane[(k + 1) * stride];
        }
    });
}

/// `x_i <- sum_{k <= i} x_k` along every mode.
pub(crate) fn prefix_sum(values: &mut [f64], dims: &[usize]) {
    for_each_lane(values, dims, |lane, n, stride| {
        for k in 1..n {
            lane[k * stride] += lane[(k - 1) * stride];
        }
    });
}

/// `x_i <- x_i - x_{i+1}` with `x_n = 0`, along every mode. Inverse of [`suffix_sum`].
pub(crate) fn forward_diff(values: &mut [f64], dims: &[usize]) {
    for_each_lane(values, dims, |lane, n, stride| {
        for k in 0..n - 1 {
            lane[k * stride] -= lane[(k + 1) * stride];
        }
    });
}

/// `x_i <- x_i - x_{i-1}` with `x_{-1} = 0`, along every mode. Inverse of [`prefix_sum`].
pub(crate) fn backward_diff(values: &mut [f64], dims: &[usize]) {
    for_each_lane(values, dims, |lane, n, stride| {
        for k in (1..n).rev() {
            lane[k * stride] -= lane[(k - 1) * stride];
        }
    });
}
