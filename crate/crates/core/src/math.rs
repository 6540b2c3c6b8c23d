pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// In-place softmax; returns the normalized vector.
pub(crate) fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = exp(*v - max);
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// log(sum(exp(xs))) with -inf for an empty or all -inf input.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + ln(xs.map(|x| exp(x - max)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_logit_inverse() {
        for p in [0.05, 0.3, 0.5, 0.95] {
            assert!((sigmoid(logit(p)) - p).abs() < 1e-12);
        }
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let mut z = [0.0; 4];
        softmax(&mut z);
        assert!(z.iter().all(|v| (*v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn lse_handles_neg_inf() {
        let v = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert_eq!(log_sum_exp(v.iter().copied()), f64::NEG_INFINITY);
        let w = [0.0, 0.0];
        assert!((log_sum_exp(w.iter().copied()) - ln(2.0)).abs() < 1e-15);
    }
}
