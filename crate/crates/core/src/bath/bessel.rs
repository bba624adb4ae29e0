//! Bessel functions of the first kind and Chebyshev polynomials.

/// `J_0(x), …, J_{count-1}(x)` in a single pass.
///
/// Miller's backward recurrence `J_{k-1} = (2k/x) J_k − J_{k+1}` started well
/// above `max(count, |x|)` and normalized with `J_0 + 2 Σ J_{2j} = 1`. Negative
/// arguments use `J_k(−x) = (−1)^k J_k(x)`.
pub fn bessel_j_ladder(count: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = count.max(ax.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let mut next = 0.0; // J_{k+1}
    let mut current = 1e-300_f64.max(f64::MIN_POSITIVE); // J_k, arbitrary scale
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k < count {
            out[k] = current;
        }
        if k % 2 == 0 {
            norm += 2.0 * current;
        }
        let prev = (2.0 * k as f64 / ax) * current - next;
        next = current;
        current = prev;
        if current.abs() > 1e250 {
            let scale = 1e-250;
            current *= scale;
            next *= scale;
            norm *= scale;
            for v in out.iter_mut().skip(k.min(count)) {
                *v *= scale;
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for v in out.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
    }
    out
}

/// `T_0(x), …, T_{count-1}(x)` by the three-term recurrence.
pub fn chebyshev_t_ladder(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut current) = (1.0, x);
    for k in 0..count {
        match k {
            0 => out.push(1.0),
            1 => out.push(x),
            _ => {
                let next = 2.0 * x * current - prev;
                prev = current;
                current = next;
                out.push(next);
            }
        }
    }
    out
}
