//! Bessel functions of the first kind on integer orders, by Miller's
//! downward recurrence normalized with `J0 + 2 sum J_2k = 1`.

/// `J_0(x) ..= J_order(x)` for `x >= 0`.
pub fn bessel_j_orders(x: f64, order: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument must be finite and non-negative");
    let mut out = vec![0.0; order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    // start well above both the requested order and the turning point
    let mut start = order.max(x.ceil() as usize) + 30 + (10.0 * x.cbrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0f64; // J_{k+1}
    let mut cur = 1e-300f64; // J_k
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        if k <= order {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out[0] = cur;
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}
