/// `k^e`, snapped to the nearest integer when within floating-point noise of it.
pub(crate) fn pow_snapped(k: usize, e: f64) -> f64 {
    let v = (k as f64).powf(e);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        v
    }
}

/// `⌊k^e⌋` with the snapping of [`pow_snapped`].
pub(crate) fn floor_pow(k: usize, e: f64) -> usize {
    pow_snapped(k, e).floor() as usize
}

/// `⌈k^e⌉` with the snapping of [`pow_snapped`].
pub(crate) fn ceil_pow(k: usize, e: f64) -> usize {
    pow_snapped(k, e).ceil() as usize
}
