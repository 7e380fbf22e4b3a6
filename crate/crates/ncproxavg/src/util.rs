//! Small numeric helpers shared across modules.

/// Euclidean distance between two points of equal dimension.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Squared Euclidean distance.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Hausdorff distance between two nonempty finite point sets.
///
/// Returns `f64::INFINITY` if exactly one of the sets is empty and `0.0`
/// if both are.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let one_sided = |from: &[Vec<f64>], to: &[Vec<f64>]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Hausdorff distance between two sets of scalars.
pub fn hausdorff_1d(a: &[f64], b: &[f64]) -> f64 {
    let lift = |s: &[f64]| s.iter().map(|&v| vec![v]).collect::<Vec<_>>();
    hausdorff(&lift(a), &lift(b))
}

/// Diameter (largest pairwise distance) of a finite point set.
pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut d = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = f64::max(d, dist(p, q));
        }
    }
    d
}

/// Formats a float with 17 significant digits so values round-trip exactly.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Aitken Δ² extrapolation of the tail of a convergent scalar sequence.
///
/// Falls back to the last element when the increments are too small for the
/// acceleration formula to be trustworthy.
pub fn aitken_limit(seq: &[f64]) -> f64 {
    let n = seq.len();
    if n < 3 {
        return *seq.last().expect("nonempty sequence");
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let denom = c - 2.0 * b + a;
    if denom.abs() < 1e-14 * (1.0 + c.abs()) {
        return c;
    }
    let accel = c - (c - b) * (c - b) / denom;
    if accel.is_finite() {
        accel
    } else {
        c
    }
}
