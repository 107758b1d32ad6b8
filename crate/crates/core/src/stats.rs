//! Small statistical helpers shared across scoring, sampling diagnostics,
//! and the conditional-independence test.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n); 0 for fewer than two values.
pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Lower empirical quantile (type 1): the `ceil(q * n)`-th smallest value,
/// clamped to the data range; `q = 0` yields the minimum, `q = 1` the
/// maximum. `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let n = sorted.len();
    let k = (q * n as f64).ceil() as usize;
    sorted[k.saturating_sub(1).min(n - 1)]
}

/// Pearson correlation; `None` when either side is degenerate (fewer than
/// two points or zero variance).
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Average ranks in 1..=n, with ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN in rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average of ranks i+1..=j+1.
        let shared = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS distance of empty sample");
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("NaN in KS input"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("NaN in KS input"));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut best = 0.0f64;
    while ia < sa.len() && ib < sb.len() {
        let va = sa[ia];
        let vb = sb[ib];
        let v = va.min(vb);
        while ia < sa.len() && sa[ia] <= v {
            ia += 1;
        }
        while ib < sb.len() && sb[ib] <= v {
            ib += 1;
        }
        best = best.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    best
}

/// `log(sum_i exp(x_i))`, stable against underflow. Empty input or all
/// `-inf` yields `-inf` (a sum of zero mass).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
