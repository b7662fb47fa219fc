/// Euclidean projection of `v` onto `{w ≥ 0, Σw = radius}` by sorting and
/// thresholding. Feasible inputs are returned unchanged.
pub fn project_simplex(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "simplex radius must be positive");
    let sum: f64 = v.iter().sum();
    if v.iter().all(|&x| x >= 0.0)
        && (sum - radius).abs() <= 4.0 * f64::EPSILON * radius * v.len() as f64
    {
        return v.to_vec();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - radius) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection of `v` onto `{w ≥ 0, Σw = radius}` in the metric
/// `Σ (w_x − v_x)² / d_x`; the solution is `w_x = max(0, v_x − θ·d_x)`.
/// With unit weights this coincides with [`project_simplex`].
pub(crate) fn project_simplex_weighted(v: &[f64], weights: &[f64], radius: f64) -> Vec<f64> {
    debug_assert_eq!(v.len(), weights.len());
    let mut order: Vec<usize> = (0..v.len()).collect();
    // descending breakpoints v_x/d_x
    order.sort_by(|&a, &b| (v[b] / weights[b]).total_cmp(&(v[a] / weights[a])));
    let mut value_sum = 0.0;
    let mut weight_sum = 0.0;
    let mut theta = 0.0;
    for &x in &order {
        value_sum += v[x];
        weight_sum += weights[x];
        let t = (value_sum - radius) / weight_sum;
        if v[x] - t * weights[x] > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v
        .iter()
        .zip(weights)
        .map(|(&x, &d)| (x - theta * d).max(0.0))
        .collect();
    // absorb rounding so the result sums to the radius
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        let largest = (0..w.len())
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
            .unwrap_or(0);
        w[largest] = (w[largest] + radius - total).max(0.0);
    }
    w
}
