/// Largest-remainder rounding of non-negative real `shares` to integers
/// summing to `total`.
///
/// Each share is floored, then the leftover units go to the largest
/// fractional parts; ties go to the lowest index. `total` must not exceed
/// the floor of the share sum plus the number of shares.
pub fn largest_remainder(shares: &[f64], total: usize) -> Vec<usize> {
    let mut out: Vec<usize> = shares.iter().map(|s| s.max(0.0).floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    if assigned >= total {
        return out;
    }
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a].max(0.0) - shares[a].max(0.0).floor();
        let fb = shares[b].max(0.0) - shares[b].max(0.0).floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        out[i] += 1;
    }
    out
}
