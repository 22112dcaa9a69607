/// Benjamini–Hochberg adjusted p-values (q-values), in input order.
///
/// q₍ⱼ₎ = min over k ≥ j of p₍ₖ₎·m/k for the ascending order p₍₁₎ ≤ … ≤ p₍ₘ₎,
/// capped at 1.
pub fn bh_fdr(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut q = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (j, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (j + 1) as f64);
        q[i] = running.min(1.0);
    }
    q
}
