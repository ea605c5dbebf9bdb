//! Convergence diagnostics over several chains of scalar draws.

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Within-chain variance `W` and pooled estimate `var⁺ = (n−1)/n·W + B/n`.
fn variances(chains: &[&[f64]]) -> (f64, f64) {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    let b = if chains.len() > 1 { n * sample_var(&means) } else { 0.0 };
    (w, (n - 1.0) / n * w + b / n)
}

/// Potential scale reduction computed on chains split in half.
///
/// Chains that are all constant at the same value give 1; constant chains at
/// different values give infinity.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if half < 2 {
        return f64::NAN;
    }
    let splits: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[half..2 * half]])
        .collect();
    let (w, var_plus) = variances(&splits);
    if w == 0.0 {
        return if var_plus == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / w).sqrt()
}

fn autocovariance(c: &[f64], lag: usize) -> f64 {
    let m = mean(c);
    let n = c.len();
    c[..n - lag]
        .iter()
        .zip(&c[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain effective sample size with Geyer's initial positive and
/// monotone sequence estimators. Constant chains count as independent draws.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let m = chains.len();
    let total = (n * m) as f64;
    if n < 4 {
        return total;
    }
    let views: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let (w, var_plus) = variances(&views);
    if var_plus <= 0.0 || w <= 0.0 {
        return total;
    }
    let rho = |t: usize| -> f64 {
        let acov = views.iter().map(|c| autocovariance(c, t)).sum::<f64>() / m as f64;
        let c0 = views.iter().map(|c| autocovariance(c, 0)).sum::<f64>() / m as f64;
        // Chain-level autocorrelation adjusted by between-chain variance.
        1.0 - (c0 - acov) / var_plus
    };
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = tau.max(1.0 / total.log10().max(1.0));
    total / tau
}
