//! Small tail-probability helpers used for truncation bounds and window sizing.

/// `ln(k!)` by direct summation; exact enough for the modest `k` used here.
pub(crate) fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `P(Poisson(mu) >= k)`, summed in log space so that large `mu` is safe.
pub fn poisson_upper_tail(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mu <= 0.0 {
        return 0.0;
    }
    // Below the mode the complement converges faster.
    if (k as f64) <= mu {
        return (1.0 - poisson_cdf(mu, k - 1)).max(0.0);
    }
    let ln_mu = mu.ln();
    let mut ln_term = -mu + k as f64 * ln_mu - ln_factorial(k);
    let mut total = 0.0;
    let mut j = k;
    loop {
        let term = ln_term.exp();
        total += term;
        if term < 1e-18 * total || term == 0.0 {
            break;
        }
        j += 1;
        ln_term += ln_mu - (j as f64).ln();
    }
    total.min(1.0)
}

/// `P(Poisson(mu) <= k)`.
pub fn poisson_cdf(mu: f64, k: u64) -> f64 {
    if mu <= 0.0 {
        return 1.0;
    }
    let ln_mu = mu.ln();
    let mut ln_term = -mu;
    let mut total = ln_term.exp();
    for j in 1..=k {
        ln_term += ln_mu - (j as f64).ln();
        total += ln_term.exp();
    }
    total.min(1.0)
}

/// `P(Binomial(n, rho) < m)`: the chance that `n` Bernoulli sites hold fewer
/// than `m` particles.
pub fn binomial_shortfall(n: u64, rho: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if rho >= 1.0 {
        return if n >= m { 0.0 } else { 1.0 };
    }
    let (ln_r, ln_1r) = (rho.ln(), (1.0 - rho).ln());
    let ln_n_fact = ln_factorial(n);
    (0..m.min(n + 1))
        .map(|j| {
            (ln_n_fact - ln_factorial(j) - ln_factorial(n - j)
                + j as f64 * ln_r
                + (n - j) as f64 * ln_1r)
                .exp()
        })
        .sum::<f64>()
        .min(1.0)
}
