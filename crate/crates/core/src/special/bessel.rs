//! Bessel functions: modified second kind K_nu for real order, and the first
//! kind orders the Hankel transform needs (J0, J1, J_{±1/2}).
//!
//! K_nu follows the classic two-regime scheme: Temme's series for x < 2 and
//! the Steed/Temme continued fraction CF2 for x >= 2, both for the reduced
//! order |mu| <= 1/2, followed by upward recurrence.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Returns (Gamma(1+nu), Gamma(1-nu), g1, g2) with
/// g1 = (1/Gamma(1-nu) - 1/Gamma(1+nu)) / (2 nu) and
/// g2 = (1/Gamma(1-nu) + 1/Gamma(1+nu)) / 2,
/// for |nu| <= 1/2, stable through nu = 0.
fn temme_gamma(nu: f64) -> (f64, f64, f64, f64) {
    let g_1pnu = super::gamma(1.0 + nu);
    let g_1mnu = super::gamma(1.0 - nu);
    let r_p = 1.0 / g_1pnu;
    let r_m = 1.0 / g_1mnu;
    let g2 = 0.5 * (r_m + r_p);
    let g1 = if nu.abs() < 1e-4 {
        // Taylor coefficients of 1/Gamma(1+x): 1, g, g^2/2 - pi^2/12, ...
        -EULER_GAMMA + 0.042_002_635_034_095_24 * nu * nu
    } else {
        (r_m - r_p) / (2.0 * nu)
    };
    (g_1pnu, g_1mnu, g1, g2)
}

/// e^x K_mu(x) and e^x K_{mu+1}(x) by Temme's series; requires |mu| <= 1/2,
/// 0 < x <= 2.
fn k_scaled_temme(mu: f64, x: f64) -> (f64, f64) {
    let max_iter = 15000;
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinhrat = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let ex = x.exp();

    let (g_1pmu, g_1mmu, g1, g2) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * g_1pmu;
    let mut qk = 0.5 * half_x_mu * g_1mmu;
    let mut hk;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    let mut k = 0usize;
    while k < max_iter {
        k += 1;
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        hk = -kf * fk + pk;
        let del0 = ck * fk;
        let del1 = ck * hk;
        sum0 += del0;
        sum1 += del1;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            break;
        }
    }
    (sum0 * ex, sum1 * 2.0 / x * ex)
}

/// e^x K_mu(x) and e^x K_{mu+1}(x) via Steed's CF2; requires |mu| <= 1/2,
/// x >= 2.
fn k_scaled_cf2(mu: f64, x: f64) -> (f64, f64) {
    let max_iter = 10000;
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;

    let mut qi = 0.0;
    let mut qip1 = 1.0;

    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;

    for i in 2..=max_iter {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi = (bi * di - 1.0) * delhi;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    hi *= -a1;

    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mup1 = k_mu * (mu + x + 0.5 - hi) / x;
    (k_mu, k_mup1)
}

/// Modified Bessel function of the second kind K_nu(x), nu >= 0, x > 0.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k requires x > 0, got {x}");
    assert!(nu >= 0.0, "bessel_k requires nu >= 0, got {nu}");
    let steps = (nu + 0.5).floor() as usize;
    let mu = nu - steps as f64; // -1/2 <= mu <= 1/2

    let (k_mu, k_mup1) = if x < 2.0 {
        k_scaled_temme(mu, x)
    } else {
        k_scaled_cf2(mu, x)
    };

    // upward recurrence in the order; values only grow, so it is stable
    let mut k_lo = k_mu;
    let mut k_hi = k_mup1;
    let mut rescale_log = 0.0f64;
    for n in 0..steps {
        let next = 2.0 * (mu + n as f64 + 1.0) / x * k_hi + k_lo;
        k_lo = k_hi;
        k_hi = next;
        if k_hi.abs() > 1e280 {
            k_lo *= 1e-280;
            k_hi *= 1e-280;
            rescale_log += 280.0 * std::f64::consts::LN_10;
        }
    }
    let scaled = if steps == 0 { k_mu } else { k_lo };
    scaled * (rescale_log - x).exp()
}

/// J0 and J1 by power series for x <= 15 and the Hankel asymptotic
/// expansion beyond; absolute error stays near 1e-11 at the crossover.
fn bessel_j_small(nu_int: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu_int == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0f64;
    loop {
        term *= -q / (k * (k + nu_int as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn bessel_j_asym(nu: f64, x: f64) -> f64 {
    let omega = x - (2.0 * nu + 1.0) * PI / 4.0;
    let fournu2 = 4.0 * nu * nu;
    let mut p = 0.0f64;
    let mut q = 0.0f64;
    let mut t = 1.0f64; // a_k / x^k
    let mut prev = f64::INFINITY;
    for k in 0..40u32 {
        if t.abs() > prev {
            break; // divergent tail reached
        }
        prev = t.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * t;
        } else {
            q += sign * t;
        }
        let kf = k as f64;
        t *= (fournu2 - (2.0 * kf + 1.0).powi(2)) / (8.0 * (kf + 1.0) * x);
        if t.abs() < 1e-17 {
            let sign = if ((k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if (k + 1) % 2 == 0 {
                p += sign * t;
            } else {
                q += sign * t;
            }
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 15.0 {
        bessel_j_small(0, x)
    } else {
        bessel_j_asym(0.0, x)
    }
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 15.0 {
        bessel_j_small(1, ax)
    } else {
        bessel_j_asym(1.0, ax)
    };
    if x < 0.0 { -v } else { v }
}

/// J_{1/2} or J_{-1/2} in closed form; `nu` must be exactly ±0.5.
pub fn bessel_jnu_half(nu: f64, x: f64) -> f64 {
    debug_assert!(nu == 0.5 || nu == -0.5);
    let c = (2.0 / (PI * x)).sqrt();
    if nu > 0.0 { c * x.sin() } else { c * x.cos() }
}
