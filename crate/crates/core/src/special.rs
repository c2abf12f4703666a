//! Upper incomplete gamma function for the small orders met by the kernels.

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `(Gamma(1 + a) - 1) / a`, smooth through `a = 0`.
fn gamma1m1_over(a: f64) -> f64 {
    if a.abs() < 1e-8 {
        let c1 = 0.5 * EULER_GAMMA * EULER_GAMMA + std::f64::consts::PI.powi(2) / 12.0;
        return -EULER_GAMMA + c1 * a;
    }
    // Divide by the representable increment so that the rounding of 1 + a
    // only perturbs the argument.
    let ap = (1.0 + a) - 1.0;
    libm::lgamma(1.0 + ap).exp_m1() / ap
}

/// `(z^a - 1) / a`, equal to `ln z` at `a = 0`.
fn powm1_over(a: f64, z: f64) -> f64 {
    let l = z.ln();
    if a == 0.0 {
        l
    } else {
        (a * l).exp_m1() / a
    }
}

/// Upper incomplete gamma `Gamma(a, z) = int_z^inf t^{a-1} e^{-t} dt` for
/// `a > -1`, `z > 0`.
pub fn upper_gamma(a: f64, z: f64) -> f64 {
    debug_assert!(a > -1.0, "order {a} out of range");
    debug_assert!(z > 0.0, "argument {z} must be positive");
    if a > 1.0 {
        // Gamma(a, z) = (a - 1) Gamma(a - 1, z) + z^{a-1} e^{-z}
        return (a - 1.0) * upper_gamma(a - 1.0, z) + ((a - 1.0) * z.ln() - z).exp();
    }
    if z > 745.0 {
        return 0.0;
    }
    if z <= 1.5 {
        series(a, z)
    } else {
        continued_fraction(a, z)
    }
}

fn series(a: f64, z: f64) -> f64 {
    // Gamma(a) - gamma(a, z) with the k = 0 term folded into the first two
    // pieces so that nothing cancels as a -> 0.
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -z / kf;
        let add = term / (a + kf);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    gamma1m1_over(a) - powm1_over(a, z) - z.powf(a) * sum
}

fn continued_fraction(a: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * z.ln() - z).exp() * h
}
