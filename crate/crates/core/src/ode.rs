//! Fixed-step explicit integrators over fixed-size state vectors.

/// One classical fourth-order Runge-Kutta step of an autonomous system.
///
/// Inputs are held constant across the step by the caller (zero-order hold),
/// so the right-hand side only sees the state.
#[inline]
pub fn rk4_step<const N: usize, F>(rhs: F, x: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = rhs(x);
    let k2 = rhs(&axpy(x, 0.5 * dt, &k1));
    let k3 = rhs(&axpy(x, 0.5 * dt, &k2));
    let k4 = rhs(&axpy(x, dt, &k3));
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(x: &[f64; N], a: f64, y: &[f64; N]) -> [f64; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] += a * y[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        // x' = -x, x(0) = 1
        let run = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let mut x = [1.0];
            for _ in 0..n {
                x = rk4_step(|s: &[f64; 1]| [-s[0]], &x, dt);
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let coarse = run(0.1);
        let fine = run(0.05);
        let ratio = coarse / fine;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn harmonic_oscillator_keeps_energy() {
        let mut x = [1.0, 0.0];
        for _ in 0..1000 {
            x = rk4_step(|s: &[f64; 2]| [s[1], -s[0]], &x, 0.01);
        }
        let energy = x[0] * x[0] + x[1] * x[1];
        assert!((energy - 1.0).abs() < 1e-9);
        assert!((x[0] - 10.0f64.cos()).abs() < 1e-9);
    }
}
