//! Classical fixed-step fourth-order Runge-Kutta.

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;

/// Where within a step a right-hand side is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start,
    Mid,
    End,
}

/// One RK4 step of size `h` (which may be negative).
pub fn rk4_step<S, F>(y: &S, h: f64, mut f: F) -> S
where
    S: Clone + Add<Output = S> + Mul<C64, Output = S>,
    F: FnMut(Stage, &S) -> S,
{
    let half = C64::from(0.5 * h);
    let k1 = f(Stage::Start, y);
    let k2 = f(Stage::Mid, &(y.clone() + k1.clone() * half));
    let k3 = f(Stage::Mid, &(y.clone() + k2.clone() * half));
    let k4 = f(Stage::End, &(y.clone() + k3.clone() * C64::from(h)));
    let sixth = C64::from(h / 6.0);
    y.clone() + (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * sixth
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn fourth_order_on_scalar_exponential() {
        let lambda = C64::new(-0.5, 2.0);
        let run = |steps: usize| {
            let h = 1.0 / steps as f64;
            let mut y = DVector::from_element(1, C64::new(1.0, 0.0));
            for _ in 0..steps {
                y = rk4_step(&y, h, |_, v| v * lambda);
            }
            (y[0] - lambda.exp()).norm()
        };
        let ratio = run(20) / run(40);
        assert!((ratio - 16.0).abs() < 1.0, "error ratio {ratio}");
    }

    #[test]
    fn negative_step_reverses() {
        let lambda = C64::new(-1.0, 0.3);
        let mut y = DVector::from_element(1, C64::new(1.0, 0.0));
        for _ in 0..100 {
            y = rk4_step(&y, 0.01, |_, v| v * lambda);
        }
        for _ in 0..100 {
            y = rk4_step(&y, -0.01, |_, v| v * lambda);
        }
        assert!((y[0] - C64::new(1.0, 0.0)).norm() < 1e-9);
    }
}
