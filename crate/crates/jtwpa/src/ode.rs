//! Embedded Dormand-Prince 5(4) integrator for small complex-valued
//! systems.
//!
//! The coupled-mode equations propagated here are smooth and non-stiff:
//! phase factors rotate on millimetre scales while the device is roughly a
//! centimetre, so an explicit pair with step control is the right tool.
//! The state is a fixed-size array of complex amplitudes; the caller is
//! expected to pre-normalise it to order unity so the mixed absolute and
//! relative error test is meaningful.

use crate::C64;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted integration node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node<const N: usize> {
    pub x: f64,
    pub y: [C64; N],
}

#[derive(Debug)]
pub(crate) enum OdeError<const N: usize> {
    /// Step budget spent before reaching the right endpoint. Carries the
    /// nodes accepted so far so callers can surface a partial trajectory.
    StepsExhausted {
        max_steps: usize,
        x: f64,
        nodes: Vec<Node<N>>,
    },
    /// Step size collapsed or the state stopped being finite.
    NotFinite { x: f64 },
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// Fifth-order weights; the seventh stage reuses them (FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference against the embedded fourth-order weights.
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 - -92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..N {
            out[i] += h * w * k[i];
        }
    }
    out
}

/// Integrates `dy/dx = f(x, y)` from `x0` to `x1 > x0`, recording every
/// accepted node. The endpoint lands exactly on `x1` (last step clipped).
pub(crate) fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    ctrl: &StepControl,
) -> Result<Vec<Node<N>>, OdeError<N>>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    let span = x1 - x0;
    debug_assert!(span > 0.0);
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut nodes = vec![Node { x, y }];
    let mut h = 1e-3 * span;
    let h_min = span * 1e-14;

    for _ in 0..ctrl.max_steps {
        if x >= x1 {
            return Ok(nodes);
        }
        if h > x1 - x {
            h = x1 - x;
        }

        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            x + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            x + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y5 = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(x + h, &y5);

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = ctrl.atol + ctrl.rtol * y[i].norm().max(y5[i].norm());
            let r = e.norm() / scale;
            err_sq += r * r;
            finite &= y5[i].re.is_finite() && y5[i].im.is_finite();
        }
        let err = (err_sq / N as f64).sqrt();
        if !finite || !err.is_finite() {
            return Err(OdeError::NotFinite { x });
        }

        if err <= 1.0 {
            x += h;
            y = y5;
            k1 = k7;
            nodes.push(Node { x, y });
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min {
            return Err(OdeError::NotFinite { x });
        }
    }
    if x >= x1 {
        Ok(nodes)
    } else {
        Err(OdeError::StepsExhausted {
            max_steps: ctrl.max_steps,
            x,
            nodes,
        })
    }
}
