//! Dormand-Prince 5(4) with embedded error control and the standard
//! fourth-order continuous extension.

use crate::error::{check_len, Error, Result};
use crate::solvers::DopriConfig;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Samples of an adaptive solve plus step statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    /// `(t, y(t))` at each requested sample time.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
}

fn axpy(y: &[f64], terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (a, k) in terms {
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += a * v;
        }
    }
    out
}

fn rms_norm(v: &[f64], scale: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter()
        .zip(scale)
        .map(|(a, s)| (a / s).powi(2))
        .sum::<f64>()
        / v.len() as f64)
        .sqrt()
}

/// Integrates `dy/dt = deriv(t, y)` from `t_span.0` to `t_span.1` and returns
/// the solution at `sample_times` (each within the span, non-decreasing).
pub fn dopri45_solve<F>(
    mut deriv: F,
    y0: &[f64],
    t_span: (f64, f64),
    sample_times: &[f64],
    cfg: &DopriConfig,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t_span must be increasing, got ({t0}, {t1})"
        )));
    }
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
        return Err(Error::InvalidArgument("rtol and atol must be > 0".into()));
    }
    for w in sample_times.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidArgument(
                "sample times must be non-decreasing".into(),
            ));
        }
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        if first < t0 || last > t1 {
            return Err(Error::InvalidArgument(
                "sample times must lie inside t_span".into(),
            ));
        }
    }

    let dim = y0.len();
    let mut evaluations = 0usize;
    let mut eval = |t: f64, y: &[f64], evaluations: &mut usize| -> Result<Vec<f64>> {
        *evaluations += 1;
        let d = deriv(t, y)?;
        check_len("dopri45 derivative", dim, d.len())?;
        Ok(d)
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = eval(t, &y, &mut evaluations)?;
    let span = t1 - t0;
    let mut h = match cfg.initial_step {
        Some(h) if h > 0.0 => h.min(span),
        Some(h) => {
            return Err(Error::InvalidArgument(format!(
                "initial step must be > 0, got {h}"
            )))
        }
        None => initial_step(&mut eval, t, &y, &k1, span, cfg, &mut evaluations)?,
    };

    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        samples.push((sample_times[next_sample], y.clone()));
        next_sample += 1;
    }

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    while t < t1 {
        if accepted + rejected >= cfg.max_steps {
            return Err(Error::TooManySteps {
                max_steps: cfg.max_steps,
                t,
            });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { h, t });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        let k2 = eval(t + C2 * h, &axpy(&y, &[(h * A21, &k1)]), &mut evaluations)?;
        let k3 = eval(
            t + C3 * h,
            &axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]),
            &mut evaluations,
        )?;
        let k4 = eval(
            t + C4 * h,
            &axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
            &mut evaluations,
        )?;
        let k5 = eval(
            t + C5 * h,
            &axpy(
                &y,
                &[
                    (h * A51, &k1),
                    (h * A52, &k2),
                    (h * A53, &k3),
                    (h * A54, &k4),
                ],
            ),
            &mut evaluations,
        )?;
        let k6 = eval(
            t + h,
            &axpy(
                &y,
                &[
                    (h * A61, &k1),
                    (h * A62, &k2),
                    (h * A63, &k3),
                    (h * A64, &k4),
                    (h * A65, &k5),
                ],
            ),
            &mut evaluations,
        )?;
        let y_new = axpy(
            &y,
            &[
                (h * A71, &k1),
                (h * A73, &k3),
                (h * A74, &k4),
                (h * A75, &k5),
                (h * A76, &k6),
            ],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = eval(t_new, &y_new, &mut evaluations)?;

        let err_vec: Vec<f64> = (0..dim)
            .map(|i| {
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            })
            .collect();
        let scale: Vec<f64> = (0..dim)
            .map(|i| cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs()))
            .collect();
        let err = rms_norm(&err_vec, &scale);
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            rejected += 1;
            h *= FAC_MIN;
            continue;
        }

        if err <= 1.0 {
            // dense output coefficients for this step
            let mut r: Vec<[f64; 5]> = Vec::with_capacity(dim);
            for i in 0..dim {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                r.push([
                    y[i],
                    ydiff,
                    bspl,
                    ydiff - h * k7[i] - bspl,
                    h * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]),
                ]);
            }
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let ts = sample_times[next_sample];
                let v = if ts == t_new {
                    y_new.clone()
                } else {
                    let th = (ts - t) / h;
                    let th1 = 1.0 - th;
                    r.iter()
                        .map(|c| c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4]))))
                        .collect()
                };
                samples.push((ts, v));
                next_sample += 1;
            }
            accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            h *= fac;
        } else {
            rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }

    Ok(OdeSolution {
        samples,
        accepted_steps: accepted,
        rejected_steps: rejected,
        evaluations,
    })
}

/// Classical starting-step heuristic. When the derivative vanishes at `y0`
/// and after a trial step, the solution is locally constant and the whole
/// span is attempted at once.
fn initial_step<E>(
    eval: &mut E,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    cfg: &DopriConfig,
    evaluations: &mut usize,
) -> Result<f64>
where
    E: FnMut(f64, &[f64], &mut usize) -> Result<Vec<f64>>,
{
    let scale: Vec<f64> = y0.iter().map(|v| cfg.atol + cfg.rtol * v.abs()).collect();
    let d0 = rms_norm(y0, &scale);
    let d1 = rms_norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = axpy(y0, &[(h0, f0)]);
    let f1 = eval(t0 + h0, &y1, evaluations)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, &scale) / h0;
    if d1 == 0.0 && d2 == 0.0 {
        return Ok(span);
    }
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
