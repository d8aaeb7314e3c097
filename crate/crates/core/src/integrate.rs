//! Adaptive Dormand–Prince 5(4) integrator with dense output and a single
//! terminal event.
//!
//! The event is *guarded*: stance starts exactly on the liftoff surface
//! (compression zero), so the crossing test is only armed once the caller's
//! predicate has returned `true`. After arming, a sign change of the event
//! function across an accepted step is bracketed and bisected on the step's
//! continuous extension until the bracket is narrower than
//! [`IntegratorSettings::event_refine_tol`].
//!
//! Switch functions mark surfaces where the right-hand side has a kink (a
//! clip or saturation boundary). A step that would straddle one is retaken
//! to end just past it, so no continuous extension spans the kink.

use crate::error::SolveError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step the controller may take [s].
    pub max_step: f64,
    /// Width of the final event bracket [s].
    pub event_refine_tol: f64,
    /// Hard horizon [s].
    pub t_max: f64,
    /// Spacing of the uniform output grid [s].
    pub sample_dt: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 5e-4,
            event_refine_tol: 1e-10,
            t_max: 5.0,
            sample_dt: 1e-4,
        }
    }
}

impl IntegratorSettings {
    fn check(&self) -> Result<(), SolveError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.rel_tol) {
            return Err(SolveError::InvalidSettings("rel_tol must be positive"));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol >= 0.0) {
            return Err(SolveError::InvalidSettings("abs_tol must be non-negative"));
        }
        if !positive(self.max_step) {
            return Err(SolveError::InvalidSettings("max_step must be positive"));
        }
        if !positive(self.event_refine_tol) {
            return Err(SolveError::InvalidSettings(
                "event_refine_tol must be positive",
            ));
        }
        if !positive(self.t_max) {
            return Err(SolveError::InvalidSettings("t_max must be positive"));
        }
        if !positive(self.sample_dt) {
            return Err(SolveError::InvalidSettings("sample_dt must be positive"));
        }
        Ok(())
    }
}

/// Which sign change of the event function terminates integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    /// Positive to non-positive.
    Falling,
    /// Negative to non-negative.
    Rising,
    Either,
}

impl Crossing {
    fn fired(self, before: f64, after: f64) -> bool {
        match self {
            Crossing::Falling => before > 0.0 && after <= 0.0,
            Crossing::Rising => before < 0.0 && after >= 0.0,
            Crossing::Either => (before > 0.0 && after <= 0.0) || (before < 0.0 && after >= 0.0),
        }
    }

    /// True when `value` lies on the far side of the crossing.
    fn past(self, value: f64, before: f64) -> bool {
        match self {
            Crossing::Falling => value <= 0.0,
            Crossing::Rising => value >= 0.0,
            Crossing::Either => value == 0.0 || value.signum() != before.signum(),
        }
    }
}

/// A terminal event `value(t, y) = 0`, armed once `armed(t, y)` holds.
pub struct Event<'a, const N: usize> {
    pub value: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub armed: &'a dyn Fn(f64, &[f64; N]) -> bool,
    pub direction: Crossing,
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    coeff: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeff;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }

    fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Piecewise-polynomial interpolant over all accepted steps.
#[derive(Debug, Clone)]
pub struct DenseOutput<const N: usize> {
    segments: Vec<Segment<N>>,
    t_end: f64,
    y_end: [f64; N],
}

impl<const N: usize> DenseOutput<N> {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// State at `t`, clamped to the integrated interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if t >= self.t_end {
            return self.y_end;
        }
        let first = &self.segments[0];
        if t <= first.t0 {
            return first.coeff[0];
        }
        let idx = self.segments.partition_point(|s| s.t1() < t);
        self.segments[idx.min(self.segments.len() - 1)].eval(t)
    }
}

#[derive(Debug, Clone)]
pub struct SampledSolution<const N: usize> {
    /// Uniform grid `i·sample_dt` followed by the final instant.
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub terminal_time: Option<f64>,
    pub terminated_by_event: bool,
    pub sample_dt: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub dense: DenseOutput<N>,
}

impl<const N: usize> SampledSolution<N> {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("solution has at least one sample")
    }

    pub fn final_state(&self) -> [f64; N] {
        *self
            .states
            .last()
            .expect("solution has at least one sample")
    }

    /// Number of leading samples that sit exactly on the uniform grid.
    pub fn grid_len(&self) -> usize {
        let n = self.times.len();
        let last = self.times[n - 1];
        if n >= 2 && last == (n - 1) as f64 * self.sample_dt {
            n
        } else {
            n - 1
        }
    }
}

// Dormand–Prince 5(4) coefficients.
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

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn rms_norm<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    if N == 0 {
        return 0.0;
    }
    let sum: f64 = v.iter().zip(scale).map(|(x, s)| (x / s) * (x / s)).sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    rhs: &F,
    y0: &[f64; N],
    f0: &[f64; N],
    s: &IntegratorSettings,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let scale: [f64; N] = std::array::from_fn(|i| s.abs_tol + s.rel_tol * y0[i].abs());
    let d0 = rms_norm(y0, &scale);
    let d1 = rms_norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = combine(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = rms_norm(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(s.max_step)
}

/// A scalar function whose sign change marks a kink in the right-hand side.
pub type Switch<'a, const N: usize> = &'a dyn Fn(f64, &[f64; N]) -> f64;

/// Integrates `y' = rhs(t, y)` from `t = 0` until the event fires or, when no
/// event is given, until `t_max`.
pub fn solve<const N: usize, F>(
    rhs: F,
    state0: [f64; N],
    settings: &IntegratorSettings,
    event: Option<&Event<'_, N>>,
) -> Result<SampledSolution<N>, SolveError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    solve_switched(rhs, state0, settings, event, &[])
}

/// [`solve`] with steps landed on every sign change of `switches`.
pub fn solve_switched<const N: usize, F>(
    rhs: F,
    state0: [f64; N],
    settings: &IntegratorSettings,
    event: Option<&Event<'_, N>>,
    switches: &[Switch<'_, N>],
) -> Result<SampledSolution<N>, SolveError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    settings.check()?;
    if state0.iter().any(|x| !x.is_finite()) {
        return Err(SolveError::NonFinite { t: 0.0 });
    }

    let mut t = 0.0_f64;
    let mut y = state0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&rhs, &y, &k1, settings);
    let mut segments: Vec<Segment<N>> = Vec::new();
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let mut armed = event.is_some_and(|e| (e.armed)(t, &y));
    let mut e_prev = event.map_or(0.0, |e| (e.value)(t, &y));
    let mut terminal: Option<(f64, [f64; N])> = None;
    let mut s_prev: Vec<f64> = switches.iter().map(|s| s(t, &y)).collect();
    let mut landing = false;

    loop {
        let remaining = settings.t_max - t;
        if remaining <= 0.0 {
            if event.is_some() {
                return Err(SolveError::HorizonExceeded {
                    t_max: settings.t_max,
                });
            }
            break;
        }
        h = h.min(settings.max_step);
        if h >= remaining {
            h = remaining;
        }
        if h < 1e-15 * t.abs().max(1.0) {
            return Err(SolveError::StepUnderflow { t, step: h });
        }

        let k2 = rhs(t + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if h == remaining {
            settings.t_max
        } else {
            t + h
        };
        let k7 = rhs(t_new, &y_new);

        let err_vec: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let scale: [f64; N] = std::array::from_fn(|i| {
            settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs())
        });
        let err = rms_norm(&err_vec, &scale);
        let finite = err.is_finite() && y_new.iter().chain(k7.iter()).all(|v| v.is_finite());

        if !finite || err > 1.0 {
            rejected += 1;
            let factor = if finite {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= factor;
            continue;
        }

        let coeff3: [f64; N] = std::array::from_fn(|i| h * k1[i] - (y_new[i] - y[i]));
        let segment = Segment {
            t0: t,
            h: t_new - t,
            coeff: [
                y,
                std::array::from_fn(|i| y_new[i] - y[i]),
                coeff3,
                std::array::from_fn(|i| (y_new[i] - y[i]) - h * k7[i] - coeff3[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i])
                }),
            ],
        };

        if !landing {
            let cross = switches
                .iter()
                .zip(&s_prev)
                .filter(|(sw, &before)| Crossing::Either.fired(before, sw(t_new, &y_new)))
                .map(|(sw, &before)| {
                    let (mut lo, mut hi) = (t, t_new);
                    while hi - lo > settings.event_refine_tol {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if Crossing::Either.past(sw(mid, &segment.eval(mid)), before) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    hi
                })
                .fold(f64::INFINITY, f64::min);
            if cross < t_new {
                h = cross - t;
                landing = true;
                continue;
            }
        }
        landing = false;
        accepted += 1;
        for (prev, sw) in s_prev.iter_mut().zip(switches) {
            *prev = sw(t_new, &y_new);
        }

        if let Some(ev) = event {
            let e_new = (ev.value)(t_new, &y_new);
            if armed && ev.direction.fired(e_prev, e_new) {
                let (mut lo, mut hi) = (t, t_new);
                while hi - lo > settings.event_refine_tol {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let value = (ev.value)(mid, &segment.eval(mid));
                    if ev.direction.past(value, e_prev) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let y_hit = if hi == t_new { y_new } else { segment.eval(hi) };
                segments.push(segment);
                terminal = Some((hi, y_hit));
                break;
            }
            armed = armed || (ev.armed)(t_new, &y_new);
            e_prev = e_new;
        }

        segments.push(segment);
        t = t_new;
        y = y_new;
        k1 = k7;
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    let (t_end, y_end, by_event) = match terminal {
        Some((te, ye)) => (te, ye, true),
        None => (t, y, false),
    };
    let dense = DenseOutput {
        segments,
        t_end,
        y_end,
    };
    let (times, states) = sample_uniform(&dense, &state0, settings.sample_dt);

    Ok(SampledSolution {
        times,
        states,
        terminal_time: by_event.then_some(t_end),
        terminated_by_event: by_event,
        sample_dt: settings.sample_dt,
        accepted_steps: accepted,
        rejected_steps: rejected,
        dense,
    })
}

fn sample_uniform<const N: usize>(
    dense: &DenseOutput<N>,
    state0: &[f64; N],
    dt: f64,
) -> (Vec<f64>, Vec<[f64; N]>) {
    let t_end = dense.t_end;
    let mut times = vec![0.0];
    let mut states = vec![*state0];
    let mut seg = 0usize;
    let mut i = 1usize;
    loop {
        let ti = i as f64 * dt;
        if ti > t_end || t_end - ti < 1e-12 {
            break;
        }
        while seg + 1 < dense.segments.len() && dense.segments[seg].t1() < ti {
            seg += 1;
        }
        times.push(ti);
        states.push(dense.segments[seg].eval(ti));
        i += 1;
    }
    if t_end > 0.0 {
        // Land exactly on the final instant; a grid point within 1e-12 s of it
        // is replaced rather than duplicated.
        times.push(t_end);
        states.push(dense.y_end);
    }
    (times, states)
}
