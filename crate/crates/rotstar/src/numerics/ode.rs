//! Dormand–Prince 5(4) with a quartic continuous extension and
//! sign-change event location by bisection on the dense output.

use super::NumericsError;

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

/// Quartic dense-output weights: y(x0 + θh) = y0 + h Σ_i k_i Σ_j P[i][j] θ^(j+1).
const P: [[f64; 4]; 7] = [
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the local derivative scale.
    pub h0: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: None, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// Where integration stops.
pub enum Stop<'a> {
    /// Integrate up to a fixed abscissa.
    At(f64),
    /// Stop at the first abscissa where `g` changes sign from positive to
    /// non-positive; located to within `tol` by bisection on the dense output.
    Event { g: &'a dyn Fn(f64, &[f64]) -> f64, r_max: f64, tol: f64 },
}

#[derive(Debug, Clone)]
struct Segment {
    x0: f64,
    h: f64,
    /// y0 followed by four blocks of power-basis coefficients in θ
    cont: Vec<f64>,
}

/// Dense-output trajectory of an accepted integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    start: f64,
    y_start: Vec<f64>,
    segs: Vec<Segment>,
    /// Last abscissa covered (event location when an event fired).
    pub end: f64,
    pub event: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Dense-output state at `x`; `x` must lie in `[start, end]` (clamped).
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let d = self.dim;
        if self.segs.is_empty() || x <= self.start {
            out[..d].copy_from_slice(&self.y_start);
            return;
        }
        let x = x.min(self.segs.last().map(|s| s.x0 + s.h).unwrap_or(self.start));
        let k = match self.segs.binary_search_by(|s| s.x0.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let s = &self.segs[k];
        let th = (x - s.x0) / s.h;
        let c = &s.cont;
        for i in 0..d {
            out[i] = c[i] + th * (c[d + i] + th * (c[2 * d + i] + th * (c[3 * d + i] + th * c[4 * d + i])));
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Single component at `x`.
    pub fn component(&self, x: f64, i: usize) -> f64 {
        let mut buf = [0.0; 16];
        if self.dim <= 16 {
            self.eval_into(x, &mut buf);
            buf[i]
        } else {
            self.eval(x)[i]
        }
    }

    pub fn state_at_end(&self) -> Vec<f64> {
        self.eval(self.end)
    }

    /// Accepted step boundaries (useful for diagnostics and sampling).
    pub fn mesh(&self) -> Vec<f64> {
        let mut m = vec![self.start];
        m.extend(self.segs.iter().map(|s| s.x0 + s.h));
        m
    }
}

fn err_norm(y: &[f64], yn: &[f64], e: &[f64], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..y.len() {
        let sc = o.atol + o.rtol * y[i].abs().max(yn[i].abs());
        acc += (e[i] / sc).powi(2);
    }
    (acc / y.len() as f64).sqrt()
}

/// Adaptive Dormand–Prince integration of `y' = f(x, y)` from `x0`.
pub fn integrate_ivp<F>(
    mut f: F,
    y0: &[f64],
    x0: f64,
    stop: Stop<'_>,
    opts: &OdeOptions,
) -> Result<Trajectory, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(NumericsError::Invalid("tolerances must be positive".into()));
    }
    let d = y0.len();
    let (x_end, event) = match &stop {
        Stop::At(x) => (*x, None),
        Stop::Event { g, r_max, tol } => (*r_max, Some((*g, *tol))),
    };
    if !(x_end > x0) {
        return Err(NumericsError::Invalid(format!("end {x_end} must exceed start {x0}")));
    }
    let mut traj = Trajectory {
        dim: d,
        start: x0,
        y_start: y0.to_vec(),
        segs: Vec::new(),
        end: x0,
        event: None,
        steps: 0,
        rejected: 0,
    };
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut k5 = vec![0.0; d];
    let mut k6 = vec![0.0; d];
    let mut k7 = vec![0.0; d];
    let mut yt = vec![0.0; d];
    let mut yn = vec![0.0; d];
    let mut ee = vec![0.0; d];
    f(x0, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite { what: "ode right-hand side", x: x0 });
    }
    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            // d0/d1 heuristic on the scaled state and slope
            let scaled = |v: &[f64]| {
                (v.iter().zip(&y).map(|(b, a)| (b / (opts.atol + opts.rtol * a.abs())).powi(2)).sum::<f64>()
                    / d as f64)
                    .sqrt()
            };
            let d0 = scaled(&y);
            let d1 = scaled(&k1);
            let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * (x_end - x0) } else { 0.01 * d0 / d1 };
            guess.min(0.1 * (x_end - x0))
        }
    }
    .min(opts.h_max);
    let mut x = x0;
    let mut g_prev = event.map(|(g, _)| g(x0, &y));
    loop {
        if traj.steps + traj.rejected >= opts.max_steps {
            return Err(NumericsError::TooManySteps { steps: opts.max_steps, r: x });
        }
        let mut last = false;
        if x + h >= x_end {
            h = x_end - x;
            last = true;
        }
        if h < opts.h_min * x.abs().max(1.0) {
            return Err(NumericsError::StepUnderflow { r: x, h });
        }
        for i in 0..d {
            yt[i] = y[i] + h * A21 * k1[i];
        }
        f(x + C2 * h, &yt, &mut k2);
        for i in 0..d {
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(x + C3 * h, &yt, &mut k3);
        for i in 0..d {
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(x + C4 * h, &yt, &mut k4);
        for i in 0..d {
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(x + C5 * h, &yt, &mut k5);
        for i in 0..d {
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(x + h, &yt, &mut k6);
        for i in 0..d {
            yn[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(x + h, &yn, &mut k7);
        for i in 0..d {
            ee[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let finite = yn.iter().chain(k7.iter()).all(|v| v.is_finite());
        let err = if finite { err_norm(&y, &yn, &ee, opts) } else { f64::INFINITY };
        if err <= 1.0 {
            let mut cont = vec![0.0; 5 * d];
            let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
            for i in 0..d {
                cont[i] = y[i];
                for j in 0..4 {
                    let mut q = 0.0;
                    for (kk, row) in ks.iter().zip(P.iter()) {
                        q += row[j] * kk[i];
                    }
                    cont[(j + 1) * d + i] = h * q;
                }
            }
            traj.segs.push(Segment { x0: x, h, cont });
            traj.steps += 1;
            let x_new = x + h;
            if let (Some((g, tol)), Some(gp)) = (event, g_prev) {
                let gn = g(x_new, &yn);
                if gp > 0.0 && gn <= 0.0 {
                    // bisection on the dense output of this step
                    let (mut lo, mut hi) = (x, x_new);
                    let mut buf = vec![0.0; d];
                    while hi - lo > tol {
                        let mid = 0.5 * (lo + hi);
                        traj.eval_into(mid, &mut buf);
                        if g(mid, &buf) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if mid == lo && mid == hi {
                            break;
                        }
                    }
                    // pick the endpoint with the smaller |g|
                    traj.eval_into(lo, &mut buf);
                    let glo = g(lo, &buf).abs();
                    traj.eval_into(hi, &mut buf);
                    let ghi = g(hi, &buf).abs();
                    let xe = if glo <= ghi { lo } else { hi };
                    traj.end = xe;
                    traj.event = Some(xe);
                    return Ok(traj);
                }
                g_prev = Some(gn);
            }
            x = x_new;
            y.copy_from_slice(&yn);
            k1.copy_from_slice(&k7);
            traj.end = x;
            if last {
                if event.is_some() {
                    return Err(NumericsError::NoEvent { r_max: x_end });
                }
                return Ok(traj);
            }
            let fac = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
        } else {
            traj.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= fac;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate_ivp(|_, _, dy| dy.fill(0.0), &[1.0, 0.0], 0.0, Stop::At(2.0), &OdeOptions::default())
            .unwrap();
        for x in [0.0, 0.3, 1.7, 2.0] {
            let y = tr.eval(x);
            assert_eq!(y, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn exponential_growth() {
        let o = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let tr = integrate_ivp(|_, y, dy| dy[0] = y[0], &[1.0], 0.0, Stop::At(1.0), &o).unwrap();
        assert!((tr.eval(1.0)[0] - std::f64::consts::E).abs() < 1e-11);
        // dense output in the interior
        assert!((tr.eval(0.37)[0] - 0.37f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn event_locates_sine_zero() {
        let o = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let g = |_: f64, y: &[f64]| y[0];
        let tr = integrate_ivp(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[0.5, 1.0],
            0.0,
            Stop::Event { g: &g, r_max: 10.0, tol: 1e-13 },
            &o,
        )
        .unwrap();
        // y = 0.5 cos x + sin x vanishes at x = pi - atan(0.5)
        let exact = std::f64::consts::PI - 0.5f64.atan();
        assert!((tr.event.unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn missing_event_is_reported() {
        let g = |_: f64, y: &[f64]| y[0];
        let r = integrate_ivp(|_, _, dy| dy[0] = 1.0, &[1.0], 0.0, Stop::Event { g: &g, r_max: 3.0, tol: 1e-12 }, &OdeOptions::default());
        assert!(matches!(r, Err(NumericsError::NoEvent { .. })));
    }
}
