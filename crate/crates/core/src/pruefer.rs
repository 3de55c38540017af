//! ODE analysis for `λ = 2d`: the Legendre-type operator on `(−π/2, π/2)`,
//! its Prüfer-angle classification of admissible `μ`, and the radial Robin
//! ground state of a ball.
//!
//! With `tanh(s/2) = tan(θ/2)` and `f(θ(s)) = (cosh s)^{(d−3)/2} g(s)` the
//! equation `f'' − (d−2) tanθ f' − μ f / cos²θ = −λ f` becomes
//! `g'' + ((d+1)(d+3)/(4cosh²s) − c²) g = 0` with `c² = ((d−3)/2)² + μ`.
//! Writing `tan(σ/2) = g'/g` gives
//! `σ' = (1 + cos σ)(c² + 1 − (d+1)(d+3)/(4cosh²s)) − 2`,
//! whose limits are `σ₋ = 2 arctan c` at `−∞` (growing branch) and
//! `σ₊ = −σ₋` at `+∞` (decaying branch).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Admissibility window for `σ̄ − σ₊` modulo `2π`, in radians.
pub const ADMISSIBLE_TOL: f64 = 0.05;
/// Allowed drift of the gap when the truncation `S` grows by half.
pub const TRUNCATION_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreProblem<T> {
    pub d: usize,
    pub mu: T,
    pub lambda: T,
    /// Half-width of the `s` interval.
    pub s_max: T,
    pub step: T,
}

impl<T: Real> LegendreProblem<T> {
    /// `λ = 2d`, `S = 30`, step `1e−3`.
    pub fn new(d: usize, mu: T) -> Self {
        Self {
            d,
            mu,
            lambda: T::from_usize_lossy(2 * d),
            s_max: T::lit(30.0),
            step: T::lit(1e-3),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParameter(format!("dimension must be >= 3, got {}", self.d)));
        }
        if !(self.mu >= T::zero()) {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if (self.lambda - T::from_usize_lossy(2 * self.d)).abs() > T::lit(1e-12) * self.lambda.abs().max(T::one()) {
            return Err(Error::InvalidParameter(format!(
                "only lambda = 2d = {} is implemented, got {}",
                2 * self.d,
                self.lambda
            )));
        }
        if !(self.s_max >= T::lit(30.0)) {
            return Err(Error::InvalidParameter(format!("S must be >= 30, got {}", self.s_max)));
        }
        if !(self.step > T::zero() && self.step <= T::lit(1e-3)) {
            return Err(Error::InvalidParameter(format!("step must lie in (0, 1e-3], got {}", self.step)));
        }
        Ok(())
    }

    /// `c = √(((d−3)/2)² + μ)`.
    pub fn decay_rate(&self) -> T {
        let p = (T::from_usize_lossy(self.d) - T::lit(3.0)) / T::lit(2.0);
        (p * p + self.mu).sqrt()
    }

    /// `σ₋(μ) = 2 arctan c`.
    pub fn sigma_minus(&self) -> T {
        T::lit(2.0) * self.decay_rate().atan()
    }

    fn well_depth(&self) -> T {
        let d = T::from_usize_lossy(self.d);
        (d + T::one()) * (d + T::lit(3.0)) / T::lit(4.0)
    }

    fn rhs(&self, s: T, sigma: T) -> T {
        let c2 = self.decay_rate().powi(2);
        let ch = s.cosh();
        (T::one() + sigma.cos()) * (c2 + T::one() - self.well_depth() / (ch * ch)) - T::lit(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrueferOutcome<T> {
    pub mu: T,
    /// `σ̄_μ − σ₊(μ)`.
    pub sigma_gap: T,
    /// Zeros of `g`: downward passages of `σ` through odd multiples of `π`.
    pub crossings: usize,
    pub admissible: bool,
}

/// Explicit solutions of the Legendre-type equation at `λ = 2d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplicitSolution {
    /// `sin²θ − cos²θ/(d−1)` at `μ = 0`.
    Zero,
    /// `sinθ cosθ` at `μ = d − 2`.
    DMinusTwo,
    /// `cos²θ` at `μ = 2(d − 1)`.
    TwiceDMinusOne,
}

impl ExplicitSolution {
    pub const ALL: [ExplicitSolution; 3] = [Self::Zero, Self::DMinusTwo, Self::TwiceDMinusOne];

    pub fn mu(self, d: usize) -> usize {
        match self {
            Self::Zero => 0,
            Self::DMinusTwo => d - 2,
            Self::TwiceDMinusOne => 2 * (d - 1),
        }
    }

    /// `(f, f', f'')` at `θ`.
    pub fn eval<T: Real>(self, d: usize, theta: T) -> [T; 3] {
        let two = T::lit(2.0);
        let (s2, c2) = ((two * theta).sin(), (two * theta).cos());
        match self {
            Self::Zero => {
                let k = T::from_usize_lossy(d) / T::from_usize_lossy(d - 1);
                let (s, c) = (theta.sin(), theta.cos());
                [s * s - c * c / T::from_usize_lossy(d - 1), k * s2, two * k * c2]
            }
            Self::DMinusTwo => [s2 / two, c2, -two * s2],
            Self::TwiceDMinusOne => {
                let c = theta.cos();
                [c * c, -s2, -two * c2]
            }
        }
    }
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if !(theta.abs() < T::FRAC_PI_2()) {
        return Err(Error::ThetaOutOfRange(theta.to_f64_lossy()));
    }
    Ok(())
}

/// `L_μ f(θ) + λ f(θ)` for `f` given as `(f, f', f'')`.
pub fn legendre_residual<T: Real>(d: usize, mu: T, lambda: T, f: impl Fn(T) -> [T; 3], theta: T) -> Result<T> {
    check_theta(theta)?;
    let [v, d1, d2] = f(theta);
    let c = theta.cos();
    Ok(d2 - T::from_usize_lossy(d.saturating_sub(2)) * theta.tan() * d1 - mu / (c * c) * v + lambda * v)
}

/// `θ(s) = 2 arctan(tanh(s/2))`.
pub fn theta_of_s<T: Real>(s: T) -> T {
    T::lit(2.0) * (s / T::lit(2.0)).tanh().atan()
}

/// `(g, g', g'')` for `g = (cosh s)^{−(d−3)/2} f(θ(s))`.
pub fn transformed<T: Real>(d: usize, f: impl Fn(T) -> [T; 3], s: T) -> [T; 3] {
    let p = (T::lit(3.0) - T::from_usize_lossy(d)) / T::lit(2.0);
    let ch = s.cosh();
    let t = s.tanh();
    let w = ch.powf(p);
    let [v, f1, f2] = f(theta_of_s(s));
    // dθ/ds = 1/cosh s.
    let inner = p * t * v + f1 / ch;
    let inner_s = p * (T::one() - t * t) * v + p * t * f1 / ch + f2 / (ch * ch) - t * f1 / ch;
    [w * v, w * inner, w * (p * t * inner + inner_s)]
}

/// `g'' + ((d+1)(d+3)/(4cosh²s) − ((d−3)/2)² − μ) g` for a transformed `f`.
pub fn transformed_residual<T: Real>(d: usize, mu: T, f: impl Fn(T) -> [T; 3], s: T) -> T {
    let [g, _, g2] = transformed(d, f, s);
    let problem = LegendreProblem::new(d, mu);
    let ch = s.cosh();
    g2 + (problem.well_depth() / (ch * ch) - problem.decay_rate().powi(2)) * g
}

/// Homogeneity `β ≥ 0` of a cone harmonic with spherical eigenvalue
/// `λ`: the nonnegative root of `β² + (d−2)β − λ = 0`.
pub fn homogeneity_exponent<T: Real>(d: usize, lambda: T) -> T {
    let a = T::from_usize_lossy(d) - T::lit(2.0);
    (-a + (a * a + T::lit(4.0) * lambda).sqrt()) / T::lit(2.0)
}

/// RK4 from `s0` to `s1` (either direction).
fn integrate<T: Real>(p: &LegendreProblem<T>, s0: T, s1: T, sigma0: T) -> Result<T> {
    let span = s1 - s0;
    let steps = (span.abs() / p.step).ceil().to_usize().unwrap_or(1).max(1);
    let h = span / T::from_usize_lossy(steps);
    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let mut sigma = sigma0;
    for k in 0..steps {
        let s = s0 + h * T::from_usize_lossy(k);
        let k1 = p.rhs(s, sigma);
        let k2 = p.rhs(s + half, sigma + half * k1);
        let k3 = p.rhs(s + half, sigma + half * k2);
        let k4 = p.rhs(s + h, sigma + h * k3);
        sigma += sixth * (k1 + T::lit(2.0) * (k2 + k3) + k4);
        if !sigma.is_finite() {
            return Err(Error::IntegrationBlowup((s + h).to_f64_lossy()));
        }
    }
    Ok(sigma)
}

/// Two-sided gap at truncation `s_max`.
///
/// The decaying branch is repelling for increasing `s`, so it is integrated
/// backwards from `σ₊` at `+S` and matched at `s = 0` against the forward
/// integration from `σ₋` at `−S`. The mismatch equals `σ̄ − σ₊`, because the
/// backward branch is the true trajectory shifted by `2πk`.
fn gap_at<T: Real>(p: &LegendreProblem<T>, s_max: T) -> Result<T> {
    let sm = p.sigma_minus();
    let left = integrate(p, -s_max, T::zero(), sm)?;
    let right = integrate(p, s_max, T::zero(), -sm)?;
    Ok(left - right)
}

/// Zeros of `g` along the joined trajectory from `σ₋` to `σ₊ + gap`.
///
/// `σ' = −2` wherever `σ` is an odd multiple of `π`, so every passage is
/// downward and the net index change counts them all. Counting on the
/// joined path avoids double counting a zero that sits on the matching
/// point (as for the odd solution at `μ = d − 2`).
fn count_crossings<T: Real>(p: &LegendreProblem<T>, gap: T) -> usize {
    let sm = p.sigma_minus();
    let index = |sigma: T| ((sigma - T::PI()) / (T::lit(2.0) * T::PI())).floor().to_i64().unwrap_or(0);
    (index(sm) - index(-sm + gap)).max(0) as usize
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -T::PI() {
        y += two_pi;
    }
    y
}

pub fn pruefer_shoot<T: Real>(p: &LegendreProblem<T>) -> Result<PrueferOutcome<T>> {
    p.validate()?;
    let gap = gap_at(p, p.s_max)?;
    let gap_wide = gap_at(p, p.s_max * T::lit(1.5))?;
    let change = (gap_wide - gap).abs();
    if change > T::lit(TRUNCATION_TOL) {
        return Err(Error::TruncationTooSmall {
            change: change.to_f64_lossy(),
        });
    }
    Ok(PrueferOutcome {
        mu: p.mu,
        sigma_gap: gap,
        crossings: count_crossings(p, gap),
        admissible: wrap_angle(gap).abs() <= T::lit(ADMISSIBLE_TOL),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuScan<T> {
    pub d: usize,
    pub grid: Vec<PrueferOutcome<T>>,
    /// Roots of the wrapped gap, each refined by bisection.
    pub admissible: Vec<PrueferOutcome<T>>,
    /// Gap nondecreasing in `μ` over the grid.
    pub monotone: bool,
}

/// Scans `mu_grid` (ascending) and localises every `μ` where `σ̄ − σ₊`
/// crosses a multiple of `2π`.
pub fn admissible_mu_scan<T: Real>(d: usize, mu_grid: &[T]) -> Result<MuScan<T>> {
    admissible_mu_scan_with(d, mu_grid, T::lit(1e-3), T::lit(1e-7))
}

pub fn admissible_mu_scan_with<T: Real>(d: usize, mu_grid: &[T], step: T, mu_tol: T) -> Result<MuScan<T>> {
    if mu_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("mu grid must be strictly ascending".into()));
    }
    let shoot = |mu: T| {
        let mut p = LegendreProblem::new(d, mu);
        p.step = step;
        pruefer_shoot(&p)
    };
    let grid: Vec<PrueferOutcome<T>> = mu_grid.par_iter().map(|&mu| shoot(mu)).collect::<Result<_>>()?;
    let monotone = grid.windows(2).all(|w| w[1].sigma_gap >= w[0].sigma_gap);

    // Endpoints count as roots only when they are already on target.
    let endpoint_tol = T::lit(1e-6);
    let mut brackets = Vec::new();
    let mut exact = Vec::new();
    for (i, o) in grid.iter().enumerate() {
        let w = wrap_angle(o.sigma_gap);
        if (i == 0 || i + 1 == grid.len()) && w.abs() <= endpoint_tol {
            exact.push(*o);
            continue;
        }
        if i + 1 < grid.len() {
            let w2 = wrap_angle(grid[i + 1].sigma_gap);
            let near = w.abs() < T::FRAC_PI_2() && w2.abs() < T::FRAC_PI_2();
            let endpoint_next = i + 2 == grid.len() && w2.abs() <= endpoint_tol;
            let endpoint_here = i == 0 && w.abs() <= endpoint_tol;
            if near && w * w2 < T::zero() && !endpoint_next && !endpoint_here {
                brackets.push((o.mu, grid[i + 1].mu, w));
            } else if w == T::zero() && i > 0 {
                exact.push(*o);
            }
        }
    }
    let refined: Vec<PrueferOutcome<T>> = brackets
        .par_iter()
        .map(|&(mut lo, mut hi, w_lo)| {
            let sign_lo = w_lo > T::zero();
            while hi - lo > mu_tol {
                let mid = (lo + hi) / T::lit(2.0);
                let w = wrap_angle(shoot(mid)?.sigma_gap);
                if (w > T::zero()) == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            shoot((lo + hi) / T::lit(2.0))
        })
        .collect::<Result<_>>()?;
    let mut admissible: Vec<PrueferOutcome<T>> = exact.into_iter().chain(refined).collect();
    admissible.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap());
    Ok(MuScan {
        d,
        grid,
        admissible,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample<T> {
    pub r: T,
    pub u: T,
    /// `(log u)'`.
    pub v: T,
    /// `v'`.
    pub w: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGroundState<T> {
    pub d: usize,
    pub radius: T,
    pub alpha: T,
    pub lambda: T,
    pub samples: Vec<RadialSample<T>>,
    pub log_concave: bool,
}

/// Radial solution with `u(0) = 1`; returns `u, u'` at the sample radii
/// and whether `u` stayed positive.
fn radial_profile<T: Real>(d: usize, radius: T, lambda: T, sample_r: &[T]) -> Result<(Vec<[T; 2]>, bool)> {
    let dm1 = T::from_usize_lossy(d - 1);
    let dd = T::from_usize_lossy(d);
    let f = |r: T, y: [T; 2]| [y[1], -dm1 / r * y[1] - lambda * y[0]];
    let r0 = T::lit(1e-6) * radius;
    let mut r = r0;
    let mut y = [T::one() - lambda * r0 * r0 / (T::lit(2.0) * dd), -lambda * r0 / dd];
    let h_max = radius / T::lit(2000.0);
    let mut out = Vec::with_capacity(sample_r.len());
    let mut positive = true;
    for &target in sample_r {
        if target <= r0 {
            out.push([T::one() - lambda * target * target / (T::lit(2.0) * dd), -lambda * target / dd]);
            continue;
        }
        while r < target {
            // Steps graded with r near the origin, where (d−1)/r is stiff.
            let h = (T::lit(0.05) * r).min(h_max).min(target - r);
            let half = h / T::lit(2.0);
            let k1 = f(r, y);
            let k2 = f(r + half, [y[0] + half * k1[0], y[1] + half * k1[1]]);
            let k3 = f(r + half, [y[0] + half * k2[0], y[1] + half * k2[1]]);
            let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / T::lit(6.0) * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
            }
            r += h;
            if !(y[0].is_finite() && y[1].is_finite()) {
                return Err(Error::IntegrationBlowup(r.to_f64_lossy()));
            }
            if y[0] <= T::zero() {
                positive = false;
            }
        }
        out.push(y);
    }
    Ok((out, positive))
}

/// Robin ground state of the ball `B_R ⊂ R^d` by shooting on `λ`.
pub fn ball_ground_state<T: Real>(d: usize, radius: T, alpha: T, n_samples: usize) -> Result<RadialGroundState<T>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    if !(radius > T::zero()) || !(alpha >= T::zero()) {
        return Err(Error::InvalidParameter("need R > 0 and alpha >= 0".into()));
    }
    let n_samples = n_samples.max(2);
    let end = [radius];
    // Robin mismatch; −1 once u has lost positivity (past the Dirichlet value).
    let mismatch = |lambda: T| -> Result<T> {
        let (y, positive) = radial_profile(d, radius, lambda, &end)?;
        Ok(if positive { y[0][1] + alpha * y[0][0] } else { -T::one() })
    };
    let lambda = if alpha == T::zero() {
        T::zero()
    } else {
        let mut hi = T::one() / (radius * radius);
        let mut tries = 0;
        while mismatch(hi)? > T::zero() {
            hi *= T::lit(2.0);
            tries += 1;
            if tries > 60 {
                return Err(Error::RootNotBracketed {
                    limit: hi.to_f64_lossy(),
                });
            }
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if mismatch(mid)? > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / T::lit(2.0)
    };

    let rs: Vec<T> = (0..n_samples)
        .map(|j| radius * T::from_usize_lossy(j) / T::from_usize_lossy(n_samples - 1))
        .collect();
    let (ys, positive) = radial_profile(d, radius, lambda, &rs)?;
    let min_u = ys.iter().map(|y| y[0]).fold(T::infinity(), T::min);
    if !positive || !(min_u > T::zero()) {
        return Err(Error::NonpositiveSolution { min: min_u.to_f64_lossy() });
    }
    let dm1 = T::from_usize_lossy(d - 1);
    let samples: Vec<RadialSample<T>> = rs
        .iter()
        .zip(&ys)
        .map(|(&r, y)| {
            let v = y[1] / y[0];
            let w = if r > T::zero() {
                -dm1 / r * v - lambda - v * v
            } else {
                -lambda / T::from_usize_lossy(d)
            };
            RadialSample { r, u: y[0], v, w }
        })
        .collect();
    let slack = T::lit(1e-8);
    let log_concave = samples.iter().all(|s| s.v <= slack && s.w <= slack);
    Ok(RadialGroundState {
        d,
        radius,
        alpha,
        lambda,
        samples,
        log_concave,
    })
}
