//! Midpoint tests that certify a discrete field is *not* concave, not
//! log-concave, or has a non-convex superlevel set.
//!
//! Reports only ever carry evidence against concavity. An empty report
//! means no counterexample was found at this resolution and sample set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Field;
use crate::scalar::Real;

/// Number of witnesses kept per report, largest gaps first.
pub const MAX_WITNESSES: usize = 32;
/// Relative drift of `max_gap` under refinement accepted as stable.
pub const STABILITY_TOL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode<T> {
    Concavity,
    LogConcavity,
    Superlevel { c: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness<T> {
    pub x: [T; 2],
    pub y: [T; 2],
    pub midpoint_value: T,
    /// `(f(x)+f(y))/2` for midpoint tests, `min(f(x), f(y))` for superlevel.
    pub endpoint_bound: T,
    /// `endpoint_bound − midpoint_value`.
    pub gap: T,
}

impl<T: Real> Witness<T> {
    pub fn midpoint(&self) -> [T; 2] {
        let two = T::lit(2.0);
        [(self.x[0] + self.y[0]) / two, (self.x[1] + self.y[1]) / two]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport<T> {
    pub mode: Mode<T>,
    /// Largest gaps found, descending.
    pub violations: Vec<Witness<T>>,
    pub violation_count: usize,
    pub pairs_tested: usize,
    /// Zero when there are no violations.
    pub max_gap: T,
    pub h: T,
    pub tol: T,
    /// Set by [`ConcavityReport::mark_stability`] against a refined run.
    pub stable: bool,
}

impl<T: Real> ConcavityReport<T> {
    pub fn found_violation(&self) -> bool {
        !self.violations.is_empty()
    }

    /// Certificate: a violation that persisted under one refinement with
    /// `max_gap` within [`STABILITY_TOL`].
    pub fn is_certificate(&self) -> bool {
        self.found_violation() && self.stable
    }

    pub fn best(&self) -> Option<&Witness<T>> {
        self.violations.first()
    }

    /// Compares with the same test on a refined field.
    pub fn mark_stability(&mut self, refined: &ConcavityReport<T>) {
        self.stable = self.found_violation()
            && refined.found_violation()
            && (self.max_gap - refined.max_gap).abs() <= T::lit(STABILITY_TOL) * refined.max_gap;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions<T> {
    /// Interior low-discrepancy points; all pairs are tested.
    pub n_samples: usize,
    /// Offset into the Halton sequence.
    pub seed: u64,
    /// Outer radius of the polar patch at each polygon vertex, as a
    /// fraction of the bounding-box diagonal.
    pub corner_radius: T,
    /// Inner patch radius relative to the outer one; rings are spaced
    /// geometrically in between.
    pub corner_depth: T,
    pub corner_rings: usize,
    /// Rays per patch, including the two boundary rays.
    pub corner_rays: usize,
    /// Dimensionless constant of the pair tolerance, see [`tolerance`].
    pub c_tol: T,
}

impl<T: Real> Default for SamplingOptions<T> {
    fn default() -> Self {
        Self {
            n_samples: 256,
            seed: 0,
            corner_radius: T::lit(0.15),
            corner_depth: T::lit(1e-3),
            corner_rings: 32,
            corner_rays: 25,
            c_tol: T::lit(2.0),
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / base as f64);
    while i > 0 {
        inv += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    inv
}

fn bounding_box<T: Real>(field: &Field<T>) -> ([T; 2], [T; 2]) {
    let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
    for p in field.mesh().nodes() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn diagonal<T: Real>(field: &Field<T>) -> T {
    let (lo, hi) = bounding_box(field);
    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
}

/// Interior Halton points (bases 2, 3) inside the mesh.
pub fn sample_points<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> Vec<[T; 2]> {
    let mesh = field.mesh();
    let (lo, hi) = bounding_box(field);
    let mut points = Vec::with_capacity(opts.n_samples);
    let mut i = opts.seed;
    let limit = opts.seed + 64 * opts.n_samples as u64 + 64;
    while points.len() < opts.n_samples && i < limit {
        i += 1;
        let p = [
            lo[0] + (hi[0] - lo[0]) * T::lit(radical_inverse(i, 2)),
            lo[1] + (hi[1] - lo[1]) * T::lit(radical_inverse(i, 3)),
        ];
        if mesh.locate(p).is_some() {
            points.push(p);
        }
    }
    points
}

/// Polar grid in the tangent sector of every polygon vertex: geometric
/// rings times uniform rays, boundary rays included. Corner singularities
/// are self-similar, so each scale gets the same number of points.
pub fn corner_patches<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> Vec<Vec<[T; 2]>> {
    let mesh = field.mesh();
    let (nodes, corners) = (mesh.nodes(), mesh.corners());
    let n = corners.len();
    let outer = opts.corner_radius * diagonal(field);
    if n < 3 || opts.corner_rings == 0 || opts.corner_rays < 2 {
        return Vec::new();
    }
    (0..n)
        .map(|k| {
            let c = nodes[corners[k]];
            let next = nodes[corners[(k + 1) % n]];
            let prev = nodes[corners[(k + n - 1) % n]];
            let u = [next[0] - c[0], next[1] - c[1]];
            let w = [prev[0] - c[0], prev[1] - c[1]];
            let start = u[1].atan2(u[0]);
            let open = (u[0] * w[1] - u[1] * w[0]).atan2(u[0] * w[0] + u[1] * w[1]);
            let mut pts = Vec::with_capacity(opts.corner_rings * opts.corner_rays);
            for i in 0..opts.corner_rings {
                let t = if opts.corner_rings == 1 {
                    T::zero()
                } else {
                    T::from_usize_lossy(i) / T::from_usize_lossy(opts.corner_rings - 1)
                };
                let r = outer * opts.corner_depth.powf(t);
                for j in 0..opts.corner_rays {
                    let phi = start + open * T::from_usize_lossy(j) / T::from_usize_lossy(opts.corner_rays - 1);
                    let p = [c[0] + r * phi.cos(), c[1] + r * phi.sin()];
                    if mesh.locate(p).is_some() {
                        pts.push(p);
                    }
                }
            }
            pts
        })
        .collect()
}

/// Pair tolerance `c_tol · osc(f) · (h/D)²` with `D` the bounding-box
/// diagonal. A P1 interpolant of a smooth function misses it by
/// `O(h² |D²f|)`, and `osc(f)/D²` is the natural scale of `|D²f|`.
///
/// Returned at the global mesh size; pairs use the size of the largest
/// triangle they touch.
pub fn tolerance<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> T {
    tol_scale(field, opts) * field.mesh().h() * field.mesh().h()
}

fn tol_scale<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> T {
    let values = field.values();
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let d = diagonal(field);
    opts.c_tol * (max - min) / (d * d)
}

#[derive(Clone, Copy)]
struct Probe<T> {
    value: T,
    /// Longest edge of the containing triangle.
    h: T,
}

fn probe<T: Real>(field: &Field<T>, p: [T; 2]) -> Option<Probe<T>> {
    let mesh = field.mesh();
    let (t, w) = mesh.locate(p)?;
    let tri = mesh.triangles()[t];
    let (nodes, values) = (mesh.nodes(), field.values());
    let len = |a: usize, b: usize| (nodes[a][0] - nodes[b][0]).hypot(nodes[a][1] - nodes[b][1]);
    Some(Probe {
        value: w[0] * values[tri[0]] + w[1] * values[tri[1]] + w[2] * values[tri[2]],
        h: len(tri[0], tri[1]).max(len(tri[1], tri[2])).max(len(tri[2], tri[0])),
    })
}

/// Decides whether a pair is a violation given `f(x)`, `f(y)`, `f(m)` and
/// the pair tolerance.
type Judge<'a, T> = dyn Fn([T; 2], [T; 2], T, T, T, T) -> Option<Witness<T>> + Sync + 'a;

/// Tests all pairs within each point set.
fn scan_pairs<T: Real>(
    field: &Field<T>,
    sets: &[Vec<[T; 2]>],
    scale: T,
    judge: &Judge<'_, T>,
) -> (Vec<Witness<T>>, usize, usize) {
    let two = T::lit(2.0);
    let mut best: Vec<Witness<T>> = Vec::new();
    let (mut count, mut pairs) = (0usize, 0usize);
    for set in sets {
        let probes: Vec<Option<Probe<T>>> = set.par_iter().map(|&p| probe(field, p)).collect();
        let (found, c, n) = (0..set.len())
            .into_par_iter()
            .map(|i| {
                let mut local = Vec::new();
                let (mut c, mut n) = (0usize, 0usize);
                let Some(px) = probes[i] else { return (local, c, n) };
                for j in i + 1..set.len() {
                    let Some(py) = probes[j] else { continue };
                    let (x, y) = (set[i], set[j]);
                    let m = [(x[0] + y[0]) / two, (x[1] + y[1]) / two];
                    let Some(pm) = probe(field, m) else { continue };
                    n += 1;
                    let h = px.h.max(py.h).max(pm.h);
                    if let Some(w) = judge(x, y, px.value, py.value, pm.value, scale * h * h) {
                        c += 1;
                        local.push(w);
                        if local.len() > 4 * MAX_WITNESSES {
                            keep_best(&mut local);
                        }
                    }
                }
                keep_best(&mut local);
                (local, c, n)
            })
            .reduce(
                || (Vec::new(), 0, 0),
                |(mut a, ca, na), (b, cb, nb)| {
                    a.extend(b);
                    keep_best(&mut a);
                    (a, ca + cb, na + nb)
                },
            );
        best.extend(found);
        keep_best(&mut best);
        count += c;
        pairs += n;
    }
    (best, count, pairs)
}

fn keep_best<T: Real>(ws: &mut Vec<Witness<T>>) {
    // Ties broken by coordinates so reports are reproducible.
    ws.sort_by(|a, b| {
        b.gap
            .partial_cmp(&a.gap)
            .unwrap()
            .then(a.x[0].partial_cmp(&b.x[0]).unwrap())
            .then(a.x[1].partial_cmp(&b.x[1]).unwrap())
            .then(a.y[0].partial_cmp(&b.y[0]).unwrap())
            .then(a.y[1].partial_cmp(&b.y[1]).unwrap())
    });
    ws.truncate(MAX_WITNESSES);
}

fn point_sets<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> Vec<Vec<[T; 2]>> {
    let mut sets = vec![sample_points(field, opts)];
    sets.extend(corner_patches(field, opts));
    sets
}

fn report<T: Real>(
    field: &Field<T>,
    opts: &SamplingOptions<T>,
    mode: Mode<T>,
    found: (Vec<Witness<T>>, usize, usize),
) -> ConcavityReport<T> {
    let (violations, violation_count, pairs_tested) = found;
    ConcavityReport {
        mode,
        max_gap: violations.first().map_or(T::zero(), |w| w.gap),
        violations,
        violation_count,
        pairs_tested,
        h: field.mesh().h(),
        tol: tolerance(field, opts),
        stable: false,
    }
}

/// Midpoint test `(f(x) + f(y))/2 − f((x+y)/2) > tol`.
pub fn check_midpoint_concavity<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> ConcavityReport<T> {
    midpoint_report(field, opts, Mode::Concavity)
}

fn midpoint_report<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>, mode: Mode<T>) -> ConcavityReport<T> {
    let two = T::lit(2.0);
    let judge = move |x: [T; 2], y: [T; 2], fx: T, fy: T, fm: T, tol: T| {
        let bound = (fx + fy) / two;
        let gap = bound - fm;
        (gap > tol).then_some(Witness {
            x,
            y,
            midpoint_value: fm,
            endpoint_bound: bound,
            gap,
        })
    };
    let found = scan_pairs(field, &point_sets(field, opts), tol_scale(field, opts), &judge);
    report(field, opts, mode, found)
}

/// Midpoint test on the nodal logarithm of a positive field.
pub fn check_log_concavity<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> Result<ConcavityReport<T>> {
    let min = field.min();
    if !(min > T::zero()) {
        return Err(Error::NonpositiveField { min: min.to_f64_lossy() });
    }
    let log = field.map("log", |v| v.ln());
    Ok(midpoint_report(&log, opts, Mode::LogConcavity))
}

/// Superlevel test at level `c`: `f(x), f(y) > c + tol` while
/// `f((x+y)/2) < c − tol`.
pub fn check_superlevel_convexity<T: Real>(field: &Field<T>, c: T, opts: &SamplingOptions<T>) -> ConcavityReport<T> {
    superlevel_with_sets(field, c, opts, &point_sets(field, opts))
}

fn superlevel_with_sets<T: Real>(
    field: &Field<T>,
    c: T,
    opts: &SamplingOptions<T>,
    sets: &[Vec<[T; 2]>],
) -> ConcavityReport<T> {
    let judge = move |x: [T; 2], y: [T; 2], fx: T, fy: T, fm: T, tol: T| {
        let bound = fx.min(fy);
        (bound > c + tol && fm < c - tol).then_some(Witness {
            x,
            y,
            midpoint_value: fm,
            endpoint_bound: bound,
            gap: bound - fm,
        })
    };
    let found = scan_pairs(field, sets, tol_scale(field, opts), &judge);
    report(field, opts, Mode::Superlevel { c }, found)
}

/// Superlevel test at the best level. A pair violates some level iff
/// `min(f(x), f(y)) − f(m) > 2 tol`, and the level with the widest
/// two-sided margin is `(min(f(x), f(y)) + f(m))/2`. The pair with the
/// largest gap fixes `c`; the returned report is the full test at that
/// level. Without any such pair, `c` is the median nodal value.
pub fn check_superlevel_auto<T: Real>(field: &Field<T>, opts: &SamplingOptions<T>) -> ConcavityReport<T> {
    let sets = point_sets(field, opts);
    let two = T::lit(2.0);
    let judge = move |x: [T; 2], y: [T; 2], fx: T, fy: T, fm: T, tol: T| {
        let bound = fx.min(fy);
        (bound - fm > two * tol).then_some(Witness {
            x,
            y,
            midpoint_value: fm,
            endpoint_bound: bound,
            gap: bound - fm,
        })
    };
    let (best, _, _) = scan_pairs(field, &sets, tol_scale(field, opts), &judge);
    let c = match best.first() {
        Some(w) => (w.endpoint_bound + w.midpoint_value) / two,
        None => {
            let mut sorted = field.values().to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted[sorted.len() / 2]
        }
    };
    superlevel_with_sets(field, c, opts, &sets)
}

/// Recomputes a witness's gap directly from the field (in log mode, from
/// the interpolated nodal logarithm, as the test itself does).
pub fn reverify<T: Real>(field: &Field<T>, mode: Mode<T>, w: &Witness<T>) -> Option<T> {
    let (fx, fy, fm) = match mode {
        Mode::LogConcavity => {
            let log = field.map("log", |v| v.ln());
            (log.eval(w.x)?, log.eval(w.y)?, log.eval(w.midpoint())?)
        }
        _ => (field.eval(w.x)?, field.eval(w.y)?, field.eval(w.midpoint())?),
    };
    Some(match mode {
        Mode::Superlevel { .. } => fx.min(fy) - fm,
        _ => (fx + fy) / T::lit(2.0) - fm,
    })
}
