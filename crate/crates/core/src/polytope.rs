//! Bounded convex polyhedra given as intersections of half-spaces
//! `{x : ν_i·x < b_i}`.
//!
//! Construction normalises the normals, rejects unbounded or empty input,
//! drops redundant half-spaces and enumerates the vertices together with
//! their active sets. Vertex enumeration solves every `d`-subset of facet
//! planes; this is exponential in `d` but exact and adequate for the few
//! dozen half-spaces a desk-scale domain has.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DMatrix};
use crate::scalar::Real;

/// Relative tolerance (times the diameter) deciding whether a point lies on
/// a facet plane.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-10;

/// `{x : normal·x ≤ offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

impl<T: Real> HalfSpace<T> {
    /// Normalises `normal` and rescales `offset` accordingly.
    pub fn new(normal: Vec<T>, offset: T) -> Result<Self> {
        let n = linalg::norm(&normal);
        if !(n > T::zero()) || !n.is_finite() || !offset.is_finite() {
            return Err(Error::DegenerateInput(
                "half-space with zero or non-finite normal".into(),
            ));
        }
        // Already unit up to rounding: keep the bits so that re-reading an
        // emitted domain reproduces it exactly.
        if (n - T::one()).abs() <= T::lit(8.0) * T::epsilon() {
            return Ok(Self { normal, offset });
        }
        Ok(Self {
            normal: linalg::scale(&normal, T::one() / n),
            offset: offset / n,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed excess `normal·x − offset` (negative inside).
    pub fn excess(&self, x: &[T]) -> T {
        linalg::dot(&self.normal, x) - self.offset
    }

    /// Image under `x ↦ Q x + t` for an orthogonal `Q`.
    pub fn transformed(&self, rotation: &DMatrix<T>, translation: &[T]) -> Self {
        let normal = rotation.mul_vec(&self.normal);
        let offset = self.offset + linalg::dot(&normal, translation);
        Self { normal, offset }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex<T> {
    pub point: Vec<T>,
    /// Indices of the half-spaces whose boundary passes through the vertex.
    pub active: Vec<usize>,
}

/// On-disk domain schema `{"dim": d, "halfspaces": [{"normal": [..], "offset": b}]}`.
/// Normals need not be normalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFile<T> {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpace<T>>,
}

impl<T: Real> TryFrom<DomainFile<T>> for Polytope<T> {
    type Error = Error;

    fn try_from(file: DomainFile<T>) -> Result<Self> {
        if let Some(h) = file.halfspaces.iter().find(|h| h.normal.len() != file.dim) {
            return Err(Error::DimensionMismatch {
                left: file.dim,
                right: h.normal.len(),
            });
        }
        let hs = file
            .halfspaces
            .into_iter()
            .map(|h| HalfSpace::new(h.normal, h.offset))
            .collect::<Result<Vec<_>>>()?;
        Polytope::new(hs)
    }
}

impl<T: Real> From<Polytope<T>> for DomainFile<T> {
    fn from(p: Polytope<T>) -> Self {
        Self {
            dim: p.dim,
            halfspaces: p.halfspaces,
        }
    }
}

/// Immutable bounded convex polytope with minimal half-space description.
///
/// (De)serializes as a [`DomainFile`]; reading one runs full validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainFile<T>", into = "DomainFile<T>", bound = "T: Real")]
pub struct Polytope<T> {
    dim: usize,
    halfspaces: Vec<HalfSpace<T>>,
    vertices: Vec<Vertex<T>>,
    diameter: T,
    active_tol: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary<T> {
    pub volume: T,
    pub surface_area: T,
    pub face_areas: Vec<T>,
    pub diameter: T,
    pub chebyshev_center: Vec<T>,
    pub inradius: T,
}

fn combinations(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All vertices of `{x : a_i·x ≤ b_i}` (assumed bounded), merged within
/// `merge_tol`.
fn enumerate_vertices<T: Real>(
    normals: &[Vec<T>],
    offsets: &[T],
    feas_tol: T,
    merge_tol: T,
) -> Vec<Vec<T>> {
    let m = normals.len();
    let d = normals.first().map_or(0, Vec::len);
    let mut out: Vec<Vec<T>> = Vec::new();
    let pivot_tol = T::lit(1e-12);
    combinations(m, d, |subset| {
        let rows: Vec<Vec<T>> = subset.iter().map(|&i| normals[i].clone()).collect();
        let rhs: Vec<T> = subset.iter().map(|&i| offsets[i]).collect();
        let Some(x) = linalg::solve(&DMatrix::from_rows(&rows), &rhs, pivot_tol) else {
            return;
        };
        let feasible = normals
            .iter()
            .zip(offsets)
            .all(|(a, &b)| linalg::dot(a, &x) - b <= feas_tol);
        if feasible && !out.iter().any(|v| linalg::dist(v, &x) <= merge_tol) {
            out.push(x);
        }
    });
    out
}

fn affine_rank<T: Real>(points: &[&Vec<T>], tol: T) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let rows: Vec<Vec<T>> = points[1..]
        .iter()
        .map(|p| linalg::sub(p, points[0]))
        .collect();
    linalg::rank(&rows, tol)
}

impl<T: Real> Polytope<T> {
    /// Builds a polytope from half-spaces (normals need not be normalised).
    pub fn new(halfspaces: Vec<HalfSpace<T>>) -> Result<Self> {
        Self::with_tolerance(halfspaces, T::lit(DEFAULT_ACTIVE_TOL))
    }

    /// As [`Polytope::new`] with an explicit relative active-set tolerance.
    pub fn with_tolerance(halfspaces: Vec<HalfSpace<T>>, rel_tol: T) -> Result<Self> {
        let d = halfspaces.first().map_or(0, HalfSpace::dim);
        if d == 0 {
            return Err(Error::DegenerateInput("empty half-space list".into()));
        }
        if halfspaces.iter().any(|h| h.dim() != d) {
            return Err(Error::DegenerateInput(
                "half-spaces of mixed dimension".into(),
            ));
        }
        if halfspaces.len() < d + 1 {
            return Err(Error::UnboundedDomain { dim: d });
        }
        let hs: Vec<HalfSpace<T>> = halfspaces
            .into_iter()
            .map(|h| HalfSpace::new(h.normal, h.offset))
            .collect::<Result<_>>()?;
        let same_tol = T::lit(1e-12);
        for i in 0..hs.len() {
            for j in (i + 1)..hs.len() {
                if linalg::dist(&hs[i].normal, &hs[j].normal) <= same_tol
                    && (hs[i].offset - hs[j].offset).abs()
                        <= same_tol * (T::one() + hs[i].offset.abs())
                {
                    return Err(Error::DegenerateInput(format!(
                        "half-spaces {i} and {j} coincide"
                    )));
                }
            }
        }

        // Recession cone {y : ν_i·y ≤ 0} must be {0}; inspect it inside the
        // unit box, which does not depend on the offsets.
        let mut cone_normals: Vec<Vec<T>> = hs.iter().map(|h| h.normal.clone()).collect();
        let mut cone_offsets = vec![T::zero(); hs.len()];
        for k in 0..d {
            for s in [T::one(), -T::one()] {
                let mut e = vec![T::zero(); d];
                e[k] = s;
                cone_normals.push(e);
                cone_offsets.push(T::one());
            }
        }
        let eps = T::lit(1e-9);
        let cone = enumerate_vertices(&cone_normals, &cone_offsets, eps, eps);
        if cone.iter().any(|v| linalg::norm(v) > T::lit(1e-7)) {
            return Err(Error::UnboundedDomain { dim: d });
        }

        let normals: Vec<Vec<T>> = hs.iter().map(|h| h.normal.clone()).collect();
        let offsets: Vec<T> = hs.iter().map(|h| h.offset).collect();
        let scale = offsets
            .iter()
            .fold(T::zero(), |m, &b| m.max(b.abs()))
            .max(T::min_positive_value());
        let points = enumerate_vertices(&normals, &offsets, T::lit(1e-10) * scale, T::lit(1e-9) * scale);
        if points.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let diameter = max_pair_distance(&points);
        if !(diameter > T::zero()) {
            return Err(Error::EmptyDomain);
        }
        let active_tol = rel_tol * diameter;
        let refs: Vec<&Vec<T>> = points.iter().collect();
        if affine_rank(&refs, T::lit(1e-9)) < d {
            return Err(Error::EmptyDomain);
        }

        // A half-space is irredundant iff its face has dimension d − 1.
        let kept: Vec<HalfSpace<T>> = hs
            .into_iter()
            .filter(|h| {
                let on: Vec<&Vec<T>> = points
                    .iter()
                    .filter(|p| h.excess(p).abs() <= active_tol)
                    .collect();
                !on.is_empty() && affine_rank(&on, T::lit(1e-9)) == d - 1
            })
            .collect();

        let vertices = points
            .into_iter()
            .map(|point| {
                let active = kept
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| h.excess(&point).abs() <= active_tol)
                    .map(|(i, _)| i)
                    .collect();
                Vertex { point, active }
            })
            .collect();

        Ok(Self {
            dim: d,
            halfspaces: kept,
            vertices,
            diameter,
            active_tol,
        })
    }

    /// Axis-aligned box `∏ [lo_k, hi_k]`.
    pub fn from_box(lo: &[T], hi: &[T]) -> Result<Self> {
        let d = lo.len();
        let mut hs = Vec::with_capacity(2 * d);
        for k in 0..d {
            let mut e = vec![T::zero(); d];
            e[k] = T::one();
            hs.push(HalfSpace::new(e.clone(), hi[k])?);
            hs.push(HalfSpace::new(linalg::scale(&e, -T::one()), -lo[k])?);
        }
        Self::new(hs)
    }

    /// Convex polygon from its vertices listed counter-clockwise.
    pub fn from_polygon(points: &[[T; 2]]) -> Result<Self> {
        let n = points.len();
        let mut hs = Vec::with_capacity(n);
        for i in 0..n {
            let a = points[i];
            let b = points[(i + 1) % n];
            let normal = vec![b[1] - a[1], a[0] - b[0]];
            let offset = normal[0] * a[0] + normal[1] * a[1];
            hs.push(HalfSpace::new(normal, offset)?);
        }
        Self::new(hs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace<T>] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vertex<T>] {
        &self.vertices
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    /// Absolute active-set tolerance (relative tolerance × diameter).
    pub fn active_tol(&self) -> T {
        self.active_tol
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.halfspaces
            .iter()
            .all(|h| h.excess(x) <= self.active_tol)
    }

    /// Indices `I(x)` of the faces through `x`; empty for interior points.
    pub fn tangent_cone(&self, x: &[T]) -> Result<Vec<usize>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        let worst = self
            .halfspaces
            .iter()
            .map(|h| h.excess(x))
            .fold(T::neg_infinity(), T::max);
        if worst > self.active_tol {
            return Err(Error::PointOutsideDomain {
                excess: worst.to_f64_lossy(),
            });
        }
        Ok(self
            .halfspaces
            .iter()
            .enumerate()
            .filter(|(_, h)| h.excess(x).abs() <= self.active_tol)
            .map(|(i, _)| i)
            .collect())
    }

    /// Normals of the faces through `x`.
    pub fn tangent_normals(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        Ok(self
            .tangent_cone(x)?
            .into_iter()
            .map(|i| self.halfspaces[i].normal.clone())
            .collect())
    }

    /// Vertices lying on face `i`.
    pub fn face_vertices(&self, face: usize) -> Vec<&Vec<T>> {
        self.vertices
            .iter()
            .filter(|v| v.active.contains(&face))
            .map(|v| &v.point)
            .collect()
    }

    pub fn vertex_centroid(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.vertices.len());
        let mut c = vec![T::zero(); self.dim];
        for v in &self.vertices {
            for (ci, &xi) in c.iter_mut().zip(&v.point) {
                *ci += xi / n;
            }
        }
        c
    }

    /// Image of the polytope under the rigid motion `x ↦ Q x + t`.
    pub fn transformed(&self, rotation: &DMatrix<T>, translation: &[T]) -> Result<Self> {
        Self::new(
            self.halfspaces
                .iter()
                .map(|h| h.transformed(rotation, translation))
                .collect(),
        )
    }

    /// Image under `x ↦ s x`, `s > 0`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(
            self.halfspaces
                .iter()
                .map(|h| HalfSpace {
                    normal: h.normal.clone(),
                    offset: h.offset * s,
                })
                .collect(),
        )
    }

    /// Polygon with every vertex cut off by the chord through the two
    /// points at distance `eps` from it along its edges. The result is
    /// within Hausdorff distance `eps` of the original.
    pub fn clip_corners(&self, eps: T) -> Result<Self> {
        let cycle = self.polygon_cycle()?;
        let n = cycle.len();
        let pts: Vec<[T; 2]> = cycle.iter().map(|(v, _)| [v[0], v[1]]).collect();
        let shortest = (0..n)
            .map(|i| linalg::dist(&cycle[i].0, &cycle[(i + 1) % n].0))
            .fold(T::infinity(), T::min);
        if !(eps > T::zero()) || !(T::lit(2.0) * eps < shortest) {
            return Err(Error::InvalidParameter(format!(
                "clip size must lie in (0, {}) for this polygon",
                shortest / T::lit(2.0)
            )));
        }
        let toward = |from: [T; 2], to: [T; 2]| {
            let l = (to[0] - from[0]).hypot(to[1] - from[1]);
            [from[0] + eps * (to[0] - from[0]) / l, from[1] + eps * (to[1] - from[1]) / l]
        };
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let v = pts[i];
            out.push(toward(v, pts[(i + n - 1) % n]));
            out.push(toward(v, pts[(i + 1) % n]));
        }
        Self::from_polygon(&out)
    }

    /// Polygon boundary as a counter-clockwise cycle: entry `k` holds vertex
    /// `k` and the face joining it to vertex `k + 1`.
    pub fn polygon_cycle(&self) -> Result<Vec<(Vec<T>, usize)>> {
        if self.dim != 2 {
            return Err(Error::DimensionUnsupported { dim: self.dim });
        }
        let c = self.vertex_centroid();
        let mut order: Vec<(T, usize)> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| ((v.point[1] - c[1]).atan2(v.point[0] - c[0]), i))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let n = order.len();
        let mut cycle = Vec::with_capacity(n);
        for k in 0..n {
            let a = &self.vertices[order[k].1];
            let b = &self.vertices[order[(k + 1) % n].1];
            let face = a
                .active
                .iter()
                .copied()
                .find(|f| b.active.contains(f))
                .ok_or_else(|| {
                    Error::InternalInconsistency(
                        "consecutive polygon vertices share no face".into(),
                    )
                })?;
            cycle.push((a.point.clone(), face));
        }
        Ok(cycle)
    }

    /// Volume, facet measures, diameter and the Chebyshev ball.
    pub fn measures(&self) -> Result<GeometrySummary<T>> {
        let d = self.dim;
        if d > 3 {
            return Err(Error::DimensionUnsupported { dim: d });
        }
        let c = self.vertex_centroid();
        let face_areas: Vec<T> = (0..self.halfspaces.len())
            .map(|i| self.face_measure(i))
            .collect();
        let volume = match d {
            1 => self.diameter,
            _ => face_areas
                .iter()
                .zip(&self.halfspaces)
                .map(|(&a, h)| a * (-h.excess(&c)) / T::from_usize_lossy(d))
                .sum(),
        };
        let surface_area = face_areas.iter().copied().sum();
        let (chebyshev_center, inradius) = self.chebyshev_ball();
        Ok(GeometrySummary {
            volume,
            surface_area,
            face_areas,
            diameter: self.diameter,
            chebyshev_center,
            inradius,
        })
    }

    fn face_measure(&self, face: usize) -> T {
        let pts = self.face_vertices(face);
        match self.dim {
            1 => T::one(),
            2 => {
                let mut best = T::zero();
                for a in &pts {
                    for b in &pts {
                        best = best.max(linalg::dist(a, b));
                    }
                }
                best
            }
            _ => {
                let normal = &self.halfspaces[face].normal;
                let basis = plane_basis(normal);
                let n = T::from_usize_lossy(pts.len());
                let mut mean = vec![T::zero(); 3];
                for p in &pts {
                    for k in 0..3 {
                        mean[k] += p[k] / n;
                    }
                }
                let mut planar: Vec<(T, T, T)> = pts
                    .iter()
                    .map(|p| {
                        let r = linalg::sub(p, &mean);
                        let u = linalg::dot(&r, &basis[0]);
                        let v = linalg::dot(&r, &basis[1]);
                        (v.atan2(u), u, v)
                    })
                    .collect();
                planar.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let k = planar.len();
                let twice: T = (0..k)
                    .map(|i| {
                        let (_, x0, y0) = planar[i];
                        let (_, x1, y1) = planar[(i + 1) % k];
                        x0 * y1 - x1 * y0
                    })
                    .sum();
                twice.abs() / T::lit(2.0)
            }
        }
    }

    /// Solves `max R s.t. ν_i·x + R ≤ b_i` by enumerating the vertices of the
    /// lifted feasible set; ties are broken by averaging all maximisers so
    /// that symmetric domains get their symmetric centre.
    fn chebyshev_ball(&self) -> (Vec<T>, T) {
        let d = self.dim;
        let mut normals: Vec<Vec<T>> = self
            .halfspaces
            .iter()
            .map(|h| {
                let mut a = h.normal.clone();
                a.push(T::one());
                a
            })
            .collect();
        let mut offsets: Vec<T> = self.halfspaces.iter().map(|h| h.offset).collect();
        let mut floor = vec![T::zero(); d + 1];
        floor[d] = -T::one();
        normals.push(floor);
        offsets.push(T::zero());
        let tol = T::lit(1e-12) * self.diameter;
        let cands = enumerate_vertices(&normals, &offsets, tol, tol);
        let best = cands.iter().fold(T::zero(), |m, v| m.max(v[d]));
        let winners: Vec<&Vec<T>> = cands
            .iter()
            .filter(|v| v[d] >= best - T::lit(1e-10) * self.diameter)
            .collect();
        let n = T::from_usize_lossy(winners.len());
        let mut center = vec![T::zero(); d];
        for w in &winners {
            for k in 0..d {
                center[k] += w[k] / n;
            }
        }
        (center, best)
    }

    /// Euclidean distance from `x` to the closed polytope (`d ≤ 3`).
    pub fn distance_to(&self, x: &[T]) -> Result<T> {
        let d = self.dim;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: x.len(),
            });
        }
        if d > 3 {
            return Err(Error::DimensionUnsupported { dim: d });
        }
        if self.halfspaces.iter().all(|h| h.excess(x) <= T::zero()) {
            return Ok(T::zero());
        }
        let mut best = self
            .vertices
            .iter()
            .map(|v| linalg::dist(&v.point, x))
            .fold(T::infinity(), T::min);
        // Projections onto facet planes that land in the polytope.
        for h in &self.halfspaces {
            let e = h.excess(x);
            if e <= T::zero() {
                continue;
            }
            let proj: Vec<T> = x.iter().zip(&h.normal).map(|(&xi, &ni)| xi - e * ni).collect();
            if self.contains(&proj) {
                best = best.min(e);
            }
        }
        // Edges: vertex pairs sharing at least d − 1 facets.
        if d == 3 {
            for (i, a) in self.vertices.iter().enumerate() {
                for b in &self.vertices[i + 1..] {
                    let shared = a.active.iter().filter(|f| b.active.contains(f)).count();
                    if shared >= 2 {
                        best = best.min(point_segment_distance(x, &a.point, &b.point));
                    }
                }
            }
        }
        Ok(best)
    }
}

fn max_pair_distance<T: Real>(points: &[Vec<T>]) -> T {
    let mut best = T::zero();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(linalg::dist(a, b));
        }
    }
    best
}

fn point_segment_distance<T: Real>(x: &[T], a: &[T], b: &[T]) -> T {
    let ab = linalg::sub(b, a);
    let ax = linalg::sub(x, a);
    let len2 = linalg::dot(&ab, &ab);
    let t = if len2 > T::zero() {
        (linalg::dot(&ax, &ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let p: Vec<T> = a.iter().zip(&ab).map(|(&ai, &di)| ai + t * di).collect();
    linalg::dist(x, &p)
}

/// Orthonormal basis of the plane orthogonal to a unit 3-vector.
fn plane_basis<T: Real>(n: &[T]) -> [Vec<T>; 2] {
    let pick = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        0
    } else if n[1].abs() <= n[2].abs() {
        1
    } else {
        2
    };
    let mut e = vec![T::zero(); 3];
    e[pick] = T::one();
    let c = linalg::dot(&e, n);
    let u: Vec<T> = e.iter().zip(n).map(|(&ei, &ni)| ei - c * ni).collect();
    let u = linalg::scale(&u, T::one() / linalg::norm(&u));
    let v = vec![
        n[1] * u[2] - n[2] * u[1],
        n[2] * u[0] - n[0] * u[2],
        n[0] * u[1] - n[1] * u[0],
    ];
    [u, v]
}

/// Hausdorff distance between two polytopes of equal dimension.
///
/// For convex bodies the farthest point of one body from the other is
/// attained at a vertex, so only vertex-to-body distances are needed.
pub fn hausdorff_distance<T: Real>(p: &Polytope<T>, q: &Polytope<T>) -> Result<T> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let mut best = T::zero();
    for v in p.vertices() {
        best = best.max(q.distance_to(&v.point)?);
    }
    for v in q.vertices() {
        best = best.max(p.distance_to(&v.point)?);
    }
    Ok(best)
}
