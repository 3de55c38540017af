//! Conforming triangulations of convex polygons.
//!
//! The coarse mesh is a fan around the area centroid; boundary edges longer
//! than the fan radius are split first so the initial triangles are not
//! stretched along the boundary. Refinement splits every triangle into four
//! through its edge midpoints, which halves `h` exactly, keeps every polygon
//! vertex a mesh node and preserves the shape of every triangle.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    /// Index into the polytope's half-space list.
    pub face: usize,
}

/// Triangulation of a convex polygon with face-tagged boundary edges.
///
/// Not deserializable: meshes are read back through [`crate::io`], which
/// validates them.
#[derive(Debug, Clone, Serialize)]
pub struct Mesh<T> {
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    /// Node index of every polygon vertex, counter-clockwise.
    corners: Vec<usize>,
    h: T,
    #[serde(skip)]
    locator: OnceLock<Locator>,
}

impl<T: PartialEq> PartialEq for Mesh<T> {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.triangles == other.triangles
            && self.boundary_edges == other.boundary_edges
            && self.corners == other.corners
    }
}

fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) / T::lit(2.0)
}

fn edge_len<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl<T: Real> Mesh<T> {
    /// Assembles a mesh from raw parts and validates it.
    pub fn from_parts(
        nodes: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        corners: Vec<usize>,
    ) -> Result<Self> {
        let n = nodes.len();
        for (index, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::Parse(format!("triangle {index} references a missing node")));
            }
            let area = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if !(area >= T::lit(1e-14)) {
                return Err(Error::DegenerateTriangle {
                    index,
                    area: area.to_f64_lossy(),
                });
            }
        }
        if boundary_edges.iter().any(|e| e.nodes.iter().any(|&v| v >= n))
            || corners.iter().any(|&v| v >= n)
        {
            return Err(Error::Parse("boundary data references a missing node".into()));
        }
        let h = triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| edge_len(nodes[a], nodes[b]))
            .fold(T::zero(), T::max);
        Ok(Self {
            nodes,
            triangles,
            boundary_edges,
            corners,
            h,
            locator: OnceLock::new(),
        })
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn corners(&self) -> &[usize] {
        &self.corners
    }

    /// Maximum edge length.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> T {
        self.boundary_edges
            .iter()
            .map(|e| edge_len(self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]))
            .sum()
    }

    /// Undirected edges, each once, as `(min, max)` node pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> T {
        let mut best = T::PI();
        for t in &self.triangles {
            for k in 0..3 {
                let p = self.nodes[t[k]];
                let a = self.nodes[t[(k + 1) % 3]];
                let b = self.nodes[t[(k + 2) % 3]];
                let (ux, uy) = (a[0] - p[0], a[1] - p[1]);
                let (vx, vy) = (b[0] - p[0], b[1] - p[1]);
                let ang = (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy);
                best = best.min(ang);
            }
        }
        best
    }

    /// Uniform refinement: every triangle split into four at edge midpoints.
    pub fn refine(&self) -> Self {
        let mut nodes = self.nodes.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<[T; 2]>| -> usize {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (nodes[a], nodes[b]);
                nodes.push([(p[0] + q[0]) / T::lit(2.0), (p[1] + q[1]) / T::lit(2.0)]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            let m = midpoint(a, b, &mut nodes);
            boundary_edges.push(BoundaryEdge { nodes: [a, m], face: e.face });
            boundary_edges.push(BoundaryEdge { nodes: [m, b], face: e.face });
        }
        Self {
            nodes,
            triangles,
            boundary_edges,
            corners: self.corners.clone(),
            h: self.h / T::lit(2.0),
            locator: OnceLock::new(),
        }
    }

    /// Pulls nodes towards polygon vertex `corners()[k]` with the radial map
    /// `r ↦ R (r/R)^power` inside the disk of radius `R`; elements near the
    /// vertex shrink by a factor `(r/R)^(power−1)`.
    ///
    /// The disk may only meet the two faces through the vertex, otherwise
    /// boundary nodes would leave the boundary.
    pub fn graded(&self, k: usize, radius: T, power: T) -> Result<Self> {
        let &c = self
            .corners
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("no polygon vertex {k}")))?;
        if !(radius > T::zero()) || !(power >= T::one()) {
            return Err(Error::InvalidParameter("grading needs radius > 0 and power >= 1".into()));
        }
        let centre = self.nodes[c];
        let own: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.nodes.contains(&c))
            .map(|e| e.face)
            .collect();
        let inside = |p: [T; 2]| edge_len(p, centre) < radius;
        if let Some(e) = self
            .boundary_edges
            .iter()
            .find(|e| !own.contains(&e.face) && e.nodes.iter().any(|&v| inside(self.nodes[v])))
        {
            return Err(Error::InvalidParameter(format!(
                "grading disk meets face {} which does not contain the vertex",
                e.face
            )));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|&p| {
                let r = edge_len(p, centre);
                if !inside(p) || r == T::zero() {
                    return p;
                }
                let s = (r / radius).powf(power - T::one());
                [centre[0] + (p[0] - centre[0]) * s, centre[1] + (p[1] - centre[1]) * s]
            })
            .collect();
        Self::from_parts(nodes, self.triangles.clone(), self.boundary_edges.clone(), self.corners.clone())
    }

    /// Barycentric location of `p`: the containing triangle and weights.
    ///
    /// Points within a relative `1e-9` of the mesh (boundary round-off) are
    /// snapped onto the nearest triangle.
    pub fn locate(&self, p: [T; 2]) -> Option<(usize, [T; 3])> {
        let loc = self.locator.get_or_init(|| Locator::build(self));
        let (x, y) = (p[0].to_f64_lossy(), p[1].to_f64_lossy());
        let mut best: Option<(usize, [T; 3], T)> = None;
        for t in loc.candidates(x, y) {
            let w = self.barycentric(t, p);
            let m = w[0].min(w[1]).min(w[2]);
            if m >= T::zero() {
                return Some((t, w));
            }
            if best.as_ref().is_none_or(|b| m > b.2) {
                best = Some((t, w, m));
            }
        }
        let (t, w, m) = best?;
        if m < -T::lit(1e-9) {
            return None;
        }
        let clamp = |v: T| v.max(T::zero());
        let s = clamp(w[0]) + clamp(w[1]) + clamp(w[2]);
        Some((t, [clamp(w[0]) / s, clamp(w[1]) / s, clamp(w[2]) / s]))
    }

    pub fn barycentric(&self, t: usize, p: [T; 2]) -> [T; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let total = signed_area(pa, pb, pc);
        [
            signed_area(p, pb, pc) / total,
            signed_area(pa, p, pc) / total,
            signed_area(pa, pb, p) / total,
        ]
    }

    /// P1 interpolation of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[T], p: [T; 2]) -> Option<T> {
        let (t, w) = self.locate(p)?;
        let tri = self.triangles[t];
        Some(w[0] * values[tri[0]] + w[1] * values[tri[1]] + w[2] * values[tri[2]])
    }

    /// Index of the node closest to `p`.
    pub fn nearest_node(&self, p: [T; 2]) -> usize {
        let mut best = (0, T::infinity());
        for (i, q) in self.nodes.iter().enumerate() {
            let d = edge_len(*q, p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

/// Uniform bucket grid over the mesh bounding box.
#[derive(Debug, Clone)]
struct Locator {
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn build<T: Real>(mesh: &Mesh<T>) -> Self {
        let pts: Vec<[f64; 2]> = mesh
            .nodes
            .iter()
            .map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()])
            .collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(f64::MIN_POSITIVE);
        let ntri = mesh.triangles.len().max(1) as f64;
        let cell = (area / ntri).sqrt() * 1.5;
        let dims = [
            (((hi[0] - lo[0]) / cell).ceil() as usize).max(1),
            (((hi[1] - lo[1]) / cell).ceil() as usize).max(1),
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let clampi = |v: f64, k: usize| -> usize { (v.max(0.0) as usize).min(dims[k] - 1) };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let xs = tri.map(|v| pts[v][0]);
            let ys = tri.map(|v| pts[v][1]);
            let (x0, x1) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let (i0, i1) = (clampi((x0 - lo[0]) / cell, 0), clampi((x1 - lo[0]) / cell, 0));
            let (j0, j1) = (clampi((y0 - lo[1]) / cell, 1), clampi((y1 - lo[1]) / cell, 1));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[i * dims[1] + j].push(t);
                }
            }
        }
        Self {
            origin: lo,
            cell,
            dims,
            buckets,
        }
    }

    /// Triangles registered in the cell of `(x, y)` and its neighbours.
    fn candidates(&self, x: f64, y: f64) -> impl Iterator<Item = usize> + '_ {
        let fi = ((x - self.origin[0]) / self.cell).floor() as i64;
        let fj = ((y - self.origin[1]) / self.cell).floor() as i64;
        let (ni, nj) = (self.dims[0] as i64, self.dims[1] as i64);
        let ci = fi.clamp(0, ni - 1);
        let cj = fj.clamp(0, nj - 1);
        let centre = std::iter::once((ci, cj));
        let ring = (-1..=1)
            .flat_map(move |di| (-1..=1).map(move |dj| (ci + di, cj + dj)))
            .filter(move |&(i, j)| (i, j) != (ci, cj) && i >= 0 && j >= 0 && i < ni && j < nj);
        centre
            .chain(ring)
            .flat_map(move |(i, j)| self.buckets[(i * nj + j) as usize].iter().copied())
    }
}

/// Fan triangulation of a convex polygon refined until `h ≤ target_h`.
pub fn triangulate<T: Real>(p: &Polytope<T>, target_h: T) -> Result<Mesh<T>> {
    if p.dim() != 2 {
        return Err(Error::DimensionUnsupported { dim: p.dim() });
    }
    if !(target_h > T::zero()) {
        return Err(Error::InvalidParameter(format!("target_h must be positive, got {target_h}")));
    }
    let cycle = p.polygon_cycle()?;
    let verts: Vec<[T; 2]> = cycle.iter().map(|(v, _)| [v[0], v[1]]).collect();
    let n = verts.len();

    let (mut a2, mut cx, mut cy) = (T::zero(), T::zero(), T::zero());
    for i in 0..n {
        let (p0, p1) = (verts[i], verts[(i + 1) % n]);
        let cross = p0[0] * p1[1] - p1[0] * p0[1];
        a2 += cross;
        cx += (p0[0] + p1[0]) * cross;
        cy += (p0[1] + p1[1]) * cross;
    }
    let centre = [cx / (T::lit(3.0) * a2), cy / (T::lit(3.0) * a2)];
    let fan_radius = verts
        .iter()
        .map(|&v| edge_len(v, centre))
        .fold(T::zero(), T::max);

    let mut nodes = vec![centre];
    let mut ring: Vec<usize> = Vec::new();
    let mut ring_faces: Vec<usize> = Vec::new();
    let mut corners = Vec::with_capacity(n);
    let seg_target = fan_radius.max(target_h);
    for i in 0..n {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        let face = cycle[i].1;
        let pieces = (edge_len(a, b) / seg_target).ceil().to_usize().unwrap_or(1).max(1);
        corners.push(nodes.len());
        for k in 0..pieces {
            let t = T::from_usize_lossy(k) / T::from_usize_lossy(pieces);
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            ring.push(nodes.len() - 1);
            ring_faces.push(face);
        }
    }
    let m = ring.len();
    let mut triangles = Vec::with_capacity(m);
    let mut boundary_edges = Vec::with_capacity(m);
    for k in 0..m {
        let (a, b) = (ring[k], ring[(k + 1) % m]);
        triangles.push([0, a, b]);
        boundary_edges.push(BoundaryEdge {
            nodes: [a, b],
            face: ring_faces[k],
        });
    }
    let mut mesh = Mesh::from_parts(nodes, triangles, boundary_edges, corners)?;
    while mesh.h() > target_h {
        mesh = mesh.refine();
    }
    Ok(mesh)
}

/// [`triangulate`] followed by [`Mesh::graded`] at every vertex whose
/// interior angle exceeds π/2, where the corner exponent `π/θ₀` drops below
/// two and second derivatives blow up. The grading radius is 0.9 times the
/// distance to the nearest face not through the vertex, capped at 0.45 times
/// the distance to any other graded vertex so that the disks stay disjoint.
pub fn triangulate_graded<T: Real>(p: &Polytope<T>, target_h: T, power: T) -> Result<Mesh<T>> {
    let mut mesh = triangulate(p, target_h)?;
    let n = mesh.corners().len();
    let corner = |k: usize| mesh.nodes()[mesh.corners()[k % n]];
    let obtuse: Vec<usize> = (0..n)
        .filter(|&k| {
            let (c, next, prev) = (corner(k), corner(k + 1), corner(k + n - 1));
            let (u, w) = ([next[0] - c[0], next[1] - c[1]], [prev[0] - c[0], prev[1] - c[1]]);
            let angle = (u[0] * w[1] - u[1] * w[0]).atan2(u[0] * w[0] + u[1] * w[1]);
            angle > T::FRAC_PI_2() + T::lit(1e-9)
        })
        .collect();
    let centres: Vec<[T; 2]> = obtuse.iter().map(|&k| corner(k)).collect();
    for (i, &k) in obtuse.iter().enumerate() {
        let c = centres[i];
        let mut radius = T::lit(0.9) * crate::cone_harmonics::cone_radius(p, &c);
        for (j, &o) in centres.iter().enumerate() {
            if j != i {
                radius = radius.min(T::lit(0.45) * edge_len(c, o));
            }
        }
        mesh = mesh.graded(k, radius, power)?;
    }
    Ok(mesh)
}
