//! Harmonic analysis on planar sectors.
//!
//! A sector of opening `θ₀ ∈ (0, π]` carries the Neumann harmonics
//! `ψ_i = r^{β_i} cos(β_i θ)` (even `i`) and `r^{β_i} sin(β_i θ)` (odd `i`),
//! `β_i = iπ/θ₀`, with `θ` measured counter-clockwise from the inward
//! bisector. The sign of odd-mode coefficients depends on that convention.
//!
//! Near a polygon corner the perturbation solution splits as
//! `v(x₀+x) = v(x₀) − (μ/4)|x|² + γ·x + Σ f_i ψ_i(x)` inside the cone
//! radius, and [`corner_expansion`] recovers the `f_i` by projecting arc
//! samples onto the angular cosine/sine basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Field, FieldKind};
use crate::polytope::Polytope;
use crate::scalar::Real;

/// Tangent cone of a planar convex domain at a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector<T> {
    pub vertex: [T; 2],
    pub theta0: T,
    /// Inward unit bisector.
    pub bisector: [T; 2],
    /// Outward unit normals of the two faces through the vertex.
    pub face_normals: [[T; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorExponent<T> {
    pub beta: T,
    /// `β ∈ (1, 2)`: the mode is neither absorbed into the degree-one part
    /// nor dominated by the quadratic term.
    pub critical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficient<T> {
    pub index: usize,
    pub beta: T,
    /// Estimate from the arc at the sample radius `r`.
    pub f: T,
    /// Estimate from the arc at `r/2`.
    pub f_half: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerExpansion<T> {
    pub sector: Sector<T>,
    pub sample_radius: T,
    /// Modes with `β_i ≠ 1`, ascending in `β`.
    pub coefficients: Vec<ModeCoefficient<T>>,
    /// Degree-one part `γ + f·∇ψ` in global coordinates.
    pub linear_part: [T; 2],
    /// Nodal value at the vertex.
    pub constant: T,
    pub mu: T,
    /// Largest `|f − f_half| / max(|f|, |f_half|)` over modes whose
    /// coefficient exceeds the noise floor.
    pub two_radius_spread: T,
}

impl<T: Real> Sector<T> {
    /// Sector `{x : n₁·(x−v) ≤ 0, n₂·(x−v) ≤ 0}` from outward unit normals.
    pub fn from_normals(vertex: [T; 2], n1: [T; 2], n2: [T; 2]) -> Result<Self> {
        let unit = |n: [T; 2]| -> Result<[T; 2]> {
            let l = n[0].hypot(n[1]);
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::DegenerateSector);
            }
            Ok([n[0] / l, n[1] / l])
        };
        let (n1, n2) = (unit(n1)?, unit(n2)?);
        let c = (n1[0] * n2[0] + n1[1] * n2[1]).max(-T::one()).min(T::one());
        let theta0 = T::PI() - c.acos();
        if theta0 <= T::lit(1e-12) {
            return Err(Error::DegenerateSector);
        }
        let s = [-(n1[0] + n2[0]), -(n1[1] + n2[1])];
        let l = s[0].hypot(s[1]);
        let bisector = if l > T::lit(1e-12) { [s[0] / l, s[1] / l] } else { [-n1[0], -n1[1]] };
        Ok(Self {
            vertex,
            theta0,
            bisector,
            face_normals: [n1, n2],
        })
    }

    /// Sector with the given opening whose bisector points along `bisector`.
    pub fn new(vertex: [T; 2], theta0: T, bisector: [T; 2]) -> Result<Self> {
        check_angle(theta0)?;
        let l = bisector[0].hypot(bisector[1]);
        if !(l > T::zero()) {
            return Err(Error::DegenerateSector);
        }
        let b = [bisector[0] / l, bisector[1] / l];
        let half = theta0 / T::lit(2.0);
        // Boundary rays at ±θ₀/2; outward normals are the rays rotated away
        // from the interior.
        let rot = |v: [T; 2], a: T| [v[0] * a.cos() - v[1] * a.sin(), v[0] * a.sin() + v[1] * a.cos()];
        let ray_plus = rot(b, half);
        let ray_minus = rot(b, -half);
        let n_plus = [-ray_plus[1], ray_plus[0]];
        let n_minus = [ray_minus[1], -ray_minus[0]];
        Ok(Self {
            vertex,
            theta0,
            bisector: b,
            face_normals: [n_plus, n_minus],
        })
    }

    /// Tangent cone at vertex `k` of a polygon (counter-clockwise order of
    /// [`Polytope::polygon_cycle`]).
    pub fn at_polygon_vertex(p: &Polytope<T>, k: usize) -> Result<Self> {
        let cycle = p.polygon_cycle()?;
        let n = cycle.len();
        if k >= n {
            return Err(Error::InvalidParameter(format!("polygon has {n} vertices, asked for {k}")));
        }
        let incoming = cycle[(k + n - 1) % n].1;
        let outgoing = cycle[k].1;
        let nv = |f: usize| {
            let h = &p.halfspaces()[f];
            [h.normal[0], h.normal[1]]
        };
        let v = &cycle[k].0;
        Self::from_normals([v[0], v[1]], nv(incoming), nv(outgoing))
    }

    /// Counter-clockwise unit vector orthogonal to the bisector.
    fn lateral(&self) -> [T; 2] {
        [-self.bisector[1], self.bisector[0]]
    }

    /// Polar coordinates `(r, θ)` about the vertex, `θ` from the bisector.
    pub fn polar(&self, p: [T; 2]) -> (T, T) {
        let x = [p[0] - self.vertex[0], p[1] - self.vertex[1]];
        let e = self.lateral();
        let a = x[0] * self.bisector[0] + x[1] * self.bisector[1];
        let b = x[0] * e[0] + x[1] * e[1];
        (a.hypot(b), b.atan2(a))
    }

    /// Point at polar coordinates `(r, θ)`.
    pub fn point(&self, r: T, theta: T) -> [T; 2] {
        let e = self.lateral();
        let (c, s) = (theta.cos(), theta.sin());
        [
            self.vertex[0] + r * (c * self.bisector[0] + s * e[0]),
            self.vertex[1] + r * (c * self.bisector[1] + s * e[1]),
        ]
    }

    pub fn contains(&self, p: [T; 2]) -> bool {
        let x = [p[0] - self.vertex[0], p[1] - self.vertex[1]];
        let scale = T::one() + x[0].abs() + x[1].abs();
        self.face_normals
            .iter()
            .all(|n| n[0] * x[0] + n[1] * x[1] <= T::lit(1e-12) * scale)
    }
}

fn check_angle<T: Real>(theta0: T) -> Result<()> {
    if !(theta0 > T::zero()) || theta0 > T::PI() * (T::one() + T::lit(1e-12)) {
        return Err(Error::InvalidAngle(theta0.to_f64_lossy()));
    }
    Ok(())
}

/// `β_i = iπ/θ₀` and whether it lies in `(1, 2)`.
pub fn sector_exponent<T: Real>(theta0: T, i: usize) -> Result<SectorExponent<T>> {
    check_angle(theta0)?;
    let beta = T::from_usize_lossy(i) * T::PI() / theta0;
    Ok(SectorExponent {
        beta,
        critical: beta > T::one() && beta < T::lit(2.0),
    })
}

/// Angular factor of mode `i`: `cos(β_i θ)` for even `i`, `sin(β_i θ)` for odd.
fn angular<T: Real>(theta0: T, i: usize, theta: T) -> T {
    let arg = T::from_usize_lossy(i) * T::PI() * theta / theta0;
    if i.is_multiple_of(2) {
        arg.cos()
    } else {
        arg.sin()
    }
}

/// `ψ_i` at a point of the closed sector.
pub fn sector_eigenfunction<T: Real>(s: &Sector<T>, i: usize, p: [T; 2]) -> Result<T> {
    if !s.contains(p) {
        return Err(Error::PointOutsideSector);
    }
    let (r, theta) = s.polar(p);
    if i == 0 {
        return Ok(T::one());
    }
    let beta = sector_exponent(s.theta0, i)?.beta;
    Ok(r.powf(beta) * angular(s.theta0, i, theta))
}

/// `γ` with `γ·ν = −1` on both faces, so `ŵ(x) = γ·x` has unit outward flux.
pub fn degree_one_solution<T: Real>(s: &Sector<T>) -> Result<[T; 2]> {
    let half = (s.theta0 / T::lit(2.0)).sin();
    if !(s.theta0 > T::lit(1e-8)) || !(half > T::zero()) {
        return Err(Error::DegenerateSector);
    }
    let g = [s.bisector[0] / half, s.bisector[1] / half];
    for n in &s.face_normals {
        let dot = g[0] * n[0] + g[1] * n[1];
        if (dot + T::one()).abs() > T::lit(1e-10) {
            return Err(Error::InternalInconsistency(format!(
                "degree-one solution has flux {dot} instead of -1"
            )));
        }
    }
    Ok(g)
}

/// Largest radius for which `B_r(x) ∩ Ω` is the sector patch at `x`:
/// distance from `x` to the nearest face not through `x`.
pub fn cone_radius<T: Real>(p: &Polytope<T>, x: &[T]) -> T {
    let scale = T::one() + p.diameter();
    p.halfspaces()
        .iter()
        .map(|h| -h.excess(x))
        .filter(|&d| d > T::lit(1e-9) * scale)
        .fold(T::infinity(), T::min)
}

/// Angular projections of the arc remainder at radius `r`.
fn arc_coefficients<T: Real>(
    v: &Field<T>,
    s: &Sector<T>,
    r: T,
    modes: usize,
    subtract: &dyn Fn([T; 2]) -> T,
) -> Result<Vec<T>> {
    let samples = (8 * modes).max(64);
    let dtheta = s.theta0 / T::from_usize_lossy(samples);
    let half = s.theta0 / T::lit(2.0);
    let mut values = Vec::with_capacity(samples);
    for j in 0..samples {
        let theta = -half + (T::from_usize_lossy(j) + T::lit(0.5)) * dtheta;
        let p = s.point(r, theta);
        let val = v.eval(p).ok_or_else(|| {
            Error::MeshTooCoarse(format!("arc point ({}, {}) not covered by the mesh", p[0], p[1]))
        })?;
        values.push((theta, val - subtract(p)));
    }
    let mut out = Vec::with_capacity(modes + 1);
    for i in 0..=modes {
        let norm = if i == 0 { s.theta0 } else { s.theta0 / T::lit(2.0) };
        let proj: T = values.iter().map(|&(t, w)| w * angular(s.theta0, i, t)).sum::<T>() * dtheta;
        let beta = T::from_usize_lossy(i) * T::PI() / s.theta0;
        out.push(proj / (norm * r.powf(beta)));
    }
    Ok(out)
}

/// Corner coefficients of `v` on sector `s` from arcs at `r` and `r/2`.
///
/// For a perturbation field the vertex value, `−(μ/4)|x|²` and `γ·x` are
/// removed first; other fields are projected after removing only the vertex
/// value. `r` must not exceed the cone radius of the domain at the vertex,
/// which the caller passes in.
pub fn corner_expansion<T: Real>(
    v: &Field<T>,
    s: &Sector<T>,
    r: T,
    modes: usize,
    cone_radius: T,
) -> Result<CornerExpansion<T>> {
    if !(r > T::zero()) || r > cone_radius {
        return Err(Error::RadiusTooLarge {
            radius: r.to_f64_lossy(),
            cone_radius: cone_radius.to_f64_lossy(),
        });
    }
    let mesh = v.mesh();
    if mesh.h() > r / T::lit(4.0) {
        return Err(Error::MeshTooCoarse(format!(
            "mesh size {} does not resolve the arc r/2 = {}",
            mesh.h(),
            r / T::lit(2.0)
        )));
    }
    let node = mesh.nearest_node(s.vertex);
    let q = mesh.nodes()[node];
    let scale = T::one() + s.vertex[0].abs() + s.vertex[1].abs();
    if (q[0] - s.vertex[0]).hypot(q[1] - s.vertex[1]) > T::lit(1e-9) * scale {
        return Err(Error::InvalidParameter("sector vertex is not a mesh node".into()));
    }
    let constant = v.values()[node];
    let (mu, gamma) = match v.kind {
        FieldKind::Perturbation { mu } => (mu, degree_one_solution(s)?),
        _ => (T::zero(), [T::zero(); 2]),
    };
    let vx = s.vertex;
    let subtract = move |p: [T; 2]| {
        let x = [p[0] - vx[0], p[1] - vx[1]];
        constant - mu / T::lit(4.0) * (x[0] * x[0] + x[1] * x[1]) + gamma[0] * x[0] + gamma[1] * x[1]
    };
    let at_r = arc_coefficients(v, s, r, modes, &subtract)?;
    let at_half = arc_coefficients(v, s, r / T::lit(2.0), modes, &subtract)?;

    let mut linear_part = gamma;
    let mut coefficients = Vec::new();
    let floor = T::lit(1e-8) * (T::one() + v.max_abs());
    let mut spread = T::zero();
    for i in 0..=modes {
        let beta = T::from_usize_lossy(i) * T::PI() / s.theta0;
        if (beta - T::one()).abs() < T::lit(1e-12) {
            // Degree-one mode: r sin θ is the lateral coordinate.
            let e = s.lateral();
            linear_part = [linear_part[0] + at_r[i] * e[0], linear_part[1] + at_r[i] * e[1]];
            continue;
        }
        let (f, fh) = (at_r[i], at_half[i]);
        let big = f.abs().max(fh.abs());
        if i > 0 && big > floor {
            spread = spread.max((f - fh).abs() / big);
        }
        coefficients.push(ModeCoefficient {
            index: i,
            beta,
            f,
            f_half: fh,
        });
    }
    Ok(CornerExpansion {
        sector: s.clone(),
        sample_radius: r,
        coefficients,
        linear_part,
        constant,
        mu,
        two_radius_spread: spread,
    })
}

impl<T: Real> CornerExpansion<T> {
    pub fn mode(&self, i: usize) -> Option<&ModeCoefficient<T>> {
        self.coefficients.iter().find(|c| c.index == i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, solve_perturbation};
    use crate::mesh2d::triangulate;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn exponents() {
        let e = sector_exponent(2.0 * PI / 3.0, 1).unwrap();
        assert!((e.beta - 1.5).abs() < 1e-15 && e.critical);
        let e = sector_exponent(PI / 2.0, 1).unwrap();
        assert!((e.beta - 2.0).abs() < 1e-15 && !e.critical);
        let e = sector_exponent(3.0 * PI / 4.0, 2).unwrap();
        assert!((e.beta - 8.0 / 3.0).abs() < 1e-14);
        assert!(matches!(sector_exponent(0.0, 1), Err(Error::InvalidAngle(_))));
        assert!(matches!(sector_exponent(3.5, 1), Err(Error::InvalidAngle(_))));
    }

    #[test]
    fn sector_from_normals_invariants() {
        let s = Sector::<f64>::from_normals([0.0, 0.0], [-1.0, 0.0], [0.0, -1.0]).unwrap();
        assert!((s.theta0 - PI / 2.0).abs() < 1e-15);
        let g = degree_one_solution(&s).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-14 && (g[1] - 1.0).abs() < 1e-14);

        let s = Sector::<f64>::new([0.0, 0.0], 2.0 * PI / 3.0, [0.0, 1.0]).unwrap();
        let g = degree_one_solution(&s).unwrap();
        assert!((g[0].hypot(g[1]) - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        for n in &s.face_normals {
            assert!((n[0] * s.bisector[0] + n[1] * s.bisector[1] + (s.theta0 / 2.0).sin()).abs() < 1e-12);
        }

        let s = Sector::from_normals([0.0, 0.0], [0.0, -1.0], [0.0, -1.0]).unwrap();
        assert!((s.theta0 - PI).abs() < 1e-12);
        let g = degree_one_solution(&s).unwrap();
        assert!(g[0].abs() < 1e-14 && (g[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenfunction_values() {
        let s = Sector::<f64>::from_normals([0.0, 0.0], [-1.0, 0.0], [0.0, -1.0]).unwrap();
        assert_eq!(sector_eigenfunction(&s, 0, [0.3, 0.7]).unwrap(), 1.0);
        // Quarter plane: the quadratic mode is ψ₁ = r² sin 2θ = y² − x²;
        // ψ₂ is already quartic, r⁴ cos 4θ = 4x²y² − (x² − y²)².
        for p in [[0.3, 0.7], [1.0, 0.2], [0.5, 0.5]] {
            let v1 = sector_eigenfunction(&s, 1, p).unwrap();
            assert!((v1 - (p[1] * p[1] - p[0] * p[0])).abs() < 1e-12);
            let v2 = sector_eigenfunction(&s, 2, p).unwrap();
            let q = p[0] * p[0] - p[1] * p[1];
            assert!((v2 - (4.0 * p[0] * p[0] * p[1] * p[1] - q * q)).abs() < 1e-12);
        }
        assert!(matches!(sector_eigenfunction(&s, 1, [-0.1, 0.5]), Err(Error::PointOutsideSector)));

        let s = Sector::<f64>::new([1.0, 2.0], 3.0 * PI / 4.0, [1.0, 1.0]).unwrap();
        let a = sector_eigenfunction(&s, 1, s.point(0.4, 0.3)).unwrap();
        let b = sector_eigenfunction(&s, 1, s.point(0.4, -0.3)).unwrap();
        assert!((a + b).abs() < 1e-14 && a != 0.0);
    }

    #[test]
    fn trapezoid_corner_geometry() {
        let t = Polytope::<f64>::from_polygon(&[[0.0, 0.0], [3.0, 0.0], [2.0, 1.0], [0.0, 1.0]]).unwrap();
        let cycle = t.polygon_cycle().unwrap();
        let k = cycle.iter().position(|(v, _)| (v[0] - 2.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12).unwrap();
        let s = Sector::at_polygon_vertex(&t, k).unwrap();
        assert!((s.theta0 - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((cone_radius(&t, &[2.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!(s.contains([1.5, 0.9]) && s.contains([2.2, 0.5]) && !s.contains([2.5, 0.9]));
    }

    #[test]
    fn projection_recovers_pure_mode() {
        let s = Sector::<f64>::new([0.0, 0.0], 3.0 * PI / 4.0, [0.0, 1.0]).unwrap();
        let patch = Polytope::from_polygon(&[[0.0, 0.0], s.point(2.0, -3.0 * PI / 8.0), s.point(2.0, 3.0 * PI / 8.0)]).unwrap();
        let mesh = Arc::new(triangulate(&patch, 0.01).unwrap());
        let field = Field::from_fn(Arc::clone(&mesh), FieldKind::Imported, |p| sector_eigenfunction(&s, 1, p).unwrap_or(0.0));
        let e = corner_expansion(&field, &s, 0.5, 4, cone_radius(&patch, &[0.0, 0.0])).unwrap();
        let f1 = e.mode(1).unwrap();
        assert!((f1.f - 1.0).abs() < 2e-3, "{f1:?}");
        for c in &e.coefficients {
            if c.index != 1 {
                assert!(c.f.abs() < 2e-3, "{c:?}");
            }
        }
    }

    #[test]
    fn square_corner_has_no_singular_modes() {
        let sq = Polytope::<f64>::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let ops = assemble(triangulate(&sq, 0.02).unwrap()).unwrap();
        let v = solve_perturbation(&ops, None).unwrap().field;
        let s = Sector::at_polygon_vertex(&sq, 0).unwrap();
        let e = corner_expansion(&v, &s, 0.4, 4, cone_radius(&sq, &s.vertex)).unwrap();
        for c in &e.coefficients {
            if c.index > 0 {
                assert!(c.f.abs() < 5e-3, "{c:?}");
            }
        }
    }

    #[test]
    fn radius_checks() {
        let sq = Polytope::<f64>::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let ops = assemble(triangulate(&sq, 0.2).unwrap()).unwrap();
        let v = solve_perturbation(&ops, None).unwrap().field;
        let s = Sector::at_polygon_vertex(&sq, 0).unwrap();
        assert!(matches!(corner_expansion(&v, &s, 1.5, 4, 1.0), Err(Error::RadiusTooLarge { .. })));
        assert!(matches!(corner_expansion(&v, &s, 0.5, 4, 1.0), Err(Error::MeshTooCoarse(_))));
    }
}
