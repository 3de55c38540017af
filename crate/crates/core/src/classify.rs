//! Circumsolids, products of circumsolids and consistency of normals.
//!
//! A polytope is a circumsolid when every facet plane lies at the same
//! distance `R` from a common centre `x₀`, i.e. `ν_i·x₀ + R = b_i` for all
//! `i`. It is a product of circumsolids when its normals split into mutually
//! orthogonal groups and the projection onto the span of each group is a
//! circumsolid. Exactly these domains carry a quadratic solution of
//! `Δv + μ = 0`, `∂_ν v = −1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DMatrix};
use crate::polytope::Polytope;
use crate::scalar::Real;

/// Absolute tolerance on unit-normalised data for rank, orthogonality and
/// residual decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Residuals within this factor above the tolerance are reported as
/// borderline instead of being silently rejected.
const BORDERLINE_FACTOR: f64 = 1e3;

/// One orthogonal factor `E_k` of a product decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor<T> {
    /// Orthonormal basis of `E_k`, one vector per row.
    pub basis: Vec<Vec<T>>,
    /// Centre in the coordinates of `basis`.
    pub local_center: Vec<T>,
    /// Centre embedded in `R^d`.
    pub center: Vec<T>,
    pub radius: T,
    /// Half-space indices whose normals span this factor.
    pub faces: Vec<usize>,
}

impl<T: Real> Factor<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Kind<T> {
    Circumsolid { center: Vec<T>, radius: T },
    ProductOfCircumsolids { factors: Vec<Factor<T>> },
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexReport<T> {
    pub point: Vec<T>,
    pub consistent: bool,
    pub gamma: Option<Vec<T>>,
    pub residual: T,
    pub borderline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification<T> {
    pub kind: Kind<T>,
    /// Every label that applies; a circumsolid is also a one-factor product.
    pub labels: Vec<String>,
    pub vertex_reports: Vec<VertexReport<T>>,
    /// Set when some residual decision fell close to the tolerance.
    pub borderline: bool,
}

impl<T: Real> Classification<T> {
    pub fn has_inconsistent_normals(&self) -> bool {
        self.vertex_reports.iter().any(|r| !r.consistent)
    }
}

/// `v(x) = ½ xᵀHx + ℓ·x + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm<T> {
    pub hessian: Vec<Vec<T>>,
    pub linear: Vec<T>,
    pub constant: T,
}

impl<T: Real> QuadraticForm<T> {
    pub fn eval(&self, x: &[T]) -> T {
        let hx: Vec<T> = self.hessian.iter().map(|row| linalg::dot(row, x)).collect();
        T::lit(0.5) * linalg::dot(x, &hx) + linalg::dot(&self.linear, x) + self.constant
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        self.hessian
            .iter()
            .zip(&self.linear)
            .map(|(row, &l)| linalg::dot(row, x) + l)
            .collect()
    }

    pub fn laplacian(&self) -> T {
        (0..self.hessian.len()).map(|i| self.hessian[i][i]).sum()
    }
}

struct CircumsolidFit<T> {
    center: Vec<T>,
    radius: T,
    residual: T,
}

fn fit_circumsolid<T: Real>(normals: &[Vec<T>], offsets: &[T]) -> CircumsolidFit<T> {
    let rows: Vec<Vec<T>> = normals
        .iter()
        .map(|n| {
            let mut r = n.clone();
            r.push(T::one());
            r
        })
        .collect();
    let ls = linalg::least_squares(&DMatrix::from_rows(&rows), offsets, T::lit(1e-14));
    let k = ls.x.len() - 1;
    CircumsolidFit {
        center: ls.x[..k].to_vec(),
        radius: ls.x[k],
        residual: ls.residual,
    }
}

fn accept<T: Real>(residual: T, radius: T, scale: T, tol: T) -> (bool, bool) {
    let limit = tol * scale;
    let ok = residual <= limit && radius > T::zero();
    let borderline = residual > limit && residual <= T::lit(BORDERLINE_FACTOR) * limit;
    (ok, borderline)
}

/// Centre and radius of a ball touching every facet, if one exists.
pub fn is_circumsolid<T: Real>(p: &Polytope<T>) -> Option<(Vec<T>, T)> {
    is_circumsolid_tol(p, T::lit(DEFAULT_TOL))
}

pub fn is_circumsolid_tol<T: Real>(p: &Polytope<T>, tol: T) -> Option<(Vec<T>, T)> {
    let normals: Vec<Vec<T>> = p.halfspaces().iter().map(|h| h.normal.clone()).collect();
    let offsets: Vec<T> = p.halfspaces().iter().map(|h| h.offset).collect();
    let fit = fit_circumsolid(&normals, &offsets);
    let (ok, _) = accept(fit.residual, fit.radius, p.diameter(), tol);
    ok.then_some((fit.center, fit.radius))
}

/// Groups of normals under the transitive closure of "not orthogonal".
fn normal_groups<T: Real>(normals: &[Vec<T>], tol: T) -> Vec<Vec<usize>> {
    let m = normals.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if linalg::dot(&normals[i], &normals[j]).abs() > tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

struct Decomposition<T> {
    kind: Kind<T>,
    borderline: bool,
}

fn decompose<T: Real>(p: &Polytope<T>, tol: T) -> Result<Decomposition<T>> {
    let d = p.dim();
    let hs = p.halfspaces();
    let normals: Vec<Vec<T>> = hs.iter().map(|h| h.normal.clone()).collect();
    let groups = normal_groups(&normals, tol);
    let mut factors = Vec::with_capacity(groups.len());
    let mut borderline = false;
    let mut all_pass = true;
    let mut total_dim = 0;
    for group in &groups {
        let members: Vec<Vec<T>> = group.iter().map(|&i| normals[i].clone()).collect();
        let basis = linalg::orthonormal_basis(&members, tol);
        total_dim += basis.len();
        let local_normals: Vec<Vec<T>> = members
            .iter()
            .map(|n| basis.iter().map(|b| linalg::dot(b, n)).collect())
            .collect();
        let offsets: Vec<T> = group.iter().map(|&i| hs[i].offset).collect();
        let fit = fit_circumsolid(&local_normals, &offsets);
        let (ok, border) = accept(fit.residual, fit.radius, p.diameter(), tol);
        borderline |= border;
        all_pass &= ok;
        let mut center = vec![T::zero(); d];
        for (c, b) in fit.center.iter().zip(&basis) {
            for (x, &bi) in center.iter_mut().zip(b) {
                *x += *c * bi;
            }
        }
        factors.push(Factor {
            basis,
            local_center: fit.center,
            center,
            radius: fit.radius,
            faces: group.clone(),
        });
    }
    for (a, fa) in factors.iter().enumerate() {
        for fb in &factors[a + 1..] {
            for u in &fa.basis {
                for v in &fb.basis {
                    if linalg::dot(u, v).abs() > T::lit(1e3) * tol {
                        return Err(Error::InternalInconsistency(
                            "factor subspaces are not orthogonal".into(),
                        ));
                    }
                }
            }
        }
    }
    if total_dim != d {
        return Err(Error::InternalInconsistency(format!(
            "normal groups span a {total_dim}-dimensional subspace of R^{d}"
        )));
    }
    let kind = if !all_pass {
        Kind::Other
    } else if factors.len() == 1 {
        let f = factors.pop().unwrap();
        Kind::Circumsolid {
            center: f.center,
            radius: f.radius,
        }
    } else {
        Kind::ProductOfCircumsolids { factors }
    };
    Ok(Decomposition { kind, borderline })
}

/// Orthogonal decomposition into circumsolid factors.
pub fn product_decomposition<T: Real>(p: &Polytope<T>) -> Result<Kind<T>> {
    Ok(decompose(p, T::lit(DEFAULT_TOL))?.kind)
}

/// `γ` with `γ·ν_i = −1` for every given normal, when it exists.
pub fn consistent_normals<T: Real>(normals: &[Vec<T>]) -> Option<Vec<T>> {
    let (gamma, residual) = consistency_fit(normals);
    (residual <= T::lit(DEFAULT_TOL)).then_some(gamma)
}

fn consistency_fit<T: Real>(normals: &[Vec<T>]) -> (Vec<T>, T) {
    assert!(!normals.is_empty(), "consistency needs at least one normal");
    let rhs = vec![-T::one(); normals.len()];
    let ls = linalg::least_squares(&DMatrix::from_rows(normals), &rhs, T::lit(1e-14));
    (ls.x, ls.residual)
}

/// Normal consistency at every vertex.
///
/// Checking vertices suffices: the active set of any boundary point is a
/// subset of the active set of some vertex of the face containing it, and a
/// solvable system `γ·ν_i = −1` stays solvable on any subset of equations.
pub fn analyze_normals<T: Real>(p: &Polytope<T>) -> Vec<VertexReport<T>> {
    let tol = T::lit(DEFAULT_TOL);
    p.vertices()
        .iter()
        .map(|v| {
            let normals: Vec<Vec<T>> = v
                .active
                .iter()
                .map(|&i| p.halfspaces()[i].normal.clone())
                .collect();
            let (gamma, residual) = consistency_fit(&normals);
            let consistent = residual <= tol;
            VertexReport {
                point: v.point.clone(),
                consistent,
                gamma: consistent.then_some(gamma),
                residual,
                borderline: !consistent && residual <= T::lit(BORDERLINE_FACTOR) * tol,
            }
        })
        .collect()
}

pub fn classify<T: Real>(p: &Polytope<T>) -> Result<Classification<T>> {
    let tol = T::lit(DEFAULT_TOL);
    let dec = decompose(p, tol)?;
    let vertex_reports = analyze_normals(p);
    let mut labels = Vec::new();
    match &dec.kind {
        Kind::Circumsolid { .. } => {
            labels.push("circumsolid".to_string());
            labels.push("product_of_circumsolids".to_string());
        }
        Kind::ProductOfCircumsolids { .. } => {
            if is_circumsolid_tol(p, tol).is_some() {
                labels.push("circumsolid".to_string());
            }
            labels.push("product_of_circumsolids".to_string());
        }
        Kind::Other => labels.push("other".to_string()),
    }
    let borderline = dec.borderline || vertex_reports.iter().any(|r| r.borderline);
    Ok(Classification {
        kind: dec.kind,
        labels,
        vertex_reports,
        borderline,
    })
}

/// `v(x) = −½ Σ_k |π_k(x) − p_k|² / R_k` for a product of circumsolids.
///
/// Returns `None` for other domains. For `d ≤ 3` the identity
/// `Σ_k dim(E_k)/R_k = |∂Ω|/|Ω|` is checked and a mismatch is an error.
pub fn quadratic_solution<T: Real>(p: &Polytope<T>) -> Result<Option<QuadraticForm<T>>> {
    let factors: Vec<Factor<T>> = match decompose(p, T::lit(DEFAULT_TOL))?.kind {
        Kind::Other => return Ok(None),
        Kind::Circumsolid { center, radius } => {
            let d = p.dim();
            let basis = (0..d)
                .map(|k| {
                    let mut e = vec![T::zero(); d];
                    e[k] = T::one();
                    e
                })
                .collect();
            vec![Factor {
                basis,
                local_center: center.clone(),
                center,
                radius,
                faces: (0..p.halfspaces().len()).collect(),
            }]
        }
        Kind::ProductOfCircumsolids { factors } => factors,
    };
    let d = p.dim();
    let mut hessian = vec![vec![T::zero(); d]; d];
    let mut linear = vec![T::zero(); d];
    let mut constant = T::zero();
    for f in &factors {
        let w = T::one() / f.radius;
        for (b, &c) in f.basis.iter().zip(&f.local_center) {
            for i in 0..d {
                for j in 0..d {
                    hessian[i][j] -= w * b[i] * b[j];
                }
                linear[i] += w * c * b[i];
            }
            constant -= T::lit(0.5) * w * c * c;
        }
    }
    let q = QuadraticForm {
        hessian,
        linear,
        constant,
    };
    if d <= 3 {
        let g = p.measures()?;
        let mu = g.surface_area / g.volume;
        if (-q.laplacian() - mu).abs() > T::lit(1e-10) * mu {
            return Err(Error::InternalInconsistency(format!(
                "quadratic solution has Δv = {} but |∂Ω|/|Ω| = {}",
                q.laplacian(),
                mu
            )));
        }
    }
    Ok(Some(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::HalfSpace;

    fn hs(n: &[f64], b: f64) -> HalfSpace<f64> {
        HalfSpace::new(n.to_vec(), b).unwrap()
    }

    fn triangle() -> Polytope<f64> {
        Polytope::new(
            [90.0f64, 210.0, 330.0]
                .iter()
                .map(|a| hs(&[a.to_radians().cos(), a.to_radians().sin()], 1.0))
                .collect(),
        )
        .unwrap()
    }

    fn trapezoid() -> Polytope<f64> {
        Polytope::new(vec![
            hs(&[0.0, 1.0], 1.0),
            hs(&[0.0, -1.0], 0.0),
            hs(&[-1.0, 0.0], 0.0),
            hs(&[1.0, 1.0], 3.0),
        ])
        .unwrap()
    }

    #[test]
    fn circumsolid_examples() {
        let (c, r) = is_circumsolid(&triangle()).unwrap();
        assert!(linalg::norm(&c) < 1e-12 && (r - 1.0).abs() < 1e-12);
        let sq = Polytope::<f64>::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let (c, r) = is_circumsolid(&sq).unwrap();
        assert!(linalg::dist(&c, &[0.5, 0.5]) < 1e-12 && (r - 0.5).abs() < 1e-12);
        assert!(is_circumsolid(&trapezoid()).is_none());
    }

    #[test]
    fn trapezoid_normal_system_has_no_solution() {
        // Hand solve: the y-faces force (y0, R) = (1/2, 1/2) and x ≥ 0 forces
        // x0 = 1/2; the slanted face then sits at distance (3 − 1)/√2 = √2.
        let (x0, y0, r) = (0.5f64, 0.5, 0.5);
        let slanted = (3.0 - x0 - y0) / 2f64.sqrt();
        assert!((slanted - 2f64.sqrt()).abs() < 1e-15);
        assert!((slanted - r).abs() > 0.5);
        assert!(matches!(product_decomposition(&trapezoid()).unwrap(), Kind::Other));
        assert!(quadratic_solution(&trapezoid()).unwrap().is_none());
    }

    #[test]
    fn rectangle_is_a_product_of_intervals() {
        let rect = Polytope::<f64>::from_box(&[0.0, 0.0], &[3.0, 1.0]).unwrap();
        let Kind::ProductOfCircumsolids { factors } = product_decomposition(&rect).unwrap() else {
            panic!("rectangle must be a product");
        };
        assert_eq!(factors.len(), 2);
        let mut got: Vec<(f64, f64, f64)> = factors
            .iter()
            .map(|f| {
                assert_eq!(f.dim(), 1);
                let axis = if f.basis[0][0].abs() > 0.5 { 0.0 } else { 1.0 };
                let sign = f.basis[0][axis as usize].signum();
                (axis, sign * f.local_center[0], f.radius)
            })
            .collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((got[0].1 - 1.5).abs() < 1e-12 && (got[0].2 - 1.5).abs() < 1e-12);
        assert!((got[1].1 - 0.5).abs() < 1e-12 && (got[1].2 - 0.5).abs() < 1e-12);
        let c = classify(&rect).unwrap();
        assert_eq!(c.labels, vec!["product_of_circumsolids"]);
    }

    #[test]
    fn square_carries_both_labels() {
        let sq = Polytope::<f64>::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let c = classify(&sq).unwrap();
        assert!(matches!(c.kind, Kind::ProductOfCircumsolids { .. }));
        assert_eq!(c.labels, vec!["circumsolid", "product_of_circumsolids"]);
        assert!(!c.has_inconsistent_normals());
    }

    #[test]
    fn consistency_examples() {
        let g = consistent_normals::<f64>(&[vec![1.0, 0.0], vec![0.6, 0.8]]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12);
        let s2 = 0.5f64.sqrt();
        let s5 = 0.2f64.sqrt();
        let bad = vec![
            vec![s2, 0.0, s2],
            vec![-s2, 0.0, s2],
            vec![0.0, s2, s2],
            vec![0.0, -s5, 2.0 * s5],
        ];
        assert!(consistent_normals(&bad).is_none());
        // Hand elimination: the first three rows force γ = (0, 0, −√2).
        let g = consistent_normals(&bad[..3]).unwrap();
        assert!(linalg::dist(&g, &[0.0, 0.0, -2f64.sqrt()]) < 1e-12);
        let cube: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                let mut e = vec![0.0; 4];
                e[k] = -1.0;
                e
            })
            .collect();
        let g = consistent_normals(&cube).unwrap();
        assert!(linalg::dist(&g, &[1.0; 4]) < 1e-12);
    }

    #[test]
    fn quadratic_solutions() {
        let q = quadratic_solution(&triangle()).unwrap().unwrap();
        assert!((q.laplacian() + 2.0).abs() < 1e-12);
        let x = [0.3, -0.2];
        assert!((q.eval(&x) + 0.5 * linalg::dot(&x, &x)).abs() < 1e-12);

        let sq = Polytope::<f64>::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let q = quadratic_solution(&sq).unwrap().unwrap();
        assert!((q.laplacian() + 4.0).abs() < 1e-12);
        let x = [0.2, 0.9];
        let want = -(0.2f64 - 0.5).powi(2) - (0.9f64 - 0.5).powi(2);
        assert!((q.eval(&x) - want).abs() < 1e-12);
        // D_ν v = −1 on every face, sampled at face midpoints.
        for (i, h) in sq.halfspaces().iter().enumerate() {
            let pts = sq.face_vertices(i);
            let mid = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
            let g = q.gradient(&mid);
            assert!((linalg::dot(&g, &h.normal) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn regular_pentagon_is_circumsolid() {
        let p = Polytope::new(
            (0..5)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
                    hs(&[a.cos(), a.sin()], 1.0)
                })
                .collect(),
        )
        .unwrap();
        let c = classify(&p).unwrap();
        let Kind::Circumsolid { center, radius } = c.kind else {
            panic!("pentagon must be a circumsolid")
        };
        assert!(linalg::norm(&center) < 1e-9 && (radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cube_quadratic_solution_matches_mu() {
        let cube = Polytope::<f64>::from_box(&[0.0; 3], &[2.0, 1.0, 1.0]).unwrap();
        let q = quadratic_solution(&cube).unwrap().unwrap();
        // μ = |∂Ω|/|Ω| = 10/2.
        assert!((q.laplacian() + 5.0).abs() < 1e-12);
    }
}
