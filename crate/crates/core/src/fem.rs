//! P1 finite elements on triangulated polygons.
//!
//! Two problems are solved on the same assembled operators:
//!
//! * the Neumann perturbation problem `Δv + μ = 0`, `∂_ν v = −γ_k` on face
//!   `k`, with `μ = Σ γ_k |Σ_k| / |Ω|` and the zero-mean gauge;
//! * the Robin eigenproblem `(K + αB) u = λ M u` for the two smallest
//!   eigenpairs, with `dλ₀/dα = ∫_{∂Ω} u₀² / ∫_Ω u₀²`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, DMatrix};
use crate::mesh2d::Mesh;
use crate::scalar::Real;
use crate::sparse::{nested_dissection, Cholesky, CsrMatrix};

/// Discrete bilinear forms of a mesh.
#[derive(Debug, Clone)]
pub struct OperatorSet<T> {
    pub mesh: Arc<Mesh<T>>,
    /// Stiffness `∫∇φ_i·∇φ_j`.
    pub k: CsrMatrix<T>,
    /// Mass `∫φ_iφ_j`.
    pub m: CsrMatrix<T>,
    /// Boundary mass `∫_{∂Ω}φ_iφ_j`.
    pub b: CsrMatrix<T>,
    /// `bflux[f][i] = ∫_{Σ_f} φ_i`, indexed by polytope face.
    pub bflux: Vec<Vec<T>>,
}

/// What a nodal field represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum FieldKind<T> {
    Perturbation { mu: T },
    RobinGround { alpha: T, lambda: T },
    Imported,
    Derived { description: String },
}

/// Nodal values of a P1 function on a shared mesh.
#[derive(Debug, Clone)]
pub struct Field<T> {
    mesh: Arc<Mesh<T>>,
    values: Vec<T>,
    pub kind: FieldKind<T>,
}

impl<T: Real> Field<T> {
    pub fn new(mesh: Arc<Mesh<T>>, values: Vec<T>, kind: FieldKind<T>) -> Result<Self> {
        if values.len() != mesh.nodes().len() {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: mesh.nodes().len(),
            });
        }
        Ok(Self { mesh, values, kind })
    }

    /// Field sampled from a function of position.
    pub fn from_fn(mesh: Arc<Mesh<T>>, kind: FieldKind<T>, f: impl Fn([T; 2]) -> T) -> Self {
        let values = mesh.nodes().iter().map(|&p| f(p)).collect();
        Self { mesh, values, kind }
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Piecewise-linear interpolation; `None` outside the mesh.
    pub fn eval(&self, p: [T; 2]) -> Option<T> {
        self.mesh.interpolate(&self.values, p)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    /// Nodewise transform, e.g. the logarithm of a positive field.
    pub fn map(&self, description: &str, f: impl Fn(T) -> T) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: FieldKind::Derived {
                description: description.to_string(),
            },
        }
    }
}

/// Zero-mean solution of the perturbation problem.
#[derive(Debug, Clone)]
pub struct Perturbation<T> {
    pub field: Field<T>,
    pub mu: T,
    /// `‖Kv − f‖ / ‖f‖`.
    pub residual: T,
}

/// Two smallest Robin eigenpairs at one `α`.
#[derive(Debug, Clone)]
pub struct SpectralResult<T> {
    pub alpha: T,
    pub lambda0: T,
    pub lambda1: T,
    /// Positive ground state with `(1/|Ω|) ∫u₀² = 1`.
    pub u0: Field<T>,
    pub dlambda_dalpha: T,
    /// Largest relative eigen-residual of the returned pairs.
    pub residual: T,
    pub iterations: usize,
    /// Converged eigenvector block, reusable as a warm start.
    pub basis: Vec<Vec<T>>,
}

impl<T: Real> SpectralResult<T> {
    pub fn gap(&self) -> T {
        self.lambda1 - self.lambda0
    }
}

#[derive(Debug, Clone)]
pub struct AlphaSweep<T> {
    pub results: Vec<SpectralResult<T>>,
    /// λ₀ nondecreasing along the sweep.
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions<T> {
    /// Bound on `‖Au − λMu‖₂ / (‖Mu‖₂ · max(|λ|, λ_ref))`.
    pub tol: T,
    pub max_iter: usize,
    /// Guard vectors carried beyond the wanted pairs.
    pub guard: usize,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-9).max(T::epsilon() * T::lit(1e3)),
            max_iter: 300,
            guard: 4,
        }
    }
}

/// Gradients of the three barycentric basis functions, times `2·area`.
fn scaled_gradients<T: Real>(p: [[T; 2]; 3]) -> [[T; 2]; 3] {
    let mut g = [[T::zero(); 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [a[1] - b[1], b[0] - a[0]];
    }
    g
}

pub fn assemble<T: Real>(mesh: impl Into<Arc<Mesh<T>>>) -> Result<OperatorSet<T>> {
    let mesh: Arc<Mesh<T>> = mesh.into();
    let n = mesh.nodes().len();
    let nodes = mesh.nodes();
    let mut kt = Vec::with_capacity(9 * mesh.triangles().len());
    let mut mt = Vec::with_capacity(9 * mesh.triangles().len());
    let (two, twelve) = (T::lit(2.0), T::lit(12.0));
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        if !(area > T::zero()) {
            return Err(Error::DegenerateTriangle {
                index: t,
                area: area.to_f64_lossy(),
            });
        }
        let g = scaled_gradients(tri.map(|v| nodes[v]));
        let scale = T::one() / (T::lit(4.0) * area);
        for i in 0..3 {
            for j in 0..3 {
                let kij = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) * scale;
                kt.push((tri[i], tri[j], kij));
                let mij = if i == j { two } else { T::one() } * area / twelve;
                mt.push((tri[i], tri[j], mij));
            }
        }
    }
    let faces = mesh.boundary_edges().iter().map(|e| e.face + 1).max().unwrap_or(0);
    let mut bflux = vec![vec![T::zero(); n]; faces];
    let mut bt = Vec::with_capacity(4 * mesh.boundary_edges().len());
    let six = T::lit(6.0);
    for e in mesh.boundary_edges() {
        let [a, b] = e.nodes;
        let len = (nodes[b][0] - nodes[a][0]).hypot(nodes[b][1] - nodes[a][1]);
        bt.push((a, a, two * len / six));
        bt.push((b, b, two * len / six));
        bt.push((a, b, len / six));
        bt.push((b, a, len / six));
        bflux[e.face][a] += len / two;
        bflux[e.face][b] += len / two;
    }
    Ok(OperatorSet {
        k: CsrMatrix::from_triplets(n, kt),
        m: CsrMatrix::from_triplets(n, mt),
        b: CsrMatrix::from_triplets(n, bt),
        bflux,
        mesh,
    })
}

impl<T: Real> OperatorSet<T> {
    pub fn area(&self) -> T {
        self.m.row_sums().into_iter().sum()
    }

    pub fn face_lengths(&self) -> Vec<T> {
        self.bflux.iter().map(|f| f.iter().copied().sum()).collect()
    }

    pub fn perimeter(&self) -> T {
        self.face_lengths().into_iter().sum()
    }

    fn factor(&self, a: &CsrMatrix<T>) -> Result<Cholesky<T>> {
        let perm = nested_dissection(self.mesh.nodes(), a);
        Cholesky::factor(a, Some(&perm))
    }
}

/// Solves `Kv = μ M1 − Σ γ_f bflux_f` with `1ᵀMv = 0`.
///
/// `gammas` is indexed by polytope face (all ones when `None`). The gauge is
/// fixed by pinning the fan centre and then removing the mean, which yields
/// the same function as the bordered system while keeping the solve SPD.
pub fn solve_perturbation<T: Real>(ops: &OperatorSet<T>, gammas: Option<&[T]>) -> Result<Perturbation<T>> {
    let n = ops.mesh.nodes().len();
    let faces = ops.bflux.len();
    let gammas: Vec<T> = match gammas {
        Some(g) if g.len() < faces => {
            return Err(Error::InvalidParameter(format!(
                "{} face constants given, mesh has {faces} tagged faces",
                g.len()
            )))
        }
        Some(g) => g[..faces].to_vec(),
        None => vec![T::one(); faces],
    };
    let area = ops.area();
    let lengths = ops.face_lengths();
    let mu = gammas.iter().zip(&lengths).map(|(&g, &l)| g * l).sum::<T>() / area;

    let mass_one = ops.m.row_sums();
    let mut rhs: Vec<T> = mass_one.iter().map(|&m| mu * m).collect();
    for (g, flux) in gammas.iter().zip(&ops.bflux) {
        for (r, &f) in rhs.iter_mut().zip(flux) {
            *r -= *g * f;
        }
    }

    let pin = 0;
    let keep: Vec<usize> = (0..n).filter(|&i| i != pin).collect();
    let k_red = ops.k.submatrix(&keep);
    let coords: Vec<[T; 2]> = keep.iter().map(|&i| ops.mesh.nodes()[i]).collect();
    let perm = nested_dissection(&coords, &k_red);
    let chol = Cholesky::factor(&k_red, Some(&perm)).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, value } => Error::SingularSystem(format!(
            "pinned stiffness matrix lost definiteness at pivot {pivot} ({value:e})"
        )),
        other => other,
    })?;
    let rhs_red: Vec<T> = keep.iter().map(|&i| rhs[i]).collect();
    let sol = chol.solve(&rhs_red);
    let mut v = vec![T::zero(); n];
    for (&i, s) in keep.iter().zip(sol) {
        v[i] = s;
    }
    let mean = dot(&mass_one, &v) / area;
    for x in &mut v {
        *x -= mean;
    }

    let kv = ops.k.mul_vec(&v);
    let res = kv.iter().zip(&rhs).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>().sqrt();
    let scale = rhs.iter().map(|r| *r * *r).sum::<T>().sqrt();
    let residual = if scale > T::zero() { res / scale } else { res };
    if !residual.is_finite() {
        return Err(Error::SingularSystem("non-finite perturbation solution".into()));
    }
    Ok(Perturbation {
        field: Field::new(Arc::clone(&ops.mesh), v, FieldKind::Perturbation { mu })?,
        mu,
        residual,
    })
}

/// Smallest `k` eigenpairs of `(K + αB) u = λ M u`.
pub fn robin_eigensystem<T: Real>(ops: &OperatorSet<T>, alpha: T, k: usize) -> Result<SpectralResult<T>> {
    robin_eigensystem_with(ops, alpha, k, &EigenOptions::default(), None)
}

pub fn robin_eigensystem_with<T: Real>(
    ops: &OperatorSet<T>,
    alpha: T,
    k: usize,
    opts: &EigenOptions<T>,
    warm: Option<&[Vec<T>]>,
) -> Result<SpectralResult<T>> {
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let k = k.max(2);
    let a = if alpha > T::zero() {
        CsrMatrix::lin_comb(T::one(), &ops.k, alpha, &ops.b)
    } else {
        ops.k.clone()
    };
    let area = ops.area();
    // At α = 0 the constants are in the kernel; shift below zero by a
    // length scale of the domain so the shifted operator is definite.
    let shift = if alpha > T::zero() {
        T::zero()
    } else {
        let s = ops.perimeter() / (T::lit(2.0) * area);
        -(s * s)
    };
    let shifted = if shift == T::zero() {
        a.clone()
    } else {
        CsrMatrix::lin_comb(T::one(), &a, -shift, &ops.m)
    };
    let chol = ops.factor(&shifted)?;
    let eig = subspace_iteration(&a, &ops.m, &chol, ops.mesh.nodes(), k, opts, warm)?;

    let mut u0 = eig.vectors[0].clone();
    let mass_one = ops.m.row_sums();
    if dot(&mass_one, &u0) < T::zero() {
        for x in &mut u0 {
            *x = -*x;
        }
    }
    let norm2 = ops.m.bilinear(&u0, &u0);
    let s = (area / norm2).sqrt();
    for x in &mut u0 {
        *x *= s;
    }
    let min = u0.iter().copied().fold(T::infinity(), T::min);
    if !(min > T::zero()) {
        return Err(Error::NonpositiveEigenvector { min: min.to_f64_lossy() });
    }
    let dlambda = ops.b.bilinear(&u0, &u0) / ops.m.bilinear(&u0, &u0);
    Ok(SpectralResult {
        alpha,
        lambda0: eig.values[0],
        lambda1: eig.values[1],
        u0: Field::new(
            Arc::clone(&ops.mesh),
            u0,
            FieldKind::RobinGround {
                alpha,
                lambda: eig.values[0],
            },
        )?,
        dlambda_dalpha: dlambda,
        residual: eig.residual,
        iterations: eig.iterations,
        basis: eig.basis,
    })
}

/// Sequential sweep over increasing `α`, each solve warm-started from the
/// previous eigenvector block.
pub fn alpha_sweep<T: Real>(ops: &OperatorSet<T>, alphas: &[T]) -> Result<AlphaSweep<T>> {
    if alphas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("alphas must be sorted ascending".into()));
    }
    let opts = EigenOptions::default();
    let mut results: Vec<SpectralResult<T>> = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let warm = results.last().map(|r| r.basis.as_slice());
        results.push(robin_eigensystem_with(ops, alpha, 2, &opts, warm)?);
    }
    let monotone = results.windows(2).all(|w| w[1].lambda0 >= w[0].lambda0);
    Ok(AlphaSweep { results, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel<T> {
    pub h: T,
    pub nodes: usize,
    pub lambda0: T,
    pub lambda1: T,
}

/// `λ₀(α)` on successive uniform refinements with a Richardson estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy<T> {
    pub alpha: T,
    pub levels: Vec<RefinementLevel<T>>,
    /// Observed order `log₂(δ₁/δ₂)` from the last three levels, when they
    /// converge monotonically.
    pub rate: Option<T>,
    /// Richardson limit, using the observed rate or order 2 without one.
    pub extrapolated: T,
    /// `|λ₀(finest) − extrapolated|`.
    pub error_estimate: T,
}

pub fn refinement_study<T: Real>(mesh: Mesh<T>, alpha: T, levels: usize) -> Result<RefinementStudy<T>> {
    if levels < 2 {
        return Err(Error::InvalidParameter("a refinement study needs at least two levels".into()));
    }
    let mut out: Vec<RefinementLevel<T>> = Vec::with_capacity(levels);
    let mut mesh = mesh;
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.refine();
        }
        let (h, nodes) = (mesh.h(), mesh.nodes().len());
        let ops = assemble(mesh.clone())?;
        let r = robin_eigensystem(&ops, alpha, 2)?;
        out.push(RefinementLevel {
            h,
            nodes,
            lambda0: r.lambda0,
            lambda1: r.lambda1,
        });
    }
    let l: Vec<T> = out.iter().map(|x| x.lambda0).collect();
    let k = l.len();
    let rate = (k >= 3)
        .then(|| {
            let (d1, d2) = (l[k - 2] - l[k - 3], l[k - 1] - l[k - 2]);
            let q = d1 / d2;
            (q > T::one() && q.is_finite()).then(|| q.log2())
        })
        .flatten();
    let p = rate.unwrap_or(T::lit(2.0));
    let extrapolated = l[k - 1] + (l[k - 1] - l[k - 2]) / (T::lit(2.0).powf(p) - T::one());
    Ok(RefinementStudy {
        alpha,
        levels: out,
        rate,
        extrapolated,
        error_estimate: (l[k - 1] - extrapolated).abs(),
    })
}

struct Eigenpairs<T> {
    values: Vec<T>,
    vectors: Vec<Vec<T>>,
    basis: Vec<Vec<T>>,
    residual: T,
    iterations: usize,
}

/// M-orthonormalises `vs` in place (two passes of modified Gram–Schmidt).
/// Vectors that collapse are replaced by a deterministic filler.
fn m_orthonormalize<T: Real>(vs: &mut [Vec<T>], m: &CsrMatrix<T>) {
    for j in 0..vs.len() {
        for attempt in 0..3 {
            let before = m.bilinear(&vs[j], &vs[j]).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let mv = m.mul_vec(&vs[j]);
                    let c = dot(&vs[i], &mv);
                    let (head, tail) = vs.split_at_mut(j);
                    for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                        *x -= c * *y;
                    }
                }
            }
            let after = m.bilinear(&vs[j], &vs[j]).sqrt();
            if after > before * T::lit(1e-8) && after > T::zero() {
                for x in &mut vs[j] {
                    *x /= after;
                }
                break;
            }
            let n = vs[j].len();
            vs[j] = (0..n)
                .map(|i| T::from_usize_lossy((i * 7919 + (j + attempt) * 104_729) % 1009) / T::lit(1009.0) - T::lit(0.5))
                .collect();
        }
    }
}

/// Block shift-invert iteration with Rayleigh–Ritz on `span{(A − σM)⁻¹ M X}`.
fn subspace_iteration<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    chol: &Cholesky<T>,
    coords: &[[T; 2]],
    k: usize,
    opts: &EigenOptions<T>,
    warm: Option<&[Vec<T>]>,
) -> Result<Eigenpairs<T>> {
    let n = a.dim();
    let p = (k + opts.guard).min(n);
    if p < k {
        return Err(Error::MeshTooCoarse(format!("{n} nodes cannot carry {k} eigenpairs")));
    }
    let mut x: Vec<Vec<T>> = warm.map(|w| w.iter().take(p).cloned().collect()).unwrap_or_default();
    if x.iter().any(|v| v.len() != n) {
        x.clear();
    }
    // Smooth start: low-degree monomials in centred, scaled coordinates.
    let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
    for c in coords {
        for d in 0..2 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let half = T::lit(0.5);
    let centre = [(lo[0] + hi[0]) * half, (lo[1] + hi[1]) * half];
    let width = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(T::min_positive_value());
    let mut degree = 0usize;
    while x.len() < p {
        for i in 0..=degree {
            if x.len() == p {
                break;
            }
            let j = degree - i;
            x.push(
                coords
                    .iter()
                    .map(|c| {
                        let u = (c[0] - centre[0]) / width;
                        let w = (c[1] - centre[1]) / width;
                        u.powi(i as i32) * w.powi(j as i32)
                    })
                    .collect(),
            );
        }
        degree += 1;
    }

    let mut values = vec![T::zero(); p];
    let mut worst = T::infinity();
    for iter in 1..=opts.max_iter {
        let mut y: Vec<Vec<T>> = x.iter().map(|v| chol.solve(&m.mul_vec(v))).collect();
        m_orthonormalize(&mut y, m);
        let ay: Vec<Vec<T>> = y.iter().map(|v| a.mul_vec(v)).collect();
        let mut h = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i])) * half;
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&h);
        let mut next = vec![vec![T::zero(); n]; p];
        let mut anext = vec![vec![T::zero(); n]; p];
        for c in 0..p {
            for r in 0..p {
                let w = vecs[(r, c)];
                for ((o, ao), (yv, ayv)) in next[c].iter_mut().zip(anext[c].iter_mut()).zip(y[r].iter().zip(&ay[r])) {
                    *o += w * *yv;
                    *ao += w * *ayv;
                }
            }
        }
        values = vals;
        x = next;

        let lambda_ref = values[k - 1].abs().max(T::min_positive_value());
        worst = T::zero();
        for c in 0..k {
            let mx = m.mul_vec(&x[c]);
            let r: T = anext[c]
                .iter()
                .zip(&mx)
                .map(|(&av, &mv)| {
                    let d = av - values[c] * mv;
                    d * d
                })
                .sum::<T>()
                .sqrt();
            let denom = dot(&mx, &mx).sqrt() * values[c].abs().max(lambda_ref);
            worst = worst.max(r / denom);
        }
        if worst <= opts.tol {
            return Ok(Eigenpairs {
                values: values[..k].to_vec(),
                vectors: x[..k].to_vec(),
                basis: x,
                residual: worst,
                iterations: iter,
            });
        }
    }
    let _ = values;
    Err(Error::EigensolverNoConvergence {
        iterations: opts.max_iter,
        residual: worst.to_f64_lossy(),
    })
}
