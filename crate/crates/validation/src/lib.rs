//! Reference values computed independently of the solver: closed forms,
//! series and bisection on scalar equations.

use std::f64::consts::PI;

use polyrobin::mesh2d::Mesh;

/// Root of `f` in `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Robin ground-state eigenvalue of `[0, len]`: `u = cos(k(x − len/2))`
/// with `k·tan(k·len/2) = α`.
pub fn interval_robin(len: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let k = bisect(1e-12, PI / len - 1e-12, |k| k * (k * len / 2.0).tan() - alpha);
    k * k
}

/// Robin ground-state eigenvalue of the ball `B_R ⊂ R^d` from the power
/// series of the regular radial solution `Σ (−λr²/4)^n / (n! (d/2)_n)` and
/// bisection on `u'(R) + αu(R)`.
pub fn ball_robin(d: usize, radius: f64, alpha: f64) -> f64 {
    let mismatch = |lambda: f64| {
        let (mut term, mut u, mut du) = (1.0, 1.0, 0.0);
        let x = -lambda * radius * radius / 4.0;
        for n in 1..200 {
            term *= x / (n as f64 * (n as f64 - 1.0 + d as f64 / 2.0));
            u += term;
            du += term * 2.0 * n as f64 / radius;
        }
        du + alpha * u
    };
    let mut hi = 1e-3;
    while mismatch(hi) > 0.0 {
        hi *= 1.05;
    }
    bisect(hi / 1.05, hi, mismatch)
}

/// Domain average of a nodal P1 function (exact).
pub fn p1_mean(mesh: &Mesh<f64>, values: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        total += mesh.triangle_area(t) * tri.iter().map(|&i| values[i]).sum::<f64>() / 3.0;
    }
    total / mesh.area()
}

/// `f'' − (d−2) tanθ f' − μ/cos²θ f + 2d f` for the three explicit
/// solutions at `λ = 2d`, with derivatives written out by hand:
/// `0`: `sin²θ − cos²θ/(d−1)` (`μ = 0`), `1`: `sinθ cosθ` (`μ = d−2`),
/// `2`: `cos²θ` (`μ = 2(d−1)`).
pub fn explicit_residual(d: usize, which: usize, theta: f64) -> f64 {
    let (s, c) = (theta.sin(), theta.cos());
    let df = d as f64;
    let (mu, f, f1, f2) = match which {
        0 => (
            0.0,
            s * s - c * c / (df - 1.0),
            2.0 * s * c * df / (df - 1.0),
            2.0 * (c * c - s * s) * df / (df - 1.0),
        ),
        1 => (df - 2.0, s * c, c * c - s * s, -4.0 * s * c),
        _ => (2.0 * (df - 1.0), c * c, -2.0 * s * c, 2.0 * (s * s - c * c)),
    };
    f2 - (df - 2.0) * theta.tan() * f1 - mu / (c * c) * f + 2.0 * df * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_ball_has_a_closed_form() {
        // u = sin(kr)/r and u'(1) + u(1) = 0 give k = π/2.
        assert!((ball_robin(3, 1.0, 1.0) - PI * PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn interval_limits() {
        // Small α: λ ≈ 2α/len.
        assert!((interval_robin(1.0, 1e-8) - 2e-8).abs() < 1e-14);
        assert!((interval_robin(1.0, 1e8) - PI * PI).abs() < 1e-5);
        assert!((interval_robin(2.0, 1.0) * 4.0 - interval_robin(1.0, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn disk_matches_bessel_root() {
        // Dirichlet limit: first zero of J0.
        let j0 = 2.404825557695773;
        assert!((ball_robin(2, 1.0, 1e9) - j0 * j0).abs() < 1e-6);
    }

    #[test]
    fn explicit_solutions_vanish() {
        for d in 3..7 {
            for which in 0..3 {
                for j in 0..50 {
                    let theta = -1.5 + 3.0 * j as f64 / 49.0;
                    assert!(explicit_residual(d, which, theta).abs() < 1e-11);
                }
            }
        }
    }
}
