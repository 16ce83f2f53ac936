//! Discretizations and quadrature.
//!
//! The workhorse is the logarithmic radial mesh: nodes uniform in t = ln r.
//! For a radial function u the planar Laplacian collapses to
//! Δu = e^{-2t} ∂_tt u, so one second-difference stencil resolves scale
//! ratios of 1e10 with a thousand nodes — the whole point of the reduction,
//! since the concentration scales of the cascade are separated by powers of
//! the continuation parameter.
//!
//! Quadrature comes in two flavors matched to the two integrand classes:
//! disk integrals of slowly-varying fields use a product trapezoid rule with
//! the exact e^{2t} Jacobian (linear-in-t integrands are exact, the disk
//! area is exact to roundoff), while improper integrals over the plane use
//! the plain trapezoid in t, which is spectrally accurate for the
//! exponentially-localized bump integrands that arise here, plus an analytic
//! power-law tail.
//!
//! A 2D triangulated path (fan meshes of star-shaped polygons and sector
//! meshes honoring the rotational symmetry) lives in [`fem`] and [`sector`];
//! it exists for polygonal domains and carries relaxed tolerances.

pub mod fem;
pub mod sector;

use crate::error::{Error, Result};
use std::sync::Arc;

/// Discretization kind requested in run configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    LogRadial,
    Sector,
}

/// Log-uniform radial mesh on [r_min, r_max].
///
/// Node n-1 sits on the outer boundary and is the Dirichlet node for every
/// solve. Node 0 is the inner cutoff; smooth radial fields satisfy
/// u'(r_min) = O(r_min), so the stencil there imposes a zero t-derivative
/// through a symmetric ghost node (an O(r_min^2) commitment on the fields
/// this crate meets, all of which are quadratically flat at the origin).
#[derive(Clone, Debug)]
pub struct RadialMesh {
    r_min: f64,
    r_max: f64,
    n: usize,
    dt: f64,
    t: Vec<f64>,
    r: Vec<f64>,
}

/// Builds the log-radial mesh with `n` nodes uniform in ln r.
pub fn build_log_radial_mesh(r_min: f64, r_max: f64, n: usize) -> Result<Arc<RadialMesh>> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::Domain(format!(
            "need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}"
        )));
    }
    if r_min < 1e-300 {
        return Err(Error::Domain(format!(
            "r_min={r_min} too small for a representable logarithm"
        )));
    }
    if n < 16 {
        return Err(Error::Domain(format!("need at least 16 nodes, got {n}")));
    }
    let t0 = r_min.ln();
    let t1 = r_max.ln();
    let dt = (t1 - t0) / (n - 1) as f64;
    let t: Vec<f64> = (0..n).map(|j| t0 + dt * j as f64).collect();
    let mut r: Vec<f64> = t.iter().map(|&tj| tj.exp()).collect();
    // Pin the endpoints so r_max is hit exactly.
    r[0] = r_min;
    r[n - 1] = r_max;
    Ok(Arc::new(RadialMesh {
        r_min,
        r_max,
        n,
        dt,
        t,
        r,
    }))
}

impl RadialMesh {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn r_min(&self) -> f64 {
        self.r_min
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn radii(&self) -> &[f64] {
        &self.r
    }
    pub fn ts(&self) -> &[f64] {
        &self.t
    }

    /// Samples a radial function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            values: self.r.iter().map(|&r| f(r)).collect(),
        }
    }
}

/// Nodal values of a real field on a radial mesh.
///
/// Fields representing H^1_0 functions carry value 0 at the last node.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(mesh: &RadialMesh) -> Self {
        GridFunction {
            values: vec![0.0; mesh.n()],
        }
    }
}

/// k grid functions, one per field component.
#[derive(Clone, Debug)]
pub struct FieldVector {
    pub components: Vec<GridFunction>,
}

impl FieldVector {
    pub fn zeros(k: usize, mesh: &RadialMesh) -> Self {
        FieldVector {
            components: (0..k).map(|_| GridFunction::zeros(mesh)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Pointwise sup norm over all components and nodes.
    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.values.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Second-order discrete Laplacian on a log-radial mesh.
///
/// Interior rows are the central second difference in t scaled by e^{-2t};
/// row 0 uses the ghost-node regularity closure, row n-1 is the Dirichlet
/// boundary and is not a PDE row.
#[derive(Clone, Debug)]
pub struct RadialLaplacian {
    n: usize,
    /// 1 / (dt^2 r_j^2) per node.
    scale: Vec<f64>,
}

pub fn assemble_radial_laplacian(mesh: &RadialMesh) -> RadialLaplacian {
    let dt2 = mesh.dt * mesh.dt;
    RadialLaplacian {
        n: mesh.n,
        scale: mesh.r.iter().map(|&r| 1.0 / (dt2 * r * r)).collect(),
    }
}

impl RadialLaplacian {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row scale 1/(dt^2 r_j^2). The evaluation roundoff of a residual row
    /// is proportional to it; convergence checks measure residuals against
    /// this envelope.
    pub fn row_scale(&self, j: usize) -> f64 {
        self.scale[j]
    }

    /// Applies Δ to nodal values. The boundary row (last node) is returned
    /// as 0; it is constrained, not discretized.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        let mut out = vec![0.0; self.n];
        out[0] = (2.0 * u[1] - 2.0 * u[0]) * self.scale[0];
        for j in 1..self.n - 1 {
            out[j] = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * self.scale[j];
        }
        out
    }

    /// Adds the matrix of -Δ into `band` for the block system in which dof
    /// (node j, component c) = j*k + c and the Dirichlet node is eliminated.
    pub fn add_neg_laplacian(&self, band: &mut crate::linalg::BandMatrix, k: usize, c: usize) {
        let unknowns = self.n - 1;
        // Row 0: ghost closure -Δ ≈ (2 u0 - 2 u1) * s0.
        band.add(c, c, 2.0 * self.scale[0]);
        band.add(c, k + c, -2.0 * self.scale[0]);
        for j in 1..unknowns {
            let s = self.scale[j];
            let row = j * k + c;
            band.add(row, row, 2.0 * s);
            band.add(row, (j - 1) * k + c, -s);
            if j + 1 < unknowns {
                band.add(row, (j + 1) * k + c, -s);
            }
            // j+1 == n-1 is the Dirichlet node with value 0: no column.
        }
    }
}

/// Integrates f over the disk of radius r_max: 2π ∫ f r dr.
///
/// Product trapezoid in t with the e^{2t} Jacobian integrated exactly per
/// cell, plus the inner cap [0, r_min] with f frozen at its innermost nodal
/// value. Integrands linear in t are integrated exactly.
pub fn quad_disk(mesh: &RadialMesh, f: &[f64]) -> f64 {
    assert_eq!(f.len(), mesh.n);
    let h = mesh.dt;
    // ∫_0^h (1 - s/h) e^{2s} ds = expm1(2h)/(4h) - 1/2  (left hat)
    // ∫_0^h (s/h) e^{2s} ds    = e^{2h}/2 - expm1(2h)/(4h)  (right hat)
    let e = (2.0 * h).exp_m1();
    let wl = e / (4.0 * h) - 0.5;
    let wr = (e + 1.0) / 2.0 - e / (4.0 * h);
    let mut acc = 0.0;
    for j in 0..mesh.n - 1 {
        let cell = mesh.r[j] * mesh.r[j] * (wl * f[j] + wr * f[j + 1]);
        acc += cell;
    }
    2.0 * std::f64::consts::PI * acc + std::f64::consts::PI * mesh.r_min * mesh.r_min * f[0]
}

/// Improper integral of f over the plane.
///
/// Plain trapezoid on the t-integrand f(e^t) e^{2t} (spectrally accurate for
/// the exponentially-localized integrands of the bubble calculus), the inner
/// cap, and the analytic tail beyond r_max for a power-law integrand
/// f(r) ≈ f(r_max) (r_max/r)^q. The decay exponent is the caller's knowledge
/// of the integrand; without it the truncation error would be silent, so it
/// is a required input and must make the tail integrable.
pub fn quad_improper(mesh: &RadialMesh, f: &[f64], tail_decay_exponent: f64) -> Result<f64> {
    assert_eq!(f.len(), mesh.n);
    if !(tail_decay_exponent > 2.0) {
        return Err(Error::Precondition(format!(
            "improper quadrature needs an integrable tail: decay exponent {tail_decay_exponent} <= 2"
        )));
    }
    let mut acc = 0.0;
    for j in 0..mesh.n {
        let w = if j == 0 || j == mesh.n - 1 { 0.5 } else { 1.0 };
        acc += w * f[j] * mesh.r[j] * mesh.r[j];
    }
    let grid = 2.0 * std::f64::consts::PI * acc * mesh.dt;
    let cap = std::f64::consts::PI * mesh.r_min * mesh.r_min * f[0];
    let tail = 2.0 * std::f64::consts::PI * f[mesh.n - 1] * mesh.r_max * mesh.r_max
        / (tail_decay_exponent - 2.0);
    Ok(grid + cap + tail)
}

/// L^p norm over the meshed disk, p in [1, 8].
pub fn lp_norm(u: &[f64], p: f64, mesh: &RadialMesh) -> Result<f64> {
    if !(1.0..=8.0).contains(&p) {
        return Err(Error::Domain(format!("p={p} outside [1, 8]")));
    }
    let powed: Vec<f64> = u.iter().map(|&v| v.abs().powf(p)).collect();
    Ok(quad_disk(mesh, &powed).powf(1.0 / p))
}

/// Field norm: the sum of the component norms.
pub fn lp_norm_field(u: &FieldVector, p: f64, mesh: &RadialMesh) -> Result<f64> {
    let mut acc = 0.0;
    for c in &u.components {
        acc += lp_norm(&c.values, p, mesh)?;
    }
    Ok(acc)
}

/// H^1_0 seminorm: for radial u, ∫|∇u|^2 dx = 2π ∫ (u_t)^2 dt.
pub fn h1_norm(u: &[f64], mesh: &RadialMesh) -> f64 {
    let mut acc = 0.0;
    for j in 0..mesh.n - 1 {
        let d = u[j + 1] - u[j];
        acc += d * d;
    }
    (2.0 * std::f64::consts::PI * acc / mesh.dt).sqrt()
}

/// Field H^1_0 norm: sum over components.
pub fn h1_norm_field(u: &FieldVector, mesh: &RadialMesh) -> f64 {
    u.components.iter().map(|c| h1_norm(&c.values, mesh)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mesh_spacing_and_geometric_radii() {
        let mesh = build_log_radial_mesh(1e-8, 1.0, 1601).unwrap();
        assert_relative_eq!(mesh.dt(), (1e8f64).ln() / 1600.0, max_relative = 1e-14);
        let r = mesh.radii();
        let q = r[1] / r[0];
        for j in 1..200 {
            assert_relative_eq!(r[j + 1] / r[j], q, max_relative = 1e-12);
        }
        // Refinement by 2 halves the spacing.
        let fine = build_log_radial_mesh(1e-8, 1.0, 3201).unwrap();
        assert_relative_eq!(fine.dt(), mesh.dt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(build_log_radial_mesh(0.0, 1.0, 100).is_err());
        assert!(build_log_radial_mesh(1e-3, 1e-4, 100).is_err());
        assert!(build_log_radial_mesh(1e-3, 1.0, 8).is_err());
        assert!(build_log_radial_mesh(1e-310, 1.0, 100).is_err());
    }

    #[test]
    fn laplacian_of_parabola_is_minus_four() {
        let mesh = build_log_radial_mesh(1e-6, 1.0, 2001).unwrap();
        let u = mesh.sample(|r| 1.0 - r * r);
        let lap = assemble_radial_laplacian(&mesh);
        let lu = lap.apply(&u.values);
        let dt2 = mesh.dt() * mesh.dt();
        for j in 1..mesh.n() - 1 {
            // Truncation O(dt^2) plus the roundoff envelope of the stencil,
            // which dominates at the innermost radii where u is flat to
            // below one ulp.
            let tol = 8.0 * dt2 + 64.0 * f64::EPSILON * lap.row_scale(j);
            assert!((lu[j] + 4.0).abs() < tol, "node {j}: {} tol {tol}", lu[j]);
        }
    }

    #[test]
    fn laplacian_annihilates_harmonics_and_constants() {
        let mesh = build_log_radial_mesh(1e-4, 1.0, 1201).unwrap();
        let lap = assemble_radial_laplacian(&mesh);
        // ln(1/r) is linear in t, so interior rows vanish up to the stencil
        // roundoff envelope.
        let u = mesh.sample(|r| (1.0 / r).ln());
        let lu = lap.apply(&u.values);
        let umax = u.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for j in 1..mesh.n() - 1 {
            let tol = 64.0 * f64::EPSILON * umax * lap.row_scale(j) + 1e-12;
            assert!(lu[j].abs() < tol, "node {j}: {} tol {tol}", lu[j]);
        }
        // Row sums of -Δ vanish away from the boundary rows.
        let k = 2;
        let mut band = crate::linalg::BandMatrix::zeros((mesh.n() - 1) * k, k, k);
        lap.add_neg_laplacian(&mut band, k, 0);
        lap.add_neg_laplacian(&mut band, k, 1);
        for j in 1..mesh.n() - 2 {
            for c in 0..k {
                let row = j * k + c;
                let mut sum = 0.0;
                for col in row.saturating_sub(k)..=(row + k).min(band.n() - 1) {
                    sum += band.get(row, col);
                }
                let tol = 1e-12 * lap.row_scale(j).max(1.0);
                assert!(sum.abs() < tol, "row {row} sum {sum}");
            }
        }
    }

    #[test]
    fn laplacian_convergence_order_on_manufactured_solution() {
        // u = cos(r^2): Δu = -4 r^2 cos(r^2) - 4 sin(r^2). The range starts
        // at 0.05 so the measurement is truncation-dominated.
        let err = |n: usize| -> f64 {
            let mesh = build_log_radial_mesh(0.05, 1.0, n).unwrap();
            let u = mesh.sample(|r| (r * r).cos());
            let lap = assemble_radial_laplacian(&mesh);
            let lu = lap.apply(&u.values);
            let mut worst = 0.0f64;
            for j in 1..mesh.n() - 1 {
                let r = mesh.radii()[j];
                let exact = -4.0 * r * r * (r * r).cos() - 4.0 * (r * r).sin();
                worst = worst.max((lu[j] - exact).abs());
            }
            worst
        };
        let e1 = err(401);
        let e2 = err(801);
        let rate = (e1 / e2).log2();
        assert!(rate >= 1.9, "observed rate {rate}");
    }

    #[test]
    fn disk_quadrature_exact_for_area_and_linear_in_t() {
        let mesh = build_log_radial_mesh(1e-9, 1.0, 3001).unwrap();
        let one = mesh.sample(|_| 1.0);
        assert_relative_eq!(
            quad_disk(&mesh, &one.values),
            std::f64::consts::PI,
            max_relative = 1e-12
        );
        // f with f(r) e^{2t} linear in t: f = (a + b ln r)/r^2. Compare with
        // the closed form including the modeled inner cap.
        let (a, b) = (0.3, -1.7);
        let f = mesh.sample(|r| (a + b * r.ln()) / (r * r));
        let t0 = mesh.r_min().ln();
        let exact_grid = 2.0 * std::f64::consts::PI * (a * (0.0 - t0) + b * (0.0 - t0 * t0 / 2.0));
        let cap = std::f64::consts::PI * mesh.r_min() * mesh.r_min() * f.values[0];
        assert_relative_eq!(quad_disk(&mesh, &f.values), exact_grid + cap, max_relative = 1e-12);
    }

    #[test]
    fn improper_quadrature_tail_is_stable_in_r_max() {
        // f = e^{w} for the α=2, δ=1 bubble: 8/(1+r^2)^2 with tail ~ 8 r^{-4}.
        let value = |r_max: f64| {
            let mesh = build_log_radial_mesh(1e-8, r_max, 4001).unwrap();
            let f = mesh.sample(|r| 8.0 / (1.0 + r * r).powi(2));
            quad_improper(&mesh, &f.values, 4.0).unwrap()
        };
        let a = value(1e5);
        let b = value(1e6);
        assert!((a - b).abs() < 1e-9, "tail drift {}", (a - b).abs());
        // ∫ 8/(1+r^2)^2 = 8π.
        assert_relative_eq!(a, 8.0 * std::f64::consts::PI, max_relative = 1e-9);
        // Missing decay metadata is a contract violation.
        let mesh = build_log_radial_mesh(1e-8, 1e5, 101).unwrap();
        let f = mesh.sample(|_| 1.0);
        assert!(quad_improper(&mesh, &f.values, 2.0).is_err());
    }

    #[test]
    fn lp_norms_and_triangle_inequality() {
        let mesh = build_log_radial_mesh(1e-6, 1.0, 2001).unwrap();
        let c = mesh.sample(|_| 0.7);
        for p in [1.0, 1.5, 2.0, 4.0] {
            let expect = 0.7 * std::f64::consts::PI.powf(1.0 / p);
            assert_relative_eq!(lp_norm(&c.values, p, &mesh).unwrap(), expect, max_relative = 1e-12);
        }
        assert!(lp_norm(&c.values, 0.5, &mesh).is_err());
        assert!(lp_norm(&c.values, 9.0, &mesh).is_err());

        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ca: f64 = rng.gen_range(0.1..2.0);
            let cb: f64 = rng.gen_range(0.1..2.0);
            let a = mesh.sample(|r| (3.0 * r).sin() * ca);
            let b = mesh.sample(|r| (5.0 * r).cos() * cb);
            let sum: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
            for p in [1.0, 2.0, 3.0] {
                let ns = lp_norm(&sum, p, &mesh).unwrap();
                let na = lp_norm(&a.values, p, &mesh).unwrap();
                let nb = lp_norm(&b.values, p, &mesh).unwrap();
                assert!(ns <= na + nb + 1e-12);
            }
        }
    }

    #[test]
    fn h1_norm_of_known_profile() {
        // u = 1 - r^2: ∫ |∇u|^2 = 2π ∫ 4 r^3 dr = 2π.
        let mesh = build_log_radial_mesh(1e-8, 1.0, 4001).unwrap();
        let u = mesh.sample(|r| 1.0 - r * r);
        assert_relative_eq!(
            h1_norm(&u.values, &mesh),
            (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-4
        );
    }
}
