//! Sector meshes for k-symmetric domains.
//!
//! The fundamental domain of the rotation group generated by the angle π/k
//! is a sector of that opening; a field on the whole domain is 2k rotated
//! copies of its restriction. The mesh is a structured polar grid: rays
//! uniform in angle (plus the directions of polygon vertices, so polygonal
//! boundaries are meshed exactly) and radial layers in geometric progression
//! toward the origin, the 2D cousin of the log-radial mesh. The two radial
//! edges carry matching trace nodes and are identified periodically when
//! solving.

use super::fem::{self, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::Domain;

#[derive(Clone, Debug)]
pub struct SectorMesh {
    pub tri: TriMesh,
    /// Symmetry order; the sector spans [0, π/k].
    pub k: u32,
    /// Nodes on the θ=0 edge, innermost layer first (origin excluded).
    pub edge_low: Vec<usize>,
    /// Matching nodes on the θ=π/k edge.
    pub edge_high: Vec<usize>,
    /// Node identification map realizing the periodic radial edges.
    pub merge: Vec<usize>,
    /// Radial layer count and ray count used by the grading formula.
    pub layers: usize,
    pub rays: usize,
}

/// Expected node count of the structured sector grid: one origin node plus
/// `layers` rings of `rays + 1` nodes.
pub fn expected_node_count(layers: usize, rays: usize) -> usize {
    1 + layers * (rays + 1)
}

/// Grading plan shared by the builder and its tests: ray count from the arc
/// length at the outer radius, layer radii in geometric progression with
/// ratio chosen so the outermost layer has thickness ≈ target_h, cut off
/// once layers are thinner than target_h / 50.
pub fn grading_plan(k: u32, r_outer: f64, target_h: f64) -> (usize, Vec<f64>) {
    let angle = std::f64::consts::PI / k as f64;
    let rays = ((angle * r_outer / target_h).ceil() as usize).max(4);
    let g = 1.0 / (1.0 - (target_h / r_outer).min(0.5));
    let mut s = vec![1.0f64];
    let s_stop = (target_h / r_outer) / 50.0;
    while *s.last().unwrap() > s_stop {
        s.push(s.last().unwrap() / g);
    }
    s.reverse();
    (rays, s)
}

/// Builds the triangulated fundamental sector of a k-symmetric domain.
pub fn build_sector_mesh(domain: &Domain, k: u32, target_h: f64) -> Result<SectorMesh> {
    if !crate::geometry::check_k_symmetry(domain, k) {
        return Err(Error::Precondition(format!(
            "domain is not {k}-symmetric; sector reduction invalid"
        )));
    }
    if !(target_h > 0.0 && target_h < 1.0) {
        return Err(Error::Domain(format!("target_h={target_h} out of range")));
    }
    let angle = std::f64::consts::PI / k as f64;

    // Boundary radius per direction.
    let radius_of: Box<dyn Fn(f64) -> f64> = match domain {
        Domain::UnitDisk { .. } => Box::new(|_| 1.0),
        Domain::SymmetricPolygon { vertices, .. } => {
            let verts = vertices.clone();
            Box::new(move |theta: f64| polygon_ray_radius(&verts, theta))
        }
    };

    let r_outer = (0..=64)
        .map(|i| radius_of(angle * i as f64 / 64.0))
        .fold(0.0f64, f64::max);
    let (rays, s_layers) = grading_plan(k, r_outer, target_h);

    // Ray angles: uniform grid plus polygon vertex directions in the sector.
    let mut thetas: Vec<f64> = (0..=rays).map(|i| angle * i as f64 / rays as f64).collect();
    if let Domain::SymmetricPolygon { vertices, .. } = domain {
        for v in vertices {
            let th = v[1].atan2(v[0]).rem_euclid(2.0 * std::f64::consts::PI);
            if th > 1e-12 && th < angle - 1e-12 {
                thetas.push(th);
            }
        }
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    let m = thetas.len() - 1;
    let layers = s_layers.len();

    let mut nodes: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for &s in &s_layers {
        for &th in &thetas {
            let rr = s * radius_of(th);
            nodes.push([rr * th.cos(), rr * th.sin()]);
        }
    }
    let id = |layer: usize, ray: usize| 1 + layer * (m + 1) + ray;

    let mut tris: Vec<[usize; 3]> = Vec::new();
    for i in 0..m {
        tris.push([0, id(0, i), id(0, i + 1)]);
    }
    for j in 0..layers - 1 {
        for i in 0..m {
            let a = id(j, i);
            let b = id(j, i + 1);
            let c = id(j + 1, i + 1);
            let d = id(j + 1, i);
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }

    let mut boundary = vec![false; nodes.len()];
    for i in 0..=m {
        boundary[id(layers - 1, i)] = true;
    }

    let mut merge: Vec<usize> = (0..nodes.len()).collect();
    let edge_low: Vec<usize> = (0..layers).map(|j| id(j, 0)).collect();
    let edge_high: Vec<usize> = (0..layers).map(|j| id(j, m)).collect();
    for (lo, hi) in edge_low.iter().zip(&edge_high) {
        merge[*hi] = *lo;
    }

    let tri = TriMesh {
        nodes,
        tris,
        boundary,
    };
    for t in 0..tri.tris.len() {
        if tri.triangle_area(t) <= 0.0 {
            return Err(Error::Resource(format!("degenerate cell {t} in sector mesh")));
        }
    }
    Ok(SectorMesh {
        tri,
        k,
        edge_low,
        edge_high,
        merge,
        layers,
        rays: m,
    })
}

fn polygon_ray_radius(vertices: &[[f64; 2]], theta: f64) -> f64 {
    let dir = [theta.cos(), theta.sin()];
    let mut best = f64::INFINITY;
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        // Solve t*dir = a + s*(b-a), t > 0, s in [0,1].
        let ex = b[0] - a[0];
        let ey = b[1] - a[1];
        let det = dir[0] * (-ey) - dir[1] * (-ex);
        if det.abs() < 1e-15 {
            continue;
        }
        let t = (a[0] * (-ey) + a[1] * ex) / det;
        let s = (dir[0] * a[1] - dir[1] * a[0]) / det;
        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
            best = best.min(t);
        }
    }
    best
}

impl SectorMesh {
    /// Evaluates the symmetric extension of sector nodal values at an
    /// arbitrary point of the domain, folding by rotations of π/k.
    pub fn eval_extended(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        let angle = std::f64::consts::PI / self.k as f64;
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r == 0.0 {
            return Some(values[0]);
        }
        let th = p[1].atan2(p[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let folded = th - angle * (th / angle).floor();
        let q = [r * folded.cos(), r * folded.sin()];
        self.tri.interpolate(values, q)
    }

    /// Discrete Laplacian via lumped mass: (Δ_h u)_i = -(M^-1 A u)_i.
    /// Meaningful on interior representative dofs.
    pub fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let stiff = fem::assemble_stiffness(&self.tri, &self.merge);
        let mut mass = vec![0.0; self.tri.nodes.len()];
        for (t, &[a, b, c]) in self.tri.tris.iter().enumerate() {
            let w = self.tri.triangle_area(t) / 3.0;
            for id in [a, b, c] {
                mass[self.merge[id]] += w;
            }
        }
        // Fold duplicate values onto representatives before applying.
        let mut ur = u.to_vec();
        for node in 0..ur.len() {
            ur[node] = u[self.merge[node]];
        }
        let au = stiff.matvec(&ur);
        let mut out = vec![0.0; ur.len()];
        for node in 0..ur.len() {
            let rep = self.merge[node];
            out[node] = -au[rep] / mass[rep].max(1e-300);
        }
        out
    }

    /// Poisson solve -Δu = f with zero Dirichlet data on the outer boundary
    /// and periodic radial edges.
    pub fn solve_dirichlet_zero(&self, f: &[f64]) -> Result<Vec<f64>> {
        fem::solve_poisson(&self.tri, |_| 0.0, Some(f), &self.merge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use approx::assert_relative_eq;

    #[test]
    fn disk_sector_area_and_node_count() {
        let domain = Domain::unit_disk(2);
        let mesh = build_sector_mesh(&domain, 2, 0.05).unwrap();
        // Quarter disk: area π/4, chord-approximated to O(h^2).
        let area = mesh.tri.total_area();
        assert_relative_eq!(area, std::f64::consts::PI / 4.0, max_relative = 3.0 * 0.05 * 0.05);
        let (rays, layers) = grading_plan(2, 1.0, 0.05);
        assert_eq!(mesh.tri.nodes.len(), expected_node_count(layers.len(), rays));
    }

    #[test]
    fn symmetric_extension_is_continuous_across_the_seam() {
        let domain = Domain::unit_disk(3);
        let mesh = build_sector_mesh(&domain, 3, 0.1).unwrap();
        // A k-symmetric smooth field restricted to the sector.
        let k = 3.0;
        let values: Vec<f64> = mesh
            .tri
            .nodes
            .iter()
            .map(|p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let th = p[1].atan2(p[0]);
                (1.0 - r * r) * (1.0 + 0.3 * (2.0 * k * th).cos())
            })
            .collect();
        // Identified nodes carry identical values by construction of merge.
        for (lo, hi) in mesh.edge_low.iter().zip(&mesh.edge_high) {
            let a = values[mesh.merge[*lo]];
            let b = values[mesh.merge[*hi]];
            assert_eq!(a, b, "identified trace nodes disagree");
        }
        // And the folded evaluation is continuous across the seam.
        let angle = std::f64::consts::PI / 3.0;
        for &r in &[0.3, 0.6, 0.9] {
            let eps = 1e-9;
            let below = mesh
                .eval_extended(&values, [r * (angle - eps).cos(), r * (angle - eps).sin()])
                .unwrap();
            let above = mesh
                .eval_extended(&values, [r * (angle + eps).cos(), r * (angle + eps).sin()])
                .unwrap();
            assert!((below - above).abs() < 1e-6, "seam jump {}", below - above);
        }
    }

    #[test]
    fn sector_laplacian_of_parabola() {
        let domain = Domain::unit_disk(2);
        let mesh = build_sector_mesh(&domain, 2, 0.04).unwrap();
        let u: Vec<f64> = mesh
            .tri
            .nodes
            .iter()
            .map(|p| 1.0 - p[0] * p[0] - p[1] * p[1])
            .collect();
        let lap = mesh.apply_laplacian(&u);
        // Interior nodes away from the origin fan and the boundary layer.
        let mut checked = 0;
        for (i, p) in mesh.tri.nodes.iter().enumerate() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if !(0.2..=0.85).contains(&r) || mesh.tri.boundary[i] {
                continue;
            }
            checked += 1;
            assert!(
                (lap[i] + 4.0).abs() < 0.5,
                "node {i} at r={r}: Δu = {}",
                lap[i]
            );
        }
        assert!(checked > 50);
    }

    #[test]
    fn polygon_sector_respects_vertex_directions() {
        // Square is 2-symmetric; its vertex at 45° must be a mesh direction.
        let domain = Domain::symmetric_polygon(
            vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
            2,
        )
        .unwrap();
        let mesh = build_sector_mesh(&domain, 2, 0.1).unwrap();
        let diag = std::f64::consts::FRAC_PI_4;
        let found = mesh.tri.nodes.iter().any(|p| {
            let th = p[1].atan2(p[0]);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            (th - diag).abs() < 1e-9 && (r - 2.0f64.sqrt()).abs() < 1e-9
        });
        assert!(found, "corner of the square missing from the sector boundary");
        // Exact polygon area: the sector covers 1/(2k) of the square.
        assert_relative_eq!(mesh.tri.total_area(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn asymmetric_request_is_rejected() {
        let domain = Domain::symmetric_polygon(
            vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
            2,
        )
        .unwrap();
        assert!(build_sector_mesh(&domain, 3, 0.1).is_err());
    }
}
