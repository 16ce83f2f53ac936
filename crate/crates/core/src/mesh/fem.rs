//! Piecewise-linear triangle finite elements.
//!
//! Supports the polygonal-domain side of the crate: harmonic solves for the
//! regular part of the Green's function and Poisson solves for numeric
//! bubble projections. Meshes are fans from the origin (the domains of
//! interest are star-shaped with respect to the concentration point) with
//! uniform midpoint refinement; solving is conjugate gradients on the
//! interior block of the P1 stiffness matrix.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub nodes: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    /// True for nodes on the outer (Dirichlet) boundary.
    pub boundary: Vec<bool>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn signed_polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let mut acc = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        acc += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * acc
}

impl TriMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t];
        0.5 * cross(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.tris.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest edge over all triangles.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for &[a, b, c] in &self.tris {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                let dx = self.nodes[p][0] - self.nodes[q][0];
                let dy = self.nodes[p][1] - self.nodes[q][1];
                h = h.max((dx * dx + dy * dy).sqrt());
            }
        }
        h
    }

    /// P1 interpolation at an arbitrary point, by scanning triangles.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        let eps = 1e-12;
        for &[a, b, c] in &self.tris {
            let area = cross(self.nodes[a], self.nodes[b], self.nodes[c]);
            if area.abs() < 1e-30 {
                continue;
            }
            let la = cross(self.nodes[b], self.nodes[c], p) / area;
            let lb = cross(self.nodes[c], self.nodes[a], p) / area;
            let lc = cross(self.nodes[a], self.nodes[b], p) / area;
            if la >= -eps && lb >= -eps && lc >= -eps {
                return Some(la * values[a] + lb * values[b] + lc * values[c]);
            }
        }
        None
    }
}

/// Triangulates a polygon star-shaped with respect to the origin: a fan from
/// the origin, refined `refine` times by edge-midpoint subdivision.
pub fn fan_mesh(vertices: &[[f64; 2]], refine: usize) -> Result<TriMesh> {
    if vertices.len() < 3 {
        return Err(Error::Domain("polygon needs at least 3 vertices".into()));
    }
    let mut verts = vertices.to_vec();
    if signed_polygon_area(&verts) < 0.0 {
        verts.reverse();
    }
    let m = verts.len();
    for i in 0..m {
        let a = verts[i];
        let b = verts[(i + 1) % m];
        if cross([0.0, 0.0], a, b) <= 1e-14 {
            return Err(Error::Resource(
                "polygon is not star-shaped with respect to the origin; fan meshing failed".into(),
            ));
        }
    }

    let mut nodes: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    nodes.extend(verts.iter().copied());
    let mut tris: Vec<[usize; 3]> = (0..m).map(|i| [0, 1 + i, 1 + (i + 1) % m]).collect();
    let mut bnd_edges: std::collections::HashSet<(usize, usize)> = (0..m)
        .map(|i| ordered(1 + i, 1 + (i + 1) % m))
        .collect();

    for _ in 0..refine {
        let mut midpoint: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut new_tris = Vec::with_capacity(tris.len() * 4);
        let mut new_bnd: std::collections::HashSet<(usize, usize)> =
            std::collections::HashSet::new();
        for &[a, b, c] in &tris {
            let mab = mid(&mut nodes, &mut midpoint, a, b);
            let mbc = mid(&mut nodes, &mut midpoint, b, c);
            let mca = mid(&mut nodes, &mut midpoint, c, a);
            new_tris.push([a, mab, mca]);
            new_tris.push([mab, b, mbc]);
            new_tris.push([mca, mbc, c]);
            new_tris.push([mab, mbc, mca]);
            for (p, q, mpq) in [(a, b, mab), (b, c, mbc), (c, a, mca)] {
                if bnd_edges.contains(&ordered(p, q)) {
                    new_bnd.insert(ordered(p, mpq));
                    new_bnd.insert(ordered(mpq, q));
                }
            }
        }
        tris = new_tris;
        bnd_edges = new_bnd;
    }

    let mut boundary = vec![false; nodes.len()];
    for &(p, q) in &bnd_edges {
        boundary[p] = true;
        boundary[q] = true;
    }
    let mesh = TriMesh {
        nodes,
        tris,
        boundary,
    };
    for t in 0..mesh.tris.len() {
        if mesh.triangle_area(t) <= 0.0 {
            return Err(Error::Resource(format!("degenerate cell {t} in fan mesh")));
        }
    }
    Ok(mesh)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn mid(
    nodes: &mut Vec<[f64; 2]>,
    cache: &mut std::collections::HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = ordered(a, b);
    if let Some(&id) = cache.get(&key) {
        return id;
    }
    let p = [
        0.5 * (nodes[a][0] + nodes[b][0]),
        0.5 * (nodes[a][1] + nodes[b][1]),
    ];
    nodes.push(p);
    let id = nodes.len() - 1;
    cache.insert(key, id);
    id
}

/// Symmetric sparse matrix in adjacency-list form.
#[derive(Clone, Debug)]
pub struct SparseSym {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in row {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }
}

/// P1 stiffness matrix over merged dofs.
///
/// `merge[node]` is the representative node (identity for plain meshes);
/// identified nodes share matrix rows, which realizes periodic edges.
pub fn assemble_stiffness(mesh: &TriMesh, merge: &[usize]) -> SparseSym {
    let n = mesh.nodes.len();
    let mut rows: Vec<std::collections::HashMap<usize, f64>> = vec![Default::default(); n];
    for &[a, b, c] in &mesh.tris {
        let pa = mesh.nodes[a];
        let pb = mesh.nodes[b];
        let pc = mesh.nodes[c];
        let area2 = cross(pa, pb, pc);
        let area = 0.5 * area2;
        // Gradients of the barycentric basis.
        let g = [
            [(pb[1] - pc[1]) / area2, (pc[0] - pb[0]) / area2],
            [(pc[1] - pa[1]) / area2, (pa[0] - pc[0]) / area2],
            [(pa[1] - pb[1]) / area2, (pb[0] - pa[0]) / area2],
        ];
        let ids = [merge[a], merge[b], merge[c]];
        for i in 0..3 {
            for j in 0..3 {
                let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                *rows[ids[i]].entry(ids[j]).or_insert(0.0) += v;
            }
        }
    }
    SparseSym {
        rows: rows
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, f64)> = m.into_iter().collect();
                v.sort_by_key(|e| e.0);
                v
            })
            .collect(),
    }
}

/// Lumped P1 load vector for a nodal density f: (area of patch)/3 per node,
/// accumulated on merged dofs.
pub fn lumped_load(mesh: &TriMesh, f: &[f64], merge: &[usize]) -> Vec<f64> {
    let mut load = vec![0.0; mesh.nodes.len()];
    for (t, &[a, b, c]) in mesh.tris.iter().enumerate() {
        let w = mesh.triangle_area(t) / 3.0;
        for id in [a, b, c] {
            load[merge[id]] += w * f[id];
        }
    }
    load
}

/// Solves -Δu = f with Dirichlet data g on the boundary nodes, by CG on the
/// interior block. `merge` identifies periodic node pairs (identity map for
/// plain meshes). Returns nodal values on the full mesh.
pub fn solve_poisson(
    mesh: &TriMesh,
    g: impl Fn([f64; 2]) -> f64,
    f: Option<&[f64]>,
    merge: &[usize],
) -> Result<Vec<f64>> {
    let n = mesh.nodes.len();
    let stiff = assemble_stiffness(mesh, merge);
    let zero = vec![0.0; n];
    let load = lumped_load(mesh, f.unwrap_or(&zero), merge);

    // Representative dofs: interior representatives become unknowns.
    let mut dof: Vec<isize> = vec![-2; n]; // -2 unassigned, -1 Dirichlet
    let mut unknowns: Vec<usize> = Vec::new();
    for node in 0..n {
        let rep = merge[node];
        if mesh.boundary[node] {
            dof[rep] = -1;
        }
    }
    for node in 0..n {
        let rep = merge[node];
        if rep == node && dof[rep] == -2 {
            dof[rep] = unknowns.len() as isize;
            unknowns.push(rep);
        }
    }

    let mut full = vec![0.0; n];
    for node in 0..n {
        if mesh.boundary[node] {
            full[merge[node]] = g(mesh.nodes[node]);
        }
    }

    // rhs_I = load_I - A_IB g_B
    let mut rhs: Vec<f64> = unknowns.iter().map(|&r| load[r]).collect();
    for (i, &r) in unknowns.iter().enumerate() {
        for &(j, v) in &stiff.rows[r] {
            if dof[j] == -1 {
                rhs[i] -= v * full[j];
            }
        }
    }

    // CG with Jacobi preconditioning on the interior block.
    let diag: Vec<f64> = unknowns
        .iter()
        .map(|&r| {
            stiff.rows[r]
                .iter()
                .find(|&&(j, _)| j == r)
                .map(|&(_, v)| v)
                .unwrap_or(1.0)
        })
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, &r) in unknowns.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in &stiff.rows[r] {
                if dof[j] >= 0 {
                    acc += v * x[dof[j] as usize];
                }
            }
            y[i] = acc;
        }
        y
    };

    let m = unknowns.len();
    let mut x = vec![0.0; m];
    let mut res: Vec<f64> = rhs.clone();
    let mut z: Vec<f64> = res.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = res.iter().zip(&z).map(|(a, b)| a * b).sum();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let max_iter = 400 + 40 * (m as f64).sqrt() as usize * 8;
    let mut converged = rz.abs().sqrt() <= 1e-13 * rhs_norm;
    for _ in 0..max_iter {
        if converged {
            break;
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            res[i] -= alpha * ap[i];
        }
        let rnorm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= 1e-12 * rhs_norm {
            converged = true;
            break;
        }
        for i in 0..m {
            z[i] = res[i] / diag[i];
        }
        let rz_new: f64 = res.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    if !converged {
        return Err(Error::Resource(
            "conjugate gradient did not converge on the FEM system".into(),
        ));
    }

    for (i, &r) in unknowns.iter().enumerate() {
        full[r] = x[i];
    }
    // Propagate representative values to merged duplicates.
    let full_copy = full.clone();
    for node in 0..n {
        full[node] = full_copy[merge[node]];
    }
    Ok(full)
}

pub fn identity_merge(n: usize) -> Vec<usize> {
    (0..n).collect()
}
