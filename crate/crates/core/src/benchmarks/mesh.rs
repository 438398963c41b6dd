//! Structured P1 simplex meshes on the unit square/cube and the element
//! matrices the two benchmark assemblers share. Squares split along the
//! (0,0)-(1,1) diagonal; cubes into six path tetrahedra, whose traces on
//! the coordinate planes reproduce the 2D split, so boundary integrals
//! below are consistent with the volume elements.

use nalgebra::{DVector, Matrix2, Matrix3};

use crate::error::{Error, Result};

pub struct StructuredMesh {
    pub dim: usize,
    /// Cells per axis; h = 1/res.
    pub res: usize,
    pub nodes: Vec<[f64; 3]>,
    /// dim+1 vertex ids per simplex; the unused tail slot is usize::MAX.
    pub simplices: Vec<[usize; 4]>,
}

impl StructuredMesh {
    pub fn unit_square(res: usize) -> Result<StructuredMesh> {
        if res < 2 {
            return Err(Error::argument("mesh resolution must be at least 2".to_string()));
        }
        let np = res + 1;
        let h = 1.0 / res as f64;
        let id = |i: usize, j: usize| j * np + i;
        let mut nodes = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                nodes.push([i as f64 * h, j as f64 * h, 0.0]);
            }
        }
        let mut simplices = Vec::with_capacity(2 * res * res);
        for cy in 0..res {
            for cx in 0..res {
                let (c00, c10) = (id(cx, cy), id(cx + 1, cy));
                let (c01, c11) = (id(cx, cy + 1), id(cx + 1, cy + 1));
                simplices.push([c00, c10, c11, usize::MAX]);
                simplices.push([c00, c11, c01, usize::MAX]);
            }
        }
        Ok(StructuredMesh { dim: 2, res, nodes, simplices })
    }

    pub fn unit_cube(res: usize) -> Result<StructuredMesh> {
        if res < 2 {
            return Err(Error::argument("mesh resolution must be at least 2".to_string()));
        }
        let np = res + 1;
        let h = 1.0 / res as f64;
        let id = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
        let mut nodes = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    nodes.push([i as f64 * h, j as f64 * h, k as f64 * h]);
                }
            }
        }
        // Kuhn split: walk from the low corner to the high corner one axis
        // at a time; the six axis orders give six tetrahedra sharing the
        // main diagonal.
        const ORDERS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut simplices = Vec::with_capacity(6 * res * res * res);
        for cz in 0..res {
            for cy in 0..res {
                for cx in 0..res {
                    for order in ORDERS {
                        let mut p = [cx, cy, cz];
                        let mut tet = [id(p[0], p[1], p[2]), 0, 0, 0];
                        for (step, &axis) in order.iter().enumerate() {
                            p[axis] += 1;
                            tet[step + 1] = id(p[0], p[1], p[2]);
                        }
                        simplices.push(tet);
                    }
                }
            }
        }
        Ok(StructuredMesh { dim: 3, res, nodes, simplices })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.simplices.len()
    }

    pub fn cell(&self, e: usize) -> &[usize] {
        &self.simplices[e][..self.dim + 1]
    }

    pub fn centroid(&self, e: usize) -> [f64; 3] {
        let verts = self.cell(e);
        let mut c = [0.0; 3];
        for &v in verts {
            for (axis, acc) in c.iter_mut().enumerate() {
                *acc += self.nodes[v][axis];
            }
        }
        let scale = 1.0 / verts.len() as f64;
        c.map(|x| x * scale)
    }

    /// Volume and the constant P1 basis gradients of one simplex.
    pub fn element_geometry(&self, e: usize) -> (f64, Vec<[f64; 3]>) {
        let verts = self.cell(e);
        let p0 = self.nodes[verts[0]];
        if self.dim == 2 {
            let edge = |v: usize| {
                let p = self.nodes[verts[v]];
                [p[0] - p0[0], p[1] - p0[1]]
            };
            let (e1, e2) = (edge(1), edge(2));
            let em = Matrix2::new(e1[0], e2[0], e1[1], e2[1]);
            let det = em.determinant();
            let vol = det.abs() / 2.0;
            // grad lambda_a is row a-1 of E^{-1} (lambda = E^{-1}(x - x0)).
            let inv = em.try_inverse().expect("degenerate triangle");
            let mut grads = vec![[0.0; 3]; 3];
            for a in 1..3 {
                grads[a] = [inv[(a - 1, 0)], inv[(a - 1, 1)], 0.0];
                for axis in 0..2 {
                    grads[0][axis] -= grads[a][axis];
                }
            }
            (vol, grads)
        } else {
            let edge = |v: usize| {
                let p = self.nodes[verts[v]];
                [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]]
            };
            let (e1, e2, e3) = (edge(1), edge(2), edge(3));
            let em = Matrix3::new(
                e1[0], e2[0], e3[0],
                e1[1], e2[1], e3[1],
                e1[2], e2[2], e3[2],
            );
            let det = em.determinant();
            let vol = det.abs() / 6.0;
            let inv = em.try_inverse().expect("degenerate tetrahedron");
            let mut grads = vec![[0.0; 3]; 4];
            for a in 1..4 {
                grads[a] = [inv[(a - 1, 0)], inv[(a - 1, 1)], inv[(a - 1, 2)]];
                for axis in 0..3 {
                    grads[0][axis] -= grads[a][axis];
                }
            }
            (vol, grads)
        }
    }
}

/// Node -> dof map keeping nodes that are referenced by a kept element and
/// not Dirichlet-constrained. Returns the map and the dof count.
pub fn dof_map(
    mesh: &StructuredMesh,
    kept: &[usize],
    constrained: &dyn Fn(&[f64; 3]) -> bool,
) -> (Vec<Option<usize>>, usize) {
    let mut referenced = vec![false; mesh.num_nodes()];
    for &e in kept {
        for &v in mesh.cell(e) {
            referenced[v] = true;
        }
    }
    let mut map = vec![None; mesh.num_nodes()];
    let mut next = 0;
    for v in 0..mesh.num_nodes() {
        if referenced[v] && !constrained(&mesh.nodes[v]) {
            map[v] = Some(next);
            next += 1;
        }
    }
    (map, next)
}

/// P1 stiffness triplets (dof indexing) over the given elements.
pub fn stiffness_triplets(
    mesh: &StructuredMesh,
    elements: &[usize],
    map: &[Option<usize>],
) -> Vec<(usize, usize, f64)> {
    let nv = mesh.dim + 1;
    let mut out = Vec::with_capacity(elements.len() * nv * nv);
    for &e in elements {
        let verts = mesh.cell(e);
        let (vol, grads) = mesh.element_geometry(e);
        for a in 0..nv {
            let Some(ra) = map[verts[a]] else { continue };
            for b in 0..nv {
                let Some(rb) = map[verts[b]] else { continue };
                let dot: f64 = (0..3).map(|ax| grads[a][ax] * grads[b][ax]).sum();
                out.push((ra, rb, vol * dot));
            }
        }
    }
    out
}

/// P1 mass triplets (dof indexing) over the given elements.
pub fn mass_triplets(
    mesh: &StructuredMesh,
    elements: &[usize],
    map: &[Option<usize>],
) -> Vec<(usize, usize, f64)> {
    let nv = mesh.dim + 1;
    let scale = 1.0 / ((nv * (nv + 1)) as f64);
    let mut out = Vec::with_capacity(elements.len() * nv * nv);
    for &e in elements {
        let verts = mesh.cell(e);
        let (vol, _) = mesh.element_geometry(e);
        for a in 0..nv {
            let Some(ra) = map[verts[a]] else { continue };
            for b in 0..nv {
                let Some(rb) = map[verts[b]] else { continue };
                let w = if a == b { 2.0 } else { 1.0 };
                out.push((ra, rb, vol * scale * w));
            }
        }
    }
    out
}

/// `integral of phi_i` over the given elements, as a dense dof vector.
pub fn volume_load(
    mesh: &StructuredMesh,
    elements: &[usize],
    map: &[Option<usize>],
    ndof: usize,
) -> DVector<f64> {
    let nv = mesh.dim + 1;
    let mut out = DVector::zeros(ndof);
    for &e in elements {
        let (vol, _) = mesh.element_geometry(e);
        for &v in mesh.cell(e) {
            if let Some(r) = map[v] {
                out[r] += vol / nv as f64;
            }
        }
    }
    out
}

/// Boundary facets of the unit square/cube selected by a node predicate
/// (all facet vertices must satisfy it). 2D facets are the grid edges of
/// the four sides; 3D facets are the Kuhn-trace triangles of the six
/// faces, split along the local (0,0)-(1,1) diagonal like the 2D mesh.
pub fn boundary_facets(
    mesh: &StructuredMesh,
    on_boundary: &dyn Fn(&[f64; 3]) -> bool,
) -> Vec<Vec<usize>> {
    let np = mesh.res + 1;
    let mut out = Vec::new();
    if mesh.dim == 2 {
        let id = |i: usize, j: usize| j * np + i;
        let mut push_edge = |a: usize, b: usize| {
            if on_boundary(&mesh.nodes[a]) && on_boundary(&mesh.nodes[b]) {
                out.push(vec![a, b]);
            }
        };
        for i in 0..mesh.res {
            push_edge(id(i, 0), id(i + 1, 0));
            push_edge(id(i, mesh.res), id(i + 1, mesh.res));
        }
        for j in 0..mesh.res {
            push_edge(id(0, j), id(0, j + 1));
            push_edge(id(mesh.res, j), id(mesh.res, j + 1));
        }
    } else {
        let id = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
        // One closure per axis-aligned face family; (s, t) are the two
        // in-face axes, fixed is the pinned axis value.
        let mut push_face = |corner: &dyn Fn(usize, usize) -> usize| {
            for t in 0..mesh.res {
                for s in 0..mesh.res {
                    let (f00, f10) = (corner(s, t), corner(s + 1, t));
                    let (f01, f11) = (corner(s, t + 1), corner(s + 1, t + 1));
                    for tri in [[f00, f10, f11], [f00, f11, f01]] {
                        if tri.iter().all(|&v| on_boundary(&mesh.nodes[v])) {
                            out.push(tri.to_vec());
                        }
                    }
                }
            }
        };
        push_face(&|s, t| id(s, 0, t));
        push_face(&|s, t| id(s, mesh.res, t));
        push_face(&|s, t| id(0, s, t));
        push_face(&|s, t| id(mesh.res, s, t));
        push_face(&|s, t| id(s, t, 0));
        push_face(&|s, t| id(s, t, mesh.res));
    }
    out
}

fn facet_measure(mesh: &StructuredMesh, facet: &[usize]) -> f64 {
    if facet.len() == 2 {
        let (p, q) = (mesh.nodes[facet[0]], mesh.nodes[facet[1]]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    } else {
        let (p0, p1, p2) = (mesh.nodes[facet[0]], mesh.nodes[facet[1]], mesh.nodes[facet[2]]);
        let u = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
        let v = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
        let cx = u[1] * v[2] - u[2] * v[1];
        let cy = u[2] * v[0] - u[0] * v[2];
        let cz = u[0] * v[1] - u[1] * v[0];
        0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
    }
}

/// `integral of phi_i ds` over the facets, as a dense dof vector.
pub fn boundary_load(
    mesh: &StructuredMesh,
    facets: &[Vec<usize>],
    map: &[Option<usize>],
    ndof: usize,
) -> DVector<f64> {
    let mut out = DVector::zeros(ndof);
    for facet in facets {
        let share = facet_measure(mesh, facet) / facet.len() as f64;
        for &v in facet {
            if let Some(r) = map[v] {
                out[r] += share;
            }
        }
    }
    out
}

/// Boundary mass triplets (`integral of phi_i phi_j ds`) over the facets.
pub fn boundary_mass_triplets(
    mesh: &StructuredMesh,
    facets: &[Vec<usize>],
    map: &[Option<usize>],
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for facet in facets {
        let nv = facet.len();
        let scale = 1.0 / ((nv * (nv + 1)) as f64);
        let measure = facet_measure(mesh, facet);
        for a in 0..nv {
            let Some(ra) = map[facet[a]] else { continue };
            for b in 0..nv {
                let Some(rb) = map[facet[b]] else { continue };
                let w = if a == b { 2.0 } else { 1.0 };
                out.push((ra, rb, measure * scale * w));
            }
        }
    }
    out
}
