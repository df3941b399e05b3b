//! Finite-element operators of the linearized time step: mass, frozen
//! coefficient stiffness, convection, load vectors, L2 projection and
//! Dirichlet elimination.
//!
//! All element loops run in element order with a fixed quadrature order, so
//! assembling identical inputs twice gives bitwise identical matrices.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linsolve::solve_cg;
use crate::mesh::{MeshGrid, ReferenceTable};
use crate::sparse::CsrMatrix;

pub use crate::sparse::CsrMatrix as SparseMatrix;

/// Per-element quadrature data; identical for every element of a
/// structured mesh.
struct ElementKernel {
    table: ReferenceTable,
    det: f64,
    /// Physical basis gradients at each quadrature point.
    grads: [[[f64; 2]; 4]; 4],
}

impl ElementKernel {
    fn new(mesh: &MeshGrid) -> Self {
        let table = ReferenceTable::gauss();
        let inv = mesh.inverse_jacobian();
        let mut grads = [[[0.0; 2]; 4]; 4];
        for q in 0..4 {
            for a in 0..4 {
                grads[q][a] = [table.grads[q][a][0] * inv[0], table.grads[q][a][1] * inv[1]];
            }
        }
        Self {
            det: mesh.jacobian_det(),
            table,
            grads,
        }
    }

    fn quad_points(&self, mesh: &MeshGrid, e: usize) -> [[f64; 2]; 4] {
        let o = mesh.element_origin(e);
        let mut pts = [[0.0; 2]; 4];
        for (q, p) in pts.iter_mut().enumerate() {
            // Map via basis values so quadrature points stay consistent with
            // the shape functions.
            let v = &self.table.values[q];
            let (hx, hy) = (mesh.hx(), mesh.hy());
            *p = [o[0] + hx * (v[1] + v[2]), o[1] + hy * (v[2] + v[3])];
        }
        pts
    }
}

fn scatter(mat: &mut CsrMatrix, nodes: &[usize; 4], local: &[[f64; 4]; 4]) {
    for a in 0..4 {
        for b in 0..4 {
            mat.add_to(nodes[a], nodes[b], local[a][b]);
        }
    }
}

/// Consistent mass matrix `M_ij = (phi_i, phi_j)`.
pub fn assemble_mass(mesh: &MeshGrid) -> CsrMatrix {
    let kernel = ElementKernel::new(mesh);
    let mut local = [[0.0; 4]; 4];
    for (q, w) in kernel.table.weights.iter().enumerate() {
        let v = &kernel.table.values[q];
        for a in 0..4 {
            for b in 0..4 {
                local[a][b] += w * kernel.det * v[a] * v[b];
            }
        }
    }
    let mut m = CsrMatrix::q1_pattern(mesh);
    for e in 0..mesh.n_elements() {
        scatter(&mut m, &mesh.element_nodes(e), &local);
    }
    m
}

/// Row-sum lumped mass matrix, stored on the Q1 pattern so it can be
/// combined with the other operators.
pub fn assemble_lumped_mass(mesh: &MeshGrid) -> CsrMatrix {
    let mut m = CsrMatrix::q1_pattern(mesh);
    for (k, a) in lumped_areas(mesh).into_iter().enumerate() {
        m.add_to(k, k, a);
    }
    m
}

/// Stiffness matrix with a coefficient that depends on the interpolated
/// frozen field: `A_ij = (law(w_h) grad phi_j, grad phi_i)`, `law`
/// evaluated at the Gauss points.
pub fn assemble_stiffness_with(mesh: &MeshGrid, field: &ScalarField, law: impl Fn(f64) -> f64) -> Result<CsrMatrix> {
    field.check_mesh(mesh)?;
    let kernel = ElementKernel::new(mesh);
    let w = field.values();

    // Unit-coefficient contributions per quadrature point.
    let mut gg = [[[0.0; 4]; 4]; 4];
    for q in 0..4 {
        let g = &kernel.grads[q];
        for a in 0..4 {
            for b in 0..4 {
                gg[q][a][b] = kernel.table.weights[q] * kernel.det * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }

    let mut mat = CsrMatrix::q1_pattern(mesh);
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(e);
        let mut local = [[0.0; 4]; 4];
        for q in 0..4 {
            let v = &kernel.table.values[q];
            let wq: f64 = (0..4).map(|a| v[a] * w[nodes[a]]).sum();
            let k = law(wq);
            for a in 0..4 {
                for b in 0..4 {
                    local[a][b] += k * gg[q][a][b];
                }
            }
        }
        scatter(&mut mat, &nodes, &local);
    }
    Ok(mat)
}

/// Like [`assemble_stiffness_with`], but with one coefficient per element,
/// `law` applied to the mean of the four nodal values.
///
/// On square cells the unit stiffness has no positive off-diagonal entries,
/// so a nonnegative elementwise coefficient keeps that sign pattern.
pub fn assemble_stiffness_elementwise(
    mesh: &MeshGrid,
    field: &ScalarField,
    law: impl Fn(f64) -> f64,
) -> Result<CsrMatrix> {
    field.check_mesh(mesh)?;
    let kernel = ElementKernel::new(mesh);
    let w = field.values();
    let mut unit = [[0.0; 4]; 4];
    for q in 0..4 {
        let g = &kernel.grads[q];
        for a in 0..4 {
            for b in 0..4 {
                unit[a][b] += kernel.table.weights[q] * kernel.det * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    let mut mat = CsrMatrix::q1_pattern(mesh);
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(e);
        let k = law(0.25 * nodes.iter().map(|&n| w[n]).sum::<f64>());
        let mut local = unit;
        for row in local.iter_mut() {
            for v in row.iter_mut() {
                *v *= k;
            }
        }
        scatter(&mut mat, &nodes, &local);
    }
    Ok(mat)
}

/// Frozen-coefficient stiffness with coefficient `kappa * w_h + delta`.
pub fn assemble_stiffness(mesh: &MeshGrid, coefficient: &ScalarField, kappa: f64, delta: f64) -> Result<CsrMatrix> {
    if !(kappa > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need kappa > 0 and delta >= 0, got kappa={kappa}, delta={delta}"
        )));
    }
    assemble_stiffness_with(mesh, coefficient, |w| kappa * w + delta)
}

/// Galerkin convection matrix `C_ij = -(phi_j u, grad phi_i)`.
///
/// The velocity is expected to be divergence free; nothing here checks it.
/// No upwinding is applied, so large cell Peclet numbers will oscillate.
pub fn assemble_convection(mesh: &MeshGrid, velocity: impl Fn([f64; 2]) -> [f64; 2]) -> CsrMatrix {
    let kernel = ElementKernel::new(mesh);
    let mut mat = CsrMatrix::q1_pattern(mesh);
    for e in 0..mesh.n_elements() {
        let pts = kernel.quad_points(mesh, e);
        let mut local = [[0.0; 4]; 4];
        for q in 0..4 {
            let u = velocity(pts[q]);
            let scale = kernel.table.weights[q] * kernel.det;
            let v = &kernel.table.values[q];
            let g = &kernel.grads[q];
            for a in 0..4 {
                let ug = u[0] * g[a][0] + u[1] * g[a][1];
                for b in 0..4 {
                    local[a][b] -= scale * v[b] * ug;
                }
            }
        }
        scatter(&mut mat, &mesh.element_nodes(e), &local);
    }
    mat
}

/// Load vector `b_i = (f, phi_i)` with 2x2 Gauss per element.
pub fn load_vector(mesh: &MeshGrid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let kernel = ElementKernel::new(mesh);
    let mut b = vec![0.0; mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        let pts = kernel.quad_points(mesh, e);
        let nodes = mesh.element_nodes(e);
        for q in 0..4 {
            let fq = f(pts[q]) * kernel.table.weights[q] * kernel.det;
            for a in 0..4 {
                b[nodes[a]] += fq * kernel.table.values[q][a];
            }
        }
    }
    b
}

/// L2 projection onto the full Q1 space: solves `M x = b`, `b_i = (f, phi_i)`.
///
/// The load integral is exact when `f` is bilinear on every element, which
/// covers piecewise-constant data whose jumps sit on grid lines.
pub fn l2_project(mesh: &Arc<MeshGrid>, f: impl Fn([f64; 2]) -> f64) -> Result<ScalarField> {
    let m = assemble_mass(mesh);
    let b = load_vector(mesh, f);
    let x0 = vec![0.0; b.len()];
    let (x, report) = solve_cg(&m, &b, &x0, 1e-14, 0.0, 10 * b.len());
    if !report.success {
        return Err(Error::InvalidArgument(format!(
            "mass-matrix solve failed (residual {:e})",
            report.residual
        )));
    }
    ScalarField::new(Arc::clone(mesh), x)
}

/// Projection with the row-sum lumped mass matrix: `x_i = (f, phi_i) / (1, phi_i)`.
/// A convex combination of values of `f`, so it never over- or undershoots.
pub fn lumped_project(mesh: &Arc<MeshGrid>, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
    let b = load_vector(mesh, f);
    let areas = lumped_areas(mesh);
    let x = b.iter().zip(&areas).map(|(b, a)| b / a).collect();
    ScalarField::new(Arc::clone(mesh), x).expect("load vector has one entry per node")
}

/// `(1, phi_i)` for every node: row sums of the mass matrix.
pub fn lumped_areas(mesh: &MeshGrid) -> Vec<f64> {
    let quarter = 0.25 * mesh.element_area();
    let mut areas = vec![0.0; mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        for k in mesh.element_nodes(e) {
            areas[k] += quarter;
        }
    }
    areas
}

/// Imposes `u = value` on `constrained` nodes by symmetric elimination:
/// constrained columns move to the right-hand side, constrained rows become
/// identity rows. The sparsity pattern is kept (eliminated entries become 0).
pub fn apply_constraints(system: &mut CsrMatrix, rhs: &mut [f64], constrained: &[bool], value: f64) {
    let n = system.dim();
    assert_eq!(rhs.len(), n);
    assert_eq!(constrained.len(), n);
    let row_ptr = system.row_ptr().to_vec();
    let cols = system.col_idx().to_vec();
    let vals = system.values_mut();
    for i in 0..n {
        let range = row_ptr[i]..row_ptr[i + 1];
        if constrained[i] {
            for p in range {
                vals[p] = if cols[p] == i { 1.0 } else { 0.0 };
            }
            rhs[i] = value;
        } else {
            for p in range {
                if constrained[cols[p]] {
                    rhs[i] -= vals[p] * value;
                    vals[p] = 0.0;
                }
            }
        }
    }
}

/// Dirichlet condition `u = boundary_value` on every boundary node.
pub fn apply_dirichlet(system: &mut CsrMatrix, rhs: &mut [f64], mesh: &MeshGrid, boundary_value: f64) {
    apply_constraints(system, rhs, mesh.boundary_flags(), boundary_value);
}
