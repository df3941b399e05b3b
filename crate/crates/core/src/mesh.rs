//! Structured quadrilateral meshes of axis-aligned rectangles.
//!
//! Nodes are numbered row-major, `k = j * (nx + 1) + i`, with `i` running
//! along x. Element `e = j * nx + i` owns the nodes
//!
//! ```text
//!   3 ---- 2      (i, j+1) ---- (i+1, j+1)
//!   |      |          |              |
//!   0 ---- 1      (i, j)   ---- (i+1, j)
//! ```
//!
//! which is counter-clockwise and matches the reference corners of
//! [`eval_basis`].

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[min[0], max[0]] x [min[1], max[1]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

/// Reference-square corners in local node order.
pub const REF_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

#[derive(Clone, Debug)]
pub struct MeshGrid {
    domain: Rect,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    boundary: Vec<bool>,
}

impl PartialEq for MeshGrid {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.nx == other.nx && self.ny == other.ny
    }
}

impl MeshGrid {
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "element counts must be positive, got nx={nx}, ny={ny}"
            )));
        }
        let finite = domain.min.iter().chain(&domain.max).all(|v| v.is_finite());
        if !finite || domain.width() <= 0.0 || domain.height() <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle {:?} x {:?}",
                domain.min, domain.max
            )));
        }
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;

        let mut boundary = vec![false; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                boundary[j * (nx + 1) + i] = i == 0 || j == 0 || i == nx || j == ny;
            }
        }

        Ok(Self {
            domain,
            nx,
            ny,
            hx,
            hy,
            boundary,
        })
    }

    /// Mesh with element edge `2^-h_exp` on a domain whose side lengths are
    /// integer multiples of it.
    pub fn with_h_exponent(domain: Rect, h_exp: u32) -> Result<Self> {
        let per_unit = (1u64 << h_exp) as f64;
        let count = |len: f64| -> Result<usize> {
            let n = len * per_unit;
            if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "side length {len} is not a multiple of 2^-{h_exp}"
                )));
            }
            Ok(n.round() as usize)
        };
        let nx = count(domain.width())?;
        let ny = count(domain.height())?;
        Self::new(domain, nx, ny)
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn element_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Determinant of the constant reference-to-physical Jacobian.
    pub fn jacobian_det(&self) -> f64 {
        0.25 * self.hx * self.hy
    }

    /// Maps reference gradients to physical ones: `diag(2/hx, 2/hy)`.
    pub fn inverse_jacobian(&self) -> [f64; 2] {
        [2.0 / self.hx, 2.0 / self.hy]
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % (self.nx + 1), k / (self.nx + 1))
    }

    pub fn node_coords(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(k);
        [
            self.domain.min[0] + i as f64 * self.hx,
            self.domain.min[1] + j as f64 * self.hy,
        ]
    }

    #[inline]
    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary[k]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn n_boundary_nodes(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    /// Global node indices of element `e`, counter-clockwise from the
    /// lower-left corner.
    #[inline]
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(e);
        let k0 = self.node_index(i, j);
        let k3 = self.node_index(i, j + 1);
        [k0, k0 + 1, k3 + 1, k3]
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        let (i, j) = self.element_ij(e);
        [
            self.domain.min[0] + i as f64 * self.hx,
            self.domain.min[1] + j as f64 * self.hy,
        ]
    }

    /// Physical point of reference coordinates `(xi, eta)` in element `e`.
    pub fn map_to_physical(&self, e: usize, xi: f64, eta: f64) -> [f64; 2] {
        let o = self.element_origin(e);
        [o[0] + 0.5 * (xi + 1.0) * self.hx, o[1] + 0.5 * (eta + 1.0) * self.hy]
    }

    /// Element containing `p` and the reference coordinates of `p` in it.
    /// Points on shared edges go to the element with the larger index.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 2])> {
        if !self.domain.contains(p) {
            return None;
        }
        let sx = (p[0] - self.domain.min[0]) / self.hx;
        let sy = (p[1] - self.domain.min[1]) / self.hy;
        let i = (sx.floor() as usize).min(self.nx - 1);
        let j = (sy.floor() as usize).min(self.ny - 1);
        let xi = 2.0 * (sx - i as f64) - 1.0;
        let eta = 2.0 * (sy - j as f64) - 1.0;
        Some((j * self.nx + i, [xi, eta]))
    }

    /// Whether `x` lies on a vertical grid line, up to a relative tolerance.
    pub fn on_x_grid_line(&self, x: f64) -> bool {
        on_grid(x, self.domain.min[0], self.hx)
    }

    pub fn on_y_grid_line(&self, y: f64) -> bool {
        on_grid(y, self.domain.min[1], self.hy)
    }
}

fn on_grid(v: f64, origin: f64, h: f64) -> bool {
    let s = (v - origin) / h;
    (s - s.round()).abs() < 1e-9
}

/// Bilinear shape function `local` at reference point `(xi, eta)`, with its
/// gradient in reference coordinates.
#[inline]
pub fn eval_basis(local: usize, xi: f64, eta: f64) -> (f64, [f64; 2]) {
    let [a, b] = REF_CORNERS[local];
    let fx = 1.0 + a * xi;
    let fy = 1.0 + b * eta;
    (0.25 * fx * fy, [0.25 * a * fy, 0.25 * b * fx])
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

/// Tensor 2x2 Gauss rule on `[-1, 1]^2`; exact for bi-cubic polynomials.
pub fn gauss_2x2() -> QuadratureRule {
    let g = 1.0 / 3f64.sqrt();
    QuadratureRule {
        points: vec![[-g, -g], [g, -g], [g, g], [-g, g]],
        weights: vec![1.0; 4],
    }
}

/// Basis values and reference gradients tabulated at the 2x2 Gauss points.
#[derive(Clone, Debug)]
pub(crate) struct ReferenceTable {
    pub weights: [f64; 4],
    pub values: [[f64; 4]; 4],
    pub grads: [[[f64; 2]; 4]; 4],
}

impl ReferenceTable {
    pub fn gauss() -> Self {
        let rule = gauss_2x2();
        let mut values = [[0.0; 4]; 4];
        let mut grads = [[[0.0; 2]; 4]; 4];
        for (q, p) in rule.points.iter().enumerate() {
            for a in 0..4 {
                let (v, g) = eval_basis(a, p[0], p[1]);
                values[q][a] = v;
                grads[q][a] = g;
            }
        }
        Self {
            weights: [rule.weights[0], rule.weights[1], rule.weights[2], rule.weights[3]],
            values,
            grads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x: f64, y: f64) -> Rect {
        Rect::new([0.0, 0.0], [x, y])
    }

    #[test]
    fn experiment_mesh_counts() {
        let m = MeshGrid::new(rect(1.0, 2.0), 128, 256).unwrap();
        assert_eq!(m.n_nodes(), 129 * 257);
        assert_eq!(m.hx(), 2f64.powi(-7));
        assert_eq!(m.hy(), 2f64.powi(-7));

        let m = MeshGrid::with_h_exponent(rect(1.0, 2.0), 7).unwrap();
        assert_eq!((m.nx(), m.ny()), (128, 256));
    }

    #[test]
    fn single_element_is_all_boundary() {
        let m = MeshGrid::new(rect(1.0, 1.0), 1, 1).unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_elements(), 1);
        assert!((0..4).all(|k| m.is_boundary(k)));
    }

    #[test]
    fn small_mesh_boundary_count() {
        let m = MeshGrid::new(rect(1.0, 2.0), 4, 8).unwrap();
        assert_eq!(m.n_nodes(), 45);
        assert_eq!(m.n_elements(), 32);
        // 2*(nx+1) + 2*(ny-1) = 10 + 14
        assert_eq!(m.n_boundary_nodes(), 24);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MeshGrid::new(rect(1.0, 1.0), 0, 3).is_err());
        assert!(MeshGrid::new(rect(1.0, 1.0), 3, 0).is_err());
        assert!(MeshGrid::new(Rect::new([1.0, 0.0], [1.0, 1.0]), 2, 2).is_err());
        assert!(MeshGrid::new(Rect::new([0.0, 1.0], [1.0, -1.0]), 2, 2).is_err());
        assert!(MeshGrid::with_h_exponent(Rect::new([0.0, 0.0], [0.3, 1.0]), 3).is_err());
    }

    #[test]
    fn connectivity_is_ccw_and_distinct() {
        let m = MeshGrid::new(rect(1.0, 2.0), 3, 5).unwrap();
        for e in 0..m.n_elements() {
            let nodes = m.element_nodes(e);
            for a in 0..4 {
                for b in a + 1..4 {
                    assert_ne!(nodes[a], nodes[b]);
                }
            }
            // shoelace area positive for counter-clockwise order
            let p: Vec<_> = nodes.iter().map(|&k| m.node_coords(k)).collect();
            let twice_area: f64 = (0..4)
                .map(|a| {
                    let b = (a + 1) % 4;
                    p[a][0] * p[b][1] - p[b][0] * p[a][1]
                })
                .sum();
            assert!((0.5 * twice_area - m.element_area()).abs() < 1e-14);
            for (a, &k) in nodes.iter().enumerate() {
                let x = m.map_to_physical(e, REF_CORNERS[a][0], REF_CORNERS[a][1]);
                let y = m.node_coords(k);
                assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn element_areas_sum_to_domain() {
        let m = MeshGrid::new(rect(1.0, 2.0), 16, 32).unwrap();
        let total = m.element_area() * m.n_elements() as f64;
        assert_eq!(total, 2.0);
    }

    #[test]
    fn locate_finds_containing_element() {
        let m = MeshGrid::new(rect(1.0, 2.0), 4, 8).unwrap();
        let (e, r) = m.locate([0.3, 1.1]).unwrap();
        let p = m.map_to_physical(e, r[0], r[1]);
        assert!((p[0] - 0.3).abs() < 1e-14 && (p[1] - 1.1).abs() < 1e-14);
        assert!(r[0].abs() <= 1.0 && r[1].abs() <= 1.0);
        assert!(m.locate([1.0, 2.0]).is_some());
        assert!(m.locate([1.1, 0.0]).is_none());
    }

    #[test]
    fn basis_lagrange_and_center() {
        for a in 0..4 {
            for b in 0..4 {
                let (v, _) = eval_basis(a, REF_CORNERS[b][0], REF_CORNERS[b][1]);
                assert_eq!(v, if a == b { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(eval_basis(0, 0.0, 0.0).0, 0.25);
        let sum: f64 = (0..4).map(|a| eval_basis(a, 0.3, -0.7).0).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_gradient_matches_finite_difference() {
        let (xi, eta, h) = (0.21, -0.43, 1e-6);
        for a in 0..4 {
            let (_, g) = eval_basis(a, xi, eta);
            let dx = (eval_basis(a, xi + h, eta).0 - eval_basis(a, xi - h, eta).0) / (2.0 * h);
            let dy = (eval_basis(a, xi, eta + h).0 - eval_basis(a, xi, eta - h).0) / (2.0 * h);
            assert!((g[0] - dx).abs() < 1e-9 && (g[1] - dy).abs() < 1e-9);
        }
    }

    #[test]
    fn gauss_rule_basics() {
        let q = gauss_2x2();
        assert_eq!(q.len(), 4);
        assert_eq!(q.weights.iter().sum::<f64>(), 4.0);
        assert!((q.integrate(|_, _| 1.0) - 4.0).abs() < 1e-15);
        assert!((q.integrate(|x, y| x * x * y * y) - 4.0 / 9.0).abs() < 1e-15);
        assert!(q.integrate(|x, _| x * x * x).abs() < 1e-15);
    }

    fn monomial_integral(p: i32) -> f64 {
        if p % 2 == 1 {
            0.0
        } else {
            2.0 / (p as f64 + 1.0)
        }
    }

    #[test]
    fn gauss_exact_for_bicubics() {
        let q = gauss_2x2();
        for i in 0..=3 {
            for j in 0..=3 {
                let got = q.integrate(|x, y| x.powi(i) * y.powi(j));
                let want = monomial_integral(i) * monomial_integral(j);
                assert!((got - want).abs() < 1e-15, "x^{i} y^{j}: {got} vs {want}");
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity_gradient_vanishes(xi in -1.0f64..1.0, eta in -1.0f64..1.0,
                                                hx in 0.01f64..2.0, hy in 0.01f64..2.0) {
            let m = MeshGrid::new(Rect::new([0.0, 0.0], [hx, hy]), 1, 1).unwrap();
            let inv = m.inverse_jacobian();
            let mut g = [0.0; 2];
            let mut v = 0.0;
            for a in 0..4 {
                let (va, ga) = eval_basis(a, xi, eta);
                v += va;
                g[0] += ga[0] * inv[0];
                g[1] += ga[1] * inv[1];
            }
            prop_assert!((v - 1.0).abs() < 1e-14);
            prop_assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        }
    }
}
