use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{eval_basis, MeshGrid};

/// Nodal coefficients of a Q1 finite-element function.
#[derive(Clone, Debug)]
pub struct ScalarField {
    mesh: Arc<MeshGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<MeshGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, mesh has {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: Arc<MeshGrid>, value: f64) -> Self {
        let values = vec![value; mesh.n_nodes()];
        Self { mesh, values }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<MeshGrid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..mesh.n_nodes()).map(|k| f(mesh.node_coords(k))).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<MeshGrid> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_mesh(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub(crate) fn check_mesh(&self, mesh: &MeshGrid) -> Result<()> {
        if *self.mesh != *mesh {
            return Err(Error::InvalidArgument("field lives on a different mesh".into()));
        }
        Ok(())
    }

    /// Value of the Q1 interpolant at `p`, `None` outside the domain.
    pub fn eval(&self, p: [f64; 2]) -> Option<f64> {
        let (e, r) = self.mesh.locate(p)?;
        let nodes = self.mesh.element_nodes(e);
        Some(
            nodes
                .iter()
                .enumerate()
                .map(|(a, &k)| eval_basis(a, r[0], r[1]).0 * self.values[k])
                .sum(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    #[test]
    fn eval_reproduces_bilinear() {
        let mesh = Arc::new(MeshGrid::new(Rect::new([0.0, 0.0], [1.0, 2.0]), 4, 8).unwrap());
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        let u = ScalarField::interpolate(Arc::clone(&mesh), f);
        for p in [[0.13, 0.71], [0.5, 1.0], [0.99, 1.99], [0.0, 0.0]] {
            assert!((u.eval(p).unwrap() - f(p)).abs() < 1e-13);
        }
        assert!(u.eval([2.0, 0.0]).is_none());
    }

    #[test]
    fn length_must_match() {
        let mesh = Arc::new(MeshGrid::new(Rect::new([0.0, 0.0], [1.0, 1.0]), 1, 1).unwrap());
        assert!(ScalarField::new(mesh, vec![0.0; 3]).is_err());
    }
}
