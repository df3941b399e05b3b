//! Per-step measurements: extrema, mass, thresholded support, fronts, and
//! the Barenblatt reference profile.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mesh::MeshGrid;

pub const DEFAULT_THETA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub chat_min: f64,
    pub chat_max: f64,
    /// Integral of `c` over the domain.
    pub mass: f64,
    /// Area of elements where `c > theta` at all four nodes.
    pub support_area: f64,
    pub theta: f64,
    pub picard_iterations: usize,
    pub converged: bool,
    /// Last Picard increment `||u^k - u^{k-1}||_2`.
    pub picard_error: f64,
    pub blow_up: bool,
}

impl DiagnosticsRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn measure(
        step: usize,
        time: f64,
        c: &ScalarField,
        chat: &ScalarField,
        theta: f64,
        picard_iterations: usize,
        converged: bool,
        picard_error: f64,
    ) -> Self {
        Self {
            step,
            time,
            c_min: c.min(),
            c_max: c.max(),
            chat_min: chat.min(),
            chat_max: chat.max(),
            mass: total_mass(c),
            support_area: support_measure(c, theta),
            theta,
            picard_iterations,
            converged,
            picard_error,
            blow_up: !(c.is_finite() && chat.is_finite()),
        }
    }

    pub const CSV_HEADER: &'static str = "step,time,c_min,c_max,chat_min,chat_max,mass,support_area,theta,picard_iterations,converged,picard_error,blow_up";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{}",
            self.step,
            self.time,
            self.c_min,
            self.c_max,
            self.chat_min,
            self.chat_max,
            self.mass,
            self.support_area,
            self.theta,
            self.picard_iterations,
            self.converged,
            self.picard_error,
            self.blow_up
        )
    }
}

/// Flags of elements whose four nodal values all exceed `theta`.
pub fn support_elements(field: &ScalarField, theta: f64) -> Vec<bool> {
    let mesh = field.mesh();
    let u = field.values();
    (0..mesh.n_elements())
        .map(|e| mesh.element_nodes(e).iter().all(|&k| u[k] > theta))
        .collect()
}

/// Inner approximation of `|{c > theta}|`.
pub fn support_measure(field: &ScalarField, theta: f64) -> f64 {
    let count = support_elements(field, theta).iter().filter(|&&s| s).count();
    count as f64 * field.mesh().element_area()
}

/// Smallest number of element layers between a supported element and the
/// domain boundary (0 when a supported element touches the boundary).
pub fn support_margin(field: &ScalarField, theta: f64) -> Option<usize> {
    let mesh = field.mesh();
    support_elements(field, theta)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(e, _)| {
            let (i, j) = mesh.element_ij(e);
            i.min(j).min(mesh.nx() - 1 - i).min(mesh.ny() - 1 - j)
        })
        .min()
}

/// Smallest boundary distance, in grid lines, of a node with value above
/// `theta`. A margin of at least 2 keeps `{u_h > theta}` one full cell away
/// from the boundary.
pub fn support_node_margin(field: &ScalarField, theta: f64) -> Option<usize> {
    let mesh = field.mesh();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > theta)
        .map(|(k, _)| {
            let (i, j) = mesh.node_ij(k);
            i.min(j).min(mesh.nx() - i).min(mesh.ny() - j)
        })
        .min()
}

/// Area of one element layer around the support: number of element edges
/// separating supported from unsupported cells, times one element area.
pub fn support_layer_area(field: &ScalarField, theta: f64) -> f64 {
    let mesh = field.mesh();
    let inside = support_elements(field, theta);
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let at = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && inside[j as usize * nx + i as usize]
    };
    let mut edges = 0usize;
    for j in 0..ny as isize {
        for i in 0..nx as isize {
            if !at(i, j) {
                continue;
            }
            edges += [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                .iter()
                .filter(|&&(a, b)| !at(a, b))
                .count();
        }
    }
    edges as f64 * mesh.element_area()
}

/// `(1, u_h)`: the consistent-mass integral of the field.
pub fn total_mass(field: &ScalarField) -> f64 {
    let mesh = field.mesh();
    let u = field.values();
    let quarter = 0.25 * mesh.element_area();
    (0..mesh.n_elements())
        .map(|e| mesh.element_nodes(e).iter().map(|&k| u[k]).sum::<f64>() * quarter)
        .sum()
}

/// Mass-weighted L2 norm and maximum nodal value of `a - b`.
pub fn compare_fields(a: &ScalarField, b: &ScalarField) -> Result<(f64, f64)> {
    if !a.same_mesh(b) {
        return Err(Error::InvalidArgument("fields live on different meshes".into()));
    }
    let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let linf = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((mass_norm(a.mesh(), &diff), linf))
}

/// `sqrt(e^T M e)` evaluated element by element.
pub fn mass_norm(mesh: &MeshGrid, e: &[f64]) -> f64 {
    // Element mass matrix is (area/36) [[4,2,1,2],[2,4,2,1],[1,2,4,2],[2,1,2,4]].
    const W: [[f64; 4]; 4] = [
        [4.0, 2.0, 1.0, 2.0],
        [2.0, 4.0, 2.0, 1.0],
        [1.0, 2.0, 4.0, 2.0],
        [2.0, 1.0, 2.0, 4.0],
    ];
    let scale = mesh.element_area() / 36.0;
    let mut sum = 0.0;
    for el in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(el);
        for a in 0..4 {
            for b in 0..4 {
                sum += W[a][b] * e[nodes[a]] * e[nodes[b]];
            }
        }
    }
    (sum * scale).max(0.0).sqrt()
}

/// Source-type self-similar solution of `d_t u = div(kappa u grad u)` in 2D:
/// `u = t^{-1/2} (C - |x|^2 / (8 kappa sqrt t))_+`, with `x` relative to
/// the source point. Its mass `4 pi kappa C^2` is constant in time.
pub fn barenblatt(x: [f64; 2], t: f64, profile: f64, kappa: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("barenblatt needs t > 0, got {t}")));
    }
    if !(profile > 0.0) || !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "barenblatt needs C > 0 and kappa > 0, got C={profile}, kappa={kappa}"
        )));
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    Ok((profile - r2 / (8.0 * kappa * t.sqrt())).max(0.0) / t.sqrt())
}

/// Radius of the Barenblatt support at time `t`.
pub fn barenblatt_radius(t: f64, profile: f64, kappa: f64) -> f64 {
    (8.0 * kappa * profile * t.sqrt()).sqrt()
}

pub fn barenblatt_mass(profile: f64, kappa: f64) -> f64 {
    4.0 * PI * kappa * profile * profile
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Outermost crossing of `theta` along the grid line nearest to
/// `coordinate` (transverse to `axis`), linearly interpolated between
/// nodes. Returns the domain minimum along `axis` when the trace never
/// exceeds `theta`.
pub fn front_position(field: &ScalarField, theta: f64, axis: Axis, coordinate: f64) -> f64 {
    let mesh = field.mesh();
    let dom = mesh.domain();
    let u = field.values();
    let (n_along, lo, h, t_lo, t_h, n_trans) = match axis {
        Axis::X => (mesh.nx(), dom.min[0], mesh.hx(), dom.min[1], mesh.hy(), mesh.ny()),
        Axis::Y => (mesh.ny(), dom.min[1], mesh.hy(), dom.min[0], mesh.hx(), mesh.nx()),
    };
    let line = (((coordinate - t_lo) / t_h).round().max(0.0) as usize).min(n_trans);
    let value = |s: usize| match axis {
        Axis::X => u[mesh.node_index(s, line)],
        Axis::Y => u[mesh.node_index(line, s)],
    };
    for s in (0..=n_along).rev() {
        let v = value(s);
        if v > theta {
            if s == n_along {
                return lo + s as f64 * h;
            }
            let w = value(s + 1);
            let frac = (v - theta) / (v - w);
            return lo + (s as f64 + frac) * h;
        }
    }
    lo
}
