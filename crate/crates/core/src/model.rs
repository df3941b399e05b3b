//! Physical model: parameters, the concentration-dependent diffusion
//! coefficient `D(c) = d (1 - gamma c)`, the affine maps between the
//! concentration `c` and the porous-medium variable `chat`, and the
//! perikinetic coagulation rate.

use std::fmt;
use std::str::FromStr;

use crate::assembly::assemble_stiffness_with;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mesh::MeshGrid;

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Avogadro constant, 1/mol (exact SI value).
pub const AVOGADRO: f64 = 6.02214076e23;
pub const ROOM_TEMPERATURE: f64 = 298.15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Fickian diffusivity `d` [m^2/s].
    pub d: f64,
    /// Cohesion coefficient `a` [N m^4 / mol^2].
    pub a: f64,
    /// Temperature [K].
    pub temperature: f64,
    pub k_b: f64,
    pub n_a: f64,
}

impl ModelParams {
    pub fn new(d: f64, a: f64, temperature: f64, k_b: f64, n_a: f64) -> Result<Self> {
        let p = Self {
            d,
            a,
            temperature,
            k_b,
            n_a,
        };
        p.validate()?;
        Ok(p)
    }

    /// Chooses `a = N_A k_b T / (2 c*)` so that `D(c) < 0` exactly when
    /// `c > c*`.
    pub fn from_saturation(d: f64, c_star: f64, temperature: f64, k_b: f64, n_a: f64) -> Result<Self> {
        if !(c_star > 0.0) {
            return Err(Error::InvalidArgument(format!("c* must be positive, got {c_star}")));
        }
        let a = n_a * k_b * temperature / (2.0 * c_star);
        Self::new(d, a, temperature, k_b, n_a)
    }

    /// `d = 1`, `a = N_A k_b T / 2`, hence `gamma = c* = 1`.
    pub fn unit_saturation() -> Self {
        Self::from_saturation(1.0, 1.0, ROOM_TEMPERATURE, BOLTZMANN, AVOGADRO).expect("constants are positive")
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("d", self.d),
            ("a", self.a),
            ("temperature", self.temperature),
            ("k_b", self.k_b),
            ("n_a", self.n_a),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn thermal(&self) -> f64 {
        self.n_a * self.k_b * self.temperature
    }

    /// `gamma = 2a / (N_A k_b T)` [m^3/mol].
    pub fn gamma(&self) -> f64 {
        2.0 * self.a / self.thermal()
    }

    /// Saturation concentration `c* = 1 / gamma` [mol/m^3].
    pub fn c_star(&self) -> f64 {
        self.thermal() / (2.0 * self.a)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::unit_saturation()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoefficientLaw {
    /// `D(c) = d (1 - gamma c)`.
    VdwNonlinear(ModelParams),
    /// Constant diffusivity; the non-interacting reference model.
    HeatConstant { d: f64 },
}

impl CoefficientLaw {
    pub fn diffusion_coefficient(&self, c: f64) -> f64 {
        match *self {
            CoefficientLaw::VdwNonlinear(p) => p.d * (1.0 - p.gamma() * c),
            CoefficientLaw::HeatConstant { d } => d,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CoefficientLaw::HeatConstant { .. })
    }
}

pub fn diffusion_coefficient(law: &CoefficientLaw, c: f64) -> f64 {
    law.diffusion_coefficient(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `D(c) >= 0`: Fickian spreading dominates.
    Spreading,
    /// `D(c) < 0`: cohesion dominates, particles aggregate.
    Coagulation,
}

pub fn classify(params: &ModelParams, c: f64) -> Regime {
    if CoefficientLaw::VdwNonlinear(*params).diffusion_coefficient(c) < 0.0 {
        Regime::Coagulation
    } else {
        Regime::Spreading
    }
}

/// Affine map between `c` and the porous-medium variable `chat`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Transform {
    /// `chat = 1 - c`, paired with `kappa = 1`.
    #[default]
    Simplified,
    /// `chat = (d/2)(1 - gamma c)`, paired with `kappa = 2`.
    General,
}

impl Transform {
    /// Coefficient factor in `d_t chat = div(kappa chat grad chat)`.
    pub fn kappa(&self) -> f64 {
        match self {
            Transform::Simplified => 1.0,
            Transform::General => 2.0,
        }
    }
}

impl FromStr for Transform {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simplified" => Ok(Transform::Simplified),
            "general" => Ok(Transform::General),
            other => Err(format!("unknown transform '{other}' (expected simplified or general)")),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Simplified => "simplified",
            Transform::General => "general",
        })
    }
}

pub fn to_hat(c: f64, params: &ModelParams, transform: Transform) -> f64 {
    match transform {
        Transform::Simplified => 1.0 - c,
        Transform::General => 0.5 * params.d * (1.0 - params.gamma() * c),
    }
}

pub fn from_hat(chat: f64, params: &ModelParams, transform: Transform) -> f64 {
    match transform {
        Transform::Simplified => 1.0 - chat,
        Transform::General => (1.0 - 2.0 * chat / params.d) / params.gamma(),
    }
}

pub fn field_to_hat(c: &ScalarField, params: &ModelParams, transform: Transform) -> ScalarField {
    c.map(|v| to_hat(v, params, transform))
}

pub fn field_from_hat(chat: &ScalarField, params: &ModelParams, transform: Transform) -> ScalarField {
    chat.map(|v| from_hat(v, params, transform))
}

/// `Phi(c) = d c - d (a / (N_A k_b T)) c^2`, so that `grad Phi(c) = D(c) grad c`.
pub fn phi(c: f64, params: &ModelParams) -> f64 {
    params.d * c - params.d * 0.5 * params.gamma() * c * c
}

pub fn phi_prime(c: f64, params: &ModelParams) -> f64 {
    params.d * (1.0 - params.gamma() * c)
}

/// Weak form of the perikinetic rate `R_p = -2 alpha d div(c grad c)`
/// tested against each basis function: `r_i = 2 alpha d (c grad c, grad phi_i)`.
///
/// Diagnostic only: the solver never adds this term separately because it is
/// already part of the nonlinear flux.
pub fn perikinetic_rate(c: &ScalarField, alpha: f64, d: f64, mesh: &MeshGrid) -> Result<ScalarField> {
    let a = assemble_stiffness_with(mesh, c, |w| w)?;
    let scale = 2.0 * alpha * d;
    let r = a.mul_vec(c.values()).into_iter().map(|v| scale * v).collect();
    ScalarField::new(c.mesh().clone(), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn unit_saturation_is_exact() {
        let p = ModelParams::unit_saturation();
        assert_eq!(p.gamma(), 1.0);
        assert_eq!(p.c_star(), 1.0);
        assert_eq!(p.gamma() * p.c_star(), 1.0);
    }

    #[test]
    fn coefficient_values() {
        let law = CoefficientLaw::VdwNonlinear(ModelParams::unit_saturation());
        assert_eq!(law.diffusion_coefficient(0.0), 1.0);
        assert_eq!(law.diffusion_coefficient(1.0), 0.0);
        assert_eq!(law.diffusion_coefficient(1.5), -0.5);
        assert_eq!(CoefficientLaw::HeatConstant { d: 2.0 }.diffusion_coefficient(7.0), 2.0);
    }

    #[test]
    fn rejects_nonpositive_constants() {
        assert!(ModelParams::new(0.0, 1.0, 300.0, BOLTZMANN, AVOGADRO).is_err());
        assert!(ModelParams::new(1.0, -1.0, 300.0, BOLTZMANN, AVOGADRO).is_err());
        assert!(ModelParams::from_saturation(1.0, 0.0, 300.0, BOLTZMANN, AVOGADRO).is_err());
    }

    #[test]
    fn transforms() {
        let p = ModelParams::unit_saturation();
        assert_eq!(to_hat(0.0, &p, Transform::Simplified), 1.0);
        assert_eq!(to_hat(1.0, &p, Transform::Simplified), 0.0);
        assert_eq!(to_hat(0.0, &p, Transform::General), 0.5);
        assert_eq!(from_hat(0.5, &p, Transform::General), 0.0);
        assert_eq!(Transform::Simplified.kappa(), 1.0);
        assert_eq!(Transform::General.kappa(), 2.0);
    }

    #[test]
    fn phi_values() {
        let p = ModelParams::unit_saturation();
        assert_eq!(phi(0.0, &p), 0.0);
        assert_eq!(phi(1.0, &p), 0.5);
        for i in 0..=100 {
            let c = i as f64 / 100.0 * p.c_star();
            assert!(phi_prime(c, &p) >= 0.0);
        }
    }

    #[test]
    fn perikinetic_rate_cases() {
        let mesh = Arc::new(MeshGrid::new(Rect::new([0.0, 0.0], [1.0, 2.0]), 4, 8).unwrap());
        let konst = ScalarField::constant(Arc::clone(&mesh), 0.7);
        let r = perikinetic_rate(&konst, 0.5, 1.0, &mesh).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-14));

        // c = x: (x e1, grad phi_i) = -(1, phi_i) = -h^2 on interior nodes.
        let lin = ScalarField::interpolate(Arc::clone(&mesh), |p| p[0]);
        let (alpha, d) = (0.3, 2.0);
        let r = perikinetic_rate(&lin, alpha, d, &mesh).unwrap();
        let h2 = mesh.element_area();
        for k in 0..mesh.n_nodes() {
            if !mesh.is_boundary(k) {
                assert!((r.values()[k] + 2.0 * alpha * d * h2).abs() < 1e-13);
            }
        }
        let r0 = perikinetic_rate(&lin, 0.0, d, &mesh).unwrap();
        assert!(r0.values().iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn round_trip(c in -10.0f64..10.0, d in 0.1f64..5.0, cs in 0.1f64..5.0) {
            let p = ModelParams::from_saturation(d, cs, 300.0, BOLTZMANN, AVOGADRO).unwrap();
            for t in [Transform::Simplified, Transform::General] {
                let back = from_hat(to_hat(c, &p, t), &p, t);
                prop_assert!((back - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }

        #[test]
        fn phi_prime_is_d(c in -5.0f64..5.0, d in 0.1f64..5.0, cs in 0.1f64..5.0) {
            let p = ModelParams::from_saturation(d, cs, 300.0, BOLTZMANN, AVOGADRO).unwrap();
            let law = CoefficientLaw::VdwNonlinear(p);
            prop_assert_eq!(phi_prime(c, &p), law.diffusion_coefficient(c));
            let h = 1e-5;
            let fd = (phi(c + h, &p) - phi(c - h, &p)) / (2.0 * h);
            prop_assert!((fd - phi_prime(c, &p)).abs() < 1e-6 * (1.0 + fd.abs()));
        }

        #[test]
        fn regime_matches_saturation(c in 0.0f64..4.0, cs in 0.1f64..3.0) {
            let p = ModelParams::from_saturation(1.0, cs, 300.0, BOLTZMANN, AVOGADRO).unwrap();
            prop_assert_eq!(classify(&p, c) == Regime::Coagulation, c > p.c_star());
        }

        #[test]
        fn nonneg_chat_iff_below_saturation(c in 0.0f64..4.0, cs in 0.1f64..3.0) {
            let p = ModelParams::from_saturation(1.0, cs, 300.0, BOLTZMANN, AVOGADRO).unwrap();
            prop_assert_eq!(to_hat(c, &p, Transform::General) >= 0.0, c <= p.c_star());
        }

        #[test]
        fn saturation_product(cs in 0.01f64..100.0) {
            let p = ModelParams::from_saturation(1.0, cs, 300.0, BOLTZMANN, AVOGADRO).unwrap();
            prop_assert!((p.gamma() * p.c_star() - 1.0).abs() < 1e-15);
        }
    }
}
