//! Small-strain constitutive laws for the micro scale.
//!
//! Plane strain is assumed throughout: the out-of-plane total strain is zero
//! while the out-of-plane stress and plastic strain are tracked. Only
//! `sym(h)` enters the laws; the full gradient is accepted so that stresses
//! and tangents live in the same `(11, 12, 21, 22)` layout as `B · u`.

use nalgebra::{Matrix3, Matrix4, Vector4};

/// Relative tolerance on the trial yield function below which a step is elastic.
pub const YIELD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    /// Young's modulus (MPa)
    pub young: f64,
    pub poisson: f64,
}

impl ElasticParams {
    pub fn new(young: f64, poisson: f64) -> Self {
        Self { young, poisson }
    }

    pub fn is_valid(&self) -> bool {
        self.young > 0.0 && self.poisson > -1.0 && self.poisson < 0.5
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.young / (3.0 * (1.0 - 2.0 * self.poisson))
    }

    pub fn lame_lambda(&self) -> f64 {
        self.young * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson))
    }

    /// Plane-strain stiffness in the 4-component gradient layout.
    pub fn plane_strain_tangent(&self) -> Matrix4<f64> {
        isotropic_tangent(self.bulk_modulus(), self.shear_modulus(), 1.0, 0.0, &Matrix3::zeros())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticParams {
    pub elastic: ElasticParams,
    /// Initial yield stress σ₀ (MPa)
    pub yield_stress: f64,
    /// Linear isotropic hardening modulus h (MPa)
    pub hardening: f64,
}

impl PlasticParams {
    pub fn is_valid(&self) -> bool {
        self.elastic.is_valid() && self.yield_stress > 0.0 && self.hardening >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Elastic(ElasticParams),
    /// von Mises plasticity with linear isotropic hardening.
    Plastic(PlasticParams),
}

/// Internal variables of one integration point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MaterialState {
    /// Plastic strain `(xx, yy, zz, xy)`; traceless.
    pub eps_p: [f64; 4],
    /// Accumulated equivalent plastic strain.
    pub alpha_bar: f64,
}

impl MaterialState {
    fn plastic_tensor(&self) -> Matrix3<f64> {
        let [xx, yy, zz, xy] = self.eps_p;
        Matrix3::new(xx, xy, 0.0, xy, yy, 0.0, 0.0, 0.0, zz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressResult {
    /// In-plane stress `(σ11, σ12, σ21, σ22)` (MPa).
    pub sigma: Vector4<f64>,
    /// Out-of-plane stress σ33 (MPa).
    pub sigma_zz: f64,
    /// `dσ/dh` in the gradient layout (MPa).
    pub tangent: Matrix4<f64>,
    pub new_state: MaterialState,
    pub plastic_active: bool,
}

impl Material {
    pub fn elastic(&self) -> &ElasticParams {
        match self {
            Material::Elastic(e) => e,
            Material::Plastic(p) => &p.elastic,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Material::Elastic(e) => e.is_valid(),
            Material::Plastic(p) => p.is_valid(),
        }
    }

    /// Backward-Euler radial return from `state` for the total gradient `h`.
    ///
    /// Pure: `state` is not modified, the updated internal variables are
    /// returned in `new_state`.
    pub fn evaluate(&self, h: &Vector4<f64>, state: &MaterialState) -> StressResult {
        let el = self.elastic();
        let bulk = el.bulk_modulus();
        let shear = el.shear_modulus();

        let eps_12 = 0.5 * (h[1] + h[2]);
        let eps = Matrix3::new(h[0], eps_12, 0.0, eps_12, h[3], 0.0, 0.0, 0.0, 0.0);
        let eps_e = eps - state.plastic_tensor();
        let pressure = bulk * eps.trace();
        let s_trial = 2.0 * shear * deviator(&eps_e);
        let s_norm = s_trial.norm();
        let q_trial = (1.5_f64).sqrt() * s_norm;

        let plastic = match self {
            Material::Plastic(p) => {
                let f = q_trial - (p.yield_stress + p.hardening * state.alpha_bar);
                (f > YIELD_TOLERANCE * p.yield_stress).then_some((p, f))
            }
            Material::Elastic(_) => None,
        };

        let (s, tangent, new_state) = match plastic {
            None => (
                s_trial,
                isotropic_tangent(bulk, shear, 1.0, 0.0, &Matrix3::zeros()),
                *state,
            ),
            Some((p, f)) => {
                let dgamma = f / (3.0 * shear + p.hardening);
                let n = s_trial / s_norm;
                let s = (1.0 - 3.0 * shear * dgamma / q_trial) * s_trial;
                let flow = (1.5_f64).sqrt() * dgamma * n;
                let mut new_state = *state;
                new_state.eps_p[0] += flow[(0, 0)];
                new_state.eps_p[1] += flow[(1, 1)];
                new_state.eps_p[2] += flow[(2, 2)];
                new_state.eps_p[3] += flow[(0, 1)];
                new_state.alpha_bar += dgamma;
                let dev_scale = 1.0 - 3.0 * shear * dgamma / q_trial;
                let nn_scale = 6.0 * shear * shear * (dgamma / q_trial - 1.0 / (3.0 * shear + p.hardening));
                (s, isotropic_tangent(bulk, shear, dev_scale, nn_scale, &n), new_state)
            }
        };

        let sigma3 = s + pressure * Matrix3::identity();
        StressResult {
            sigma: Vector4::new(sigma3[(0, 0)], sigma3[(0, 1)], sigma3[(1, 0)], sigma3[(1, 1)]),
            sigma_zz: sigma3[(2, 2)],
            tangent,
            new_state,
            plastic_active: plastic.is_some(),
        }
    }
}

/// von Mises equivalent stress from in-plane stress and σ33.
pub fn von_mises(sigma: &Vector4<f64>, sigma_zz: f64) -> f64 {
    let s3 = Matrix3::new(sigma[0], sigma[1], 0.0, sigma[2], sigma[3], 0.0, 0.0, 0.0, sigma_zz);
    (1.5_f64).sqrt() * deviator(&s3).norm()
}

fn deviator(m: &Matrix3<f64>) -> Matrix3<f64> {
    m - Matrix3::identity() * (m.trace() / 3.0)
}

/// `K 1⊗1 + 2G a (I_sym - 1/3 1⊗1) + b N⊗N`, restricted to in-plane indices.
fn isotropic_tangent(bulk: f64, shear: f64, a: f64, b: f64, n: &Matrix3<f64>) -> Matrix4<f64> {
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Matrix4::from_fn(|r, c| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (c / 2, c % 2);
        let isym = 0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
        bulk * delta(i, j) * delta(k, l)
            + 2.0 * shear * a * (isym - delta(i, j) * delta(k, l) / 3.0)
            + b * n[(i, j)] * n[(k, l)]
    })
}

/// Largest relative deviation between the returned tangent and a central
/// finite difference of σ, over all 16 entries.
pub fn tangent_check(material: &Material, h: &Vector4<f64>, state: &MaterialState) -> f64 {
    let step = 1e-7 * h.norm().max(1.0);
    let analytic = material.evaluate(h, state).tangent;
    let mut numeric = Matrix4::zeros();
    for c in 0..4 {
        let mut hp = *h;
        let mut hm = *h;
        hp[c] += step;
        hm[c] -= step;
        let dp = material.evaluate(&hp, state).sigma;
        let dm = material.evaluate(&hm, state).sigma;
        numeric.set_column(c, &((dp - dm) / (2.0 * step)));
    }
    let scale = analytic.amax().max(f64::MIN_POSITIVE);
    (numeric - analytic).amax() / scale
}
