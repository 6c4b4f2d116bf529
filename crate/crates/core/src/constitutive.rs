//! Plane-strain elasticity, hygroscopic eigenstrain, the volumetric-deviatoric
//! energy split, stress degradation and the history variable.

use crate::error::{Error, Result};
use crate::materials::{ElasticParams, HygroParams};

/// Default conditioning floor of the degradation function.
pub const KAPPA: f64 = 1e-7;

/// Symmetric in-plane tensor (tensor shear component, not engineering).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    /// Voigt vector with engineering shear `[xx, yy, 2xy]`.
    pub fn voigt_strain(self) -> [f64; 3] {
        [self.xx, self.yy, 2.0 * self.xy]
    }

    pub fn from_voigt_stress(s: [f64; 3]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.xx, k * self.yy, k * self.xy)
    }

    pub fn sub(self, o: Sym2) -> Self {
        Self::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }

    pub fn max_abs(self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.xy.abs())
    }
}

pub type Voigt3 = [[f64; 3]; 3];

/// Engineering-strain rotation: material strain = `T * global strain` for a
/// material 1-axis at `theta_deg` from x.
fn strain_rotation(theta_deg: f64) -> Voigt3 {
    let t = theta_deg.to_radians();
    let (c, s) = (t.cos(), t.sin());
    [
        [c * c, s * s, c * s],
        [s * s, c * c, -c * s],
        [-2.0 * c * s, 2.0 * c * s, c * c - s * s],
    ]
}

/// Plane-strain Voigt stiffness (engineering shear) in the global frame.
pub fn plane_strain_stiffness(p: &ElasticParams, theta_deg: f64) -> Result<Voigt3> {
    p.validate()?;
    // 3D compliance entries with axis 3 out of plane
    let s11 = 1.0 / p.e11;
    let s22 = 1.0 / p.e22;
    let s33 = s22;
    let s12 = -p.nu12 / p.e11;
    let s13 = s12;
    let s23 = -p.nu23 / p.e22;
    // eps33 = 0 eliminates sigma33
    let r11 = s11 - s13 * s13 / s33;
    let r22 = s22 - s23 * s23 / s33;
    let r12 = s12 - s13 * s23 / s33;
    let det = r11 * r22 - r12 * r12;
    if !(det > 0.0) || !(r11 > 0.0) {
        return Err(Error::Parameter(format!(
            "plane-strain stiffness is not positive definite for {p:?}"
        )));
    }
    let cm = [
        [r22 / det, -r12 / det, 0.0],
        [-r12 / det, r11 / det, 0.0],
        [0.0, 0.0, p.shear_modulus()],
    ];
    let t = strain_rotation(theta_deg);
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    v += t[k][i] * cm[k][l] * t[l][j];
                }
            }
            c[i][j] = v;
        }
    }
    // restore exact symmetry lost to rounding
    for i in 0..3 {
        for j in 0..i {
            let m = 0.5 * (c[i][j] + c[j][i]);
            c[i][j] = m;
            c[j][i] = m;
        }
    }
    Ok(c)
}

/// `diag(alpha11, alpha22) (C - C0)` rotated from the material frame.
pub fn hygroscopic_strain(c: f64, c0: f64, h: &HygroParams, theta_deg: f64) -> Sym2 {
    let dc = c - c0;
    let t = theta_deg.to_radians();
    let (cs, sn) = (t.cos(), t.sin());
    let (a1, a2) = (h.alpha11 * dc, h.alpha22 * dc);
    Sym2::new(
        a1 * cs * cs + a2 * sn * sn,
        a1 * sn * sn + a2 * cs * cs,
        (a1 - a2) * cs * sn,
    )
}

/// Elastic law of one material point: stiffness plus what the split needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticLaw {
    pub c: Voigt3,
    pub lambda: f64,
    pub mu: f64,
    pub isotropic: bool,
}

impl ElasticLaw {
    pub fn new(p: &ElasticParams, theta_deg: f64) -> Result<Self> {
        let (lambda, mu) = p.lame();
        Ok(Self {
            c: plane_strain_stiffness(p, theta_deg)?,
            lambda,
            mu,
            isotropic: p.is_isotropic(),
        })
    }

    /// Undegraded stress `C : eps`.
    pub fn stress(&self, eps: Sym2) -> Sym2 {
        let v = eps.voigt_strain();
        let mut s = [0.0; 3];
        for i in 0..3 {
            s[i] = self.c[i][0] * v[0] + self.c[i][1] * v[1] + self.c[i][2] * v[2];
        }
        Sym2::from_voigt_stress(s)
    }

    /// `1/2 eps : C : eps`
    pub fn energy(&self, eps: Sym2) -> f64 {
        let s = self.stress(eps);
        0.5 * (s.xx * eps.xx + s.yy * eps.yy + 2.0 * s.xy * eps.xy)
    }

    /// Tensile and compressive energy parts `(psi_plus, psi_minus)`.
    pub fn split_energy(&self, eps: Sym2) -> (f64, f64) {
        let tr = eps.xx + eps.yy;
        let neg = tr.min(0.0);
        let psi_minus = 0.5 * self.lambda * neg * neg;
        if self.isotropic {
            let pos = tr.max(0.0);
            (0.5 * self.lambda * pos * pos + self.mu * deviatoric_square(eps), psi_minus)
        } else {
            ((self.energy(eps) - psi_minus).max(0.0), psi_minus)
        }
    }
}

/// `e' : e'` of the 3D deviator with zero out-of-plane strain.
pub fn deviatoric_square(eps: Sym2) -> f64 {
    let m = (eps.xx + eps.yy) / 3.0;
    (eps.xx - m).powi(2) + (eps.yy - m).powi(2) + m * m + 2.0 * eps.xy * eps.xy
}

/// `(1 - phi)^2 + kappa`
pub fn degradation(phi: f64, kappa: f64) -> f64 {
    (1.0 - phi).powi(2) + kappa
}

pub fn degraded_stress(sigma0: Sym2, phi: f64, kappa: f64) -> Sym2 {
    sigma0.scale(degradation(phi, kappa))
}

pub fn update_history(h_old: f64, psi_plus: f64) -> f64 {
    h_old.max(psi_plus)
}
