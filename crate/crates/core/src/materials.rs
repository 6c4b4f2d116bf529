//! Material data: per-phase elastic, fracture, diffusion and swelling
//! parameters plus the interface values used by the diffuse interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transversely isotropic elastic constants. Axis 1 is the fibre direction,
/// axis 2 the in-plane transverse direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticParams {
    pub e11: f64,
    pub e22: f64,
    pub nu12: f64,
    pub nu23: f64,
    /// In-plane shear modulus; defaults to `E22 / (2 (1 + nu23))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g12: Option<f64>,
}

impl ElasticParams {
    pub fn isotropic(e: f64, nu: f64) -> Self {
        Self {
            e11: e,
            e22: e,
            nu12: nu,
            nu23: nu,
            g12: None,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        self.e11 == self.e22 && self.nu12 == self.nu23 && self.g12.is_none_or(|g| g == self.shear_modulus())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.g12.unwrap_or(self.e22 / (2.0 * (1.0 + self.nu23)))
    }

    /// Lame pair of the isotropic fit to the transverse plane (E22, nu23).
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.e22, self.nu23);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.e11 > 0.0
            && self.e22 > 0.0
            && self.nu23 > -1.0
            && self.nu23 < 0.5
            && self.nu12.is_finite()
            && self.g12.is_none_or(|g| g > 0.0);
        if !ok {
            return Err(Error::Parameter(format!("elastic constants out of range: {self:?}")));
        }
        Ok(())
    }
}

/// Swelling coefficients in the material frame (strain per unit mass fraction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HygroParams {
    pub alpha11: f64,
    pub alpha22: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub elastic: ElasticParams,
    /// Fracture toughness (N/mm).
    pub gc: f64,
    /// Diffusivity (mm^2/s).
    pub diffusivity: f64,
    pub hygro: HygroParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceProps {
    pub gc: f64,
    pub diffusivity: f64,
    /// Isotropic swelling coefficient.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialCatalog {
    pub matrix: Material,
    pub fibre: Material,
    pub interface: InterfaceProps,
}

pub const FLAX_EPOXY: &str = "flax-epoxy";

impl MaterialCatalog {
    /// Epoxy matrix, flax fibre and their interface.
    pub fn flax_epoxy() -> Self {
        Self {
            matrix: Material {
                elastic: ElasticParams::isotropic(3600.0, 0.4),
                gc: 1.2,
                diffusivity: 1.45e-6,
                hygro: HygroParams {
                    alpha11: 0.6,
                    alpha22: 0.6,
                },
            },
            fibre: Material {
                elastic: ElasticParams {
                    e11: 31500.0,
                    e22: 5100.0,
                    nu12: 0.28,
                    nu23: 0.41,
                    g12: None,
                },
                gc: 2.1,
                diffusivity: 1.19e-6,
                hygro: HygroParams {
                    alpha11: 1.06,
                    alpha22: 0.85,
                },
            },
            interface: InterfaceProps {
                gc: 0.213,
                diffusivity: 0.8e-6,
                alpha: 0.1,
            },
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            FLAX_EPOXY => Ok(Self::flax_epoxy()),
            other => Err(Error::Config(format!("unknown material catalog `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("matrix", &self.matrix), ("fibre", &self.fibre)] {
            m.elastic
                .validate()
                .map_err(|e| Error::Parameter(format!("{name}: {e}")))?;
            if !(m.gc > 0.0) {
                return Err(Error::Parameter(format!("{name}.gc must be positive, got {}", m.gc)));
            }
            if !(m.diffusivity > 0.0) {
                return Err(Error::Parameter(format!(
                    "{name}.diffusivity must be positive, got {}",
                    m.diffusivity
                )));
            }
        }
        if !(self.interface.gc > 0.0) || !(self.interface.diffusivity > 0.0) {
            return Err(Error::Parameter(
                "interface gc and diffusivity must be positive".to_string(),
            ));
        }
        Ok(())
    }
}
