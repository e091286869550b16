//! Physical constants in the (meV, nm, ps, e) unit system.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant in meV·ps.
pub const HBAR: f64 = 0.658_211_956_9;

/// Free-electron mass in meV·ps²/nm² (m_e c² / c²).
pub const ELECTRON_MASS: f64 = 510_998_950.0 / (299_792.458 * 299_792.458);

/// e²/(4π ε₀) in meV·nm.
pub const COULOMB_VACUUM: f64 = 1_439.964_548;

/// Material parameters. Everything downstream asks this struct for ħ, m and
/// e²/(4πε) so that no module hard-codes a conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitSystem {
    /// ħ in meV·ps.
    pub hbar: f64,
    /// Effective mass as a fraction of the free-electron mass.
    pub effective_mass: f64,
    /// Carrier charge in units of e.
    pub charge: f64,
    pub relative_permittivity: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::gaas()
    }
}

impl UnitSystem {
    /// GaAs: m* = 0.067 m_e, ε_r = 13.1.
    pub fn gaas() -> Self {
        Self { hbar: HBAR, effective_mass: 0.067, charge: 1.0, relative_permittivity: 13.1 }
    }

    /// Effective mass in meV·ps²/nm².
    pub fn mass(&self) -> f64 {
        self.effective_mass * ELECTRON_MASS
    }

    /// ħ²/m in meV·nm².
    pub fn hbar2_over_mass(&self) -> f64 {
        self.hbar * self.hbar / self.mass()
    }

    /// e²/(4πε) in meV·nm.
    pub fn coulomb_prefactor(&self) -> f64 {
        self.charge * self.charge * COULOMB_VACUUM / self.relative_permittivity
    }

    /// Absolute permittivity in units of e²/(meV·nm).
    pub fn permittivity(&self) -> f64 {
        self.relative_permittivity / (4.0 * std::f64::consts::PI * COULOMB_VACUUM)
    }

    pub fn is_valid(&self) -> bool {
        self.hbar > 0.0 && self.effective_mass > 0.0 && self.relative_permittivity > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinetic_scale_matches_textbook_value() {
        // ħ²/2m_e = 38.0998 meV·nm²
        let free = UnitSystem { effective_mass: 1.0, ..UnitSystem::gaas() };
        assert!((free.hbar2_over_mass() / 2.0 - 38.0998).abs() < 1e-3);
    }

    #[test]
    fn gaas_coulomb_prefactor() {
        let u = UnitSystem::gaas();
        assert!((u.coulomb_prefactor() - 109.921).abs() < 1e-2);
        let k = u.charge.powi(2) / (4.0 * std::f64::consts::PI * u.permittivity());
        assert!((k - u.coulomb_prefactor()).abs() < 1e-9);
    }
}
