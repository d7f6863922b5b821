//! CODATA 2018 values of the constants used throughout the crate.

/// Fixed physical constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Impedance of free space, Ω.
    pub z0: f64,
    /// Speed of light in vacuum, m/s.
    pub c0: f64,
    /// Vacuum permittivity, F/m.
    pub eps0: f64,
    /// Boltzmann constant, J/K.
    pub kb: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    z0: 376.730_313_668,
    c0: 299_792_458.0,
    eps0: 8.854_187_812_8e-12,
    kb: 1.380_649e-23,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA
    }
}

pub const HBAR: f64 = CODATA.hbar;
pub const Z0: f64 = CODATA.z0;
pub const C0: f64 = CODATA.c0;
pub const EPS0: f64 = CODATA.eps0;
pub const KB: f64 = CODATA.kb;
