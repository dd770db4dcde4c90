//! Numeric tolerances shared by validation and the solver.

/// Tolerances used when checking distributions, generators and solver output.
///
/// `NumericPolicy::default()` carries the values every public entry point uses;
/// the `*_with` variants accept a custom policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// `alpha·1 + mass0 = 1` for phase-type representations.
    pub ph_mass: f64,
    /// `alpha·1 + mass0 = 1` for matrix-exponential representations.
    pub me_mass: f64,
    /// `-g·A^-1·h + mass0 = 1` for matrix-exponential forms.
    pub form_mass: f64,
    /// Lower bound accepted for densities on the nonnegativity screen.
    pub negativity: f64,
    /// Row-sum tolerance for generators, relative to the largest entry of the row.
    pub generator_rows: f64,
    /// Residual allowed in the boundary linear system of the fluid solver.
    pub boundary_residual: f64,
    /// Eigenvalues with `Re λ > -zero_eigenvalue·‖Q·R^-1‖` count as anti-stable.
    pub zero_eigenvalue: f64,
    /// Largest acceptable `‖PᵀP − I‖_max` for the orthogonal reducer.
    pub orthogonality: f64,
    /// Largest acceptable lower-left block of `Pᵀ·Q·R^-1·P`, relative to `‖Q·R^-1‖`.
    pub block_structure: f64,
    /// Reciprocal condition number below which the boundary system is rejected.
    pub min_rcond: f64,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        ph_mass: 1e-12,
        me_mass: 1e-10,
        form_mass: 1e-9,
        negativity: 1e-9,
        generator_rows: 1e-12,
        boundary_residual: 1e-9,
        zero_eigenvalue: 1e-9,
        orthogonality: 1e-12,
        block_structure: 1e-10,
        min_rcond: 1e-13,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}
