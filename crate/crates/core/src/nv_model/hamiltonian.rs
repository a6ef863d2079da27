use super::{FineStructureParams, Spin};
use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

/// (orbital Lz eigenvalue, spin Sz eigenvalue) of each ground basis state.
pub(crate) const BASIS_QUANTA: [(f64, f64); 4] = [(1.0, -0.5), (-1.0, 0.5), (-1.0, -0.5), (1.0, 0.5)];

/// Ground-state Hamiltonian in MHz, basis `|+,↓⟩, |−,↑⟩, |−,↓⟩, |+,↑⟩`.
///
/// Diagonal: `s·g·μ_B·B_z + o·l·μ_B·B_z + 2λ·o·s`. Strain couples
/// `|+⟩ ↔ |−⟩` with matrix element ε⊥ inside each spin sector.
pub fn build_ground_hamiltonian(p: &FineStructureParams) -> Matrix4<Complex64> {
    let gz = p.spin_zeeman_mhz();
    let lz = p.orbital_zeeman_mhz();
    let lambda = p.lambda_so.mhz();
    let mut h = Matrix4::<Complex64>::zeros();
    for (i, &(o, s)) in BASIS_QUANTA.iter().enumerate() {
        h[(i, i)] = Complex64::new(s * gz + o * lz + 2.0 * lambda * o * s, 0.0);
    }
    let eps = Complex64::new(p.eps_perp.mhz(), 0.0);
    // ↓ sector: |+,↓⟩ (0) ↔ |−,↓⟩ (2); ↑ sector: |+,↑⟩ (3) ↔ |−,↑⟩ (1)
    h[(0, 2)] = eps;
    h[(2, 0)] = eps;
    h[(3, 1)] = eps;
    h[(1, 3)] = eps;
    h
}

/// Excited ²A₂ Hamiltonian in MHz, basis `|0,↓⟩, |0,↑⟩`.
pub fn build_excited_hamiltonian(p: &FineStructureParams) -> Matrix2<f64> {
    let half = 0.5 * p.spin_zeeman_mhz();
    Matrix2::new(-half, 0.0, 0.0, half)
}

/// Closed-form ground energies `s·gμ_B B_z ± √((lμ_B B_z + 2λs)² + ε⊥²)`,
/// sorted ascending.
pub fn closed_form_ground_energies(p: &FineStructureParams) -> [f64; 4] {
    let mut e = [0.0; 4];
    for (k, spin) in [Spin::Down, Spin::Up].into_iter().enumerate() {
        let centre = spin.projection() * p.spin_zeeman_mhz();
        let r = p.radical_mhz(spin);
        e[2 * k] = centre - r;
        e[2 * k + 1] = centre + r;
    }
    e.sort_by(f64::total_cmp);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::Frequency;

    #[test]
    fn spin_orbit_only() {
        let p = FineStructureParams {
            g: 2.0,
            l: 0.0,
            lambda_so: Frequency::from_ghz(1.0),
            eps_perp: Frequency::ZERO,
            b_z_gauss: 0.0,
            mu_b: 1.3996245,
        };
        let h = build_ground_hamiltonian(&p);
        let diag: Vec<f64> = (0..4).map(|i| h[(i, i)].re).collect();
        assert_eq!(diag, vec![-1000.0, -1000.0, 1000.0, 1000.0]);
        assert!(h.iter().enumerate().all(|(k, z)| k % 5 == 0 || z.norm() == 0.0));
    }

    #[test]
    fn traceless_and_hermitian() {
        let p = FineStructureParams::new(0.039, 4.9, 1.9);
        let h = build_ground_hamiltonian(&p);
        assert!(h.trace().norm() < 1e-9);
        assert!((h - h.adjoint()).norm() == 0.0);
    }

    #[test]
    fn excited_splitting() {
        let mut p = FineStructureParams::new(0.0, 1.0, 0.0);
        p.g = 2.0;
        p.mu_b = 1.3996;
        let h = build_excited_hamiltonian(&p);
        assert!((h[(1, 1)] - h[(0, 0)] - 5290.488).abs() < 1e-9);
        assert_eq!(h.trace(), 0.0);
        let h0 = build_excited_hamiltonian(&p.with_field_gauss(0.0));
        assert_eq!(h0, Matrix2::zeros());
    }
}
