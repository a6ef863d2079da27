use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    /// S_z eigenvalue, ±½.
    pub fn projection(self) -> f64 {
        match self {
            Spin::Down => -0.5,
            Spin::Up => 0.5,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Down => Spin::Up,
            Spin::Up => Spin::Down,
        }
    }

    /// Basis indices `(|+,s⟩, |−,s⟩)` of this spin sector.
    pub fn orbital_indices(self) -> (usize, usize) {
        match self {
            Spin::Down => (0, 2),
            Spin::Up => (3, 1),
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Down => "down",
            Spin::Up => "up",
        })
    }
}

/// Spin-orbit branch of a ground eigenstate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Lower => "lower",
            Branch::Upper => "upper",
        })
    }
}

/// Eigen-decomposition of the ground Hamiltonian. Column `k` of `states`
/// belongs to `energies[k]`; energies are ascending.
#[derive(Clone, Debug)]
pub struct GroundEigensystem {
    pub energies: [f64; 4],
    pub states: Matrix4<Complex64>,
    pub branches: [Branch; 4],
    pub spins: [Spin; 4],
}

impl GroundEigensystem {
    pub fn state(&self, k: usize) -> Vector4<Complex64> {
        self.states.column(k).into_owned()
    }

    /// Index of the eigenstate with the given labels.
    pub fn find(&self, spin: Spin, branch: Branch) -> usize {
        (0..4)
            .find(|&k| self.spins[k] == spin && self.branches[k] == branch)
            .expect("every (spin, branch) pair is assigned exactly once")
    }

    /// ‖V†V − 1‖ of the eigenvector matrix.
    pub fn orthonormality_residual(&self) -> f64 {
        (self.states.adjoint() * self.states - Matrix4::identity()).norm()
    }
}

const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn hermitian_residual<const N: usize>(h: &nalgebra::SMatrix<Complex64, N, N>) -> f64 {
    let scale = h.norm().max(f64::MIN_POSITIVE);
    (h - h.adjoint()).norm() / scale
}

/// Diagonalize a Hermitian 4×4 ground Hamiltonian.
///
/// Spin-block-diagonal input (the secular form) is diagonalized block by
/// block, so eigenvectors never mix spin sectors even at degeneracies.
/// Each eigenvector is rotated so its largest component is real-positive.
pub fn diagonalize_ground(h: &Matrix4<Complex64>) -> Result<GroundEigensystem> {
    let residual = hermitian_residual(h);
    if !(residual <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { residual });
    }
    let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let scale = h.norm();
    let cross = [(0, 1), (0, 3), (2, 1), (2, 3)].iter().map(|&(i, j)| h[(i, j)].norm()).fold(0.0, f64::max);

    let mut pairs: Vec<(f64, Vector4<Complex64>)> = Vec::with_capacity(4);
    if cross <= 1e-14 * scale {
        for spin in [Spin::Down, Spin::Up] {
            let (ip, im) = spin.orbital_indices();
            let block = Matrix2::new(h[(ip, ip)], h[(ip, im)], h[(im, ip)], h[(im, im)]);
            let eig = SymmetricEigen::new(block);
            for k in 0..2 {
                let mut v = Vector4::zeros();
                v[ip] = eig.eigenvectors[(0, k)];
                v[im] = eig.eigenvectors[(1, k)];
                pairs.push((eig.eigenvalues[k], v));
            }
        }
    } else {
        let eig = SymmetricEigen::new(h);
        for k in 0..4 {
            pairs.push((eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut energies = [0.0; 4];
    let mut states = Matrix4::zeros();
    for (k, (e, v)) in pairs.iter().enumerate() {
        energies[k] = *e;
        states.set_column(k, &fix_phase(v));
    }

    // Two states with the most ↓ weight are the ↓ states.
    let down_weight = |k: usize| states[(0, k)].norm_sqr() + states[(2, k)].norm_sqr();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| down_weight(b).total_cmp(&down_weight(a)));
    let mut spins = [Spin::Up; 4];
    spins[order[0]] = Spin::Down;
    spins[order[1]] = Spin::Down;

    let mut branches = [Branch::Upper; 4];
    for spin in [Spin::Down, Spin::Up] {
        // energies are ascending, so the first state of a sector is lower
        if let Some(k) = (0..4).find(|&k| spins[k] == spin) {
            branches[k] = Branch::Lower;
        }
    }

    Ok(GroundEigensystem { energies, states, branches, spins })
}

fn fix_phase(v: &Vector4<Complex64>) -> Vector4<Complex64> {
    let norm = v.norm();
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(Complex64::new(1.0, 0.0));
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { Complex64::new(1.0, 0.0) };
    let mut out = v.map(|z| z * phase / norm);
    if let Some(k) = (0..4).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())) {
        out[k] = Complex64::new(v[k].norm() / norm, 0.0);
    }
    out
}
