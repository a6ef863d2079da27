use super::system::{DensityMatrix, Generator, Mat7};
use super::{LindbladConfig, PulseShape, EXCITED_DOWN, MINUS_DOWN, PLUS_DOWN};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Null vector of the Liouvillian restricted to `levels`, normalized to
/// unit trace, by replacing one equation with the trace condition.
pub(crate) fn null_state(gen: &Generator, levels: &[usize], p_nw: f64) -> Result<DMatrix<Complex64>> {
    let n = levels.len();
    let mut l = gen.liouvillian(levels, p_nw);
    let mut rhs = DVector::<Complex64>::zeros(n * n);
    for j in 0..n * n {
        l[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..n {
        l[(0, k + k * n)] = Complex64::new(1.0, 0.0);
    }
    rhs[0] = Complex64::new(1.0, 0.0);
    let x = l.lu().solve(&rhs).ok_or_else(|| Error::Invariant("Liouvillian steady state is not unique".into()))?;
    let rho = DMatrix::from_fn(n, n, |i, j| x[i + j * n]);
    Ok((&rho + rho.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Steady state under constant drive power `p_nw` and detuning `delta_mhz`.
pub fn steady_state(cfg: &LindbladConfig, p_nw: f64, delta_mhz: f64) -> Result<DensityMatrix> {
    cfg.validate()?;
    let cw = LindbladConfig { pulse: PulseShape::constant(p_nw), ..cfg.clone() };
    let gen = Generator::new(&cw, delta_mhz);
    let levels: Vec<usize> = (0..cfg.dim()).collect();
    let rho = null_state(&gen, &levels, p_nw)?;
    let mut m = Mat7::zeros();
    for i in 0..cfg.dim() {
        for j in 0..cfg.dim() {
            m[(i, j)] = rho[(i, j)];
        }
    }
    Ok(DensityMatrix::from_parts(cfg.dim(), m))
}

/// Steady-state excited population of the driven ↓ cycle
/// `{+,↓; −,↓; 0,↓}` on resonance, with every channel leaving that
/// subspace (spin flips, excited spin mixing, recharging) removed.
pub fn cycling_excited_population(cfg: &LindbladConfig, p_nw: f64) -> Result<f64> {
    if !(p_nw >= 0.0) {
        return Err(Error::invalid("power", "must be >= 0"));
    }
    cfg.validate()?;
    let cw = LindbladConfig { pulse: PulseShape::constant(p_nw), recharge: None, ..cfg.clone() };
    let gen = Generator::new(&cw, 0.0);
    let rho = null_state(&gen, &[PLUS_DOWN, MINUS_DOWN, EXCITED_DOWN], p_nw)?;
    Ok(rho[(2, 2)].re)
}
