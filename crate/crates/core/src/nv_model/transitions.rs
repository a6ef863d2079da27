use super::{
    build_excited_hamiltonian, build_ground_hamiltonian, diagonalize_ground, Branch, FineStructureParams, Polarization,
    Spin, BASIS_LABELS,
};
use crate::units::Frequency;
use crate::{Error, Result};
use nalgebra::Vector4;
use num_complex::Complex64;
use serde::Serialize;

/// One spin-conserving optical line `²E(s, branch) → ²A₂(s)`.
#[derive(Clone, Debug)]
pub struct Transition {
    /// Offset from the ZPL centre, `E_exc(s) − E_ground`.
    pub frequency_offset: Frequency,
    /// Dominant ground basis state, e.g. `+,down`.
    pub ground_state_label: &'static str,
    pub spin: Spin,
    pub branch: Branch,
    pub ground_state: Vector4<Complex64>,
}

impl Transition {
    pub fn amplitude(&self, pol: &Polarization) -> f64 {
        orbital_amplitude(&self.ground_state, self.spin, pol)
    }
}

/// The four spin-conserving transitions, ordered by ascending frequency.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    pub entries: [Transition; 4],
}

impl TransitionTable {
    pub fn get(&self, spin: Spin, branch: Branch) -> &Transition {
        self.entries
            .iter()
            .find(|t| t.spin == spin && t.branch == branch)
            .expect("table holds every (spin, branch) pair")
    }

    pub fn rows(&self) -> Vec<TransitionRow> {
        self.entries
            .iter()
            .map(|t| TransitionRow {
                label: t.ground_state_label.to_string(),
                spin: t.spin.to_string(),
                branch: t.branch.to_string(),
                freq_offset_mhz: t.frequency_offset.mhz(),
                amp_l: t.amplitude(&Polarization::left()),
                amp_r: t.amplitude(&Polarization::right()),
                amp_h: t.amplitude(&Polarization::horizontal()),
                amp_v: t.amplitude(&Polarization::vertical()),
            })
            .collect()
    }
}

/// CSV row of an exported transition table.
#[derive(Clone, Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct TransitionRow {
    pub label: String,
    pub spin: String,
    pub branch: String,
    #[serde(rename = "freq_offset_MHz")]
    pub freq_offset_mhz: f64,
    pub amp_l: f64,
    pub amp_r: f64,
    pub amp_h: f64,
    pub amp_v: f64,
}

pub fn transition_table(p: &FineStructureParams) -> Result<TransitionTable> {
    p.validate()?;
    let eig = diagonalize_ground(&build_ground_hamiltonian(p))?;
    let exc = build_excited_hamiltonian(p);
    let mut entries: Vec<Transition> = (0..4)
        .map(|k| {
            let spin = eig.spins[k];
            let e_exc = match spin {
                Spin::Down => exc[(0, 0)],
                Spin::Up => exc[(1, 1)],
            };
            let v = eig.state(k);
            let dominant = (0..4).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
            Transition {
                frequency_offset: Frequency::from_mhz(e_exc - eig.energies[k]),
                ground_state_label: BASIS_LABELS[dominant],
                spin,
                branch: eig.branches[k],
                ground_state: v,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.frequency_offset.mhz().total_cmp(&b.frequency_offset.mhz()));
    let entries: [Transition; 4] = entries.try_into().expect("four ground states");
    Ok(TransitionTable { entries })
}

fn orbital_amplitude(state: &Vector4<Complex64>, spin: Spin, pol: &Polarization) -> f64 {
    let (ip, im) = spin.orbital_indices();
    (pol.left_component() * state[ip] + pol.right_component() * state[im]).norm_sqr()
}

/// Relative excitation rate `|ε_L·c₊ + ε_R·c₋|²` of a ground eigenvector.
///
/// The spin sector is taken from the vector's support; vectors straddling
/// both sectors are rejected along with unnormalized inputs.
pub fn transition_amplitude(state: &Vector4<Complex64>, pol: &Polarization) -> Result<f64> {
    let deficit = (state.norm() - 1.0).abs().max((pol.jones().norm() - 1.0).abs());
    if deficit > 1e-9 {
        return Err(Error::NotNormalized { deficit });
    }
    let down = state[0].norm_sqr() + state[2].norm_sqr();
    let spin = if down > 1.0 - 1e-9 {
        Spin::Down
    } else if down < 1e-9 {
        Spin::Up
    } else {
        return Err(Error::invalid("state", "ground state must lie in a single spin sector"));
    };
    Ok(orbital_amplitude(state, spin, pol))
}

/// Δ_spin (within a branch) and Δ_spin-orbit (between branch centres).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Splittings {
    pub delta_spin: Frequency,
    pub delta_spin_orbit: Frequency,
}

impl Splittings {
    /// Δ_spin from the lower branch alone.
    pub fn from_table(table: &TransitionTable) -> (Self, f64) {
        let f = |s, b| table.get(s, b).frequency_offset.mhz();
        let lower = (f(Spin::Up, Branch::Lower) - f(Spin::Down, Branch::Lower)).abs();
        let upper = (f(Spin::Up, Branch::Upper) - f(Spin::Down, Branch::Upper)).abs();
        let centre_lower = 0.5 * (f(Spin::Up, Branch::Lower) + f(Spin::Down, Branch::Lower));
        let centre_upper = 0.5 * (f(Spin::Up, Branch::Upper) + f(Spin::Down, Branch::Upper));
        let s = Splittings {
            delta_spin: Frequency::from_mhz(lower),
            delta_spin_orbit: Frequency::from_mhz(centre_lower - centre_upper),
        };
        (s, upper)
    }
}

pub fn splittings(p: &FineStructureParams) -> Result<Splittings> {
    Ok(Splittings::from_table(&transition_table(p)?).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nv_model::FineStructureParams;
    use crate::units::Frequency;

    fn closed_form(p: &FineStructureParams) -> (f64, f64) {
        let lz = p.orbital_zeeman_mhz();
        let lam = p.lambda_so.mhz();
        let e = p.eps_perp.mhz();
        let a = (lam + lz).hypot(e);
        let b = (lam - lz).hypot(e);
        ((a - b).abs(), a + b)
    }

    #[test]
    fn unstrained_no_orbital_zeeman_gives_two_lines() {
        let p = FineStructureParams { l: 0.0, ..FineStructureParams::new(0.0, 4.9, 0.0) };
        let t = transition_table(&p).unwrap();
        let f: Vec<f64> = t.entries.iter().map(|e| e.frequency_offset.mhz()).collect();
        for (got, want) in f.iter().zip([-4900.0, -4900.0, 4900.0, 4900.0]) {
            assert!((got - want).abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn spin_splitting_at_working_field() {
        let p = FineStructureParams::new(0.039, 4.9, 0.0);
        let s = splittings(&p).unwrap();
        // 2·l·μ_B·B_z = 2·0.039·1.3996245·1890
        assert!((s.delta_spin.mhz() - 206.3326).abs() < 1e-3);
        assert!((s.delta_spin_orbit.mhz() - 9800.0).abs() < 1e-6);
    }

    #[test]
    fn splittings_match_closed_form_and_both_branches_agree() {
        for eps in [0.0, 0.5, 1.9, 3.2, 7.2, 15.0] {
            let p = FineStructureParams::new(0.04, 4.5, eps);
            let (s, upper) = Splittings::from_table(&transition_table(&p).unwrap());
            let (ds, dso) = closed_form(&p);
            assert!((s.delta_spin.mhz() - ds).abs() < 1e-8 * dso);
            assert!((s.delta_spin_orbit.mhz() - dso).abs() < 1e-8 * dso);
            assert!((upper - s.delta_spin.mhz()).abs() < 1e-8 * dso);
        }
    }

    #[test]
    fn zero_field_no_spin_splitting() {
        let p = FineStructureParams::new(0.04, 4.5, 2.0).with_field_gauss(0.0);
        assert!(splittings(&p).unwrap().delta_spin.mhz().abs() < 1e-9);
    }

    #[test]
    fn strain_sweeps_are_monotone() {
        let mut last = splittings(&FineStructureParams::new(0.039, 4.9, 0.0)).unwrap();
        for k in 1..=40 {
            let p = FineStructureParams::new(0.039, 4.9, 0.25 * k as f64);
            let s = splittings(&p).unwrap();
            assert!(s.delta_spin.mhz() < last.delta_spin.mhz());
            assert!(s.delta_spin_orbit.mhz() > last.delta_spin_orbit.mhz());
            last = s;
        }
    }

    #[test]
    fn circular_selection_rule_without_strain() {
        let p = FineStructureParams::new(0.039, 4.9, 0.0);
        let t = transition_table(&p).unwrap();
        let plus_down = t.get(Spin::Down, Branch::Lower);
        assert_eq!(plus_down.ground_state_label, "+,down");
        assert!((plus_down.amplitude(&Polarization::left()) - 1.0).abs() < 1e-15);
        assert!(plus_down.amplitude(&Polarization::right()).abs() < 1e-15);
    }

    #[test]
    fn linear_selection_rule_in_strain_limit() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sym = Vector4::new(
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
        );
        let anti = Vector4::new(
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(0.0, 0.0),
        );
        let h = Polarization::horizontal();
        let v = Polarization::vertical();
        assert!((transition_amplitude(&sym, &h).unwrap() - 1.0).abs() < 1e-12);
        assert!(transition_amplitude(&sym, &v).unwrap().abs() < 1e-12);
        assert!(transition_amplitude(&anti, &h).unwrap().abs() < 1e-12);
        assert!((transition_amplitude(&anti, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_rejects_bad_vectors() {
        let v = Vector4::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        assert!(transition_amplitude(&v, &Polarization::left()).is_err());
        let w = v * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(transition_amplitude(&w, &Polarization::left()).is_err());
    }

    #[test]
    fn completeness_per_spin_sector() {
        let p = FineStructureParams { eps_perp: Frequency::from_ghz(2.7), ..Default::default() };
        let t = transition_table(&p).unwrap();
        for k in 0..50 {
            let angle = 0.13 * k as f64;
            for pol in [Polarization::quarter_wave_plate(angle), Polarization::half_wave_plate(angle)] {
                for spin in [Spin::Down, Spin::Up] {
                    let sum = t.get(spin, Branch::Lower).amplitude(&pol) + t.get(spin, Branch::Upper).amplitude(&pol);
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
