use num_complex::Complex64;

use tchub::fermion::jordan_wigner;
use tchub::jastrow::{fermi_sea, optimize_j, optimize_j_with_reference, projection_residual, ReferenceDeterminant};
use tchub::lattice::{build_gutzwiller, build_hubbard, build_tc, HubbardParams, Lattice, Representation, Spin};
use tchub::oracle::{exact_ground_state, fidelity, hf_weight_sweep, tc_right_eigenvector, SectorBasis};
use tchub::simulator::expectation;
use tchub::Error;

fn ring(n: usize) -> Lattice {
    Lattice::ring(n).unwrap()
}

fn ground(n: usize, t: f64, u: f64) -> f64 {
    let lat = ring(n);
    let h = jordan_wigner(&build_hubbard(&lat, &HubbardParams::new(t, u, 0.0).unwrap(), Representation::Real));
    exact_ground_state(&h, &SectorBasis::half_filling(&lat).unwrap()).unwrap().energy
}

#[test]
fn exact_energies_of_the_three_rings() {
    for (n, e) in [(2, -2.472), (4, -2.103), (6, -3.669)] {
        let got = ground(n, 1.0, 4.0);
        assert!((got - e).abs() < 5e-4, "N={n}: {got}");
    }
    assert!(ground(2, 0.0, 4.0).abs() < 1e-12);
    assert!((ground(2, 1.0, 0.0) + 4.0).abs() < 1e-12);
}

#[test]
fn projection_roots_match_the_tabulated_values() {
    for (n, want) in [(2, -0.48), (4, -0.88), (6, -0.67)] {
        let r = optimize_j(&ring(n), 1.0, 4.0, (-3.0, 0.0), 1e-6).unwrap();
        assert!((r.j - want).abs() < 0.01, "N={n}: {}", r.j);
        assert!(r.j < 0.0);
    }
}

#[test]
fn residual_vanishes_for_the_free_ground_state() {
    // at U = 0 and J = 0 the Fermi sea is an eigenstate of the unchanged Hamiltonian
    for n in [2, 4, 6] {
        let r = projection_residual(&ring(n), 1.0, 0.0, 0.0).unwrap();
        assert!(r.abs() < 1e-12, "N={n}: {r}");
    }
    // the correlator terms scale with t and J, not U, so J ≠ 0 leaves a residual
    assert!(projection_residual(&ring(2), 1.0, 0.0, -0.5).unwrap().abs() > 1e-3);
}

#[test]
fn two_site_residual_changes_sign_on_the_unit_interval() {
    let lat = ring(2);
    let lo = projection_residual(&lat, 1.0, 4.0, -1.0).unwrap();
    let hi = projection_residual(&lat, 1.0, 4.0, 0.0).unwrap();
    assert!(lo * hi < 0.0, "{lo} {hi}");
}

#[test]
fn bracket_without_sign_change_is_an_error() {
    let e = optimize_j(&ring(2), 1.0, 4.0, (-0.3, 0.0), 1e-6).unwrap_err();
    assert!(matches!(e, Error::NoSignChange { .. }), "{e}");
    assert!(e.to_string().contains("widen"));
}

#[test]
fn root_is_independent_of_the_degenerate_shell_choice() {
    let lat = ring(4);
    let a = optimize_j(&lat, 1.0, 4.0, (-3.0, 0.0), 1e-6).unwrap();
    // fill 3π/2 instead of π/2 in both spin blocks
    let modes: Vec<usize> = [0, 3]
        .iter()
        .flat_map(|&k| [lat.mode(k, Spin::Up), lat.mode(k, Spin::Down)])
        .collect();
    let other = ReferenceDeterminant::from_modes(lat.n_modes(), &modes).unwrap();
    let b = optimize_j_with_reference(&lat, 1.0, 4.0, &other, (-3.0, 0.0), 1e-6).unwrap();
    assert!((a.j - b.j).abs() < 1e-6, "{} vs {}", a.j, b.j);
}

fn fermi_sea_tc_error(j: f64) -> f64 {
    let lat = ring(2);
    let p = HubbardParams::new(1.0, 4.0, j).unwrap();
    let htc = jordan_wigner(&build_tc(&lat, &p, Representation::Momentum));
    let fs = fermi_sea(&lat, 2).unwrap().state();
    let e: Complex64 = expectation(&fs, &htc).unwrap();
    (e.re - (2.0 - 20f64.sqrt())).abs()
}

#[test]
fn two_site_fermi_sea_energy_at_rounded_and_exact_root() {
    // U/2 − 4t·cosh J is exact only where cosh J = √5/2
    let root = (5f64.sqrt() / 2.0).acosh();
    assert!(fermi_sea_tc_error(-root) < 1e-12);
    let at_rounded = fermi_sea_tc_error(-0.48);
    assert!((at_rounded - 2.42e-3).abs() < 1e-5, "{at_rounded}");
}

#[test]
fn tc_right_eigenvector_relations() {
    let lat = ring(2);
    let sector = SectorBasis::half_filling(&lat).unwrap();
    for (j, rep) in [(0.0, Representation::Real), (-0.48, Representation::Real), (-0.48, Representation::Momentum)] {
        let p = HubbardParams::new(1.0, 4.0, j).unwrap();
        let h = jordan_wigner(&build_hubbard(&lat, &p, rep));
        let g = jordan_wigner(&build_gutzwiller(&lat, j, rep));
        let htc = jordan_wigner(&build_tc(&lat, &p, rep));
        let gs = exact_ground_state(&h, &sector).unwrap();
        let r = tc_right_eigenvector(&h, &g, &htc, &sector).unwrap();
        assert!(r.residual < 1e-8, "{}", r.residual);
        assert_eq!(r.energy.to_bits(), gs.energy.to_bits());
        if j == 0.0 {
            assert!((fidelity(&r.state, &gs.state).unwrap() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn six_site_compactness_peaks_near_the_projection_root() {
    let lat = ring(6);
    let grid: Vec<f64> = (0..=24).map(|i| -1.2 + 0.05 * i as f64).collect();
    let pts = hf_weight_sweep(&lat, 1.0, 4.0, &grid).unwrap();
    let best = pts.iter().max_by(|a, b| a.hf_weight.total_cmp(&b.hf_weight)).unwrap();
    let at_zero = pts.last().unwrap();
    assert!(at_zero.j.abs() < 1e-12);
    assert!((best.j + 0.67).abs() <= 0.15, "argmax {}", best.j);
    assert!(best.hf_weight > 0.9, "{}", best.hf_weight);

    // J = 0 is the plain ground state's Fermi-sea weight
    let h = jordan_wigner(&build_hubbard(&lat, &HubbardParams::new(1.0, 4.0, 0.0).unwrap(), Representation::Momentum));
    let gs = exact_ground_state(&h, &SectorBasis::half_filling(&lat).unwrap()).unwrap();
    let w0 = fidelity(&fermi_sea(&lat, 6).unwrap().state(), &gs.state).unwrap();
    assert!((w0 - at_zero.hf_weight).abs() < 1e-10);
}
