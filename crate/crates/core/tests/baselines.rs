use mpomps::baselines::{ctc_basic, ctc_randomized, density_matrix, fitting, src, zip_up, FittingOptions};
use mpomps::mps::product_relative_error;
use mpomps::random::{random_mpo, random_mps};
use mpomps::src::TruncationPolicy;
use mpomps::{Mpo, Truncation};

#[test]
fn fitting_from_the_exact_product_stops_after_one_sweep() {
    let h = random_mpo(6, 2, 2, -0.5, 1).unwrap();
    let psi = random_mps(6, 2, 3, -0.5, 2).unwrap();
    let opts = FittingOptions {
        guess: Some(h.apply_exact(&psi).unwrap()),
        ..FittingOptions::default()
    };
    let r = fitting(&h, &psi, Truncation::MaxRank(6), &opts).unwrap();
    assert!(r.converged);
    assert_eq!(r.sweeps, 1);
    assert!(product_relative_error(&r.output, &h, &psi).unwrap() <= 1e-10);
}

#[test]
fn fitting_identity_from_random_guess() {
    let psi = random_mps(6, 2, 4, -0.5, 3).unwrap();
    let h = Mpo::identity(&psi.phys_dims());
    let opts = FittingOptions {
        max_sweeps: 5,
        seed: 9,
        ..FittingOptions::default()
    };
    let r = fitting(&h, &psi, Truncation::MaxRank(4), &opts).unwrap();
    assert!(r.sweeps <= 5);
    assert!(product_relative_error(&r.output, &h, &psi).unwrap() <= 1e-8);
}

#[test]
fn tolerance_modes_meet_their_target() {
    let h = random_mpo(10, 2, 3, 0.0, 4).unwrap();
    let psi = random_mps(10, 2, 4, 0.0, 5).unwrap();
    for tau in [1e-2, 1e-4] {
        let cut = Truncation::Tolerance(tau);
        for (name, out) in [
            ("ctc", ctc_basic(&h, &psi, cut).unwrap().output),
            ("density", density_matrix(&h, &psi, cut).unwrap().output),
            ("zipup", zip_up(&h, &psi, cut).unwrap().output),
        ] {
            // Per-bond cuts add up over at most n - 1 bonds.
            let err = product_relative_error(&out, &h, &psi).unwrap();
            assert!(err <= 3.0 * tau * 10f64.sqrt(), "{name} at {tau}: {err}");
        }
    }
}

#[test]
fn operation_counts_follow_the_expected_ordering() {
    let h = random_mpo(32, 2, 16, -0.5, 6).unwrap();
    let psi = random_mps(32, 2, 16, -0.5, 7).unwrap();
    let cut = Truncation::MaxRank(16);
    let ctc = ctc_basic(&h, &psi, cut).unwrap().flops;
    let rctc = ctc_randomized(&h, &psi, 16, 1).unwrap().flops;
    let density = density_matrix(&h, &psi, cut).unwrap().flops;
    let zip = zip_up(&h, &psi, cut).unwrap().flops;
    let fast = src(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 16 }, 1).unwrap().flops;
    let middle = density.min(rctc);
    assert!(ctc > density.max(rctc), "ctc {ctc}, density {density}, rctc {rctc}");
    assert!(middle > zip.max(fast), "density {density}, rctc {rctc}, zipup {zip}, src {fast}");
}

#[test]
fn deterministic_methods_repeat_exactly() {
    let h = random_mpo(8, 2, 2, -0.5, 8).unwrap();
    let psi = random_mps(8, 2, 3, -0.5, 9).unwrap();
    let cut = Truncation::MaxRank(3);
    let opts = FittingOptions::default();
    assert_eq!(zip_up(&h, &psi, cut).unwrap().output, zip_up(&h, &psi, cut).unwrap().output);
    assert_eq!(density_matrix(&h, &psi, cut).unwrap().output, density_matrix(&h, &psi, cut).unwrap().output);
    assert_eq!(fitting(&h, &psi, cut, &opts).unwrap().output, fitting(&h, &psi, cut, &opts).unwrap().output);
    assert_eq!(ctc_randomized(&h, &psi, 3, 4).unwrap().output, ctc_randomized(&h, &psi, 3, 4).unwrap().output);
}
