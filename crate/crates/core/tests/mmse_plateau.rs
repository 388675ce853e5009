use std::f64::consts::PI;

use mfi_core::analysis::mmse;
use mfi_core::design::design_rips;
use mfi_core::model::sigma_theta_from_snr_db;
use mfi_core::C_PAPER_REPRO;

const N: usize = 21;
const B: f64 = 20e6;

fn uniform_mmse(sigma: f64) -> f64 {
    let c = C_PAPER_REPRO;
    let n = N as f64;
    c * c * 12.0 * sigma * sigma * (n - 1.0) / (4.0 * PI * PI * B * B * n * (n + 1.0))
}

#[test]
fn uniform_closed_form_matches_the_general_one() {
    let plan = design_rips(400e6, B, N, None, C_PAPER_REPRO).unwrap();
    for snr in [0.0, 7.5, 15.0] {
        let s = sigma_theta_from_snr_db(snr);
        let (a, b) = (mmse(&plan, s), uniform_mmse(s));
        assert!(((a - b) / b).abs() < 1e-12, "{a} {b}");
    }
}
