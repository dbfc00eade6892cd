//! Acceptance criteria. Each test prints one PASS/FAIL line and asserts it.

use std::fs;
use std::sync::OnceLock;

use pic_turbo::bcjr::{bcjr_erasure_decode, brute_force_map};
use pic_turbo::cli::main_with_args;
use pic_turbo::density::{bp_threshold, gap_to_capacity, uncoupled_threshold, DeControl, Ensemble, ThresholdResult};
use pic_turbo::erasure::ErasureVec;
use pic_turbo::pic::{PicCode, PicConfig, Rational};
use pic_turbo::rate::asymptotic_rate;
use pic_turbo::selftest::chain_vs_map;
use pic_turbo::sim::{run_ber_experiment, run_trial, BecChannel, ErrorAccounting, TrialRng};
use pic_turbo::transfer::{mc_transfer_estimate, TransferFn};
use pic_turbo::trellis::{RscSpec, Trellis};
use pic_turbo::turbo::{Interleaver, TurboCode, TurboObservation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (λ numerator, λ denominator, R_PIC, ε_BP, gap) for the nine table rows.
const TABLE: [(i64, i64, f64, f64, f64); 9] = [
    (1, 16, 0.3191, 0.6596, 0.0213),
    (1, 8, 0.3043, 0.6756, 0.0201),
    (1, 7, 0.3000, 0.6802, 0.0198),
    (1, 6, 0.2941, 0.6862, 0.0197),
    (1, 5, 0.2857, 0.6947, 0.0196),
    (1, 4, 0.2727, 0.7075, 0.0198),
    (1, 3, 0.2500, 0.7294, 0.0206),
    (3, 8, 0.2381, 0.7406, 0.0213),
    (1, 2, 0.2000, 0.7760, 0.0240),
];

fn report(id: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn transfer() -> &'static TransferFn {
    static F: OnceLock<TransferFn> = OnceLock::new();
    F.get_or_init(|| TransferFn::new(&Trellis::new(RscSpec::DEFAULT)))
}

/// Thresholds of the nine table rows at m = 1, L = 100, bracket 1e-4.
fn table_thresholds() -> &'static Vec<ThresholdResult> {
    static T: OnceLock<Vec<ThresholdResult>> = OnceLock::new();
    T.get_or_init(|| {
        TABLE
            .iter()
            .map(|&(n, d, ..)| bp_threshold(Ensemble::new(100, n as f64 / d as f64, 1), 1e-4, transfer(), &DeControl::default()))
            .collect()
    })
}

fn threshold_cli_csv(path: &std::path::Path) -> String {
    let lambdas = TABLE.iter().map(|&(n, d, ..)| format!("{n}/{d}")).collect::<Vec<_>>().join(",");
    let out = path.to_str().unwrap();
    let code = main_with_args(["pictc", "--output", out, "threshold", "--lambda", &lambdas, "--m", "1", "--L", "100"]);
    assert_eq!(code, 0);
    fs::read_to_string(path).unwrap()
}

fn cli_table() -> &'static (String, String) {
    static T: OnceLock<(String, String)> = OnceLock::new();
    T.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let a = threshold_cli_csv(&dir.path().join("a.csv"));
        let b = threshold_cli_csv(&dir.path().join("b.csv"));
        (a, b)
    })
}

#[test]
fn c1_table_thresholds() {
    let csv = &cli_table().0;
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for (line, &(n, d, _, eps, _)) in csv.lines().skip(1).zip(&TABLE) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], format!("{n}/{d}"));
        let got: f64 = f[3].parse().unwrap();
        println!("  lambda {n}/{d}: eps_BP {got:.5}, table {eps}");
        worst = worst.max((got - eps).abs());
        rows += 1;
    }
    let pass = rows == 9 && worst <= 1e-3;
    report("1", pass, format!("{rows}/9 rows, max |eps_BP - table| = {worst:.2e} (tol 1e-3)"));
    assert!(pass);
}

#[test]
fn c2_memory_invariance() {
    let control = DeControl::default();
    let mut worst: f64 = 0.0;
    for (n, d) in [(1, 8), (1, 4)] {
        let lambda = n as f64 / d as f64;
        let eps: Vec<f64> = (1..=3)
            .map(|m| bp_threshold(Ensemble::new(100, lambda, m), 1e-4, transfer(), &control).eps_bp)
            .collect();
        println!("  lambda {n}/{d}: m=1 {:.5}, m=2 {:.5}, m=3 {:.5}", eps[0], eps[1], eps[2]);
        for i in 0..3 {
            for j in i + 1..3 {
                worst = worst.max((eps[i] - eps[j]).abs());
            }
        }
    }
    let pass = worst <= 1e-3;
    report("2", pass, format!("max pairwise spread over m = 1, 2, 3 is {worst:.2e} (tol 1e-3)"));
    assert!(pass);
}

#[test]
fn c3_rates_and_gaps() {
    let mut rate_ok = true;
    let mut worst_gap: f64 = 0.0;
    for (&(n, d, r_tab, _, gap_tab), res) in TABLE.iter().zip(table_thresholds()) {
        let r = asymptotic_rate(Rational::new(1, 3), Rational::new(n, d));
        let r = *r.numer() as f64 / *r.denom() as f64;
        rate_ok &= format!("{r:.4}") == format!("{r_tab:.4}");
        let gap = gap_to_capacity(r, res.eps_bp);
        println!("  lambda {n}/{d}: R {r:.4} (table {r_tab}), gap {gap:.4} (table {gap_tab})");
        worst_gap = worst_gap.max((gap - gap_tab).abs());
    }
    let pass = rate_ok && worst_gap <= 2e-3;
    report(
        "3",
        pass,
        format!("rates match to 4 decimals: {rate_ok}; max |gap - table| = {worst_gap:.2e} (tol 2e-3)"),
    );
    assert!(pass);
}

#[test]
fn c4_transfer_against_monte_carlo() {
    let trellis = Trellis::new(RscSpec::DEFAULT);
    let f = TransferFn::new(&trellis);
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let (mut within, mut total) = (0, 0);
    for (i, &p) in grid.iter().enumerate() {
        for (j, &q) in grid.iter().enumerate() {
            let v = f.eval(p, q);
            let mc = mc_transfer_estimate(&trellis, p, q, 1_000_000, 1000 + 9 * i as u64 + j as u64).unwrap();
            // a zero standard error only accepts an exact match
            let ok_p = (v.fp - mc.fp).abs() <= 3.0 * mc.fp_stderr.max(1e-12);
            let ok_q = (v.fq - mc.fq).abs() <= 3.0 * mc.fq_stderr.max(1e-12);
            if ok_p && ok_q {
                within += 1;
            } else {
                println!(
                    "  outside 3 SE at ({p}, {q}): Fp {:.5} vs {:.5} ± {:.5}, Fq {:.5} vs {:.5} ± {:.5}",
                    v.fp, mc.fp, mc.fp_stderr, v.fq, mc.fq, mc.fq_stderr
                );
            }
            total += 1;
        }
    }
    let frac = within as f64 / total as f64;
    let pass = frac >= 0.95;
    report("4", pass, format!("{within}/{total} grid points within 3 SE ({:.1}%, need 95%)", 100.0 * frac));
    assert!(pass);
}

#[test]
fn c5a_bcjr_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = Trellis::new(RscSpec::DEFAULT);
    let mut mismatches = 0;
    for i in 0..200 {
        let len = 3 + i % 10;
        let info: Vec<u8> = (0..len - 2).map(|_| rng.random_range(0..2)).collect();
        let cw = t.encode(&info, true);
        let (p, q) = (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9));
        let sys_mask: Vec<bool> = (0..len).map(|_| rng.random_bool(p)).collect();
        let par_mask: Vec<bool> = (0..len).map(|_| rng.random_bool(q)).collect();
        let sys = ErasureVec::from_mask(&cw.inputs(), &sys_mask);
        let par = ErasureVec::from_mask(&cw.parities(), &par_mask);
        let fast = bcjr_erasure_decode(&t, &sys, &par, true, true).unwrap();
        let slow = brute_force_map(&t, &sys, &par, true, true).unwrap();
        if fast != slow {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    report("5a", pass, format!("bcjr vs brute-force MAP: {mismatches}/200 mismatches, lengths 3..=12"));
    assert!(pass);
}

#[test]
fn c5b_chain_matches_map() {
    let stats = chain_vs_map(50, &[0.3, 0.4, 0.5, 0.6, 0.7], 5).unwrap();
    let pass = stats.mismatches == 0;
    report(
        "5b",
        pass,
        format!(
            "FF-FB vs whole-chain MAP, K=12 L=4 lambda=1/4 m=1, eps in 0.3..0.7: {}/50 mismatches \
             ({} extra erasures, {} unsound)",
            stats.mismatches, stats.extra_erasures, stats.violations
        ),
    );
    assert_eq!(stats.violations, 0, "decoder knew a bit MAP cannot know");
    assert!(pass);
}

#[test]
fn c6a_zero_coupling_threshold() {
    let control = DeControl::default();
    let coupled = bp_threshold(Ensemble::new(100, 0.0, 1), 1e-5, transfer(), &control).eps_bp;
    let plain = uncoupled_threshold(1e-5, transfer(), &control).eps_bp;
    let diff = (coupled - plain).abs();
    let pass = diff <= 1e-4;
    report("6a", pass, format!("lambda=0 chain {coupled:.6} vs uncoupled {plain:.6}, |diff| = {diff:.1e} (tol 1e-4)"));
    assert!(pass);
}

#[test]
fn c6b_zero_coupling_simulation() {
    let (k, l, master) = (128, 6, 66);
    let cfg = PicConfig::new(k, l, Rational::new(0, 1), 1).unwrap();
    let code = PicCode::new(cfg.clone()).unwrap();
    let turbo = TurboCode::new(Trellis::new(RscSpec::DEFAULT), Interleaver::random(k, cfg.seed));
    let mut differing = 0;
    let trials = 60;
    for trial in 0..trials {
        let channel = BecChannel::new([0.5, 0.6, 0.65, 0.7][trial as usize % 4]).unwrap();
        let chain = run_trial(&code, &channel, master, trial).unwrap();
        let mut rng = TrialRng::new(master, trial);
        let info = rng.info_bits(l * k);
        let mut residual = 0;
        for block in info.chunks(k) {
            let rx = rng.transmit(&channel, &turbo.encode(block).unwrap().transmitted_bits());
            let obs = TurboObservation::from_stream(k, 2, &rx).unwrap();
            residual += turbo.decode_bec(&obs, &ErasureVec::erased(k)).unwrap().info_app.erased_count();
        }
        if residual != chain.residual_erasures {
            differing += 1;
        }
    }
    let pass = differing == 0;
    report("6b", pass, format!("lambda=0 chain vs independent turbo blocks: {differing}/{trials} trials differ"));
    assert!(pass);
}

#[test]
fn c7_waterfall() {
    let cfg = PicConfig::new(1024, 20, Rational::new(1, 4), 1).unwrap();
    let eps_bp = bp_threshold(Ensemble::new(20, 0.25, 1), 1e-4, transfer(), &DeControl::default()).eps_bp;
    let below = run_ber_experiment(&cfg, &[eps_bp - 0.03], 100, 7, ErrorAccounting::Full).unwrap()[0].clone();
    let above = run_ber_experiment(&cfg, &[eps_bp + 0.05], 20, 7, ErrorAccounting::Full).unwrap()[0].clone();
    let pass_below = below.ber <= 1e-4;
    let pass_above = above.ber >= 1e-1;
    report(
        "7",
        pass_below && pass_above,
        format!(
            "K=1024 L=20 lambda=1/4, eps_BP={eps_bp:.4}: BER {:.2e} at eps_BP-0.03 over 100 trials (need <= 1e-4), \
             BER {:.2e} at eps_BP+0.05 over 20 trials (need >= 1e-1)",
            below.ber, above.ber
        ),
    );
    assert!(pass_above);
    assert!(pass_below);
}

#[test]
fn c8a_de_invariants() {
    let failing: Vec<String> = TABLE
        .iter()
        .zip(table_thresholds())
        .filter(|(_, r)| !r.invariants_hold())
        .map(|(&(n, d, ..), _)| format!("{n}/{d}"))
        .collect();
    let runs: usize = table_thresholds().iter().map(|r| r.probes.len()).sum();
    let pass = failing.is_empty();
    report(
        "8a",
        pass,
        format!("monotone/symmetric/boundary-dominant on all {runs} DE runs of the table suite; violations at {failing:?}"),
    );
    assert!(pass);
}

#[test]
fn c8b_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let lambdas = [(0, 1), (1, 8), (1, 4), (3, 8), (1, 2)];
    let mut failures = 0;
    for i in 0..100 {
        let m = rng.random_range(1..=3usize);
        let (n, d) = lambdas[rng.random_range(0..lambdas.len())];
        let k = 48 * rng.random_range(1..=4usize);
        let l = rng.random_range(m + 1..=m + 5);
        let mut cfg = PicConfig::new(k, l, Rational::new(n, d), m).unwrap();
        cfg.seed = i;
        let code = PicCode::new(cfg).unwrap();
        let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2)).collect();
        let tx = code.transmitted_bits(&code.encode(&info).unwrap());
        let out = code.decode_channel(&ErasureVec::from_bits(&tx)).unwrap();
        if out.info != ErasureVec::from_bits(&info) {
            failures += 1;
        }
    }
    let pass = failures == 0;
    report("8b", pass, format!("noiseless round trip: {failures}/100 random configs fail"));
    assert!(pass);
}

#[test]
fn c8c_determinism() {
    let (a, b) = cli_table();
    let pass = a == b && !a.is_empty();
    report("8c", pass, format!("threshold CSV rerun byte-identical: {} ({} bytes)", a == b, a.len()));
    assert!(pass);
}
