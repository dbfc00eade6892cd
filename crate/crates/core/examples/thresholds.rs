//! BP thresholds of coupled chains with L = 100 and their gap to capacity.

use pic_turbo::density::{bp_threshold, gap_to_capacity, uncoupled_threshold, DeControl, Ensemble};
use pic_turbo::rate::asymptotic_rate;
use pic_turbo::pic::Rational;
use pic_turbo::transfer::TransferFn;
use pic_turbo::trellis::{RscSpec, Trellis};
use rayon::prelude::*;

fn main() {
    let f = TransferFn::new(&Trellis::new(RscSpec::DEFAULT));
    let control = DeControl::default();
    let tol = 1e-4;
    let base = uncoupled_threshold(tol, &f, &control);
    println!("uncoupled: eps_BP = {:.4}", base.eps_bp);

    let lambdas = [(1, 16), (1, 8), (1, 7), (1, 6), (1, 5), (1, 4), (1, 3), (3, 8), (1, 2)];
    let rows: Vec<_> = lambdas
        .par_iter()
        .map(|&(n, d)| {
            let lambda = Rational::new(n, d);
            let r = asymptotic_rate(Rational::new(1, 3), lambda);
            let r = *r.numer() as f64 / *r.denom() as f64;
            let res = bp_threshold(Ensemble::new(100, n as f64 / d as f64, 1), tol, &f, &control);
            (lambda, r, res)
        })
        .collect();
    println!("lambda  R_PIC   eps_BP  gap     probes  invariants");
    for (lambda, r, res) in rows {
        println!(
            "{:<6}  {r:.4}  {:.4}  {:.4}  {:>6}  {}",
            lambda.to_string(),
            res.eps_bp,
            gap_to_capacity(r, res.eps_bp),
            res.probes.len(),
            if res.invariants_hold() { "hold" } else { "violated" }
        );
    }
}
