//! Density evolution just below threshold: decoding starts at the chain ends
//! and travels inward.

use pic_turbo::density::{de_run_observed, DeControl, Ensemble};
use pic_turbo::transfer::TransferFn;
use pic_turbo::trellis::{RscSpec, Trellis};

fn main() {
    let f = TransferFn::new(&Trellis::new(RscSpec::DEFAULT));
    let ensemble = Ensemble::new(40, 0.25, 1);
    let eps = 0.70;
    let mut snapshots = Vec::new();
    let out = de_run_observed(ensemble, eps, &f, &DeControl::default(), |s| {
        if s.iteration % 25 == 0 {
            snapshots.push((s.iteration, s.app_profile()));
        }
    });
    for (it, profile) in snapshots {
        let bar: String = profile
            .iter()
            .map(|&p| match p {
                p if p < 1e-6 => '.',
                p if p < 0.1 => 'o',
                _ => '#',
            })
            .collect();
        println!("{it:>5} {bar}");
    }
    println!(
        "eps {eps}: decodable {} after {} iterations, invariants {:?}",
        out.decodable, out.iterations, out.invariants
    );
}
