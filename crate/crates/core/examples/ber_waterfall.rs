//! Monte-Carlo BER of a short coupled chain around its threshold.

use pic_turbo::density::{bp_threshold, DeControl, Ensemble};
use pic_turbo::pic::{PicConfig, Rational};
use pic_turbo::sim::{run_ber_experiment, ErrorAccounting};
use pic_turbo::transfer::TransferFn;
use pic_turbo::trellis::{RscSpec, Trellis};

fn main() -> pic_turbo::Result<()> {
    let cfg = PicConfig::new(512, 12, Rational::new(1, 4), 1)?;
    let f = TransferFn::new(&Trellis::new(RscSpec::DEFAULT));
    let thr = bp_threshold(Ensemble::new(cfg.l, 0.25, 1), 1e-3, &f, &DeControl::default());
    println!("DE threshold for L = {}: {:.4}", cfg.l, thr.eps_bp);

    let eps: Vec<f64> = (0..8).map(|i| 0.60 + 0.02 * i as f64).collect();
    let records = run_ber_experiment(&cfg, &eps, 20, 1, ErrorAccounting::Full)?;
    println!("eps    BER");
    for r in records {
        println!("{:.2}   {:.3e}", r.epsilon, r.ber);
    }
    Ok(())
}
