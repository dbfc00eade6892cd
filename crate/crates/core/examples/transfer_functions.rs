//! Exact constituent transfer functions next to a Monte-Carlo estimate.

use pic_turbo::transfer::{mc_transfer_estimate, TransferFn};
use pic_turbo::trellis::{RscSpec, Trellis};

fn main() -> pic_turbo::Result<()> {
    let trellis = Trellis::new(RscSpec::DEFAULT);
    let f = TransferFn::new(&trellis);
    println!("supporting state sets: {}", f.model().sets().len());
    println!("p_bar q_bar  F_p       F_q       F_p(MC)           F_q(MC)");
    for (p, q) in [(0.2, 0.2), (0.5, 0.5), (0.7, 0.3), (0.3, 0.7), (0.9, 0.9)] {
        let v = f.eval(p, q);
        let mc = mc_transfer_estimate(&trellis, p, q, 200_000, 5)?;
        println!(
            "{p:.1}   {q:.1}    {:.6}  {:.6}  {:.4} ± {:.4}  {:.4} ± {:.4}",
            v.fp, v.fq, mc.fp, mc.fp_stderr, mc.fq, mc.fq_stderr
        );
    }
    Ok(())
}
