//! Encodes a coupled chain, erases part of the transmission and decodes it
//! with feed-forward/feed-back sweeps.

use pic_turbo::pic::{PicCode, PicConfig, Rational};
use pic_turbo::sim::{BecChannel, TrialRng};

fn main() -> pic_turbo::Result<()> {
    let cfg = PicConfig::new(256, 8, Rational::new(1, 4), 2)?;
    let code = PicCode::new(cfg.clone())?;
    for t in [0, 1, cfg.l - 1] {
        let lay = code.layout(t);
        let padded: Vec<_> = lay.padded_ranges().collect();
        println!("CB {t}: uncoupled {:?}, padded {:?}", lay.uncoupled, padded);
    }
    println!(
        "{} information bits, {} transmitted bits",
        code.info_len(),
        code.transmitted_len()
    );

    let mut rng = TrialRng::new(11, 0);
    let info = rng.info_bits(code.info_len());
    let tx = code.transmitted_bits(&code.encode(&info)?);
    for eps in [0.55, 0.65, 0.72] {
        let rx = TrialRng::new(11, 0).transmit(&BecChannel::new(eps)?, &tx);
        let out = code.decode_channel(&rx)?;
        assert!(out.info.consistent_with(&info));
        println!(
            "eps {eps}: {} channel erasures, residual per sweep {:?}",
            rx.erased_count(),
            out.residual_history
        );
    }
    Ok(())
}
