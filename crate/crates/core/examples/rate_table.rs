//! Asymptotic and finite-length rates for a range of coupling ratios. K is
//! chosen so that every λK is an integer.

use pic_turbo::pic::{PicConfig, Rational};
use pic_turbo::rate::{asymptotic_rate, finite_rate, RateAccounting};

fn main() -> pic_turbo::Result<()> {
    let lambdas = [(1, 16), (1, 8), (1, 7), (1, 6), (1, 5), (1, 4), (1, 3), (3, 8), (1, 2)];
    println!("lambda  R_inf     R(L=100)  R(L=100, layout)");
    for (n, d) in lambdas {
        let lambda = Rational::new(n, d);
        let r_inf = asymptotic_rate(Rational::new(1, 3), lambda);
        let k = 6720;
        let cfg = PicConfig::new(k, 100, lambda, 1)?;
        let published = finite_rate(&cfg, RateAccounting::Published);
        let layout = finite_rate(&cfg, RateAccounting::Layout);
        println!(
            "{:<6}  {:.6}  {:.6}  {:.6}   exact {}",
            lambda.to_string(),
            *r_inf.numer() as f64 / *r_inf.denom() as f64,
            published.finite_f64(),
            layout.finite_f64(),
            r_inf
        );
    }
    Ok(())
}
