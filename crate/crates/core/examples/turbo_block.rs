//! One turbo code block over the BEC: iterative decoding next to the
//! enumeration MAP decision on the same erasure pattern.

use pic_turbo::erasure::ErasureVec;
use pic_turbo::oracle::exhaustive_map;
use pic_turbo::sim::{BecChannel, TrialRng};
use pic_turbo::trellis::{RscSpec, Trellis};
use pic_turbo::turbo::{Interleaver, TurboCode, TurboObservation};

fn main() -> pic_turbo::Result<()> {
    let k = 16;
    let code = TurboCode::new(Trellis::new(RscSpec::DEFAULT), Interleaver::random(k, 7));
    let channel = BecChannel::new(0.45)?;
    let mut rng = TrialRng::new(2024, 0);
    let info = rng.info_bits(k);
    let cw = code.encode(&info)?;
    let rx = rng.transmit(&channel, &cw.transmitted_bits());
    println!("interleaver {:?}", code.interleaver().permutation());
    println!("received    {rx}");

    let obs = TurboObservation::from_stream(k, 2, &rx)?;
    let out = code.decode_bec(&obs, &ErasureVec::erased(k))?;
    let map = exhaustive_map(k, |w| code.encode(w).expect("length").transmitted_bits(), &rx)?;
    println!("info        {}", ErasureVec::from_bits(&info));
    println!("iterative   {} after {} rounds", out.info_app, out.rounds);
    println!("MAP         {map}");
    println!(
        "{} erasures left, MAP leaves {}",
        out.info_app.erased_count(),
        map.erased_count()
    );
    Ok(())
}
