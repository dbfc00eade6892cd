//! Encodes a short word with the (1, 5/7) RSC code and prints the trellis.

use pic_turbo::trellis::{RscSpec, Trellis};

fn main() {
    let t = Trellis::new(RscSpec::DEFAULT);
    println!("code {} with {} states", RscSpec::DEFAULT, t.state_count());
    println!("state  u=0 (next/par)  u=1 (next/par)");
    for s in 0..t.state_count() {
        println!(
            "{s:>5}  {:>6}/{}          {:>6}/{}",
            t.next_state(s, 0),
            t.parity(s, 0),
            t.next_state(s, 1),
            t.parity(s, 1)
        );
    }

    let info = [1, 0, 1, 1, 0, 0, 1, 0];
    let cw = t.encode(&info, true);
    println!("info        {:?}", info);
    println!("parity      {:?}", cw.parity);
    println!("tail input  {:?}", cw.tail.systematic);
    println!("tail parity {:?}", cw.tail.parity);
    println!("final state {}", cw.final_state);
}
