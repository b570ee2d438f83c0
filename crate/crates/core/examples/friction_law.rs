//! Friction current of the X, Y and Z axes over the tabulated speed range.

use feedsim::io::bundled_profile;
use feedsim::plant::friction_current;

fn main() {
    let profile = bundled_profile();
    println!(
        "{:>8} {:>9} {:>9} {:>9}",
        "m/min", "X [A]", "Y [A]", "Z [A]"
    );
    for v in [
        0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 18.0,
    ] {
        let i: Vec<String> = ["X", "Y", "Z"]
            .iter()
            .map(|a| {
                let p = profile.axis(a).unwrap();
                format!("{:9.4}", friction_current(&p.friction, p.k_t, v, 0.0))
            })
            .collect();
        println!("{v:8.2} {}", i.join(" "));
    }
    for a in ["X", "Y", "Z"] {
        let f = profile.axis(a).unwrap().friction;
        println!(
            "{a}: breakaway a + c = {:.4} A, Coulomb band i0 = {:.3} A",
            f.breakaway_current(),
            f.i0
        );
    }
}
