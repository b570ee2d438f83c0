//! Fits the X-axis prediction model and synthesizes the default RST controller.

use feedsim::gpc::{model_from_axis, stability_margins, synthesize_rst, GpcTuning};
use feedsim::io::bundled_profile;
use feedsim::params::DEFAULT_PLANT_STEP;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = bundled_profile().axis("X").unwrap();
    let m = model_from_axis(p, DEFAULT_PLANT_STEP)?;
    println!(
        "velocity loop lag tau = {:.3} ms (fit rms {:.1}%)",
        m.tau * 1e3,
        m.fit_rms * 100.0
    );
    println!("A = {:?}", m.model.a());
    println!("B = {:?}", m.model.b());

    let t = GpcTuning::default();
    let syn = synthesize_rst(&m.model, &t)?;
    println!("{t:?}, condition {:.2e}", syn.condition);
    println!("R = {:?}", syn.rst.r);
    println!("S = {:?}", syn.rst.s);
    println!("T = {:?}", syn.rst.t);
    println!(
        "S(1) = {:.1e}, R(1) = {:.6}, T(1) = {:.6}",
        syn.rst.s_at_one(),
        syn.rst.r_at_one(),
        syn.rst.t_at_one()
    );
    let g = stability_margins(&m.model, &syn.rst);
    println!(
        "gain margin {:?}, phase margin {:?} deg, crossover {:?} rad/s",
        g.gain_margin, g.phase_margin, g.crossover
    );
    Ok(())
}
