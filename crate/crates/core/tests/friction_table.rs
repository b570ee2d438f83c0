mod common;

use common::*;
use feedsim::plant::friction_current;

#[test]
fn breakaway_matches_coulomb_intensity() {
    // (a, c, i0) as tabulated
    for (name, a, c, i0) in [
        ("X", 1.576, -0.5332, 1.043),
        ("Y", 1.253, -0.3629, 0.890),
        ("Z", 1.420, -0.6301, 0.790),
    ] {
        let p = axis(name);
        assert_eq!(
            (p.friction.a, p.friction.c, p.friction.i0),
            (a, c, i0),
            "{name}"
        );
        let gap = (p.friction.breakaway_current() - i0).abs() / i0;
        assert!(gap <= 5e-3, "{name}: {gap}");
    }
}

#[test]
fn x_friction_at_ten_m_per_min() {
    let oracle = 1.576 * (0.01965f64 * 10.0).exp() - 0.5332 * (-0.2801f64 * 10.0).exp();
    let p = axis("X");
    let i = friction_current(&p.friction, p.k_t, 10.0, 0.0);
    assert!((i - oracle).abs() < 1e-3, "{i} vs {oracle}");
    assert!((i - 1.8858).abs() < 1e-3);
    assert!((friction_current(&p.friction, p.k_t, -10.0, 0.0) + i).abs() < 1e-15);
}
