mod support;

use support::{random_packets, transform_grid, transform_identity_gaps};

#[test]
fn chirp_keeps_lq_norms_and_maps_weighted_field_to_gradient() {
    for seed in 0..20u64 {
        let d = 1 + (seed % 3) as usize;
        let u = random_packets(&transform_grid(d), seed);
        for t in [0.5, 1.0, 2.0] {
            let (lq, w) = transform_identity_gaps(&u, t);
            assert!(lq < 1e-12, "seed {seed} d={d} t={t}: lq gap {lq}");
            assert!(w < 1e-8, "seed {seed} d={d} t={t}: weighted gap {w}");
        }
    }
}

#[test]
fn negative_time_uses_the_conjugate_chirp() {
    let u = random_packets(&transform_grid(1), 99);
    let (lq, w) = transform_identity_gaps(&u, -1.0);
    assert!(lq < 1e-12 && w < 1e-8, "{lq} {w}");
}
