mod common;

use common::{angular_oracle_sweep, CgCache};
use serf_chaos::angular::{clebsch_gordan, wigner6j, HalfInt};

#[test]
fn ladder_oracle_known_values() {
    let mut c = CgCache::default();
    // 1/2 ⊗ 1/2: singlet and triplet
    let r = 0.5f64.sqrt();
    assert!((c.cg(1, 1, 1, -1, 0, 0) - r).abs() < 1e-15);
    assert!((c.cg(1, -1, 1, 1, 0, 0) + r).abs() < 1e-15);
    assert!((c.cg(1, 1, 1, -1, 2, 0) - r).abs() < 1e-15);
    // ⟨1 1; 1 -1|2 0⟩ = 1/√6
    assert!((c.cg(2, 2, 2, -2, 4, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
}

#[test]
fn library_matches_oracles_up_to_spin_four() {
    let r = angular_oracle_sweep();
    assert!(r.cg_checked > 5_000 && r.sixj_checked > 100_000);
    assert!(r.cg_max_error < 1e-12, "CG error {:e}", r.cg_max_error);
    assert!(r.sixj_max_error < 1e-12, "6j error {:e}", r.sixj_max_error);
}

#[test]
fn sixj_closed_forms() {
    let h = HalfInt::from_twice;
    // {a b c; 0 c b} = (-1)^(a+b+c) / √((2b+1)(2c+1))
    for (ta, tb, tc) in [(2i32, 3, 5), (4, 4, 4), (1, 7, 8)] {
        let sign = if ((ta + tb + tc) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let want = sign / (((tb + 1) * (tc + 1)) as f64).sqrt();
        assert!((wigner6j(h(ta), h(tb), h(tc), h(0), h(tc), h(tb)) - want).abs() < 1e-14);
    }
    assert_eq!(clebsch_gordan(h(2), h(2), h(2), h(2), h(2), h(4)), 0.0);
}

