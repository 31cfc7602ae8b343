//! Brute-force oracles independent of the library's closed-form formulas.
#![allow(dead_code)]

use std::collections::HashMap;

/// Coupled states |J M⟩ of j1 ⊗ j2 built numerically with the lowering
/// operators, phases fixed by ⟨j1 j1; j2 J-j1|J J⟩ > 0.
/// Spins are given doubled; product index (a, b) with m = j - a (descending).
pub struct LadderCg {
    tj1: i32,
    tj2: i32,
    /// (2J, 2M) -> amplitudes in the product basis.
    states: HashMap<(i32, i32), Vec<f64>>,
}

fn lower_coeff(tj: i32, tm: i32) -> f64 {
    // J_- |j m⟩ = √((j+m)(j-m+1)) |j m-1⟩, all in doubled units
    let (j, m) = (tj as f64 / 2.0, tm as f64 / 2.0);
    ((j + m) * (j - m + 1.0)).max(0.0).sqrt()
}

impl LadderCg {
    pub fn new(tj1: i32, tj2: i32) -> Self {
        let (n1, n2) = ((tj1 + 1) as usize, (tj2 + 1) as usize);
        let idx = |a: usize, b: usize| a * n2 + b;
        let lower = |v: &[f64]| {
            let mut out = vec![0.0; n1 * n2];
            for a in 0..n1 {
                for b in 0..n2 {
                    let c = v[idx(a, b)];
                    if c == 0.0 {
                        continue;
                    }
                    let (m1, m2) = (tj1 - 2 * a as i32, tj2 - 2 * b as i32);
                    if a + 1 < n1 {
                        out[idx(a + 1, b)] += c * lower_coeff(tj1, m1);
                    }
                    if b + 1 < n2 {
                        out[idx(a, b + 1)] += c * lower_coeff(tj2, m2);
                    }
                }
            }
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            out.iter_mut().for_each(|x| *x /= norm);
            out
        };
        let mut states: HashMap<(i32, i32), Vec<f64>> = HashMap::new();
        let mut tj = tj1 + tj2;
        while tj >= (tj1 - tj2).abs() {
            // highest-weight state from J_+ ψ = 0:
            // c(m1) A(j1, m1) + c(m1 + 1) A(j2, J - m1 - 1) = 0
            let raise = |tj: i32, tm: i32| {
                let (j, m) = (tj as f64 / 2.0, tm as f64 / 2.0);
                ((j - m) * (j + m + 1.0)).max(0.0).sqrt()
            };
            let mut v = vec![0.0; n1 * n2];
            let b_of = |tm1: i32| ((tj2 - (tj - tm1)) / 2) as usize;
            v[idx(0, b_of(tj1))] = 1.0;
            let mut tm1 = tj1 - 2;
            while tm1 >= (-tj1).max(tj - tj2) {
                let a = ((tj1 - tm1) / 2) as usize;
                v[idx(a, b_of(tm1))] = -v[idx(a - 1, b_of(tm1 + 2))] * raise(tj2, tj - tm1 - 2) / raise(tj1, tm1);
                tm1 -= 2;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let mut tm = tj;
            states.insert((tj, tm), v.clone());
            while tm > -tj {
                v = lower(&v);
                tm -= 2;
                states.insert((tj, tm), v.clone());
            }
            tj -= 2;
        }
        LadderCg { tj1, tj2, states }
    }

    /// ⟨j1 m1; j2 m2|J M⟩ in doubled units.
    pub fn get(&self, tm1: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
        if tm1 + tm2 != tm || tm1.abs() > self.tj1 || tm2.abs() > self.tj2 {
            return 0.0;
        }
        match self.states.get(&(tj, tm)) {
            Some(v) => {
                let a = ((self.tj1 - tm1) / 2) as usize;
                let b = ((self.tj2 - tm2) / 2) as usize;
                v[a * (self.tj2 + 1) as usize + b]
            }
            None => 0.0,
        }
    }
}

/// Cache of ladder tables keyed by doubled (j1, j2).
#[derive(Default)]
pub struct CgCache(HashMap<(i32, i32), LadderCg>);

impl CgCache {
    pub fn cg(&mut self, tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
        self.0.entry((tj1, tj2)).or_insert_with(|| LadderCg::new(tj1, tj2)).get(tm1, tm2, tj, tm)
    }
}

pub fn triangle(ta: i32, tb: i32, tc: i32) -> bool {
    tc >= (ta - tb).abs() && tc <= ta + tb && (ta + tb + tc) % 2 == 0
}

/// {j1 j2 j12; j3 J j23} from the overlap of the two coupling orders of
/// three spins, evaluated at M = J.
pub fn sixj_recoupling(cache: &mut CgCache, t: [i32; 6]) -> f64 {
    let [tj1, tj2, tj12, tj3, tjj, tj23] = t;
    if !(triangle(tj1, tj2, tj12) && triangle(tj12, tj3, tjj) && triangle(tj2, tj3, tj23) && triangle(tj1, tj23, tjj))
    {
        return 0.0;
    }
    let tm = tjj;
    let mut overlap = 0.0;
    for tm1 in (-tj1..=tj1).step_by(2) {
        for tm2 in (-tj2..=tj2).step_by(2) {
            let tm3 = tm - tm1 - tm2;
            if tm3.abs() > tj3 {
                continue;
            }
            let left = cache.cg(tj1, tm1, tj2, tm2, tj12, tm1 + tm2) * cache.cg(tj12, tm1 + tm2, tj3, tm3, tjj, tm);
            if left == 0.0 {
                continue;
            }
            let right = cache.cg(tj2, tm2, tj3, tm3, tj23, tm2 + tm3) * cache.cg(tj1, tm1, tj23, tm2 + tm3, tjj, tm);
            overlap += left * right;
        }
    }
    let phase = if ((tj1 + tj2 + tj3 + tjj) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    phase * overlap / (((tj12 + 1) * (tj23 + 1)) as f64).sqrt()
}

/// Worst deviations of the library's CG and 6j from the oracles over all
/// spins up to 4.
pub struct AngularOracleReport {
    pub cg_checked: usize,
    pub cg_max_error: f64,
    pub sixj_checked: usize,
    pub sixj_max_error: f64,
}

pub fn angular_oracle_sweep() -> AngularOracleReport {
    use serf_chaos::angular::{clebsch_gordan, wigner6j, HalfInt};
    let h = HalfInt::from_twice;
    let mut cache = CgCache::default();
    let (mut cg_checked, mut cg_max_error) = (0, 0.0f64);
    for tj1 in 0i32..=8 {
        for tj2 in 0..=8 {
            for tj in 0..=8 {
                for tm1 in (-tj1..=tj1).step_by(2) {
                    for tm2 in (-tj2..=tj2).step_by(2) {
                        let tm = tm1 + tm2;
                        if tm.abs() > tj || (tj + tm) % 2 != 0 {
                            continue;
                        }
                        let want = if triangle(tj1, tj2, tj) {
                            cache.cg(tj1, tm1, tj2, tm2, tj, tm)
                        } else {
                            0.0
                        };
                        let got = clebsch_gordan(h(tj1), h(tm1), h(tj2), h(tm2), h(tj), h(tm));
                        cg_max_error = cg_max_error.max((got - want).abs());
                        cg_checked += 1;
                    }
                }
            }
        }
    }
    let (mut sixj_checked, mut sixj_max_error) = (0, 0.0f64);
    for tj1 in 0i32..=8 {
        for tj2 in 0..=8 {
            for tj12 in 0..=8 {
                if !triangle(tj1, tj2, tj12) {
                    continue;
                }
                for tj3 in 0..=8 {
                    for tjj in 0..=8 {
                        for tj23 in 0..=8 {
                            let want = sixj_recoupling(&mut cache, [tj1, tj2, tj12, tj3, tjj, tj23]);
                            let got = wigner6j(h(tj1), h(tj2), h(tj12), h(tj3), h(tjj), h(tj23));
                            sixj_max_error = sixj_max_error.max((got - want).abs());
                            sixj_checked += 1;
                        }
                    }
                }
            }
        }
    }
    AngularOracleReport {
        cg_checked,
        cg_max_error,
        sixj_checked,
        sixj_max_error,
    }
}
