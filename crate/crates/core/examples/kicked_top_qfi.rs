//! Stroboscopic α-QFI of the idealized kicked top: quadratic growth without
//! kicks, modified growth once the nonlinear kicks act.
use serf_chaos::angular::{spin_matrices, HalfInt};
use serf_chaos::kickedtop::{coherent_state, stroboscopic_orbit, variance, KickedTopParams};
use serf_chaos::metrology::{qfi, QfiMethod, StateTriple};
use serf_chaos::state::DensityMatrix;

fn main() {
    let f = HalfInt::from_int(3);
    let psi = coherent_state(f, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
    let var = variance(&psi, &spin_matrices(f).unwrap().fy);
    let (alpha, d, n_max) = (0.5, 1e-7, 40);
    println!("f = 3, alpha = {alpha}, Var(F_y) = {var}");
    println!("{:>4} {:>14} {:>14} {:>14}", "n", "k=0", "k=3", "4n^2 Var");
    let orbits = |k: f64| {
        let run = |a: f64| {
            stroboscopic_orbit(&psi, &KickedTopParams::new(f, a, k), n_max)
                .unwrap()
                .iter()
                .map(DensityMatrix::from_pure)
                .collect::<Vec<_>>()
        };
        (run(alpha - d), run(alpha), run(alpha + d))
    };
    let (free, kicked) = (orbits(0.0), orbits(3.0));
    let q = |o: &(Vec<DensityMatrix>, Vec<DensityMatrix>, Vec<DensityMatrix>), n: usize| {
        qfi(StateTriple::new(&o.0[n], &o.1[n], &o.2[n]), d, QfiMethod::Sld).unwrap()
    };
    for n in (0..=n_max).step_by(5) {
        println!("{n:>4} {:>14.4} {:>14.4} {:>14.4}", q(&free, n), q(&kicked, n), 4.0 * (n * n) as f64 * var);
    }
}
