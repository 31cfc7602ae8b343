//! Coupling coefficients and the 16-state coupled basis of the cesium ground state.
use serf_chaos::angular::{c2_coeff, clebsch_gordan, coupled_space, o_coeff, wigner6j, HalfInt};

fn main() {
    let h = HalfInt::from_twice;
    let i = HalfInt::from_int;
    println!("<7/2 7/2; 1/2 -1/2 | 4 3> = {:.6}", clebsch_gordan(h(7), h(7), h(1), h(-1), i(4), i(3)));
    println!("<7/2 7/2; 1/2 -1/2 | 3 3> = {:.6}", clebsch_gordan(h(7), h(7), h(1), h(-1), i(3), i(3)));
    println!("{{3 7/2 1/2; 1/2 1 4}} = {:.6}", wigner6j(i(3), h(7), h(1), h(1), i(1), i(4)));

    println!("\nf  f'   o_ff'      C2_f'f");
    for f in [i(3), i(4)] {
        for fp in [i(3), i(4)] {
            println!("{f}  {fp}  {:+.6}  {:+.6}", o_coeff(f, fp).unwrap(), c2_coeff(fp, f).unwrap());
        }
    }

    let sp = coupled_space();
    let f2 = &sp.f[0] * &sp.f[0] + &sp.f[1] * &sp.f[1] + &sp.f[2] * &sp.f[2];
    println!("\ncoupled basis (dimension {}):", sp.dim);
    for (k, (f, m)) in sp.basis.iter().enumerate() {
        println!("  {k:2}: |f={f}, m={m:>4}>  F^2 = {:.1}  K.S = {:+.2}", f2[(k, k)].re, sp.k_dot_s[(k, k)].re);
    }
}
