//! Rank-2 light-shift coefficients, the Doppler grid and the resulting
//! effective kick strength of the default pulse.
use serf_chaos::dynamics::SerfModel;

fn main() {
    let model = SerfModel::cesium_default();
    let c2 = model.c2_table();
    println!("C2 (rows f = 3, 4; columns f' = 3, 4): {c2:?}");
    println!("Doppler grid: {} nodes", model.grid.len());
    for (shift, w) in model.grid.iter() {
        println!("  {:+10.2} MHz  weight {w:.5}", shift / (2.0 * std::f64::consts::PI * 1e6));
    }
    let h = model.light_hamiltonian(0.0);
    let diag: Vec<String> = (0..16).map(|k| format!("{:+.3e}", h[(k, k)].re)).collect();
    println!("diag H_L at zero Doppler shift (rad/s): {}", diag.join(" "));
    println!("effective kick strength k = {:.4e}", model.effective_kick_strength());
}
