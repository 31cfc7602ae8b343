//! A short kicked magnetometer trajectory with per-period diagnostics.
use serf_chaos::dynamics::{evolve, EvolveOptions, SerfModel};

fn main() {
    let model = SerfModel::cesium_default();
    println!("Omega_Lar = {:.3e} rad/s, Rabi frequency = {:.3e} rad/s", model.omega_larmor(), model.omega_rabi());
    let rho0 = model.thermal_state(model.params.polarization_q).unwrap();
    let opts = EvolveOptions {
        total_time: 2.0,
        snapshot_stride: 500,
        diagnostic_stride: 250,
        check_positivity: true,
    };
    let run = evolve(&model, &rho0, &opts).unwrap();
    for line in &run.diagnostics {
        println!("{line}");
    }
    println!("snapshots at t = {:?}", run.trajectory.times);
    println!("{:#?}", run.stats);
}
