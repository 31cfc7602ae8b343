//! Field QFI and S_z Fisher information from three short trajectories at B - δ, B, B + δ.
use serf_chaos::dynamics::{evolve, EvolveOptions, MagnetometerParams, PhysicalConstants, PulseSchedule, SerfModel};
use serf_chaos::metrology::{precision_series, sz_povm, QfiMethod, DEFAULT_ATOM_NUMBER};

fn main() {
    let params = MagnetometerParams::default();
    let schedule = PulseSchedule::default();
    let b = params.b_field;
    let delta = 1e-2 * b;
    let opts = EvolveOptions {
        total_time: 3.0,
        snapshot_stride: 250,
        diagnostic_stride: 0,
        check_positivity: true,
    };
    let run = |field: f64| {
        let model = SerfModel::new(PhysicalConstants::cesium(), params.with_b_field(field), schedule.clone()).unwrap();
        let rho0 = model.thermal_state(params.polarization_q).unwrap();
        evolve(&model, &rho0, &opts).unwrap().trajectory
    };
    let (m, c, p) = (run(b - delta), run(b), run(b + delta));
    let s = precision_series(&m, &c, &p, delta, &sz_povm(), DEFAULT_ATOM_NUMBER, QfiMethod::Sld).unwrap();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t (s)", "QFI/t", "Fisher/t", "dB opt", "dB S_z");
    for i in 0..s.len() {
        println!(
            "{:>6.2} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            s.times[i], s.qfi_rescaled[i], s.fisher_sz_rescaled[i], s.delta_b_optimal[i], s.delta_b_sz[i]
        );
    }
}
