// Builds a blur schedule and shows how each interval maps to lattice steps.

use ade::schedule::{fo_to_sigma, DiffusionSchedule, ScheduleParams};

pub fn run_example() -> ade::Result<()> {
    let params = ScheduleParams::from_sigmas(0.5, 8.0, 6, 64, 0.06)?;
    let schedule = DiffusionSchedule::new(&params)?;
    for (k, fo) in schedule.fo.iter().enumerate() {
        println!("k={k} Fo={fo:.4e} sigma={:.3}px", fo_to_sigma(*fo, 64.0)?);
    }
    for (i, p) in schedule.plan.iter().enumerate() {
        println!("interval {i}: {} steps, tau {:.4}, rms {:.2e}", p.n_steps, p.tau, p.target_rms);
    }
    println!("total lattice steps: {}", schedule.total_lattice_steps());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
