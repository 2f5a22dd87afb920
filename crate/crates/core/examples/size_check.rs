use rank_rmt::independence::TestId;
use rank_rmt::sim::{run_experiment, ExperimentConfig, Model, NullModel};

fn main() {
    for &(n, p) in &[(100usize, 50usize), (200, 100), (400, 200)] {
        let mut cfg = ExperimentConfig::new(format!("normal-{n}x{p}"), n, p, Model::Null(NullModel::Normal));
        cfg.reps = 1000;
        cfg.tests = vec![TestId::RhoL2, TestId::RhoLog, TestId::IrhoL2, TestId::IrhoLog];
        cfg.master_seed = 20240501;
        let r = run_experiment(&cfg).unwrap();
        print!("n={n} p={p}: ");
        for t in &r.tests {
            print!("{}={:.3} ", t.test_id.name(), t.reject_rate.unwrap());
        }
        println!("({:.1}s)", r.seconds);
    }
}
