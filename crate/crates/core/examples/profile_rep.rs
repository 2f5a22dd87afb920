use std::time::Instant;
use rank_rmt::corr::RankedData;
use rank_rmt::ranks::TiePolicy;
use rank_rmt::sim::{gen_null, NullModel};

fn main() {
    let (n, p) = (400usize, 200usize);
    let data = gen_null(NullModel::Normal, n, p, 1).unwrap();
    let t0 = Instant::now();
    let ranked = RankedData::new(&data, TiePolicy::Strict).unwrap();
    println!("ranking: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let rho = ranked.spearman();
    println!("spearman (S'S): {:?}", t0.elapsed());
    let t0 = Instant::now();
    let k = ranked.kendall();
    println!("kendall: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let tilde = rank_rmt::corr::improved_from_parts(&rho, &k).unwrap();
    println!("improved: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = rho.trace_square();
    let _ = tilde.trace_square();
    println!("trace_square x2: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = rho.log_det_cholesky().unwrap();
    let _ = tilde.log_det_cholesky().unwrap();
    println!("cholesky logdet x2: {:?}", t0.elapsed());
}
