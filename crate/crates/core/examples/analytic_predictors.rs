//! Branch concurrences predicted from the local predictability and
//! coherence of the measured qubits, checked against the decomposition.
//!
//! cargo run --example analytic_predictors

use eswap::qstate::haar_random_pure;
use eswap::swap::{predict_and_verify, BellOutcome};

fn main() -> eswap::Result<()> {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let xi = haar_random_pure(2, 2 * seed);
        let eta = haar_random_pure(2, 2 * seed + 1);
        let r = predict_and_verify(&xi, &eta)?;
        worst = worst.max(r.max_deviation);
        if seed < 3 {
            let l = r.local;
            println!(
                "seed {seed}: P_C = {:.3} C_C = {:.3} P_C' = {:.3} C_C' = {:.3} sign = {:?}",
                l.p_c, l.c_c, l.p_cp, l.c_cp, r.prediction.hemisphere_sign
            );
            for o in BellOutcome::ALL {
                println!(
                    "    {:<3} predicted {:.10}  oracle {:.10}",
                    o.to_string(),
                    r.prediction.get(o).unwrap_or(f64::NAN),
                    r.oracle.concurrence(o).unwrap_or(f64::NAN)
                );
            }
        }
    }
    println!("max |predicted - oracle| over 200 random pairs: {worst:.2e}");
    Ok(())
}
