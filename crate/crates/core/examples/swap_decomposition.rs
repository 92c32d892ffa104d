//! Literal Bell-basis decomposition of |ξ⟩_AC ⊗ |η⟩_C'B.
//!
//! cargo run --example swap_decomposition -- 0.8 0.3

use eswap::measures::concurrence_pure;
use eswap::qstate::PureState;
use eswap::swap::decompose;

fn main() -> eswap::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (p, q) = (args.first().copied().unwrap_or(0.8), args.get(1).copied().unwrap_or(0.3));
    let xi = PureState::from_real(&[p.sqrt(), 0.0, 0.0, (1.0 - p).sqrt()])?;
    let eta = PureState::from_real(&[q.sqrt(), 0.0, 0.0, (1.0 - q).sqrt()])?;

    let swap = decompose(&xi, &eta)?;
    println!("p = {p}, q = {q}");
    for b in &swap.branches {
        let e = b.post_concurrence.map_or("absent".to_string(), |e| format!("{e:.10}"));
        println!("  {:<3} Pr = {:.6}  E(AB) = {e}", b.outcome.to_string(), b.probability);
    }
    println!(
        "  <E> = {:.10}, E(xi) E(eta) = {:.10}",
        swap.averaged_concurrence,
        concurrence_pure(&xi)? * concurrence_pure(&eta)?
    );
    Ok(())
}
