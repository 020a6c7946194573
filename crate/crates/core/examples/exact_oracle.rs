//! Exact PNE distribution and convergence probabilities for K = 2 and K = 3.
use brlab::exact::exact_summary;

fn main() -> brlab::Result<()> {
    for k in [2, 3] {
        let s = exact_summary(k)?;
        println!("{}", s.to_json());
    }
    Ok(())
}
