//! Two chains with the same finite invariants: independent coin flips and
//! a symmetric two-state chain. The iterated metric separates them.

use filtlab::generators;
use filtlab::iteration::{decide_standardness, iterate, InitialMetricSpec, Semantics};
use filtlab::{Rational, Scalar};

fn main() -> filtlab::Result<()> {
    let p = Rational::ratio(3, 4);
    let levels = 12;
    let models = [
        ("bernoulli", generators::bernoulli(p.clone(), levels)?),
        ("symmetric", generators::symmetric(p, levels)?),
    ];
    for (name, m) in &models {
        for sem in [Semantics::Kantorovich, Semantics::TvRefresh] {
            let r = iterate(m, &InitialMetricSpec::DiscreteOnLevel0, levels, sem)?;
            let series: Vec<String> = r.functionals().iter().map(|x| x.to_string()).collect();
            let decision = decide_standardness(&r, 1e-3, 5)?;
            println!(
                "{name:10} {:12} {:22} {}",
                sem.name(),
                decision.name(),
                series.join(" ")
            );
        }
    }
    Ok(())
}
