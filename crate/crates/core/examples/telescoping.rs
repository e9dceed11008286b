//! Passing to a subsequence of levels.

use filtlab::generators;
use filtlab::iteration::{iterate, InitialMetricSpec, Semantics};
use filtlab::{Rational, Scalar};

fn main() -> filtlab::Result<()> {
    let m = generators::symmetric(Rational::ratio(3, 4), 8)?;
    let t = m.telescope(&[1, 2, 4, 8])?;
    for k in 1..=t.horizon() {
        let rows: Vec<String> = t
            .cotransitions(k)?
            .rows
            .iter()
            .map(|r| r.iter().map(Scalar::repr).collect::<Vec<_>>().join(" "))
            .collect();
        println!("level {k}: cotransitions [{}]", rows.join(" | "));
    }
    let r = iterate(
        &t,
        &InitialMetricSpec::DiscreteOnLevel0,
        t.horizon(),
        Semantics::TvRefresh,
    )?;
    for l in &r.levels {
        println!(
            "tv distance at level {}: {}",
            l.level,
            l.distances.get(0, 1)
        );
    }
    Ok(())
}
