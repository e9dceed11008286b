//! Per-level isomorphism classes of equipped trees and their masses.

use filtlab::generators;
use filtlab::invariants::{fingerprint, finitely_isomorphic};
use filtlab::{Rational, Scalar};

fn main() -> filtlab::Result<()> {
    let p = Rational::ratio(3, 4);
    let a = generators::bernoulli(p.clone(), 8)?;
    let b = generators::symmetric(p, 8)?;
    let c = generators::bernoulli(Rational::ratio(2, 3), 8)?;
    println!(
        "bernoulli vs symmetric: {:?}",
        finitely_isomorphic(&a, &b, 8)?
    );
    println!(
        "bernoulli 3/4 vs 2/3:   {:?}",
        finitely_isomorphic(&a, &c, 8)?
    );

    let pascal = generators::pascal::<Rational>(5)?;
    for level in fingerprint(&pascal, 5)?.levels {
        let classes: Vec<String> = level
            .classes
            .values()
            .map(|c| format!("{} leaves x{} mass {}", c.leaf_count, c.members, c.mass))
            .collect();
        println!("pascal level {}: {}", level.level, classes.join("; "));
    }
    Ok(())
}
