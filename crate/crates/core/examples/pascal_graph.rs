//! Central measure on the Pascal graph: cotransitions and the iterated
//! functional from a two-coordinate cylinder metric.

use filtlab::generators;
use filtlab::iteration::{iterate, InitialMetricSpec, Semantics};
use filtlab::{Rational, Scalar};

fn main() -> filtlab::Result<()> {
    let m = generators::pascal::<Rational>(12)?;
    let q4 = m.cotransitions(4)?;
    println!("cotransitions from level 4 (row k: vertex (4, k)):");
    for (k, row) in q4.rows.iter().enumerate() {
        let row: Vec<String> = row.iter().map(Scalar::repr).collect();
        println!("  {k}: {}", row.join(" "));
    }

    let init = InitialMetricSpec::weighted(vec![Rational::from_int(1), Rational::from_int(1)])?;
    let r = iterate(&m, &init, 12, Semantics::Kantorovich)?;
    for l in &r.levels {
        println!("I_{:<2} = {:.5}", l.level, l.functional.to_f64());
    }
    Ok(())
}
