//! Exact Kantorovich distances between small distributions, checked against
//! vertex enumeration.

use filtlab::transport::brute_force_transport;
use filtlab::{kantorovich, total_variation, Rational, Scalar, Semimetric};

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn main() -> filtlab::Result<()> {
    let alpha = vec![q(1, 2), q(1, 4), q(1, 4)];
    let beta = vec![q(0, 1), q(1, 3), q(2, 3)];

    // Points 0, 1, 3 on the line.
    let line = Semimetric::line(&[q(0, 1), q(1, 1), q(3, 1)]);
    let t = kantorovich(&alpha, &beta, &line)?;
    println!("line distance: {}", t.value);
    for (i, j, mass) in t.plan.support() {
        println!("  move {mass} from {i} to {j}");
    }
    println!(
        "vertex enumeration: {}",
        brute_force_transport(&alpha, &beta, &line)?
    );

    let discrete = kantorovich(&alpha, &beta, &Semimetric::discrete(3))?.value;
    println!(
        "discrete ground metric: {discrete} (total variation {})",
        total_variation(&alpha, &beta)?
    );

    // Same instance in floating point.
    let af: Vec<f64> = alpha.iter().map(Scalar::to_f64).collect();
    let bf: Vec<f64> = beta.iter().map(Scalar::to_f64).collect();
    let lf = Semimetric::line(&[0.0, 1.0, 3.0]);
    println!("float: {}", kantorovich(&af, &bf, &lf)?.value);
    Ok(())
}
