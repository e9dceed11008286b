//! Law of the distance between two random points of a level, sampled and
//! exact, and how it moves across levels.

use filtlab::generators;
use filtlab::iteration::{iterate, InitialMetricSpec, Semantics};
use filtlab::shadow::{level_law, sampling_tolerance, shadow_stabilization};
use filtlab::{Rational, Scalar};

fn main() -> filtlab::Result<()> {
    let m = generators::symmetric(Rational::ratio(3, 4), 8)?;
    let init = InitialMetricSpec::DiscreteOnLevel0;
    let r = iterate(&m, &init, 8, Semantics::TvRefresh)?;
    let (_, law) = level_law(&m, &r, 8, 2, 10_000, 0)?;
    println!("empirical {:?}", law.empirical.as_f64());
    if let Some(exact) = &law.exact {
        let exact: Vec<String> = exact.iter().map(|(v, w)| format!("{v}: {w}")).collect();
        println!("exact     {}", exact.join(", "));
    }
    if let Some(tv) = law.tv_to_exact {
        println!("tv        {tv:.4}");
    }

    let tol = sampling_tolerance(5000);
    for sem in [Semantics::TvRefresh, Semantics::Kantorovich] {
        let s = shadow_stabilization(&m, &init, sem, 2, 5000, &[2, 4, 6, 8], 1, tol)?;
        println!(
            "{}: successive {:?} stabilized {}",
            sem.name(),
            s.successive,
            s.stabilized
        );
    }
    Ok(())
}
