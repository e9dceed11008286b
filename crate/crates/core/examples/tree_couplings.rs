//! Coupling distances between equipped trees under the three coupling
//! classes, with the exhaustive oracle alongside.

use filtlab::generators;
use filtlab::iteration::FunctionSpec;
use filtlab::trees::{
    brute_force_coupling_oracle, build_tree, coupling_distance, criterion_check, LeafValuation,
    TreeCouplingSemantics,
};
use filtlab::{Error, Rational, Scalar};

fn main() -> filtlab::Result<()> {
    let m = generators::symmetric(Rational::ratio(3, 4), 6)?;
    let f = LeafValuation::new(FunctionSpec::coordinate(2));
    let (a, b) = (build_tree(&m, 3, 0)?, build_tree(&m, 3, 1)?);
    for s in TreeCouplingSemantics::ALL {
        let dp = match coupling_distance(&a, &b, &f, &f, s) {
            Ok(d) => d.repr(),
            Err(Error::NotHomogeneous { .. }) => "not applicable".into(),
            Err(e) => return Err(e),
        };
        let oracle = brute_force_coupling_oracle(&a, &b, &f, &f, s)
            .map_or_else(|e| e.to_string(), |d| d.repr());
        println!("{:18} dp {dp:16} oracle {oracle}", s.name());
    }

    // Binary tree of height 2 with two leaf valuations.
    let dy = generators::dyadic_tree::<Rational>(2)?;
    let t = build_tree(&dy, 2, 0)?;
    let g = LeafValuation::new(FunctionSpec::level0(
        [1, 0, 0, 0].map(Rational::from_int).to_vec(),
    ));
    let h = LeafValuation::new(FunctionSpec::level0(
        [0, 0, 1, 1].map(Rational::from_int).to_vec(),
    ));
    println!(
        "orbit distance on the binary tree: {}",
        coupling_distance(&t, &t, &g, &h, TreeCouplingSemantics::AutomorphismOrbit)?
    );

    for n in [3, 5] {
        let r = criterion_check(
            &m,
            &FunctionSpec::coordinate(2),
            0.05,
            n,
            TreeCouplingSemantics::MarkovRecursive,
        )?;
        println!(
            "level {n}: mass below eps {} satisfied {}",
            r.pair_mass_below_eps, r.satisfied
        );
    }
    Ok(())
}
