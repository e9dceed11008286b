//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance`. The process exits nonzero when a
//! criterion fails, except for those listed in `KNOWN_FAILURES`, whose
//! literal statement is false and which are reported as FAIL regardless.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use filtlab::generators;
use filtlab::invariants::{fingerprint, finitely_isomorphic};
use filtlab::iteration::{iterate, FunctionSpec, InitialMetricSpec, Semantics};
use filtlab::shadow::level_law;
use filtlab::transport::{brute_force_transport, kantorovich};
use filtlab::trees::{
    brute_force_coupling_oracle, build_tree, coupling_distance, LeafValuation, TreeBuilder,
    TreeCouplingSemantics,
};
use filtlab::{Rational, Scalar, Semimetric};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Criteria whose literal statement does not hold; see the README.
const KNOWN_FAILURES: &[&str] = &["AC2"];

type Check = Result<String, String>;

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn pow(x: &Rational, n: usize) -> Rational {
    (0..n).fold(q(1, 1), |acc, _| acc * x.clone())
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn ac1() -> Check {
    let start = Instant::now();
    let mut count = 0;
    let grid: Vec<Rational> = (0..=6).map(|i| q(i, 6)).collect();
    for a in &grid {
        for b in &grid {
            for d in [q(0, 1), q(1, 3), q(1, 1), q(5, 2)] {
                let ground = Semimetric::new(
                    Array2::from_shape_vec((2, 2), vec![q(0, 1), d.clone(), d, q(0, 1)]).unwrap(),
                )
                .map_err(err)?;
                let alpha = vec![a.clone(), q(1, 1) - a.clone()];
                let beta = vec![b.clone(), q(1, 1) - b.clone()];
                let fast = kantorovich(&alpha, &beta, &ground).map_err(err)?.value;
                let slow = brute_force_transport(&alpha, &beta, &ground).map_err(err)?;
                ensure(
                    fast == slow,
                    format!("2x2 {alpha:?} {beta:?}: {fast} != {slow}"),
                )?;
                count += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..200 {
        let n = 3 + i % 2;
        let ground = generators::random_metric::<Rational, _>(&mut rng, n, 9);
        let alpha = generators::random_distribution::<Rational, _>(&mut rng, n, 12);
        let beta = generators::random_distribution::<Rational, _>(&mut rng, n, 12);
        let t = kantorovich(&alpha, &beta, &ground).map_err(err)?;
        let slow = brute_force_transport(&alpha, &beta, &ground).map_err(err)?;
        ensure(
            t.value == slow,
            format!("instance {i}: {} != {slow}", t.value),
        )?;
        ensure(
            t.plan.is_consistent(),
            format!("instance {i}: plan marginals"),
        )?;
        count += 1;
    }
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(5),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "{count} instances exact, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn ac2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mono, mut literal, mut reverse, mut plan, mut oracle, mut equal) = (0, 0, 0, 0, 0, 0);
    let total = 500;
    for _ in 0..total {
        let n = rng.gen_range(2..=4);
        let alpha = generators::random_distribution::<Rational, _>(&mut rng, n, 10);
        let beta = generators::random_distribution::<Rational, _>(&mut rng, n, 10);
        let d1 = generators::random_metric::<Rational, _>(&mut rng, n, 6);
        let d2 = generators::random_metric::<Rational, _>(&mut rng, n, 6);
        let k1 = kantorovich(&alpha, &beta, &d1).map_err(err)?.value;
        let k2 = kantorovich(&alpha, &beta, &d2).map_err(err)?.value;

        // rho = d1 <= k * rho' with rho' = (d1 + d2) / k.
        let k = q(rng.gen_range(1..=5), rng.gen_range(1..=3));
        let inv = q(1, 1) / k.clone();
        let upper = d1.combine(&inv, &d2, &inv).map_err(err)?;
        let ku = kantorovich(&alpha, &beta, &upper).map_err(err)?.value;
        mono += usize::from(k1 <= k.clone() * ku);

        let (a, b) = (
            q(rng.gen_range(1..=4), rng.gen_range(1..=4)),
            q(rng.gen_range(1..=4), rng.gen_range(1..=4)),
        );
        let mixed = d1.combine(&a, &d2, &b).map_err(err)?;
        let t = kantorovich(&alpha, &beta, &mixed).map_err(err)?;
        let split = a.clone() * k1 + b.clone() * k2;
        literal += usize::from(t.value <= split);
        reverse += usize::from(t.value >= split);
        equal += usize::from(t.value == split);
        let on_plan = a * t.plan.cost(d1.matrix()) + b * t.plan.cost(d2.matrix());
        plan += usize::from(on_plan == t.value);
        oracle +=
            usize::from(brute_force_transport(&alpha, &beta, &mixed).map_err(err)? == t.value);
    }
    let detail = format!(
        "monotone {mono}/{total}; value(a*d1+b*d2) <= a*value(d1)+b*value(d2) on {literal}/{total}; \
         reverse inequality on {reverse}/{total}; equality of values on {equal}/{total}; \
         linear on the common optimal plan {plan}/{total}; brute-force oracle agrees {oracle}/{total}"
    );
    if mono == total && reverse == total && plan == total && oracle == total && literal == total {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac3() -> Check {
    let m = generators::bernoulli(q(3, 4), 12).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut inits = vec![InitialMetricSpec::DiscreteOnLevel0];
    for depth in 1..=3 {
        let weights: Vec<Rational> = (0..depth)
            .map(|_| q(rng.gen_range(0..=5), rng.gen_range(1..=3)))
            .collect();
        inits.push(InitialMetricSpec::weighted(weights).map_err(err)?);
        inits.push(InitialMetricSpec::weighted(vec![q(1, 1); depth]).map_err(err)?);
        let paths = (0..1usize << depth)
            .map(|bits| (0..depth).map(|i| (bits >> i) & 1).collect::<Vec<_>>());
        let table: Vec<(Vec<usize>, Rational)> =
            paths.map(|p| (p, q(rng.gen_range(0..=7), 1))).collect();
        inits.push(InitialMetricSpec::FromFunction(
            FunctionSpec::from_table(depth, table).map_err(err)?,
        ));
    }
    let mut checked = 0;
    for init in &inits {
        let r = iterate(&m, init, 12, Semantics::Kantorovich).map_err(err)?;
        for l in &r.levels {
            ensure(
                l.functional == q(0, 1),
                format!("{}: I_{} = {}", init.describe(), l.level, l.functional),
            )?;
            checked += 1;
        }
    }
    Ok(format!(
        "I_n = 0 exactly for {} initial semimetrics of depth <= 3 ({checked} levels up to 12)",
        inits.len()
    ))
}

fn ac4() -> Check {
    let (p, pq) = (q(3, 4), q(1, 2));
    let m = generators::symmetric(p, 32).map_err(err)?;
    let init = InitialMetricSpec::DiscreteOnLevel0;
    let tv = iterate(&m, &init, 32, Semantics::TvRefresh).map_err(err)?;
    let kt = iterate(&m, &init, 32, Semantics::Kantorovich).map_err(err)?;
    for n in 1..=32 {
        let a = tv.level(n).unwrap().distances.get(0, 1);
        ensure(*a == pq, format!("tv_refresh d_{n}(0,1) = {a}"))?;
        let b = kt.level(n).unwrap().distances.get(0, 1);
        ensure(*b == pow(&pq, n), format!("kantorovich d_{n}(0,1) = {b}"))?;
    }
    let f = LeafValuation::new(FunctionSpec::coordinate(2));
    for n in 1..=3 {
        let (x, y) = (
            build_tree(&m, n, 0).map_err(err)?,
            build_tree(&m, n, 1).map_err(err)?,
        );
        let o = brute_force_coupling_oracle(&x, &y, &f, &f, TreeCouplingSemantics::MarkovRecursive)
            .map_err(err)?;
        ensure(o == pow(&pq, n), format!("oracle at {n}: {o}"))?;
    }
    let out = Command::new(env!("CARGO_BIN_EXE_filtlab"))
        .args(["analyze", &data("symmetric.json"), "--levels", "32"])
        .output()
        .map_err(err)?;
    ensure(out.status.success(), "analyze failed")?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(err)?;
    let series = report["series"].as_array().ok_or("no series")?;
    let names: Vec<&str> = series
        .iter()
        .filter_map(|s| s["semantics"].as_str())
        .collect();
    ensure(
        names == ["kantorovich", "tv_refresh"],
        format!("series {names:?}"),
    )?;
    ensure(
        series
            .iter()
            .all(|s| s["levels"].as_array().map_or(0, Vec::len) == 32),
        "series length",
    )?;
    ensure(
        report["discrepancy"]["note"].is_string(),
        "missing discrepancy note",
    )?;
    Ok("tv_refresh d_n = 1/2 and kantorovich d_n = 2^-n for n <= 32; oracle agrees for n <= 3; both series and note in report".into())
}

fn ac5() -> Check {
    let start = Instant::now();
    let m = generators::symmetric(q(3, 4), 8).map_err(err)?;
    let r = iterate(
        &m,
        &InitialMetricSpec::DiscreteOnLevel0,
        8,
        Semantics::TvRefresh,
    )
    .map_err(err)?;
    let (_, law) = level_law(&m, &r, 8, 2, 10_000, 0).map_err(err)?;
    let exact = law.exact.clone().ok_or("no exact law")?;
    ensure(
        exact == vec![(q(0, 1), q(1, 2)), (q(1, 2), q(1, 2))],
        format!("exact law {exact:?}"),
    )?;
    let tv = law.tv_to_exact.ok_or("no tv")?;
    ensure(tv < 0.02, format!("tv {tv}"))?;
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "exact law (1/2, 1/2); empirical tv {tv:.4}; {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn ac6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pairs = 0;
    for i in 0..50 {
        let levels = rng.gen_range(1..=6);
        let m = generators::random_explicit::<Rational, _>(&mut rng, levels, 4, 6).map_err(err)?;
        let f = generators::random_level0_function(&mut rng, &m, 5);
        let r = iterate(
            &m,
            &InitialMetricSpec::FromFunction(f.clone()),
            levels,
            Semantics::Kantorovich,
        )
        .map_err(err)?;
        let val = LeafValuation::new(f);
        let mut builder = TreeBuilder::new(&m);
        for n in 1..=levels {
            let trees = builder.level(n).map_err(err)?;
            let d = &r.level(n).ok_or("missing level")?.distances;
            for a in 0..trees.len() {
                for b in a..trees.len() {
                    let c = coupling_distance(
                        &trees[a],
                        &trees[b],
                        &val,
                        &val,
                        TreeCouplingSemantics::MarkovRecursive,
                    )
                    .map_err(err)?;
                    ensure(
                        &c == d.get(a, b),
                        format!("model {i} level {n} ({a},{b}): {c} != {}", d.get(a, b)),
                    )?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("50 models, {pairs} state pairs equal exactly"))
}

/// Leaf permutations of the complete binary tree of height `h`, one per
/// choice of swapping or not at each internal node.
fn binary_automorphisms(h: usize) -> Vec<Vec<usize>> {
    let internal = (1usize << h) - 1;
    (0..1usize << internal)
        .map(|flips| {
            (0..1usize << h)
                .map(|leaf| {
                    // Walk from the root; bit `h-1-d` of the leaf index picks the child at depth d.
                    let (mut node, mut image) = (0usize, 0usize);
                    for d in 0..h {
                        let bit = (leaf >> (h - 1 - d)) & 1;
                        let out = bit ^ ((flips >> node) & 1);
                        image = (image << 1) | out;
                        node = 2 * node + 1 + bit;
                    }
                    image
                })
                .collect()
        })
        .collect()
}

fn ac7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for h in 1..=3usize {
        let leaves = 1usize << h;
        let m = generators::dyadic_tree::<Rational>(h).map_err(err)?;
        let t = build_tree(&m, h, 0).map_err(err)?;
        let autos = binary_automorphisms(h);
        ensure(autos.len() == 1 << (leaves - 1), "automorphism count")?;
        let valuation = |bits: usize| -> Vec<Rational> {
            (0..leaves)
                .map(|i| q(((bits >> i) & 1) as i64, 1))
                .collect()
        };
        let cases: Vec<(usize, usize)> = if h < 3 {
            (0..1usize << leaves)
                .flat_map(|x| (0..1usize << leaves).map(move |y| (x, y)))
                .collect()
        } else {
            (0..1000)
                .map(|_| {
                    (
                        rng.gen_range(0..1usize << leaves),
                        rng.gen_range(0..1usize << leaves),
                    )
                })
                .collect()
        };
        for (x, y) in cases {
            let (fx, fy) = (valuation(x), valuation(y));
            let enumerated = autos
                .iter()
                .map(|s| {
                    let diff = (0..leaves).filter(|&i| fx[i] != fy[s[i]]).count();
                    q(diff as i64, leaves as i64)
                })
                .min()
                .unwrap();
            let (lx, ly) = (
                LeafValuation::new(FunctionSpec::level0(fx)),
                LeafValuation::new(FunctionSpec::level0(fy)),
            );
            let dp = coupling_distance(&t, &t, &lx, &ly, TreeCouplingSemantics::AutomorphismOrbit)
                .map_err(err)?;
            ensure(
                dp == enumerated,
                format!("height {h} valuations {x:b}/{y:b}: {dp} != {enumerated}"),
            )?;
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} valuation pairs over heights 1..3 equal exhaustive enumeration"
    ))
}

fn ac8() -> Check {
    let a = generators::bernoulli(q(3, 4), 8).map_err(err)?;
    let b = generators::symmetric(q(3, 4), 8).map_err(err)?;
    let (fa, fb) = (
        fingerprint(&a, 8).map_err(err)?,
        fingerprint(&b, 8).map_err(err)?,
    );
    ensure(fa == fb, "example pair fingerprints differ")?;
    let c = generators::bernoulli(q(2, 3), 8).map_err(err)?;
    let cmp = finitely_isomorphic(&a, &c, 8).map_err(err)?;
    ensure(cmp.first_mismatch == Some(1), format!("{cmp:?}"))?;
    Ok("example pair identical on levels 1..8; Bernoulli 3/4 vs 2/3 mismatch at level 1".into())
}

/// Number of monotone lattice paths from (0, 0) to (n, k), by enumeration
/// of all `2^n` step sequences.
fn path_count(n: usize, k: usize) -> i64 {
    (0..1u32 << n)
        .filter(|s| s.count_ones() as usize == k)
        .count() as i64
}

fn ac9() -> Check {
    let m = generators::pascal::<Rational>(12).map_err(err)?;
    for n in 1..=6usize {
        let cot = m.cotransitions(n).map_err(err)?;
        for (a, row) in cot.rows.iter().enumerate() {
            let k = m.labels(n)[a];
            for (c, value) in row.iter().enumerate() {
                let j = m.labels(n - 1)[c];
                let edge = j == k || j + 1 == k;
                let enumerated = if edge {
                    q(path_count(n - 1, j), path_count(n, k))
                } else {
                    q(0, 1)
                };
                let closed = if j + 1 == k {
                    q(k as i64, n as i64)
                } else if j == k {
                    q((n - k) as i64, n as i64)
                } else {
                    q(0, 1)
                };
                ensure(
                    *value == enumerated && enumerated == closed,
                    format!("Q_{n}(({n},{k}),({},{j})) = {value}", n - 1),
                )?;
            }
        }
    }
    let mut summary = Vec::new();
    for weights in [
        vec![q(1, 1), q(1, 1)],
        vec![q(1, 1), q(1, 1), q(1, 1)],
        vec![q(1, 1), q(1, 2), q(1, 4)],
    ] {
        let init = InitialMetricSpec::weighted(weights).map_err(err)?;
        let f = iterate(&m, &init, 12, Semantics::Kantorovich)
            .map_err(err)?
            .functionals();
        ensure(
            f.windows(2).all(|w| w[1] <= w[0]),
            format!("{}: increasing step in {f:?}", init.describe()),
        )?;
        ensure(
            f.iter().all(|x| *x > q(0, 1)),
            format!("{}: vanishing", init.describe()),
        )?;
        summary.push(format!(
            "{} I_12 = {:.4}",
            init.describe(),
            f.last().unwrap().to_f64()
        ));
    }
    Ok(format!(
        "cotransitions match k/n and path enumeration for n <= 6; I_n nonincreasing to 12 ({})",
        summary.join(", ")
    ))
}

fn run_cli(
    args: &[&str],
    threads: Option<usize>,
) -> Result<(Vec<u8>, Vec<(String, Vec<u8>)>), String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_filtlab"));
    cmd.args(["--seed", "11", "--out"]).arg(dir.path());
    if let Some(t) = threads {
        cmd.args(["--threads", &t.to_string()]);
    }
    let out = cmd.args(args).output().map_err(err)?;
    ensure(
        out.status.success(),
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)),
    )?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
        .map_err(err)?
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    Ok((out.stdout, files))
}

fn ac10() -> Check {
    let sym = data("symmetric.json");
    let bern = data("bernoulli.json");
    let pascal = data("pascal.json");
    let commands: Vec<Vec<&str>> = vec![
        vec!["analyze", &sym, "--levels", "16"],
        vec![
            "analyze",
            &pascal,
            "--levels",
            "10",
            "--init",
            "cylinder:1,1",
        ],
        vec!["criterion", &sym, "--level", "3", "--oracle"],
        vec!["invariants", &bern, &sym, "--levels", "8"],
        vec![
            "shadow",
            &sym,
            "--level",
            "8",
            "--semantics",
            "tv-refresh",
            "--matrix-size",
            "3",
            "--stabilize",
            "2,4,6,8",
        ],
        vec!["shadow", &pascal, "--level", "10", "--float"],
        vec!["telescope", &sym, "--schedule", "1,2,4,8"],
    ];
    let max = std::thread::available_parallelism()
        .map_or(8, |n| n.get())
        .max(2)
        * 4;
    for args in &commands {
        let reference = run_cli(args, None)?;
        ensure(
            !reference.0.is_empty() && !reference.1.is_empty(),
            format!("{args:?}: empty output"),
        )?;
        for threads in [None, Some(1), Some(max)] {
            let again = run_cli(args, threads)?;
            ensure(
                again == reference,
                format!("{args:?} with threads {threads:?} differs"),
            )?;
        }
    }
    Ok(format!(
        "{} commands byte-identical across repeats, 1 thread and {max} threads",
        commands.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    let mut unexpected = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("{name} PASS {detail}"),
            Err(detail) => {
                let known = KNOWN_FAILURES.contains(&name);
                println!(
                    "{name} FAIL {detail}{}",
                    if known {
                        " (known: statement does not hold)"
                    } else {
                        ""
                    }
                );
                unexpected += usize::from(!known);
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
