//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use classlab::analysis::{pred_adjusted, residual_from, three_adic_position, three_bias_table, ThreeBiasTable};
use classlab::forms::{
    class_number_bsgs, class_number_closure, enumerate_reduced, group_structure,
    group_table_oracle, Discriminant,
};
use classlab::heuristics::{
    aut_mass, aut_order, cl_probabilities, cumulative_pred, monte_carlo_table, paper_table,
    pgroup_prob, pred, prediction_constants, rank3_bound, sum_pred, GroupShape,
    PredictionConstants,
};
use classlab::lestimate::{Estimator, EstimatorParams};
use classlab::numtheory::{bessel_i0, is_prime};
use classlab::partitions::{
    attainable_summaries, cyclicity_index, enumerate_partitions, AttainableTable,
};
use classlab::survey::{completeness_certificate, enumerate_fundamental, run_shard, SurveyConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn constants() -> PredictionConstants {
    prediction_constants(&paper_table().expect("prime table"))
}

fn criterion_1() -> Outcome {
    let k = constants();
    let checks = [
        ("c1", k.c1, -0.578071, 5e-6),
        ("c2", k.c2, 0.604049, 5e-6),
        ("c3", k.c3, -0.526259, 5e-6),
        ("frakC", k.frak_c, 11.317, 1e-3),
        ("c0", k.c0, 15.0 / (PI * PI), 1e-8),
    ];
    let mut detail = Vec::new();
    for (name, got, want, tol) in checks {
        ensure((got - want).abs() <= tol, format!("{name} = {got} vs {want} ± {tol}"))?;
        detail.push(format!("{name}={got:.7}"));
    }
    Ok(detail.join(" "))
}

const PRED_TABLE: [(u64, f64); 24] = [
    (10001, 10598.0),
    (10003, 12116.0),
    (10005, 21074.0),
    (10007, 10383.0),
    (10009, 10385.0),
    (10011, 16144.0),
    (10013, 12038.0),
    (10015, 12993.0),
    (100001, 94213.0),
    (100003, 85641.0),
    (100005, 164806.0),
    (100007, 86620.0),
    (100009, 111210.0),
    (100011, 142989.0),
    (100013, 86577.0),
    (100015, 108820.0),
    (999985, 1063376.0),
    (999987, 1098842.0),
    (999989, 769673.0),
    (999991, 788871.0),
    (999993, 1093732.0),
    (999995, 911447.0),
    (999997, 730673.0),
    (999999, 1825811.0),
];

fn criterion_2() -> Outcome {
    let k = constants();
    let t = Instant::now();
    for (h, want) in PRED_TABLE {
        let got = pred(h, &k).map_err(|e| e.to_string())?;
        ensure(got.round() == want, format!("pred({h}) = {got} rounds differently from {want}"))?;
    }
    Ok(format!("24/24 exact after rounding ({:?})", t.elapsed()))
}

fn criterion_3() -> Outcome {
    let table: [(usize, u64, u64); 10] = [
        (4, 3, 5),
        (5, 3, 7),
        (6, 5, 11),
        (7, 5, 15),
        (8, 7, 22),
        (9, 7, 30),
        (10, 9, 42),
        (11, 9, 56),
        (12, 13, 77),
        (100, 4742, 190_569_292),
    ];
    let summaries = attainable_summaries(500).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    for (n, attainable, total) in table {
        let s = &summaries[n - 1];
        if s.attainable != BigUint::from(attainable) || s.total != BigUint::from(total) {
            failures.push(format!(
                "n={n}: attainable {} (c>0: {}) total {} vs {attainable}/{total}",
                s.attainable, s.positive, s.total
            ));
        }
    }
    let rec = AttainableTable::new(40);
    for n in 1..=40u32 {
        let direct = enumerate_partitions(n)
            .map_err(|e| e.to_string())?
            .iter()
            .filter(|l| cyclicity_index(l) >= 0)
            .count();
        if rec.total(n as usize).to_usize() != Some(direct) {
            failures.push(format!("recurrence differs from enumeration at n={n}"));
        }
    }
    for s in &summaries {
        let c = s.attainable.to_f64().unwrap_or(f64::INFINITY);
        if c > bessel_i0(2.0 * (s.n as f64).sqrt()) {
            failures.push(format!("Bessel bound fails at n={}", s.n));
        }
    }
    if failures.is_empty() {
        Ok("table n=4..12,100; recurrence n≤40; I0 bound n≤500".into())
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let cfg = SurveyConfig::new(10_000, 1).map_err(|e| e.to_string())?;
    let r = run_shard(&cfg).map_err(|e| e.to_string())?;
    let cert = completeness_certificate(&r, &cfg);
    let f1 = r.fh.get(&1).copied().unwrap_or(0);
    ensure(f1 == 9 && cert.complete, format!("F(1) = {f1}, complete = {}", cert.complete))?;
    let elapsed = t.elapsed();
    ensure(elapsed.as_secs_f64() < 5.0, format!("took {elapsed:?}"))?;
    Ok(format!("F(1) = 9, certified, frontier {} ({elapsed:?})", cert.frontier))
}

/// The 10⁷ survey shared by criteria 5 and 6.
fn big_survey() -> Result<classlab::survey::SurveyResult, String> {
    let t = Instant::now();
    let cfg = SurveyConfig::new(10_000_000, 49).map_err(|e| e.to_string())?;
    let r = run_shard(&cfg).map_err(|e| e.to_string())?;
    let cert = completeness_certificate(&r, &cfg);
    ensure(cert.complete, format!("not certified: {:?}", cert.reasons))?;
    println!(
        "survey |d| ≤ 1e7, h ≤ 49: certified, frontier {} [{:.1}s]",
        cert.frontier,
        t.elapsed().as_secs_f64()
    );
    Ok(r)
}

fn shape_counts(r: &classlab::survey::SurveyResult, want: &[(&str, u64)]) -> Outcome {
    let mut got = Vec::new();
    for (s, expected) in want {
        let shape: GroupShape = s.parse().map_err(|e: classlab::Error| e.to_string())?;
        let c = r.shape_count(&shape);
        ensure(c == *expected, format!("F({s}) = {c}, expected {expected}"))?;
        got.push(format!("F({s})={c}"));
    }
    Ok(got.join(" "))
}

/// Exhaustive |Aut(⊕ Z/p^{nᵢ})|: every assignment of generator images is
/// extended to all of G and kept if it is injective.
fn brute_force_aut(p: u64, parts: &[u32]) -> u64 {
    let mods: Vec<usize> = parts.iter().map(|&k| p.pow(k) as usize).collect();
    let order: usize = mods.iter().product();
    let digits = |mut x: usize| -> Vec<usize> {
        mods.iter()
            .map(|&m| {
                let r = x % m;
                x /= m;
                r
            })
            .collect()
    };
    let encode = |v: &[usize]| v.iter().zip(&mods).rev().fold(0, |acc, (&r, &m)| acc * m + r);
    let sum: Vec<usize> = (0..order * order)
        .map(|ab| {
            let (a, b) = (digits(ab / order), digits(ab % order));
            let c: Vec<usize> = a.iter().zip(&b).zip(&mods).map(|((x, y), m)| (x + y) % m).collect();
            encode(&c)
        })
        .collect();
    // admissible images of generator i: elements killed by its order
    let images: Vec<Vec<usize>> = mods
        .iter()
        .map(|&m| {
            (0..order)
                .filter(|&y| digits(y).iter().zip(&mods).all(|(&c, &mm)| (c * m) % mm == 0))
                .collect()
        })
        .collect();
    let rest: usize = images[1..].iter().map(Vec::len).product();
    images[0]
        .par_iter()
        .map(|&g0| {
            let mut seen = vec![false; order];
            let mut count = 0u64;
            for mut idx in 0..rest {
                let mut gens = vec![g0];
                for imgs in &images[1..] {
                    gens.push(imgs[idx % imgs.len()]);
                    idx /= imgs.len();
                }
                seen.iter_mut().for_each(|s| *s = false);
                // mixed-radix walk over x, keeping φ(x) incrementally
                let mut counter = vec![0usize; mods.len()];
                let mut value = 0usize;
                let injective = 'walk: loop {
                    if seen[value] {
                        break 'walk false;
                    }
                    seen[value] = true;
                    let mut i = 0;
                    loop {
                        if i == mods.len() {
                            break 'walk true;
                        }
                        counter[i] += 1;
                        value = sum[value * order + gens[i]];
                        if counter[i] < mods[i] {
                            break;
                        }
                        counter[i] = 0;
                        i += 1;
                    }
                };
                count += u64::from(injective);
            }
            count
        })
        .sum()
}

fn criterion_9() -> Outcome {
    for p in [3u64, 5, 7] {
        let pb = BigRational::from_integer(p.into());
        let mut cumulative = BigRational::zero();
        let mut product = BigRational::one();
        for n in 1..=5u32 {
            let pn: BigRational = num_traits::Pow::pow(&pb, n);
            product /= BigRational::one() - BigRational::one() / pn.clone();
            let mass = aut_mass(p, n);
            ensure(mass == product.clone() / pn, format!("Σ 1/|Aut| wrong at p={p}, n={n}"))?;
            cumulative += mass;
            ensure(
                BigRational::one() + cumulative.clone() == product,
                format!("cumulative mass wrong at p={p}, n={n}"),
            )?;
            let total: BigRational = enumerate_partitions(n)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|l| pgroup_prob(&GroupShape::new(p, l).expect("odd prime")))
                .fold(BigRational::zero(), |a, b| a + b);
            ensure(total.is_one(), format!("Σ P(G) = {total} at p={p}, n={n}"))?;
        }
    }
    let mut checked = 0;
    for (p, n_max) in [(3u64, 4u32), (5, 2)] {
        for n in 1..=n_max {
            for l in enumerate_partitions(n).map_err(|e| e.to_string())? {
                let brute = brute_force_aut(p, l.parts());
                let shape = GroupShape::new(p, l).expect("odd prime");
                let formula = aut_order(&shape);
                ensure(
                    formula == BigUint::from(brute),
                    format!("|Aut({shape})| = {formula}, brute force {brute}"),
                )?;
                checked += 1;
            }
        }
    }
    Ok(format!("mass identities p∈{{3,5,7}}, n≤5; {checked} automorphism counts"))
}

fn criterion_7() -> Outcome {
    let tight = Estimator::new(EstimatorParams::tight(100_000).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let window = |d: Discriminant| -> Result<(f64, f64), String> {
        if d.value() >= -8 {
            return Ok((1.0, 1.0));
        }
        Ok(tight.h_interval(d).map_err(|e| e.to_string())?.certified_interval())
    };
    let small = enumerate_fundamental(3, 20_000, false).map_err(|e| e.to_string())?;
    let structure_mismatches: Vec<String> = small
        .par_iter()
        .filter_map(|&d| {
            let run = || -> Result<Option<String>, String> {
                let s = group_structure(d, window(d)?).map_err(|e| e.to_string())?;
                let o = group_table_oracle(d).map_err(|e| e.to_string())?;
                Ok((s != o).then(|| format!("{d}: {s} vs {o}")))
            };
            run().unwrap_or_else(|e| Some(format!("{d}: {e}")))
        })
        .collect();
    ensure(structure_mismatches.is_empty(), structure_mismatches.join("; "))?;

    let large = enumerate_fundamental(9, 200_000, false).map_err(|e| e.to_string())?;
    let bsgs_mismatches: Vec<String> = large
        .par_iter()
        .filter_map(|&d| {
            let run = || -> Result<Option<String>, String> {
                let h = enumerate_reduced(d).map_err(|e| e.to_string())?.len() as u64;
                let (lo, hi) = window(d)?;
                let out = class_number_bsgs(d, lo, hi, 3, 0).map_err(|e| e.to_string())?;
                Ok((out.h != h).then(|| format!("{d}: BSGS {} vs {h}", out.h)))
            };
            run().unwrap_or_else(|e| Some(format!("{d}: {e}")))
        })
        .collect();
    ensure(bsgs_mismatches.is_empty(), bsgs_mismatches.join("; "))?;
    Ok(format!(
        "{} structures, {} BSGS class numbers, 0 mismatches",
        small.len(),
        large.len()
    ))
}

fn criterion_8() -> Outcome {
    let est = Estimator::new(EstimatorParams::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut qs = Vec::new();
    while qs.len() < 1000 {
        let q = rng.random_range(10_000u64..=100_000_000);
        if q % 4 == 3 && is_prime(q) {
            qs.push(q);
        }
    }
    let violations: Vec<String> = qs
        .par_iter()
        .filter_map(|&q| {
            let run = || -> Result<Option<String>, String> {
                let d = Discriminant::fundamental(-(q as i64)).map_err(|e| e.to_string())?;
                let h = if q <= 1_000_000 {
                    enumerate_reduced(d).map_err(|e| e.to_string())?.len() as u64
                } else {
                    class_number_closure(d).map_err(|e| e.to_string())?
                };
                let iv = est.h_interval(d).map_err(|e| e.to_string())?;
                Ok((!iv.contains(h)).then(|| {
                    format!("h({d}) = {h} outside [{}, {}]", iv.lower(), iv.upper())
                }))
            };
            run().unwrap_or_else(|e| Some(format!("{q}: {e}")))
        })
        .collect();
    ensure(violations.is_empty(), violations.join("; "))?;
    Ok("1000 random primes in [1e4, 1e8], 0 violations".into())
}

fn criterion_10() -> Outcome {
    let h = 1e6;
    let t = Instant::now();
    let est = cumulative_pred(h, &monte_carlo_table().map_err(|e| e.to_string())?, 100_000, 0)
        .map_err(|e| e.to_string())?;
    let main_term = 3.75 * h * h / h.ln();
    let summed = sum_pred(1_000_000, &constants());
    let r_main = est.mean / main_term;
    let r_sum = est.mean / summed;
    let detail = format!(
        "MC {:.6e} ± {:.1e}; /(15/4)H²/logH = {r_main:.4}; /Σpred = {r_sum:.4} ({:?})",
        est.mean,
        est.std_error,
        t.elapsed()
    );
    ensure((r_main - 1.0).abs() <= 0.02, format!("main-term ratio off by > 2%: {detail}"))?;
    ensure((r_sum - 1.0).abs() <= 0.05, format!("Σ pred ratio off by > 5%: {detail}"))?;
    Ok(detail)
}

fn criterion_11() -> Outcome {
    let b = rank3_bound(1e6, &paper_table().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(b <= 1e-4, format!("bound {b:e} exceeds 1e-4"))?;
    Ok(format!("rank3_bound(1e6) = {b:.3e}"))
}

fn criterion_12() -> Outcome {
    let k = constants();
    // Cohen–Lenstra-valued table: pred′ = pred
    let probs: BTreeMap<(u32, u32), f64> = (3..14u32)
        .flat_map(|kk| {
            (0..=kk).map(move |n| ((kk, n), cl_probabilities(3, n).expect("odd prime").prob_exact))
        })
        .collect();
    let cl_table = ThreeBiasTable::from_probabilities(&probs);
    let mut worst = 0.0f64;
    for h in (27..1_000_000u64).step_by(2) {
        let a = pred_adjusted(h, &k, &cl_table).map_err(|e| e.to_string())?;
        let p = pred(h, &k).map_err(|e| e.to_string())?;
        worst = worst.max(((a.value - p) / p).abs());
    }
    ensure(worst <= 1e-12, format!("max relative deviation {worst:e} under CL table"))?;

    // Data with a 3-divisibility deficit at the level of pred; mean r′ per interval
    let weight = |n: u32| 0.93f64.powi(n as i32);
    let level: f64 = (0..40)
        .map(|n| cl_probabilities(3, n).expect("odd prime").prob_exact * weight(n))
        .sum();
    let fh: BTreeMap<u64, u64> = (729..177_147u64)
        .step_by(2)
        .map(|h| {
            let p = pred(h, &k).expect("odd h");
            let n = three_adic_position(h).1;
            (h, (p * weight(n) / level).round() as u64)
        })
        .collect();
    let bias = three_bias_table(&fh);
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (&h, &obs) in &fh {
        let adj = pred_adjusted(h, &k, &bias).map_err(|e| e.to_string())?;
        if !adj.adjusted {
            continue;
        }
        let r = residual_from(obs, adj.value).map_err(|e| e.to_string())?;
        let e = sums.entry(three_adic_position(h).0).or_default();
        e.0 += r;
        e.1 += 1;
    }
    let worst_mean = sums
        .values()
        .map(|(s, n)| (s / *n as f64).abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "CL-table deviation {worst:.1e}; max interval mean of r′ = {worst_mean:.3e} over {} intervals",
        sums.len()
    );
    ensure(worst_mean <= 1e-9, detail.clone())?;
    Ok(detail)
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, run: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {detail}");
            }
        }
    };
    report("1", "prediction constants", &criterion_1);
    report("2", "pred table", &criterion_2);
    report("3", "attainable partitions", &criterion_3);
    report("4", "F(1) = 9", &criterion_4);
    let survey = big_survey();
    report("5", "n = 3 shapes at p = 3", &|| {
        shape_counts(survey.as_ref()?, &[("3:3", 88), ("3:2+1", 5), ("3:1+1+1", 0)])
    });
    report("6", "rank-two shapes", &|| {
        shape_counts(survey.as_ref()?, &[("3:1+1", 1), ("5:1+1", 2), ("7:1+1", 2)])
    });
    report("7", "oracle equivalence", &criterion_7);
    report("8", "interval containment", &criterion_8);
    report("9", "algebraic identities", &criterion_9);
    report("10", "cumulative consistency", &criterion_10);
    report("11", "rank-three bound", &criterion_11);
    report("12", "three-bias machinery", &criterion_12);
    println!("{failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
