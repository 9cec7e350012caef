use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, ToPrimitive};

use classlab::analysis::{histogram_stats, pred_adjusted, residual_from, three_bias_table};
use classlab::forms::{
    class_number_bsgs, enumerate_reduced, group_structure, group_table_oracle, Discriminant,
};
use classlab::heuristics::{
    aut_mass, paper_table, pgroup_prob, pred, predict_fg, prediction_constants, GroupShape,
    PredictionConstants,
};
use classlab::lestimate::{Estimator, EstimatorParams};
use classlab::numtheory::{is_prime, PrimeTable};
use classlab::partitions::{
    attainable_summaries, count_partitions, cyclicity_index,
    enumerate_attainable, enumerate_partitions, AttainableTable,
};
use classlab::survey::{
    completeness_certificate, enumerate_fundamental, merge, read_fh_file, read_result,
    report_missing_and_sporadic, run_shard_with_progress, write_result, Presence,
    StructurePolicy, SurveyConfig,
};

/// Class groups of imaginary quadratic fields: conjectural frequency
/// predictions for class numbers and class groups, and a GRH-conditional
/// survey of fundamental discriminants to compare them against.
#[derive(Debug, Parser)]
#[command(name = "classlab", version)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Significant digits for real-valued output.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Euler product constants 𝔠, c0 and the expansion coefficients c1, c2, c3
    /// of the random Euler product model of L(1, χ_d), truncated to N primes.
    Constants(ConstantsArgs),
    /// Predicted 𝓕(h) for odd h, the three-adjusted variant, or the predicted
    /// count of a p-group shape from the Cohen–Lenstra measure.
    Predict(PredictArgs),
    /// Counts of partitions λ of n with nonnegative cyclicity index
    /// c(λ) = Σ(1 − i)·nᵢ, which index the asymptotically attainable shapes.
    Partitions(PartitionsArgs),
    /// Scan fundamental discriminants, filter by certified class number
    /// intervals (GRH), and tabulate 𝓕(h) and 𝓕(G).
    Survey(SurveyArgs),
    /// Combine shard outputs of one survey configuration.
    Merge(MergeArgs),
    /// Classify p-group shapes of a certified survey as present, missing or
    /// sporadic (observed although c(λ) < 0).
    Report(ReportArgs),
    /// Residuals r(h) = (𝓕(h) − pred(h))/√pred(h) of an fh table as a histogram.
    Analyze(AnalyzeArgs),
    /// Cross-check the fast algorithms against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// Number of primes in the truncated Euler products.
    #[arg(long, default_value_t = 100_000)]
    primes: usize,

    /// Read constants from this file if it holds the same prime count,
    /// otherwise compute and write them there.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["h", "shape"]))]
struct PredictArgs {
    /// Odd class number h ≥ 3.
    #[arg(long)]
    h: Option<u64>,

    /// p-group shape as p:λ, e.g. 3:2+1.
    #[arg(long)]
    shape: Option<GroupShape>,

    /// Replace the Cohen–Lenstra 3-part by frequencies observed in --bias.
    #[arg(long, requires = "bias", conflicts_with = "shape")]
    adjusted: bool,

    /// fh.tsv of observed class number counts.
    #[arg(long)]
    bias: Option<PathBuf>,

    /// Constants cache file (see `constants --cache`).
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PartitionsArgs {
    #[arg(long)]
    n: usize,

    /// Counts split by the number of parts r.
    #[arg(long)]
    by_length: bool,

    /// List the attainable partitions with their cyclicity index.
    #[arg(long)]
    enumerate: bool,
}

#[derive(Debug, Args)]
struct SurveyArgs {
    /// Largest |d| scanned.
    #[arg(long)]
    max_disc: u64,

    /// Largest class number tabulated.
    #[arg(long)]
    max_h: u64,

    /// Only d = −q with q prime, plus −3, −4, −7, −8 (all odd class numbers).
    #[arg(long)]
    prime_only: bool,

    /// Shard as i/k: every k-th discriminant starting at the i-th.
    #[arg(long, default_value = "0/1", value_parser = parse_shard)]
    shard: (u64, u64),

    /// Compute the full structure for every h ≤ max-h, not only odd prime powers.
    #[arg(long)]
    all_structures: bool,

    /// Cross-check BSGS results against enumeration up to this |d|.
    #[arg(long, default_value_t = 0)]
    audit_cap: u64,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MergeArgs {
    #[arg(long)]
    out: PathBuf,

    /// Shard output directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// List shapes never observed.
    #[arg(long)]
    missing: bool,

    /// List shapes observed although c(λ) < 0.
    #[arg(long)]
    sporadic: bool,

    /// Largest n with pⁿ in the table.
    #[arg(long, default_value_t = 4)]
    n_max: u32,

    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// fh.tsv of observed class number counts.
    #[arg(long)]
    fh: PathBuf,

    #[arg(long, default_value_t = 40)]
    bins: usize,

    /// Histogram range LO:HI.
    #[arg(long, default_value = "-5:5", value_parser = parse_range)]
    range: (f64, f64),

    /// Use r′(h) against the three-adjusted prediction built from the same data.
    #[arg(long)]
    adjusted: bool,

    /// Histogram CSV destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Level::Quick)]
    level: Level,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Level {
    Quick,
    Full,
}

fn parse_shard(s: &str) -> Result<(u64, u64), String> {
    let (i, k) = s.split_once('/').ok_or("expected i/k")?;
    let i: u64 = i.parse().map_err(|_| "bad shard index")?;
    let k: u64 = k.parse().map_err(|_| "bad shard count")?;
    if k == 0 || i >= k {
        return Err(format!("shard index {i} must be below {k}"));
    }
    Ok((i, k))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let a: f64 = a.parse().map_err(|_| "bad LO")?;
    let b: f64 = b.parse().map_err(|_| "bad HI")?;
    if !(a < b) {
        return Err("LO must be below HI".into());
    }
    Ok((a, b))
}

/// x to `digits` significant digits in positional notation.
fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let digits = cli.precision;
    match cli.command {
        Command::Constants(a) => constants(a, digits),
        Command::Predict(a) => predict(a, digits),
        Command::Partitions(a) => partitions(a, digits),
        Command::Survey(a) => survey(a, cli.seed),
        Command::Merge(a) => {
            let results = a
                .inputs
                .iter()
                .map(|p| read_result(p).with_context(|| format!("reading {}", p.display())))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let merged = merge(&results)?;
            write_result(&a.out, &merged)?;
            print_summary(&merged);
            Ok(())
        }
        Command::Report(a) => report(a),
        Command::Analyze(a) => analyze(a, digits),
        Command::Verify(a) => verify(a.level, cli.seed),
    }
}

fn load_constants(primes: usize, cache: Option<&Path>) -> anyhow::Result<PredictionConstants> {
    if let Some(path) = cache {
        if path.exists() {
            let k = PredictionConstants::read_cache(path)?;
            if k.prime_count == primes {
                return Ok(k);
            }
        }
    }
    let k = prediction_constants(&PrimeTable::with_count(primes)?);
    if let Some(path) = cache {
        k.write_cache(path)?;
    }
    Ok(k)
}

fn constants(a: ConstantsArgs, digits: usize) -> anyhow::Result<()> {
    let k = load_constants(a.primes, a.cache.as_deref())?;
    if let Some(w) = &k.precision_warning {
        eprintln!("warning: {w}");
    }
    let d = digits.max(7);
    println!("primes\t{}", k.prime_count);
    println!("frakC\t{}", sig(k.frak_c, d));
    println!("c0\t{}", sig(k.c0, d.max(10)));
    println!("c1\t{}", sig(k.c1, d));
    println!("c2\t{}", sig(k.c2, d));
    println!("c3\t{}", sig(k.c3, d));
    Ok(())
}

fn predict(a: PredictArgs, digits: usize) -> anyhow::Result<()> {
    let k = load_constants(classlab::heuristics::PAPER_PRIME_COUNT, a.cache.as_deref())?;
    if let Some(shape) = a.shape {
        let prob = pgroup_prob(&shape);
        let order = shape.order().context("group order exceeds 64 bits")?;
        let fg = predict_fg(&shape, &k)?;
        println!("shape\t{shape}");
        println!("cyclicity\t{}", shape.cyclicity());
        println!("P(G)\t{prob}");
        println!("mass\t{}", aut_mass(shape.p(), shape.n()));
        println!("pred(|G|)\t{}", sig(pred(order, &k)?, digits));
        println!("F(G)\t{}", sig(fg.finite_pred, digits));
        println!("asymptotic\t{}", sig(fg.asymptotic, digits));
        return Ok(());
    }
    let h = a.h.expect("clap enforces --h or --shape");
    let value = if a.adjusted {
        let path = a.bias.expect("clap enforces --bias");
        let table = three_bias_table(&read_fh_file(&path)?);
        let adj = pred_adjusted(h, &k, &table)?;
        if !adj.adjusted {
            eprintln!("warning: h = {h} is outside the bias table; using pred(h)");
        }
        adj.value
    } else {
        pred(h, &k)?
    };
    println!("pred {}", value.round());
    println!("value {}", sig(value, digits));
    Ok(())
}

fn partitions(a: PartitionsArgs, digits: usize) -> anyhow::Result<()> {
    if a.n == 0 {
        bail!("n must be positive");
    }
    let s = attainable_summaries(a.n)?.pop().expect("n ≥ 1");
    println!("attainable {} total {}", s.attainable, s.total);
    println!("positive {}", s.positive);
    println!("ratio {}", sig(s.ratio, digits));
    println!(
        "bessel_bound {} holds {}",
        sig(s.bessel_bound, digits),
        s.bound_holds
    );
    if a.by_length {
        let table = AttainableTable::new(a.n);
        println!("r\tattainable\ttotal");
        for r in 1..=a.n {
            println!(
                "{r}\t{}\t{}",
                table.get(a.n, r),
                count_partitions(a.n, Some(r))
            );
        }
    }
    if a.enumerate {
        let n = u32::try_from(a.n)?;
        for lambda in enumerate_attainable(n)? {
            println!("{lambda}\t{}", cyclicity_index(&lambda));
        }
    }
    Ok(())
}

fn survey(a: SurveyArgs, seed: u64) -> anyhow::Result<()> {
    let mut cfg = SurveyConfig::new(a.max_disc, a.max_h)?;
    cfg.prime_only = a.prime_only;
    cfg.shard = a.shard;
    cfg.seed = seed;
    cfg.audit_cap = a.audit_cap;
    if a.all_structures {
        cfg.structure_policy = StructurePolicy::Always;
    }
    cfg.validate()?;
    eprintln!("survey {} shard {}/{}", cfg.hash(), cfg.shard.0, cfg.shard.1);
    let result = run_shard_with_progress(&cfg, |done, total| {
        eprint!("\r{done}/{total}");
        let _ = std::io::stderr().flush();
    })?;
    eprintln!();
    write_result(&a.out, &result)?;
    print_summary(&result);
    Ok(())
}

fn print_summary(r: &classlab::survey::SurveyResult) {
    let cert = completeness_certificate(r, &r.config);
    println!("config {}", r.config_hash());
    println!("scanned {}", r.scanned);
    println!("filtered {}", r.filtered);
    println!("computed {}", r.computed);
    println!("fallback {}", r.fallback_count);
    println!("quarantined {}", r.quarantine.len());
    println!("frontier {}", cert.frontier);
    println!("complete {}", cert.complete);
    for why in &cert.reasons {
        println!("# {why}");
    }
}

fn report(a: ReportArgs) -> anyhow::Result<()> {
    let result = read_result(&a.input)?;
    let report = report_missing_and_sporadic(&result, a.n_max)?;
    if !a.missing && !a.sporadic {
        print!("{}", report.render());
        return Ok(());
    }
    for row in &report.rows {
        let wanted = match row.presence {
            Presence::Missing => a.missing,
            Presence::Sporadic => a.sporadic,
            Presence::ExpectedPresent => false,
        };
        if wanted {
            println!(
                "{}\t{}\t{}\t{}\t{}",
                row.presence,
                row.shape.p(),
                row.shape.lambda(),
                row.cyclicity,
                row.count
            );
        }
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs, digits: usize) -> anyhow::Result<()> {
    let fh = read_fh_file(&a.fh)?;
    let h_top = *fh.keys().next_back().context("empty fh table")?;
    let k = prediction_constants(&paper_table()?);
    let bias = a.adjusted.then(|| three_bias_table(&fh));
    let mut values = Vec::new();
    let mut fallbacks = 0;
    for h in (3..=h_top).step_by(2) {
        let observed = fh.get(&h).copied().unwrap_or(0);
        let predicted = match &bias {
            Some(t) => {
                let adj = pred_adjusted(h, &k, t)?;
                fallbacks += usize::from(!adj.adjusted);
                adj.value
            }
            None => pred(h, &k)?,
        };
        values.push(residual_from(observed, predicted)?);
    }
    let hist = histogram_stats(&values, a.bins, a.range)?;
    fs::write(&a.out, hist.to_csv())?;
    println!("mu {}", sig(hist.mean, digits));
    println!("sigma {}", sig(hist.sigma, digits));
    println!("n {}", hist.n);
    if bias.is_some() {
        println!("unadjusted {fallbacks}");
    }
    Ok(())
}

/// Runs one named check and prints its verdict.
fn check(name: &str, outcome: anyhow::Result<String>) -> bool {
    match outcome {
        Ok(detail) => {
            println!("PASS {name}: {detail}");
            true
        }
        Err(e) => {
            println!("FAIL {name}: {e:#}");
            false
        }
    }
}

fn verify(level: Level, seed: u64) -> anyhow::Result<()> {
    let full = level == Level::Full;
    let mut ok = true;

    let struct_cap = if full { 20_000 } else { 3_000 };
    ok &= check(
        "structure-vs-table",
        (|| {
            let mut n = 0;
            for d in enumerate_fundamental(3, struct_cap, false)? {
                let h = enumerate_reduced(d)?.len() as f64;
                let s = group_structure(d, (h, h))?;
                let o = group_table_oracle(d)?;
                if s != o {
                    bail!("{d}: {s} vs {o}");
                }
                n += 1;
            }
            Ok(format!("{n} discriminants up to {struct_cap}"))
        })(),
    );

    let bsgs_cap = if full { 200_000 } else { 20_000 };
    ok &= check(
        "bsgs-vs-enumeration",
        (|| {
            let est = Estimator::new(EstimatorParams::tight(100_000)?)?;
            let mut n = 0;
            for d in enumerate_fundamental(9, bsgs_cap, false)? {
                let h = enumerate_reduced(d)?.len() as u64;
                let (lo, hi) = est.h_interval(d)?.certified_interval();
                let out = class_number_bsgs(d, lo, hi, 3, seed)?;
                if out.h != h {
                    bail!("{d}: BSGS {} vs {h}", out.h);
                }
                n += 1;
            }
            Ok(format!("{n} discriminants up to {bsgs_cap}"))
        })(),
    );

    ok &= check(
        "interval-containment",
        (|| {
            let est = Estimator::new(EstimatorParams::default())?;
            let qs: Vec<u64> = (10_007..)
                .step_by(4)
                .filter(|&q| is_prime(q))
                .take(if full { 1000 } else { 100 })
                .collect();
            for &q in &qs {
                let d = Discriminant::fundamental(-(q as i64))?;
                let h = enumerate_reduced(d)?.len() as u64;
                if !est.h_interval(d)?.contains(h) {
                    bail!("h({d}) = {h} outside its interval");
                }
            }
            Ok(format!("{} primes", qs.len()))
        })(),
    );

    let n_max = if full { 40 } else { 20 };
    ok &= check(
        "partition-recurrence",
        (|| {
            let table = AttainableTable::new(n_max);
            for n in 1..=n_max {
                let direct = enumerate_partitions(n as u32)?
                    .iter()
                    .filter(|l| cyclicity_index(l) >= 0)
                    .count();
                if table.total(n).to_usize() != Some(direct) {
                    bail!("n = {n}: {} vs {direct}", table.total(n));
                }
            }
            Ok(format!("n ≤ {n_max}"))
        })(),
    );

    ok &= check(
        "cohen-lenstra-mass",
        (|| {
            for p in [3u64, 5, 7] {
                for n in 1..=5u32 {
                    let total = enumerate_partitions(n)?
                        .into_iter()
                        .map(|l| pgroup_prob(&GroupShape::new(p, l).expect("odd prime")))
                        .reduce(|a, b| a + b)
                        .expect("n ≥ 1");
                    if !total.is_one() {
                        bail!("p = {p}, n = {n}: Σ P(G) = {total}");
                    }
                }
            }
            Ok("Σ P(G) = 1 for n ≤ 5, p ∈ {3, 5, 7}".into())
        })(),
    );

    ok &= check(
        "class-number-one",
        (|| {
            let cfg = SurveyConfig::new(10_000, 1)?;
            let r = classlab::survey::run_shard(&cfg)?;
            let count = r.fh.get(&1).copied().unwrap_or(0);
            let cert = completeness_certificate(&r, &cfg);
            if count != 9 || !cert.complete {
                bail!("F(1) = {count}, complete = {}", cert.complete);
            }
            Ok("F(1) = 9, certified".into())
        })(),
    );

    if !ok {
        bail!("verification failed");
    }
    Ok(())
}
