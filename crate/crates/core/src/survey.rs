//! Sharded scan of fundamental discriminants tabulating 𝓕(h) and 𝓕(G).
//!
//! Each discriminant passes a cheap certified interval for h(d); those whose
//! interval can still reach [1, h_max] get a tight interval, then an exact h
//! by enumeration or BSGS plus probe certification, then (for odd prime powers)
//! the full group structure. All completeness claims are conditional on GRH.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forms::{
    class_number_certified, enumerate_reduced, group_table_oracle, structure_with_order,
    ClassGroupStructure, Discriminant, StructureConfig,
};
use crate::heuristics::GroupShape;
use crate::lestimate::{grh_floor, Estimator, EstimatorParams, MIN_X2};
use crate::numtheory::{factorize, is_prime, sieve_primes_segmented, DEFAULT_SEGMENT_LEN};
use crate::partitions::{cyclicity_index, enumerate_partitions, Partition};

/// Fundamental discriminants below −8 whose class number is odd without −d
/// being prime.
pub const SPECIAL_DISCRIMINANTS: [i64; 4] = [-3, -4, -7, -8];

/// Largest |d| accepted for a non-prime-only scan (flat squarefree sieve).
pub const FULL_SCAN_CAP: u64 = 1_000_000_000;

/// Discriminants handed to the worker pool at a time.
const CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructurePolicy {
    Always,
    OddPrimePowerOnly,
}

impl StructurePolicy {
    fn as_str(self) -> &'static str {
        match self {
            StructurePolicy::Always => "always",
            StructurePolicy::OddPrimePowerOnly => "odd-prime-power-only",
        }
    }
}

impl std::str::FromStr for StructurePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "always" => Ok(StructurePolicy::Always),
            "odd-prime-power-only" => Ok(StructurePolicy::OddPrimePowerOnly),
            _ => Err(Error::Domain(format!("unknown structure policy {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyConfig {
    pub max_abs_disc: u64,
    pub h_max: u64,
    pub prime_only: bool,
    /// First-stage filter.
    pub estimator: EstimatorParams,
    /// Second-stage interval for survivors; its window seeds BSGS.
    pub window_estimator: EstimatorParams,
    pub probe_order: usize,
    pub probe_exponent: usize,
    pub structure_policy: StructurePolicy,
    /// (index, total): this shard takes every total-th discriminant.
    pub shard: (u64, u64),
    pub seed: u64,
    /// h by direct enumeration of reduced forms at or below this |d|.
    pub enumeration_cap: u64,
    /// BSGS results at or below this |d| are cross-checked against enumeration
    /// and the table oracle.
    pub audit_cap: u64,
    /// Width of the top band, as a fraction of max_abs_disc, that must be
    /// free of intervals reaching [1, h_max].
    pub guard_fraction: f64,
    pub record_witnesses: bool,
}

impl SurveyConfig {
    pub fn new(max_abs_disc: u64, h_max: u64) -> Result<Self> {
        let cfg = Self {
            max_abs_disc,
            h_max,
            prime_only: true,
            estimator: EstimatorParams::default(),
            window_estimator: EstimatorParams::tight(MIN_X2)?,
            probe_order: 3,
            probe_exponent: 12,
            structure_policy: StructurePolicy::OddPrimePowerOnly,
            shard: (0, 1),
            seed: 0,
            enumeration_cap: 10_000,
            audit_cap: 0,
            guard_fraction: 0.1,
            record_witnesses: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_abs_disc < 163 {
            return Err(Error::Domain(format!(
                "max_abs_disc must be at least 163, got {}",
                self.max_abs_disc
            )));
        }
        if self.h_max < 1 {
            return Err(Error::Domain("h_max must be at least 1".into()));
        }
        let (index, total) = self.shard;
        if total == 0 || index >= total {
            return Err(Error::Domain(format!("invalid shard {index}/{total}")));
        }
        if self.probe_order == 0 || self.probe_exponent == 0 {
            return Err(Error::Domain("probe counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.guard_fraction) {
            return Err(Error::Domain(format!(
                "guard fraction {} outside [0, 1)",
                self.guard_fraction
            )));
        }
        if !self.prime_only && self.max_abs_disc > FULL_SCAN_CAP {
            return Err(Error::Resource(format!(
                "non-prime-only scans are capped at |d| ≤ {FULL_SCAN_CAP}"
            )));
        }
        Ok(())
    }

    /// Stable text form of every setting except the shard index.
    pub fn canonical(&self) -> String {
        format!(
            "max_abs_disc={};h_max={};prime_only={};x1={};x2={};window_x1={};window_x2={};\
             probe_order={};probe_exponent={};structure_policy={};shard_total={};seed={};\
             enumeration_cap={};audit_cap={};guard_fraction={};record_witnesses={}",
            self.max_abs_disc,
            self.h_max,
            self.prime_only,
            self.estimator.x1(),
            self.estimator.x2(),
            self.window_estimator.x1(),
            self.window_estimator.x2(),
            self.probe_order,
            self.probe_exponent,
            self.structure_policy.as_str(),
            self.shard.1,
            self.seed,
            self.enumeration_cap,
            self.audit_cap,
            self.guard_fraction,
            self.record_witnesses,
        )
    }

    /// Inverse of [`SurveyConfig::canonical`]; the shard index is set to `index`.
    pub fn from_canonical(s: &str, index: u64) -> Result<Self> {
        let fields: BTreeMap<&str, &str> = s
            .split(';')
            .map(|kv| {
                kv.split_once('=')
                    .ok_or_else(|| Error::Domain(format!("bad config field {kv:?}")))
            })
            .collect::<Result<_>>()?;
        fn get<T: std::str::FromStr>(f: &BTreeMap<&str, &str>, key: &str) -> Result<T> {
            f.get(key)
                .ok_or_else(|| Error::Domain(format!("config is missing {key}")))?
                .parse()
                .map_err(|_| Error::Domain(format!("config field {key} is malformed")))
        }
        let cfg = Self {
            max_abs_disc: get(&fields, "max_abs_disc")?,
            h_max: get(&fields, "h_max")?,
            prime_only: get(&fields, "prime_only")?,
            estimator: EstimatorParams::new(get(&fields, "x1")?, get(&fields, "x2")?)?,
            window_estimator: EstimatorParams::new(
                get(&fields, "window_x1")?,
                get(&fields, "window_x2")?,
            )?,
            probe_order: get(&fields, "probe_order")?,
            probe_exponent: get(&fields, "probe_exponent")?,
            structure_policy: get(&fields, "structure_policy")?,
            shard: (index, get(&fields, "shard_total")?),
            seed: get(&fields, "seed")?,
            enumeration_cap: get(&fields, "enumeration_cap")?,
            audit_cap: get(&fields, "audit_cap")?,
            guard_fraction: get(&fields, "guard_fraction")?,
            record_witnesses: get(&fields, "record_witnesses")?,
        };
        if cfg.canonical() != s {
            return Err(Error::Domain("config text is not in canonical form".into()));
        }
        Ok(cfg)
    }

    /// First 16 hex digits of SHA-256 over the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    fn structure_config(&self) -> StructureConfig {
        StructureConfig {
            probe_order: self.probe_order,
            probe_exponent: self.probe_exponent,
            seed: self.seed,
        }
    }
}

/// A discriminant whose class group has been determined, kept as evidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub d: i64,
    pub h: u64,
    /// Elementary divisors d₁ | d₂ | …
    pub divisors: Vec<u64>,
}

impl Witness {
    /// The p-group shape, when h is an odd prime power.
    pub fn shape(&self) -> Option<GroupShape> {
        let [(p, _)] = factorize(self.h)[..] else {
            return None;
        };
        if p == 2 {
            return None;
        }
        let mut parts: Vec<u32> = self
            .divisors
            .iter()
            .map(|&x| factorize(x).first().map_or(0, |&(_, k)| k))
            .collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        GroupShape::new(p, Partition::new(parts).ok()?).ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyResult {
    pub config: SurveyConfig,
    /// Shard indices folded into this result.
    pub shards: BTreeSet<u64>,
    /// Odd h ≤ h_max ↦ number of discriminants.
    pub fh: BTreeMap<u64, u64>,
    pub shapes: BTreeMap<GroupShape, u64>,
    /// Sorted by |d|.
    pub witnesses: Vec<Witness>,
    /// Largest |d| whose certified interval met [1, h_max].
    pub frontier: u64,
    /// Discriminants whose h needed the generator closure.
    pub fallback_count: u64,
    pub scanned: u64,
    /// Discarded by an interval lying above h_max.
    pub filtered: u64,
    /// Discriminants whose h was computed.
    pub computed: u64,
    /// (d, reason), sorted by |d|.
    pub quarantine: Vec<(i64, String)>,
}

impl SurveyResult {
    pub fn empty(config: SurveyConfig) -> Self {
        Self {
            shards: BTreeSet::from([config.shard.0]),
            config,
            fh: BTreeMap::new(),
            shapes: BTreeMap::new(),
            witnesses: Vec::new(),
            frontier: 0,
            fallback_count: 0,
            scanned: 0,
            filtered: 0,
            computed: 0,
            quarantine: Vec::new(),
        }
    }

    pub fn config_hash(&self) -> String {
        self.config.hash()
    }

    /// Discriminants recorded for one shape, by increasing |d|.
    pub fn witnesses_for(&self, shape: &GroupShape) -> Vec<i64> {
        self.witnesses
            .iter()
            .filter(|w| w.shape().as_ref() == Some(shape))
            .map(|w| w.d)
            .collect()
    }

    pub fn shape_count(&self, shape: &GroupShape) -> u64 {
        self.shapes.get(shape).copied().unwrap_or(0)
    }

    /// Adds another tally into this one (config and shards untouched).
    fn absorb(&mut self, other: Tally) {
        for (h, c) in other.fh {
            *self.fh.entry(h).or_default() += c;
        }
        for (s, c) in other.shapes {
            *self.shapes.entry(s).or_default() += c;
        }
        self.witnesses.extend(other.witnesses);
        self.quarantine.extend(other.quarantine);
        self.frontier = self.frontier.max(other.frontier);
        self.fallback_count += other.fallback_count;
        self.scanned += other.scanned;
        self.filtered += other.filtered;
        self.computed += other.computed;
    }

    fn normalize(&mut self) {
        self.witnesses.sort_by_key(|w| (w.d.unsigned_abs(), w.d));
        self.quarantine.sort_by(|a, b| {
            (a.0.unsigned_abs(), &a.1).cmp(&(b.0.unsigned_abs(), &b.1))
        });
    }

    fn tally(&self) -> Tally {
        Tally {
            fh: self.fh.clone(),
            shapes: self.shapes.clone(),
            witnesses: self.witnesses.clone(),
            quarantine: self.quarantine.clone(),
            frontier: self.frontier,
            fallback_count: self.fallback_count,
            scanned: self.scanned,
            filtered: self.filtered,
            computed: self.computed,
        }
    }
}

/// Per-worker accumulator.
#[derive(Default)]
struct Tally {
    fh: BTreeMap<u64, u64>,
    shapes: BTreeMap<GroupShape, u64>,
    witnesses: Vec<Witness>,
    quarantine: Vec<(i64, String)>,
    frontier: u64,
    fallback_count: u64,
    scanned: u64,
    filtered: u64,
    computed: u64,
}

impl Tally {
    fn join(mut self, other: Tally) -> Tally {
        for (h, c) in other.fh {
            *self.fh.entry(h).or_default() += c;
        }
        for (s, c) in other.shapes {
            *self.shapes.entry(s).or_default() += c;
        }
        self.witnesses.extend(other.witnesses);
        self.quarantine.extend(other.quarantine);
        self.frontier = self.frontier.max(other.frontier);
        self.fallback_count += other.fallback_count;
        self.scanned += other.scanned;
        self.filtered += other.filtered;
        self.computed += other.computed;
        self
    }
}

/// Fundamental discriminants with lo ≤ |d| ≤ hi, ordered by |d|.
pub fn enumerate_fundamental(lo: u64, hi: u64, prime_only: bool) -> Result<Vec<Discriminant>> {
    if lo == 0 || lo > hi {
        return Err(Error::Domain(format!("invalid discriminant range [{lo}, {hi}]")));
    }
    let in_range = |q: u64| (lo..=hi).contains(&q);
    let mut out = Vec::new();
    if prime_only {
        let specials = SPECIAL_DISCRIMINANTS.map(i64::unsigned_abs);
        let primes = if hi >= 2 {
            sieve_primes_segmented(hi, DEFAULT_SEGMENT_LEN)?.primes().to_vec()
        } else {
            Vec::new()
        };
        let mut qs: Vec<u64> = primes
            .into_iter()
            .filter(|&q| q % 4 == 3 && in_range(q))
            .chain(specials.into_iter().filter(|&q| in_range(q)))
            .collect();
        qs.sort_unstable();
        qs.dedup();
        out.extend(qs.into_iter().map(|q| Discriminant::trusted_fundamental(-(q as i64))));
    } else {
        if hi > FULL_SCAN_CAP {
            return Err(Error::Resource(format!(
                "non-prime-only enumeration is capped at {FULL_SCAN_CAP}"
            )));
        }
        let squarefree = squarefree_flags(hi);
        for q in lo..=hi {
            let fundamental = match q % 4 {
                3 => squarefree[q as usize],
                0 => matches!((q / 4) % 4, 1 | 2) && squarefree[(q / 4) as usize],
                _ => false,
            };
            if fundamental {
                out.push(Discriminant::trusted_fundamental(-(q as i64)));
            }
        }
    }
    Ok(out)
}

/// flags[n] ⇔ n is squarefree, for n ≤ limit.
fn squarefree_flags(limit: u64) -> Vec<bool> {
    let n = limit as usize;
    let mut flags = vec![true; n + 1];
    flags[0] = false;
    let mut p = 2usize;
    while p * p <= n {
        if is_prime(p as u64) {
            let sq = p * p;
            for m in (sq..=n).step_by(sq) {
                flags[m] = false;
            }
        }
        p += 1;
    }
    flags
}

/// Worker pool sized by CLASSLAB_THREADS, else the hardware default.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CLASSLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("CLASSLAB_THREADS={v:?} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))
}

pub fn run_shard(config: &SurveyConfig) -> Result<SurveyResult> {
    run_shard_with_progress(config, |_, _| {})
}

/// As [`run_shard`], calling `progress(done, total)` after each block.
pub fn run_shard_with_progress<F>(config: &SurveyConfig, progress: F) -> Result<SurveyResult>
where
    F: Fn(u64, u64),
{
    config.validate()?;
    let (index, total) = config.shard;
    let discs: Vec<Discriminant> = enumerate_fundamental(1, config.max_abs_disc, config.prime_only)?
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i as u64 % total == index)
        .map(|(_, d)| d)
        .collect();
    let scanner = Scanner::new(config)?;
    let pool = worker_pool()?;
    let mut result = SurveyResult::empty(config.clone());
    let mut done = 0u64;
    for block in discs.chunks(CHUNK) {
        let tally = pool.install(|| {
            block
                .par_iter()
                .fold(Tally::default, |mut t, &d| {
                    scanner.scan(d, &mut t);
                    t
                })
                .reduce(Tally::default, Tally::join)
        });
        result.absorb(tally);
        done += block.len() as u64;
        progress(done, discs.len() as u64);
    }
    result.normalize();
    Ok(result)
}

struct Scanner<'a> {
    config: &'a SurveyConfig,
    filter: Estimator,
    window: Estimator,
}

impl<'a> Scanner<'a> {
    fn new(config: &'a SurveyConfig) -> Result<Self> {
        Ok(Self {
            config,
            filter: Estimator::new(config.estimator)?,
            window: Estimator::new(config.window_estimator)?,
        })
    }

    fn scan(&self, d: Discriminant, t: &mut Tally) {
        t.scanned += 1;
        if let Err(e) = self.scan_inner(d, t) {
            t.quarantine.push((d.value(), e.to_string()));
        }
    }

    fn scan_inner(&self, d: Discriminant, t: &mut Tally) -> Result<()> {
        let cfg = self.config;
        let h_max = cfg.h_max as f64;
        let special = SPECIAL_DISCRIMINANTS.contains(&d.value());
        let mut window = (1.0, f64::INFINITY);
        if !special {
            if self.filter.h_interval(d)?.lower() > h_max {
                t.filtered += 1;
                return Ok(());
            }
            let tight = self.window.h_interval(d)?;
            if tight.lower() > h_max {
                t.filtered += 1;
                return Ok(());
            }
            t.frontier = t.frontier.max(d.abs());
            window = tight.certified_interval();
        }
        t.computed += 1;

        let (h, exponent) = if d.abs() <= cfg.enumeration_cap || special {
            (enumerate_reduced(d)?.len() as u64, 1)
        } else {
            let report = class_number_certified(d, window, cfg.structure_config())?;
            if report.closure_fallback {
                t.fallback_count += 1;
            }
            if d.abs() <= cfg.audit_cap {
                let direct = enumerate_reduced(d)?.len() as u64;
                if direct != report.h {
                    return Err(Error::Inconsistent(format!(
                        "BSGS gave h = {} but enumeration gives {direct}",
                        report.h
                    )));
                }
            }
            (report.h, report.exponent)
        };

        if d.value() < -8 && (h % 2 == 1) != is_prime(d.abs()) {
            return Err(Error::InvariantViolation(format!(
                "genus parity fails: h = {h} for {d}"
            )));
        }
        if h > cfg.h_max {
            return Ok(());
        }
        if h % 2 == 1 {
            *t.fh.entry(h).or_default() += 1;
        }

        let odd_prime_power = h > 1 && matches!(factorize(h)[..], [(p, _)] if p != 2);
        if cfg.structure_policy == StructurePolicy::Always || odd_prime_power {
            let structure = structure_with_order(d, h, exponent)?;
            if d.abs() <= cfg.audit_cap {
                let oracle = group_table_oracle(d)?;
                if oracle != structure {
                    return Err(Error::Inconsistent(format!(
                        "structure {structure} disagrees with table oracle {oracle}"
                    )));
                }
            }
            self.record_structure(&structure, t);
        }
        Ok(())
    }

    fn record_structure(&self, structure: &ClassGroupStructure, t: &mut Tally) {
        let witness = Witness {
            d: structure.discriminant().value(),
            h: structure.h(),
            divisors: structure.divisors().to_vec(),
        };
        if let Some(shape) = witness.shape() {
            *t.shapes.entry(shape).or_default() += 1;
            if self.config.record_witnesses {
                t.witnesses.push(witness);
            }
        }
    }
}

/// Folds shard results of one configuration together.
pub fn merge(results: &[SurveyResult]) -> Result<SurveyResult> {
    let first = results
        .first()
        .ok_or_else(|| Error::MergeRefused("nothing to merge".into()))?;
    let hash = first.config_hash();
    let mut shards = BTreeSet::new();
    let mut out: Option<SurveyResult> = None;
    for r in results {
        if r.config_hash() != hash {
            return Err(Error::MergeRefused(format!(
                "config hash {} differs from {hash}",
                r.config_hash()
            )));
        }
        for &s in &r.shards {
            if !shards.insert(s) {
                return Err(Error::MergeRefused(format!("shard {s} appears twice")));
            }
        }
        match &mut out {
            None => out = Some(r.clone()),
            Some(acc) => acc.absorb(r.tally()),
        }
    }
    let mut out = out.expect("nonempty");
    out.shards = shards;
    out.config.shard.0 = *out.shards.first().expect("nonempty");
    out.normalize();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub complete: bool,
    /// Largest |d| whose interval met [1, h_max].
    pub frontier: u64,
    /// Why completeness fails; empty when complete.
    pub reasons: Vec<String>,
}

pub fn completeness_certificate(result: &SurveyResult, config: &SurveyConfig) -> Certificate {
    let mut reasons = Vec::new();
    if result.config_hash() != config.hash() {
        reasons.push(format!(
            "result config {} does not match {}",
            result.config_hash(),
            config.hash()
        ));
    }
    let expected: BTreeSet<u64> = (0..config.shard.1).collect();
    if result.shards != expected {
        let missing: Vec<String> = expected
            .difference(&result.shards)
            .map(u64::to_string)
            .collect();
        reasons.push(format!("shards missing: {}", missing.join(",")));
    }
    if !result.quarantine.is_empty() {
        reasons.push(format!("{} discriminants quarantined", result.quarantine.len()));
    }
    let band_start = (config.max_abs_disc as f64 * (1.0 - config.guard_fraction)).floor() as u64;
    if config.h_max > 0 && result.frontier > band_start {
        reasons.push(format!(
            "interval at |d| = {} still meets [1, {}] inside the guard band above {band_start}",
            result.frontier, config.h_max
        ));
    }
    if config.max_abs_disc as f64 >= 1e10 {
        match grh_floor(config.max_abs_disc as f64) {
            Ok(floor) if floor > config.h_max as f64 => {}
            Ok(floor) => reasons.push(format!(
                "GRH floor {floor:.1} at the bound does not exceed h_max"
            )),
            Err(e) => reasons.push(e.to_string()),
        }
    }
    Certificate {
        complete: reasons.is_empty(),
        frontier: result.frontier,
        reasons,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Presence {
    ExpectedPresent,
    Missing,
    Sporadic,
}

impl fmt::Display for Presence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Presence::ExpectedPresent => "present",
            Presence::Missing => "missing",
            Presence::Sporadic => "sporadic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub shape: GroupShape,
    pub cyclicity: i64,
    pub count: u64,
    pub presence: Presence,
}

/// Classified counts for every odd p-group of order pⁿ ≤ h_max, n ≤ n_max.
#[derive(Clone, Debug, PartialEq)]
pub struct MissingReport {
    pub bound: u64,
    /// Grouped by n, then decreasing c(λ), then λ, then p.
    pub rows: Vec<ReportRow>,
}

impl MissingReport {
    pub fn row(&self, shape: &GroupShape) -> Option<&ReportRow> {
        self.rows.iter().find(|r| &r.shape == shape)
    }

    pub fn missing(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.presence == Presence::Missing)
    }

    pub fn sporadic(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.presence == Presence::Sporadic)
    }

    /// One block per n: a header of primes, then `c  λ  counts…`; missing
    /// counts print as 0 and sporadic ones carry a trailing '*'.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut ns: Vec<u32> = self.rows.iter().map(|r| r.shape.n()).collect();
        ns.dedup();
        for n in ns {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.shape.n() == n).collect();
            let mut primes: Vec<u64> = rows.iter().map(|r| r.shape.p()).collect();
            primes.sort_unstable();
            primes.dedup();
            out.push_str(&format!("n = {n}\nc\tλ"));
            for p in &primes {
                out.push_str(&format!("\tp={p}"));
            }
            out.push('\n');
            let mut lambdas: Vec<(i64, &Partition)> =
                rows.iter().map(|r| (r.cyclicity, r.shape.lambda())).collect();
            lambdas.dedup();
            for (c, lambda) in lambdas {
                out.push_str(&format!("{c}\t{lambda}"));
                for p in &primes {
                    let cell = rows
                        .iter()
                        .find(|r| r.shape.p() == *p && r.shape.lambda() == lambda)
                        .map_or(String::new(), |r| match r.presence {
                            Presence::Sporadic => format!("{}*", r.count),
                            _ => r.count.to_string(),
                        });
                    out.push_str(&format!("\t{cell}"));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

pub fn report_missing_and_sporadic(result: &SurveyResult, n_max: u32) -> Result<MissingReport> {
    let cert = completeness_certificate(result, &result.config);
    if !cert.complete {
        return Err(Error::Incomplete(cert.reasons.join("; ")));
    }
    let bound = result.config.h_max;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let primes: Vec<u64> = (3..)
            .filter(|&p| is_prime(p))
            .take_while(|&p| p.checked_pow(n).is_some_and(|q| q <= bound))
            .collect();
        if primes.is_empty() {
            break;
        }
        let mut lambdas = enumerate_partitions(n)?;
        lambdas.sort_by_key(|l| std::cmp::Reverse(cyclicity_index(l)));
        for lambda in lambdas {
            let c = cyclicity_index(&lambda);
            for &p in &primes {
                let shape = GroupShape::new(p, lambda.clone())?;
                let count = result.shape_count(&shape);
                let presence = if count == 0 {
                    Presence::Missing
                } else if c < 0 {
                    Presence::Sporadic
                } else {
                    Presence::ExpectedPresent
                };
                rows.push(ReportRow {
                    shape,
                    cyclicity: c,
                    count,
                    presence,
                });
            }
        }
    }
    Ok(MissingReport { bound, rows })
}

pub const FH_FILE: &str = "fh.tsv";
pub const SHAPES_FILE: &str = "shapes.tsv";
pub const WITNESSES_FILE: &str = "witnesses.tsv";
pub const META_FILE: &str = "meta.tsv";

/// Writes the four result files into `dir`, creating it if needed.
pub fn write_result(dir: &Path, result: &SurveyResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let hash = result.config_hash();

    let mut fh = format!("# classlab fh v1 {hash}\n");
    for (h, c) in &result.fh {
        fh.push_str(&format!("{h}\t{c}\n"));
    }
    let mut shapes = format!("# classlab shapes v1 {hash}\n");
    for (s, c) in &result.shapes {
        shapes.push_str(&format!("{}\t{}\t{c}\n", s.p(), s.lambda()));
    }
    let mut witnesses = String::new();
    for w in &result.witnesses {
        let divs: Vec<String> = w.divisors.iter().map(u64::to_string).collect();
        witnesses.push_str(&format!("{}\t{}\t{}\n", w.d, w.h, divs.join(",")));
    }
    let shards: Vec<String> = result.shards.iter().map(u64::to_string).collect();
    let mut meta = format!("# classlab meta v1 {hash}\n");
    meta.push_str(&format!("config\t{}\n", result.config.canonical()));
    meta.push_str(&format!("shards\t{}\n", shards.join(",")));
    for (k, v) in [
        ("scanned", result.scanned),
        ("filtered", result.filtered),
        ("computed", result.computed),
        ("fallback_count", result.fallback_count),
        ("frontier", result.frontier),
    ] {
        meta.push_str(&format!("{k}\t{v}\n"));
    }
    for (d, why) in &result.quarantine {
        meta.push_str(&format!("quarantine\t{d}\t{}\n", why.replace(['\t', '\n'], " ")));
    }

    for (name, body) in [
        (FH_FILE, fh),
        (SHAPES_FILE, shapes),
        (WITNESSES_FILE, witnesses),
        (META_FILE, meta),
    ] {
        let mut f = fs::File::create(dir.join(name))?;
        f.write_all(body.as_bytes())?;
    }
    Ok(())
}

/// Lines of a result file with 1-based numbers, header checked and skipped.
fn read_lines(path: &Path, kind: Option<&str>, hash: Option<&str>) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.to_string()));
    if let Some(kind) = kind {
        let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing header"))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        if words.len() != 5 || words[..4] != ["#", "classlab", kind, "v1"] {
            return Err(parse_err(path, 1, &format!("expected '# classlab {kind} v1 <hash>'")));
        }
        if let Some(h) = hash {
            if words[4] != h {
                return Err(parse_err(path, 1, &format!("config hash {} ≠ {h}", words[4])));
            }
        }
    }
    Ok(lines.filter(|(_, l)| !l.is_empty()).collect())
}

fn parse_err(path: &Path, line: usize, msg: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    }
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, s: Option<&str>, what: &str) -> Result<T> {
    s.and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(path, line, &format!("bad {what}")))
}

/// The h ↦ 𝓕(h) table of an fh.tsv file.
pub fn read_fh_file(path: &Path) -> Result<BTreeMap<u64, u64>> {
    read_fh_lines(path, None)
}

fn read_fh_lines(path: &Path, hash: Option<&str>) -> Result<BTreeMap<u64, u64>> {
    let mut fh = BTreeMap::new();
    for (n, line) in read_lines(path, Some("fh"), hash)? {
        let mut cols = line.split('\t');
        let h: u64 = field(path, n, cols.next(), "h")?;
        let c = field(path, n, cols.next(), "count")?;
        if cols.next().is_some() || fh.insert(h, c).is_some() {
            return Err(parse_err(path, n, "malformed or duplicate row"));
        }
    }
    Ok(fh)
}

pub fn read_result(dir: &Path) -> Result<SurveyResult> {
    let meta_path = dir.join(META_FILE);
    let meta = read_lines(&meta_path, Some("meta"), None)?;
    let header_hash = fs::read_to_string(&meta_path)?
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().nth(4))
        .unwrap_or_default()
        .to_string();

    let mut canonical = None;
    let mut shards = BTreeSet::new();
    let mut counters = BTreeMap::new();
    let mut quarantine = Vec::new();
    for (n, line) in &meta {
        let mut cols = line.splitn(3, '\t');
        let key = cols.next().unwrap_or_default();
        match key {
            "config" => canonical = Some((*n, cols.next().unwrap_or_default().to_string())),
            "shards" => {
                for s in cols.next().unwrap_or_default().split(',') {
                    shards.insert(field(&meta_path, *n, Some(s), "shard index")?);
                }
            }
            "scanned" | "filtered" | "computed" | "fallback_count" | "frontier" => {
                counters.insert(key.to_string(), field::<u64>(&meta_path, *n, cols.next(), key)?);
            }
            "quarantine" => {
                let d = field(&meta_path, *n, cols.next(), "quarantined discriminant")?;
                quarantine.push((d, cols.next().unwrap_or_default().to_string()));
            }
            _ => return Err(parse_err(&meta_path, *n, &format!("unknown key {key:?}"))),
        }
    }
    let (cfg_line, canonical) =
        canonical.ok_or_else(|| parse_err(&meta_path, 1, "missing config line"))?;
    let first_shard = *shards
        .first()
        .ok_or_else(|| parse_err(&meta_path, 1, "missing shards line"))?;
    let config = SurveyConfig::from_canonical(&canonical, first_shard)
        .map_err(|e| parse_err(&meta_path, cfg_line, &e.to_string()))?;
    let hash = config.hash();
    if hash != header_hash {
        return Err(parse_err(&meta_path, 1, "header hash does not match config"));
    }
    let counter = |k: &str| {
        counters
            .get(k)
            .copied()
            .ok_or_else(|| parse_err(&meta_path, 1, &format!("missing {k}")))
    };

    let fh = read_fh_lines(&dir.join(FH_FILE), Some(&hash))?;

    let shapes_path = dir.join(SHAPES_FILE);
    let mut shapes = BTreeMap::new();
    for (n, line) in read_lines(&shapes_path, Some("shapes"), Some(&hash))? {
        let mut cols = line.split('\t');
        let p: u64 = field(&shapes_path, n, cols.next(), "p")?;
        let lambda: Partition = field(&shapes_path, n, cols.next(), "partition")?;
        let c = field(&shapes_path, n, cols.next(), "count")?;
        let shape =
            GroupShape::new(p, lambda).map_err(|e| parse_err(&shapes_path, n, &e.to_string()))?;
        if cols.next().is_some() || shapes.insert(shape, c).is_some() {
            return Err(parse_err(&shapes_path, n, "malformed or duplicate row"));
        }
    }

    let wit_path = dir.join(WITNESSES_FILE);
    let mut witnesses = Vec::new();
    for (n, line) in read_lines(&wit_path, None, None)? {
        let mut cols = line.split('\t');
        let d = field(&wit_path, n, cols.next(), "d")?;
        let h = field(&wit_path, n, cols.next(), "h")?;
        let divisors = cols
            .next()
            .unwrap_or_default()
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| field(&wit_path, n, Some(s), "divisor"))
            .collect::<Result<Vec<u64>>>()?;
        if cols.next().is_some() || divisors.iter().product::<u64>() != h {
            return Err(parse_err(&wit_path, n, "divisors do not multiply to h"));
        }
        witnesses.push(Witness { d, h, divisors });
    }

    Ok(SurveyResult {
        config,
        shards,
        fh,
        shapes,
        witnesses,
        frontier: counter("frontier")?,
        fallback_count: counter("fallback_count")?,
        scanned: counter("scanned")?,
        filtered: counter("filtered")?,
        computed: counter("computed")?,
        quarantine,
    })
}
