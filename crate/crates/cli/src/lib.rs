//! Command-line front end: argument parsing, dispatch and report formatting.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sumset_core::conv::{convolution_counts, popular_sumset_with, Backend};
use sumset_core::rational::{format_rational, parse_rational};
use sumset_core::search::{build_qp_pair, delta_scan, niveau_set, semicontinuity_oracle, ScanConfig, DEFAULT_BUDGET};
use sumset_core::sets::{stabilizer, sumset};
use sumset_core::structure::{kneser_certificate, tame_pair_check, Classifier};
use sumset_core::verify::{kneser_suite, lemma_suites, LemmaConfig, SuiteReport};
use sumset_core::{Element, GSet, GroupSpec, Rational, Subgroup, SumsetError};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "SUMSET_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANOMALY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

/// Sumsets and small-doubling structure in finite abelian groups.
#[derive(Debug, Parser)]
#[command(name = "sumset", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for scans and suites (overridden by SUMSET_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized suites and benchmarks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Group as orders, e.g. `7`, `2x4` or `[2,4]`.
    #[arg(long)]
    pub group: String,
    /// First set: indices, tuples, hex, JSON, or `@file`.
    #[arg(long = "A")]
    pub a: String,
    /// Second set, same forms as `--A`.
    #[arg(long = "B")]
    pub b: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sumset, stabilizer, Kneser certificate and convolution summary.
    Analyze {
        #[command(flatten)]
        pair: PairArgs,
        /// Threshold for the popular sumset.
        #[arg(long, default_value = "0")]
        delta: String,
        #[arg(long, default_value = "auto")]
        backend: String,
    },
    /// Structure classification of a pair with small sumset.
    Classify {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: String,
        /// Report every subgroup and clause that holds.
        #[arg(long)]
        all: bool,
        /// Largest cyclic modulus N tried for progression covers.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Classify every pair of a small group at its own gap.
    Scan {
        #[arg(long)]
        group: String,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        d: usize,
        /// Scan one pair per translation orbit.
        #[arg(long)]
        symmetric: bool,
        /// Skip pairs whose gap exceeds this value.
        #[arg(long)]
        max_gap: Option<String>,
        /// Where to write the JSON summary (stderr when absent).
        #[arg(long)]
        summary: Option<String>,
    },
    /// Exhaustive invariant suites; exits 1 on any anomaly.
    Verify {
        /// Run the Kneser suite.
        #[arg(long)]
        kneser: bool,
        /// Run the structural lemma suites.
        #[arg(long)]
        lemmas: bool,
        /// Largest group for the Kneser suite.
        #[arg(long, default_value_t = 10)]
        max_size: usize,
        /// Largest group for the exhaustive lemma suites.
        #[arg(long, default_value_t = 8)]
        lemma_max_size: usize,
        /// Largest group for the exhaustive large-sum suite.
        #[arg(long, default_value_t = 12)]
        large_sum_max_size: usize,
        /// Largest group for the sampled coset-overlap suite.
        #[arg(long, default_value_t = 12)]
        sample_max_size: usize,
        /// Random pairs per sampled group.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Time the convolution backends on random pairs.
    Bench {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
    /// Fixture generators.
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
    /// Search for nearby sets with subcritical sumset.
    Oracle {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Rebuild a critical periodic pair around a unique expression coset.
    Qp {
        #[arg(long)]
        group: String,
        #[arg(long = "C")]
        c: String,
        #[arg(long = "D")]
        d: String,
        /// Subgroup members.
        #[arg(long = "K")]
        k: String,
        /// Any element of the coset C0.
        #[arg(long)]
        c0: usize,
        /// Any element of the coset D0.
        #[arg(long)]
        d0: usize,
        #[arg(long = "A0")]
        a0: String,
        #[arg(long = "B0")]
        b0: String,
    },
    /// Hamming-weight threshold set in (Z/2)^N.
    Niveau {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value = "0")]
        shift: String,
    },
}

/// Failure modes of a run, mapped to exit codes.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Anomaly(String),
    Io(std::io::Error),
}

impl From<SumsetError> for RunError {
    fn from(e: SumsetError) -> Self {
        match e {
            SumsetError::Anomaly(m) => RunError::Anomaly(m),
            other => RunError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Io(e.into())
    }
}

type RunResult = Result<i32, RunError>;

fn parse_group(s: &str) -> Result<GroupSpec, RunError> {
    Ok(s.parse::<GroupSpec>()?)
}

/// Reads `@path` (or an existing file path) before parsing the set.
pub fn parse_set(g: &GroupSpec, s: &str) -> Result<GSet, RunError> {
    let text = if let Some(path) = s.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| RunError::Usage(format!("cannot read {path}: {e}")))?
    } else if s.ends_with(".json") && Path::new(s).is_file() {
        std::fs::read_to_string(s).map_err(|e| RunError::Usage(format!("cannot read {s}: {e}")))?
    } else {
        s.to_string()
    };
    Ok(GSet::parse(g, &text)?)
}

fn rat(s: &str) -> Result<Rational, RunError> {
    Ok(parse_rational(s)?)
}

fn pair(p: &PairArgs) -> Result<(GroupSpec, GSet, GSet), RunError> {
    let g = parse_group(&p.group)?;
    let a = parse_set(&g, &p.a)?;
    let b = parse_set(&g, &p.b)?;
    Ok((g, a, b))
}

/// `p/q (≈x.xxxx)` for human output.
fn approx(r: Rational) -> String {
    let f = *r.numer() as f64 / *r.denom() as f64;
    format!("{} (≈{f:.4})", format_rational(&r))
}

fn emit_json(out: &mut dyn Write, v: &impl Serialize) -> Result<(), RunError> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, RunError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| RunError::Usage(format!("{THREADS_ENV} must be a thread count, got {v:?}"))),
        _ => Ok(flag),
    }
}

/// Runs a parsed configuration, writing reports to `out` and diagnostics to
/// `err`, and returns the exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = thread_count(config.threads).and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads.filter(|&n| n > 0) {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| RunError::Usage(e.to_string()))?;
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let r = pool.install(|| dispatch(config, &mut o, &mut e));
        out.write_all(&o)?;
        err.write_all(&e)?;
        r
    });
    match result {
        Ok(code) => code,
        Err(RunError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(RunError::Anomaly(m)) => {
            let _ = writeln!(err, "anomaly: {m}");
            EXIT_ANOMALY
        }
        Err(RunError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Parses `args` (program name first) and runs them.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(c) => run(&c, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

fn dispatch(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> RunResult {
    let format = config.format;
    match &config.command {
        Command::Analyze { pair: p, delta, backend } => analyze(p, delta, backend, format, out),
        Command::Classify { pair: p, eps, d, delta, all, n_max } => {
            classify(p, eps, *d, delta, *all, *n_max, format, out)
        }
        Command::Scan { group, eps, d, symmetric, max_gap, summary } => {
            scan(group, eps, *d, *symmetric, max_gap.as_deref(), summary.as_deref(), format, out, err)
        }
        Command::Verify { kneser, lemmas, max_size, lemma_max_size, large_sum_max_size, sample_max_size, samples } => {
            let (k, l) = if !kneser && !lemmas { (true, true) } else { (*kneser, *lemmas) };
            let lemma_cfg = LemmaConfig {
                max_size: *lemma_max_size,
                large_sum_max_size: *large_sum_max_size,
                sample_max_size: *sample_max_size,
                samples: *samples,
                seed: config.seed,
            };
            verify(k.then_some(*max_size), l.then_some(lemma_cfg), format, out)
        }
        Command::Bench { group, pairs } => bench(group, *pairs, config.seed, format, out),
        Command::Gen { which } => generate(which, format, out),
        Command::Oracle { pair: p, eps, delta, budget } => oracle(p, eps, delta, *budget, format, out),
    }
}

fn analyze(p: &PairArgs, delta: &str, backend: &str, format: Option<Format>, out: &mut dyn Write) -> RunResult {
    let (g, a, b) = pair(p)?;
    let delta = rat(delta)?;
    let backend: Backend = backend.parse()?;
    let ab = sumset(&a, &b)?;
    let h = stabilizer(&ab);
    let cert = if a.is_empty() || b.is_empty() { None } else { kneser_certificate(&a, &b)? };
    let tame = if a.is_empty() || b.is_empty() { None } else { Some(tame_pair_check(&a, &b)?) };
    let table = convolution_counts(&a, &b, backend)?;
    let popular = popular_sumset_with(&a, &b, delta, true, backend)?;
    let max_count = table.counts.iter().copied().max().unwrap_or(0);
    match format.unwrap_or(Format::Json) {
        Format::Pretty => {
            writeln!(out, "group      {}", g.descriptor())?;
            writeln!(out, "|A|, |B|   {}, {}", a.len(), b.len())?;
            writeln!(out, "A+B        {:?} (size {})", ab, ab.len())?;
            writeln!(out, "stabilizer {:?} (order {})", h.members(), h.order())?;
            match &cert {
                Some(c) => writeln!(
                    out,
                    "kneser     critical; {} = {} ({})",
                    c.lhs,
                    c.rhs,
                    if c.valid { "valid" } else { "INVALID" }
                )?,
                None => writeln!(out, "kneser     not critical")?,
            }
            writeln!(out, "counts     total {}, max {}", table.total(), max_count)?;
            writeln!(out, "popular    delta {}: {:?} (size {})", approx(delta), popular, popular.len())?;
        }
        _ => emit_json(
            out,
            &json!({
                "group": g,
                "A": a.indices(),
                "B": b.indices(),
                "sumset": ab.indices(),
                "sumset_size": ab.len(),
                "stabilizer": h.members().indices(),
                "kneser": cert,
                "tame": tame,
                "convolution": {
                    "backend": backend,
                    "total": table.total(),
                    "max_count": max_count,
                    "support_size": table.support().len(),
                    "counts": table.counts,
                },
                "popular": {
                    "delta": format_rational(&delta),
                    "members": popular.indices(),
                    "size": popular.len(),
                },
            }),
        )?,
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn classify(
    p: &PairArgs,
    eps: &str,
    d: usize,
    delta: &str,
    all: bool,
    n_max: Option<usize>,
    format: Option<Format>,
    out: &mut dyn Write,
) -> RunResult {
    let (g, a, b) = pair(p)?;
    let classifier = Classifier::new(&g, rat(eps)?, d)?.with_max_modulus(n_max);
    let delta = rat(delta)?;
    let results =
        if all { classifier.all_witnesses(&a, &b, delta)? } else { vec![classifier.classify(&a, &b, delta)?] };
    match format.unwrap_or(Format::Json) {
        Format::Pretty => {
            for r in &results {
                let k = r.subgroup.as_ref().map(|k| format!("{:?} (index {})", k.members(), k.index()));
                writeln!(out, "tag      {}", r.tag.as_str())?;
                writeln!(out, "subgroup {}", k.unwrap_or_else(|| "-".into()))?;
                if let Some(n) = r.modulus() {
                    writeln!(out, "modulus  {n}")?;
                }
                writeln!(out, "epsilon  {}", approx(r.epsilon))?;
                writeln!(out, "delta    {}", approx(r.delta_used))?;
            }
        }
        _ if all => emit_json(out, &results)?,
        _ => emit_json(out, &results[0])?,
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn scan(
    group: &str,
    eps: &str,
    d: usize,
    symmetric: bool,
    max_gap: Option<&str>,
    summary_path: Option<&str>,
    format: Option<Format>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> RunResult {
    let g = parse_group(group)?;
    let mut cfg = ScanConfig::new(rat(eps)?, d);
    cfg.up_to_symmetry = symmetric;
    cfg.max_gap = max_gap.map(rat).transpose()?;
    let report = delta_scan(&g, &cfg)?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            report.write_csv(out)?;
            let s = serde_json::to_string_pretty(&report.summary)?;
            match summary_path {
                Some(path) => std::fs::write(path, s + "\n")?,
                None => writeln!(err, "{s}")?,
            }
        }
        Format::Json => emit_json(out, &report)?,
        Format::Pretty => {
            let s = &report.summary;
            writeln!(out, "group         {}", s.group)?;
            writeln!(out, "pairs         {}", s.pairs)?;
            writeln!(out, "unclassified  {}", s.unclassified)?;
            for (tag, n) in &s.tag_counts {
                writeln!(out, "  {tag:<12} {n}")?;
            }
            let star = s.delta_star.map(approx).unwrap_or_else(|| "none".into());
            writeln!(out, "delta*        {star}")?;
            for row in &s.per_gap {
                writeln!(
                    out,
                    "  gap {:<20} pairs {:<8} unclassified {}",
                    approx(row.gap),
                    row.pairs,
                    row.unclassified
                )?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn verify(
    kneser: Option<usize>,
    lemmas: Option<LemmaConfig>,
    format: Option<Format>,
    out: &mut dyn Write,
) -> RunResult {
    let mut suites: Vec<SuiteReport> = Vec::new();
    if let Some(m) = kneser {
        suites.push(kneser_suite(m)?);
    }
    if let Some(cfg) = &lemmas {
        suites.extend(lemma_suites(cfg)?);
    }
    let anomalies: u64 = suites.iter().map(|s| s.anomaly_count).sum();
    match format.unwrap_or(Format::Pretty) {
        Format::Json => emit_json(out, &json!({ "suites": suites, "anomalies": anomalies }))?,
        _ => {
            for s in &suites {
                writeln!(
                    out,
                    "{:<24} {:>3} groups up to {:>2}  {:>12} instances  {} anomalies",
                    s.suite, s.groups, s.max_size, s.instances, s.anomaly_count
                )?;
                for a in &s.anomalies {
                    writeln!(out, "  reproducer: {}", serde_json::to_string(a)?)?;
                }
            }
            writeln!(out, "{anomalies} anomalies")?;
        }
    }
    Ok(if anomalies == 0 { EXIT_OK } else { EXIT_ANOMALY })
}

#[derive(Serialize)]
struct BenchRow {
    group: String,
    backend: Backend,
    pairs: usize,
    micros: u128,
    agree: bool,
}

fn bench(group: &str, pairs: usize, seed: u64, format: Option<Format>, out: &mut dyn Write) -> RunResult {
    let g = parse_group(group)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<(GSet, GSet)> = (0..pairs)
        .map(|_| {
            let mut draw = || GSet::from_predicate(&g, |_| rng.gen_bool(0.5));
            (draw(), draw())
        })
        .collect();
    let reference: Vec<Vec<u64>> = sets
        .iter()
        .map(|(a, b)| convolution_counts(a, b, Backend::Naive).map(|t| t.counts))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for backend in [Backend::Naive, Backend::Dft, Backend::Auto] {
        let start = Instant::now();
        let mut agree = true;
        for ((a, b), want) in sets.iter().zip(&reference) {
            agree &= convolution_counts(a, b, backend)?.counts == *want;
        }
        rows.push(BenchRow { group: g.descriptor(), backend, pairs, micros: start.elapsed().as_micros(), agree });
    }
    match format.unwrap_or(Format::Csv) {
        Format::Json => emit_json(out, &rows)?,
        _ => {
            writeln!(out, "group;backend;pairs;micros;agree")?;
            for r in &rows {
                let name = serde_json::to_value(r.backend)?;
                writeln!(out, "{};{};{};{};{}", r.group, name.as_str().unwrap_or("?"), r.pairs, r.micros, r.agree)?;
            }
        }
    }
    Ok(if rows.iter().all(|r| r.agree) { EXIT_OK } else { EXIT_ANOMALY })
}

fn generate(which: &GenCommand, format: Option<Format>, out: &mut dyn Write) -> RunResult {
    match which {
        GenCommand::Qp { group, c, d, k, c0, d0, a0, b0 } => {
            let g = parse_group(group)?;
            let k = Subgroup::new(parse_set(&g, k)?)?;
            let (a, b) = build_qp_pair(
                &parse_set(&g, c)?,
                &parse_set(&g, d)?,
                &k,
                element(&g, *c0)?,
                element(&g, *d0)?,
                &parse_set(&g, a0)?,
                &parse_set(&g, b0)?,
            )?;
            let ab = sumset(&a, &b)?;
            match format.unwrap_or(Format::Json) {
                Format::Pretty => {
                    writeln!(out, "A   {a:?}")?;
                    writeln!(out, "B   {b:?}")?;
                    writeln!(out, "|A+B| = {} <= |A| + |B| = {}", ab.len(), a.len() + b.len())?;
                }
                _ => emit_json(out, &json!({ "A": a, "B": b, "sumset_size": ab.len() }))?,
            }
        }
        GenCommand::Niveau { n, shift } => {
            let r = niveau_set(*n, rat(shift)?)?;
            match format.unwrap_or(Format::Json) {
                Format::Pretty => {
                    writeln!(out, "N            {}", r.n)?;
                    writeln!(out, "min weight   {}", r.min_weight)?;
                    writeln!(out, "|A|          {}", r.size)?;
                    writeln!(out, "density      {}", approx(r.density))?;
                    writeln!(out, "|A-A|        {}", r.difference_set_size)?;
                    writeln!(
                        out,
                        "hyperplanes  {} of {} have a coset inside A-A",
                        r.hyperplanes_with_coset_in_difference_set, r.hyperplanes
                    )?;
                }
                _ => emit_json(out, &r)?,
            }
        }
    }
    Ok(EXIT_OK)
}

fn element(g: &GroupSpec, x: usize) -> Result<Element, RunError> {
    if x < g.size() {
        Ok(Element(x))
    } else {
        Err(RunError::Usage(format!("element {x} is outside a group of order {}", g.size())))
    }
}

fn oracle(
    p: &PairArgs,
    eps: &str,
    delta: &str,
    budget: usize,
    format: Option<Format>,
    out: &mut dyn Write,
) -> RunResult {
    let (_, a, b) = pair(p)?;
    let eps = rat(eps)?;
    let w = semicontinuity_oracle(&a, &b, eps, rat(delta)?, budget)?;
    match (format.unwrap_or(Format::Json), &w) {
        (Format::Pretty, Some(w)) => {
            writeln!(out, "S          {:?}", w.s)?;
            writeln!(out, "T          {:?}", w.t)?;
            writeln!(out, "move cost  {}", approx(w.move_cost))?;
            writeln!(out, "found by   {}", serde_json::to_value(w.stage)?.as_str().unwrap_or("?"))?;
        }
        (Format::Pretty, None) => writeln!(out, "none within budget")?,
        (_, Some(w)) => emit_json(out, w)?,
        (_, None) => emit_json(out, &json!({ "witness": null, "message": "none within budget" }))?,
    }
    Ok(EXIT_OK)
}
