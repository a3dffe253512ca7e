//! Batch front-end for the exact-arithmetic ergodic-average laboratory:
//! every verification and scan as a subcommand with reproducible
//! configuration and CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use weylab::averages::{gowers_norm, Observable};
use weylab::counterex::{
    build_a, choose_weights, designated_tuples, enumerate_constraint_tuples, genericity_scan,
    verify_too,
};
use weylab::fp::FpScalar;
use weylab::hallpetresco::{limit_formula_report, second_limit_report};
use weylab::khintchine::{double_recurrence_report, khintchine_scan, temple_check, EventSet};
use weylab::laurent::{default_alpha, ergodicity_diagnostic, skew_limit_report, FpPoly};
use weylab::weyl::universal::{SymmetricForm, UniversalSystem};
use weylab::weyl::{heisenberg_example, kronecker_example, WeylTower};

#[derive(Parser)]
#[command(name = "weylab", version, about = "Exact multiple-ergodic-average laboratory over F_p^N")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Odd prime p <= 61.
    #[arg(long, global = true, default_value_t = 5)]
    prime: u32,

    /// Acting dimension N (the group is F_p^N).
    #[arg(long, global = true, default_value_t = 2)]
    dim: usize,

    /// Seed for every randomized choice; fully determines the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Fail (exit 1) unless the exactness assertions of the subcommand hold.
    #[arg(long, global = true)]
    exact: bool,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Refuse plans above this many elementary evaluations (see --force).
    #[arg(long, global = true, default_value_t = 1_000_000_000)]
    budget: u128,

    /// Worker threads for parallel reductions (results are independent of this).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Validate the configuration and print planned enumeration sizes only.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Run even when the planned work exceeds the budget.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, ValueEnum)]
enum SystemKind {
    Kronecker,
    Heisenberg,
}

#[derive(Copy, Clone, ValueEnum)]
enum ObservableKind {
    Ones,
    Random,
    Phase,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compare the multiple average with the Hall-Petresco integral.
    Limit(LimitArgs),
    /// Uniform-density comparison of I(g) with the theta(g)-coset integral.
    SecondLimit(SecondLimitArgs),
    /// Gowers-Host-Kra seminorm ladder for one observable.
    Gowers(GowersArgs),
    /// Khintchine recurrence scan over all g.
    Scan(ScanArgs),
    /// Double-recurrence certification (three nodes).
    Double(DoubleArgs),
    /// Triple-recurrence temple inequality on random functions.
    Triple(TripleArgs),
    /// Counterexample certificate, or a genericity scan with --samples.
    Counterex(CounterexArgs),
    /// Laurent skew-shift diagnostics (ergodicity or limit comparison).
    Skew(SkewArgs),
    /// Universal system of symmetric forms: exhaustive verification.
    Universal(UniversalArgs),
}

#[derive(Args)]
struct LimitArgs {
    /// Coefficient tuple c_0,...,c_k.
    #[arg(long, default_value = "0,1,2")]
    coeffs: String,
    #[arg(long, value_enum, default_value_t = SystemKind::Kronecker)]
    system: SystemKind,
    /// JSON tower description overriding --system.
    #[arg(long)]
    system_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ObservableKind::Random)]
    observables: ObservableKind,
    /// Comma list of acting dimensions (defaults to --dim).
    #[arg(long)]
    dims: Option<String>,
}

#[derive(Args)]
struct SecondLimitArgs {
    #[arg(long, default_value = "0,1,2")]
    coeffs: String,
    #[arg(long, value_enum, default_value_t = SystemKind::Heisenberg)]
    system: SystemKind,
    #[arg(long)]
    system_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ObservableKind::Random)]
    observables: ObservableKind,
    /// Comma list of window dimensions (defaults to 1..=N).
    #[arg(long)]
    windows: Option<String>,
}

#[derive(Args)]
struct GowersArgs {
    #[arg(long, value_enum, default_value_t = SystemKind::Kronecker)]
    system: SystemKind,
    #[arg(long)]
    system_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ObservableKind::Ones)]
    observables: ObservableKind,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value = "0,1,2")]
    coeffs: String,
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    /// Event set: "full" or "random" (seeded half-density).
    #[arg(long, default_value = "full")]
    set: String,
    #[arg(long, value_enum, default_value_t = SystemKind::Kronecker)]
    system: SystemKind,
    #[arg(long)]
    system_file: Option<PathBuf>,
}

#[derive(Args)]
struct DoubleArgs {
    #[arg(long, default_value = "0,1,2")]
    coeffs: String,
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    #[arg(long, default_value = "random")]
    set: String,
    #[arg(long, value_enum, default_value_t = SystemKind::Kronecker)]
    system: SystemKind,
    #[arg(long)]
    system_file: Option<PathBuf>,
}

#[derive(Args)]
struct TripleArgs {
    /// Dimension of the structure group U_1 = F_p^m.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    c2: u32,
    /// Number of random functions to test.
    #[arg(long, default_value_t = 10)]
    trials: usize,
}

#[derive(Args)]
struct CounterexArgs {
    #[arg(long, default_value = "0,1,2,14")]
    coeffs: String,
    /// Run the genericity scan with this many sampled tuples instead.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SkewMode {
    Ergodicity,
    Limit,
}

#[derive(Args)]
struct SkewArgs {
    #[arg(long, value_enum, default_value_t = SkewMode::Ergodicity)]
    mode: SkewMode,
    /// Torus dimension m (levels of the skew tower).
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Truncation depth for the digit arithmetic.
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// Largest Folner index n for the ergodicity diagnostic.
    #[arg(long, default_value_t = 5)]
    nmax: u32,
    /// Character component degree bound for the diagnostic family.
    #[arg(long, default_value_t = 3)]
    degbound: usize,
    /// Comma list of deg(g) values for the limit comparison.
    #[arg(long, default_value = "2,5")]
    degrees: String,
}

#[derive(Args)]
struct UniversalArgs {
    /// Order j of the universal system Y_j.
    #[arg(long, default_value_t = 2)]
    level: usize,
    /// Dimension of the target group U_j.
    #[arg(long, default_value_t = 1)]
    udim: usize,
}

enum Failure {
    Config(String),
    Assertion(String),
}

impl From<weylab::Error> for Failure {
    fn from(e: weylab::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CmdResult = Result<Report, Failure>;

struct Report {
    command: String,
    config: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
}

impl Report {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                writeln!(out, "# command={}", self.command).unwrap();
                for (k, v) in &self.config {
                    writeln!(out, "# {k}={v}").unwrap();
                }
                writeln!(out, "{}", self.columns.join(",")).unwrap();
                for row in &self.rows {
                    writeln!(out, "{}", row.join(",")).unwrap();
                }
                for (k, v) in &self.summary {
                    writeln!(out, "# {k}={v}").unwrap();
                }
                out
            }
            Format::Json => {
                let config: serde_json::Map<String, serde_json::Value> = self
                    .config
                    .iter()
                    .map(|(k, v)| (k.clone(), json!(v)))
                    .collect();
                let summary: serde_json::Map<String, serde_json::Value> = self
                    .summary
                    .iter()
                    .map(|(k, v)| (k.clone(), json!(v)))
                    .collect();
                let value = json!({
                    "schema": 1,
                    "command": self.command,
                    "config": config,
                    "columns": self.columns,
                    "rows": self.rows,
                    "summary": summary,
                });
                let mut text = serde_json::to_string_pretty(&value).unwrap();
                text.push('\n');
                text
            }
        }
    }
}

fn parse_u32_list(text: &str) -> Result<Vec<u32>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Failure::Config(format!("invalid list entry '{t}'")))
        })
        .collect()
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>, Failure> {
    Ok(parse_u32_list(text)?.into_iter().map(|v| v as usize).collect())
}

fn parse_rational(text: &str) -> Result<BigRational, Failure> {
    let bad = || Failure::Config(format!("invalid rational '{text}' (expected a or a/b)"));
    let mut parts = text.split('/');
    let num: i64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let den: i64 = match parts.next() {
        Some(d) => d.trim().parse().map_err(|_| bad())?,
        None => 1,
    };
    if den == 0 || parts.next().is_some() {
        return Err(bad());
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

fn scalars(p: u32, cs: &[u32]) -> Vec<FpScalar> {
    cs.iter().map(|&c| FpScalar::new(c as i64, p)).collect()
}

fn build_system(
    kind: SystemKind,
    file: Option<&PathBuf>,
    p: u32,
    n: usize,
) -> Result<WeylTower, Failure> {
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        return Ok(WeylTower::from_json(&text)?);
    }
    Ok(match kind {
        SystemKind::Kronecker => kronecker_example(p, n, 1)?,
        SystemKind::Heisenberg => heisenberg_example(p, n)?,
    })
}

fn make_observables(
    kind: ObservableKind,
    sys: &WeylTower,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Observable> {
    (0..count)
        .map(|_| match kind {
            ObservableKind::Ones => Observable::one(sys),
            ObservableKind::Random => Observable::random_rational(sys, rng),
            ObservableKind::Phase => Observable::random_phase(sys, rng),
        })
        .collect()
}

/// Budget/dry-run gate: returns a dry-run report, an error when the plan
/// exceeds the budget without --force, or None meaning "go compute".
fn gate(cli: &Cli, command: &str, planned: &[(&str, u128)]) -> Result<Option<Report>, Failure> {
    let total: u128 = planned.iter().map(|p| p.1).sum();
    if cli.dry_run {
        return Ok(Some(Report {
            command: format!("{command}.dry-run"),
            config: base_config(cli),
            columns: vec!["quantity".into(), "size".into()],
            rows: planned
                .iter()
                .map(|(k, v)| vec![(*k).to_string(), v.to_string()])
                .collect(),
            summary: vec![
                ("planned_total".into(), total.to_string()),
                ("budget".into(), cli.budget.to_string()),
                ("within_budget".into(), (total <= cli.budget).to_string()),
            ],
        }));
    }
    if total > cli.budget && !cli.force {
        return Err(Failure::Config(format!(
            "planned work {total} exceeds budget {} (pass --force to override)",
            cli.budget
        )));
    }
    Ok(None)
}

fn base_config(cli: &Cli) -> Vec<(String, String)> {
    vec![
        ("prime".into(), cli.prime.to_string()),
        ("dim".into(), cli.dim.to_string()),
        ("seed".into(), cli.seed.to_string()),
    ]
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

fn cmd_limit(cli: &Cli, args: &LimitArgs) -> CmdResult {
    let coeffs = parse_u32_list(&args.coeffs)?;
    let dims = match &args.dims {
        Some(d) => parse_usize_list(d)?,
        None => vec![cli.dim],
    };
    let cs = scalars(cli.prime, &coeffs);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut entries = Vec::new();
    let mut planned = Vec::new();
    let mut sizes = Vec::new();
    for &n in &dims {
        let sys = build_system(args.system, args.system_file.as_ref(), cli.prime, n)?;
        let work = sys.group_count() as u128 * sys.state_count() as u128 * cs.len() as u128;
        sizes.push(work);
        let fs = make_observables(args.observables, &sys, cs.len(), &mut rng);
        entries.push((sys, fs));
    }
    let planned_refs: Vec<(&str, u128)> = vec![("state_group_products", sizes.iter().sum())];
    planned.extend(planned_refs);
    if let Some(r) = gate(cli, "limit", &planned)? {
        return Ok(r);
    }
    let rows = limit_formula_report(&entries, &cs)?;
    let mut all_exact = true;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            all_exact &= r.exact_zero;
            vec![
                r.acting_dim.to_string(),
                fmt_f64(r.lhs.abs_f64()),
                fmt_f64(r.rhs.abs_f64()),
                fmt_f64(r.diff_abs),
                r.exact_zero.to_string(),
            ]
        })
        .collect();
    if cli.exact && !all_exact {
        return Err(Failure::Assertion(
            "limit formula difference is not exactly zero".into(),
        ));
    }
    let mut config = base_config(cli);
    config.push(("coeffs".into(), args.coeffs.clone()));
    Ok(Report {
        command: "limit".into(),
        config,
        columns: vec![
            "dim".into(),
            "lhs_abs".into(),
            "rhs_abs".into(),
            "diff_abs".into(),
            "exact_zero".into(),
        ],
        rows: table,
        summary: vec![("all_exact".into(), all_exact.to_string())],
    })
}

fn cmd_second_limit(cli: &Cli, args: &SecondLimitArgs) -> CmdResult {
    let coeffs = parse_u32_list(&args.coeffs)?;
    let cs = scalars(cli.prime, &coeffs);
    let sys = build_system(args.system, args.system_file.as_ref(), cli.prime, cli.dim)?;
    let windows = match &args.windows {
        Some(w) => parse_usize_list(w)?,
        None => (1..=cli.dim).collect(),
    };
    let work = sys.group_count() as u128 * sys.state_count() as u128 * (cs.len() as u128 + 1);
    if let Some(r) = gate(cli, "second-limit", &[("state_group_products", work)])? {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let fs = make_observables(args.observables, &sys, cs.len(), &mut rng);
    let report = second_limit_report(&sys, &cs, &fs, &windows)?;
    if cli.exact && !report.exact_zero {
        return Err(Failure::Assertion(
            "second limit formula difference is not exactly zero".into(),
        ));
    }
    let mut config = base_config(cli);
    config.push(("coeffs".into(), args.coeffs.clone()));
    Ok(Report {
        command: "second-limit".into(),
        config,
        columns: vec!["window_dim".into(), "ud_norm".into()],
        rows: report
            .ud_norms
            .iter()
            .map(|(d, v)| vec![d.to_string(), fmt_f64(*v)])
            .collect(),
        summary: vec![
            ("max_abs_diff".into(), fmt_f64(report.max_abs_diff)),
            ("exact_zero".into(), report.exact_zero.to_string()),
        ],
    })
}

fn cmd_gowers(cli: &Cli, args: &GowersArgs) -> CmdResult {
    let sys = build_system(args.system, args.system_file.as_ref(), cli.prime, cli.dim)?;
    let work = sys.group_count() as u128
        * sys.state_count() as u128
        * (1u128 << args.kmax.min(20) as u32);
    if let Some(r) = gate(cli, "gowers", &[("derived_tables", work)])? {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let f = make_observables(args.observables, &sys, 1, &mut rng).pop().unwrap();
    let mut rows = Vec::new();
    let mut powers: Vec<Option<BigRational>> = Vec::new();
    for k in 1..=args.kmax {
        let gn = gowers_norm(&sys, &f, k)?;
        rows.push(vec![
            k.to_string(),
            gn.power_rational
                .as_ref()
                .map(|q| q.to_string())
                .unwrap_or_else(|| "irrational".into()),
            fmt_f64(gn.norm),
        ]);
        powers.push(gn.power_rational);
    }
    // Monotonicity ||f||_{U^k} <= ||f||_{U^{k+1}}: p_k^2 <= p_{k+1} on the
    // exact 2^k-th powers whenever both are rational.
    let mut monotone = true;
    for w in powers.windows(2) {
        if let (Some(a), Some(b)) = (&w[0], &w[1]) {
            monotone &= &(a * a) <= b;
        }
    }
    if !monotone {
        return Err(Failure::Assertion("Gowers norms are not monotone".into()));
    }
    if cli.exact && matches!(args.observables, ObservableKind::Ones) {
        let ones_ok = powers
            .iter()
            .all(|q| q.as_ref().is_some_and(|q| q == &BigRational::from(BigInt::from(1))));
        if !ones_ok {
            return Err(Failure::Assertion("||1||_{U^k} differs from 1".into()));
        }
    }
    Ok(Report {
        command: "gowers".into(),
        config: base_config(cli),
        columns: vec!["k".into(), "power_2k".into(), "norm".into()],
        rows,
        summary: vec![("monotone".into(), monotone.to_string())],
    })
}

fn event_set(kind: &str, sys: &WeylTower, rng: &mut ChaCha8Rng) -> Result<EventSet, Failure> {
    use rand::Rng;
    match kind {
        "full" => Ok(EventSet::full(sys)),
        "random" => {
            let mut membership: Vec<bool> =
                (0..sys.state_count()).map(|_| rng.gen_bool(0.5)).collect();
            let pin = rng.gen_range(0..sys.state_count());
            membership[pin] = true;
            Ok(EventSet::new(sys, membership)?)
        }
        other => Err(Failure::Config(format!(
            "unknown event set '{other}' (expected full|random)"
        ))),
    }
}

fn cmd_scan(cli: &Cli, args: &ScanArgs) -> CmdResult {
    let coeffs = parse_u32_list(&args.coeffs)?;
    let cs = scalars(cli.prime, &coeffs);
    let epsilon = parse_rational(&args.epsilon)?;
    let sys = build_system(args.system, args.system_file.as_ref(), cli.prime, cli.dim)?;
    let work = sys.group_count() as u128 * sys.state_count() as u128 * cs.len() as u128;
    if let Some(r) = gate(cli, "scan", &[("membership_probes", work)])? {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let a = event_set(&args.set, &sys, &mut rng)?;
    let result = khintchine_scan(&sys, &cs, &a, &epsilon)?;
    let mut config = base_config(cli);
    config.push(("coeffs".into(), args.coeffs.clone()));
    config.push(("epsilon".into(), epsilon.to_string()));
    config.push(("set".into(), args.set.clone()));
    Ok(Report {
        command: "scan".into(),
        config,
        columns: vec!["window_dim".into(), "hits_every_coset".into()],
        rows: result
            .coset_profile
            .iter()
            .map(|(d, hit)| vec![d.to_string(), hit.to_string()])
            .collect(),
        summary: vec![
            ("measure".into(), a.measure().to_string()),
            ("threshold".into(), result.threshold.to_string()),
            ("density".into(), result.density.to_string()),
            (
                "best_syndetic_index".into(),
                result
                    .best_syndetic_index
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "none".into()),
            ),
        ],
    })
}

fn cmd_double(cli: &Cli, args: &DoubleArgs) -> CmdResult {
    let coeffs = parse_u32_list(&args.coeffs)?;
    let cs = scalars(cli.prime, &coeffs);
    let epsilon = parse_rational(&args.epsilon)?;
    let sys = build_system(args.system, args.system_file.as_ref(), cli.prime, cli.dim)?;
    let work = sys.group_count() as u128 * sys.state_count() as u128 * 4;
    if let Some(r) = gate(cli, "double", &[("membership_probes", work)])? {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let a = event_set(&args.set, &sys, &mut rng)?;
    let report = double_recurrence_report(&sys, &cs, &a, &epsilon)?;
    if cli.exact && !report.certified {
        return Err(Failure::Assertion(
            "double recurrence certification failed".into(),
        ));
    }
    let mut config = base_config(cli);
    config.push(("coeffs".into(), args.coeffs.clone()));
    config.push(("epsilon".into(), epsilon.to_string()));
    Ok(Report {
        command: "double".into(),
        config,
        columns: vec!["window_dim".into(), "hits_every_coset".into()],
        rows: report
            .scan
            .coset_profile
            .iter()
            .map(|(d, hit)| vec![d.to_string(), hit.to_string()])
            .collect(),
        summary: vec![
            ("certified".into(), report.certified.to_string()),
            ("subgroup_dim".into(), report.window_dim.to_string()),
            ("min_integral".into(), report.min_integral.to_string()),
            ("threshold".into(), report.threshold.to_string()),
            ("weighted_lhs".into(), report.weighted.lhs.to_string()),
            ("weighted_rhs".into(), report.weighted.rhs.to_string()),
        ],
    })
}

fn cmd_triple(cli: &Cli, args: &TripleArgs) -> CmdResult {
    use rand::Rng;
    let p = cli.prime;
    let count = (p as u128).pow(args.m as u32);
    let work = count * count * count * args.trials as u128;
    if let Some(r) = gate(cli, "triple", &[("integrand_points", work)])? {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut rows = Vec::new();
    let mut all_pass = true;
    for trial in 0..args.trials {
        let values: Vec<BigRational> = (0..count as usize)
            .map(|_| {
                BigRational::new(BigInt::from(rng.gen_range(0..8)), BigInt::from(rng.gen_range(1..5)))
            })
            .collect();
        let report = temple_check(p, args.m, &values, FpScalar::new(args.c2 as i64, p))?;
        all_pass &= report.pass;
        rows.push(vec![
            trial.to_string(),
            report.lhs.to_string(),
            report.rhs.to_string(),
            report.pass.to_string(),
            report.equality.to_string(),
        ]);
    }
    if !all_pass {
        return Err(Failure::Assertion("temple inequality violated".into()));
    }
    let mut config = base_config(cli);
    config.push(("m".into(), args.m.to_string()));
    config.push(("c2".into(), args.c2.to_string()));
    Ok(Report {
        command: "triple".into(),
        config,
        columns: vec![
            "trial".into(),
            "lhs".into(),
            "rhs".into(),
            "pass".into(),
            "equality".into(),
        ],
        rows,
        summary: vec![("all_pass".into(), all_pass.to_string())],
    })
}

fn cmd_counterex(cli: &Cli, args: &CounterexArgs) -> CmdResult {
    let p = cli.prime;
    if let Some(samples) = args.samples {
        let work = samples as u128 * (p as u128).pow(4);
        if let Some(r) = gate(cli, "counterex", &[("sampled_grids", work)])? {
            return Ok(r);
        }
        let scan = genericity_scan(p, 3, samples, cli.seed)?;
        let rows = scan
            .failures
            .iter()
            .map(|(tuple, kind)| {
                vec![
                    tuple.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                    format!("{kind:?}"),
                ]
            })
            .collect();
        let mut config = base_config(cli);
        config.push(("samples".into(), samples.to_string()));
        return Ok(Report {
            command: "counterex".into(),
            config,
            columns: vec!["failed_tuple".into(), "failure_kind".into()],
            rows,
            summary: vec![
                ("successes".into(), scan.successes.to_string()),
                ("fraction".into(), fmt_f64(scan.fraction)),
            ],
        });
    }
    let coeffs = parse_u32_list(&args.coeffs)?;
    let cs = scalars(p, &coeffs);
    let work = (p as u128).pow(5);
    if let Some(r) = gate(cli, "counterex", &[("theta_grid_integrals", work)])? {
        return Ok(r);
    }
    let a = build_a(&cs)?;
    let tuples = enumerate_constraint_tuples(&a, &cs)?;
    let nonzero: Vec<_> = tuples.iter().filter(|t| !t.is_zero()).collect();
    let designated = designated_tuples(&a, cs.len());
    let w = choose_weights(&a)?;
    let report = verify_too(&cs, &w, 2)?;
    if cli.exact && !report.pass {
        return Err(Failure::Assertion(
            "counterexample integral is not strictly below one".into(),
        ));
    }
    let rows = nonzero
        .iter()
        .map(|t| {
            vec![
                t.entries
                    .iter()
                    .map(|(x, y)| format!("({x} {y})"))
                    .collect::<Vec<_>>()
                    .join(" "),
                t.sand.to_string(),
                t.sand2.to_string(),
            ]
        })
        .collect();
    let mut config = base_config(cli);
    config.push(("coeffs".into(), args.coeffs.clone()));
    Ok(Report {
        command: "counterex".into(),
        config,
        columns: vec!["tuple".into(), "sand".into(), "sand2".into()],
        rows,
        summary: vec![
            ("degenerate".into(), a.degenerate.to_string()),
            // Includes the trivial zero tuple, matching the "exactly three
            // solutions" accounting of the generic classification.
            ("tuple_count".into(), tuples.len().to_string()),
            ("designated_count".into(), designated.len().to_string()),
            (
                "max_exact".into(),
                report
                    .max_exact
                    .map(|q| q.to_string())
                    .unwrap_or_else(|| "irrational".into()),
            ),
            ("max_float".into(), fmt_f64(report.max_float)),
            ("pass".into(), report.pass.to_string()),
        ],
    })
}

fn cmd_skew(cli: &Cli, args: &SkewArgs) -> CmdResult {
    let p = cli.prime;
    match args.mode {
        SkewMode::Ergodicity => {
            let chars = (p as u128).pow((args.degbound * args.m) as u32);
            let work = chars * (p as u128).pow(args.nmax);
            if let Some(r) = gate(cli, "skew", &[("character_group_products", work)])? {
                return Ok(r);
            }
            let alpha = default_alpha(p, args.depth)?;
            let rows = ergodicity_diagnostic(args.m, &alpha, 1..=args.nmax, args.degbound)?;
            let decreasing = rows
                .windows(2)
                .all(|w| w[1].mean_distance_sq <= w[0].mean_distance_sq);
            if cli.exact && !decreasing {
                return Err(Failure::Assertion(
                    "ergodicity diagnostic is not nonincreasing".into(),
                ));
            }
            let mut config = base_config(cli);
            config.push(("m".into(), args.m.to_string()));
            config.push(("depth".into(), args.depth.to_string()));
            Ok(Report {
                command: "skew".into(),
                config,
                columns: vec!["n".into(), "mean_distance_sq".into(), "max_distance_sq".into()],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.n.to_string(),
                            r.mean_distance_sq.to_string(),
                            r.max_distance_sq.to_string(),
                        ]
                    })
                    .collect(),
                summary: vec![("nonincreasing".into(), decreasing.to_string())],
            })
        }
        SkewMode::Limit => {
            if args.m != 2 {
                return Err(Failure::Config(
                    "the built-in skew limit fixture needs --m 2".into(),
                ));
            }
            let degrees = parse_usize_list(&args.degrees)?;
            let work: u128 = degrees
                .iter()
                .map(|&d| (p as u128).pow(d as u32 + 1))
                .sum();
            if let Some(r) = gate(cli, "skew", &[("g_evaluations", work)])? {
                return Ok(r);
            }
            let alpha = default_alpha(p, args.depth)?;
            // Fixture: a_{01} = -t^2, a_{02} = -1, a_{12} = 1, nodes (0,1,2):
            // B_2 vanishes identically, B_1(g) = g - t^2, J is killed by a
            // free slot.
            let mut chars = vec![vec![FpPoly::zero(p); 2]; 3];
            chars[0][0] = FpPoly::new(p, vec![0, 0, p - 1]);
            chars[0][1] = FpPoly::constant(p, p - 1);
            chars[1][1] = FpPoly::one(p);
            let mut rows = Vec::new();
            let mut means = Vec::new();
            for &d in &degrees {
                let gs: Vec<FpPoly> = (0..(p as usize).pow(d as u32 + 1))
                    .map(|i| FpPoly::from_index(p, d + 1, i))
                    .filter(|g| g.degree() == Some(d))
                    .collect();
                let report = skew_limit_report(2, &[0, 1, 2], &chars, &alpha, &gs)?;
                let nonzero = report.rows.iter().filter(|r| r.diff_abs > 1e-12).count();
                let mean: f64 = report.rows.iter().map(|r| r.diff_abs).sum::<f64>()
                    / report.rows.len() as f64;
                means.push(mean);
                rows.push(vec![
                    d.to_string(),
                    report.rows.len().to_string(),
                    nonzero.to_string(),
                    fmt_f64(mean),
                ]);
            }
            let decreasing = means.windows(2).all(|w| w[1] <= w[0]);
            if cli.exact && !decreasing {
                return Err(Failure::Assertion(
                    "skew limit difference does not decrease with deg(g)".into(),
                ));
            }
            let mut config = base_config(cli);
            config.push(("degrees".into(), args.degrees.clone()));
            Ok(Report {
                command: "skew".into(),
                config,
                columns: vec![
                    "deg_g".into(),
                    "count".into(),
                    "nonzero_diffs".into(),
                    "mean_abs_diff".into(),
                ],
                rows,
                summary: vec![("nonincreasing".into(), decreasing.to_string())],
            })
        }
    }
}

fn cmd_universal(cli: &Cli, args: &UniversalArgs) -> CmdResult {
    let p = cli.prime;
    let n = cli.dim;
    let work = (p as u128).pow(n as u32) * (p as u128).pow(n as u32);
    if let Some(r) = gate(cli, "universal", &[("shift_pairs", work)])? {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let lambda = SymmetricForm::random(p, n, args.level, args.udim, &mut rng);
    let sys = UniversalSystem::new(p, n, args.level, lambda)?;
    let report = sys.verify();
    let pass = report.action_pass && report.representation_pass && report.cocycle_structure_pass;
    if !pass {
        return Err(Failure::Assertion(
            "universal system verification failed".into(),
        ));
    }
    let mut config = base_config(cli);
    config.push(("level".into(), args.level.to_string()));
    Ok(Report {
        command: "universal".into(),
        config,
        columns: vec!["check".into(), "pass".into()],
        rows: vec![
            vec!["action_law".into(), report.action_pass.to_string()],
            vec![
                "representation".into(),
                report.representation_pass.to_string(),
            ],
            vec![
                "cocycle_structure".into(),
                report.cocycle_structure_pass.to_string(),
            ],
        ],
        summary: vec![
            ("state_dim".into(), report.state_dim.to_string()),
            ("state_count".into(), report.state_count.to_string()),
            ("pairs_checked".into(), report.pairs_checked.to_string()),
        ],
    })
}

fn run(cli: &Cli) -> CmdResult {
    weylab::fp::validate_prime(cli.prime)?;
    match &cli.cmd {
        Cmd::Limit(a) => cmd_limit(cli, a),
        Cmd::SecondLimit(a) => cmd_second_limit(cli, a),
        Cmd::Gowers(a) => cmd_gowers(cli, a),
        Cmd::Scan(a) => cmd_scan(cli, a),
        Cmd::Double(a) => cmd_double(cli, a),
        Cmd::Triple(a) => cmd_triple(cli, a),
        Cmd::Counterex(a) => cmd_counterex(cli, a),
        Cmd::Skew(a) => cmd_skew(cli, a),
        Cmd::Universal(a) => cmd_universal(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }
    match run(&cli) {
        Ok(report) => {
            let text = report.render(cli.format);
            match &cli.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
