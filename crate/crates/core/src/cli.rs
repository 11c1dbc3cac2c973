//! The `histories` command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 resource budget exceeded.
//! Results go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ModelConfig, ModelSpec};
use crate::ergodic::{time_average_series, DiscreteMap, Region, GOLDEN_ROTATION};
use crate::error::{HistoriesError, Result};
use crate::history::{
    decoherence_report_with_budget, Budget, History, HistorySpace, DEFAULT_DECOHERENCE_TOL,
};
use crate::models::{
    count_fraction, measure_fraction, measure_outside, partial_decoherence_reference_query,
    BranchTree, FrequencyQuery,
};
use crate::operator::DEFAULT_ALG_TOL;
use crate::output::{Format, Table};
use crate::probability::{
    absolute_measures, chance_of_present, compare_views_with_tolerance, fatalist_future,
    minimalist_future, retrodictive_chance,
};

#[derive(Debug, Parser)]
#[command(name = "histories", version, about = "Decoherent-histories probability engine")]
pub struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Override both the algebraic tolerance and the decoherence tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Recorded in the output header; all computations are exact and ignore it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Memory ceiling for materialized branch vectors
    #[arg(long, global = true, default_value_t = Budget::default().max_bytes as u64)]
    budget_bytes: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum ModelKind {
    Bernoulli,
    PartialDecoherence,
    QubitXz,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum MapKind {
    Rotation,
    Identity,
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// Model config file (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Number of trials
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Tree weights per level
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Grid position of the present time
    #[arg(long)]
    present: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decoherence report over all full histories
    Decohere(ModelArgs),
    /// Absolute measures, Born and chance values of the present, minimalist,
    /// fatalist and retrodictive probabilities
    Probs(ModelArgs),
    /// Minimalist against fatalist future probabilities over a parameter sweep
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        /// Present outcome index
        #[arg(long, default_value_t = 0)]
        present_outcome: usize,
        /// Future outcomes, one per time after the present (default: all 0)
        #[arg(long, value_delimiter = ',')]
        future: Option<Vec<usize>>,
    },
    /// Branch count fraction against branch measure fraction
    Tree {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "N")]
        n: Option<usize>,
        /// Relative frequency window lo:hi
        #[arg(long, value_parser = parse_window, default_value = "0:1")]
        window: (f64, f64),
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        target: usize,
    },
    /// Measure inside and outside a frequency window as N grows
    Bernoulli {
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        p: Vec<f64>,
        #[arg(long = "N", value_delimiter = ',', default_value = "10,50,100,500")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        halfwidth: f64,
        /// Fixed window lo:hi instead of p ± halfwidth
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
    /// Time-average series for a map on the unit interval
    Ergodic {
        #[arg(long, value_enum, default_value = "rotation")]
        map: MapKind,
        /// Rotation number ("golden" or a number)
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, value_parser = parse_window, default_value = "0:0.3")]
        region: (f64, f64),
        #[arg(long = "T", default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        x0: Vec<f64>,
    },
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got \"{s}\""))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("window {lo}:{hi} is empty"));
    }
    Ok((lo, hi))
}

struct Settings {
    alg_tol: Option<f64>,
    dec_tol: f64,
    budget: Budget,
}

impl Settings {
    fn space(&self, spec: &ModelSpec, config_tol: Option<f64>) -> Result<HistorySpace> {
        spec.build_space(self.alg_tol.or(config_tol).unwrap_or(DEFAULT_ALG_TOL))
    }
}

fn one(values: &[f64], flag: &str) -> Result<Option<f64>> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(HistoriesError::Validation(format!("{flag} takes a single value here"))),
    }
}

/// Expands model flags into one or more (parameter label, spec) pairs.
type LabelledSpecs = (Vec<(String, ModelSpec)>, Option<f64>);

fn model_specs(args: &ModelArgs) -> Result<LabelledSpecs> {
    if let Some(path) = &args.config {
        if args.model.is_some() {
            return Err(HistoriesError::Validation("give either --config or --model, not both".into()));
        }
        let cfg = ModelConfig::load(path)?;
        return Ok((vec![(path.display().to_string(), cfg.spec()?)], cfg.tolerance));
    }
    let kind = args.model.ok_or_else(|| HistoriesError::Validation("need --model or --config".into()))?;
    let present = args.present.unwrap_or(0);
    let specs = match kind {
        ModelKind::Bernoulli => {
            let n = args.n.ok_or_else(|| HistoriesError::Validation("bernoulli model needs --N".into()))?;
            let ps = if args.p.is_empty() { vec![0.5] } else { args.p.clone() };
            ps.into_iter()
                .map(|p| (format!("p={p:?}"), ModelSpec::Bernoulli { n, p, present }))
                .collect()
        }
        ModelKind::PartialDecoherence => {
            let deltas = if args.delta.is_empty() { vec![0.0] } else { args.delta.clone() };
            deltas
                .into_iter()
                .map(|delta| (format!("delta={delta:?}"), ModelSpec::PartialDecoherence { delta }))
                .collect()
        }
        ModelKind::QubitXz => vec![("qubit-xz".to_string(), ModelSpec::QubitXz)],
        ModelKind::Tree => {
            let n = args.n.ok_or_else(|| HistoriesError::Validation("tree model needs --N".into()))?;
            let weights = if !args.weights.is_empty() {
                args.weights.clone()
            } else if let Some(p) = one(&args.p, "--p")? {
                vec![p, 1.0 - p]
            } else {
                vec![0.5, 0.5]
            };
            vec![(format!("weights={weights:?}"), ModelSpec::Tree { n, weights, present })]
        }
    };
    Ok((specs, None))
}

fn decohere(args: &ModelArgs, settings: &Settings) -> Result<Table> {
    let (specs, config_tol) = model_specs(args)?;
    let mut table = Table::new(
        "decohere",
        &[
            "model",
            "param",
            "n_histories",
            "max_offdiag",
            "max_normalized_offdiag",
            "tolerance",
            "passes",
            "offender_a",
            "offender_b",
        ],
    );
    for (param, spec) in specs {
        let space = settings.space(&spec, config_tol)?;
        let report = decoherence_report_with_budget(&space, settings.dec_tol, &settings.budget)?;
        let (a, b) = report
            .offender
            .as_ref()
            .map(|(a, b)| (space.describe(a), space.describe(b)))
            .unwrap_or_default();
        table.push(vec![
            spec.name().into(),
            param.into(),
            report.n_histories.into(),
            report.max_offdiag.into(),
            report.max_normalized_offdiag.into(),
            report.tolerance.into(),
            report.passes.into(),
            a.into(),
            b.into(),
        ]);
    }
    Ok(table)
}

fn future_histories(space: &HistorySpace) -> Result<Vec<History>> {
    Ok(crate::history::enumerate_histories(space, space.future_range())?.collect())
}

fn probs(args: &ModelArgs, settings: &Settings) -> Result<Table> {
    let (specs, config_tol) = model_specs(args)?;
    let mut table = Table::new("probs", &["model", "param", "quantity", "segment", "value"]);
    for (param, spec) in specs {
        let space = settings.space(&spec, config_tol)?;
        let mut emit = |quantity: &str, segment: String, value: f64| {
            table.push(vec![
                spec.name().into(),
                param.clone().into(),
                quantity.into(),
                segment.into(),
                value.into(),
            ]);
        };
        for (h, m) in absolute_measures(&space, &settings.budget)? {
            emit("absolute", space.describe(&h), m);
        }
        let present_outcomes = space.decomposition(space.present()).map_or(0, |d| d.len());
        let pasts: Vec<History> =
            crate::history::enumerate_histories(&space, space.past_range())?.collect();
        let futures = future_histories(&space)?;
        for a0 in 0..present_outcomes {
            let event = History::event(space.present(), a0);
            let label = space.describe(&event);
            let born = space.segment_measure(&event)?;
            emit("born_present", label.clone(), born);
            let chance = chance_of_present(&space, a0)?;
            emit("chance_present", label.clone(), chance);
            if born > space.tol() {
                for f in &futures {
                    let seg = format!("{} | {label}", space.describe(f));
                    emit("minimalist", seg.clone(), minimalist_future(&space, f, a0)?);
                    emit("fatalist", seg, fatalist_future(&space, f, a0)?);
                }
            }
            if chance > space.tol() {
                for past in &pasts {
                    let seg = format!("{} | {label}", space.describe(past));
                    emit("retrodictive", seg, retrodictive_chance(&space, past, a0)?);
                }
            }
        }
    }
    Ok(table)
}

fn compare(args: &ModelArgs, present_outcome: usize, future: &Option<Vec<usize>>, settings: &Settings) -> Result<Table> {
    let (specs, config_tol) = model_specs(args)?;
    let mut table = Table::new(
        "compare",
        &[
            "model",
            "param",
            "present",
            "future",
            "minimalist",
            "fatalist",
            "gap",
            "max_offdiag",
            "max_normalized_offdiag",
            "passes",
        ],
    );
    for (param, spec) in specs {
        let space = settings.space(&spec, config_tol)?;
        settings.budget.check(&space)?;
        let (f, a0) = match (future, &spec) {
            (None, ModelSpec::PartialDecoherence { .. }) if present_outcome == 0 => {
                partial_decoherence_reference_query()
            }
            (Some(outcomes), _) => (History::new(space.present() + 1, outcomes.clone()), present_outcome),
            (None, _) => (
                History::new(space.present() + 1, vec![0; space.future_range().len()]),
                present_outcome,
            ),
        };
        let cmp = compare_views_with_tolerance(&space, &f, a0, settings.dec_tol)?;
        table.push(vec![
            spec.name().into(),
            param.into(),
            space.describe(&History::event(space.present(), a0)).into(),
            space.describe(&f).into(),
            cmp.minimalist.into(),
            cmp.fatalist.into(),
            cmp.gap.into(),
            cmp.max_offdiag.into(),
            cmp.max_normalized_offdiag.into(),
            cmp.decoherence_passes.into(),
        ]);
    }
    Ok(table)
}

fn tree(
    config: &Option<PathBuf>,
    n: Option<usize>,
    window: (f64, f64),
    ps: &[f64],
    target: usize,
) -> Result<Table> {
    let mut trees = Vec::new();
    if let Some(path) = config {
        match ModelConfig::load(path)?.spec()? {
            ModelSpec::Tree { n, weights, .. } => trees.push(BranchTree::uniform(n, weights)?),
            other => {
                return Err(HistoriesError::Config(format!(
                    "tree subcommand needs model = \"tree\", got \"{}\"",
                    other.name()
                )))
            }
        }
    } else {
        let n = n.ok_or_else(|| HistoriesError::Validation("tree needs --N or --config".into()))?;
        let ps = if ps.is_empty() { vec![0.5] } else { ps.to_vec() };
        for p in ps {
            let weights = if target == 0 { vec![p, 1.0 - p] } else { vec![1.0 - p, p] };
            trees.push(BranchTree::uniform(n, weights)?);
        }
    }
    let query = FrequencyQuery::new(target, window.0, window.1)?;
    let mut table = Table::new(
        "tree",
        &["N", "window_lo", "window_hi", "p", "count_fraction", "measure_fraction"],
    );
    for tree in trees {
        if tree.branching() != 2 {
            return Err(HistoriesError::Unsupported(
                "count_fraction is defined for yes/no trials (two outcomes)".into(),
            ));
        }
        let n = tree.depth() as u64;
        let p = tree.level(0).and_then(|w| w.get(target)).copied().unwrap_or(f64::NAN);
        table.push(vec![
            n.into(),
            query.lo().into(),
            query.hi().into(),
            p.into(),
            count_fraction(n, &query).into(),
            measure_fraction(&tree, &query)?.into(),
        ]);
    }
    Ok(table)
}

fn bernoulli(ps: &[f64], ns: &[usize], halfwidth: f64, window: Option<(f64, f64)>) -> Result<Table> {
    let mut table = Table::new(
        "bernoulli",
        &["p", "N", "window_lo", "window_hi", "inside", "outside"],
    );
    for &p in ps {
        let query = match window {
            Some((lo, hi)) => FrequencyQuery::new(0, lo, hi)?,
            None => FrequencyQuery::around(0, p, halfwidth)?,
        };
        for &n in ns {
            let tree = BranchTree::bernoulli(n, p)?;
            table.push(vec![
                p.into(),
                n.into(),
                query.lo().into(),
                query.hi().into(),
                measure_fraction(&tree, &query)?.into(),
                measure_outside(&tree, &query)?.into(),
            ]);
        }
    }
    Ok(table)
}

fn checkpoints(steps: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |t| t.checked_mul(10))
        .take_while(|&t| t < steps)
        .collect();
    out.push(steps);
    out
}

fn ergodic(map: MapKind, alpha: &str, region: (f64, f64), steps: u64, x0s: &[f64]) -> Result<Table> {
    let alpha = match alpha {
        "golden" => GOLDEN_ROTATION,
        other => other
            .parse()
            .map_err(|_| HistoriesError::Validation(format!("bad rotation number \"{other}\"")))?,
    };
    let region = Region::interval(region.0, region.1)?;
    let points = checkpoints(steps);
    let mut series = Vec::new();
    for &x0 in x0s {
        let m = match map {
            MapKind::Rotation => DiscreteMap::rotation(vec![alpha], vec![x0])?,
            MapKind::Identity => DiscreteMap::identity(1, vec![x0])?,
        };
        series.push((x0, time_average_series(&m, &region, &points)?));
    }
    let name = match map {
        MapKind::Rotation => "rotation",
        MapKind::Identity => "identity",
    };
    let mut table = Table::new("ergodic", &["map", "x0", "T", "estimate", "x0_spread"]);
    for (k, &t) in points.iter().enumerate() {
        let values: Vec<f64> = series.iter().map(|(_, s)| s[k].value()).collect();
        let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().copied().fold(f64::INFINITY, f64::min);
        for ((x0, _), v) in series.iter().zip(&values) {
            table.push(vec![name.into(), (*x0).into(), t.into(), (*v).into(), spread.into()]);
        }
    }
    Ok(table)
}

fn execute(cli: &Cli) -> Result<Table> {
    let settings = Settings {
        alg_tol: cli.tol,
        dec_tol: cli.tol.unwrap_or(DEFAULT_DECOHERENCE_TOL),
        budget: Budget {
            max_bytes: cli.budget_bytes as u128,
        },
    };
    let mut table = match &cli.command {
        Command::Decohere(args) => decohere(args, &settings)?,
        Command::Probs(args) => probs(args, &settings)?,
        Command::Compare {
            model,
            present_outcome,
            future,
        } => compare(model, *present_outcome, future, &settings)?,
        Command::Tree {
            config,
            n,
            window,
            p,
            target,
        } => tree(config, *n, *window, p, *target)?,
        Command::Bernoulli { p, n, halfwidth, window } => bernoulli(p, n, *halfwidth, *window)?,
        Command::Ergodic {
            map,
            alpha,
            region,
            steps,
            x0,
        } => ergodic(*map, alpha, *region, *steps, x0)?,
    };
    table.seed = cli.seed;
    Ok(table)
}

/// Runs the CLI with explicit streams and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match execute(&cli) {
        Ok(table) => match table.write(format, out) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: writing output: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_resource() {
                2
            } else {
                1
            }
        }
    }
}
