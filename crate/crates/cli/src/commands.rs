use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cslab::cs_space::PartitionPrefix;
use cslab::e1::{
    blocks_agree_from, blowup_inverse, blowup_iso, cs_decode, cs_encode, e1_window_equiv,
    max_window_len, reduce_f, BinaryGrid, E1Witness, WindowMode,
};
use cslab::lemma::{
    bad_pairs, condition_one, condition_two, entropy_bounds, fusion_step, min_threshold_comb,
    random_ftable, ratio_r, ratio_threshold, CampaignState, CombRunner, EMapTable, FTable,
    Strategy,
};
use cslab::partition::{
    count_partitions, enumerate_equipartitions, enumerate_partitions, equipartition_count,
    SetPartition,
};
use cslab::report::fraction_string;
use cslab::rng::stream;
use cslab::tree::verify_tree;
use cslab::LabError;

use crate::args::{self, Cli, Command, Format, GlobalArgs, StrategyArgs};
use crate::output::{open, Rendered, Verdict};

/// Maps between checkpoint writes.
pub const CHECKPOINT_EVERY: u64 = 10_000;

#[derive(Debug)]
pub enum CliError {
    Lab(LabError),
    Io(String, io::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lab(LabError::Budget { .. } | LabError::Threshold { .. }) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lab(e) => write!(f, "{e}"),
            CliError::Io(what, e) => write!(f, "{what}: {e}"),
            CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}", path.display()), e))
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

/// The full invocation, embedded in reports for replay.
pub fn config_value(cli: &Cli) -> Value {
    let mut v = serde_json::to_value(&cli.command).expect("arguments serialize");
    let g = serde_json::to_value(&cli.global).expect("arguments serialize");
    if let (Value::Object(v), Value::Object(g)) = (&mut v, g) {
        v.extend(g);
    }
    v
}

fn resolve_strategy(s: &StrategyArgs, seed: u64) -> Result<Strategy> {
    Ok(match s.strategy.as_str() {
        "exhaustive" => Strategy::Exhaustive,
        "sampled" => Strategy::Sampled {
            count: s.samples,
            seed,
        },
        "adversarial" => Strategy::Adversarial {
            budget: s.samples,
            seed,
        },
        other => other.parse()?,
    })
}

pub fn run(cli: &Cli) -> Result<Verdict> {
    let g = &cli.global;
    let config = config_value(cli);
    if let Command::Enumerate(a) = &cli.command {
        return enumerate(a, g);
    }
    let rendered = match &cli.command {
        Command::Enumerate(_) => unreachable!("handled above"),
        Command::Count(a) => count(a)?,
        Command::VerifyComb(a) => verify_comb(a, g, config)?,
        Command::VerifyTree(a) => {
            let strategy = resolve_strategy(&a.strategy, g.seed)?;
            let mut report = verify_tree(a.k, a.block_size, strategy, g.budget_cap)?;
            report.config = Some(config);
            Rendered::from_report(&report)
        }
        Command::BadPairs(a) => {
            let n = a.k * a.block_size;
            let e = match &a.emap {
                Some(p) => EMapTable::parse(n, &read(p)?)?,
                None => EMapTable::identity(n),
            };
            let mut report = bad_pairs(&e, a.k, a.m, a.block_size)?;
            report.config = Some(config);
            let mut r = Rendered::from_report(&report);
            r.verdict = if report.witness.is_some() {
                Verdict::Pass
            } else {
                Verdict::Counterexample
            };
            r
        }
        Command::FindThreshold(a) => find_threshold(a, g)?,
        Command::EntropyCheck(a) => entropy_check(a)?,
        Command::Ratio(a) => ratio(a)?,
        Command::FusionDemo(a) => fusion_demo(a, g)?,
        Command::ReduceE1(a) => reduce_e1(a, g)?,
        Command::Blowup(a) => {
            let (x, d): (PartitionPrefix, PartitionPrefix) = (a.a.parse()?, a.d.parse()?);
            let (label, out) = if a.inverse {
                ("A", blowup_inverse(&x, &d)?)
            } else {
                ("blowup", blowup_iso(&x, &d)?)
            };
            Rendered::from_fields(vec![(label, json!(out.to_string()))], Verdict::Pass)
        }
        Command::Encode(a) => match (&a.a, &a.decode) {
            (Some(text), _) => {
                let grid = cs_encode(&text.parse()?)?;
                Rendered::from_fields(vec![("grid", json!(grid.to_string()))], Verdict::Pass)
            }
            (None, Some(path)) => {
                let grid: BinaryGrid = read(path)?.parse()?;
                Rendered::from_fields(
                    vec![("prefix", json!(cs_decode(&grid)?.to_string()))],
                    Verdict::Pass,
                )
            }
            (None, None) => return usage("encode needs --a or --decode"),
        },
    };
    emit(&rendered, g)?;
    Ok(rendered.verdict)
}

fn emit(r: &Rendered, g: &GlobalArgs) -> Result<()> {
    let what = || {
        g.out
            .as_ref()
            .map_or("stdout".into(), |p| p.display().to_string())
    };
    let mut out =
        open(g.out.as_deref()).map_err(|e| CliError::Io(format!("opening {}", what()), e))?;
    r.write(g.format, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("writing {}", what()), e))
}

fn enumerate(a: &args::EnumerateArgs, g: &GlobalArgs) -> Result<Verdict> {
    let items: Box<dyn Iterator<Item = SetPartition>> = match (a.n, a.k, a.block_size) {
        (None, Some(k), Some(n)) => Box::new(enumerate_equipartitions(k, n, a.m)?),
        (Some(n), None, None) => Box::new(enumerate_partitions(n, a.m)?),
        _ => return usage("enumerate needs either --n or both --k and --N"),
    };
    let what = || {
        g.out
            .as_ref()
            .map_or("stdout".into(), |p| p.display().to_string())
    };
    let io_err = |e| CliError::Io(format!("writing {}", what()), e);
    let mut out = open(g.out.as_deref()).map_err(io_err)?;
    match g.format {
        Format::Table => {
            for p in items {
                writeln!(out, "{p}").map_err(io_err)?;
            }
        }
        Format::Csv => {
            writeln!(out, "rgs").map_err(io_err)?;
            for p in items {
                writeln!(out, "\"{p}\"").map_err(io_err)?;
            }
        }
        Format::Json => {
            let all: Vec<String> = items.map(|p| p.to_string()).collect();
            serde_json::to_writer(&mut out, &all).map_err(|e| io_err(e.into()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(Verdict::Pass)
}

fn count(a: &args::CountArgs) -> Result<Rendered> {
    let (what, value) = match (a.bell, a.n, a.k, a.block_size) {
        (Some(n), None, None, None) => (format!("Bell({n})"), count_partitions(n).to_string()),
        (None, Some(n), None, None) if a.m == 0 => {
            (format!("|Q({n})|"), count_partitions(n).to_string())
        }
        (None, Some(n), None, None) => (
            format!("|Q^{}({n})|", a.m),
            enumerate_partitions(n, a.m)?.count().to_string(),
        ),
        (None, None, Some(k), Some(n)) if a.m == 0 => (
            format!("|Q_{k}({})|", k * n),
            equipartition_count(k, n).to_string(),
        ),
        (None, None, Some(k), Some(n)) => (
            format!("|Q_{k}^{}({})|", a.m, k * n),
            enumerate_equipartitions(k, n, a.m)?.count().to_string(),
        ),
        _ => return usage("count needs exactly one of --bell, --n, or --k with --N"),
    };
    Ok(Rendered::from_fields(
        vec![("count", json!(value)), ("of", json!(what))],
        Verdict::Pass,
    ))
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    campaign: Value,
    state: CampaignState,
}

fn checkpoint_path(a: &args::VerifyCombArgs, g: &GlobalArgs) -> Option<PathBuf> {
    a.checkpoint.clone().or_else(|| {
        g.out
            .as_ref()
            .map(|o| PathBuf::from(format!("{}.checkpoint", o.display())))
    })
}

fn verify_comb(a: &args::VerifyCombArgs, g: &GlobalArgs, config: Value) -> Result<Rendered> {
    let start = Instant::now();
    let strategy = resolve_strategy(&a.strategy, g.seed)?;
    let runner = CombRunner::new(a.k, a.m, a.block_size, strategy, g.budget_cap)?;
    let campaign =
        json!({ "k": a.k, "m": a.m, "N": a.block_size, "strategy": strategy.to_string() });
    let path = checkpoint_path(a, g);
    let mut state = match &path {
        Some(p) if p.exists() => {
            let saved: Checkpoint = serde_json::from_str(&read(p)?).map_err(|e| {
                CliError::Usage(format!("unreadable checkpoint {}: {e}", p.display()))
            })?;
            if saved.campaign != campaign {
                return usage(format!(
                    "checkpoint {} belongs to a different campaign",
                    p.display()
                ));
            }
            saved.state
        }
        _ => runner.fresh_state(),
    };
    while state.next < runner.total {
        let end = state.next + CHECKPOINT_EVERY;
        runner.advance(&mut state, end);
        if let Some(p) = &path {
            let text = serde_json::to_string(&Checkpoint {
                campaign: campaign.clone(),
                state: state.clone(),
            })
            .expect("checkpoint serializes");
            fs::write(p, text).map_err(|e| CliError::Io(format!("writing {}", p.display()), e))?;
        }
    }
    if let Some(p) = &path {
        // finished: the report supersedes the state file
        let _ = fs::remove_file(p);
    }
    let mut report = runner.report(&state, start.elapsed().as_millis() as u64);
    report.config = Some(config);
    Ok(Rendered::from_report(&report))
}

fn find_threshold(a: &args::FindThresholdArgs, g: &GlobalArgs) -> Result<Rendered> {
    let strategy = resolve_strategy(&a.strategy, g.seed)?;
    let (threshold, steps) = min_threshold_comb(a.k, a.m, strategy, a.n_max, g.budget_cap)?;
    let trail: Vec<String> = steps
        .iter()
        .map(|s| {
            format!(
                "N={}: {} failing, ratio {}",
                s.block_size, s.failing_maps, s.certificate_ratio
            )
        })
        .collect();
    let verdict = if threshold.is_some() {
        Verdict::Pass
    } else {
        Verdict::Threshold
    };
    Ok(Rendered::from_fields(
        vec![
            ("k", json!(a.k)),
            ("m", json!(a.m)),
            ("strategy", json!(strategy.to_string())),
            ("seed", json!(g.seed)),
            ("empirical_threshold", json!(threshold)),
            (
                "note",
                json!("empirical for the tested maps only; not the lemma's constant"),
            ),
            (
                "steps",
                if g.format == Format::Json {
                    json!(steps)
                } else {
                    json!(trail.join("\n"))
                },
            ),
        ],
        verdict,
    ))
}

fn entropy_check(a: &args::EntropyCheckArgs) -> Result<Rendered> {
    let mut failures = Vec::new();
    let mut pairs = 0u64;
    for b in 1..=a.b_max {
        for x in 0..=b {
            pairs += 1;
            if !entropy_bounds(x, b)?.holds() {
                failures.push(format!("({x},{b})"));
            }
        }
    }
    let verdict = if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Counterexample
    };
    Ok(Rendered::from_fields(
        vec![
            ("b_max", json!(a.b_max)),
            ("pairs", json!(pairs)),
            ("failures", json!(failures.join(" "))),
        ],
        verdict,
    ))
}

fn ratio(a: &args::RatioArgs) -> Result<Rendered> {
    let tuple = json!(format!("({},{},{},{})", a.a1, a.a2, a.b1, a.b2));
    match (a.window, a.block_size) {
        (Some(window), _) => {
            let m = ratio_threshold(a.a1, a.a2, a.b1, a.b2, window, a.scan)?;
            let verdict = if m.is_some() {
                Verdict::Pass
            } else {
                Verdict::Threshold
            };
            Ok(Rendered::from_fields(
                vec![
                    ("tuple", tuple),
                    ("window", json!(window)),
                    ("empirical_M", json!(m)),
                ],
                verdict,
            ))
        }
        (None, Some(n)) => {
            let r = ratio_r(a.a1, a.a2, a.b1, a.b2, n)?;
            let below = r.numer() < r.denom();
            Ok(Rendered::from_fields(
                vec![
                    ("tuple", tuple),
                    ("N", json!(n)),
                    ("R", json!(fraction_string(&r))),
                    ("below_one", json!(below)),
                ],
                Verdict::Pass,
            ))
        }
        (None, None) => usage("ratio needs --N or --window"),
    }
}

fn fusion_demo(a: &args::FusionDemoArgs, g: &GlobalArgs) -> Result<Rendered> {
    let b: PartitionPrefix = match &a.b {
        Some(text) => text.parse()?,
        None => PartitionPrefix::discrete(a.len),
    };
    let f = match &a.f {
        Some(p) => FTable::parse(&read(p)?)?,
        None => random_ftable(&b, &[a.mprime], g.seed)?,
    };
    let step = fusion_step(&b, &f, a.n0, a.ell, a.mprime)?;
    let one = condition_one(&b, &step.next, a.n0 + a.ell)?;
    let two = condition_two(&step.next, &f, step.depth)?;
    let verdict = if one && two.violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Counterexample
    };
    Ok(Rendered::from_fields(
        vec![
            ("B", json!(b.to_string())),
            ("Mprime", json!(a.mprime)),
            ("n0", json!(a.n0)),
            ("ell", json!(a.ell)),
            ("seed", json!(g.seed)),
            ("f_entries", json!(f.len())),
            ("witness", json!(step.witness.to_string())),
            ("next", json!(step.next.to_string())),
            ("condition_one", json!(one)),
            ("condition_two_checked", json!(two.checked)),
            ("condition_two_not_applicable", json!(two.not_applicable)),
            ("condition_two_violations", json!(two.violations.len())),
        ],
        verdict,
    ))
}

fn reduce_e1(a: &args::ReduceE1Args, g: &GlobalArgs) -> Result<Rendered> {
    let x: BinaryGrid = match &a.grid {
        Some(p) => read(p)?.parse()?,
        None => BinaryGrid::random(a.rows, a.cols, &mut stream(g.seed, 0))?,
    };
    let horizon = a.len.unwrap_or_else(|| max_window_len(x.rows(), x.cols()));
    let fx = reduce_f(&x, horizon)?;
    let mut fields = vec![
        ("L", json!(horizon)),
        ("x", json!(x.to_string())),
        ("f_x", json!(fx.to_string())),
    ];
    if let Some(p) = &a.y {
        let y: BinaryGrid = read(p)?.parse()?;
        let fy = reduce_f(&y, horizon)?;
        let fixed = e1_window_equiv(&x, &y, WindowMode::Fixed)?;
        let tail = e1_window_equiv(&x, &y, WindowMode::Tail)?;
        let agree = match fixed {
            Some(E1Witness::Fixed(n0)) => Some(blocks_agree_from(&fx, &fy, 2 * n0 as u32)),
            _ => None,
        };
        fields.push(("f_y", json!(fy.to_string())));
        fields.push(("fixed_n0", json!(fixed.map(|w| format!("{w:?}")))));
        fields.push(("tail_shift", json!(tail.map(|w| format!("{w:?}")))));
        fields.push(("blocks_agree_from_2n0", json!(agree)));
        fields.push(("window", json!("verdicts hold inside the grid window only")));
    }
    Ok(Rendered::from_fields(fields, Verdict::Pass))
}
