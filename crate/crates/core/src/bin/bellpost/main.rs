//! `bellpost`: command-line front end.
//!
//! Exit codes: `dsep` returns 0 when separated and 1 when connected;
//! `certify` returns 0 when certified and 1 when not certifiable; every
//! command returns 2 on usage, input or I/O errors.

mod angle;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bellpost::causal::{DSepQuery, PreparedTemplate};
use bellpost::dsl::{parse_query, parse_template};
use bellpost::inequality::{
    hybrid_bound_bruteforce, no_signalling_check, outcome_pattern, svetlichny_value, BoundOptions,
    DistributionTable,
};
use bellpost::postselection::{certify, BellScenario, PostselectionRule};
use bellpost::ys::{
    angle_table, full_distribution, postselect_single_click, AngleSet, PhaseSettings,
    OPTIMAL_ANGLES,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Largest party count accepted by `certify`.
const MAX_CERTIFY_PARTIES: usize = 8;
const HYBRID_BOUND: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(
    name = "bellpost",
    version,
    about = "Postselection certification and Svetlichny tooling"
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Tolerance for floating-point comparisons.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive_float)]
    tol: f64,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide a d-separation query on a diagram.
    Dsep {
        /// Diagram document (`.cg`).
        diagram: PathBuf,
        /// Query document (`.cq`).
        query: PathBuf,
        /// List every open path instead of the first one.
        #[arg(long, visible_alias = "all")]
        all_paths: bool,
    },
    /// Certify a postselection decided by any `deciders` of `n` parties.
    Certify {
        /// Number of parties (2 to 8).
        #[arg(long)]
        n: usize,
        /// Size of every subset of parties able to decide the postselection.
        #[arg(long)]
        deciders: usize,
    },
    /// Simulate the three-photon interferometer.
    Ys {
        /// Phases of A, B and C in radians (`pi` literals allowed).
        #[arg(long, num_args = 3, value_names = ["PHI_A", "PHI_B", "PHI_C"],
              allow_hyphen_values = true, value_parser = angle::parse_angle,
              conflicts_with = "optimal_angles")]
        phases: Option<Vec<f64>>,
        /// Emit all 56 detection patterns (CSV in text format).
        #[arg(long, conflicts_with_all = ["postselect", "optimal_angles"])]
        full: bool,
        /// Emit the table conditioned on one click per party.
        #[arg(long, conflicts_with = "optimal_angles")]
        postselect: bool,
        /// Assemble the eight-setting table at the optimal angles and
        /// evaluate the Svetlichny expression.
        #[arg(long, alias = "svetlichny-paper-angles")]
        optimal_angles: bool,
    },
    /// Maximize the Svetlichny value over deterministic hybrid strategies.
    Bound {
        /// Only fully local strategies.
        #[arg(long)]
        local_only: bool,
        /// Only pair responses without signalling inside the pair.
        #[arg(long)]
        nosignalling_pairs: bool,
    },
    /// Evaluate the Svetlichny expression on a table file (JSON, or CSV by
    /// extension).
    Svetlichny {
        /// Three-party outcome table (`.csv` or JSON).
        table: PathBuf,
    },
}

fn positive_float(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                // a closed reader (e.g. `| head`) is not an error
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                    Err(e).context("cannot write to stdout")
                }
                _ => Ok(()),
            }
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn cmd_dsep(common: &Common, diagram: &Path, query: &Path, all_paths: bool) -> Result<u8> {
    let dsrc = read(diagram)?;
    let template = parse_template(&dsrc)
        .map_err(|e| anyhow::anyhow!(e.render(&dsrc, &diagram.display().to_string())))?;
    let qsrc = read(query)?;
    let q: DSepQuery = parse_query(&qsrc)
        .map_err(|e| anyhow::anyhow!(e.render(&qsrc, &query.display().to_string())))?;
    let prep = PreparedTemplate::new(&template)?;
    let paths = if all_paths {
        prep.open_paths(&q)?
    } else {
        prep.first_open_path(&q)?.into_iter().collect()
    };
    let separated = paths.is_empty();
    let out = match common.format {
        Format::Json => pretty(&json!({
            "diagram": template.name(),
            "query": q.to_string(),
            "expansions": prep.dags().len(),
            "separated": separated,
            "open_paths": paths,
        })),
        Format::Text => {
            let mut s = format!("{}\n", if separated { "SEPARATED" } else { "CONNECTED" });
            for p in &paths {
                s.push_str(&format!("open path {p}\n"));
            }
            s
        }
    };
    emit(common, &out)?;
    Ok(if separated { 0 } else { 1 })
}

fn cmd_certify(common: &Common, n: usize, deciders: usize) -> Result<u8> {
    if !(2..=MAX_CERTIFY_PARTIES).contains(&n) {
        bail!("--n must lie in [2, {MAX_CERTIFY_PARTIES}], got {n}");
    }
    let s = BellScenario::new(n)?;
    let r = PostselectionRule::new(deciders, &s)?;
    let report = certify(&s, &r);
    let out = match common.format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    emit(common, &out)?;
    Ok(if report.certified() { 0 } else { 1 })
}

fn postselected_text(p: &PhaseSettings) -> Result<(String, serde_json::Value)> {
    let ps = postselect_single_click(&full_distribution(p))?;
    let mut s = String::from("outcomes,probability\n");
    for (o, v) in ps.probs.iter().enumerate() {
        s.push_str(&format!("{},{v}\n", outcome_pattern(3, o)));
    }
    s.push_str(&format!(
        "# success probability {}\n# correlator {}\n",
        ps.success_probability,
        ps.correlator()
    ));
    let rows: serde_json::Map<String, serde_json::Value> = ps
        .probs
        .iter()
        .enumerate()
        .map(|(o, v)| (outcome_pattern(3, o), json!(v)))
        .collect();
    let j = json!({
        "phases": p,
        "success_probability": ps.success_probability,
        "correlator": ps.correlator(),
        "probabilities": rows,
    });
    Ok((s, j))
}

fn svetlichny_report(
    common: &Common,
    table: &DistributionTable,
) -> Result<(String, serde_json::Value)> {
    let v = svetlichny_value(table)?;
    let ns = no_signalling_check(table, common.tol);
    let violates = v.value > HYBRID_BOUND + common.tol;
    let mut s = String::new();
    for t in &v.terms {
        s.push_str(&format!(
            "{:+} <{}> = {:.12}\n",
            t.sign, t.settings, t.correlator
        ));
    }
    s.push_str(&format!("I = {:.12}\n", v.value));
    s.push_str(&format!(
        "hybrid bound {HYBRID_BOUND}: {}\n",
        if violates { "violated" } else { "satisfied" }
    ));
    s.push_str(&format!(
        "no-signalling: {} (worst discrepancy {:e})\n",
        if ns.passed { "pass" } else { "FAIL" },
        ns.worst
    ));
    let j = json!({
        "value": v.value,
        "terms": v.terms,
        "violates_hybrid_bound": violates,
        "no_signalling": ns,
    });
    Ok((s, j))
}

fn cmd_ys(
    common: &Common,
    phases: Option<&[f64]>,
    full: bool,
    postselect: bool,
    optimal: bool,
) -> Result<u8> {
    let out = if optimal {
        let angles: AngleSet = OPTIMAL_ANGLES;
        let table = angle_table(&angles)?;
        let (s, mut j) = svetlichny_report(common, &table)?;
        match common.format {
            Format::Text => s,
            Format::Json => {
                j["table"] = serde_json::from_str(&table.to_json())?;
                pretty(&j)
            }
        }
    } else {
        let p = match phases {
            Some(&[a, b, c]) => PhaseSettings::new(a, b, c)?,
            Some(_) => bail!("--phases takes three values"),
            None => PhaseSettings::zero(),
        };
        if full {
            let d = full_distribution(&p);
            match common.format {
                Format::Text => d.to_csv(),
                Format::Json => d.to_json() + "\n",
            }
        } else if postselect {
            let (s, j) = postselected_text(&p)?;
            match common.format {
                Format::Text => s,
                Format::Json => pretty(&j),
            }
        } else {
            let ps = postselect_single_click(&full_distribution(&p))?;
            match common.format {
                Format::Text => format!("correlator {}\n", ps.correlator()),
                Format::Json => pretty(&json!({ "phases": p, "correlator": ps.correlator() })),
            }
        }
    };
    emit(common, &out)?;
    Ok(0)
}

fn cmd_bound(common: &Common, local_only: bool, nosignalling_pairs: bool) -> Result<u8> {
    let r = hybrid_bound_bruteforce(BoundOptions {
        local_only,
        nosignalling_pairs,
    });
    let out = match common.format {
        Format::Text => format!(
            "max I = {} over {} deterministic strategies\nargmax: {}\n",
            r.max, r.evaluated, r.argmax
        ),
        Format::Json => pretty(&json!({
            "max": r.max,
            "evaluated": r.evaluated,
            "argmax": r.argmax,
            "argmax_description": r.argmax.to_string(),
        })),
    };
    emit(common, &out)?;
    Ok(0)
}

fn cmd_svetlichny(common: &Common, path: &Path) -> Result<u8> {
    let text = read(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let table = if is_csv {
        DistributionTable::from_csv(&text)
    } else {
        DistributionTable::from_json(&text)
    }
    .with_context(|| format!("cannot load table from {}", path.display()))?;
    let (s, j) = svetlichny_report(common, &table)?;
    emit(
        common,
        &match common.format {
            Format::Text => s,
            Format::Json => pretty(&j),
        },
    )?;
    Ok(0)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BELLPOST_THREADS") {
        let n: usize =
            v.parse().ok().filter(|&n| n > 0).with_context(|| {
                format!("BELLPOST_THREADS must be a positive integer, got `{v}`")
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cfg: RunConfig) -> Result<u8> {
    configure_threads()?;
    let c = &cfg.common;
    match &cfg.command {
        Command::Dsep {
            diagram,
            query,
            all_paths,
        } => cmd_dsep(c, diagram, query, *all_paths),
        Command::Certify { n, deciders } => cmd_certify(c, *n, *deciders),
        Command::Ys {
            phases,
            full,
            postselect,
            optimal_angles,
        } => cmd_ys(c, phases.as_deref(), *full, *postselect, *optimal_angles),
        Command::Bound {
            local_only,
            nosignalling_pairs,
        } => cmd_bound(c, *local_only, *nosignalling_pairs),
        Command::Svetlichny { table } => cmd_svetlichny(c, table),
    }
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
