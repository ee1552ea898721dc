//! `soe` — command-line interface to the sum-of-element-orders toolkit.
//!
//! Subcommands mirror the library: ψ/ψ'/ψ'' evaluation over group
//! descriptors, threshold classification, order spectra, the density
//! construction (`approximate`), the ψ''(C_n) collision search, preimage
//! queries, dyadic exclusion traces, the C_2 uniqueness check, and the
//! divergence diagnostic.
//!
//! All numeric inputs are exact decimal strings — integers as digits,
//! rationals as `num/den`. Floats are never parsed. Exit codes: 0 ok,
//! 1 domain/parse error, 2 resource/checkpoint error, 64 usage.

use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use soe_core::collision::{find_collisions, CollisionConfig, CollisionMode};
use soe_core::density::{approximate_with, divergence_report, DEFAULT_PRIME_BUDGET};
use soe_core::descriptor::GroupDescriptor;
use soe_core::error::Error;
use soe_core::preimage::{dyadic_exclusion_check, preimage_search, uniqueness_c2_check};
use soe_core::primes::SpfSieve;
use soe_core::psi::{psi, psi_double_prime, psi_prime_ratio, threshold_classify, RatioKind};
use soe_core::ratio::{parse_natural_str, ExactRatio};
use soe_core::spectrum::{abelian_spectrum, cyclic_spectrum};
use soe_core::PsiKeyIndex;

#[derive(Parser)]
#[command(
    name = "soe",
    about = "Exact arithmetic for the sum-of-element-orders functions psi, psi', psi''",
    version = concat!(env!("CARGO_PKG_VERSION"), " (schema v1)")
)]
struct Cli {
    /// Emit a stable JSON payload on stdout instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// psi(G): the sum of element orders.
    Psi(GroupSelect),
    /// psi'(G) = psi(G)/psi(C_|G|), in lowest terms.
    Psi1(GroupSelect),
    /// psi''(G) = psi(G)/|G|^2, in lowest terms.
    Psi2(GroupSelect),
    /// Group properties implied by a ratio exceeding the known thresholds.
    Classify {
        /// Which ratio the value is: psi1 or psi2.
        #[arg(long, value_parser = ["psi1", "psi2"])]
        kind: String,
        /// The ratio, as num/den.
        #[arg(long)]
        ratio: String,
    },
    /// The order spectrum of a group, expanded (size-guarded).
    Spectrum(GroupSelect),
    /// Find a cyclic witness with |psi''(witness) - target| <= epsilon.
    Approximate {
        /// Target in [0, 1], as num/den or an integer.
        #[arg(long)]
        target: String,
        /// Positive error budget, as num/den.
        #[arg(long)]
        epsilon: String,
        /// Fraction of epsilon spent on subset selection (the rest lifts), in (0, 1).
        #[arg(long, default_value = "1/2")]
        greedy_fraction: String,
        /// Abort after scanning this many primes (small targets blow up).
        #[arg(long, default_value_t = DEFAULT_PRIME_BUDGET)]
        prime_budget: u64,
    },
    /// Exhaustive search for psi''(C_m) = psi''(C_n), m < n <= max.
    Collisions {
        #[arg(long)]
        max: u64,
        #[arg(long, value_parser = ["exact-map", "sort-merge"], default_value = "exact-map")]
        mode: String,
        /// Directory for resumable checkpoints (forces sort-merge).
        /// Defaults to $SOE_CHECKPOINT_DIR when set.
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
        /// Continue from an existing checkpoint manifest.
        #[arg(long)]
        resume: bool,
        /// Where to write the m,n,num,den pair list ("-" = stdout).
        #[arg(long, default_value = "-")]
        csv: String,
        /// Sieve worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Sieve segment length (records per checkpoint).
        #[arg(long)]
        segment_len: Option<u64>,
    },
    /// All n <= max with psi''(C_n) = q.
    Preimage {
        /// The queried value, as num/den, in (0, 1].
        #[arg(long)]
        q: String,
        #[arg(long)]
        max: u64,
    },
    /// Machine-checked trace excluding a/2^r (a, r odd, value > 7/16) from Im psi''.
    ExcludeDyadic {
        #[arg(long)]
        a: String,
        #[arg(long)]
        r: u32,
    },
    /// Verify n = 2 is the unique cyclic preimage of 3/4 up to max.
    UniquenessC2 {
        #[arg(long)]
        max: u64,
    },
    /// Table of x_i = ln((p_i+1)/p_i): partial sums diverge, x_i*p_i -> 1.
    Divergence {
        /// Number of primes to tabulate.
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GroupSelect {
    /// Cyclic group of this order (decimal, up to 64 bits).
    #[arg(long, value_name = "N")]
    cyclic: Option<String>,
    /// Abelian primary decomposition "p:l1,l2,...;q:m1,..." e.g. "3:1,1,1".
    #[arg(long, value_name = "SPEC")]
    abelian: Option<String>,
    /// Built-in group by name (currently: e27).
    #[arg(long, value_name = "NAME")]
    group: Option<String>,
    /// Descriptor JSON file ("-" = stdin).
    #[arg(long, value_name = "PATH")]
    descriptor: Option<String>,
}

impl GroupSelect {
    fn resolve(&self) -> Result<GroupDescriptor, Error> {
        if let Some(n) = &self.cyclic {
            let nat = parse_natural_str(n)?;
            let n64: u64 = (&nat)
                .try_into()
                .map_err(|_| Error::resource(format!("--cyclic {n} does not fit in 64 bits")))?;
            if n64 == 0 {
                return Err(Error::domain("--cyclic must be positive"));
            }
            return GroupDescriptor::cyclic_of_u64(n64);
        }
        if let Some(spec) = &self.abelian {
            return GroupDescriptor::abelian(parse_abelian_spec(spec)?);
        }
        if let Some(name) = &self.group {
            return GroupDescriptor::by_name(name)
                .ok_or_else(|| Error::domain(format!("unknown built-in group {name:?}")));
        }
        if let Some(path) = &self.descriptor {
            let bytes = if path == "-" {
                let mut buf = Vec::new();
                std::io::stdin().read_to_end(&mut buf)?;
                buf
            } else {
                fs::read(path)?
            };
            return GroupDescriptor::from_json_slice(&bytes);
        }
        unreachable!("clap enforces exactly one selector")
    }
}

/// "2:3,1;5:2" → [(2, [3, 1]), (5, [2])]
fn parse_abelian_spec(spec: &str) -> Result<Vec<(u64, Vec<u32>)>, Error> {
    let mut components = Vec::new();
    for part in spec.split(';') {
        let (p, lambdas) = part
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("component {part:?} is not \"p:l1,l2,...\"")))?;
        let p: u64 = p
            .parse()
            .map_err(|_| Error::parse(format!("invalid prime {p:?}")))?;
        let lambdas = lambdas
            .split(',')
            .map(|l| {
                l.parse::<u32>()
                    .map_err(|_| Error::parse(format!("invalid partition part {l:?}")))
            })
            .collect::<Result<Vec<u32>, Error>>()?;
        components.push((p, lambdas));
    }
    Ok(components)
}

fn emit(json_mode: bool, payload: Value, human: String) {
    if json_mode {
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        println!("{human}");
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let json_mode = cli.json;
    match cli.command {
        Command::Psi(select) => {
            let g = select.resolve()?;
            let value = psi(&g)?;
            emit(json_mode, json!({ "psi": value.to_string() }), value.to_string());
        }
        Command::Psi1(select) => {
            let g = select.resolve()?;
            let value = psi_prime_ratio(&g)?;
            emit(json_mode, json!({ "psi1": value.to_string() }), value.to_string());
        }
        Command::Psi2(select) => {
            let g = select.resolve()?;
            let value = psi_double_prime(&g)?;
            emit(json_mode, json!({ "psi2": value.to_string() }), value.to_string());
        }
        Command::Classify { kind, ratio } => {
            let r: ExactRatio = ratio.parse()?;
            let rk = match kind.as_str() {
                "psi1" => RatioKind::PsiPrime,
                _ => RatioKind::PsiDoublePrime,
            };
            let tags = threshold_classify(&r, rk)?;
            let names: Vec<&str> = tags.iter().map(|t| t.as_str()).collect();
            let human = if names.is_empty() {
                "(none)".to_string()
            } else {
                names.join(" ")
            };
            emit(
                json_mode,
                json!({ "kind": kind, "ratio": r.to_string(), "tags": names }),
                human,
            );
        }
        Command::Spectrum(select) => {
            let g = select.resolve()?;
            let spec = match &g {
                GroupDescriptor::Cyclic(n) => cyclic_spectrum(n)?,
                GroupDescriptor::Abelian(components) => abelian_spectrum(components)?,
                GroupDescriptor::Spectrum { spectrum, .. } => spectrum.clone(),
            };
            let human: String = {
                let mut lines: Vec<String> = spec
                    .iter()
                    .map(|(o, c)| format!("order {o}: {c} elements"))
                    .collect();
                lines.push(format!("|G| = {}", g.order()));
                lines.join("\n")
            };
            let expanded = GroupDescriptor::spectrum(spec, g.order())?;
            emit(json_mode, expanded.to_json(), human);
        }
        Command::Approximate {
            target,
            epsilon,
            greedy_fraction,
            prime_budget,
        } => {
            let target: ExactRatio = target.parse()?;
            let epsilon: ExactRatio = epsilon.parse()?;
            let fraction: ExactRatio = greedy_fraction.parse()?;
            let witness = approximate_with(&target, &epsilon, &fraction, prime_budget)?;
            let order = witness
                .witness
                .as_ref()
                .map(|w| match w {
                    GroupDescriptor::Cyclic(n) => n.to_string(),
                    _ => unreachable!("density witnesses are cyclic"),
                })
                .unwrap_or_default();
            let human = format!(
                "target {} approximated by the cyclic group of order {}\n  psi'' = {}\n  |error| = {} (<= {})\n  primes: {}, lift exponent: {}",
                witness.target,
                order,
                witness.witness_psi2.as_ref().unwrap(),
                witness.abs_error().unwrap(),
                witness.epsilon,
                witness.index_set.len(),
                witness
                    .lift_exponent
                    .map_or_else(|| "-".to_string(), |m| m.to_string()),
            );
            emit(json_mode, witness.to_json(), human);
        }
        Command::Collisions {
            max,
            mode,
            checkpoint_dir,
            resume,
            csv,
            threads,
            segment_len,
        } => {
            let mode = match mode.as_str() {
                "sort-merge" => CollisionMode::SortMerge,
                _ => CollisionMode::ExactMap,
            };
            let checkpoint_dir =
                checkpoint_dir.or_else(|| std::env::var_os("SOE_CHECKPOINT_DIR").map(PathBuf::from));
            let mut config = CollisionConfig {
                mode,
                threads,
                checkpoint_dir,
                resume,
                ..CollisionConfig::default()
            };
            if let Some(len) = segment_len {
                config.segment_len = len;
            }
            let report = find_collisions(max, &config)?;
            let csv_text = report.to_csv();
            if csv == "-" {
                if !json_mode {
                    print!("{csv_text}");
                }
            } else {
                fs::write(&csv, csv_text)?;
            }
            let human = format!(
                "n <= {}: {} collision(s) among {} values ({}, {:.2}s)",
                report.n_max,
                report.collisions.len(),
                report.records_scanned,
                report.mode,
                report.elapsed_seconds,
            );
            emit(json_mode, report.to_json(), human);
        }
        Command::Preimage { q, max } => {
            let q: ExactRatio = q.parse()?;
            let index = PsiKeyIndex::build(max)?;
            let matches = preimage_search(&q, &index)?;
            let human = if matches.is_empty() {
                format!("no n <= {max} with psi''(C_n) = {q}")
            } else {
                matches
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            emit(
                json_mode,
                json!({
                    "q": q.to_string(),
                    "max_n": max,
                    "matches": matches.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                }),
                human,
            );
        }
        Command::ExcludeDyadic { a, r } => {
            let a = parse_natural_str(&a)?;
            let trace = dyadic_exclusion_check(&a, r)?;
            let mut lines = vec![format!(
                "a/2^r = {} with a = {}, r = {}: {}",
                trace.value,
                a,
                r,
                if trace.excluded {
                    "excluded from Im psi''"
                } else {
                    "NOT excluded"
                }
            )];
            for (i, step) in trace.steps.iter().enumerate() {
                let mark = if step.checked { "[checked]" } else { "[cited]  " };
                lines.push(format!("  {}. {mark} {}", i + 1, step.claim));
            }
            emit(json_mode, trace.to_json(), lines.join("\n"));
        }
        Command::UniquenessC2 { max } => {
            let index = PsiKeyIndex::build(max)?;
            let sieve = SpfSieve::build(max)?;
            let report = uniqueness_c2_check(&index, &sieve)?;
            let human = format!(
                "preimages of 3/4 up to {}: {:?} — uniqueness {} ({} even orders replayed, {} strictly below 3/4)",
                report.max_n,
                report.preimages,
                if report.unique { "verified" } else { "FAILED" },
                report.evens_checked,
                report.strictly_below,
            );
            emit(json_mode, serde_json::to_value(&report).unwrap(), human);
        }
        Command::Divergence { k } => {
            let report = divergence_report(k);
            let mut lines = vec![format!(
                "{:>8} {:>10} {:>14} {:>12} {:>14}",
                "i", "p_i", "x_i", "sum", "x_i*p_i"
            )];
            // Sample rows: the first ten, powers of ten, the 2.0 crossing,
            // and the last.
            let mut indices: BTreeSet<usize> = (1..=10.min(k)).collect();
            let mut pow = 100usize;
            while pow <= k {
                indices.insert(pow);
                pow *= 10;
            }
            if k >= 1 {
                indices.insert(k);
            }
            if let Some(cross) = report.first_index_sum_exceeds_2 {
                indices.insert(cross);
            }
            for &idx in &indices {
                let row = &report.rows[idx - 1];
                lines.push(format!(
                    "{:>8} {:>10} {:>14.9} {:>12.6} {:>14.9}",
                    row.index, row.prime, row.x, row.partial_sum, row.ratio
                ));
            }
            match report.first_index_sum_exceeds_2 {
                Some(i) => lines.push(format!("partial sum first exceeds 2.0 at i = {i}")),
                None => lines.push("partial sum does not exceed 2.0 in range".to_string()),
            }
            emit(json_mode, serde_json::to_value(&report).unwrap(), lines.join("\n"));
        }
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Parse(_) => 1,
        Error::Resource(_) | Error::Checkpoint(_) | Error::Io(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(64)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
