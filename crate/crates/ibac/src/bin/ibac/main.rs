//! Command-line front end for the integer-coded label toolkit.
//!
//! Exit codes: 0 success or ALLOW, 3 DENY, 1 usage error, 2 data error.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ibac::process::{check_disclosure_in_context, check_write_via_process};
use ibac::process::{Decision, DisclosureOptions, ProcessTuple, TupleRegistry};
use ibac::store::RecordStore;
use ibac::{bench, codec, demo, dominance, hierarchy};
use ibac::{LabelSet, PolicySchema, Scheme, Token};

#[derive(Parser)]
#[command(
    name = "ibac",
    version,
    about = "Integer-coded security labels: encode, compare, filter",
    disable_help_subcommand = true
)]
struct Cli {
    /// Policy schema JSON; the bundled demo policy when omitted
    #[arg(long, global = true, value_name = "PATH")]
    policy: Option<PathBuf>,
    /// Output format (demo is always plain)
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Bitvec,
    Expsum,
    Primeprod,
}

impl SchemeArg {
    fn resolve(self, schema: &PolicySchema) -> Scheme {
        match self {
            SchemeArg::Bitvec => Scheme::BitVec,
            SchemeArg::Expsum => Scheme::expsum_of(schema),
            SchemeArg::Primeprod => Scheme::PrimeProd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    /// Expand to the included form before encoding
    Subject,
    /// Encode as written; requires exactly one level
    Object,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the loaded policy
    Policy {
        #[command(subcommand)]
        action: PolicyAction,
    },
    /// Encode label names into a token
    Encode {
        #[arg(long, value_enum, default_value_t = SchemeArg::Expsum)]
        scheme: SchemeArg,
        #[arg(long, value_enum)]
        role: Role,
        /// Label names, e.g. `Secret MI5 MI6`
        #[arg(required = true)]
        labels: Vec<String>,
    },
    /// Decode a token back to label names
    Decode {
        #[arg(long)]
        token: String,
    },
    /// Does the subject token dominate the object token?
    Check {
        /// Subject token (included form)
        #[arg(long)]
        subject: String,
        #[arg(long)]
        object: String,
        /// Re-run the pair through every route and the oracle
        #[arg(long)]
        all_routes: bool,
    },
    /// Flatten a tree hierarchy into per-vertex inclusion sets
    Flatten {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
    },
    /// Manage the (subject, process) clearance registry
    Tuple {
        #[command(subcommand)]
        action: TupleAction,
    },
    /// Run a write or disclosure decision
    Decide {
        #[command(subcommand)]
        action: DecideAction,
    },
    /// Tag CSV rows and write a record store
    Ingest {
        /// CSV input with a `labels` column
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Store file to write
        #[arg(long, value_name = "PATH")]
        store: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Expsum)]
        scheme: SchemeArg,
    },
    /// List the store rows a subject token dominates
    Filter {
        #[arg(long, value_name = "PATH")]
        store: PathBuf,
        /// Subject token in the store's scheme
        #[arg(long)]
        subject: String,
    },
    /// Time the AND route against the modulo route
    Bench {
        /// Dominance checks per sample
        #[arg(long, value_delimiter = ',', default_values_t = [1_000u64, 10_000, 100_000, 1_000_000])]
        counts: Vec<u64>,
        /// Samples per count; the median is reported
        #[arg(long, default_value_t = 5)]
        reps: u32,
    },
    /// Compare full-universe token widths across the codecs
    StorageReport,
    /// Run the bundled end-to-end walkthrough
    Demo {
        /// Prime-product subject token overriding the built-in subject
        #[arg(long)]
        subject: Option<String>,
        /// Also print the missing label behind every denial
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Subcommand)]
enum PolicyAction {
    /// Print the validation report
    Validate,
}

#[derive(Subcommand)]
enum TupleAction {
    /// Register a (subject, process) clearance
    Add {
        #[arg(long, value_name = "PATH")]
        registry: PathBuf,
        #[arg(long)]
        subject: String,
        #[arg(long)]
        process: String,
        /// Label names, e.g. `Protected` or `Secret MI6`
        #[arg(long)]
        clearance: String,
    },
    /// List registered tuples
    List {
        #[arg(long, value_name = "PATH")]
        registry: PathBuf,
    },
}

#[derive(Subcommand)]
enum DecideAction {
    /// May the subject write the object through the process?
    Write {
        #[arg(long, value_name = "PATH")]
        registry: PathBuf,
        #[arg(long)]
        subject: String,
        /// The subject's own clearance labels
        #[arg(long)]
        clearance: String,
        #[arg(long)]
        process: String,
        /// Object labels, exactly one level
        #[arg(long)]
        object: String,
    },
    /// May the discloser show the object to the viewer in the context?
    Disclose {
        #[arg(long, value_name = "PATH")]
        registry: PathBuf,
        #[arg(long)]
        discloser: String,
        /// The discloser's own clearance labels
        #[arg(long)]
        clearance: String,
        #[arg(long)]
        viewer: String,
        /// Context process both parties hold tuples for
        #[arg(long)]
        context: String,
        #[arg(long)]
        object: String,
        /// Additionally require the viewer's tuple to dominate the object
        #[arg(long)]
        require_viewer_dominance: bool,
    },
}

/// Restore the default SIGPIPE disposition so output piped into a pager or
/// `head` ends the process quietly instead of panicking on the first write
/// after the reader is gone.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_policy(cli: &Cli) -> ibac::Result<PolicySchema> {
    match &cli.policy {
        Some(path) => PolicySchema::load(path),
        None => Ok(demo::demo_policy()),
    }
}

fn label_set(schema: &PolicySchema, names: &str) -> ibac::Result<LabelSet> {
    LabelSet::from_names(schema, names.split_whitespace())
}

/// Schema declaration order makes listings readable; sets alone would
/// alphabetize Public above Secret.
fn ordered_names(schema: &PolicySchema, names: &BTreeSet<String>) -> Vec<String> {
    schema
        .label_order()
        .filter(|l| names.contains(*l))
        .map(str::to_string)
        .collect()
}

fn run(cli: Cli) -> ibac::Result<u8> {
    let schema = load_policy(&cli)?;
    let format = cli.format;
    match cli.command {
        Command::Policy { action } => match action {
            PolicyAction::Validate => {
                let report = schema.validate();
                match format {
                    Format::Plain => println!("{report}"),
                    Format::Json => {
                        let violations: Vec<String> =
                            report.violations.iter().map(|v| v.to_string()).collect();
                        emit(&json!({
                            "id": schema.id(),
                            "ok": report.is_ok(),
                            "violations": violations,
                        }));
                    }
                }
                Ok(if report.is_ok() { 0 } else { 2 })
            }
        },
        Command::Encode {
            scheme,
            role,
            labels,
        } => {
            let scheme = scheme.resolve(&schema);
            let set = LabelSet::from_names(&schema, labels.iter().map(String::as_str))?;
            let names: Vec<String> = match role {
                Role::Subject => {
                    let expansion = schema.expand_subject(&set)?;
                    ordered_names(&schema, expansion.included())
                }
                Role::Object => {
                    let object = schema.object_label(&set)?;
                    ordered_names(&schema, &object.names())
                }
            };
            let token = codec::encode(&schema, scheme, names.iter().map(String::as_str))?;
            match format {
                Format::Plain => println!("{token}"),
                Format::Json => emit(&json!({
                    "token": token.to_string(),
                    "scheme": scheme.name(),
                    "labels": names,
                })),
            }
            Ok(0)
        }
        Command::Decode { token } => {
            let token = Token::parse(&token, &schema)?;
            let names = ordered_names(&schema, &codec::decode(&schema, &token)?);
            match format {
                Format::Plain => println!("{}", names.join(" ")),
                Format::Json => emit(&json!({
                    "scheme": token.scheme().name(),
                    "labels": names,
                })),
            }
            Ok(0)
        }
        Command::Check {
            subject,
            object,
            all_routes,
        } => {
            let subject = Token::parse(&subject, &schema)?;
            let object = Token::parse(&object, &schema)?;
            let verdict = dominance::decide(&schema, &subject, &object)?;
            if all_routes {
                let s = codec::decode(&schema, &subject)?;
                let o = codec::decode(&schema, &object)?;
                let cross = dominance::cross_check(&schema, &s, &o)?;
                match format {
                    Format::Plain => {
                        for (route, holds) in &cross.results {
                            println!(
                                "{route:<24} {}",
                                if *holds { "ALLOW" } else { "DENY" }
                            );
                        }
                    }
                    Format::Json => {
                        let results: Vec<_> = cross
                            .results
                            .iter()
                            .map(|(route, holds)| json!({ "route": route, "holds": holds }))
                            .collect();
                        emit(&json!({
                            "holds": cross.verdict.holds(),
                            "witness": cross.verdict.witness(),
                            "routes": results,
                        }));
                    }
                }
                if cross.disagreement {
                    eprintln!("error: routes disagree on the verdict");
                    return Ok(2);
                }
                return Ok(if cross.verdict.holds() { 0 } else { 3 });
            }
            match format {
                Format::Plain => match verdict.witness() {
                    None => println!("ALLOW"),
                    Some(witness) => println!("DENY: lacks {witness}"),
                },
                Format::Json => emit(&json!({
                    "holds": verdict.holds(),
                    "witness": verdict.witness(),
                })),
            }
            Ok(if verdict.holds() { 0 } else { 3 })
        }
        Command::Flatten { graph } => {
            let graph = hierarchy::HierarchyGraph::load(graph)?;
            let encoding = hierarchy::flatten(&graph)?;
            match format {
                Format::Plain => {
                    for vertex in graph.vertices() {
                        let set = encoding.set(vertex).expect("flatten covers all vertices");
                        let items: Vec<&str> = set.iter().map(String::as_str).collect();
                        println!("{vertex}: {{{}}}", items.join(", "));
                    }
                }
                Format::Json => emit(&json!({ "sets": encoding.sets })),
            }
            Ok(0)
        }
        Command::Tuple { action } => match action {
            TupleAction::Add {
                registry,
                subject,
                process,
                clearance,
            } => {
                let clearance = label_set(&schema, &clearance)?;
                // reject clearances the schema cannot expand
                schema.expand_subject(&clearance)?;
                let mut reg = if registry.exists() {
                    TupleRegistry::load(&registry)?
                } else {
                    TupleRegistry::new()
                };
                reg.register(ProcessTuple {
                    subject: subject.clone(),
                    process: process.clone(),
                    clearance: clearance.clone(),
                })?;
                reg.save(&registry)?;
                match format {
                    Format::Plain => println!("registered ({subject}, {process}) at {clearance}"),
                    Format::Json => emit(&json!({
                        "subject": subject,
                        "process": process,
                        "clearance": clearance,
                    })),
                }
                Ok(0)
            }
            TupleAction::List { registry } => {
                let reg = TupleRegistry::load(&registry)?;
                match format {
                    Format::Plain => {
                        for t in reg.tuples() {
                            println!("{} {} {}", t.subject, t.process, t.clearance);
                        }
                    }
                    Format::Json => emit(&json!({ "tuples": reg.tuples() })),
                }
                Ok(0)
            }
        },
        Command::Decide { action } => {
            let decision = match &action {
                DecideAction::Write {
                    registry,
                    subject,
                    clearance,
                    process,
                    object,
                } => check_write_via_process(
                    &schema,
                    &TupleRegistry::load(registry)?,
                    subject,
                    &label_set(&schema, clearance)?,
                    process,
                    &label_set(&schema, object)?,
                )?,
                DecideAction::Disclose {
                    registry,
                    discloser,
                    clearance,
                    viewer,
                    context,
                    object,
                    require_viewer_dominance,
                } => check_disclosure_in_context(
                    &schema,
                    &TupleRegistry::load(registry)?,
                    discloser,
                    &label_set(&schema, clearance)?,
                    viewer,
                    context,
                    &label_set(&schema, object)?,
                    DisclosureOptions {
                        require_viewer_dominance: *require_viewer_dominance,
                    },
                )?,
            };
            match format {
                Format::Plain => println!("{decision}"),
                Format::Json => {
                    let reason = match &decision {
                        Decision::Allow => None,
                        Decision::Deny(reason) => Some(reason.to_string()),
                    };
                    emit(&json!({ "allow": decision.allowed(), "reason": reason }));
                }
            }
            Ok(if decision.allowed() { 0 } else { 3 })
        }
        Command::Ingest {
            data,
            store,
            scheme,
        } => {
            let csv_text = std::fs::read_to_string(&data)?;
            let built = RecordStore::ingest_csv(&schema, scheme.resolve(&schema), &csv_text)?;
            built.save(&store)?;
            match format {
                Format::Plain => {
                    println!("ingested {} records into {}", built.len(), store.display())
                }
                Format::Json => emit(&json!({
                    "records": built.len(),
                    "scheme": built.scheme().name(),
                    "store": store.display().to_string(),
                })),
            }
            Ok(0)
        }
        Command::Filter { store, subject } => {
            let store = RecordStore::load(&schema, &store)?;
            let subject = Token::parse(&subject, &schema)?;
            let hits = store.filter(&schema, &subject)?;
            match format {
                Format::Plain => {
                    for record in &hits {
                        print!("{} {}", record.id, record.tag);
                        for (key, value) in &record.fields {
                            print!(" {key}={value}");
                        }
                        println!();
                    }
                }
                Format::Json => {
                    let rows: Vec<_> = hits
                        .iter()
                        .map(|r| {
                            let fields: Vec<_> = r
                                .fields
                                .iter()
                                .map(|(k, v)| json!({ "key": k, "value": v }))
                                .collect();
                            json!({
                                "id": r.id,
                                "token": r.tag.to_string(),
                                "fields": fields,
                            })
                        })
                        .collect();
                    emit(&json!({ "rows": rows }));
                }
            }
            Ok(0)
        }
        Command::Bench { counts, reps } => {
            let config = bench::BenchConfig {
                counts,
                repetitions: reps,
                ..bench::BenchConfig::default()
            };
            let report = bench::run(&config)?;
            match format {
                Format::Plain => {
                    for pair in &report.pairs {
                        println!(
                            "pair {}: dominance {}",
                            pair.name,
                            if pair.holds { "yes" } else { "no" }
                        );
                        println!("{:>12} {:>14} {:>14} {:>9}", "reads", "AND s", "modulo s", "ratio %");
                        for row in &pair.rows {
                            println!(
                                "{:>12} {:>14.6} {:>14.6} {:>9.2}",
                                row.reads, row.and_seconds, row.modulo_seconds, row.ratio_percent
                            );
                        }
                    }
                }
                Format::Json => emit(&json!(report)),
            }
            Ok(0)
        }
        Command::StorageReport => {
            let report = codec::storage_report(&schema)?;
            match format {
                Format::Plain => {
                    println!("{} labels under schema {}", report.labels, report.schema_id);
                    for row in &report.rows {
                        println!("{:<10} {:>3} bits  (value {})", row.scheme, row.bits, row.value);
                    }
                }
                Format::Json => emit(&json!(report)),
            }
            Ok(0)
        }
        Command::Demo { subject, verbose } => {
            let subject_token = match subject {
                Some(text) => Some(Token::parse(&text, &demo::demo_policy())?),
                None => None,
            };
            let transcript = demo::run_demo(&demo::DemoOptions {
                subject_token,
                verbose,
            })?;
            print!("{transcript}");
            Ok(0)
        }
    }
}

fn emit(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("value serializes"));
}
