//! `curriculum`: batch access to the whole pipeline.
//!
//! Records go to stdout, one per line; commentary goes to stderr.
//! Exit codes: 1 usage, 2 validation, 3 I/O, 4 constraint violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use curriculum::book::{
    assemble_book, assemble_review_book, render_book, review_book, AuthorRole, BookError, BookPlan, ContentStore,
    Exercise, GraphRef, PlanMeta, ProgressRecord,
};
use curriculum::fsutil::write_atomic;
use curriculum::graph::{
    enumerate_closures, predecessor_closure, ClosureError, ClosurePolicy, ClosureResult, Dag, GraphError, NodeId,
    ValidationReport,
};
use curriculum::ingest::{
    import_graphml, load_content_store, load_exercises, parse_native, write_exercises, write_native, ColorMap,
    GraphmlOptions, IngestError, ParseErrors,
};
use curriculum::interop::{
    competency_lookup, merge_graphs, parse_calendar, parse_cross_edges, parse_orders, process_analyzer_export,
    sync_report, InteropError, TagIndex,
};
use curriculum::sequencing::{
    all_linearizations, count_linearizations, rank_orderings, topological_order, PopularityStore, RankingWeights,
    SequencingError,
};

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Io(String),
    Constraint(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Io(_) => 3,
            Failure::Constraint(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Io(m) | Failure::Constraint(m) => f.write_str(m),
        }
    }
}

type Outcome = Result<(), Failure>;

fn syntax(path: &Path, errs: &ParseErrors) -> Failure {
    let lines: Vec<String> = errs.0.iter().map(|e| format!("{}:{e}", path.display())).collect();
    Failure::Validation(lines.join("\n"))
}

fn report_lines(report: &ValidationReport) -> Vec<String> {
    let line = |level: &str, f: &curriculum::graph::Finding| {
        let at = f.line.map(|l| format!("\tline {l}")).unwrap_or_default();
        format!("{level}\t{}\t{}\t{}{at}", f.code.as_str(), f.ids.join(","), f.message)
    };
    report
        .errors
        .iter()
        .map(|f| line("error", f))
        .chain(report.warnings.iter().map(|f| line("warning", f)))
        .collect()
}

impl From<ClosureError> for Failure {
    fn from(e: ClosureError) -> Self {
        match &e {
            ClosureError::Unresolved(points) => {
                let mut msg = e.to_string();
                for p in points {
                    let tails: Vec<String> = p
                        .members
                        .iter()
                        .map(|m| format!("{} ({} units)", m.edge.tail, m.closure_size))
                        .collect();
                    msg.push_str(&format!("\n  {} into {}: {}", p.group, p.head, tails.join(", ")));
                }
                Failure::Constraint(msg)
            }
            ClosureError::EmptyTargets | ClosureError::ZeroCap => Failure::Usage(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<SequencingError> for Failure {
    fn from(e: SequencingError) -> Self {
        match e {
            SequencingError::ZeroCap | SequencingError::InvalidWeights => Failure::Usage(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<BookError> for Failure {
    fn from(e: BookError) -> Self {
        match e {
            BookError::OrderMismatch(_) | BookError::TargetMastered(_) | BookError::TargetNotGap { .. } => {
                Failure::Constraint(e.to_string())
            }
            BookError::Closure(c) => c.into(),
            BookError::Sequencing(s) => s.into(),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } | IngestError::MissingFiles(_) => Failure::Io(e.to_string()),
            IngestError::Invalid(report) => Failure::Validation(report_lines(&report).join("\n")),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<InteropError> for Failure {
    fn from(e: InteropError) -> Self {
        let msg = format!("{}: {e}", e.code());
        match e {
            InteropError::Cycle(_) | InteropError::NoMatch(_) => Failure::Constraint(msg),
            InteropError::Closure(c) => c.into(),
            _ => Failure::Validation(msg),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    write_atomic(path, text.as_bytes()).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn is_graphml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("graphml"))
}

/// Native or GraphML graph, parsed and validated.
fn load_graph(path: &Path) -> Result<Dag, Failure> {
    let text = read(path)?;
    let graph = if is_graphml(path) {
        import_graphml(&text, &GraphmlOptions::default())?.graph
    } else {
        parse_native(&text).map_err(|e| syntax(path, &e))?.graph
    };
    Dag::new(graph).map_err(|e| match e {
        GraphError::Invalid(report) => Failure::Validation(report_lines(&report).join("\n")),
        other => Failure::Validation(other.to_string()),
    })
}

fn split_ids(list: &[String]) -> BTreeSet<NodeId> {
    list.iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(NodeId::from)
        .collect()
}

fn join(ids: impl IntoIterator<Item = impl fmt::Display>) -> String {
    ids.into_iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn epoch_or_now(epoch: Option<u64>) -> u64 {
    epoch.unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

#[derive(Args, Debug)]
struct Selection {
    /// Graph file (native, or GraphML by extension).
    graph: PathBuf,
    /// Target node ids, comma-separated or repeated.
    #[arg(long = "target", short, required = true)]
    targets: Vec<String>,
    #[arg(long)]
    include_optional: bool,
    /// Resolve an alternative group: `group=tail`. Any use switches to the
    /// explicit policy, so every group reached must be chosen.
    #[arg(long = "choose", value_name = "GROUP=TAIL")]
    choices: Vec<String>,
}

impl Selection {
    fn policy(&self) -> Result<ClosurePolicy, Failure> {
        if self.choices.is_empty() {
            return Ok(ClosurePolicy::minimal().with_optional(self.include_optional));
        }
        let mut map = BTreeMap::new();
        for c in &self.choices {
            let (group, tail) = c
                .split_once('=')
                .filter(|(g, t)| !g.is_empty() && !t.is_empty())
                .ok_or_else(|| Failure::Usage(format!("--choose expects group=tail, got {c:?}")))?;
            let tail = tail.split_once("->").map_or(tail, |(t, _)| t);
            map.insert(group.to_owned(), NodeId::from(tail));
        }
        Ok(ClosurePolicy::explicit(map).with_optional(self.include_optional))
    }

    fn closure(&self) -> Result<(Dag, ClosureResult), Failure> {
        let dag = load_graph(&self.graph)?;
        let c = predecessor_closure(&dag, &split_ids(&self.targets), &self.policy()?)?;
        Ok((dag, c))
    }
}

#[derive(Args, Debug)]
struct BookOutput {
    /// Content manifest (`token<TAB>path`).
    #[arg(long)]
    content: PathBuf,
    /// Exercise file.
    #[arg(long)]
    exercises: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
    /// Creation time stored in the manifest, seconds since the Unix epoch.
    #[arg(long)]
    epoch: Option<u64>,
}

impl BookOutput {
    fn inputs(&self, dag: &Dag) -> Result<(ContentStore, Vec<Exercise>), Failure> {
        let content = load_content_store(&self.content)?;
        let exercises = match &self.exercises {
            Some(p) => load_exercises(p, dag)?,
            None => Vec::new(),
        };
        Ok((content, exercises))
    }

    fn meta(&self, graph: &Path, dag: &Dag, default_title: String, role: AuthorRole) -> PlanMeta {
        let version = dag.graph().metadata.get("version").and_then(|v| v.parse().ok()).unwrap_or(1);
        let id = graph
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dag.discipline().to_owned());
        PlanMeta {
            graph: GraphRef { id, version },
            title: self.title.clone().unwrap_or(default_title),
            created_at: epoch_or_now(self.epoch),
            author_role: role,
        }
    }

    fn emit(&self, plan: &BookPlan, content: &ContentStore) -> Outcome {
        let doc = render_book(plan, content)?;
        let manifest = self.out.join("plan.json");
        let book = self.out.join("book.md");
        write(&manifest, &plan.to_manifest())?;
        write(&book, &doc)?;
        println!("plan\t{}", plan.id);
        println!("manifest\t{}", manifest.display());
        println!("book\t{}", book.display());
        for o in &plan.omitted {
            eprintln!("omitted {}: needs {}", o.id, join(&o.missing));
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(name = "curriculum", version, about = "Prerequisite graphs to personalized books")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the validation report; exit 0 iff there are no errors.
    Validate { graph: PathBuf },
    /// Predecessor closure of the targets, one node list per line.
    Closure {
        #[command(flatten)]
        sel: Selection,
        /// List up to N closures over every combination of group choices.
        #[arg(long, value_name = "N")]
        enumerate: Option<usize>,
    },
    /// Deterministic teaching order of the closure.
    Order {
        #[command(flatten)]
        sel: Selection,
    },
    /// Every valid order, one per line, up to the cap.
    Enumerate {
        #[command(flatten)]
        sel: Selection,
        #[arg(long, default_value_t = curriculum::sequencing::DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Number of valid orders, exact or capped.
    Count {
        #[command(flatten)]
        sel: Selection,
        #[arg(long, default_value_t = curriculum::sequencing::DEFAULT_COUNT_CAP)]
        cap: u64,
    },
    /// Valid orders ranked by time, popularity and coherence.
    Rank {
        #[command(flatten)]
        sel: Selection,
        #[arg(long, default_value_t = 100)]
        cap: usize,
        /// Weights as `time,popularity,coherence`.
        #[arg(long, default_value = "1,1,1")]
        weights: String,
        #[arg(long)]
        popularity: Option<PathBuf>,
    },
    /// Build a book: plan manifest and rendered document.
    Assemble {
        #[command(flatten)]
        sel: Selection,
        #[command(flatten)]
        book: BookOutput,
    },
    /// Build a review book for a student's gaps.
    Review {
        graph: PathBuf,
        #[arg(long)]
        progress: PathBuf,
        #[arg(long, required = true)]
        gaps: Vec<String>,
        /// Accept gap targets whose status is not `gap`.
        #[arg(long)]
        allow_non_gap: bool,
        #[command(flatten)]
        book: BookOutput,
    },
    /// Merge discipline graphs with cross edges into one native graph.
    Merge {
        #[arg(required = true)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        cross: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check cross-discipline edges against per-discipline orders.
    Sync {
        merged: PathBuf,
        #[arg(long)]
        orders: PathBuf,
        #[arg(long)]
        calendar: Option<PathBuf>,
    },
    /// Competency lookup or analyzer-export processing.
    Tags {
        graph: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, conflicts_with = "lookup")]
        analyzer_export: Option<PathBuf>,
        /// Tags to look up, comma-separated or repeated.
        #[arg(long = "lookup")]
        lookup: Vec<String>,
        /// Print the generated exercises in exercise-file format.
        #[arg(long, requires = "analyzer_export")]
        make_exercises: bool,
    },
    /// Convert a yEd GraphML file into the native format.
    ImportGraphml {
        file: PathBuf,
        /// Colour map, e.g. `required=#000000,optional=#008000,alternative=#FF0000`.
        #[arg(long)]
        colors: Option<String>,
        /// Snap unknown colours to the nearest mapped one.
        #[arg(long)]
        nearest: bool,
        #[arg(long)]
        slugify: bool,
        #[arg(long)]
        discipline: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "CURRICULUM_DATA", default_value = "curriculum-data")]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Validate { graph } => {
            let text = read(&graph)?;
            let report = if is_graphml(&graph) {
                let imported = import_graphml(&text, &GraphmlOptions::default())?;
                for w in &imported.warnings {
                    eprintln!("import warning {}: {}", w.code.as_str(), w.message);
                }
                curriculum::graph::validate_graph(&imported.graph)
            } else {
                parse_native(&text).map_err(|e| syntax(&graph, &e))?.report
            };
            for line in report_lines(&report) {
                println!("{line}");
            }
            eprintln!("{} error(s), {} warning(s)", report.errors.len(), report.warnings.len());
            if report.is_ok() {
                Ok(())
            } else {
                Err(Failure::Validation(format!("{} is invalid", graph.display())))
            }
        }
        Command::Closure { sel, enumerate: None } => {
            let (_, c) = sel.closure()?;
            println!("{}", join(&c.nodes));
            for (g, e) in &c.resolved_groups {
                eprintln!("group {g} resolved to {}", e.tail);
            }
            Ok(())
        }
        Command::Closure { sel, enumerate: Some(cap) } => {
            let dag = load_graph(&sel.graph)?;
            let all = enumerate_closures(&dag, &split_ids(&sel.targets), sel.include_optional, cap)?;
            for c in &all.closures {
                println!("{}", join(&c.nodes));
            }
            if all.truncated {
                eprintln!("truncated at {cap} closures");
            }
            Ok(())
        }
        Command::Order { sel } => {
            let (_, c) = sel.closure()?;
            println!("{}", join(&topological_order(&c)?.nodes));
            Ok(())
        }
        Command::Enumerate { sel, cap } => {
            let (_, c) = sel.closure()?;
            let all = all_linearizations(&c, cap)?;
            for o in &all.orders {
                println!("{}", join(&o.nodes));
            }
            if all.truncated {
                eprintln!("truncated at {cap} orders");
            }
            Ok(())
        }
        Command::Count { sel, cap } => {
            let (_, c) = sel.closure()?;
            let n = count_linearizations(&c, cap)?;
            println!("{} {}", n.count, if n.exact { "exact" } else { "capped" });
            Ok(())
        }
        Command::Rank { sel, cap, weights, popularity } => {
            let parts: Vec<f64> = weights
                .split(',')
                .map(|w| w.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Usage(format!("--weights expects three numbers, got {weights:?}")))?;
            let [t, p, k] = parts[..] else {
                return Err(Failure::Usage(format!("--weights expects three numbers, got {weights:?}")));
            };
            let weights = RankingWeights::new(t, p, k)?;
            let pop = match &popularity {
                Some(path) => PopularityStore::load(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
                None => PopularityStore::default(),
            };
            let (dag, c) = sel.closure()?;
            let all = all_linearizations(&c, cap)?;
            println!("rank\ttotal\ttime\tpopularity\tcoherence\torder");
            for (i, r) in rank_orderings(all.orders, &dag, &weights, &pop)?.iter().enumerate() {
                let s = &r.score;
                println!(
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
                    i + 1,
                    s.total,
                    s.time,
                    s.popularity,
                    s.coherence,
                    join(&r.order.nodes)
                );
            }
            if all.truncated {
                eprintln!("ranked the first {cap} orders only");
            }
            Ok(())
        }
        Command::Assemble { sel, book } => {
            let (dag, c) = sel.closure()?;
            let order = topological_order(&c)?;
            let (content, exercises) = book.inputs(&dag)?;
            let title = format!("{}: {}", dag.discipline(), join(&c.targets));
            let meta = book.meta(&sel.graph, &dag, title, AuthorRole::Teacher);
            let plan = assemble_book(&dag, &c, &order, &exercises, &content, &meta)?;
            book.emit(&plan, &content)
        }
        Command::Review { graph, progress, gaps, allow_non_gap, book } => {
            let dag = load_graph(&graph)?;
            let record = ProgressRecord::parse(&read(&progress)?)
                .map_err(|e| Failure::Validation(format!("{}: {e}", progress.display())))?;
            let selection = review_book(&dag, &record, &split_ids(&gaps), &ClosurePolicy::minimal(), allow_non_gap)?;
            let (content, exercises) = book.inputs(&dag)?;
            let meta = book.meta(&graph, &dag, format!("Review for {}", record.student), AuthorRole::Student);
            let plan = assemble_review_book(&dag, &selection, &exercises, &content, &meta)?;
            book.emit(&plan, &content)
        }
        Command::Merge { graphs, cross, out } => {
            let inputs = graphs
                .iter()
                .map(|p| load_graph(p).map(Dag::into_graph))
                .collect::<Result<Vec<_>, _>>()?;
            let cross = match &cross {
                Some(p) => parse_cross_edges(&read(p)?).map_err(|e| syntax(p, &e))?,
                None => Vec::new(),
            };
            let merged = merge_graphs(&inputs, &cross)?;
            write(&out, &write_native(&merged))?;
            println!("{}\t{}\t{}", merged.discipline, merged.nodes.len(), merged.edges.len());
            Ok(())
        }
        Command::Sync { merged, orders, calendar } => {
            let dag = load_graph(&merged)?;
            let orders = parse_orders(&read(&orders)?).map_err(|e| syntax(&orders, &e))?;
            let calendar = match &calendar {
                Some(p) => Some(parse_calendar(&read(p)?).map_err(|e| syntax(p, &e))?),
                None => None,
            };
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
            for f in sync_report(&dag, &orders, calendar.as_ref())? {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    f.edge,
                    f.status.as_str(),
                    opt(f.tail_position.map(|v| v.to_string())),
                    opt(f.cover_before.map(|v| v.to_string())),
                    opt(f.tail_week.map(|v| v.to_string())),
                    opt(f.head_week.map(|v| v.to_string())),
                );
            }
            Ok(())
        }
        Command::Tags { graph, index, analyzer_export, lookup, make_exercises } => {
            let dag = load_graph(&graph)?;
            let index = TagIndex::parse(&read(&index)?).map_err(|e| syntax(&index, &e))?;
            match analyzer_export {
                Some(path) => {
                    let batch = process_analyzer_export(&index, &read(&path)?, &dag)?;
                    if make_exercises {
                        print!("{}", write_exercises(&batch.exercises));
                    } else {
                        for e in &batch.entries {
                            println!(
                                "{}\t{}\t{}\t{}",
                                e.form,
                                join(&e.direct_nodes),
                                join(&e.unknown_tags),
                                e.exercise_id.as_deref().or(e.error.as_deref()).unwrap_or("-"),
                            );
                        }
                    }
                    Ok(())
                }
                None => {
                    let tags: Vec<String> = split_ids(&lookup).into_iter().map(|t| t.to_string()).collect();
                    if tags.is_empty() {
                        return Err(Failure::Usage("give --lookup tags or --analyzer-export".into()));
                    }
                    let r = competency_lookup(&index, &tags, &dag)?;
                    println!("direct\t{}", join(&r.direct_nodes));
                    println!("unknown\t{}", join(&r.unknown_tags));
                    println!("closure\t{}", join(&r.closure.nodes));
                    Ok(())
                }
            }
        }
        Command::ImportGraphml { file, colors, nearest, slugify, discipline, out } => {
            let mut opts = GraphmlOptions { slugify_labels: slugify, ..GraphmlOptions::default() };
            if let Some(spec) = &colors {
                opts.colors = ColorMap::parse(spec).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            if nearest {
                opts.colors = opts.colors.with_matching(curriculum::ingest::ColorMatch::Nearest);
            }
            if let Some(d) = discipline {
                opts.discipline = d;
            }
            let imported = import_graphml(&read(&file)?, &opts)?;
            write(&out, &write_native(&imported.graph))?;
            for w in &imported.warnings {
                println!("{}\t{}\t{}", w.code.as_str(), w.ids.join(","), w.message);
            }
            eprintln!(
                "wrote {} nodes and {} edges to {}",
                imported.graph.nodes.len(),
                imported.graph.edges.len(),
                out.display()
            );
            Ok(())
        }
        Command::Serve { port, data, host } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime
                .block_on(curriculum_service::serve(SocketAddr::new(host, port), data))
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}
