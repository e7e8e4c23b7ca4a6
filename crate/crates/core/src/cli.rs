//! Command line front end.
//!
//! Every flag can also be set in a TOML file (`--config`, or `plucase.toml`
//! in the working directory when present) under the same name with
//! underscores. Flags win over the file; relative paths in the file are
//! taken from the file's directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::classifier::{classify_test_cases, Classification, Product, TestClass};
use crate::decision::{diff, DecisionModel};
use crate::model::{load_decisions, read, PLModel};
use crate::prioritizer::{
    evaluate_ranking, prioritize_product, ranking_from_csv, ranking_to_csv, FeatureTable, History, PrioritizeError,
    DEFAULT_ALPHA,
};
use crate::report::{aggregate, Format};
use crate::rucm::{serialize_specification, UseCaseDocument};
use crate::traceability::{load_overrides, load_traces, TestSuite};

// stdout may be a closed pipe (`| head`); that is not an error
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "plucase", version, about = "Regression test selection and prioritization for use case-driven product lines")]
struct Cli {
    /// TOML file with default values for the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the product line, cross-check diagram and specification, check decisions.
    Validate(Opts),
    /// Write the product-specific specification and diagram of each decision file.
    Configure(Opts),
    /// Print the change set between two decision models as JSON.
    Diff(Opts),
    /// Classify the tests of one previous product for the new product.
    Classify(Opts),
    /// Classify against every previous product and merge the results.
    Report(Opts),
    /// Fit the failure model on the history and rank the new product's tests.
    Prioritize(Opts),
    /// Score a ranking against the failures recorded for the new product.
    Evaluate(Opts),
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Opts {
    /// Product-line specification (.rucm).
    #[arg(long)]
    pl_spec: Option<PathBuf>,
    /// Product-line use case diagram (JSON).
    #[arg(long)]
    pl_diagram: Option<PathBuf>,
    /// Decision model of a product; repeatable. The product id is read from the file.
    #[arg(long)]
    decisions: Vec<PathBuf>,
    /// Previous product id; repeatable.
    #[arg(long)]
    previous: Vec<String>,
    /// Id of the new product.
    #[arg(long = "new")]
    new: Option<String>,
    /// Trace file, as `ID=path` or a path named `traces.<ID>.csv`; repeatable.
    #[arg(long)]
    traces: Vec<String>,
    /// `test_id,scenario_id` file settling ambiguous traces.
    #[arg(long)]
    overrides: Option<PathBuf>,
    /// Execution history (`product_id,version_id,test_id,verdict`).
    #[arg(long)]
    history: Option<PathBuf>,
    /// Test features (`product_id,test_id,retestable,size,variability`).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Ranking to evaluate (`ranking.csv`).
    #[arg(long)]
    ranking: Option<PathBuf>,
    /// Significance level of the Wald tests.
    #[arg(long)]
    alpha: Option<f64>,
    /// Report format: json, csv or html.
    #[arg(long)]
    format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn merge(mut self, file: Opts, base: &Path) -> Opts {
        let rebase = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let path = |flag: Option<PathBuf>, file: Option<PathBuf>| flag.or(file.map(rebase));
        self.pl_spec = path(self.pl_spec, file.pl_spec);
        self.pl_diagram = path(self.pl_diagram, file.pl_diagram);
        self.overrides = path(self.overrides, file.overrides);
        self.history = path(self.history, file.history);
        self.features = path(self.features, file.features);
        self.ranking = path(self.ranking, file.ranking);
        self.out = path(self.out, file.out);
        if self.decisions.is_empty() {
            self.decisions = file.decisions.into_iter().map(rebase).collect();
        }
        if self.traces.is_empty() {
            self.traces = file
                .traces
                .into_iter()
                .map(|t| match t.split_once('=') {
                    Some((id, p)) => format!("{id}={}", rebase(p.into()).display()),
                    None => rebase(t.into()).display().to_string(),
                })
                .collect();
        }
        if self.previous.is_empty() {
            self.previous = file.previous;
        }
        self.new = self.new.or(file.new);
        self.alpha = self.alpha.or(file.alpha);
        self.format = self.format.or(file.format);
        self
    }

    fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
        v.as_ref().ok_or_else(|| anyhow!("missing --{flag}"))
    }

    fn model(&self) -> Result<PLModel> {
        Ok(PLModel::load(Self::need(&self.pl_spec, "pl-spec")?, Self::need(&self.pl_diagram, "pl-diagram")?)?)
    }

    fn decision_models(&self) -> Result<BTreeMap<String, DecisionModel>> {
        let mut out = BTreeMap::new();
        for p in &self.decisions {
            let m = load_decisions(p)?;
            if let Some(old) = out.insert(m.product_id.clone(), m) {
                bail!("two decision files for product {}", old.product_id);
            }
        }
        Ok(out)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn new_id(&self) -> Result<&str> {
        Ok(Self::need(&self.new, "new")?.as_str())
    }

    /// Trace files by product id.
    fn trace_files(&self) -> Result<BTreeMap<String, PathBuf>> {
        let mut out = BTreeMap::new();
        for t in &self.traces {
            let (id, path) = match t.split_once('=') {
                Some((id, p)) => (id.to_string(), PathBuf::from(p)),
                None => {
                    let p = PathBuf::from(t);
                    let id = p
                        .file_name()
                        .and_then(|n| n.to_str())
                        .and_then(|n| n.strip_prefix("traces.")?.strip_suffix(".csv").map(String::from));
                    match id {
                        Some(id) => (id, p),
                        None if self.traces.len() == 1 && self.previous.len() == 1 => (self.previous[0].clone(), p),
                        None => bail!("cannot tell which product `{t}` belongs to; use ID=path"),
                    }
                }
            };
            out.insert(id, path);
        }
        Ok(out)
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn validate(o: &Opts) -> Result<i32> {
    let model = o.model()?;
    for w in model.warnings() {
        say!("warning: {w}");
    }
    let mut findings = 0;
    for f in model.findings() {
        say!("finding: {f}");
        findings += 1;
    }
    for (id, m) in o.decision_models()? {
        for v in model.validate(&m) {
            say!("{id}: {v}");
            findings += 1;
        }
    }
    if findings == 0 {
        say!("ok");
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_FINDINGS)
    }
}

fn configure(o: &Opts) -> Result<i32> {
    let model = o.model()?;
    let decisions = o.decision_models()?;
    if decisions.is_empty() {
        bail!("missing --decisions");
    }
    let out = o.out_dir();
    for (id, m) in &decisions {
        let c = model.configure(m)?;
        for w in &c.spec.warnings {
            eprintln!("{id}: warning: {w}");
        }
        write(&out.join(format!("ps.{id}.rucm")), &serialize_specification(&c.spec.document))?;
        write(&out.join(format!("ps-diagram.{id}.json")), &c.diagram.to_json())?;
    }
    Ok(EXIT_OK)
}

fn diff_cmd(o: &Opts) -> Result<i32> {
    let ms: Vec<DecisionModel> = o.decisions.iter().map(|p| load_decisions(p)).collect::<Result<_, _>>()?;
    let (old, new) = match (o.previous.as_slice(), &o.new) {
        ([prev], Some(new)) => {
            let find = |id: &str| {
                ms.iter()
                    .find(|m| m.product_id == id)
                    .ok_or_else(|| anyhow!("no decision file for product {id}"))
            };
            (find(prev)?, find(new)?)
        }
        _ if ms.len() == 2 => (&ms[0], &ms[1]),
        _ => bail!("diff needs two --decisions files, or --previous and --new"),
    };
    let json = diff(old, new)?.to_json();
    say!("{json}");
    if let Some(out) = &o.out {
        write(&out.join("changes.json"), &json)?;
    }
    Ok(EXIT_OK)
}

fn classify_all(o: &Opts, single: bool) -> Result<i32> {
    let model = o.model()?;
    let decisions = o.decision_models()?;
    let new_id = o.new_id()?;
    if o.previous.is_empty() {
        bail!("missing --previous");
    }
    if single && o.previous.len() > 1 {
        bail!("classify takes one --previous; use report for several");
    }
    let decision = |id: &str| decisions.get(id).ok_or_else(|| anyhow!("no decision file for product {id}"));
    let mut specs: BTreeMap<&str, UseCaseDocument> = BTreeMap::new();
    for id in o.previous.iter().map(String::as_str).chain([new_id]) {
        let c = model.configure(decision(id)?).with_context(|| format!("configuring {id}"))?;
        specs.insert(id, c.spec.document);
    }
    let traces = o.trace_files()?;
    let overrides = match &o.overrides {
        Some(p) => load_overrides(&read(p)?)?,
        None => BTreeMap::new(),
    };
    let mut suites: Vec<TestSuite> = Vec::new();
    for id in &o.previous {
        let path = traces.get(id).ok_or_else(|| anyhow!("no --traces for product {id}"))?;
        suites.push(load_traces(&read(path)?, id).with_context(|| path.display().to_string())?);
    }

    let results: Vec<Result<Classification>> = std::thread::scope(|s| {
        let handles: Vec<_> = o
            .previous
            .iter()
            .zip(&suites)
            .map(|(id, suite)| {
                let (specs, overrides, decision) = (&specs, &overrides, &decision);
                s.spawn(move || -> Result<Classification> {
                    let dc = diff(decision(id)?, decision(new_id)?)?;
                    classify_test_cases(
                        Product { id, doc: &specs[id.as_str()] },
                        suite,
                        overrides,
                        Product { id: new_id, doc: &specs[new_id] },
                        &dc,
                    )
                    .with_context(|| format!("classifying the tests of {id}"))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("classification thread")).collect()
    });
    let classifications = results.into_iter().collect::<Result<Vec<_>>>()?;
    let dates: BTreeMap<String, chrono::NaiveDate> =
        decisions.iter().map(|(id, m)| (id.clone(), m.created_on)).collect();
    let report = aggregate(classifications, &dates)?;
    for c in &report.classifications {
        say!(
            "{} -> {}: {} obsolete, {} retestable, {} reusable, {} new scenarios",
            c.previous,
            c.product,
            c.count(TestClass::Obsolete),
            c.count(TestClass::Retestable),
            c.count(TestClass::Reusable),
            c.new_scenarios.len()
        );
    }
    if !single {
        say!("whole line: {} new scenarios", report.new_scenarios.len());
    }
    let path = report.emit(&o.out_dir(), o.format.unwrap_or(Format::Json))?;
    say!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn prioritize_cmd(o: &Opts) -> Result<i32> {
    let new_id = o.new_id()?;
    let history = History::from_csv(&read(Opts::need(&o.history, "history")?)?)?;
    let features = FeatureTable::from_csv(&read(Opts::need(&o.features, "features")?)?)?;
    if features.of_product(new_id).next().is_none() {
        bail!("no features for any test of {new_id}");
    }
    let previous: Vec<&str> = o.previous.iter().map(String::as_str).collect();
    let pp = prioritize_product(&history, &features, new_id, &previous, o.alpha.unwrap_or(DEFAULT_ALPHA))?;
    let p = &pp.result;
    for w in &p.warnings {
        eprintln!("warning: {w}");
    }
    let out = o.out_dir();
    write(&out.join("ranking.csv"), &ranking_to_csv(&p.ranking))?;
    let model = serde_json::json!({
        "product": pp.product,
        "previous": pp.previous,
        "training_rows": pp.training_rows,
        "selection": p.selection,
        "warnings": p.warnings,
    });
    write(&out.join("model.json"), &serde_json::to_string_pretty(&model)?)?;
    if let Some(s) = &p.selection {
        let names: Vec<String> = s.retained.iter().map(|f| format!("{f:?}")).collect();
        say!("retained factors: {}", if names.is_empty() { "none".into() } else { names.join(", ") });
    }
    say!("ranked {} tests", p.ranking.len());
    Ok(EXIT_OK)
}

fn evaluate_cmd(o: &Opts) -> Result<i32> {
    let new_id = o.new_id()?;
    let ranking = ranking_from_csv(&read(Opts::need(&o.ranking, "ranking")?)?)?;
    let history = History::from_csv(&read(Opts::need(&o.history, "history")?)?)?;
    let failing = history.failing_tests(new_id);
    let body = match evaluate_ranking(&ranking, &failing) {
        Ok(m) => {
            say!(
                "auc ratio {:.4}; {:.2}% of tests cover all failing, {:.2}% cover 80%; {:.2}% of failing in the first half",
                m.auc_ratio, m.pct_to_cover_all_failing, m.pct_to_cover_80pct_failing, m.pct_failing_in_first_half
            );
            serde_json::to_value(&m)?
        }
        Err(e @ PrioritizeError::NoFailures) => {
            say!("{e}");
            serde_json::json!({"not_applicable": true, "reason": e.to_string()})
        }
        Err(e) => return Err(e.into()),
    };
    write(&o.out_dir().join("metrics.json"), &serde_json::to_string_pretty(&body)?)?;
    Ok(EXIT_OK)
}

fn load_config(explicit: Option<&Path>) -> Result<Option<(Opts, PathBuf)>> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let p = PathBuf::from("plucase.toml");
            if !p.is_file() {
                return Ok(None);
            }
            p
        }
    };
    let text = read(&path)?;
    let opts: Opts = toml::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Some((opts, base)))
}

fn execute(cli: Cli) -> Result<i32> {
    let file = load_config(cli.config.as_deref())?;
    let (cmd, opts) = match cli.command {
        Command::Validate(o) => ("validate", o),
        Command::Configure(o) => ("configure", o),
        Command::Diff(o) => ("diff", o),
        Command::Classify(o) => ("classify", o),
        Command::Report(o) => ("report", o),
        Command::Prioritize(o) => ("prioritize", o),
        Command::Evaluate(o) => ("evaluate", o),
    };
    let o = match file {
        Some((f, base)) => opts.merge(f, &base),
        None => opts,
    };
    match cmd {
        "validate" => validate(&o),
        "configure" => configure(&o),
        "diff" => diff_cmd(&o),
        "classify" => classify_all(&o, true),
        "report" => classify_all(&o, false),
        "prioritize" => prioritize_cmd(&o),
        _ => evaluate_cmd(&o),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
