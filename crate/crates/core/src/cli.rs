//! The `rollup` command line. [`run`] takes the argument list and the three
//! standard streams so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 data or scheme error, 2 usage or parse error,
//! 3 smoke test found issues.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aggregators::{AggregationPlan, AllColumnsFunc};
use crate::dsl::{parse_agg_exprs, parse_formula};
use crate::engine::{saccg, EngineOptions};
use crate::error::ParseError;
use crate::predicates::{parse_test_spec, smoke_test, TestPredicate};
use crate::scheme::{
    csh_from_digits, digit_scheme_notes, scheme_from_formula, scheme_from_table, CollapseScheme,
    SchemeTable,
};
use crate::table::{read_csv, write_csv, ReadOptions, Table, WriteOptions};
use crate::LEVEL_COLUMN;

const FORMULA_HELP: &str = "\
COLLAPSE FORMULA (--collapse)
  formula := vars '~' vars ('+' vars)*
  vars    := ident ('*' ident)*
  ident   := [A-Za-z_][A-Za-z0-9_.]*
  The left side names the target grouping. Each alternative on the right is
  one collapse level, finest first; each must be a coarsening of the one
  before. Example: \"A * B ~ A * B1 + A\".

SCHEME TABLE (--scheme FILE [--key COLUMN])
  CSV whose first column holds the target codes and each further column a
  coarser code (child-parent pairs, one parent per child). --key names the
  data column matched against the first column; it defaults to that
  column's header.";

const TEST_HELP: &str = "\
TEST (--test / --test-file)
  min_records(N)               at least N rows
  min_complete(N, v1, ...)     at least N rows with all of v1, ... present
  frac_complete(R, v1, ...)    share of such rows at least R (0 <= R <= 1);
                               an empty group fails
  Anything else is a rule list, separated by ';' or newlines. All rules
  must hold; a rule that evaluates to NA is an error (see smoke-test).
    rule   := cond
    cond   := cond ('&&' | '||') cond | '!' cond | '(' cond ')'
            | gexpr ('<'|'<='|'>'|'>='|'=='|'!=') gexpr
    gexpr  := number | gcall | gexpr ('+'|'-'|'*'|'/') gexpr
            | '-' gexpr | '(' gexpr ')'
    gcall  := nrow() | nrow(.) | count_complete(col, ...)
            | (sum|mean|min|max) '(' rexpr [',' 'na_rm'] ')'
    rexpr  := number | col | rexpr ('+'|'-'|'*'|'/') rexpr | '-' rexpr
            | rexpr ('<'|'<='|'>'|'>='|'=='|'!=') rexpr | '(' rexpr ')'
  Comparisons inside a group function count as 1/0, so sum(Y >= 2) counts
  rows. Without na_rm any missing value makes the result NA. sum over no
  values is 0; mean, min and max over no values are NA. Division by zero
  is NA. Example: \"nrow() >= 3; sum(Y >= 2, na_rm) >= 3\".";

const EXPR_HELP: &str = "\
EXPRESSIONS (--expr / --expr-file)
  Assignments separated by ';' or newlines:
    assign := ident '=' gexpr | ident '=' ols(col, col)
  gexpr is the group-level expression language of --test, extended with
  median(rexpr [, na_rm]) and sample(col). sample() draws one present
  value at random, reproducibly for a given --seed and target group.
  ols(y, x) fits y = a + b*x and yields two columns, <name>_intercept and
  <name>_slope (NA with fewer than 2 complete pairs or constant x).
  Example: \"R = mean(industrial, na_rm) / mean(total, na_rm)\".";

const AGGREGATE_AFTER: &str = "\
Output columns: the target variables, `level` (number of collapse steps,
NA when no level passed the test), then one column per aggregated column.
Columns used by the scheme are not aggregated.";

#[derive(Debug, Parser)]
#[command(
    name = "rollup",
    version,
    about = "Grouped aggregation that merges groups failing a quality test into coarser groups",
    after_help = "Run `rollup <command> --help` for the formula, test and expression grammars."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply one aggregate to every non-grouping column.
    #[command(after_help = format!("{AGGREGATE_AFTER}\n\n{FORMULA_HELP}\n\n{TEST_HELP}"))]
    Aggregate(AggregateArgs),
    /// Compute named expressions per group.
    #[command(after_help = format!("{FORMULA_HELP}\n\n{TEST_HELP}\n\n{EXPR_HELP}"))]
    Summarise(SummariseArgs),
    /// Derive a scheme table from hierarchical digit codes.
    #[command(after_help = "\
Column A0 holds the codes; column Ai truncates them to (longest length - i)
characters, never below one. Shorter codes are copied unchanged, which pads
shallow branches with copies of their leaves.")]
    SchemeDigits(DigitsArgs),
    /// Check a test against the full data, zero rows and each column set
    /// to missing.
    #[command(after_help = TEST_HELP)]
    SmokeTest(SmokeArgs),
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Input CSV; standard input when absent or `-`.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Token for missing values, read and written. Empty cells are always
    /// missing on input.
    #[arg(long, default_value = "NA", value_name = "TOKEN")]
    na: String,
    /// Field delimiter.
    #[arg(long, default_value_t = ',', value_name = "CHAR")]
    delimiter: char,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SchemeSource {
    /// Collapse formula, e.g. "A * B ~ A * B1 + A".
    #[arg(long, value_name = "FORMULA")]
    collapse: Option<String>,
    /// Scheme table CSV.
    #[arg(long, value_name = "FILE")]
    scheme: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct TestSource {
    /// Test spec: a builtin such as "min_records(3)" or rules.
    #[arg(long, value_name = "SPEC")]
    test: Option<String>,
    /// File holding the test spec.
    #[arg(long, value_name = "FILE")]
    test_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    scheme: SchemeSource,
    /// Data column matched against the scheme table's first column.
    #[arg(long, requires = "scheme", value_name = "COLUMN")]
    key: Option<String>,
    #[command(flatten)]
    test: TestSource,
    /// Seed for random aggregates.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "ROLLUP_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Aggregate: mean, sum, min, max, median or count.
    #[arg(long, value_name = "NAME")]
    fun: AllColumnsFunc,
    /// Ignore missing values (count then counts present values).
    #[arg(long)]
    na_rm: bool,
}

#[derive(Debug, Args)]
struct SummariseArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    plan: PlanSource,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct PlanSource {
    /// Named expressions, e.g. "muY = mean(Y)".
    #[arg(long, value_name = "EXPRS")]
    expr: Option<String>,
    /// File holding the expressions.
    #[arg(long, value_name = "FILE")]
    expr_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DigitsArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Column holding the codes (default: the first).
    #[arg(long, value_name = "COLUMN")]
    column: Option<String>,
    /// Number of coarser levels to derive.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    levels: u64,
    /// Output CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SmokeArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    test: TestSource,
    /// List every scenario, not only those with issues.
    #[arg(long)]
    all: bool,
}

/// A failure with its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

/// Error message with the offending line and a caret under the offset.
fn describe_parse_error(what: &str, text: &str, err: &ParseError) -> String {
    let offset = err.offset.min(text.len());
    let line_start = text[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[offset..].find('\n').map_or(text.len(), |i| offset + i);
    let line_no = text[..offset].matches('\n').count() + 1;
    let column = text[line_start..offset].chars().count();
    format!(
        "{what}: {err} (line {line_no}, column {})\n  {}\n  {}^",
        column + 1,
        &text[line_start..line_end],
        " ".repeat(column)
    )
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(data(&path.display().to_string()))
}

fn delimiter(c: char) -> Result<u8, Failure> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Failure::Usage(format!("delimiter must be a single ASCII character, got `{c}`")))
}

fn read_options(io: &IoArgs) -> Result<ReadOptions, Failure> {
    Ok(ReadOptions {
        na_tokens: vec![String::new(), io.na.clone()],
        delimiter: delimiter(io.delimiter)?,
    })
}

fn write_options(io: &IoArgs) -> Result<WriteOptions, Failure> {
    Ok(WriteOptions {
        na_token: io.na.clone(),
        delimiter: delimiter(io.delimiter)?,
        ..WriteOptions::default()
    })
}

fn read_input(io: &IoArgs, stdin: &mut dyn Read) -> Result<Table, Failure> {
    let options = read_options(io)?;
    match &io.input {
        Some(path) if path.as_os_str() != "-" => {
            let file = fs::File::open(path).map_err(data(&path.display().to_string()))?;
            read_csv(file, &options).map_err(data(&path.display().to_string()))
        }
        _ => read_csv(stdin, &options).map_err(data("standard input")),
    }
}

fn write_output(
    table: &Table,
    out: Option<&Path>,
    options: &WriteOptions,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(data(&path.display().to_string()))?;
            write_csv(table, file, options).map_err(data(&path.display().to_string()))
        }
        None => write_csv(table, stdout, options).map_err(data("standard output")),
    }
}

fn load_test(source: &TestSource) -> Result<TestPredicate, Failure> {
    let (what, text) = match (&source.test, &source.test_file) {
        (Some(text), _) => ("--test".to_owned(), text.clone()),
        (None, Some(path)) => (path.display().to_string(), read_text(path)?),
        (None, None) => unreachable!("clap requires one test source"),
    };
    parse_test_spec(&text).map_err(|e| Failure::Usage(describe_parse_error(&what, &text, &e)))
}

fn load_scheme(run: &RunArgs, table: &Table) -> Result<CollapseScheme, Failure> {
    if let Some(text) = &run.scheme.collapse {
        let formula = parse_formula(text)
            .map_err(|e| Failure::Usage(describe_parse_error("--collapse", text, &e)))?;
        return scheme_from_formula(table, &formula).map_err(data("scheme"));
    }
    let path = run.scheme.scheme.as_ref().expect("clap requires one scheme source");
    let name = path.display().to_string();
    let options = read_options(&run.io)?;
    let file = fs::File::open(path).map_err(data(&name))?;
    let raw = read_csv(file, &options).map_err(data(&name))?;
    let scheme = scheme_from_table(&SchemeTable::new(raw).map_err(data(&name))?);
    Ok(match &run.key {
        Some(key) => scheme.with_target_vars(vec![key.clone()]),
        None => scheme,
    })
}

fn run_engine(
    run: &RunArgs,
    plan: AggregationPlan,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let test = load_test(&run.test)?;
    let table = read_input(&run.io, stdin)?;
    if table.column(LEVEL_COLUMN).is_some() {
        return Err(Failure::Data(format!(
            "input has a column named `{LEVEL_COLUMN}`, which is reserved for the collapse level; rename it"
        )));
    }
    let scheme = load_scheme(run, &table)?;
    let options = EngineOptions {
        seed: run.seed,
        threads: run.threads.map(|n| n as usize),
    };
    let result = saccg(&table, &scheme, &test, &plan, options).map_err(data("error"))?;
    if result.excluded_rows > 0 {
        // diagnostics only; a closed stderr is not worth failing over
        let _ = writeln!(
            stderr,
            "note: {} input row(s) match no label of the scheme and were left out",
            result.excluded_rows
        );
    }
    write_output(
        &result.to_table(),
        run.out.as_deref(),
        &write_options(&run.io)?,
        stdout,
    )
}

fn cmd_aggregate(
    args: &AggregateArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let plan = AggregationPlan::AllColumns {
        func: args.fun,
        na_rm: args.na_rm,
    };
    run_engine(&args.run, plan, stdin, stdout, stderr)?;
    Ok(0)
}

fn cmd_summarise(
    args: &SummariseArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let (what, text) = match (&args.plan.expr, &args.plan.expr_file) {
        (Some(text), _) => ("--expr".to_owned(), text.clone()),
        (None, Some(path)) => (path.display().to_string(), read_text(path)?),
        (None, None) => unreachable!("clap requires one plan source"),
    };
    let list = parse_agg_exprs(&text)
        .map_err(|e| Failure::Usage(describe_parse_error(&what, &text, &e)))?;
    run_engine(&args.run, AggregationPlan::Named(list), stdin, stdout, stderr)?;
    Ok(0)
}

fn cmd_scheme_digits(
    args: &DigitsArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let table = read_input(&args.io, stdin)?;
    let column = match &args.column {
        Some(name) => table.require_column(name).map_err(data("codes"))?,
        None => table
            .columns()
            .first()
            .ok_or_else(|| Failure::Data("codes: input has no columns".into()))?,
    };
    let codes = column
        .cells()
        .iter()
        .enumerate()
        .map(|(row, v)| {
            if v.is_null() {
                Err(Failure::Data(format!(
                    "codes: row {} of column `{}` is missing",
                    row + 1,
                    column.name()
                )))
            } else {
                Ok(v.key().into_owned())
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scheme = csh_from_digits(&codes, args.levels as usize).map_err(data("codes"))?;
    for note in digit_scheme_notes(&scheme) {
        let _ = writeln!(stderr, "note: {note}");
    }
    write_output(
        scheme.table(),
        args.out.as_deref(),
        &write_options(&args.io)?,
        stdout,
    )?;
    Ok(0)
}

fn cmd_smoke_test(
    args: &SmokeArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let test = load_test(&args.test)?;
    let table = read_input(&args.io, stdin)?;
    let report = smoke_test(&table, &test);
    let text = if args.all {
        report.render_all()
    } else {
        report.render_issues()
    };
    let summary = if report.has_issues() {
        format!("{} issue(s) found\n", report.issues().count())
    } else {
        "no issues\n".to_owned()
    };
    write!(stdout, "{text}{summary}").map_err(data("standard output"))?;
    Ok(if report.has_issues() { 3 } else { 0 })
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().ansi().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                2
            } else {
                let _ = write!(stdout, "{rendered}");
                0
            };
        }
    };
    let outcome = match &cli.command {
        Command::Aggregate(a) => cmd_aggregate(a, stdin, stdout, stderr),
        Command::Summarise(a) => cmd_summarise(a, stdin, stdout, stderr),
        Command::SchemeDigits(a) => cmd_scheme_digits(a, stdin, stdout, stderr),
        Command::SmokeTest(a) => cmd_smoke_test(a, stdin, stdout),
    };
    match outcome {
        Ok(code) => {
            if code == 3 {
                let _ = writeln!(stderr, "smoke test found issues");
            }
            code
        }
        Err(failure) => {
            let _ = writeln!(stderr, "rollup: {}", failure.message());
            failure.code()
        }
    }
}
