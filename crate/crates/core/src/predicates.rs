//! Group-quality tests. A test looks at a candidate record subset and
//! decides whether it is good enough to aggregate.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use crate::dsl::eval::{eval_condition, EvalContext};
use crate::dsl::{parse_rules, RuleExpr};
use crate::error::{ParseError, ParseErrorKind};
use crate::table::{is_identifier, Column, RowSubset, Table};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestOutcome {
    Pass,
    Fail,
    /// The test could not decide, typically because of missing values.
    Indeterminate(String),
    Error(String),
}

impl TestOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, TestOutcome::Pass)
    }

    /// Indeterminate and Error outcomes are defects of the test.
    pub fn is_issue(&self) -> bool {
        matches!(self, TestOutcome::Indeterminate(_) | TestOutcome::Error(_))
    }

    fn from_bool(pass: bool) -> TestOutcome {
        if pass {
            TestOutcome::Pass
        } else {
            TestOutcome::Fail
        }
    }
}

impl fmt::Display for TestOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestOutcome::Pass => f.write_str("TRUE"),
            TestOutcome::Fail => f.write_str("FALSE"),
            TestOutcome::Indeterminate(reason) => write!(f, "NA: {reason}"),
            TestOutcome::Error(message) => write!(f, "error: {message}"),
        }
    }
}

type Evaluator = dyn Fn(&RowSubset<'_>) -> TestOutcome + Send + Sync;

/// A test function over record subsets. Must accept any subset of the
/// table it is used with, including the empty one.
#[derive(Clone)]
pub struct TestPredicate {
    evaluator: Arc<Evaluator>,
    description: String,
}

impl fmt::Debug for TestPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestPredicate")
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl TestPredicate {
    pub fn new<F>(description: impl Into<String>, evaluator: F) -> TestPredicate
    where
        F: Fn(&RowSubset<'_>) -> TestOutcome + Send + Sync + 'static,
    {
        TestPredicate {
            evaluator: Arc::new(evaluator),
            description: description.into(),
        }
    }

    pub fn eval(&self, subset: &RowSubset<'_>) -> TestOutcome {
        (self.evaluator)(subset)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// Passes when the subset has at least `n` rows.
pub fn min_records(n: usize) -> TestPredicate {
    TestPredicate::new(format!("min_records({n})"), move |d| {
        TestOutcome::from_bool(d.row_count() >= n)
    })
}

fn complete_rows(d: &RowSubset<'_>, vars: &[String]) -> Result<usize, String> {
    let columns: Vec<&Column> = vars
        .iter()
        .map(|v| d.base().require_column(v).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok(d.rows()
        .iter()
        .filter(|&&r| columns.iter().all(|c| !c.get(r).is_null()))
        .count())
}

fn owned(vars: &[&str]) -> Vec<String> {
    vars.iter().map(|v| (*v).to_owned()).collect()
}

/// Passes when at least `n` rows have a value for every one of `vars`.
pub fn min_complete(n: usize, vars: &[&str]) -> TestPredicate {
    let vars = owned(vars);
    TestPredicate::new(
        format!("min_complete({n}, {})", vars.join(", ")),
        move |d| match complete_rows(d, &vars) {
            Ok(k) => TestOutcome::from_bool(k >= n),
            Err(e) => TestOutcome::Error(e),
        },
    )
}

/// Passes when the share of rows complete for `vars` is at least `r`.
/// An empty subset fails.
pub fn frac_complete(r: f64, vars: &[&str]) -> TestPredicate {
    let vars = owned(vars);
    TestPredicate::new(
        format!("frac_complete({r}, {})", vars.join(", ")),
        move |d| match complete_rows(d, &vars) {
            Ok(_) if d.is_empty() => TestOutcome::Fail,
            Ok(k) => TestOutcome::from_bool(k as f64 / d.row_count() as f64 >= r),
            Err(e) => TestOutcome::Error(e),
        },
    )
}

/// Combines rules with three-valued AND: any false rule fails the test,
/// otherwise any missing rule makes it indeterminate.
pub fn from_rules(rules: Vec<RuleExpr>) -> TestPredicate {
    let description = rules
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    TestPredicate::new(description, move |d| {
        let mut undecided = None;
        for rule in &rules {
            match eval_condition(rule.expr(), d, &mut EvalContext::new(0)) {
                Ok(Some(true)) => {}
                Ok(Some(false)) => return TestOutcome::Fail,
                Ok(None) => {
                    undecided.get_or_insert(rule);
                }
                Err(e) => return TestOutcome::Error(format!("rule `{rule}`: {e}")),
            }
        }
        match undecided {
            None => TestOutcome::Pass,
            Some(rule) => TestOutcome::Indeterminate(format!(
                "NA detected in output (must be TRUE or FALSE): rule `{rule}` evaluated to NA"
            )),
        }
    })
}

const BUILTINS: [&str; 3] = ["min_records", "min_complete", "frac_complete"];

/// Parses a test spec: `min_records(N)`, `min_complete(N, v1, ...)`,
/// `frac_complete(R, v1, ...)`, or otherwise a rule list.
pub fn parse_test_spec(text: &str) -> Result<TestPredicate, ParseError> {
    let start = text.len() - text.trim_start().len();
    let rest = &text[start..];
    let name_len = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    let name = &rest[..name_len];
    let after = rest[name_len..].trim_start();
    if !BUILTINS.contains(&name) || !after.starts_with('(') {
        return Ok(from_rules(parse_rules(text)?));
    }
    let open = text.len() - after.len();
    let close = text.rfind(')').filter(|&c| c > open).ok_or_else(|| {
        ParseError::new(ParseErrorKind::Syntax, text.len(), format!("unclosed `(` in {name}(...)"))
    })?;
    if let Some(extra) = text[close + 1..].find(|c: char| !c.is_whitespace()) {
        return Err(ParseError::new(
            ParseErrorKind::Syntax,
            close + 1 + extra,
            format!("{name}(...) must be the whole test; combine conditions with the rule language"),
        ));
    }

    // (argument text, offset)
    let mut args: Vec<(&str, usize)> = Vec::new();
    let mut pos = open + 1;
    for piece in text[open + 1..close].split(',') {
        let lead = piece.len() - piece.trim_start().len();
        args.push((piece.trim(), pos + lead));
        pos += piece.len() + 1;
    }
    if args.len() == 1 && args[0].0.is_empty() {
        args.clear();
    }
    let arity = |ok: bool, want: &str| {
        if ok {
            Ok(())
        } else {
            Err(ParseError::new(
                ParseErrorKind::Arity,
                start,
                format!("{name} takes {want}, got {} argument(s)", args.len()),
            ))
        }
    };
    let number = |(arg, offset): (&str, usize)| {
        arg.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
            ParseError::new(ParseErrorKind::Type, offset, format!("expected a number, found `{arg}`"))
        })
    };
    let count = |arg: (&str, usize)| {
        let x = number(arg)?;
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(ParseError::new(
                ParseErrorKind::Type,
                arg.1,
                format!("{name} needs a whole number of at least 1, found `{}`", arg.0),
            ))
        }
    };
    fn vars<'t>(args: &[(&'t str, usize)]) -> Result<Vec<&'t str>, ParseError> {
        args.iter()
            .map(|&(arg, offset)| {
                if is_identifier(arg) {
                    Ok(arg)
                } else {
                    Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        offset,
                        format!("expected a column name, found `{arg}`"),
                    ))
                }
            })
            .collect()
    }

    match name {
        "min_records" => {
            arity(args.len() == 1, "exactly one argument")?;
            Ok(min_records(count(args[0])?))
        }
        "min_complete" => {
            arity(args.len() >= 2, "a count and at least one column")?;
            Ok(min_complete(count(args[0])?, &vars(&args[1..])?))
        }
        _ => {
            arity(args.len() >= 2, "a fraction and at least one column")?;
            let r = number(args[0])?;
            if !(0.0..=1.0).contains(&r) {
                return Err(ParseError::new(
                    ParseErrorKind::Type,
                    args[0].1,
                    format!("fraction must lie in [0, 1], found `{}`", args[0].0),
                ));
            }
            Ok(frac_complete(r, &vars(&args[1..])?))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmokeEntry {
    pub scenario: String,
    pub outcome: TestOutcome,
    pub issue: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmokeReport {
    pub entries: Vec<SmokeEntry>,
}

impl SmokeReport {
    pub fn issues(&self) -> impl Iterator<Item = &SmokeEntry> {
        self.entries.iter().filter(|e| e.issue)
    }

    pub fn has_issues(&self) -> bool {
        self.issues().next().is_some()
    }

    /// One block per issue; empty when the test is clean.
    pub fn render_issues(&self) -> String {
        render(self.issues())
    }

    pub fn render_all(&self) -> String {
        render(self.entries.iter())
    }
}

fn render<'e>(entries: impl Iterator<Item = &'e SmokeEntry>) -> String {
    let mut out = String::new();
    for e in entries {
        if e.issue {
            let detail = match &e.outcome {
                TestOutcome::Indeterminate(reason) | TestOutcome::Error(reason) => reason,
                _ => unreachable!("only undecided outcomes are issues"),
            };
            out.push_str(&format!(
                "Test with {} raised issues.\n   {detail}\n",
                e.scenario
            ));
        } else {
            out.push_str(&format!("Test with {}: {}\n", e.scenario, e.outcome));
        }
    }
    out
}

fn guarded(predicate: &TestPredicate, subset: &RowSubset<'_>) -> TestOutcome {
    catch_unwind(AssertUnwindSafe(|| predicate.eval(subset))).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| (*s).to_owned())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "test panicked".to_owned());
        TestOutcome::Error(message)
    })
}

/// Runs `predicate` on the full table, on zero rows, and on the full table
/// with each column in turn set to missing.
pub fn smoke_test(table: &Table, predicate: &TestPredicate) -> SmokeReport {
    let mut entries = Vec::new();
    let mut record = |scenario: String, outcome: TestOutcome| {
        entries.push(SmokeEntry {
            issue: outcome.is_issue(),
            scenario,
            outcome,
        })
    };
    record("full dataset".into(), guarded(predicate, &table.all_rows()));
    record("zero rows".into(), guarded(predicate, &table.no_rows()));
    for name in table.column_names() {
        let nulled = table.null_out_column(name).expect("column exists");
        record(
            format!("full dataset, {name} all NA"),
            guarded(predicate, &nulled.all_rows()),
        );
    }
    SmokeReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{read_csv, ReadOptions};
    use proptest::prelude::*;

    fn ab_input() -> Table {
        read_csv(
            include_str!("../examples/data/input.csv").as_bytes(),
            &ReadOptions::default(),
        )
        .unwrap()
    }

    fn subset<'a>(t: &'a Table, rows: &'a [usize]) -> RowSubset<'a> {
        t.subset(rows).unwrap()
    }

    fn rules(text: &str) -> TestPredicate {
        from_rules(parse_rules(text).unwrap())
    }

    #[test]
    fn min_records_counts_rows() {
        let t = ab_input();
        assert_eq!(min_records(3).eval(&subset(&t, &[0, 1, 2])), TestOutcome::Pass);
        assert_eq!(min_records(3).eval(&subset(&t, &[3, 4])), TestOutcome::Fail);
        assert_eq!(min_records(1).eval(&t.no_rows()), TestOutcome::Fail);
    }

    #[test]
    fn min_complete_counts_complete_rows() {
        let t = read_csv("a,b\n1,NA\n2,3\nNA,4\n5,6\n".as_bytes(), &ReadOptions::default())
            .unwrap();
        assert_eq!(min_complete(2, &["a", "b"]).eval(&t.all_rows()), TestOutcome::Pass);
        assert_eq!(min_complete(3, &["a", "b"]).eval(&t.all_rows()), TestOutcome::Fail);
        assert_eq!(min_complete(3, &["a"]).eval(&t.all_rows()), TestOutcome::Pass);
        let nulled = t.null_out_column("a").unwrap();
        assert_eq!(min_complete(1, &["a"]).eval(&nulled.all_rows()), TestOutcome::Fail);
        assert!(matches!(
            min_complete(1, &["zz"]).eval(&t.all_rows()),
            TestOutcome::Error(_)
        ));
    }

    #[test]
    fn frac_complete_boundaries() {
        let t = read_csv("Y\n1\nNA\n2\nNA\n".as_bytes(), &ReadOptions::default()).unwrap();
        assert_eq!(frac_complete(0.5, &["Y"]).eval(&t.all_rows()), TestOutcome::Pass);
        assert_eq!(frac_complete(0.5, &["Y"]).eval(&subset(&t, &[0, 1, 3])), TestOutcome::Fail);
        assert_eq!(frac_complete(0.0, &["Y"]).eval(&t.no_rows()), TestOutcome::Fail);
    }

    #[test]
    fn rules_on_ab_input_group() {
        let t = ab_input();
        let test = rules("nrow() >= 3; sum(Y >= 2) >= 3");
        // rows Y = 1, 2, 3: three rows but only two with Y >= 2
        assert_eq!(test.eval(&subset(&t, &[0, 1, 2])), TestOutcome::Fail);
        let nulled = t.null_out_column("Y").unwrap();
        assert!(matches!(test.eval(&nulled.all_rows()), TestOutcome::Indeterminate(_)));
        let robust = rules("nrow() >= 3; sum(Y >= 2, na_rm) >= 3");
        assert_eq!(robust.eval(&nulled.all_rows()), TestOutcome::Fail);
    }

    #[test]
    fn false_rule_beats_missing_rule() {
        let t = ab_input().null_out_column("Y").unwrap();
        let test = rules("sum(Y) > 0; nrow() > 100");
        assert_eq!(test.eval(&t.all_rows()), TestOutcome::Fail);
    }

    #[test]
    fn unknown_rule_column_is_error() {
        let t = ab_input();
        assert!(matches!(
            rules("sum(Z) > 0").eval(&t.all_rows()),
            TestOutcome::Error(_)
        ));
    }

    #[test]
    fn smoke_test_finds_the_missing_value_issue() {
        let t = ab_input();
        let report = smoke_test(&t, &rules("nrow() >= 3; sum(Y >= 2) >= 3"));
        let issues: Vec<_> = report.issues().map(|e| e.scenario.as_str()).collect();
        assert_eq!(issues, vec!["full dataset, Y all NA"]);
        assert!(report
            .render_issues()
            .starts_with("Test with full dataset, Y all NA raised issues.\n   NA detected in output"));

        let report = smoke_test(&t, &rules("nrow() >= 3; sum(Y >= 2, na_rm) >= 3"));
        assert!(!report.has_issues());
        assert_eq!(report.render_issues(), "");
        assert_eq!(report.entries.len(), 2 + t.columns().len());

        assert!(!smoke_test(&t, &min_records(3)).has_issues());
    }

    #[test]
    fn smoke_test_captures_panics() {
        let t = ab_input();
        let fragile = TestPredicate::new("fragile", |d| {
            assert!(!d.is_empty(), "no rows to look at");
            TestOutcome::Pass
        });
        let report = smoke_test(&t, &fragile);
        let issues: Vec<_> = report.issues().collect();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].scenario, "zero rows");
        assert_eq!(issues[0].outcome, TestOutcome::Error("no rows to look at".into()));
    }

    #[test]
    fn test_spec_builtins() {
        let t = ab_input();
        let all = t.all_rows();
        assert_eq!(parse_test_spec("min_records(3)").unwrap().eval(&all), TestOutcome::Pass);
        assert_eq!(parse_test_spec(" min_records (10) ").unwrap().eval(&all), TestOutcome::Fail);
        assert_eq!(
            parse_test_spec("min_complete(9, Y, Y2)").unwrap().eval(&all),
            TestOutcome::Pass
        );
        assert_eq!(
            parse_test_spec("frac_complete(1, Y)").unwrap().eval(&all),
            TestOutcome::Pass
        );
        assert_eq!(
            parse_test_spec("nrow() >= 3").unwrap().description(),
            "nrow() >= 3"
        );
    }

    #[test]
    fn test_spec_errors() {
        let kind = |s: &str| parse_test_spec(s).unwrap_err().kind;
        assert_eq!(kind("min_records()"), ParseErrorKind::Arity);
        assert_eq!(kind("min_records(0)"), ParseErrorKind::Type);
        assert_eq!(kind("min_records(2.5)"), ParseErrorKind::Type);
        assert_eq!(kind("min_complete(3)"), ParseErrorKind::Arity);
        assert_eq!(kind("frac_complete(1.5, Y)"), ParseErrorKind::Type);
        assert_eq!(kind("min_complete(3, 4x)"), ParseErrorKind::Syntax);
        assert_eq!(kind("min_records(3) && nrow() > 1"), ParseErrorKind::Syntax);
        assert_eq!(kind("min_records(3"), ParseErrorKind::Syntax);
        let err = parse_test_spec("min_complete(3, Y, 4x)").unwrap_err();
        assert_eq!(err.offset, 19);
    }

    fn random_table() -> impl Strategy<Value = Table> {
        prop::collection::vec(prop::option::of(0u8..4), 0..20).prop_map(|cells| {
            Table::new(vec![Column::numeric(
                "x",
                cells.into_iter().map(|c| c.map(f64::from)),
            )
            .unwrap()])
            .unwrap()
        })
    }

    fn nested_rows(t: &Table) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        let n = t.row_count();
        prop::collection::vec(0u8..3, n).prop_map(|marks| {
            // 0: in neither, 1: superset only, 2: both
            let small = (0..marks.len()).filter(|&i| marks[i] == 2).collect();
            let big = (0..marks.len()).filter(|&i| marks[i] >= 1).collect();
            (small, big)
        })
    }

    proptest! {
        #[test]
        fn counting_tests_are_monotone(
            (t, (small, big)) in random_table().prop_flat_map(|t| {
                let rows = nested_rows(&t);
                (Just(t), rows)
            }),
            n in 1usize..6,
        ) {
            for test in [min_records(n), min_complete(n, &["x"])] {
                if test.eval(&t.subset(&small).unwrap()).is_pass() {
                    prop_assert!(test.eval(&t.subset(&big).unwrap()).is_pass());
                }
            }
        }

        #[test]
        fn nrow_rule_matches_min_records(
            (t, (rows, _)) in random_table().prop_flat_map(|t| {
                let rows = nested_rows(&t);
                (Just(t), rows)
            }),
            n in 1usize..6,
        ) {
            let d = t.subset(&rows).unwrap();
            prop_assert_eq!(
                rules(&format!("nrow() >= {n}")).eval(&d),
                min_records(n).eval(&d)
            );
        }
    }

    #[test]
    fn frac_complete_is_not_monotone() {
        // search small tables for d ⊆ d' with Pass on d and Fail on d'
        let t = read_csv("x\n1\nNA\n".as_bytes(), &ReadOptions::default()).unwrap();
        let test = frac_complete(0.75, &["x"]);
        let found = [vec![0usize], vec![1]].iter().any(|small| {
            test.eval(&t.subset(small).unwrap()).is_pass()
                && !test.eval(&t.subset(&[0, 1]).unwrap()).is_pass()
        });
        assert!(found);
    }
}
