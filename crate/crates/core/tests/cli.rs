use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "examples", "data", name]
        .iter()
        .collect();
    path.to_str().unwrap().to_owned()
}

fn rollup(args: &[&str]) -> Output {
    rollup_with_stdin(args, "")
}

fn rollup_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rollup"))
        .args(args)
        .env_remove("ROLLUP_THREADS")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const AB_MEANS: &str = "\
A,B,level,Y,Y2
1,11,0,2,12
2,12,1,5,15
2,13,1,5,15
3,21,2,8,18
3,22,2,8,18
3,12,2,8,18
";

#[test]
fn aggregate_with_formula() {
    let input = data("input.csv");
    let o = rollup(&[
        "aggregate", "--in", &input, "--collapse", "A*B ~ A*B1 + A",
        "--test", "min_records(3)", "--fun", "mean",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), AB_MEANS);
}

#[test]
fn aggregate_with_scheme_table() {
    let (input, scheme) = (data("input1.csv"), data("csh.csv"));
    let o = rollup(&[
        "aggregate", "--in", &input, "--scheme", &scheme, "--key", "AB",
        "--test", "min_records(3)", "--fun", "mean",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "AB,level,Y,Y2\n1-11,0,2,12\n2-12,1,5,15\n2-13,1,5,15\n3-21,2,8,18\n3-22,2,8,18\n3-12,2,8,18\n"
    );
}

#[test]
fn missing_test_is_usage_error() {
    let input = data("input.csv");
    let o = rollup(&["aggregate", "--in", &input, "--collapse", "A*B ~ A", "--fun", "mean"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--test"));
}

#[test]
fn two_scheme_sources_is_usage_error() {
    let (input, scheme) = (data("input.csv"), data("csh.csv"));
    let o = rollup(&[
        "aggregate", "--in", &input, "--collapse", "A ~ A", "--scheme", &scheme,
        "--test", "min_records(3)", "--fun", "mean",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn summarise_named_mean_from_stdin() {
    let input = std::fs::read_to_string(data("input.csv")).unwrap();
    let o = rollup_with_stdin(
        &["summarise", "--collapse", "A*B ~ A*B1 + A", "--test", "min_records(3)", "--expr", "muY = mean(Y)"],
        &input,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "A,B,level,muY\n1,11,0,2\n2,12,1,5\n2,13,1,5\n3,21,2,8\n3,22,2,8\n3,12,2,8\n"
    );
}

#[test]
fn summarise_rules_with_missing_levels() {
    let input = data("input.csv");
    let o = rollup(&[
        "aggregate", "--in", &input, "--collapse", "A*B ~ A*B1 + B1",
        "--test", "nrow() >= 3; sum(Y >= 2) >= 3", "--fun", "mean",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "A,B,level,Y,Y2\n1,11,2,4.285714,14.28571\n2,12,1,5,15\n2,13,1,5,15\n\
         3,21,NA,NA,NA\n3,22,NA,NA,NA\n3,12,2,4.285714,14.28571\n"
    );
}

#[test]
fn ratio_of_means_per_group() {
    let input = data("producers.csv");
    let o = rollup(&[
        "summarise", "--in", &input, "--collapse", "sbi * size ~ sbi + sbi2 + sbi1",
        "--test", "min_complete(10, industrial)",
        "--expr", "R = mean(industrial, na_rm) / mean(total, na_rm)",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("sbi,size,level,R"));
    for line in lines {
        let r = line.rsplit(',').next().unwrap();
        if r != "NA" {
            let r: f64 = r.parse().unwrap();
            assert!(r > 0.0 && r < 2.0, "{line}");
        }
    }
}

#[test]
fn donor_sampling_is_reproducible() {
    let input = data("producers.csv");
    let args = [
        "summarise", "--in", &input, "--collapse", "id ~ sbi * size + sbi + sbi2 + sbi1",
        "--test", "min_complete(5, trade)", "--expr", "donor_trade = sample(trade)",
        "--seed", "111",
    ];
    let first = rollup(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let out = stdout(&first);
    assert!(out.starts_with("id,level,donor_trade\nID001,"));
    assert_eq!(out.lines().count(), 301);
    for threads in ["1", "3"] {
        let mut with_threads = args.to_vec();
        with_threads.extend(["--threads", threads]);
        assert_eq!(stdout(&rollup(&with_threads)), out);
    }
    let mut other_seed = args.to_vec();
    *other_seed.last_mut().unwrap() = "112";
    assert_ne!(stdout(&rollup(&other_seed)), out);
}

#[test]
fn threads_from_environment() {
    let input = data("input.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_rollup"))
        .args([
            "aggregate", "--in", &input, "--collapse", "A*B ~ A*B1 + A",
            "--test", "min_records(3)", "--fun", "mean",
        ])
        .env("ROLLUP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), AB_MEANS);
    let o = Command::new(env!("CARGO_BIN_EXE_rollup"))
        .args(["aggregate", "--in", &input, "--collapse", "A ~ A", "--test", "min_records(3)", "--fun", "mean"])
        .env("ROLLUP_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scheme_digits_balanced() {
    let input = data("nace.csv");
    let o = rollup(&["scheme-digits", "--in", &input, "--levels", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "A0,A1,A2\n0111,011,01\n0112,011,01\n0113,011,01\n0121,012,01\n\
         0121,012,01\n0122,012,01\n0123,012,01\n0124,012,01\n"
    );
}

#[test]
fn scheme_digits_unbalanced_to_file() {
    let input = data("nace_unbalanced.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scheme.csv");
    let o = rollup(&[
        "scheme-digits", "--in", &input, "--column", "nace", "--levels", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "A0,A1,A2,A3\n0111,0111,011,01\n0112,0112,011,01\n0113,0113,011,01\n\
         0121,0121,012,01\n0122,0122,012,01\n0123,0123,012,01\n\
         01241,0124,012,01\n01242,0124,012,01\n"
    );
}

#[test]
fn scheme_digits_output_drives_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let scheme = dir.path().join("scheme.csv");
    let o = rollup(&[
        "scheme-digits", "--in", &data("nace.csv"), "--levels", "2",
        "--out", scheme.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let input = "nace,x\n0111,1\n0112,2\n0121,3\n0121,4\n0124,5\n9999,6\n";
    let o = rollup_with_stdin(
        &[
            "aggregate", "--scheme", scheme.to_str().unwrap(), "--key", "nace",
            "--test", "min_records(2)", "--fun", "sum",
        ],
        input,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "nace,level,x\n0111,1,3\n0112,1,3\n0121,0,7\n0124,1,12\n");
    assert!(stderr(&o).contains("1 input row(s) match no label"));
}

#[test]
fn scheme_digits_levels_zero() {
    let o = rollup(&["scheme-digits", "--in", &data("nace.csv"), "--levels", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn smoke_test_reports_missing_value_issue() {
    let input = data("input.csv");
    let o = rollup(&["smoke-test", "--in", &input, "--test", "nrow() >= 3; sum(Y >= 2) >= 3"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.starts_with(
        "Test with full dataset, Y all NA raised issues.\n   NA detected in output (must be TRUE or FALSE)"
    ));
    assert!(out.ends_with("1 issue(s) found\n"));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn smoke_test_clean_cases() {
    let input = data("input.csv");
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.txt");
    std::fs::write(&rules, "nrow() >= 3\nsum(Y >= 2, na_rm) >= 3\n").unwrap();
    let o = rollup(&["smoke-test", "--in", &input, "--test-file", rules.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "no issues\n");
    let o = rollup(&["smoke-test", "--in", &input, "--test", "min_records(3)"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn smoke_test_parse_error_is_usage_error() {
    let o = rollup(&["smoke-test", "--in", &data("input.csv"), "--test", "sum(Y) >"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("syntax error"));
}

#[test]
fn indeterminate_test_is_data_error() {
    let input = "A,Y\n1,NA\n1,2\n";
    let o = rollup_with_stdin(
        &["aggregate", "--collapse", "A ~ A", "--test", "sum(Y) > 1", "--fun", "mean"],
        input,
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("group 1 at collapse level 0"), "{err}");
    assert!(err.contains("smoke test"), "{err}");
}

#[test]
fn scheme_errors_exit_one() {
    let o = rollup_with_stdin(
        &["aggregate", "--collapse", "A ~ B", "--test", "min_records(1)", "--fun", "count"],
        "A,B,Y\n1,1,1\n1,2,2\n",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("disagreeing on `B`"), "{}", stderr(&o));
    let o = rollup(&[
        "aggregate", "--in", "/nonexistent/input.csv", "--collapse", "A ~ A",
        "--test", "min_records(1)", "--fun", "count",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn expressions_from_file_with_ols_and_custom_na() {
    let dir = tempfile::tempdir().unwrap();
    let exprs = dir.path().join("exprs.txt");
    std::fs::write(&exprs, "fit = ols(y, x)\nn = count_complete(x, y)\n").unwrap();
    let input = "g;x;y\na;0;1\na;1;3\na;-;5\nb;2;2\n";
    let o = rollup_with_stdin(
        &[
            "summarise", "--collapse", "g ~ g", "--test", "min_records(1)",
            "--expr-file", exprs.to_str().unwrap(), "--na", "-", "--delimiter", ";",
        ],
        input,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "g;level;fit_intercept;fit_slope;n\na;0;1;2;2\nb;0;-;-;1\n"
    );
}

#[test]
fn output_is_byte_identical_across_runs() {
    let input = data("producers.csv");
    let args = [
        "aggregate", "--in", &input, "--collapse", "sbi * size ~ sbi + sbi2 + sbi1",
        "--test", "frac_complete(0.8, industrial)", "--fun", "median", "--na-rm",
    ];
    let a = rollup(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, rollup(&args).stdout);
}

#[test]
fn help_lists_every_grammar() {
    let o = rollup(&["summarise", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for needle in ["formula := vars", "min_complete(N, v1, ...)", "gcall", "sample(col)"] {
        assert!(out.contains(needle), "missing {needle}");
    }
    let o = rollup(&["--help"]);
    assert!(stdout(&o).contains("scheme-digits"));
}
