use std::path::{Path, PathBuf};
use std::process::Command;

use pdnet::harness::{load_config, oracle_report, parse_problem_choice, parse_problem_file, GraphKind, ProblemChoice};
use pdnet::{parse_config, run_experiment, validate, Algorithm, Error};

const TOY_PROBLEM: &str = "\
[problem]
name = toy
dim = 2

[agent]
objective = quadratic 1; 2, 0
set = box -1, -1; 1, 1

[agent]
objective = quadratic 1; 0, 2
set = box -1, -1; 1, 1

[inequality]
linear = 1, 1; -1

[reference]
x = 0.5, 0.5
value = 5
";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn parses_the_shipped_configs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let num = load_config(&root.join("num_dlpds.cfg")).unwrap();
    assert_eq!(num.problem, ProblemChoice::Num);
    assert_eq!(num.algorithm, Algorithm::Dlpds);
    assert_eq!(num.graph, GraphKind::RotatingRing);
    assert_eq!((num.agents, num.period, num.rounds), (Some(5), Some(5), 20_000));
    let q = load_config(&root.join("quadratic_dppds.cfg")).unwrap();
    assert_eq!(
        (q.problem, q.algorithm, q.rounds),
        (ProblemChoice::Quadratic, Algorithm::Dppds, 50_000)
    );
    let toy = load_config(&root.join("toy_dlpds.cfg")).unwrap();
    assert_eq!(toy.problem, ProblemChoice::Custom(root.join("toy.problem")));
}

#[test]
fn config_errors() {
    let Err(Error::Config(lines)) = parse_config("problem = num\nrounds = 0\n") else {
        panic!("rounds = 0 accepted");
    };
    assert_eq!(lines.len(), 1);
    let Err(Error::Config(lines)) = parse_config("algorithm = dlpds\nwhat = 3\nalpha = 2\nalpha = 0.1\njunk\n") else {
        panic!("bad config accepted");
    };
    // unknown key, alpha out of range, duplicate, malformed line, missing problem
    assert_eq!(lines.len(), 5, "{lines:?}");
    assert!(parse_config("problem = custom:\n").is_err());
    assert!(parse_config("problem = num\nschedule = constant\n").is_err());
}

#[test]
fn penalty_algorithm_on_num_is_accepted() {
    let cfg = parse_config("problem = num\nalgorithm = dppds\nrounds = 20\n").unwrap();
    let exp = run_experiment(&cfg).unwrap();
    assert!(!exp.summary.notes.is_empty());
    assert_eq!(exp.trace.records.len(), 20);
}

#[test]
fn csv_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "toy.problem", TOY_PROBLEM);
    let text = "problem = custom:toy.problem\nalgorithm = dlpds\ngraph = complete\nrounds = 2\nout = toy.csv\n";
    let cfg_path = write(dir.path(), "toy.cfg", text);
    let mut cfg = load_config(&cfg_path).unwrap();
    let out = dir.path().join("toy.csv");
    cfg.out = Some(out.clone());
    run_experiment(&cfg).unwrap();
    let first = std::fs::read(&out).unwrap();
    run_experiment(&cfg).unwrap();
    assert_eq!(first, std::fs::read(&out).unwrap());

    let csv = String::from_utf8(first).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "k,agent,x0,x1,mu0,y,delta_x,delta_mu,delta_lambda,feas_g,feas_h,dist_opt,y_err"
    );
    assert_eq!(lines.len(), 5);
    let keys: Vec<(&str, &str)> = lines[1..]
        .iter()
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    assert_eq!(keys, [("1", "0"), ("1", "1"), ("2", "0"), ("2", "1")]);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 13);
        for field in l.split(',').skip(2) {
            let digits = field
                .split(['e', 'E'])
                .next()
                .unwrap()
                .chars()
                .filter(char::is_ascii_digit)
                .collect::<String>();
            assert!(digits.trim_start_matches('0').len() <= 12, "{field}");
        }
    }
}

#[test]
fn penalty_csv_has_lambda_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let mut cfg = parse_config("problem = quadratic\nalgorithm = dppds\nrounds = 3\n").unwrap();
    cfg.out = Some(out.clone());
    run_experiment(&cfg).unwrap();
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("k,agent,x0,x1,x2,x3,x4,lambda0,y,"));
    assert_eq!(csv.lines().count(), 1 + 3 * 5);
}

#[test]
fn custom_problem_file() {
    let p = parse_problem_file(TOY_PROBLEM).unwrap();
    assert_eq!((p.agents(), p.dim(), p.m(), p.nu()), (2, 2, 1, 0));
    assert_eq!(p.reference().unwrap().value, 5.0);
    assert!(parse_problem_file("[problem]\nname = x\ndim = 2\n[agent]\nobjective = quadratic 1; 1\n").is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "toy.problem", TOY_PROBLEM);
    let choice = parse_problem_choice(&format!("custom:{}", path.display())).unwrap();
    let report = oracle_report(&choice).unwrap();
    assert!(report.contains('5'), "{report}");
    assert!(parse_problem_choice("nope").is_err());
}

#[test]
fn validation_reports() {
    let ok = validate(&parse_config("problem = num\n").unwrap()).unwrap();
    assert!(ok.is_ok());
    let identity = validate(&parse_config("problem = num\ngraph = identity\n").unwrap()).unwrap();
    assert!(!identity.is_ok());
    let constant = validate(&parse_config("problem = num\nschedule = constant 0.1\n").unwrap()).unwrap();
    assert!(!constant.is_ok());
}

fn pdnet(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pdnet"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "toy.problem", TOY_PROBLEM);
    write(
        d,
        "toy.cfg",
        "problem = custom:toy.problem\nalgorithm = dlpds\ngraph = complete\nrounds = 50\n",
    );
    write(d, "bad_graph.cfg", "problem = num\ngraph = identity\n");
    write(d, "bad.cfg", "problem = num\nrounds = -4\n");
    write(
        d,
        "blowup.cfg",
        "problem = quadratic\nalgorithm = dppds\ndual_cap = 1e-6\nrounds = 10\n",
    );

    let run = pdnet(&["run", "toy.cfg", "--out", "t.csv", "--rounds", "7", "--seed", "3"], d);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(
        std::fs::read_to_string(d.join("t.csv")).unwrap().lines().count(),
        1 + 7 * 2
    );
    let again = pdnet(
        &[
            "run", "--config", "toy.cfg", "--out", "u.csv", "--rounds", "7", "--seed", "3",
        ],
        d,
    );
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        std::fs::read(d.join("t.csv")).unwrap(),
        std::fs::read(d.join("u.csv")).unwrap()
    );

    assert_eq!(
        pdnet(&["run", "toy.cfg", "--rounds", "5", "--debug-asserts"], d)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(pdnet(&["validate", "toy.cfg"], d).status.code(), Some(0));
    assert_eq!(pdnet(&["oracle", "quadratic"], d).status.code(), Some(0));

    assert_eq!(pdnet(&["validate", "bad_graph.cfg"], d).status.code(), Some(1));
    assert_eq!(
        pdnet(&["run", "bad_graph.cfg", "--rounds", "5"], d).status.code(),
        Some(1)
    );
    assert_eq!(pdnet(&["run", "bad.cfg"], d).status.code(), Some(1));
    assert_eq!(pdnet(&["run", "toy.cfg", "--rounds", "0"], d).status.code(), Some(1));

    assert_eq!(pdnet(&["run", "missing.cfg"], d).status.code(), Some(2));
    assert_eq!(pdnet(&["run", "blowup.cfg"], d).status.code(), Some(2));
    assert_eq!(pdnet(&["oracle", "custom:nowhere.problem"], d).status.code(), Some(2));
}
