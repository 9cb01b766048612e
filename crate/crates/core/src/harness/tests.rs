use super::gen::*;
use super::*;
use crate::env::Environment;

#[test]
fn random_env_is_deterministic() {
    let sizes = Sizes::new(3, 3, 4, 1);
    let a = random_env(11, sizes, 0.3).unwrap();
    let b = random_env(11, sizes, 0.3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, random_env(12, sizes, 0.3).unwrap());
    Environment::validate(a, true).unwrap();
}

#[test]
fn full_sparsity_gives_point_masses() {
    let spec = random_env(3, Sizes::new(3, 2, 2, 1), 1.0).unwrap();
    assert!(spec.rewards.contains(&crate::scalar::int(0)));
    for row in spec.table.values().chain(std::iter::once(&spec.initial)) {
        assert_eq!(row.iter().filter(|p| **p != crate::scalar::int(0)).count(), 1);
    }
}

#[test]
fn five_actions_pad_to_eight() {
    let spec = random_env(5, Sizes::new(2, 2, 5, 0), 0.0).unwrap();
    assert_eq!(spec.actions.len(), 5);
    let p = padded(&spec, 2);
    assert_eq!(p.actions.len(), 8);
    Environment::validate(p, true).unwrap();
}

#[test]
fn oversized_requests_are_rejected() {
    for sizes in [
        Sizes::new(5, 2, 2, 0),
        Sizes::new(2, 5, 2, 0),
        Sizes::new(2, 2, 17, 0),
        Sizes::new(2, 2, 2, 3),
        Sizes::new(0, 2, 2, 0),
    ] {
        assert!(matches!(random_env(0, sizes, 0.5), Err(Error::InvalidSizes(_))));
    }
}

#[test]
fn suite_ids_round_trip() {
    for id in SuiteId::ALL {
        assert_eq!(id.name().parse::<SuiteId>().unwrap(), id);
    }
    assert!("nope".parse::<SuiteId>().is_err());
}

#[test]
fn bounds_suite_passes() {
    let report = run_suite(&SuiteConfig::defaults(SuiteId::BoundsArith, 7));
    assert!(report.ok(), "{:?}", report.failures().collect::<Vec<_>>());
    let ids: Vec<&str> = report.records.iter().map(|r| r.check_id.as_str()).collect();
    assert!(ids.contains(&"plain-e0.1-g0.5-a4"));
    assert!(ids.contains(&"binary-e0.1-g0.5-a4"));
    assert_eq!(ids.iter().filter(|i| i.starts_with("asymptotic")).count(), 9);
    assert_eq!(ids.iter().filter(|i| i.starts_with("certificate")).count(), 9);
}

fn non_markov_spec() -> EnvironmentSpec {
    random_env(1, Sizes::new(2, 2, 2, 2), 0.5).unwrap()
}

#[test]
fn markov_suite_skips_context_environments() {
    let mut config = SuiteConfig::defaults(SuiteId::ThmMarkov, 7);
    config.source = EnvSource::Spec(Box::new(non_markov_spec()));
    let report = run_suite(&config);
    assert!(report.ok());
    assert_eq!(report.skipped, 1);
    assert_eq!(report.passed, 0);
}

#[test]
fn module_errors_become_failures() {
    let mut config = SuiteConfig::defaults(SuiteId::EsaCensus, 7);
    config.source = EnvSource::Spec(Box::new(non_markov_spec()));
    config.delta = -1.0;
    let report = run_suite(&config);
    assert!(!report.ok());
    assert!(report.failures().any(|r| r.lhs.starts_with("error")));
}

fn small(suite: SuiteId) -> SuiteConfig {
    let mut config = SuiteConfig::defaults(suite, 3);
    if let EnvSource::Random { count, .. } = &mut config.source {
        *count = 2;
    }
    config.policies = 2;
    config
}

#[test]
fn small_runs_of_every_suite_pass() {
    for id in SuiteId::ALL {
        let report = run_suite(&small(id));
        assert!(report.ok(), "{id}: {:?}", report.failures().collect::<Vec<_>>());
        assert!(report.passed > 0, "{id}");
    }
}

#[test]
fn exact_value_suites_agree_exactly_when_lambda_is_rational() {
    // γ = 1/4 with two actions: d = 1, λ = γ; with four actions d = 2, λ = 1/2
    for actions in [2, 4] {
        let mut config = small(SuiteId::LemmaQstar);
        config.gamma = 0.25;
        config.exact = true;
        config.source = EnvSource::Spec(Box::new(random_env(9, Sizes::new(2, 2, actions, 1), 0.3).unwrap()));
        let report = run_suite(&config);
        assert!(report.ok());
        let main = report.records.iter().find(|r| r.check_id == "x-relationship").unwrap();
        assert_eq!(main.abs_diff, 0.0);
        assert!(main.lhs.contains('/') || !main.lhs.contains('.'), "{}", main.lhs);
    }
}

#[test]
fn reports_are_deterministic_and_format_independent() {
    let a = run_suite(&small(SuiteId::LemmaQpi));
    let b = run_suite(&small(SuiteId::LemmaQpi));
    for f in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown] {
        assert_eq!(render_report(&a, f).unwrap(), render_report(&b, f).unwrap());
    }
    let json = parse_json_report(&render_report(&a, ReportFormat::Json).unwrap()).unwrap();
    let csv = parse_csv_records(&render_report(&a, ReportFormat::Csv).unwrap()).unwrap();
    let key = |r: &CheckRecord| format!("{}|{}|{}|{}|{}|{}", r.suite, r.env_id, r.check_id, r.lhs, r.rhs, r.pass);
    let mut x: Vec<String> = json.records.iter().map(key).collect();
    let mut y: Vec<String> = csv.iter().map(key).collect();
    x.sort();
    y.sort();
    assert_eq!(x, y);
    assert_eq!(json, a);
}

#[test]
fn empty_report_is_header_only_csv() {
    let text = render_report(&VerificationReport::default(), ReportFormat::Csv).unwrap();
    assert_eq!(text, "suite,env_id,check_id,lhs,rhs,abs_diff,tol,pass\n");
}

#[test]
fn unwritable_path_is_an_io_error() {
    let err = emit_report(
        &VerificationReport::default(),
        ReportFormat::Json,
        std::path::Path::new("/nonexistent-dir/report.json"),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Io(_)));
}
