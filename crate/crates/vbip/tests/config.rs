use std::path::{Path, PathBuf};

use vbip::config::{Command, ConfigArgs, InitKind, Method, RunConfig, KEYS};
use vbip::io::KeyValues;
use vbip_core::model::Convergence;
use vbip_core::penalties::PenaltyFamily;

fn args() -> ConfigArgs {
    ConfigArgs { output: Some(PathBuf::from("out")), ..Default::default() }
}

fn kv(text: &str) -> KeyValues {
    KeyValues::parse(text, Path::new("cfg.txt")).unwrap()
}

#[test]
fn defaults_fill_everything() {
    let c = RunConfig::resolve_with(Command::Fit, &ConfigArgs { input: Some("d".into()), ..args() }, None).unwrap();
    assert_eq!(c.method, Method::Mfvb);
    assert_eq!(c.penalty.family, PenaltyFamily::Laplace);
    assert_eq!(c.hyper.a_eps, 1e5);
    assert_eq!(c.hyper.a_x, 1e5);
    assert_eq!(c.tol, 1e-2);
    assert_eq!(c.max_iter, 500);
    assert_eq!(c.convergence, Convergence::MeanX);
    assert_eq!(c.init, InitKind::Data);
    assert_eq!((c.warmup, c.kept, c.thin), (1000, 5000, 1));
    assert_eq!(c.level, 0.95);
    assert_eq!(c.truncation, None);
    assert_eq!((c.delta, c.sigma), (2.0, 1.0));
    assert!(!c.force);
}

#[test]
fn image_defaults_depend_on_dim() {
    let a = ConfigArgs { dim: Some(2), m1: Some(4), m2: Some(5), ..args() };
    let c = RunConfig::resolve_with(Command::Generate, &a, None).unwrap();
    assert_eq!((c.delta, c.sigma), (0.7, 50.0));
    let c = RunConfig::resolve_with(Command::ReplicateStudy, &args(), None).unwrap();
    assert_eq!((c.delta, c.sigma), (0.7, 50.0));
    assert_eq!(c.truncations, vec![Some(5), None]);
    assert_eq!(c.replicates, 10);
}

#[test]
fn flags_beat_file_beat_defaults() {
    let file = kv("tol = 1e-4\nmax_iter = 7\nmethod = vmp\nsigma_eps = 3\n");
    let a = ConfigArgs { input: Some("d".into()), tol: Some(1e-6), ..args() };
    let c = RunConfig::resolve_with(Command::Fit, &a, Some(&file)).unwrap();
    assert_eq!(c.tol, 1e-6);
    assert_eq!(c.max_iter, 7);
    assert_eq!(c.method, Method::Vmp);
    assert_eq!(c.sigma, 3.0);
    assert_eq!(c.warmup, 1000);
}

#[test]
fn config_file_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.txt");
    std::fs::write(&p, "# run\npenalty = horseshoe\ninput = data\n").unwrap();
    let a = ConfigArgs { config: Some(p), ..args() };
    let c = RunConfig::resolve(Command::Fit, &a).unwrap();
    assert_eq!(c.penalty.family, PenaltyFamily::Horseshoe);
    assert_eq!(c.input.as_deref(), Some(Path::new("data")));
    let missing = ConfigArgs { config: Some(dir.path().join("nope")), ..args() };
    assert_eq!(RunConfig::resolve(Command::Fit, &missing).unwrap_err().exit_code(), 4);
}

#[test]
fn unknown_or_bad_keys_are_usage_errors() {
    let a = ConfigArgs { input: Some("d".into()), ..args() };
    for text in ["colour = red\n", "tol = fast\n", "method = gibbs\n", "penalty = ridge\n", "dim = 3\n", "force = maybe\n"] {
        let e = RunConfig::resolve_with(Command::Fit, &a, Some(&kv(text))).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
    let e = RunConfig::resolve_with(Command::Fit, &a, Some(&kv("truncation = 0\n"))).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = RunConfig::resolve_with(Command::Fit, &ConfigArgs { level: Some(1.5), ..a }, None).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn required_keys_per_command() {
    let no_out = ConfigArgs::default();
    assert!(RunConfig::resolve_with(Command::ReplicateStudy, &no_out, None).is_err());
    assert!(RunConfig::resolve_with(Command::Generate, &args(), None).is_err());
    assert!(RunConfig::resolve_with(Command::Generate, &ConfigArgs { m: Some(1), ..args() }, None).is_err());
    assert!(RunConfig::resolve_with(Command::Generate, &ConfigArgs { m: Some(2), ..args() }, None).is_ok());
    let d2 = ConfigArgs { dim: Some(2), m1: Some(3), ..args() };
    assert!(RunConfig::resolve_with(Command::Generate, &d2, None).is_err());
    let d2_img = ConfigArgs { dim: Some(2), image: Some("img.csv".into()), ..args() };
    assert!(RunConfig::resolve_with(Command::Generate, &d2_img, None).is_ok());
    assert!(RunConfig::resolve_with(Command::Fit, &args(), None).is_err());
    assert!(RunConfig::resolve_with(Command::Compare, &ConfigArgs { fit_a: Some("a".into()), ..args() }, None).is_err());
    let cmp = ConfigArgs { fit_a: Some("a".into()), fit_b: Some("b".into()), ..args() };
    assert!(RunConfig::resolve_with(Command::Compare, &cmp, None).is_ok());
    let st = ConfigArgs { replicates: Some(0), ..args() };
    assert!(RunConfig::resolve_with(Command::ReplicateStudy, &st, None).is_err());
    let st = ConfigArgs { jobs: Some(0), ..args() };
    assert!(RunConfig::resolve_with(Command::ReplicateStudy, &st, None).is_err());
}

#[test]
fn echo_resolves_to_the_same_config() {
    let a = ConfigArgs {
        input: Some("d".into()),
        method: Some("mcmc".into()),
        penalty: Some("gdp".into()),
        penalty_lambda: Some(2.5),
        truncation: Some("4".into()),
        truncations: Some("3,7,inf".into()),
        convergence: Some("all".into()),
        init: Some("unit".into()),
        seed: Some(99),
        force: true,
        ..args()
    };
    let c = RunConfig::resolve_with(Command::Fit, &a, None).unwrap();
    let echoed = kv(&c.echo().render());
    let back = RunConfig::resolve_with(Command::Fit, &ConfigArgs::default(), Some(&echoed)).unwrap();
    assert_eq!(back, c);
}

#[test]
fn every_key_is_a_flag() {
    let flags: Vec<&str> = ConfigArgs::default().pairs().iter().map(|(k, _)| *k).collect();
    assert!(flags.is_empty());
    for (k, _, desc) in KEYS {
        assert!(!desc.is_empty(), "{k}");
    }
    // pairs() covers every key except --config itself
    let full = ConfigArgs {
        dim: Some(1),
        m: Some(1),
        m1: Some(1),
        m2: Some(1),
        delta: Some(1.0),
        sigma: Some(1.0),
        truncation: Some("1".into()),
        image: Some("x".into()),
        seed: Some(1),
        method: Some("x".into()),
        penalty: Some("x".into()),
        penalty_lambda: Some(1.0),
        a_eps: Some(1.0),
        a_x: Some(1.0),
        tol: Some(1.0),
        max_iter: Some(1),
        convergence: Some("x".into()),
        init: Some("x".into()),
        warmup: Some(1),
        kept: Some(1),
        thin: Some(1),
        level: Some(0.5),
        replicates: Some(1),
        jobs: Some(1),
        truncations: Some("x".into()),
        timing_repeats: Some(1),
        input: Some("x".into()),
        output: Some("x".into()),
        fit_a: Some("x".into()),
        fit_b: Some("x".into()),
        force: true,
        config: None,
    };
    let got: Vec<&str> = full.pairs().iter().map(|(k, _)| *k).collect();
    let want: Vec<&str> = KEYS.iter().map(|(k, _, _)| *k).filter(|k| *k != "config").collect();
    assert_eq!(got, want);
}
