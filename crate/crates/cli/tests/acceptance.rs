//! Runs every acceptance criterion and prints one line per criterion.
//! Exits non-zero when a criterion fails to run, or fails outside the
//! documented expected-fail checks.

use std::path::PathBuf;

use hml_cli::accept::{run_suite, AcceptConfig, EXPECTED_FAIL};
use hml_cli::output::{write_atomic, Format};
use hml_core::moments::DEFAULT_SERIES_CUTOFF;
use hml_core::offdiag::EPSILON;
use hml_core::Precision;

fn main() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let cfg = AcceptConfig {
        cache_dir: dir.join("cache"),
        prec: Precision::default(),
        epsilon: EPSILON,
        series_cutoff: DEFAULT_SERIES_CUTOFF,
        jobs: 1,
    };
    let suite = match run_suite(&cfg, false) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("acceptance suite did not run: {e:#}");
            std::process::exit(1);
        }
    };
    let mut bad = 0;
    println!("acceptance ({} criteria, expected failures: {:?})", suite.criteria.len(), EXPECTED_FAIL);
    for c in &suite.criteria {
        println!("{}", c.line());
        for k in &c.checks {
            if !k.note.is_empty() {
                println!("    {}: {}", k.name, k.note);
            }
        }
        if !c.pass_modulo_expected() {
            bad += 1;
        }
    }
    for (id, name) in EXPECTED_FAIL {
        let passed = suite.criteria.iter().filter(|c| c.id == id).flat_map(|c| &c.checks).any(|k| k.name == name && k.pass);
        if passed {
            println!("note: expected-fail check {id}/{name} passed");
        }
    }
    for (f, ext) in [(Format::Csv, "csv"), (Format::Json, "json")] {
        let p = dir.join(format!("acceptance.{ext}"));
        if let Err(e) = write_atomic(&p, &suite.render(f)) {
            eprintln!("writing {}: {e:#}", p.display());
            bad += 1;
        }
    }
    println!("tables written to {}", dir.display());
    if bad > 0 {
        println!("{bad} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
