//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 1 to 11 run once on the default suite spec with their wall time
//! checked against the budgets below. Criterion 12 reruns the whole suite
//! from scratch and compares the two JSON reports byte for byte.

use epistemia::suite::{assemble, run_suite, Prepared, SuiteSpec, TITLES};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Wall-time budget per criterion, where one is set.
fn budget(id: usize) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(5)),
        2 => Some(Duration::from_secs(60)),
        3 => Some(Duration::from_secs(120)),
        10 => Some(Duration::from_secs(600)),
        11 => Some(Duration::from_secs(900)),
        _ => None,
    }
}

fn line(id: usize, passed: bool, elapsed: Duration, summary: &str) -> bool {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("[{verdict}] C{id:<2} {:<52} {:>8.2}s  {summary}", TITLES[id - 1], elapsed.as_secs_f64());
    passed
}

fn main() -> ExitCode {
    let spec = SuiteSpec::default();
    let t0 = Instant::now();
    let prepared = match Prepared::new(&spec) {
        Ok(p) => p,
        Err(e) => {
            println!("[FAIL] suite spec rejected: {e}");
            return ExitCode::FAILURE;
        }
    };
    let prep = t0.elapsed();
    println!("corpus: {} entries, {} analysed, prepared in {:.2}s", prepared.corpus.entries.len(), prepared.items.len(), prep.as_secs_f64());

    let mut ok = true;
    let mut results = Vec::new();
    for id in 1..=11 {
        let t = Instant::now();
        let r = prepared.run(id);
        let mut elapsed = t.elapsed();
        // Coverings are built while preparing the corpus.
        if id == 3 {
            elapsed += prep;
        }
        let mut summary = r.summary.clone();
        let mut passed = r.passed;
        if let Some(b) = budget(id) {
            if elapsed > b {
                passed = false;
                summary = format!("over budget ({:.0}s allowed); {summary}", b.as_secs_f64());
            }
        }
        ok &= line(id, passed, elapsed, &summary);
        results.push(r);
    }

    let t = Instant::now();
    let first = assemble(&prepared, results).to_json();
    let again = SuiteSpec {
        criteria: (1..=11).collect(),
        ..spec
    };
    let (passed, summary) = match run_suite(&again) {
        Ok(r) if r.to_json() == first => (true, format!("second run of criteria 1-11 matches ({} bytes)", first.len())),
        Ok(r) => {
            let second = r.to_json();
            let at = first.bytes().zip(second.bytes()).position(|(a, b)| a != b).unwrap_or(first.len().min(second.len()));
            (false, format!("reports differ from byte {at}"))
        }
        Err(e) => (false, format!("second run failed: {e}")),
    };
    ok &= line(12, passed, t.elapsed(), &summary);

    if ok {
        println!("all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("some criteria failed");
        ExitCode::FAILURE
    }
}
