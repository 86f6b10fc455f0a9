//! Acceptance gate: one line per criterion.

use std::io::Write;

use mvops::acceptance::run_all;
use mvops::manifest::Manifest;

#[test]
fn acceptance_criteria() {
    let m = Manifest::builtin();
    let outcomes = run_all(&m);
    assert_eq!(outcomes.len(), 9);
    // bypass the test harness capture so the lines show on success too
    let mut out = std::io::stdout().lock();
    for o in &outcomes {
        writeln!(out, "{}", o.line()).unwrap();
    }
    drop(out);
    for o in &outcomes {
        assert!(
            o.pass() || o.only_unattainable(),
            "criterion {} failed outside the recorded unattainable cases",
            o.number
        );
        // unattainable entries must still be failing, not silently passing
        for c in o.cases.iter().filter(|c| c.pass) {
            assert!(
                m.unattainable(&c.case, Some("closed-form relation")).is_none() || o.number != 7,
                "{} is listed unattainable but passes",
                c.case
            );
        }
    }
    let unattainable: usize = outcomes
        .iter()
        .map(|o| o.cases.iter().filter(|c| c.unattainable.is_some()).count())
        .sum();
    assert_eq!(unattainable, m.unattainable.len());
}
