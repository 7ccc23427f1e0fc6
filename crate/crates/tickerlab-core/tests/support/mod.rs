//! Shared helpers for the integration suites.

/// Print the one-line verdict for an acceptance criterion, then assert it.
pub fn report(name: &str, pass: bool, detail: String) {
    println!(
        "criterion {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {name} failed: {detail}");
}
