//! Acceptance gate. Runs without the libtest harness so every criterion
//! prints its own line; exits nonzero if any criterion fails.

use std::time::Instant;

fn main() {
    let mut failures = 0;
    for c in qmetro_validation::criteria() {
        let start = Instant::now();
        let res = (c.run)();
        let elapsed = start.elapsed();
        let (pass, summary) = match res {
            Ok(o) => (o.pass && elapsed <= c.budget, o.summary),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {}: {summary} ({:.2}s, budget {}s)",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
