//! Shared reporting for the acceptance gate in `tests/acceptance.rs`.

/// Collects one PASS/FAIL line per criterion.
#[derive(Debug, Default)]
pub struct Gate {
    pub failures: Vec<String>,
}

impl Gate {
    pub fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(id.to_string());
        }
    }

    /// Informational check outside the numbered criteria; never changes the exit code.
    pub fn note_check(&self, name: &str, pass: bool, detail: String) {
        println!("check {name}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    }
}
