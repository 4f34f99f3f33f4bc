//! Release-gate suite: one test per gate, each printing its verdict line.
//! Run with `--nocapture` to see the PASS/FAIL lines of passing gates too.

use qoplab::acceptance::{self, GateReport};

fn assert_gate(report: GateReport) {
    println!("{}", report.line());
    for check in &report.checks {
        let mark = if check.passed { "ok  " } else { "FAIL" };
        println!("    {mark} {} — {}", check.label, check.detail);
    }
    assert!(
        report.passed(),
        "gate {} ({}) failed:\n{}",
        report.number,
        report.name,
        report
            .failures()
            .map(|c| format!("  {} — {}", c.label, c.detail))
            .collect::<Vec<_>>()
            .join("\n")
    );
}

#[test]
fn gate_01_purification_map() {
    assert_gate(acceptance::gate_purification());
}

#[test]
fn gate_02_qubit_teleportation() {
    assert_gate(acceptance::gate_teleportation());
}

#[test]
fn gate_03_repetition_code() {
    assert_gate(acceptance::gate_repetition_code());
}

#[test]
fn gate_04_ion_phase_gate() {
    assert_gate(acceptance::gate_ion_gate());
}

#[test]
fn gate_05_blockade_gate() {
    assert_gate(acceptance::gate_blockade_gate());
}

#[test]
fn gate_06_cavity_transfer() {
    assert_gate(acceptance::gate_cavity_transfer());
}

#[test]
fn gate_07_repeater_scaling() {
    assert_gate(acceptance::gate_repeater_scaling());
}

#[test]
fn gate_08_chsh_violation() {
    assert_gate(acceptance::gate_chsh());
}

#[test]
fn gate_09_light_memory() {
    assert_gate(acceptance::gate_light_memory());
}

#[test]
fn gate_10_cv_teleportation() {
    assert_gate(acceptance::gate_cv_teleportation());
}

#[test]
fn gate_11_invariant_suites() {
    assert_gate(acceptance::gate_invariants());
}
