//! Plain-text reports with a trailing `key=value` block.

use std::fmt::Write;

use treehom_core::{DecideError, Decision, LdpReport, LdpWitness, TetrisCheck};

use crate::oracle::ImageOracle;

fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "{key}: {value}").unwrap();
}

pub fn summary_block(out: &mut String, pairs: &[(String, String)]) {
    out.push_str("[summary]\n");
    for (k, v) in pairs {
        writeln!(out, "{k}={v}").unwrap();
    }
}

pub fn witness_lines(out: &mut String, w: &LdpWitness) {
    line(out, "witness", &w.tree);
    line(out, "witness.rule_position", &w.rule_position);
    line(out, "witness.constrained_position", &w.constrained_position);
    line(out, "witness.subtree_height", w.subtree_height);
}

pub fn ldp_facts(report: &LdpReport) -> Vec<(String, String)> {
    vec![
        ("ldp.n_hat".into(), report.n_hat.to_string()),
        ("ldp.pumping_constant".into(), report.pumping_constant.to_string()),
        ("ldp.hat_rules".into(), report.hat_rules.to_string()),
        ("ldp.counter_rules".into(), report.counter_rules.to_string()),
        ("ldp.dimension".into(), report.dimension.to_string()),
    ]
}

/// Report for a finished decision. `certificate` names the written file,
/// if any.
pub fn decision(d: &Decision, certificate: Option<&str>) -> String {
    let mut out = String::new();
    line(&mut out, "RESULT", if d.regular { "REGULAR" } else { "NONREGULAR" });
    if let Some(w) = &d.ldp.witness {
        witness_lines(&mut out, w);
    }
    line(&mut out, "pumping_constant", d.ldp.pumping_constant);
    if let Some(path) = certificate {
        line(&mut out, "certificate", path);
    }
    summary_block(&mut out, &d.summary());
    out
}

pub fn rejection(e: &DecideError) -> String {
    let mut out = String::new();
    line(&mut out, "RESULT", "REJECTED");
    line(&mut out, "reason", e);
    if let DecideError::NotTetrisFree((s, s2)) = e {
        writeln!(out, "witness: ({s}, {s2})").unwrap();
    }
    out
}

pub fn ldp(report: &LdpReport) -> String {
    let mut out = String::new();
    line(&mut out, "LDP", if report.has_ldp { "yes" } else { "no" });
    if let Some(w) = &report.witness {
        witness_lines(&mut out, w);
    }
    line(&mut out, "pumping_constant", report.pumping_constant);
    summary_block(&mut out, &ldp_facts(report));
    out
}

pub fn tetris(check: &TetrisCheck) -> String {
    let mut out = String::new();
    let verdict = match (check.tetris_free, check.conclusive) {
        (true, _) => "yes",
        (false, true) => "no",
        (false, false) => "unknown",
    };
    line(&mut out, "TETRIS-FREE", verdict);
    if let Some((s, s2)) = &check.witness {
        writeln!(out, "witness: ({s}, {s2})").unwrap();
    }
    out
}

pub fn oracle(o: &ImageOracle) -> String {
    let mut out = String::new();
    line(&mut out, "ORACLE", if o.passed() { "pass" } else { "fail" });
    if let Some(m) = &o.mismatch {
        line(&mut out, "mismatch", &m.tree);
        line(&mut out, "mismatch.automaton", &m.automaton);
        line(&mut out, "mismatch.preimage_sum", &m.preimage_sum);
    }
    let exhaustive = o.exhaustive_height.map_or("none".to_string(), |k| k.to_string());
    summary_block(
        &mut out,
        &[
            ("oracle.max_height".into(), o.max_height.to_string()),
            ("oracle.exhaustive_height".into(), exhaustive),
            ("oracle.exhaustive_trees".into(), o.exhaustive_trees.to_string()),
            ("oracle.source_support".into(), o.source_support.to_string()),
            ("oracle.accepted_trees".into(), o.accepted_trees.to_string()),
            ("oracle.checked".into(), o.checked.to_string()),
        ],
    );
    out
}
