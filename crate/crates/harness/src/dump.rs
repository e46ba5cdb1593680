//! Line-oriented text dumps of trees and audit logs.

use std::fmt::Write as _;

use sbb_core::search::{AuditEvent, AuditRecord};
use sbb_core::tree::BeliefTree;
use sbb_core::Error;

use crate::error::Result;

pub const TREE_HEADER: &str = "id\tparent\tdepth\taction\tr\ts_next\tprob\tlower_mean\tupper_mean\tcount";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// One tab-separated line per node, in id order, after a header line.
/// `count` is the number of stored bound draws, lower and upper together.
pub fn dump_tree<N: Clone, P: Clone>(tree: &BeliefTree<N, P>) -> String {
    let mut out = String::with_capacity(64 * (tree.len() + 1));
    out.push_str(TREE_HEADER);
    out.push('\n');
    for n in tree.nodes() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            n.id,
            opt(n.parent),
            n.depth,
            opt(n.action_in),
            opt(n.reward_in),
            opt(n.next_state),
            n.prob_in,
            opt(n.lower.mean()),
            opt(n.upper.mean()),
            n.lower.count() + n.upper.count()
        )
        .expect("writing to a string");
    }
    out
}

/// One line per record: `iteration kind node value`, where an expansion
/// line carries the first child id and the child count instead of a value.
pub fn format_audit(records: &[AuditRecord]) -> String {
    let mut out = String::new();
    for r in records {
        match r.event {
            AuditEvent::Sample { node, value } => writeln!(out, "{}\tsample\t{node}\t{value}", r.iteration),
            AuditEvent::Expand {
                node,
                first_child,
                n_children,
            } => writeln!(out, "{}\texpand\t{node}\t{first_child}\t{n_children}", r.iteration),
            AuditEvent::FinalSample { node, value } => writeln!(out, "{}\tfinal\t{node}\t{value}", r.iteration),
        }
        .expect("writing to a string");
    }
    out
}

pub fn parse_audit(text: &str) -> Result<Vec<AuditRecord>> {
    let bad = |line: &str| Error::Validation(format!("malformed audit line {line:?}"));
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            let int = |i: usize| f.get(i).and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad(line));
            let float = |i: usize| f.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad(line));
            let event = match (f.get(1).copied(), f.len()) {
                (Some("sample"), 4) => AuditEvent::Sample {
                    node: int(2)?,
                    value: float(3)?,
                },
                (Some("final"), 4) => AuditEvent::FinalSample {
                    node: int(2)?,
                    value: float(3)?,
                },
                (Some("expand"), 5) => AuditEvent::Expand {
                    node: int(2)?,
                    first_child: int(3)?,
                    n_children: int(4)?,
                },
                _ => return Err(bad(line).into()),
            };
            Ok(AuditRecord {
                iteration: int(0)? as u64,
                event,
            })
        })
        .collect()
}
