//! Graphviz rendering of the cluster-merge tree.

use std::fmt::Write;

use crate::ladder::HierarchyReport;

fn level_label(theta: Option<f64>) -> String {
    match theta {
        None => "base".into(),
        Some(t) => format!("theta = {t:.6}"),
    }
}

/// One node per cluster and level, with an edge into the cluster that absorbs it one level up.
pub fn merge_tree_dot(report: &HierarchyReport) -> String {
    let mut s = String::from("digraph hierarchy {\n  rankdir=BT;\n  node [shape=box];\n");
    let _ = writeln!(s, "  label=\"{}\";", report.note);
    for (l, clusters) in report.clusters_at_level.iter().enumerate() {
        let _ = writeln!(s, "  subgraph level{l} {{\n    rank=same;");
        for (c, cells) in clusters.iter().enumerate() {
            let cells: Vec<String> = cells.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                s,
                "    L{l}C{c} [label=\"{}\\ncells {}\"];",
                level_label(report.levels[l]),
                cells.join(",")
            );
        }
        s.push_str("  }\n");
    }
    for l in 1..report.clusters_at_level.len() {
        let parents = &report.clusters_at_level[l];
        for (c, cells) in report.clusters_at_level[l - 1].iter().enumerate() {
            let p = parents
                .iter()
                .position(|pc| pc.contains(&cells[0]))
                .expect("partitions coarsen");
            let _ = writeln!(s, "  L{}C{c} -> L{l}C{p};", l - 1);
        }
    }
    s.push_str("}\n");
    s
}
