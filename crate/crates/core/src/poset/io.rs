//! Line-oriented text format for orderings.
//!
//! ```text
//! # comment
//! group <d> <r>        # then lines: course slot group
//! total <d> <N>        # then lines: course slot rank
//! tree <d> <nodes>     # then lines: course slot node, and: node parent
//! dag <d> <N>          # then lines: course slot id, and: lower_id upper_id
//! ```
//!
//! Element lines have three fields, link lines two. `d` is informational and
//! checked against the largest course index.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{ElementId, PartialOrder, PosetError, Structure};

fn parse_err(line: usize, msg: impl Into<String>) -> PosetError {
    PosetError::Parse { line, msg: msg.into() }
}

fn field<T: FromStr>(tok: &str, line: usize) -> Result<T, PosetError> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid integer `{tok}`")))
}

impl FromStr for PartialOrder {
    type Err = PosetError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(PosetError::Empty)?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(parse_err(hline, "header must be `<kind> <d> <count>`"));
        }
        let kind = head[0];
        let d: usize = field(head[1], hline)?;
        let count: usize = field(head[2], hline)?;

        let mut elements: Vec<(ElementId, usize)> = Vec::new();
        let mut links: Vec<(usize, usize)> = Vec::new();
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks.len() {
                3 => {
                    let c: usize = field(toks[0], ln)?;
                    if c >= d {
                        return Err(parse_err(ln, format!("course {c} outside [0, {d})")));
                    }
                    elements.push((ElementId::new(c, field(toks[1], ln)?), field(toks[2], ln)?));
                }
                2 => links.push((field(toks[0], ln)?, field(toks[1], ln)?)),
                _ => return Err(parse_err(ln, "expected 2 or 3 fields")),
            }
        }
        let link_err = || parse_err(hline, format!("`{kind}` files take no two-field lines"));

        match kind {
            "group" => {
                if !links.is_empty() {
                    return Err(link_err());
                }
                PartialOrder::group(&elements, count)
            }
            "total" => {
                if !links.is_empty() {
                    return Err(link_err());
                }
                if elements.len() != count {
                    return Err(parse_err(hline, format!("expected {count} elements, found {}", elements.len())));
                }
                let mut ranked = vec![None; count];
                for &(e, r) in &elements {
                    let slot = ranked
                        .get_mut(r)
                        .ok_or_else(|| parse_err(hline, format!("rank {r} outside [0, {count})")))?;
                    if slot.replace(e).is_some() {
                        return Err(parse_err(hline, format!("rank {r} used twice")));
                    }
                }
                let ranked: Vec<ElementId> = ranked.into_iter().map(|e| e.expect("bijection")).collect();
                PartialOrder::total(&ranked)
            }
            "tree" => {
                if let Some(&(_, n)) = elements.iter().find(|&&(_, n)| n >= count) {
                    return Err(parse_err(hline, format!("node {n} outside [0, {count})")));
                }
                if let Some(&(c, p)) = links.iter().find(|&&(c, p)| c >= count || p >= count) {
                    return Err(parse_err(hline, format!("link {c} {p} mentions a node outside [0, {count})")));
                }
                let els: Vec<ElementId> = elements.iter().map(|&(e, _)| e).collect();
                let index = super::index_elements(&els)?;
                PartialOrder::tree_with_nodes(els, index, &elements, &links, count)
            }
            "dag" => {
                let mut by_id = vec![None; count];
                for &(e, id) in &elements {
                    let slot = by_id
                        .get_mut(id)
                        .ok_or_else(|| parse_err(hline, format!("id {id} outside [0, {count})")))?;
                    if slot.replace(e).is_some() {
                        return Err(parse_err(hline, format!("id {id} used twice")));
                    }
                }
                let els: Vec<ElementId> = elements.iter().map(|&(e, _)| e).collect();
                let mut edges = Vec::with_capacity(links.len());
                for &(a, b) in &links {
                    let ea = by_id.get(a).copied().flatten();
                    let eb = by_id.get(b).copied().flatten();
                    match (ea, eb) {
                        (Some(ea), Some(eb)) => edges.push((ea, eb)),
                        _ => return Err(parse_err(hline, format!("edge {a} {b} mentions an unknown id"))),
                    }
                }
                PartialOrder::dag(&els, &edges)
            }
            other => Err(parse_err(hline, format!("unknown ordering kind `{other}`"))),
        }
    }
}

impl PartialOrder {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PosetError> {
        let text = std::fs::read_to_string(path).map_err(|e| PosetError::Io(e.to_string()))?;
        text.parse()
    }

    /// Serialize in the text format read by `from_str`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = self.courses();
        let els = self.elements();
        match self.structure() {
            Structure::Group { group_of, groups } => {
                writeln!(s, "group {d} {groups}").unwrap();
                for (e, g) in els.iter().zip(group_of) {
                    writeln!(s, "{} {} {g}", e.course, e.slot).unwrap();
                }
            }
            Structure::Total { rank_of } => {
                writeln!(s, "total {d} {}", els.len()).unwrap();
                for (e, r) in els.iter().zip(rank_of) {
                    writeln!(s, "{} {} {r}", e.course, e.slot).unwrap();
                }
            }
            Structure::Tree { node_of, parent } => {
                writeln!(s, "tree {d} {}", parent.len()).unwrap();
                for (e, n) in els.iter().zip(node_of) {
                    writeln!(s, "{} {} {n}", e.course, e.slot).unwrap();
                }
                for (c, p) in parent.iter().enumerate() {
                    if let Some(p) = p {
                        writeln!(s, "{c} {p}").unwrap();
                    }
                }
            }
            Structure::Dag { succ, .. } => {
                writeln!(s, "dag {d} {}", els.len()).unwrap();
                for (i, e) in els.iter().enumerate() {
                    writeln!(s, "{} {} {i}", e.course, e.slot).unwrap();
                }
                for (a, bs) in succ.iter().enumerate() {
                    for b in bs {
                        writeln!(s, "{a} {b}").unwrap();
                    }
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_roundtrip() {
        let text = "# two courses\ngroup 2 2\n0 0 0\n0 1 1\n1 0 0\n1 1 1\n";
        let o: PartialOrder = text.parse().unwrap();
        assert_eq!(o.implied_pairs().len(), 4);
        let back: PartialOrder = o.to_text().parse().unwrap();
        assert_eq!(back.implied_pairs(), o.implied_pairs());
    }

    #[test]
    fn tree_and_dag_roundtrip() {
        let tree = "tree 1 3\n0 0 0\n0 1 1\n0 2 2\n1 0\n2 0\n";
        let o: PartialOrder = tree.parse().unwrap();
        assert_eq!(o.implied_pairs().len(), 2);
        assert_eq!(o.to_text().parse::<PartialOrder>().unwrap().implied_pairs(), o.implied_pairs());

        let dag = "dag 1 3\n0 0 0\n0 1 1\n0 2 2\n0 1\n1 2\n";
        let o: PartialOrder = dag.parse().unwrap();
        assert_eq!(o.implied_pairs().len(), 3);
        assert_eq!(o.to_text().parse::<PartialOrder>().unwrap().implied_pairs(), o.implied_pairs());
    }

    #[test]
    fn total_roundtrip_and_errors() {
        let o: PartialOrder = "total 2 2\n1 0 0\n0 0 1\n".parse().unwrap();
        assert_eq!(o.implied_pairs(), vec![(ElementId::new(1, 0), ElementId::new(0, 0))]);
        assert!(matches!("total 2 2\n1 0 0\n0 0 0\n".parse::<PartialOrder>(), Err(PosetError::Parse { .. })));
        assert!(matches!("heap 1 1\n0 0 0\n".parse::<PartialOrder>(), Err(PosetError::Parse { .. })));
        assert!(matches!("group 1 2\n0 0\n".parse::<PartialOrder>(), Err(PosetError::Parse { .. })));
        assert!(matches!("group 1 2\n3 0 0\n".parse::<PartialOrder>(), Err(PosetError::Parse { .. })));
    }
}
