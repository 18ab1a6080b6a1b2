//! Edge, middle, transition and terminal coefficients as exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{rational, Rational};

/// Integer sequences driving the k-indexed middle-graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sequence {
    A,
    B,
    P,
    Q,
}

impl Sequence {
    pub const ALL: [Sequence; 4] = [Sequence::A, Sequence::B, Sequence::P, Sequence::Q];

    /// The three printed leading terms.
    pub fn printed_seeds(self) -> [i64; 3] {
        match self {
            Sequence::A => [1, 1, 3],
            Sequence::B => [0, 2, 4],
            Sequence::P => [1, 7, 15],
            Sequence::Q => [1, 4, 11],
        }
    }

    /// `f_k` from `f_0`, `f_1` and `f_k = 2 f_(k-1) + f_(k-2)`.
    pub fn term(self, k: usize) -> BigInt {
        let [f0, f1, _] = self.printed_seeds();
        let (mut prev, mut cur) = (BigInt::from(f0), BigInt::from(f1));
        if k == 0 {
            return prev;
        }
        for _ in 1..k {
            let next = &cur * 2 + &prev;
            prev = std::mem::replace(&mut cur, next);
        }
        cur
    }

    pub fn label(self) -> char {
        match self {
            Sequence::A => 'a',
            Sequence::B => 'b',
            Sequence::P => 'p',
            Sequence::Q => 'q',
        }
    }
}

fn seq(s: Sequence, k: usize) -> Rational {
    Rational::from_integer(s.term(k))
}

/// A node of one of the module graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    /// The single node of the centre-module graph.
    Center1,
    /// Edge-module graph node `N_alpha`.
    Edge(u32),
    /// Modified first node of the edge graph entered from the middle graph.
    EdgeTilde,
    /// Middle-module graph node `N_alpha`.
    Middle(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Center1 => write!(f, "C1"),
            NodeId::Edge(a) => write!(f, "E{a}"),
            NodeId::EdgeTilde => write!(f, "E~1"),
            NodeId::Middle(a) => write!(f, "M{a}"),
        }
    }
}

/// Why a table entry is not trusted by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryFlag {
    /// Depends on `q_k`, whose printed third seed disagrees with the
    /// recursion.
    UnverifiedRecursion,
    /// Printed value is not below 1.
    ExceedsUnity,
}

impl EntryFlag {
    pub fn marker(self) -> &'static str {
        match self {
            EntryFlag::UnverifiedRecursion => "UNVERIFIED-RECURSION",
            EntryFlag::ExceedsUnity => "EXCEEDS-UNITY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(serialize_with = "super::serialize_rational")]
    pub value: Rational,
    pub flags: Vec<EntryFlag>,
}

impl TableEntry {
    fn new(from: NodeId, to: NodeId, value: Rational, recursion_dependent: bool) -> Self {
        let mut flags = Vec::new();
        if recursion_dependent {
            flags.push(EntryFlag::UnverifiedRecursion);
        }
        if value >= Rational::one() {
            flags.push(EntryFlag::ExceedsUnity);
        }
        Self { from, to, value, flags }
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

fn entries(from: NodeId, list: Vec<(NodeId, Rational)>) -> Vec<TableEntry> {
    list.into_iter().map(|(to, v)| TableEntry::new(from, to, v, false)).collect()
}

/// Outgoing edge-graph coefficients of `node` (edge or modified node).
pub fn edge_row(node: NodeId) -> Vec<TableEntry> {
    use NodeId::{Edge, EdgeTilde};
    match node {
        Edge(1) => entries(node, vec![(Edge(2), rational(4, 375)), (Edge(3), rational(2, 375)), (Edge(4), rational(1, 75))]),
        Edge(2) => entries(node, vec![(Edge(2), rational(24, 125)), (Edge(3), rational(1, 25))]),
        Edge(3) => entries(node, vec![(Edge(2), rational(32, 125)), (Edge(3), rational(4, 25)), (Edge(4), rational(4, 25))]),
        Edge(4) => entries(node, vec![(Edge(2), rational(32, 125)), (Edge(3), rational(4, 25)), (Edge(5), rational(12, 25))]),
        Edge(a) if a >= 6 => {
            let k = i64::from(a) - 5;
            let den = 125 * (4 * k - 1);
            entries(
                node,
                vec![
                    (Edge(2), rational(32 * (k + 1), den)),
                    (Edge(3), rational(4 * (k + 1), den)),
                    (Edge(a + 1), rational(16 * (k + 1) - 4, den)),
                ],
            )
        }
        EdgeTilde => entries(node, vec![(Edge(2), rational(1168, 875)), (Edge(3), rational(33, 175))]),
        _ => Vec::new(),
    }
}

/// Outgoing middle-graph coefficients of `node`.
pub fn middle_row(node: NodeId) -> Vec<TableEntry> {
    use NodeId::Middle;
    let NodeId::Middle(alpha) = node else { return Vec::new() };
    match alpha {
        0 => Vec::new(),
        1 => entries(node, vec![(Middle(2), rational(1, 750)), (Middle(3), rational(56, 1875)), (Middle(4), rational(1, 750))]),
        2 => entries(node, vec![(Middle(2), rational(2, 125)), (Middle(3), rational(288, 3125)), (Middle(4), rational(8, 625))]),
        3 => entries(node, vec![(Middle(2), rational(272, 3125)), (Middle(3), rational(1, 250)), (Middle(5), rational(6, 625))]),
        4 => entries(node, vec![(Middle(2), rational(9, 250)), (Middle(3), rational(488, 3125)), (Middle(6), rational(56, 625))]),
        a => {
            let k = ((a - 3) / 2) as usize;
            let (ak, ak1) = (seq(Sequence::A, k), seq(Sequence::A, k + 1));
            let (bk, bk1) = (seq(Sequence::B, k), seq(Sequence::B, k + 1));
            let c = |n: i64| Rational::from_integer(BigInt::from(n));
            if a % 2 == 1 {
                let qk = seq(Sequence::Q, k);
                let d8 = &c(8) * &ak - &bk;
                let d4 = &c(4) * &bk - &ak;
                let to2 = (&bk + &c(4) * &bk1) / (&c(250) * &d8);
                let to3 = rational(8, 3125)
                    * (&c(8) * (&c(17) * &ak + &qk) / &d8 + &c(25) * &ak / &d4 + &c(20) * &ak1 / &d4);
                let next = &c(8) * (&c(8) * &ak1 - &bk1) / (&c(625) * &d8);
                vec![
                    TableEntry::new(node, Middle(2), to2, false),
                    TableEntry::new(node, Middle(3), to3, true),
                    TableEntry::new(node, Middle(a + 2), next, false),
                ]
            } else {
                let pk = seq(Sequence::P, k);
                let d4 = &c(4) * &bk - &ak;
                let to2 = (&c(4) * &ak1 + &ak) / (&c(250) * &d4);
                let to3 = rational(8, 3125) * (&c(25) * &ak + &c(2500) * &ak1 + &c(68) * &bk + &c(16) * &pk) / &d4;
                let next = &c(8) * (&c(4) * &bk1 - &ak1) / (&c(625) * &d4);
                vec![
                    TableEntry::new(node, Middle(2), to2, false),
                    TableEntry::new(node, Middle(3), to3, false),
                    TableEntry::new(node, Middle(a + 2), next, false),
                ]
            }
        }
    }
}

/// Coefficients from a middle-graph node into the edge graph.
pub fn transition_row(node: NodeId) -> Vec<TableEntry> {
    use NodeId::{Edge, EdgeTilde, Middle};
    let Middle(alpha) = node else { return Vec::new() };
    match alpha {
        0 | 1 => Vec::new(),
        2 => entries(node, vec![(EdgeTilde, rational(11, 125)), (Edge(2), rational(64, 625)), (Edge(4), rational(4, 625))]),
        3 => entries(node, vec![(Edge(2), rational(136, 625)), (Edge(4), rational(6, 625))]),
        4 => entries(node, vec![(Edge(2), rational(64, 625)), (Edge(4), rational(44, 625))]),
        a => {
            let k = ((a - 3) / 2) as usize;
            let (ak, ak1) = (seq(Sequence::A, k), seq(Sequence::A, k + 1));
            let (bk, bk1) = (seq(Sequence::B, k), seq(Sequence::B, k + 1));
            let c = |n: i64| Rational::from_integer(BigInt::from(n));
            let (to2, to4) = if a % 2 == 1 {
                let d8 = &c(8) * &ak - &bk;
                (
                    rational(64, 625) * (&c(25) * &ak / &d8 - c(1)),
                    rational(4, 625) * (&c(10) * (&ak + &bk) + &bk1) / &d8,
                )
            } else {
                let pk = seq(Sequence::P, k);
                let d4 = &c(4) * &bk - &ak;
                (
                    rational(32, 625) * (&c(11) * &bk + &c(2) * &pk) / &d4,
                    rational(4, 625) * (&c(10) * &ak + &ak1 + &c(5) * &bk) / &d4,
                )
            };
            entries(node, vec![(Edge(2), to2), (Edge(4), to4)])
        }
    }
}

/// Final centre-module integral of a node, in units of `eps_O`.
pub fn terminal_weight(node: NodeId) -> Option<Rational> {
    match node {
        NodeId::Center1 | NodeId::Edge(1) => Some(rational(28, 125)),
        NodeId::Edge(2) => Some(rational(72, 125)),
        NodeId::Edge(3) => Some(rational(48, 125)),
        NodeId::Edge(4) => Some(rational(528, 125)),
        NodeId::Edge(5) => Some(rational(272, 125)),
        NodeId::Edge(a) if a >= 6 => Some(rational(528, 125 * (4 * (i64::from(a) - 5) - 1))),
        _ => None,
    }
}

/// Wire subset labelling a contraction `T_s`, e.g. `[1, 2]`.
pub type WireSet = Vec<u8>;

/// Contraction signature `N = sum_s c_s T_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeSpec {
    pub id: NodeId,
    #[serde(serialize_with = "super::serialize_signature")]
    pub signature: BTreeMap<WireSet, Rational>,
}

fn spec(id: NodeId, terms: Vec<(&[u8], Rational)>) -> NodeSpec {
    let signature = terms.into_iter().filter(|(_, c)| !c.is_zero()).map(|(s, c)| (s.to_vec(), c)).collect();
    NodeSpec { id, signature }
}

pub fn node_spec(id: NodeId) -> Option<NodeSpec> {
    let one = || rational(1, 1);
    let s = match id {
        NodeId::Center1 | NodeId::Edge(1) | NodeId::Middle(1) => spec(id, vec![(&[], one()), (&[1, 2], rational(-1, 4))]),
        NodeId::Edge(2) => spec(id, vec![(&[], one()), (&[1], rational(-1, 2)), (&[2, 3], rational(-1, 2)), (&[1, 2, 3], rational(1, 8))]),
        NodeId::Edge(3) => spec(id, vec![(&[], rational(-1, 1)), (&[1], rational(1, 2)), (&[2, 3], rational(4, 1)), (&[1, 2, 3], rational(-2, 1))]),
        NodeId::Edge(4) => spec(id, vec![(&[], rational(-1, 1)), (&[1], rational(8, 1)), (&[2, 3], rational(1, 2)), (&[1, 2, 3], rational(-2, 1))]),
        NodeId::Edge(5) => spec(id, vec![(&[], one()), (&[1], rational(2, 1)), (&[2, 3], rational(-1, 2)), (&[1, 2, 3], rational(-1, 2))]),
        NodeId::Edge(a) if a >= 6 => {
            let k = i64::from(a) - 5;
            spec(
                id,
                vec![
                    (&[], one()),
                    (&[1], rational(2 * (4 - k), 4 * k - 1)),
                    (&[2, 3], rational(-1, 4)),
                    (&[1, 2, 3], rational(-(4 - k), 2 * (4 * k - 1))),
                ],
            )
        }
        NodeId::EdgeTilde => spec(id, vec![(&[], one()), (&[1], rational(-1, 2)), (&[2, 3], rational(92, 7)), (&[1, 2, 3], rational(-46, 7))]),
        NodeId::Middle(2) => spec(
            id,
            vec![
                (&[], rational(-1, 1)),
                (&[1], rational(1, 10)),
                (&[3], rational(8, 5)),
                (&[1, 2], rational(1, 5)),
                (&[2, 3], rational(16, 5)),
                (&[1, 2, 3], rational(-2, 1)),
            ],
        ),
        NodeId::Middle(3) => spec(
            id,
            vec![
                (&[], one()),
                (&[1], rational(-1, 10)),
                (&[3], rational(-1, 10)),
                (&[1, 2], rational(-1, 5)),
                (&[2, 3], rational(-1, 5)),
                (&[1, 2, 3], rational(1, 8)),
            ],
        ),
        NodeId::Middle(4) => spec(
            id,
            vec![
                (&[], rational(-1, 1)),
                (&[1], rational(8, 5)),
                (&[3], rational(1, 10)),
                (&[1, 2], rational(16, 5)),
                (&[2, 3], rational(1, 5)),
                (&[1, 2, 3], rational(-2, 1)),
            ],
        ),
        NodeId::Middle(a) if a >= 5 => {
            let k = ((a - 3) / 2) as usize;
            let (ak, bk) = (seq(Sequence::A, k), seq(Sequence::B, k));
            let c = |n: i64| Rational::from_integer(BigInt::from(n));
            let (num, den, t123_den) = if a % 2 == 1 {
                let d = &c(8) * &ak - &bk;
                (&c(2) * &bk - &ak, d.clone(), d)
            } else {
                (&c(4) * &ak - &bk, &c(4) * &bk - &ak, &c(8) * &bk - &ak)
            };
            let scale = if a % 2 == 1 { (4, 8) } else { (2, 4) };
            spec(
                id,
                vec![
                    (&[], one()),
                    (&[1], &c(scale.0) * &num / (&c(5) * &den)),
                    (&[3], rational(-1, 10)),
                    (&[1, 2], &c(scale.1) * &num / (&c(5) * &den)),
                    (&[2, 3], rational(-1, 5)),
                    (&[1, 2, 3], -(&num / &t123_den)),
                ],
            )
        }
        _ => return None,
    };
    Some(s)
}

fn render_row(out: &mut String, entries: &[TableEntry]) {
    for e in entries {
        let markers: Vec<&str> = e.flags.iter().map(|f| f.marker()).collect();
        let flag = if markers.is_empty() { String::new() } else { format!("  [{}]", markers.join(", ")) };
        out.push_str(&format!("  {} -> {}: {}{}\n", e.from, e.to, e.value, flag));
    }
}

/// Human-readable listing of all tables for k up to `k_max`.
pub fn format_tables(k_max: usize) -> String {
    let mut out = String::new();
    out.push_str("# Edge-module graph\n");
    for a in (1..=5).chain((1..=k_max).map(|k| 5 + k as u32)) {
        render_row(&mut out, &edge_row(NodeId::Edge(a)));
    }
    render_row(&mut out, &edge_row(NodeId::EdgeTilde));
    out.push_str("# Middle-module graph\n");
    for a in (1..=4).chain((1..=k_max).flat_map(|k| [2 * k as u32 + 3, 2 * k as u32 + 4])) {
        render_row(&mut out, &middle_row(NodeId::Middle(a)));
    }
    out.push_str("# Middle-to-edge transitions\n");
    for a in (2..=4).chain((1..=k_max).flat_map(|k| [2 * k as u32 + 3, 2 * k as u32 + 4])) {
        render_row(&mut out, &transition_row(NodeId::Middle(a)));
    }
    out.push_str("# Terminal weights (units of eps_O)\n");
    for a in (1..=5).chain((1..=k_max).map(|k| 5 + k as u32)) {
        if let Some(w) = terminal_weight(NodeId::Edge(a)) {
            out.push_str(&format!("  {}: {}\n", NodeId::Edge(a), w));
        }
    }
    out.push_str("# Sequences\n");
    for s in Sequence::ALL {
        let terms: Vec<String> = (0..=k_max + 2).map(|k| s.term(k).to_string()).collect();
        out.push_str(&format!("  {}: {}  (printed seeds {:?})\n", s.label(), terms.join(", "), s.printed_seeds()));
    }
    out
}

/// Every table entry for `k <= k_max`, in listing order.
pub fn all_entries(k_max: usize) -> Vec<TableEntry> {
    let mut v = Vec::new();
    for a in (1..=5).chain((1..=k_max).map(|k| 5 + k as u32)) {
        v.extend(edge_row(NodeId::Edge(a)));
    }
    v.extend(edge_row(NodeId::EdgeTilde));
    for a in (1..=4).chain((1..=k_max).flat_map(|k| [2 * k as u32 + 3, 2 * k as u32 + 4])) {
        v.extend(middle_row(NodeId::Middle(a)));
        v.extend(transition_row(NodeId::Middle(a)));
    }
    v
}

/// Entries that are positive but fall outside `(0, 1)` without a flag, or
/// are non-positive.
pub fn range_violations(k_max: usize) -> Vec<TableEntry> {
    all_entries(k_max)
        .into_iter()
        .filter(|e| !e.value.is_positive() || (!e.is_flagged() && e.value >= Rational::one()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_reproduces_three_of_four_seeds() {
        for s in [Sequence::A, Sequence::B, Sequence::P] {
            assert_eq!(s.term(2), BigInt::from(s.printed_seeds()[2]), "{s:?}");
        }
        assert_eq!(Sequence::Q.term(2), BigInt::from(9));
        assert_eq!(Sequence::A.term(3), BigInt::from(7));
        assert_eq!(Sequence::B.term(3), BigInt::from(10));
        assert_eq!(Sequence::P.term(3), BigInt::from(37));
    }

    #[test]
    fn printed_entries() {
        let e1 = edge_row(NodeId::Edge(1));
        assert_eq!(e1[0].value, rational(4, 375));
        let e2 = edge_row(NodeId::Edge(2));
        assert_eq!((e2[0].value.clone(), e2[1].value.clone()), (rational(24, 125), rational(1, 25)));
        assert_eq!(middle_row(NodeId::Middle(1))[1].value, rational(56, 1875));
    }

    #[test]
    fn first_family_members() {
        let m5 = middle_row(NodeId::Middle(5));
        assert_eq!(m5[0].value, rational(18, 1500));
        assert_eq!(m5[2].to, NodeId::Middle(7));
        assert_eq!(m5[2].value, rational(160, 3750));
        assert_eq!(m5[1].flags, vec![EntryFlag::UnverifiedRecursion]);
        let m6 = middle_row(NodeId::Middle(6));
        assert_eq!(m6[0].value, rational(13, 1750));
        assert!(m6[1].flags.contains(&EntryFlag::ExceedsUnity));
        let e6 = edge_row(NodeId::Edge(6));
        assert_eq!(e6[2].value, rational(28, 375));
    }

    #[test]
    fn modified_node_entry_is_flagged() {
        let t = edge_row(NodeId::EdgeTilde);
        assert_eq!(t[0].value, rational(1168, 875));
        assert_eq!(t[0].flags, vec![EntryFlag::ExceedsUnity]);
        assert!(t.iter().all(|e| e.to != NodeId::Edge(4)));
    }

    #[test]
    fn unflagged_entries_lie_in_unit_interval() {
        assert!(range_violations(30).is_empty());
    }

    #[test]
    fn first_node_signature() {
        let n1 = node_spec(NodeId::Edge(1)).unwrap();
        let expect: BTreeMap<WireSet, Rational> = [(vec![], rational(1, 1)), (vec![1, 2], rational(-1, 4))].into_iter().collect();
        assert_eq!(n1.signature, expect);
        assert_eq!(node_spec(NodeId::Center1).unwrap().signature, expect);
    }

    #[test]
    fn family_terminal_weights() {
        assert_eq!(terminal_weight(NodeId::Edge(6)), Some(rational(528, 375)));
        assert_eq!(terminal_weight(NodeId::EdgeTilde), None);
        assert_eq!(terminal_weight(NodeId::Middle(2)), None);
    }
}
