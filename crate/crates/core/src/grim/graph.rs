use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::tables::{edge_row, middle_row, node_spec, terminal_weight, transition_row, NodeId, NodeSpec, TableEntry};
use super::{rational, Rational};
use crate::{Error, Result};

/// How the forward light cone of the differentiated block is covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum GrimCase {
    /// Centre modules only.
    Case1,
    /// Edge modules followed by one centre module.
    Case2,
    /// `middle` middle modules, `edge` edge modules, one centre module.
    Case3 { middle: usize, edge: usize },
}

impl std::fmt::Display for GrimCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrimCase::Case1 => write!(f, "case1"),
            GrimCase::Case2 => write!(f, "case2"),
            GrimCase::Case3 { middle, edge } => write!(f, "case3({middle},{edge})"),
        }
    }
}

/// Treatment of flagged table entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagPolicy {
    /// Leave flagged entries out. Every path weight is non-negative, so
    /// dropping edges can only lower the path sum.
    #[default]
    Exclude,
    /// Use flagged entries as printed.
    IncludeAsPrinted,
}

/// Which table a step of a walk draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Center,
    Edge,
    Middle,
    Transition,
}

impl GrimCase {
    pub fn start(&self) -> NodeId {
        match self {
            GrimCase::Case1 => NodeId::Center1,
            GrimCase::Case2 => NodeId::Edge(1),
            GrimCase::Case3 { .. } => NodeId::Middle(1),
        }
    }

    /// Table used at each of the `ell - 1` internal steps.
    pub fn schedule(&self, ell: usize) -> Result<Vec<Phase>> {
        if ell == 0 {
            return Err(Error::InvalidConfig("layer index must be at least 1".into()));
        }
        Ok(match *self {
            GrimCase::Case1 => vec![Phase::Center; ell - 1],
            GrimCase::Case2 => vec![Phase::Edge; ell - 1],
            GrimCase::Case3 { middle, edge } => {
                if middle == 0 || edge == 0 || middle + edge + 1 != ell {
                    return Err(Error::InvalidConfig(format!(
                        "case 3 needs middle >= 1, edge >= 1 and middle + edge + 1 = {ell}, got ({middle}, {edge})"
                    )));
                }
                let mut s = vec![Phase::Middle; middle];
                s.push(Phase::Transition);
                s.extend(std::iter::repeat_n(Phase::Edge, edge - 1));
                s
            }
        })
    }

    /// Internal steps implied by the case itself (Case 3 only).
    fn implied_steps(&self) -> Option<usize> {
        match *self {
            GrimCase::Case3 { middle, edge } => Some(middle + edge),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphEdge {
    pub phase: Phase,
    #[serde(serialize_with = "super::serialize_rational")]
    pub value: Rational,
}

/// A module graph materialised up to a walk depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrimGraph {
    case: GrimCase,
    policy: FlagPolicy,
    steps: usize,
    nodes: BTreeMap<NodeId, NodeSpec>,
    edges: BTreeMap<(NodeId, NodeId), GraphEdge>,
    terminal: BTreeMap<NodeId, Rational>,
    excluded: Vec<TableEntry>,
}

fn rows_for(node: NodeId, phase: Phase) -> Vec<TableEntry> {
    match phase {
        Phase::Center => Vec::new(),
        Phase::Edge => edge_row(node),
        Phase::Middle => middle_row(node),
        Phase::Transition => transition_row(node),
    }
}

/// Builds the graph for `case`, materialising nodes reachable within
/// `steps` internal steps (Case 3 ignores `steps` and uses its own count).
pub fn build_graph(case: GrimCase, steps: usize, policy: FlagPolicy) -> Result<GrimGraph> {
    let steps = case.implied_steps().unwrap_or(steps);
    let schedule = case.schedule(steps + 1)?;
    let mut g = GrimGraph {
        case,
        policy,
        steps,
        nodes: BTreeMap::new(),
        edges: BTreeMap::new(),
        terminal: BTreeMap::new(),
        excluded: Vec::new(),
    };
    g.add_node(case.start());
    if case == GrimCase::Case1 {
        g.steps = usize::MAX;
        g.edges.insert((NodeId::Center1, NodeId::Center1), GraphEdge { phase: Phase::Center, value: rational(28, 125) });
        return Ok(g);
    }
    let mut frontier: BTreeSet<NodeId> = [case.start()].into_iter().collect();
    for phase in schedule {
        let mut next = BTreeSet::new();
        for &node in &frontier {
            for entry in rows_for(node, phase) {
                if entry.is_flagged() && policy == FlagPolicy::Exclude {
                    if !g.excluded.contains(&entry) {
                        g.excluded.push(entry);
                    }
                    continue;
                }
                if !entry.value.is_positive() || (!entry.is_flagged() && entry.value >= Rational::one()) {
                    return Err(Error::InvalidConfig(format!(
                        "coefficient {} -> {} = {} outside (0, 1)",
                        entry.from, entry.to, entry.value
                    )));
                }
                g.add_node(entry.to);
                next.insert(entry.to);
                g.edges.insert((entry.from, entry.to), GraphEdge { phase, value: entry.value });
            }
        }
        frontier = next;
    }
    Ok(g)
}

impl GrimGraph {
    fn add_node(&mut self, id: NodeId) {
        if self.nodes.contains_key(&id) {
            return;
        }
        if let Some(spec) = node_spec(id) {
            self.nodes.insert(id, spec);
        }
        if let Some(w) = terminal_weight(id) {
            self.terminal.insert(id, w);
        }
    }

    pub fn case(&self) -> GrimCase {
        self.case
    }

    pub fn policy(&self) -> FlagPolicy {
        self.policy
    }

    /// Internal steps the graph was materialised for.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, NodeSpec> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(NodeId, NodeId), GraphEdge> {
        &self.edges
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&Rational> {
        self.edges.get(&(from, to)).map(|e| &e.value)
    }

    pub fn terminal_weights(&self) -> &BTreeMap<NodeId, Rational> {
        &self.terminal
    }

    /// Flagged entries left out under [`FlagPolicy::Exclude`].
    pub fn excluded(&self) -> &[TableEntry] {
        &self.excluded
    }

    /// Outgoing edges of `node` drawn from `phase`.
    pub fn outgoing(&self, node: NodeId, phase: Phase) -> impl Iterator<Item = (NodeId, &Rational)> {
        self.edges
            .range((node, NodeId::Center1)..)
            .take_while(move |((f, _), _)| *f == node)
            .filter(move |(_, e)| e.phase == phase)
            .map(|((_, t), e)| (*t, &e.value))
    }
}

/// Path sum with the number of contributing walks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSum {
    pub value: Rational,
    pub walks: BigUint,
}

/// Sum over walks of `ell - 1` internal steps from the start node, each
/// closed by its terminal weight, of the product of coefficients.
pub fn path_sum(graph: &GrimGraph, ell: usize) -> Result<Rational> {
    Ok(path_sum_with_count(graph, ell)?.value)
}

pub fn path_sum_with_count(graph: &GrimGraph, ell: usize) -> Result<PathSum> {
    let schedule = graph.case.schedule(ell)?;
    if schedule.len() > graph.steps {
        return Err(Error::InvalidConfig(format!(
            "graph materialised for {} steps, {} requested",
            graph.steps,
            schedule.len()
        )));
    }
    let mut current: BTreeMap<NodeId, (Rational, BigUint)> =
        [(graph.case.start(), (Rational::one(), BigUint::one()))].into_iter().collect();
    for phase in schedule {
        let mut next: BTreeMap<NodeId, (Rational, BigUint)> = BTreeMap::new();
        for (node, (weight, count)) in &current {
            for (to, lambda) in graph.outgoing(*node, phase) {
                let slot = next.entry(to).or_insert_with(|| (Rational::zero(), BigUint::zero()));
                slot.0 += weight * lambda;
                slot.1 += count;
            }
        }
        current = next;
    }
    let mut total = PathSum { value: Rational::zero(), walks: BigUint::zero() };
    for (node, (weight, count)) in current {
        if let Some(w) = graph.terminal.get(&node) {
            total.value += weight * w;
            total.walks += count;
        }
    }
    Ok(total)
}
