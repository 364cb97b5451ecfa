use std::collections::{BTreeSet, HashMap, HashSet};

use super::{
    is_valid_id, Activity, Distribution, ModelError, Precedence, ProjectSpec, RiskEvent, RiskKind,
};

/// Where a network node comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Position in the input activity list.
    Activity { index: usize },
    /// Position in the risk list of a duration-kind risk.
    DurationRisk { index: usize },
}

/// Effective duration law of a node.
#[derive(Debug, Clone, PartialEq)]
pub enum DurationLaw {
    Plain(Distribution),
    /// `(1 - p) * point(0) + p * impact`.
    Gated {
        probability: f64,
        impact: Distribution,
    },
}

impl DurationLaw {
    pub fn mean(&self) -> f64 {
        match self {
            DurationLaw::Plain(d) => d.mean(),
            DurationLaw::Gated {
                probability,
                impact,
            } => probability * impact.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            DurationLaw::Plain(d) => d.variance(),
            DurationLaw::Gated {
                probability: p,
                impact,
            } => {
                let m = impact.mean();
                (p * (impact.variance() + m * m) - p * p * m * m).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    pub law: DurationLaw,
    pub fixed_cost: f64,
    pub variable_cost_rate: f64,
    /// Indices into [`ValidatedNetwork::risks`] of cost risks on this node.
    pub cost_risks: Vec<usize>,
}

/// A well-formed CPM network with duration risks expanded into nodes.
///
/// Nodes are stored in topological order: by longest-path depth from the
/// start, ties broken by input position (activities first, then risks).
/// The start dummy is node 0 and the end dummy is the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedNetwork {
    nodes: Vec<Node>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    risks: Vec<RiskEvent>,
    activity_count: usize,
}

impl ValidatedNetwork {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succs[i]
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        i == self.source() || i == self.sink()
    }

    /// All risks, duration and cost kind, in input order.
    pub fn risks(&self) -> &[RiskEvent] {
        &self.risks
    }

    pub fn activity_count(&self) -> usize {
        self.activity_count
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.id.as_str()).collect()
    }

    pub fn expected_durations(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.law.mean()).collect()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    /// Renders the network back to a project description, folding each
    /// duration-risk node into its target again. Validating the result gives
    /// back this network.
    pub fn to_spec(&self) -> ProjectSpec {
        let mut activity_nodes: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].kind, NodeKind::Activity { .. }))
            .collect();
        activity_nodes.sort_by_key(|&i| self.rank(i));

        let activities = activity_nodes
            .iter()
            .map(|&i| {
                let n = &self.nodes[i];
                let duration = match &n.law {
                    DurationLaw::Plain(d) => d.clone(),
                    DurationLaw::Gated { .. } => unreachable!("activity nodes have plain laws"),
                };
                Activity {
                    id: n.id.clone(),
                    name: n.name.clone(),
                    duration,
                    fixed_cost: n.fixed_cost,
                    variable_cost_rate: n.variable_cost_rate,
                }
            })
            .collect();

        let mut edges = BTreeSet::new();
        for &a in &activity_nodes {
            // Walk through chains of risk nodes to the next real activities.
            let mut stack: Vec<usize> = self.succs[a].clone();
            while let Some(s) = stack.pop() {
                match self.nodes[s].kind {
                    NodeKind::Activity { .. } => {
                        edges.insert((self.rank(s), self.rank(a)));
                    }
                    NodeKind::DurationRisk { .. } => stack.extend_from_slice(&self.succs[s]),
                }
            }
        }
        let by_rank: HashMap<usize, usize> =
            activity_nodes.iter().map(|&i| (self.rank(i), i)).collect();
        let precedences = edges
            .into_iter()
            .map(|(s, p)| Precedence::new(&self.nodes[by_rank[&s]].id, &self.nodes[by_rank[&p]].id))
            .collect();

        ProjectSpec {
            activities,
            precedences,
            risks: self.risks.clone(),
        }
    }

    fn rank(&self, i: usize) -> usize {
        match self.nodes[i].kind {
            NodeKind::Activity { index } => index,
            NodeKind::DurationRisk { index } => self.activity_count + index,
        }
    }

    fn into_draft(self) -> Draft {
        let activity_count = self.activity_count;
        let ranks: Vec<usize> = (0..self.nodes.len()).map(|i| self.rank(i)).collect();
        Draft {
            nodes: self.nodes,
            preds: self
                .preds
                .into_iter()
                .map(|p| p.into_iter().collect())
                .collect(),
            succs: self
                .succs
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
            ranks,
            risks: self.risks,
            activity_count,
        }
    }
}

/// Mutable graph used while building a network. Node indices are insertion
/// order, not topological order.
struct Draft {
    nodes: Vec<Node>,
    preds: Vec<BTreeSet<usize>>,
    succs: Vec<BTreeSet<usize>>,
    ranks: Vec<usize>,
    risks: Vec<RiskEvent>,
    activity_count: usize,
}

impl Draft {
    fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Kahn pass. Returns depths, or the ids of one cycle.
    fn depths(&self) -> Result<Vec<usize>, Vec<String>> {
        let n = self.nodes.len();
        let mut indegree: Vec<usize> = self.preds.iter().map(BTreeSet::len).collect();
        let mut depth = vec![0usize; n];
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for &v in &self.succs[u] {
                depth[v] = depth[v].max(depth[u] + 1);
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    queue.push(v);
                }
            }
        }
        if seen == n {
            return Ok(depth);
        }
        // Every leftover node has a leftover predecessor; walk back until a
        // node repeats.
        let leftover: Vec<usize> = (0..n).filter(|&i| indegree[i] > 0).collect();
        let mut walk = vec![leftover[0]];
        let mut on_walk: HashMap<usize, usize> = HashMap::from([(leftover[0], 0)]);
        loop {
            let cur = *walk.last().unwrap();
            let prev = *self.preds[cur]
                .iter()
                .find(|&&p| indegree[p] > 0)
                .expect("leftover node keeps a leftover predecessor");
            if let Some(&pos) = on_walk.get(&prev) {
                let mut cycle: Vec<String> = walk[pos..]
                    .iter()
                    .rev()
                    .map(|&i| self.nodes[i].id.clone())
                    .collect();
                cycle.push(cycle[0].clone());
                return Err(cycle);
            }
            on_walk.insert(prev, walk.len());
            walk.push(prev);
        }
    }

    fn insert_risk(&mut self, risk_index: usize) -> Result<(), ModelError> {
        let risk = &self.risks[risk_index];
        let target = self
            .index_of(&risk.target)
            .ok_or_else(|| ModelError::BadRiskTarget {
                id: risk.id.clone(),
                target: risk.target.clone(),
                reason: "no such activity".into(),
            })?;
        if self.succs[target].is_empty() {
            return Err(ModelError::BadRiskTarget {
                id: risk.id.clone(),
                target: risk.target.clone(),
                reason: "a duration risk cannot follow the end dummy".into(),
            });
        }
        let r = self.nodes.len();
        self.nodes.push(Node {
            id: risk.id.clone(),
            name: risk.name.clone(),
            kind: NodeKind::DurationRisk { index: risk_index },
            law: DurationLaw::Gated {
                probability: risk.probability,
                impact: risk.impact.clone(),
            },
            fixed_cost: 0.0,
            variable_cost_rate: 0.0,
            cost_risks: Vec::new(),
        });
        self.ranks.push(self.activity_count + risk_index);
        let moved = std::mem::take(&mut self.succs[target]);
        for &s in &moved {
            self.preds[s].remove(&target);
            self.preds[s].insert(r);
        }
        self.succs.push(moved);
        self.preds.push(BTreeSet::from([target]));
        self.succs[target].insert(r);
        Ok(())
    }

    fn finish(self) -> ValidatedNetwork {
        let depth = self
            .depths()
            .expect("risk insertion keeps the graph acyclic");
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| (depth[i], self.ranks[i]));
        let mut position = vec![0usize; order.len()];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let remap = |set: &BTreeSet<usize>| {
            let mut v: Vec<usize> = set.iter().map(|&i| position[i]).collect();
            v.sort_unstable();
            v
        };
        let preds = order.iter().map(|&i| remap(&self.preds[i])).collect();
        let succs = order.iter().map(|&i| remap(&self.succs[i])).collect();
        let mut slots: Vec<Option<Node>> = self.nodes.into_iter().map(Some).collect();
        let nodes = order.iter().map(|&i| slots[i].take().unwrap()).collect();
        ValidatedNetwork {
            nodes,
            preds,
            succs,
            risks: self.risks,
            activity_count: self.activity_count,
        }
    }
}

fn check_risk(risk: &RiskEvent) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&risk.probability) {
        return Err(ModelError::BadRiskProbability {
            id: risk.id.clone(),
            probability: risk.probability,
        });
    }
    risk.impact
        .check()
        .map_err(|e| ModelError::BadDistributionParams {
            id: risk.id.clone(),
            reason: e.to_string(),
        })
}

/// Checks a project description and builds its network.
///
/// Checks run in this order: ids, parameters, precedence references, cycles,
/// single start/end dummies, then risk targets while expanding duration
/// risks into successor nodes of their targets.
pub fn validate(spec: &ProjectSpec) -> Result<ValidatedNetwork, ModelError> {
    let mut seen = HashSet::new();
    for id in spec
        .activities
        .iter()
        .map(|a| &a.id)
        .chain(spec.risks.iter().map(|r| &r.id))
    {
        if !is_valid_id(id) {
            return Err(ModelError::InvalidId { id: id.clone() });
        }
        if !seen.insert(id.as_str()) {
            return Err(ModelError::DuplicateId { id: id.clone() });
        }
    }

    for a in &spec.activities {
        a.duration
            .check()
            .map_err(|e| ModelError::BadDistributionParams {
                id: a.id.clone(),
                reason: e.to_string(),
            })?;
        let cost_ok = |c: f64| c.is_finite() && c >= 0.0;
        if !cost_ok(a.fixed_cost) || !cost_ok(a.variable_cost_rate) {
            return Err(ModelError::BadCost { id: a.id.clone() });
        }
    }
    for r in &spec.risks {
        check_risk(r)?;
    }

    let index: HashMap<&str, usize> = spec
        .activities
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id.as_str(), i))
        .collect();
    let n = spec.activities.len();
    let mut preds = vec![BTreeSet::new(); n];
    let mut succs = vec![BTreeSet::new(); n];
    for p in &spec.precedences {
        let s = *index
            .get(p.successor.as_str())
            .ok_or_else(|| ModelError::UnknownActivity {
                id: p.successor.clone(),
            })?;
        let q =
            *index
                .get(p.predecessor.as_str())
                .ok_or_else(|| ModelError::UnknownPredecessor {
                    activity: p.successor.clone(),
                    predecessor: p.predecessor.clone(),
                })?;
        preds[s].insert(q);
        succs[q].insert(s);
    }

    let nodes: Vec<Node> = spec
        .activities
        .iter()
        .enumerate()
        .map(|(i, a)| Node {
            id: a.id.clone(),
            name: a.name.clone(),
            kind: NodeKind::Activity { index: i },
            law: DurationLaw::Plain(a.duration.clone()),
            fixed_cost: a.fixed_cost,
            variable_cost_rate: a.variable_cost_rate,
            cost_risks: Vec::new(),
        })
        .collect();
    let mut draft = Draft {
        nodes,
        preds,
        succs,
        ranks: (0..n).collect(),
        risks: spec.risks.clone(),
        activity_count: n,
    };

    draft
        .depths()
        .map_err(|cycle| ModelError::CycleDetected { cycle })?;
    let ids_where = |pred: &dyn Fn(usize) -> bool| -> Vec<String> {
        (0..n)
            .filter(|&i| pred(i))
            .map(|i| spec.activities[i].id.clone())
            .collect()
    };
    let sources = ids_where(&|i| draft.preds[i].is_empty());
    if sources.len() != 1 {
        return Err(ModelError::MultipleSources { found: sources });
    }
    let sinks = ids_where(&|i| draft.succs[i].is_empty());
    if sinks.len() != 1 {
        return Err(ModelError::MultipleSinks { found: sinks });
    }
    for id in sources.iter().chain(&sinks) {
        if !spec.activities[index[id.as_str()]].is_dummy() {
            return Err(ModelError::NonDummyTerminal { id: id.clone() });
        }
    }

    for (k, risk) in spec.risks.iter().enumerate() {
        match risk.kind {
            RiskKind::Duration => draft.insert_risk(k)?,
            RiskKind::Cost => {
                let t =
                    *index
                        .get(risk.target.as_str())
                        .ok_or_else(|| ModelError::BadRiskTarget {
                            id: risk.id.clone(),
                            target: risk.target.clone(),
                            reason: "no such activity".into(),
                        })?;
                draft.nodes[t].cost_risks.push(k);
            }
        }
    }
    Ok(draft.finish())
}

/// Inserts a duration risk as a node between `risk.target` and all of the
/// target's successors. The risk is appended to the network's risk list.
pub fn expand_duration_risk(
    network: &ValidatedNetwork,
    risk: &RiskEvent,
) -> Result<ValidatedNetwork, ModelError> {
    if risk.kind != RiskKind::Duration {
        return Err(ModelError::BadRiskTarget {
            id: risk.id.clone(),
            target: risk.target.clone(),
            reason: "only duration risks are expanded into nodes".into(),
        });
    }
    if !is_valid_id(&risk.id) {
        return Err(ModelError::InvalidId {
            id: risk.id.clone(),
        });
    }
    if network.index_of(&risk.id).is_some() || network.risks.iter().any(|r| r.id == risk.id) {
        return Err(ModelError::DuplicateId {
            id: risk.id.clone(),
        });
    }
    check_risk(risk)?;
    let mut draft = network.clone().into_draft();
    draft.risks.push(risk.clone());
    let k = draft.risks.len() - 1;
    draft.insert_risk(k)?;
    Ok(draft.finish())
}
