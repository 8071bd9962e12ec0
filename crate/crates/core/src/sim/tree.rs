use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::AgentId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: AgentId,
    pub parent: Option<AgentId>,
    pub children: Vec<AgentId>,
    pub holds_answer: bool,
    pub depth: usize,
}

/// A rooted tree of agents. The root is the requester and never holds the
/// answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTree {
    root: AgentId,
    nodes: BTreeMap<AgentId, Node>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeJson {
    id: AgentId,
    parent: Option<AgentId>,
    holds_answer: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeJson {
    root: AgentId,
    nodes: Vec<NodeJson>,
}

impl QueryTree {
    /// Builds and validates a tree from `(id, parent, holds_answer)` records.
    pub fn from_records(
        root: AgentId,
        records: impl IntoIterator<Item = (AgentId, Option<AgentId>, bool)>,
    ) -> Result<Self> {
        let mut nodes: BTreeMap<AgentId, Node> = BTreeMap::new();
        for (id, parent, holds_answer) in records {
            let node = Node { id, parent, children: Vec::new(), holds_answer, depth: 0 };
            if nodes.insert(id, node).is_some() {
                return Err(Error::Spec(format!("duplicate agent id {id}")));
            }
        }
        let root_node = nodes
            .get(&root)
            .ok_or_else(|| Error::Spec(format!("root {root} is not a node")))?;
        if root_node.parent.is_some() {
            return Err(Error::Spec("root must not have a parent".into()));
        }
        if root_node.holds_answer {
            return Err(Error::Spec("the requester cannot hold the answer".into()));
        }
        let edges: Vec<(AgentId, AgentId)> = nodes
            .values()
            .filter_map(|n| n.parent.map(|p| (p, n.id)))
            .collect();
        for (parent, child) in edges {
            match nodes.get_mut(&parent) {
                Some(p) => p.children.push(child),
                None => return Err(Error::Spec(format!("agent {child} has unknown parent {parent}"))),
            }
        }
        if nodes.values().filter(|n| n.parent.is_none()).count() != 1 {
            return Err(Error::Spec("tree must have exactly one root".into()));
        }

        let mut reached = 0usize;
        let mut queue = VecDeque::from([(root, 0usize)]);
        while let Some((id, depth)) = queue.pop_front() {
            reached += 1;
            let node = nodes.get_mut(&id).expect("present");
            node.depth = depth;
            node.children.sort();
            for c in node.children.clone() {
                queue.push_back((c, depth + 1));
            }
        }
        if reached != nodes.len() {
            return Err(Error::Spec("parent links do not form a tree rooted at the requester".into()));
        }
        Ok(QueryTree { root, nodes })
    }

    pub fn root(&self) -> AgentId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: AgentId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn holders(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(|n| n.holds_answer)
    }

    pub fn depth(&self, id: AgentId) -> Option<usize> {
        self.nodes.get(&id).map(|n| n.depth)
    }

    pub fn children(&self, id: AgentId) -> &[AgentId] {
        self.nodes.get(&id).map(|n| n.children.as_slice()).unwrap_or(&[])
    }

    pub fn parent(&self, id: AgentId) -> Option<AgentId> {
        self.nodes.get(&id).and_then(|n| n.parent)
    }

    /// `true` when `ancestor` lies on the path from the root to `id`
    /// (inclusive of `id` itself).
    pub fn is_ancestor(&self, ancestor: AgentId, id: AgentId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parent(c);
        }
        false
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = TreeJson {
            root: self.root,
            nodes: self
                .nodes
                .values()
                .map(|n| NodeJson { id: n.id, parent: n.parent, holds_answer: n.holds_answer })
                .collect(),
        };
        serde_json::to_value(doc).expect("tree serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: TreeJson = serde_json::from_value(value.clone())?;
        Self::from_records(doc.root, doc.nodes.into_iter().map(|n| (n.id, n.parent, n.holds_answer)))
    }
}
