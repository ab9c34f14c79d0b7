//! JSON node table for saving and loading SPEs. Shared subgraphs appear
//! once and are referenced by id.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::events::Environment;
use crate::spe::{Node, NodeId, SpeGraph};
use crate::{Error, Result, Var};

const FORMAT: &str = "spe-graph";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SpeFile {
    format: String,
    version: u32,
    root: u32,
    nodes: Vec<FileNode>,
}

#[derive(Serialize, Deserialize)]
struct FileNode {
    id: u32,
    #[serde(flatten)]
    body: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Body {
    Leaf { var: Var, dist: Distribution, env: Environment },
    Sum {
        children: Vec<u32>,
        #[serde(with = "crate::serde_ext::vec")]
        weights: Vec<f64>,
    },
    Product { children: Vec<u32> },
}

/// Serialize the subgraph under `root`, numbering nodes children-first.
pub fn to_json(g: &SpeGraph, root: NodeId) -> String {
    let order = g.reachable(root);
    let ids: HashMap<NodeId, u32> = order.iter().enumerate().map(|(i, n)| (*n, i as u32)).collect();
    let nodes = order
        .iter()
        .map(|n| {
            let body = match g.node(*n) {
                Node::Leaf { var, dist, env } => Body::Leaf { var: var.clone(), dist: dist.clone(), env: env.clone() },
                Node::Sum { children, weights } => Body::Sum {
                    children: children.iter().map(|c| ids[c]).collect(),
                    weights: weights.clone(),
                },
                Node::Product { children } => Body::Product { children: children.iter().map(|c| ids[c]).collect() },
            };
            FileNode { id: ids[n], body }
        })
        .collect();
    let file = SpeFile { format: FORMAT.into(), version: VERSION, root: ids[&root], nodes };
    serde_json::to_string_pretty(&file).expect("node table serializes")
}

fn checked(d: Distribution) -> Result<Distribution> {
    match d {
        Distribution::Real { family, support } => Distribution::real_truncated(family, support.lo, support.hi),
        Distribution::Int { family, support } => Distribution::int_truncated(family, support),
        Distribution::Str { weights } => Distribution::strings(weights),
    }
}

/// Parse and validate a node table. Parameters are rechecked and the
/// well-formedness conditions verified before any node is built.
pub fn from_json(text: &str) -> Result<(SpeGraph, NodeId)> {
    let file: SpeFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if file.format != FORMAT {
        return Err(Error::Format(format!("unknown format {:?}", file.format)));
    }
    if file.version != VERSION {
        return Err(Error::Format(format!("unsupported version {}", file.version)));
    }
    let mut pos: HashMap<u32, u32> = HashMap::new();
    for (i, n) in file.nodes.iter().enumerate() {
        if pos.insert(n.id, i as u32).is_some() {
            return Err(Error::Format(format!("duplicate node id {}", n.id)));
        }
    }
    // Unknown ids map past the end of the table so validation reports them.
    let missing = file.nodes.len() as u32;
    let map = |id: &u32| NodeId(*pos.get(id).unwrap_or(&missing));
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for n in file.nodes {
        nodes.push(match n.body {
            Body::Leaf { var, dist, env } => Node::Leaf { var, dist: checked(dist)?, env },
            Body::Sum { children, weights } => Node::Sum { children: children.iter().map(map).collect(), weights },
            Body::Product { children } => Node::Product { children: children.iter().map(map).collect() },
        });
    }
    SpeGraph::from_nodes(nodes, map(&file.root))
}
