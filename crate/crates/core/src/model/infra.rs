use std::collections::HashMap;

use super::{Amount, Id, LinkSpec, ModelError, NodeSpec};

/// QoS featured by one directed link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkQos {
    pub latency: Amount,
    pub bandwidth: Amount,
}

/// Monitored nodes (in declaration order) and directed links between them.
///
/// Node order is significant: the search engine tries candidate hosts in
/// exactly this order.
#[derive(Clone, Debug, Default)]
pub struct Infrastructure {
    nodes: Vec<NodeSpec>,
    index: HashMap<Id, usize>,
    links: HashMap<Id, HashMap<Id, LinkQos>>,
    link_count: usize,
}

impl Infrastructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn link(&self, src: &str, dst: &str) -> Option<&LinkQos> {
        self.links.get(src)?.get(dst)
    }

    /// Declares a new node; fails if the id is taken.
    pub fn add_node(&mut self, node: NodeSpec) -> Result<(), ModelError> {
        if self.index.contains_key(&node.id) {
            return Err(ModelError::DuplicateNode(node.id));
        }
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    /// Replaces a node in place, or appends it when new.
    pub fn upsert_node(&mut self, node: NodeSpec) {
        match self.index.get(&node.id) {
            Some(&i) => self.nodes[i] = node,
            None => {
                self.index.insert(node.id.clone(), self.nodes.len());
                self.nodes.push(node);
            }
        }
    }

    /// Removes a node together with every link touching it.
    pub fn remove_node(&mut self, id: &str) -> bool {
        let Some(pos) = self.index.remove(id) else {
            return false;
        };
        self.nodes.remove(pos);
        for (i, n) in self.nodes.iter().enumerate().skip(pos) {
            self.index.insert(n.id.clone(), i);
        }
        if let Some(out) = self.links.remove(id) {
            self.link_count -= out.len();
        }
        for inner in self.links.values_mut() {
            if inner.remove(id).is_some() {
                self.link_count -= 1;
            }
        }
        true
    }

    fn check_endpoints(&self, link: &LinkSpec) -> Result<(), ModelError> {
        for end in [&link.src, &link.dst] {
            if !self.index.contains_key(end) {
                return Err(ModelError::UnknownNode(end.clone()));
            }
        }
        if link.src == link.dst {
            return Err(ModelError::InvalidValue(format!("link from `{}` to itself", link.src)));
        }
        Ok(())
    }

    /// Declares a new link; fails on duplicates and unknown endpoints.
    pub fn add_link(&mut self, link: LinkSpec) -> Result<(), ModelError> {
        self.check_endpoints(&link)?;
        if self.link(&link.src, &link.dst).is_some() {
            return Err(ModelError::DuplicateLink(link.src, link.dst));
        }
        self.insert_link(link);
        Ok(())
    }

    pub fn upsert_link(&mut self, link: LinkSpec) -> Result<(), ModelError> {
        self.check_endpoints(&link)?;
        self.insert_link(link);
        Ok(())
    }

    pub(crate) fn insert_link(&mut self, link: LinkSpec) {
        let qos = LinkQos { latency: link.latency, bandwidth: link.bandwidth };
        if self.links.entry(link.src).or_default().insert(link.dst, qos).is_none() {
            self.link_count += 1;
        }
    }

    pub fn remove_link(&mut self, src: &str, dst: &str) -> bool {
        let removed = self.links.get_mut(src).and_then(|m| m.remove(dst)).is_some();
        if removed {
            self.link_count -= 1;
        }
        removed
    }

    /// All links, sources and destinations both in node declaration order.
    pub fn links(&self) -> impl Iterator<Item = LinkSpec> + '_ {
        self.nodes.iter().flat_map(move |s| {
            let out = self.links.get(&s.id);
            self.nodes.iter().filter_map(move |d| {
                out.and_then(|m| m.get(&d.id)).map(|q| LinkSpec {
                    src: s.id.clone(),
                    dst: d.id.clone(),
                    latency: q.latency,
                    bandwidth: q.bandwidth,
                })
            })
        })
    }
}
