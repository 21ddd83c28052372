//! Rhetorical structure trees and their nested JSON serialization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::DiscourseRelation;

/// A binary RS tree whose leaves are EDU positions.
///
/// Leaves have a singleton `status`, no relation and `promotion == status`.
/// An internal node's status is the disjoint union of its children's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RSTree {
    pub status: BTreeSet<usize>,
    pub relation: Option<DiscourseRelation>,
    pub promotion: BTreeSet<usize>,
    children: Option<Box<(RSTree, RSTree)>>,
}

impl RSTree {
    pub fn leaf(position: usize) -> RSTree {
        let status = BTreeSet::from([position]);
        RSTree {
            promotion: status.clone(),
            status,
            relation: None,
            children: None,
        }
    }

    /// Joins two disjoint subtrees; the earlier span goes left. Promotion
    /// defaults to the left child's (mononuclear).
    pub fn join(a: RSTree, b: RSTree) -> Result<RSTree> {
        if !a.status.is_disjoint(&b.status) {
            return Err(Error::InvalidTree(format!(
                "overlapping children {:?} and {:?}",
                a.status, b.status
            )));
        }
        let (left, right) = if a.first() <= b.first() { (a, b) } else { (b, a) };
        let status = left.status.union(&right.status).copied().collect();
        Ok(RSTree {
            status,
            relation: None,
            promotion: left.promotion.clone(),
            children: Some(Box::new((left, right))),
        })
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn left(&self) -> Option<&RSTree> {
        self.children.as_deref().map(|c| &c.0)
    }

    pub fn right(&self) -> Option<&RSTree> {
        self.children.as_deref().map(|c| &c.1)
    }

    pub fn children_mut(&mut self) -> Option<(&mut RSTree, &mut RSTree)> {
        self.children.as_deref_mut().map(|c| (&mut c.0, &mut c.1))
    }

    pub fn first(&self) -> usize {
        *self.status.first().expect("status is never empty")
    }

    pub fn leaf_count(&self) -> usize {
        self.status.len()
    }

    /// Internal nodes in pre-order.
    pub fn internal_nodes(&self) -> Vec<&RSTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if let Some((l, r)) = node.children.as_deref().map(|c| (&c.0, &c.1)) {
                out.push(node);
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn internal_count(&self) -> usize {
        self.internal_nodes().len()
    }

    /// True when every node covers a contiguous run of positions.
    pub fn is_contiguous(&self) -> bool {
        let contiguous = |s: &BTreeSet<usize>| {
            s.last().unwrap() - s.first().unwrap() + 1 == s.len()
        };
        contiguous(&self.status) && self.internal_nodes().iter().all(|n| contiguous(&n.status))
    }

    /// Copy with every position passed through `f`, which must be
    /// injective and order-preserving.
    pub fn relabel(&self, f: &impl Fn(usize) -> usize) -> RSTree {
        RSTree {
            status: self.status.iter().map(|&p| f(p)).collect(),
            relation: self.relation,
            promotion: self.promotion.iter().map(|&p| f(p)).collect(),
            children: self
                .children
                .as_deref()
                .map(|(l, r)| Box::new((l.relabel(f), r.relabel(f)))),
        }
    }

    /// Checks every structural invariant recursively.
    pub fn validate(&self) -> Result<()> {
        if self.status.is_empty() {
            return Err(Error::InvalidTree("empty status".into()));
        }
        if self.promotion.is_empty() || !self.promotion.is_subset(&self.status) {
            return Err(Error::InvalidTree(format!(
                "promotion {:?} is not a nonempty subset of status {:?}",
                self.promotion, self.status
            )));
        }
        match self.children.as_deref() {
            None => {
                if self.status.len() != 1 {
                    return Err(Error::InvalidTree(format!(
                        "leaf with status {:?}",
                        self.status
                    )));
                }
                if self.relation.is_some() {
                    return Err(Error::InvalidTree("leaf carries a relation".into()));
                }
            }
            Some((l, r)) => {
                l.validate()?;
                r.validate()?;
                if !l.status.is_disjoint(&r.status) {
                    return Err(Error::InvalidTree(format!(
                        "children {:?} and {:?} overlap",
                        l.status, r.status
                    )));
                }
                let union: BTreeSet<usize> = l.status.union(&r.status).copied().collect();
                if union != self.status {
                    return Err(Error::InvalidTree(format!(
                        "status {:?} is not the union of its children",
                        self.status
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Node {
    status: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation: Option<DiscourseRelation>,
    promotion: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Box<Node>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Box<Node>>,
}

impl From<&RSTree> for Node {
    fn from(t: &RSTree) -> Node {
        Node {
            status: t.status.iter().copied().collect(),
            relation: t.relation,
            promotion: t.promotion.iter().copied().collect(),
            left: t.left().map(|l| Box::new(l.into())),
            right: t.right().map(|r| Box::new(r.into())),
        }
    }
}

impl TryFrom<Node> for RSTree {
    type Error = Error;

    fn try_from(n: Node) -> Result<RSTree> {
        let children = match (n.left, n.right) {
            (None, None) => None,
            (Some(l), Some(r)) => Some(Box::new((RSTree::try_from(*l)?, RSTree::try_from(*r)?))),
            _ => return Err(Error::InvalidTree("node with exactly one child".into())),
        };
        let tree = RSTree {
            status: n.status.into_iter().collect(),
            relation: n.relation,
            promotion: n.promotion.into_iter().collect(),
            children,
        };
        tree.validate()?;
        Ok(tree)
    }
}

impl Serialize for RSTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Node::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RSTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let node = Node::deserialize(d)?;
        RSTree::try_from(node).map_err(serde::de::Error::custom)
    }
}

pub fn serialize_tree(tree: &RSTree) -> String {
    serde_json::to_string_pretty(tree).expect("tree serialization is infallible")
}

pub fn load_tree(text: &str) -> Result<RSTree> {
    Ok(serde_json::from_str(text)?)
}

const TREE_FORMAT: &str = "rst-trees";
const TREE_VERSION: u32 = 1;

/// A tree per document, as written by `build-tree`, `label` and `synth`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocTree {
    pub doc: String,
    pub tree: RSTree,
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    format: String,
    version: u32,
    trees: Vec<DocTree>,
}

pub fn serialize_tree_file(trees: &[DocTree]) -> String {
    let file = TreeFile {
        format: TREE_FORMAT.into(),
        version: TREE_VERSION,
        trees: trees.to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("tree serialization is infallible") + "\n"
}

pub fn load_tree_file(text: &str) -> Result<Vec<DocTree>> {
    let file: TreeFile = serde_json::from_str(text)?;
    if file.format != TREE_FORMAT || file.version != TREE_VERSION {
        return Err(Error::Version {
            expected: TREE_FORMAT,
            found: file.format,
            version: file.version,
            supported: TREE_VERSION,
        });
    }
    Ok(file.trees)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leaf_document() {
        let text = serialize_tree(&RSTree::leaf(1));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["status"], serde_json::json!([1]));
        assert!(v.get("left").is_none() && v.get("right").is_none());
        assert_eq!(load_tree(&text).unwrap(), RSTree::leaf(1));
    }

    #[test]
    fn join_orders_children_and_counts_nodes() {
        let t = RSTree::join(RSTree::leaf(3), RSTree::leaf(2)).unwrap();
        let t = RSTree::join(RSTree::leaf(1), t).unwrap();
        assert_eq!(t.left().unwrap().status, BTreeSet::from([1]));
        assert_eq!(t.internal_count(), 2);
        assert_eq!(t.promotion, BTreeSet::from([1]));
        assert!(t.is_contiguous());
        assert!(RSTree::join(RSTree::leaf(1), RSTree::leaf(1)).is_err());
    }

    #[test]
    fn load_rejects_broken_status_union() {
        let bad = r#"{"status":[1,2,3],"promotion":[1],
            "left":{"status":[1],"promotion":[1]},
            "right":{"status":[2],"promotion":[2]}}"#;
        assert!(load_tree(bad).is_err());
        let one_child = r#"{"status":[1],"promotion":[1],"left":{"status":[1],"promotion":[1]}}"#;
        assert!(load_tree(one_child).is_err());
        let bad_promo = r#"{"status":[1],"promotion":[2]}"#;
        assert!(load_tree(bad_promo).is_err());
    }

    #[test]
    fn relation_survives_round_trip() {
        let mut t = RSTree::join(RSTree::leaf(1), RSTree::leaf(2)).unwrap();
        t.relation = Some(DiscourseRelation::Contrast);
        t.promotion = BTreeSet::from([1, 2]);
        let back = load_tree(&serialize_tree(&t)).unwrap();
        assert_eq!(back, t);
        let file = serialize_tree_file(&[DocTree { doc: "d".into(), tree: t.clone() }]);
        assert_eq!(load_tree_file(&file).unwrap()[0].tree, t);
    }
}
