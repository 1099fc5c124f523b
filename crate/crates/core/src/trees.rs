//! Complete and partial decision trees over `{-1,+1}^n`.
//!
//! A [`DecisionTree`] is an immutable arena of nodes. At an internal node
//! querying `x_i` evaluation goes right iff `x_i = +1`.
//!
//! A [`PartialTree`] is the lazily grown tree held by the reconstructor:
//! internal nodes may not yet have a variable and leaves may not yet have a
//! label. Every slot is write-once.
//!
//! Text format: a leaf is `L +1` or `L -1`, an internal node is
//! `(x<i> <left> <right>)` with `i` 1-based. Parsing ignores whitespace;
//! serialization emits single spaces.

use std::fmt;
use std::sync::RwLock;

use crate::boolfn::{BooleanFunction, Point, Sign};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Leaf(Sign),
    /// `left` is followed when `x_var = -1`, `right` when `x_var = +1`.
    Internal { var: usize, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    n: usize,
    nodes: Vec<Node>,
    root: usize,
}

impl DecisionTree {
    pub fn leaf(n: usize, label: Sign) -> Self {
        DecisionTree {
            n,
            nodes: vec![Node::Leaf(label)],
            root: 0,
        }
    }

    /// Joins two subtrees under a node querying `var`. The result has
    /// dimension `max(left.n, right.n, var + 1)`.
    pub fn split(var: usize, left: DecisionTree, right: DecisionTree) -> Self {
        let n = left.n.max(right.n).max(var + 1);
        let mut nodes = Vec::with_capacity(1 + left.nodes.len() + right.nodes.len());
        nodes.push(Node::Leaf(Sign::Plus));
        let l = append(&mut nodes, &left);
        let r = append(&mut nodes, &right);
        nodes[0] = Node::Internal {
            var,
            left: l,
            right: r,
        };
        DecisionTree { n, nodes, root: 0 }
    }

    /// Builds a tree from an explicit arena. Every node must be reachable
    /// from `root` at most once and indices must be in bounds.
    pub fn from_nodes(n: usize, nodes: Vec<Node>, root: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(invalid("root index out of bounds"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(invalid(format!("node {id} reachable twice")));
            }
            if let Node::Internal { var, left, right } = nodes[id] {
                if var >= n {
                    return Err(invalid(format!("variable {var} out of range for n = {n}")));
                }
                if left >= nodes.len() || right >= nodes.len() {
                    return Err(invalid("child index out of bounds"));
                }
                stack.push(left);
                stack.push(right);
            }
        }
        Ok(DecisionTree { n, nodes, root })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Widens the declared dimension. Fails if a node queries a variable
    /// `>= n`.
    pub fn with_dimension(mut self, n: usize) -> Result<Self> {
        if let Some(v) = self.max_variable() {
            if v >= n {
                return Err(invalid(format!(
                    "tree queries x{} but dimension is {n}",
                    v + 1
                )));
            }
        }
        self.n = n;
        Ok(self)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> Node {
        self.nodes[id]
    }

    pub fn evaluate(&self, x: &Point) -> Sign {
        let mut id = self.root;
        loop {
            match self.nodes[id] {
                Node::Leaf(s) => return s,
                Node::Internal { var, left, right } => {
                    id = if x.get(var) == Sign::Plus { right } else { left };
                }
            }
        }
    }

    /// Leaf count.
    pub fn size(&self) -> usize {
        self.leaves().count()
    }

    /// Longest root-to-leaf path length in edges.
    pub fn depth(&self) -> usize {
        self.leaves().map(|(d, _)| d).max().unwrap_or(0)
    }

    /// `(depth, label)` for each reachable leaf, in pre-order.
    pub fn leaves(&self) -> impl Iterator<Item = (usize, Sign)> + '_ {
        let mut stack = vec![(self.root, 0usize)];
        std::iter::from_fn(move || {
            while let Some((id, d)) = stack.pop() {
                match self.nodes[id] {
                    Node::Leaf(s) => return Some((d, s)),
                    Node::Internal { left, right, .. } => {
                        stack.push((right, d + 1));
                        stack.push((left, d + 1));
                    }
                }
            }
            None
        })
    }

    pub fn max_variable(&self) -> Option<usize> {
        let mut stack = vec![self.root];
        let mut best = None;
        while let Some(id) = stack.pop() {
            if let Node::Internal { var, left, right } = self.nodes[id] {
                best = Some(best.map_or(var, |b: usize| b.max(var)));
                stack.push(left);
                stack.push(right);
            }
        }
        best
    }

    /// Structural equality, independent of arena layout.
    pub fn structurally_eq(&self, other: &DecisionTree) -> bool {
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            match (self.nodes[a], other.nodes[b]) {
                (Node::Leaf(x), Node::Leaf(y)) if x == y => {}
                (
                    Node::Internal {
                        var: va,
                        left: la,
                        right: ra,
                    },
                    Node::Internal {
                        var: vb,
                        left: lb,
                        right: rb,
                    },
                ) if va == vb => {
                    stack.push((la, lb));
                    stack.push((ra, rb));
                }
                _ => return false,
            }
        }
        true
    }

    /// Canonical text form.
    pub fn serialize(&self) -> String {
        enum Work {
            Visit(usize),
            Close,
        }
        let mut out = String::new();
        let mut stack = vec![Work::Visit(self.root)];
        let mut first = true;
        while let Some(w) = stack.pop() {
            match w {
                Work::Close => out.push(')'),
                Work::Visit(id) => {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    match self.nodes[id] {
                        Node::Leaf(s) => {
                            out.push_str(if s == Sign::Plus { "L +1" } else { "L -1" })
                        }
                        Node::Internal { var, left, right } => {
                            out.push_str(&format!("(x{}", var + 1));
                            stack.push(Work::Close);
                            stack.push(Work::Visit(right));
                            stack.push(Work::Visit(left));
                        }
                    }
                }
            }
        }
        out
    }

    /// Parses the text format. The dimension is `max variable + 1` (or 1
    /// for a bare leaf); use [`DecisionTree::with_dimension`] to widen it.
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse_tree()
    }
}

impl PartialEq for DecisionTree {
    fn eq(&self, other: &Self) -> bool {
        self.structurally_eq(other)
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl BooleanFunction for DecisionTree {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &Point) -> Sign {
        self.evaluate(x)
    }
}

fn append(nodes: &mut Vec<Node>, tree: &DecisionTree) -> usize {
    let offset = nodes.len();
    nodes.extend(tree.nodes.iter().map(|node| match *node {
        Node::Leaf(s) => Node::Leaf(s),
        Node::Internal { var, left, right } => Node::Internal {
            var,
            left: left + offset,
            right: right + offset,
        },
    }));
    tree.root + offset
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.error(format!(
                "expected '{}', found '{}'",
                c as char, b as char
            ))),
            None => Err(self.error(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn parse_sign(&mut self) -> Result<Sign> {
        let sign = match self.peek() {
            Some(b'+') => Sign::Plus,
            Some(b'-') => Sign::Minus,
            _ => return Err(self.error("expected leaf label '+1' or '-1'")),
        };
        self.pos += 1;
        self.expect(b'1')?;
        Ok(sign)
    }

    fn parse_var(&mut self) -> Result<usize> {
        self.expect(b'x')?;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected variable index"));
        }
        let digits = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let index: usize = digits.parse().map_err(|_| Error::Parse {
            position: start,
            message: format!("variable index '{digits}' out of range"),
        })?;
        if index == 0 {
            return Err(Error::Parse {
                position: start,
                message: "variable indices are 1-based".into(),
            });
        }
        Ok(index - 1)
    }

    fn parse_tree(&mut self) -> Result<DecisionTree> {
        // Pre-order arena; `pending` holds internal nodes still missing children.
        let mut nodes: Vec<Node> = Vec::new();
        let mut pending: Vec<(usize, u8)> = Vec::new();
        let mut max_var = None::<usize>;
        loop {
            let id = nodes.len();
            match self.peek() {
                Some(b'L') => {
                    self.pos += 1;
                    let s = self.parse_sign()?;
                    nodes.push(Node::Leaf(s));
                }
                Some(b'(') => {
                    self.pos += 1;
                    let var = self.parse_var()?;
                    max_var = Some(max_var.map_or(var, |m| m.max(var)));
                    nodes.push(Node::Internal {
                        var,
                        left: usize::MAX,
                        right: usize::MAX,
                    });
                }
                Some(b) => return Err(self.error(format!("unexpected '{}'", b as char))),
                None => return Err(self.error("unexpected end of input")),
            }
            // Attach the new node to its parent.
            if let Some((parent, filled)) = pending.last_mut() {
                if let Node::Internal { left, right, .. } = &mut nodes[*parent] {
                    if *filled == 0 {
                        *left = id;
                    } else {
                        *right = id;
                    }
                }
                *filled += 1;
            }
            if matches!(nodes[id], Node::Internal { .. }) {
                pending.push((id, 0));
                continue;
            }
            // Close every internal node whose two children are complete.
            while let Some(&(_, filled)) = pending.last() {
                if filled < 2 {
                    break;
                }
                self.expect(b')')?;
                pending.pop();
            }
            if pending.is_empty() {
                break;
            }
        }
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(self.error("trailing input after tree"));
        }
        let n = max_var.map_or(1, |v| v + 1);
        Ok(DecisionTree {
            n,
            nodes,
            root: 0,
        })
    }
}

/// Handle to a node of a [`PartialTree`].
pub type NodeId = usize;

#[derive(Debug, Clone, Default)]
struct PartialNode {
    var: Option<usize>,
    label: Option<Sign>,
    /// Indexed by `Sign::bit()`: 0 for the `-1` branch, 1 for `+1`.
    children: [Option<NodeId>; 2],
    depth: usize,
}

/// Partially built depth-capped decision tree with write-once slots.
///
/// Nodes at depth `< depth_cap` are internal positions that may carry a
/// variable; nodes at depth `depth_cap` are leaf positions that may carry a
/// label. Readers and writers may run concurrently; writes serialize on an
/// internal lock.
#[derive(Debug)]
pub struct PartialTree {
    n: usize,
    depth_cap: usize,
    nodes: RwLock<Vec<PartialNode>>,
}

impl PartialTree {
    pub const ROOT: NodeId = 0;

    pub fn new(n: usize, depth_cap: usize) -> Self {
        PartialTree {
            n,
            depth_cap,
            nodes: RwLock::new(vec![PartialNode::default()]),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn node_count(&self) -> usize {
        self.nodes.read().unwrap().len()
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.nodes.read().unwrap()[id].depth
    }

    pub fn is_leaf_position(&self, id: NodeId) -> bool {
        self.depth(id) == self.depth_cap
    }

    pub fn variable(&self, id: NodeId) -> Option<usize> {
        self.nodes.read().unwrap()[id].var
    }

    pub fn label(&self, id: NodeId) -> Option<Sign> {
        self.nodes.read().unwrap()[id].label
    }

    pub fn child(&self, id: NodeId, branch: Sign) -> Option<NodeId> {
        self.nodes.read().unwrap()[id].children[branch.bit() as usize]
    }

    /// Returns the child on `branch`, creating it if absent. The node must
    /// already have its variable resolved.
    pub fn child_or_insert(&self, id: NodeId, branch: Sign) -> Result<NodeId> {
        if let Some(c) = self.child(id, branch) {
            return Ok(c);
        }
        let mut nodes = self.nodes.write().unwrap();
        let node = &nodes[id];
        if node.var.is_none() {
            return Err(invalid("cannot descend from an unresolved node"));
        }
        if let Some(c) = node.children[branch.bit() as usize] {
            return Ok(c);
        }
        let depth = node.depth + 1;
        let child = nodes.len();
        nodes.push(PartialNode {
            depth,
            ..PartialNode::default()
        });
        nodes[id].children[branch.bit() as usize] = Some(child);
        Ok(child)
    }

    /// Sets the variable of an internal position. Re-setting the same value
    /// is a no-op; a different value is a [`Error::WriteOnce`] violation.
    pub fn resolve_variable(&self, id: NodeId, var: usize) -> Result<usize> {
        if var >= self.n {
            return Err(invalid(format!("variable {var} out of range for n = {}", self.n)));
        }
        let mut nodes = self.nodes.write().unwrap();
        let node = &mut nodes[id];
        if node.depth >= self.depth_cap {
            return Err(invalid("leaf positions carry labels, not variables"));
        }
        match node.var {
            None => {
                node.var = Some(var);
                Ok(var)
            }
            Some(v) if v == var => Ok(v),
            Some(v) => Err(Error::WriteOnce(format!(
                "node {id} already queries x{}, refusing x{}",
                v + 1,
                var + 1
            ))),
        }
    }

    /// Sets the label of a leaf position, with the same write-once rule.
    pub fn resolve_label(&self, id: NodeId, label: Sign) -> Result<Sign> {
        let mut nodes = self.nodes.write().unwrap();
        let node = &mut nodes[id];
        if node.depth != self.depth_cap {
            return Err(invalid("internal positions carry variables, not labels"));
        }
        match node.label {
            None => {
                node.label = Some(label);
                Ok(label)
            }
            Some(l) if l == label => Ok(l),
            Some(l) => Err(Error::WriteOnce(format!(
                "leaf {id} already labeled {l}, refusing {label}"
            ))),
        }
    }

    /// Completed copy: unresolved positions and missing children become
    /// `+1` leaves.
    pub fn snapshot(&self) -> DecisionTree {
        let src = self.nodes.read().unwrap();
        let mut nodes = Vec::with_capacity(src.len());
        // (source id or None for a missing child, destination slot)
        let mut stack: Vec<(Option<NodeId>, usize)> = vec![(Some(Self::ROOT), 0)];
        nodes.push(Node::Leaf(Sign::Plus));
        while let Some((source, slot)) = stack.pop() {
            let Some(id) = source else { continue };
            let node = &src[id];
            match node.var {
                Some(var) if node.depth < self.depth_cap => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf(Sign::Plus));
                    let right = nodes.len();
                    nodes.push(Node::Leaf(Sign::Plus));
                    nodes[slot] = Node::Internal { var, left, right };
                    stack.push((node.children[0], left));
                    stack.push((node.children[1], right));
                }
                _ => nodes[slot] = Node::Leaf(node.label.unwrap_or(Sign::Plus)),
            }
        }
        DecisionTree {
            n: self.n,
            nodes,
            root: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(signs: &[i32]) -> Point {
        Point::from_signs(&signs.iter().map(|&s| Sign::from_i32(s)).collect::<Vec<_>>())
    }

    #[test]
    fn single_leaf() {
        let t = DecisionTree::leaf(3, Sign::Minus);
        assert_eq!(t.evaluate(&x(&[1, -1, 1])), Sign::Minus);
        assert_eq!(t.size(), 1);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.serialize(), "L -1");
    }

    #[test]
    fn root_x2_goes_right_on_plus() {
        let t = DecisionTree::split(
            1,
            DecisionTree::leaf(2, Sign::Minus),
            DecisionTree::leaf(2, Sign::Plus),
        );
        assert_eq!(t.evaluate(&x(&[1, 1])), Sign::Plus);
        assert_eq!(t.evaluate(&x(&[1, -1])), Sign::Minus);
    }

    #[test]
    fn complete_depth_three() {
        fn complete(d: usize, var: usize) -> DecisionTree {
            if d == 0 {
                DecisionTree::leaf(3, Sign::Plus)
            } else {
                DecisionTree::split(var, complete(d - 1, var + 1), complete(d - 1, var + 1))
            }
        }
        let t = complete(3, 0);
        assert_eq!(t.size(), 8);
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn canonical_form() {
        let t = DecisionTree::split(
            0,
            DecisionTree::leaf(1, Sign::Minus),
            DecisionTree::leaf(1, Sign::Plus),
        );
        assert_eq!(t.serialize(), "(x1 L -1 L +1)");
        assert_eq!(DecisionTree::leaf(1, Sign::Plus).serialize(), "L +1");
    }

    #[test]
    fn parse_is_whitespace_insensitive() {
        let t = DecisionTree::parse("  (x3\n\t( x1 L-1 L +1 )\nL   +1 ) \n").unwrap();
        assert_eq!(t.serialize(), "(x3 (x1 L -1 L +1) L +1)");
        assert_eq!(t.dimension(), 3);
    }

    #[test]
    fn parse_errors_carry_position() {
        let cases = [
            ("(x1 L -1)", 8),
            ("(x0 L -1 L +1)", 2),
            ("L +2", 3),
            ("L +1 L -1", 5),
            ("", 0),
            ("(y1 L -1 L +1)", 1),
        ];
        for (text, pos) in cases {
            match DecisionTree::parse(text) {
                Err(Error::Parse { position, .. }) => assert_eq!(position, pos, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn from_nodes_rejects_shared_children() {
        let nodes = vec![
            Node::Internal {
                var: 0,
                left: 1,
                right: 1,
            },
            Node::Leaf(Sign::Plus),
        ];
        assert!(DecisionTree::from_nodes(1, nodes, 0).is_err());
    }

    #[test]
    fn empty_partial_snapshot_is_plus_leaf() {
        let p = PartialTree::new(4, 3);
        assert_eq!(p.snapshot().serialize(), "L +1");
    }

    #[test]
    fn partial_tree_is_write_once() {
        let p = PartialTree::new(4, 2);
        let root = PartialTree::ROOT;
        assert_eq!(p.resolve_variable(root, 2).unwrap(), 2);
        assert_eq!(p.resolve_variable(root, 2).unwrap(), 2);
        assert!(matches!(p.resolve_variable(root, 1), Err(Error::WriteOnce(_))));
        let c = p.child_or_insert(root, Sign::Plus).unwrap();
        assert_eq!(p.child_or_insert(root, Sign::Plus).unwrap(), c);
        p.resolve_variable(c, 0).unwrap();
        let leaf = p.child_or_insert(c, Sign::Minus).unwrap();
        assert!(p.resolve_variable(leaf, 1).is_err());
        p.resolve_label(leaf, Sign::Minus).unwrap();
        assert!(matches!(p.resolve_label(leaf, Sign::Plus), Err(Error::WriteOnce(_))));
        assert!(p.resolve_label(c, Sign::Plus).is_err());
    }

    #[test]
    fn snapshot_follows_resolved_path() {
        let p = PartialTree::new(3, 2);
        p.resolve_variable(PartialTree::ROOT, 1).unwrap();
        let a = p.child_or_insert(PartialTree::ROOT, Sign::Minus).unwrap();
        p.resolve_variable(a, 2).unwrap();
        let leaf = p.child_or_insert(a, Sign::Minus).unwrap();
        p.resolve_label(leaf, Sign::Minus).unwrap();
        let t = p.snapshot();
        assert_eq!(t.serialize(), "(x2 (x3 L -1 L +1) L +1)");
        assert_eq!(t.evaluate(&x(&[1, -1, -1])), Sign::Minus);
        assert!(t.depth() <= 2);
    }
}
