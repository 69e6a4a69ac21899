//! Bracketed constituency trees.
//!
//! Trees arrive in the usual treebank notation, `(TAG child child ...)` for
//! phrases and `(TAG token)` for leaves. Nodes live in an arena indexed by
//! their pre-order position, so a [`NodeId`] doubles as the pre-order rank.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Tag given to sentence punctuation leaves. Extraction skips them.
pub const PUNCT_TAG: &str = "PUNC";

/// Pre-order index of a node inside its [`ParseTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Half-open range over the leaf sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_leaf(&self, leaf: usize) -> bool {
        self.start <= leaf && leaf < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub tag: String,
    /// Present exactly when the node is a leaf.
    pub token: Option<String>,
    pub children: Vec<NodeId>,
    #[serde(skip)]
    pub parent: Option<NodeId>,
    pub span: Span,
    #[serde(skip)]
    pub depth: usize,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    /// Tag contains `NN` (NN, NNS, NNP, DTNN, ...).
    pub fn is_noun(&self) -> bool {
        is_noun_tag(&self.tag)
    }

    pub fn is_punct(&self) -> bool {
        self.tag == PUNCT_TAG
    }
}

pub fn is_noun_tag(tag: &str) -> bool {
    tag.contains("NN")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced brackets at byte {position}")]
    UnbalancedBrackets { position: usize },
    #[error("node `{tag}` at byte {position} has neither token nor children")]
    LeafWithoutToken { tag: String, position: usize },
    #[error("unexpected `{found}` at byte {position}")]
    UnexpectedToken { found: String, position: usize },
    #[error("node {0} is not part of this tree")]
    NodeNotInTree(NodeId),
    #[error("node {ancestor} dominates node {descendant}")]
    DominanceViolation { ancestor: NodeId, descendant: NodeId },
}

/// An immutable constituency tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseTree {
    nodes: Vec<TreeNode>,
    #[serde(skip)]
    leaves: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<(usize, Lexeme<'_>)> {
    let mut out = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let delimiter = c == '(' || c == ')' || c.is_whitespace();
        if delimiter {
            if let Some(s) = atom_start.take() {
                out.push((s, Lexeme::Atom(&text[s..i])));
            }
            match c {
                '(' => out.push((i, Lexeme::Open)),
                ')' => out.push((i, Lexeme::Close)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(s) = atom_start {
        out.push((s, Lexeme::Atom(&text[s..])));
    }
    out
}

struct Builder<'a> {
    lexemes: Vec<(usize, Lexeme<'a>)>,
    pos: usize,
    nodes: Vec<TreeNode>,
    leaves: Vec<NodeId>,
}

impl<'a> Builder<'a> {
    fn peek(&self) -> Option<&(usize, Lexeme<'a>)> {
        self.lexemes.get(self.pos)
    }

    /// Parses one `( ... )` group whose opening bracket is the current lexeme.
    fn node(&mut self, parent: Option<NodeId>, depth: usize) -> Result<NodeId, TreeError> {
        let (open_at, _) = self.lexemes[self.pos];
        self.pos += 1;
        let tag = match self.peek() {
            Some((_, Lexeme::Atom(t))) => {
                let t = t.to_string();
                self.pos += 1;
                t
            }
            // PTB files often wrap the tree in an unlabelled bracket.
            Some((_, Lexeme::Open)) => "ROOT".to_string(),
            Some((at, Lexeme::Close)) => return Err(TreeError::LeafWithoutToken { tag: String::new(), position: *at }),
            None => return Err(TreeError::UnbalancedBrackets { position: open_at }),
        };
        let id = NodeId(self.nodes.len());
        let start = self.leaves.len();
        self.nodes.push(TreeNode {
            id,
            tag: tag.clone(),
            token: None,
            children: Vec::new(),
            parent,
            span: Span { start, end: start },
            depth,
        });

        match self.peek() {
            Some((_, Lexeme::Atom(tok))) => {
                let tok = tok.to_string();
                self.pos += 1;
                match self.peek() {
                    Some((_, Lexeme::Close)) => self.pos += 1,
                    Some((at, Lexeme::Atom(other))) => {
                        return Err(TreeError::UnexpectedToken { found: other.to_string(), position: *at })
                    }
                    Some((at, Lexeme::Open)) => {
                        return Err(TreeError::UnexpectedToken { found: "(".into(), position: *at })
                    }
                    None => return Err(TreeError::UnbalancedBrackets { position: open_at }),
                }
                self.nodes[id.0].token = Some(tok);
                self.leaves.push(id);
            }
            Some((_, Lexeme::Open)) => {
                let mut children = Vec::new();
                loop {
                    match self.peek() {
                        Some((_, Lexeme::Open)) => children.push(self.node(Some(id), depth + 1)?),
                        Some((_, Lexeme::Close)) => {
                            self.pos += 1;
                            break;
                        }
                        Some((at, Lexeme::Atom(a))) => {
                            return Err(TreeError::UnexpectedToken { found: a.to_string(), position: *at })
                        }
                        None => return Err(TreeError::UnbalancedBrackets { position: open_at }),
                    }
                }
                self.nodes[id.0].children = children;
            }
            Some((_, Lexeme::Close)) => return Err(TreeError::LeafWithoutToken { tag, position: open_at }),
            None => return Err(TreeError::UnbalancedBrackets { position: open_at }),
        }
        self.nodes[id.0].span.end = self.leaves.len();
        Ok(id)
    }
}

/// Parses a bracketed tree. Pre-order ids and leaf spans are assigned on the way.
pub fn parse_bracketed(text: &str) -> Result<ParseTree, TreeError> {
    let lexemes = lex(text);
    if lexemes.is_empty() {
        return Err(TreeError::EmptyInput);
    }
    let mut b = Builder { lexemes, pos: 0, nodes: Vec::new(), leaves: Vec::new() };
    match b.peek() {
        Some((_, Lexeme::Open)) => {}
        Some((at, Lexeme::Close)) => return Err(TreeError::UnbalancedBrackets { position: *at }),
        Some((at, Lexeme::Atom(a))) => return Err(TreeError::UnexpectedToken { found: a.to_string(), position: *at }),
        None => return Err(TreeError::EmptyInput),
    }
    b.node(None, 0)?;
    match b.peek() {
        None => {}
        Some((at, Lexeme::Close)) => return Err(TreeError::UnbalancedBrackets { position: *at }),
        Some((at, Lexeme::Open)) => return Err(TreeError::UnexpectedToken { found: "(".into(), position: *at }),
        Some((at, Lexeme::Atom(a))) => return Err(TreeError::UnexpectedToken { found: a.to_string(), position: *at }),
    }
    Ok(ParseTree { nodes: b.nodes, leaves: b.leaves })
}

impl ParseTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&TreeNode, TreeError> {
        self.nodes.get(id.0).ok_or(TreeError::NodeNotInTree(id))
    }

    /// Nodes in root-first depth-first order; `preorder()[k].id == NodeId(k)`.
    pub fn preorder(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> + '_ {
        self.leaves.iter().map(move |id| &self.nodes[id.0])
    }

    pub fn leaf(&self, index: usize) -> Option<&TreeNode> {
        self.leaves.get(index).map(|id| &self.nodes[id.0])
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_tokens(&self) -> Vec<&str> {
        self.leaves().filter_map(|n| n.token.as_deref()).collect()
    }

    /// Leaves covered by `span`, in surface order.
    pub fn leaves_in(&self, span: Span) -> impl Iterator<Item = &TreeNode> + '_ {
        self.leaves[span.start..span.end].iter().map(move |id| &self.nodes[id.0])
    }

    /// True when `a` is `b` or an ancestor of `b`.
    pub fn dominates(&self, a: NodeId, b: NodeId) -> bool {
        let (Some(na), Some(nb)) = (self.nodes.get(a.0), self.nodes.get(b.0)) else {
            return false;
        };
        // Pre-order ids: descendants of `a` occupy a contiguous id range after it.
        a.0 <= b.0 && (a == b || nb.depth > na.depth && self.subtree_end(a) > b.0)
    }

    /// One past the last pre-order id inside the subtree of `id`.
    fn subtree_end(&self, id: NodeId) -> usize {
        let mut cur = id;
        while let Some(&last) = self.nodes[cur.0].children.last() {
            cur = last;
        }
        cur.0 + 1
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.nodes.get(id.0).and_then(|n| n.parent), move |p| self.nodes[p.0].parent)
    }

    /// The deepest node dominating both `a` and `b`.
    pub fn lca(&self, a: NodeId, b: NodeId) -> Result<NodeId, TreeError> {
        let mut x = self.node(a)?;
        let mut y = self.node(b)?;
        while x.depth > y.depth {
            x = &self.nodes[x.parent.expect("non-root has parent").0];
        }
        while y.depth > x.depth {
            y = &self.nodes[y.parent.expect("non-root has parent").0];
        }
        while x.id != y.id {
            x = &self.nodes[x.parent.expect("distinct nodes at depth 0").0];
            y = &self.nodes[y.parent.expect("distinct nodes at depth 0").0];
        }
        Ok(x.id)
    }

    /// Leaf indices strictly between two non-overlapping nodes, excluding
    /// punctuation. Argument order does not matter.
    pub fn path_leaves(&self, a: NodeId, b: NodeId) -> Result<Vec<usize>, TreeError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        if self.dominates(a, b) {
            return Err(TreeError::DominanceViolation { ancestor: a, descendant: b });
        }
        if self.dominates(b, a) {
            return Err(TreeError::DominanceViolation { ancestor: b, descendant: a });
        }
        let (first, second) = if na.span.start <= nb.span.start { (na, nb) } else { (nb, na) };
        Ok((first.span.end..second.span.start).filter(|&i| !self.nodes[self.leaves[i].0].is_punct()).collect())
    }

    /// Surface words linking two nodes through their lowest common ancestor.
    ///
    /// Since both nodes sit under the LCA and leaf spans are contiguous, the
    /// words strictly between the two spans are exactly the LCA-dominated ones.
    pub fn path_tokens(&self, a: NodeId, b: NodeId) -> Result<Vec<String>, TreeError> {
        Ok(self.path_leaves(a, b)?.into_iter().filter_map(|i| self.nodes[self.leaves[i].0].token.clone()).collect())
    }

    /// Tokens of every leaf under `id`.
    pub fn tokens_under(&self, id: NodeId) -> Vec<String> {
        let span = self.nodes[id.0].span;
        self.leaves_in(span).filter_map(|n| n.token.clone()).collect()
    }

    /// Canonical single-space bracketed rendering.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_node(NodeId(0), &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        let n = &self.nodes[id.0];
        out.push('(');
        out.push_str(&n.tag);
        if let Some(tok) = &n.token {
            out.push(' ');
            out.push_str(tok);
        }
        for &c in &n.children {
            out.push(' ');
            self.write_node(c, out);
        }
        out.push(')');
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

impl std::str::FromStr for ParseTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bracketed(s)
    }
}
