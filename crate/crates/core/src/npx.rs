//! Noun-phrase extraction and Intermediate Triples.
//!
//! NPs are pulled from the tree, chained pairwise in pre-order and linked by
//! the words on the path through their lowest common ancestor. Pairs that
//! straddle two branches of a coordinating node are re-linked to the nearest
//! NP outside the coordination instead.

use serde::Serialize;
use thiserror::Error;

use crate::artext::normalize;
use crate::ptree::{is_noun_tag, NodeId, ParseTree, Span, TreeError, TreeNode};

/// Quantifier, degree and listing words that may precede a head noun.
const QUANTIFIERS: &[&str] = &[
    "عدد",
    "اسماء",
    "اكثر",
    "اقل",
    "اهم",
    "اكبر",
    "اصغر",
    "ابرز",
    "اخطر",
    "اشهر",
    "معظم",
    "اغلب",
    "جميع",
    "كل",
    "بعض",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NpError {
    #[error("the parse tree contains no noun phrases")]
    NoNounPhrases,
    #[error("no head noun in `{phrase}`")]
    NoHeadFound { phrase: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Conjunction {
    And,
    Or,
}

impl Conjunction {
    pub fn from_token(token: &str) -> Self {
        if normalize(token) == "او" {
            Conjunction::Or
        } else {
            Conjunction::And
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NounPhrase {
    pub node: NodeId,
    pub preorder_pos: usize,
    /// Leaves covered, including any attached modifiers.
    pub span: Span,
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
    pub premodifiers: Vec<String>,
    /// Head words; several for a compound (iḍāfa) head.
    pub head: Vec<String>,
    pub postmodifiers: Vec<String>,
}

impl NounPhrase {
    fn from_node(tree: &ParseTree, node: &TreeNode) -> Self {
        let (tokens, tags) = tree.leaves_in(node.span).filter_map(|l| Some((l.token.clone()?, l.tag.clone()))).unzip();
        NounPhrase {
            node: node.id,
            preorder_pos: node.id.0,
            span: node.span,
            tokens,
            tags,
            premodifiers: Vec::new(),
            head: Vec::new(),
            postmodifiers: Vec::new(),
        }
    }

    /// Builds an unattached phrase from `(token, tag)` pairs.
    pub fn from_tagged(words: &[(&str, &str)]) -> Self {
        NounPhrase {
            node: NodeId(0),
            preorder_pos: 0,
            span: Span { start: 0, end: words.len() },
            tokens: words.iter().map(|(w, _)| w.to_string()).collect(),
            tags: words.iter().map(|(_, t)| t.to_string()).collect(),
            premodifiers: Vec::new(),
            head: Vec::new(),
            postmodifiers: Vec::new(),
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn head_text(&self) -> String {
        self.head.join(" ")
    }

    pub fn is_split(&self) -> bool {
        !self.head.is_empty()
    }
}

fn is_np_tag(tag: &str) -> bool {
    tag == "NP" || tag.starts_with("NP-")
}

fn is_degree_tag(tag: &str) -> bool {
    tag.ends_with("JJR") || tag.ends_with("JJS")
}

fn is_adjective_tag(tag: &str) -> bool {
    tag.contains("JJ") && !is_degree_tag(tag)
}

fn is_quantifier(token: &str) -> bool {
    QUANTIFIERS.contains(&normalize(token).as_str())
}

/// Noun leaves plus NP nodes whose leaves are all nouns, minus anything
/// contained in another result, in pre-order.
pub fn extract_nps(tree: &ParseTree) -> Result<Vec<NounPhrase>, NpError> {
    let candidates: Vec<&TreeNode> = tree
        .preorder()
        .iter()
        .filter(|n| {
            if n.is_leaf() {
                n.is_noun()
            } else {
                is_np_tag(&n.tag) && tree.leaves_in(n.span).all(TreeNode::is_noun)
            }
        })
        .collect();
    let nps: Vec<NounPhrase> = candidates
        .iter()
        .filter(|c| !candidates.iter().any(|o| o.id != c.id && tree.dominates(o.id, c.id)))
        .map(|n| NounPhrase::from_node(tree, n))
        .collect();
    if nps.is_empty() {
        return Err(NpError::NoNounPhrases);
    }
    Ok(nps)
}

/// Sliding window over the NP sequence.
pub fn pair_nps(nps: &[NounPhrase]) -> Vec<(&NounPhrase, &NounPhrase)> {
    nps.windows(2).map(|w| (&w[0], &w[1])).collect()
}

/// Widens each NP over adjacent degree words before it and adjectives after
/// it, staying inside the NP's parent constituent and off other NPs' leaves.
pub fn attach_modifiers(tree: &ParseTree, nps: &mut [NounPhrase]) {
    let covered: Vec<Span> = nps.iter().map(|np| np.span).collect();
    let free = |i: usize| !covered.iter().any(|s| s.contains_leaf(i));
    for np in nps.iter_mut() {
        let Ok(node) = tree.node(np.node) else { continue };
        let bounds = node.parent.and_then(|p| tree.node(p).ok()).map_or(node.span, |p| p.span);
        let mut span = np.span;
        while span.start > bounds.start && free(span.start - 1) {
            match tree.leaf(span.start - 1) {
                Some(l) if is_degree_tag(&l.tag) => span.start -= 1,
                _ => break,
            }
        }
        while span.end < bounds.end && free(span.end) {
            match tree.leaf(span.end) {
                Some(l) if is_adjective_tag(&l.tag) => span.end += 1,
                _ => break,
            }
        }
        if span != np.span {
            np.span = span;
            let (tokens, tags) = tree.leaves_in(span).filter_map(|l| Some((l.token.clone()?, l.tag.clone()))).unzip();
            np.tokens = tokens;
            np.tags = tags;
        }
    }
}

/// Splits an NP into `<pre-modifiers . head . post-modifiers>`.
///
/// Leading degree words and quantifiers are pre-modifiers as long as a noun
/// follows them. The head is the run of consecutive nouns starting at the
/// first remaining noun; everything after it is a post-modifier.
pub fn split_head_modifiers(np: &NounPhrase) -> Result<NounPhrase, NpError> {
    let words: Vec<(&str, &str)> = np
        .tokens
        .iter()
        .zip(np.tags.iter().map(String::as_str).chain(std::iter::repeat("")))
        .map(|(t, g)| (t.as_str(), g))
        .collect();
    let no_head = || NpError::NoHeadFound { phrase: np.text() };
    if words.is_empty() {
        return Err(no_head());
    }

    let mut i = 0;
    while i < words.len() {
        let (tok, tag) = words[i];
        let modifier = is_degree_tag(tag) || is_quantifier(tok);
        let noun_follows = words[i + 1..].iter().any(|(_, t)| is_noun_tag(t));
        if modifier && noun_follows {
            i += 1;
        } else {
            break;
        }
    }
    let head_start = (i..words.len()).find(|&k| is_noun_tag(words[k].1)).ok_or_else(no_head)?;
    let head_end = (head_start..words.len())
        .find(|&k| !is_noun_tag(words[k].1) || is_adjective_tag(words[k].1))
        .unwrap_or(words.len());

    let mut out = np.clone();
    out.premodifiers = np.tokens[..head_start].to_vec();
    out.head = np.tokens[head_start..head_end].to_vec();
    out.postmodifiers = np.tokens[head_end..].to_vec();
    Ok(out)
}

/// A node with a direct `CC` leaf child, and the branches it coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjunctiveHead {
    pub node: NodeId,
    pub token: String,
    pub kind: Conjunction,
    pub branches: Vec<NodeId>,
}

impl ConjunctiveHead {
    fn branch_of(&self, tree: &ParseTree, n: NodeId) -> Option<NodeId> {
        self.branches.iter().copied().find(|&b| tree.dominates(b, n))
    }
}

/// Every coordinating node, outermost first.
pub fn find_conjunctive_heads(tree: &ParseTree) -> Vec<ConjunctiveHead> {
    tree.preorder()
        .iter()
        .filter_map(|n| {
            let children: Vec<&TreeNode> = n.children.iter().filter_map(|&c| tree.node(c).ok()).collect();
            let cc = children.iter().find(|c| c.is_leaf() && c.tag == "CC")?;
            let token = cc.token.clone().unwrap_or_default();
            Some(ConjunctiveHead {
                node: n.id,
                kind: Conjunction::from_token(&token),
                token,
                branches: children
                    .iter()
                    .filter(|c| !(c.is_leaf() && (c.tag == "CC" || c.is_punct())))
                    .map(|c| c.id)
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntermediateTriple {
    pub subject: NounPhrase,
    /// Raw surface words; stop-words are only dropped at matching time.
    pub predicate_tokens: Vec<String>,
    /// Leaf indices the predicate words came from.
    pub predicate_leaves: Vec<usize>,
    pub object: NounPhrase,
    pub conjunction_origin: Option<Conjunction>,
    pub conjunctive_head: Option<NodeId>,
}

fn tokens_at(tree: &ParseTree, leaves: &[usize]) -> Vec<String> {
    leaves.iter().filter_map(|&i| tree.leaf(i).and_then(|l| l.token.clone())).collect()
}

fn between(tree: &ParseTree, first: &NounPhrase, second: &NounPhrase) -> Vec<usize> {
    (first.span.end..second.span.start).filter(|&i| tree.leaf(i).is_some_and(|l| !l.is_punct())).collect()
}

fn ordered<'a>(a: &'a NounPhrase, b: &'a NounPhrase) -> (&'a NounPhrase, &'a NounPhrase) {
    if a.preorder_pos <= b.preorder_pos {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds one triple per NP pair, re-linking pairs that cross coordinated
/// branches so that each branch hangs off the shared outer NP.
pub fn build_intermediate_triples(tree: &ParseTree, nps: &[NounPhrase]) -> Result<Vec<IntermediateTriple>, NpError> {
    let heads = find_conjunctive_heads(tree);
    let mut triples = Vec::new();
    let mut triggered: Vec<&ConjunctiveHead> = Vec::new();

    for (a, b) in pair_nps(nps) {
        if let Some(dom) = [(a, b), (b, a)].iter().find(|(x, y)| tree.dominates(x.node, y.node)) {
            return Err(TreeError::DominanceViolation { ancestor: dom.0.node, descendant: dom.1.node }.into());
        }
        let lca = tree.lca(a.node, b.node)?;
        let crossing = heads.iter().find(|h| {
            h.node == lca && {
                let (ba, bb) = (h.branch_of(tree, a.node), h.branch_of(tree, b.node));
                ba.is_some() && bb.is_some() && ba != bb
            }
        });
        if let Some(h) = crossing {
            if !triggered.iter().any(|t| t.node == h.node) {
                triggered.push(h);
            }
            continue;
        }
        let leaves = between(tree, a, b);
        triples.push(IntermediateTriple {
            subject: a.clone(),
            predicate_tokens: tokens_at(tree, &leaves),
            predicate_leaves: leaves,
            object: b.clone(),
            conjunction_origin: None,
            conjunctive_head: None,
        });
    }

    for h in triggered {
        let head_span = tree.node(h.node)?.span;
        let outside = |np: &&NounPhrase| !tree.dominates(h.node, np.node);
        let upper = nps
            .iter()
            .filter(outside)
            .rfind(|np| np.span.end <= head_span.start)
            .or_else(|| nps.iter().filter(outside).find(|np| np.span.start >= head_span.end));
        let Some(upper) = upper else { continue };

        for &branch in &h.branches {
            let Some(x) = nps.iter().find(|np| tree.dominates(branch, np.node)) else { continue };
            let branch_span = tree.node(branch)?.span;
            let (subject, object) = ordered(upper, x);
            // Words of sibling branches and the conjunction itself are skipped.
            let leaves: Vec<usize> = between(tree, subject, object)
                .into_iter()
                .filter(|&i| !head_span.contains_leaf(i) || branch_span.contains_leaf(i))
                .collect();
            let triple = IntermediateTriple {
                subject: subject.clone(),
                predicate_tokens: tokens_at(tree, &leaves),
                predicate_leaves: leaves,
                object: object.clone(),
                conjunction_origin: Some(h.kind),
                conjunctive_head: Some(h.node),
            };
            match triples
                .iter_mut()
                .find(|t| t.subject.node == triple.subject.node && t.object.node == triple.object.node)
            {
                Some(existing) => *existing = triple,
                None => triples.push(triple),
            }
        }
    }

    triples.sort_by_key(|t| (t.object.preorder_pos, t.subject.preorder_pos));
    Ok(triples)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ptree::parse_bracketed;

    pub const CURE: &str = "(S (WP ما) (NP (NN علاج)) (NP (DTNN المرض) (SBAR (WP الذي) \
        (S (VP (VBP يسمى) (NP (NN داء) (DTNN الملوك)))))) (PUNC ؟))";
    pub const CONJUNCTION: &str = "(S (WP ما) (NP (DTNN الأمراض) (SBAR (WP التي) (S (S (VP (VBP تصيب) \
        (NP (DTNN القلب)))) (CC و) (S (VP (VBP تسبب) (NP (NN ارتفاع) (NN ضغط) (DTNN الدم))))))) (PUNC ؟))";
    pub const UNION: &str = "(S (WP ما) (NP (DTNN الأمراض) (SBAR (WP الذي) (S (VP (VBP تصيب) \
        (NP (NP (DTNN القلب)) (CC أو) (NP (DTNN الرئتين))))))) (PUNC ؟))";

    fn texts(nps: &[NounPhrase]) -> Vec<String> {
        nps.iter().map(NounPhrase::text).collect()
    }

    fn np(words: &[(&str, &str)]) -> NounPhrase {
        NounPhrase::from_tagged(words)
    }

    #[test]
    fn cure_nps() {
        let t = parse_bracketed(CURE).unwrap();
        let nps = extract_nps(&t).unwrap();
        assert_eq!(texts(&nps), vec!["علاج", "المرض", "داء الملوك"]);
        // The two-word NP is kept as a node; its noun leaves are dropped.
        assert_eq!(t.node(nps[2].node).unwrap().tag, "NP");
        assert!(nps.windows(2).all(|w| w[0].preorder_pos < w[1].preorder_pos));
    }

    #[test]
    fn conjunction_nps() {
        let t = parse_bracketed(CONJUNCTION).unwrap();
        let nps = extract_nps(&t).unwrap();
        assert_eq!(texts(&nps), vec!["الأمراض", "القلب", "ارتفاع ضغط الدم"]);
    }

    #[test]
    fn single_noun_and_no_noun() {
        let t = parse_bracketed("(NP (NN علاج))").unwrap();
        assert_eq!(texts(&extract_nps(&t).unwrap()), vec!["علاج"]);
        let t = parse_bracketed("(S (WP ما) (PUNC ؟))").unwrap();
        assert_eq!(extract_nps(&t), Err(NpError::NoNounPhrases));
    }

    #[test]
    fn pairs_slide() {
        let t = parse_bracketed("(S (NN a) (VB x) (NN b) (VB y) (NN c) (VB z) (NN d))").unwrap();
        let nps = extract_nps(&t).unwrap();
        let pairs = pair_nps(&nps);
        // Window oracle: pair k is (k, k+1).
        assert_eq!(pairs.len(), nps.len() - 1);
        for (k, (a, b)) in pairs.iter().enumerate() {
            assert_eq!((a.node, b.node), (nps[k].node, nps[k + 1].node));
        }
        assert_eq!(pair_nps(&nps[..3]).len(), 2);
        assert!(pair_nps(&nps[..1]).is_empty());
    }

    #[test]
    fn conjunctive_heads() {
        let t = parse_bracketed(CONJUNCTION).unwrap();
        let heads = find_conjunctive_heads(&t);
        assert_eq!(heads.len(), 1);
        let h = &heads[0];
        assert_eq!(h.kind, Conjunction::And);
        assert_eq!(h.branches.len(), 2);
        let nps = extract_nps(&t).unwrap();
        assert!(t.dominates(h.node, nps[1].node) && t.dominates(h.node, nps[2].node));
        assert!(!t.dominates(h.node, nps[0].node));

        assert!(find_conjunctive_heads(&parse_bracketed(CURE).unwrap()).is_empty());
    }

    #[test]
    fn nested_conjunctive_heads_outermost_first() {
        let t = parse_bracketed("(S (NP (NP (NN a)) (CC و) (NP (NP (NN b)) (CC أو) (NP (NN c)))) (VB x))").unwrap();
        let heads = find_conjunctive_heads(&t);
        // Exhaustive scan oracle: every internal node with a CC child.
        let expected: Vec<NodeId> = t
            .preorder()
            .iter()
            .filter(|n| n.children.iter().any(|&c| t.node(c).unwrap().tag == "CC"))
            .map(|n| n.id)
            .collect();
        assert_eq!(heads.iter().map(|h| h.node).collect::<Vec<_>>(), expected);
        assert_eq!(heads.len(), 2);
        assert!(t.dominates(heads[0].node, heads[1].node));
        assert_eq!(heads[0].kind, Conjunction::And);
        assert_eq!(heads[1].kind, Conjunction::Or);
    }

    #[test]
    fn cure_triples() {
        let t = parse_bracketed(CURE).unwrap();
        let nps = extract_nps(&t).unwrap();
        let its = build_intermediate_triples(&t, &nps).unwrap();
        assert_eq!(its.len(), 2);
        assert_eq!(its[0].subject.text(), "علاج");
        assert!(its[0].predicate_tokens.is_empty());
        assert_eq!(its[0].object.text(), "المرض");
        assert_eq!(its[1].subject.text(), "المرض");
        assert_eq!(its[1].predicate_tokens, vec!["الذي", "يسمى"]);
        assert_eq!(its[1].object.text(), "داء الملوك");
        assert!(its.iter().all(|it| it.conjunction_origin.is_none()));
    }

    #[test]
    fn conjunction_triples_share_subject() {
        let t = parse_bracketed(CONJUNCTION).unwrap();
        let nps = extract_nps(&t).unwrap();
        let its = build_intermediate_triples(&t, &nps).unwrap();
        assert_eq!(its.len(), 2);
        assert!(its.iter().all(|it| it.subject.text() == "الأمراض"));
        assert!(its.iter().all(|it| it.conjunction_origin == Some(Conjunction::And)));
        assert_eq!(its[0].predicate_tokens, vec!["التي", "تصيب"]);
        assert_eq!(its[0].object.text(), "القلب");
        // The sibling branch and the conjunction are skipped on the second link.
        assert_eq!(its[1].predicate_tokens, vec!["التي", "تسبب"]);
        assert_eq!(its[1].object.text(), "ارتفاع ضغط الدم");
    }

    #[test]
    fn np_coordination_distributes_the_verb() {
        let t = parse_bracketed(UNION).unwrap();
        let nps = extract_nps(&t).unwrap();
        let its = build_intermediate_triples(&t, &nps).unwrap();
        assert_eq!(its.len(), 2);
        for it in &its {
            assert_eq!(it.subject.text(), "الأمراض");
            assert_eq!(it.predicate_tokens, vec!["الذي", "تصيب"]);
            assert_eq!(it.conjunction_origin, Some(Conjunction::Or));
        }
        assert_eq!(its[1].object.text(), "الرئتين");
    }

    #[test]
    fn adjacent_nps_give_empty_predicate() {
        let t = parse_bracketed("(S (NP (NN a)) (NP (NN b)))").unwrap();
        let nps = extract_nps(&t).unwrap();
        let its = build_intermediate_triples(&t, &nps).unwrap();
        assert_eq!(its.len(), 1);
        assert!(its[0].predicate_tokens.is_empty());
    }

    #[test]
    fn conjunction_after_its_upper_np() {
        // Three conjuncts, one outer NP: one triple per conjunct.
        let t = parse_bracketed("(S (NP (NN a)) (VP (VB x) (NP (NP (NN b)) (CC و) (NP (NN c)) (CC و) (NP (NN d)))))")
            .unwrap();
        let nps = extract_nps(&t).unwrap();
        let its = build_intermediate_triples(&t, &nps).unwrap();
        assert_eq!(its.len(), 3);
        assert!(its.iter().all(|it| it.subject.text() == "a" && it.predicate_tokens == ["x"]));
    }

    #[test]
    fn conjunction_before_its_upper_np() {
        let t = parse_bracketed("(S (NP (NP (NN b)) (CC و) (NP (NN c))) (VB x) (NP (NN a)))").unwrap();
        let nps = extract_nps(&t).unwrap();
        let its = build_intermediate_triples(&t, &nps).unwrap();
        assert_eq!(its.len(), 2);
        for it in &its {
            assert_eq!(it.object.text(), "a");
            assert_eq!(it.predicate_tokens, vec!["x"]);
            assert!(it.subject.preorder_pos < it.object.preorder_pos);
        }
    }

    #[test]
    fn split_examples() {
        let s = split_head_modifiers(&np(&[("أكثر", "JJR"), ("الأمراض", "DTNNS"), ("المعدية", "DTJJ")])).unwrap();
        assert_eq!(s.premodifiers, vec!["أكثر"]);
        assert_eq!(s.head, vec!["الأمراض"]);
        assert_eq!(s.postmodifiers, vec!["المعدية"]);

        let s = split_head_modifiers(&np(&[("علاج", "NN")])).unwrap();
        assert!(s.premodifiers.is_empty() && s.postmodifiers.is_empty());
        assert_eq!(s.head_text(), "علاج");

        let s = split_head_modifiers(&np(&[("المرض", "DTNN"), ("المعدي", "DTJJ")])).unwrap();
        assert_eq!((s.head_text(), s.postmodifiers.clone()), ("المرض".into(), vec!["المعدي".into()]));
    }

    #[test]
    fn split_compound_and_quantifier_heads() {
        let s = split_head_modifiers(&np(&[("ارتفاع", "NN"), ("ضغط", "NN"), ("الدم", "DTNN")])).unwrap();
        assert_eq!(s.head_text(), "ارتفاع ضغط الدم");
        // Quantifier noun before the head.
        let s = split_head_modifiers(&np(&[("عدد", "NN"), ("الأمراض", "DTNNS")])).unwrap();
        assert_eq!((s.premodifiers.clone(), s.head_text()), (vec!["عدد".into()], "الأمراض".into()));
        // A lone quantifier is its own head.
        assert_eq!(split_head_modifiers(&np(&[("عدد", "NN")])).unwrap().head_text(), "عدد");
        // Prepositional post-modifier.
        let s = split_head_modifiers(&np(&[("مدينة", "NN"), ("في", "IN"), ("القاهرة", "NNP")])).unwrap();
        assert_eq!((s.head_text(), s.postmodifiers.len()), ("مدينة".into(), 2));
    }

    #[test]
    fn split_without_noun_fails() {
        assert_eq!(
            split_head_modifiers(&np(&[("المعدية", "DTJJ")])),
            Err(NpError::NoHeadFound { phrase: "المعدية".into() })
        );
    }

    #[test]
    fn modifiers_attach_inside_parent() {
        let t = parse_bracketed("(S (WP ما) (NP (JJS أكثر) (DTNNS الأمراض) (DTJJ المعدية)) (NN انتشارا))").unwrap();
        let mut nps = extract_nps(&t).unwrap();
        attach_modifiers(&t, &mut nps);
        assert_eq!(nps[0].text(), "أكثر الأمراض المعدية");
        assert_eq!(nps[1].text(), "انتشارا");
        let s = split_head_modifiers(&nps[0]).unwrap();
        assert_eq!(s.head_text(), "الأمراض");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const TAGS: &[&str] = &["NN", "DTNN", "JJ", "VB", "CC", "IN"];

        fn tree_text() -> impl Strategy<Value = String> {
            let leaf = (0..TAGS.len(), 0..20u8).prop_map(|(t, w)| format!("({} w{w})", TAGS[t]));
            leaf.prop_recursive(4, 24, 4, |inner| {
                (prop_oneof![Just("NP"), Just("VP"), Just("S")], proptest::collection::vec(inner, 1..4))
                    .prop_map(|(tag, kids)| format!("({tag} {})", kids.join(" ")))
            })
        }

        proptest! {
            #[test]
            fn extracted_nps_never_nest(text in tree_text()) {
                let t = parse_bracketed(&text).unwrap();
                if let Ok(nps) = extract_nps(&t) {
                    for a in &nps {
                        for b in &nps {
                            prop_assert!(a.node == b.node || !a.span.contains(&b.span));
                        }
                    }
                }
            }

            #[test]
            fn predicates_lie_between_their_nps(text in tree_text()) {
                let t = parse_bracketed(&text).unwrap();
                let Ok(nps) = extract_nps(&t) else { return Ok(()) };
                let its = build_intermediate_triples(&t, &nps).unwrap();
                let tokens = t.leaf_tokens();
                for it in its {
                    prop_assert!(it.subject.preorder_pos < it.object.preorder_pos);
                    prop_assert!(it.predicate_leaves.windows(2).all(|w| w[0] < w[1]));
                    for &i in &it.predicate_leaves {
                        prop_assert!(it.subject.span.end <= i && i < it.object.span.start);
                    }
                    let words: Vec<&str> = it.predicate_leaves.iter().map(|&i| tokens[i]).collect();
                    prop_assert_eq!(words, it.predicate_tokens.iter().map(String::as_str).collect::<Vec<_>>());
                    if it.conjunctive_head.is_none() {
                        // Plain links are contiguous.
                        prop_assert!(it.predicate_leaves.windows(2).all(|w| w[1] == w[0] + 1));
                    }
                }
            }

            #[test]
            fn split_preserves_tokens(words in proptest::collection::vec((0..TAGS.len(), 0..9u8), 1..6)) {
                let pairs: Vec<(String, &str)> = words.iter().map(|(t, w)| (format!("w{w}"), TAGS[*t])).collect();
                let refs: Vec<(&str, &str)> = pairs.iter().map(|(w, t)| (w.as_str(), *t)).collect();
                let phrase = NounPhrase::from_tagged(&refs);
                if let Ok(s) = split_head_modifiers(&phrase) {
                    let rebuilt: Vec<String> =
                        s.premodifiers.iter().chain(&s.head).chain(&s.postmodifiers).cloned().collect();
                    prop_assert_eq!(rebuilt, phrase.tokens);
                    prop_assert!(!s.head.is_empty());
                }
            }
        }
    }
}
