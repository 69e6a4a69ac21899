use arsparql::ptree::{parse_bracketed, NodeId};
use arsparql::sparqlgen::{
    canonical_form, canonicalize, parse_query, serialize, Expression, Pattern, QueryTerm, SparqlQuery, TriplePattern,
};
use arsparql::vocab::PrefixMap;
use proptest::prelude::*;

const NS: &str = "http://example.org/diseases#";

fn tree_text() -> impl Strategy<Value = String> {
    let leaf = ("[A-Z]{2,4}", "[a-zء-ي]{1,4}").prop_map(|(t, w)| format!("({t} {w})"));
    leaf.prop_recursive(4, 24, 4, |inner| {
        ("[A-Z]{2,3}", prop::collection::vec(inner, 1..4)).prop_map(|(t, cs)| format!("({t} {})", cs.join(" ")))
    })
}

fn term() -> impl Strategy<Value = QueryTerm> {
    prop_oneof![
        prop::sample::select(vec!["target", "a", "b", "c"]).prop_map(|v| QueryTerm::Var(v.into())),
        prop::sample::select(vec!["Cure", "Disease", "Heart", "cures", "infects"])
            .prop_map(|l| QueryTerm::Iri(format!("{NS}{l}"))),
        "[a-z\"\\\\ ]{0,5}".prop_map(QueryTerm::Literal),
    ]
}

fn triple() -> impl Strategy<Value = Pattern> {
    (term(), prop::sample::select(vec!["cures", "infects", "hasName"]), term()).prop_map(|(s, p, o)| {
        let s = if matches!(s, QueryTerm::Literal(_)) { QueryTerm::Var("target".into()) } else { s };
        Pattern::Triple(TriplePattern::new(s, QueryTerm::Iri(format!("{NS}{p}")), o))
    })
}

fn pattern() -> impl Strategy<Value = Pattern> {
    let filter = prop_oneof![
        prop::sample::select(vec!["a", "b"]).prop_map(|v| Pattern::Filter(Expression::NotBound(v.into()))),
        (term(), term()).prop_map(|(a, b)| Pattern::Filter(Expression::Equals(a, b))),
    ];
    let base = prop_oneof![4 => triple(), 1 => filter];
    base.prop_recursive(2, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Pattern::Optional),
            (prop::collection::vec(inner.clone(), 1..3), prop::collection::vec(inner, 1..3))
                .prop_map(|(l, r)| Pattern::Union(l, r)),
        ]
    })
}

fn query() -> impl Strategy<Value = SparqlQuery> {
    prop::collection::vec(pattern(), 0..5).prop_map(|patterns| SparqlQuery { select: vec!["target".into()], patterns })
}

fn prefixes() -> PrefixMap {
    let mut p = PrefixMap::default();
    p.insert("", NS);
    p
}

fn brute_lca(parents: &[Option<usize>], a: usize, b: usize) -> usize {
    let mut up = vec![a];
    while let Some(p) = parents[*up.last().unwrap()] {
        up.push(p);
    }
    let mut x = b;
    loop {
        if up.contains(&x) {
            return x;
        }
        x = parents[x].unwrap();
    }
}

fn mirror(p: &Pattern) -> Pattern {
    match p {
        Pattern::Union(l, r) => Pattern::Union(r.iter().map(mirror).collect(), l.iter().map(mirror).collect()),
        Pattern::Optional(inner) => Pattern::Optional(inner.iter().rev().map(mirror).collect()),
        other => other.clone(),
    }
}

proptest! {
    #[test]
    fn tree_serialization_is_a_fixpoint(text in tree_text()) {
        let once = parse_bracketed(&text).unwrap().to_bracketed();
        prop_assert_eq!(parse_bracketed(&once).unwrap().to_bracketed(), once);
    }

    #[test]
    fn lca_matches_parent_walk(text in tree_text(), seed in any::<u64>()) {
        let tree = parse_bracketed(&text).unwrap();
        let parents: Vec<Option<usize>> = tree.preorder().iter().map(|n| n.parent.map(|p| p.0)).collect();
        let n = parents.len() as u64;
        let (a, b) = ((seed % n) as usize, ((seed / n) % n) as usize);
        prop_assert_eq!(tree.lca(NodeId(a), NodeId(b)).unwrap().0, brute_lca(&parents, a, b));
    }

    #[test]
    fn sparql_round_trip(q in query()) {
        let p = prefixes();
        let text = serialize(&q, &p);
        let again = serialize(&parse_query(&text, &PrefixMap::empty()).unwrap(), &p);
        prop_assert_eq!(again, text);
    }

    #[test]
    fn canonical_form_ignores_names_and_order(q in query(), salt in "[a-z]{1,3}") {
        let reference = canonical_form(&q);
        let renamed = q.rename_variables(&|v| if v == "target" { "t".into() } else { format!("{salt}_{v}") });
        prop_assert_eq!(&canonicalize(&serialize(&renamed, &prefixes())).unwrap(), &reference);
        let reordered = SparqlQuery {
            select: q.select.clone(),
            patterns: q.patterns.iter().rev().map(mirror).collect(),
        };
        prop_assert_eq!(canonical_form(&reordered), reference);
    }
}
