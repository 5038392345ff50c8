//! Embedded triple store with three index orderings.
//!
//! Terms are interned to integer ids; the SPO, POS and OSP orderings are
//! `BTreeSet`s of id triples so that any pattern with a bound leading
//! position becomes a range scan. All three indexes always contain
//! exactly the stored triples; which one `match` uses is observable only
//! through timing.

use std::collections::{BTreeMap, BTreeSet};

use crate::rdf::{Graph, Iri, Term, Triple};

/// A query variable (written `?name`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "?{}", self.0)
    }
}

/// A pattern position: a concrete term or a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Term(Term),
    Var(Variable),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(Variable::new(name))
    }

    fn as_term(&self) -> Option<&Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }
}

/// A triple pattern. Invariant: the predicate position is an IRI or a
/// variable (never a literal, never a Skolem mint).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    /// Panics if the predicate position holds a literal or Skolem term
    /// (a programming error; the query parser can never produce one).
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        if let PatternTerm::Term(t) = &predicate {
            assert!(
                matches!(t, Term::Iri(_)),
                "pattern predicate must be an IRI or a variable"
            );
        }
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    /// Variables of this pattern in subject, predicate, object order.
    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(|p| match p {
                PatternTerm::Var(v) => Some(v),
                PatternTerm::Term(_) => None,
            })
    }
}

/// Indexed triple store.
#[derive(Debug, Default, Clone)]
pub struct TripleStore {
    terms: Vec<Term>,
    ids: BTreeMap<Term, u32>,
    spo: BTreeSet<(u32, u32, u32)>,
    pos: BTreeSet<(u32, u32, u32)>,
    osp: BTreeSet<(u32, u32, u32)>,
}

impl TripleStore {
    pub fn new() -> Self {
        TripleStore::default()
    }

    /// Build a store from a graph.
    pub fn from_graph(g: &Graph) -> Self {
        let mut store = TripleStore::new();
        for t in g.iter() {
            store.insert(t.clone());
        }
        store
    }

    fn intern(&mut self, t: Term) -> u32 {
        if let Some(&id) = self.ids.get(&t) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(t.clone());
        self.ids.insert(t, id);
        id
    }

    fn lookup(&self, t: &Term) -> Option<u32> {
        self.ids.get(t).copied()
    }

    /// Insert a triple into all three indexes atomically.
    /// Returns true iff the triple was absent.
    pub fn insert(&mut self, t: Triple) -> bool {
        let s = self.intern(Term::Iri(t.subject));
        let p = self.intern(Term::Iri(t.predicate));
        let o = self.intern(t.object);
        if !self.spo.insert((s, p, o)) {
            return false;
        }
        self.pos.insert((p, o, s));
        self.osp.insert((o, s, p));
        true
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    fn triple_of(&self, s: u32, p: u32, o: u32) -> Triple {
        let subject = self.terms[s as usize]
            .as_iri()
            .expect("stored subject is an IRI")
            .clone();
        let predicate = self.terms[p as usize]
            .as_iri()
            .expect("stored predicate is an IRI")
            .clone();
        Triple::new(subject, predicate, self.terms[o as usize].clone())
    }

    /// All stored triples (via the SPO index).
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&(s, p, o)| self.triple_of(s, p, o))
    }

    /// Every distinct term occurring in the store (subjects, predicates
    /// and objects); used by the brute-force query oracle.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter()
    }

    /// Exactly the triples unifying with `p` (repeated variables must
    /// bind equal terms). The index with the longest bound prefix is
    /// used; results are position-independent.
    pub fn match_pattern(&self, pattern: &TriplePattern) -> BTreeSet<Triple> {
        // Resolve bound positions to interned ids; a bound term that was
        // never interned cannot match anything.
        let mut bound = [None::<u32>; 3];
        for (i, pos) in [&pattern.subject, &pattern.predicate, &pattern.object]
            .into_iter()
            .enumerate()
        {
            if let Some(term) = pos.as_term() {
                match self.lookup(term) {
                    Some(id) => bound[i] = Some(id),
                    None => return BTreeSet::new(),
                }
            }
        }
        let [s, p, o] = bound;

        let candidates: Vec<(u32, u32, u32)> = match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                if self.spo.contains(&(s, p, o)) {
                    vec![(s, p, o)]
                } else {
                    vec![]
                }
            }
            (Some(s), Some(p), None) => self
                .spo
                .range((s, p, u32::MIN)..=(s, p, u32::MAX))
                .copied()
                .collect(),
            (Some(s), None, _) => self
                .spo
                .range((s, u32::MIN, u32::MIN)..=(s, u32::MAX, u32::MAX))
                .filter(|&&(_, _, oo)| o.is_none_or(|want| oo == want))
                .copied()
                .collect(),
            (None, Some(p), Some(o)) => self
                .pos
                .range((p, o, u32::MIN)..=(p, o, u32::MAX))
                .map(|&(p, o, s)| (s, p, o))
                .collect(),
            (None, Some(p), None) => self
                .pos
                .range((p, u32::MIN, u32::MIN)..=(p, u32::MAX, u32::MAX))
                .map(|&(p, o, s)| (s, p, o))
                .collect(),
            (None, None, Some(o)) => self
                .osp
                .range((o, u32::MIN, u32::MIN)..=(o, u32::MAX, u32::MAX))
                .map(|&(o, s, p)| (s, p, o))
                .collect(),
            (None, None, None) => self.spo.iter().copied().collect(),
        };

        // Repeated-variable unification: same variable name in several
        // positions requires equal terms there.
        let vars = [&pattern.subject, &pattern.predicate, &pattern.object];
        let same = |a: usize, b: usize| -> bool {
            match (vars[a], vars[b]) {
                (PatternTerm::Var(x), PatternTerm::Var(y)) => x == y,
                _ => false,
            }
        };
        let (sp, so, po) = (same(0, 1), same(0, 2), same(1, 2));

        candidates
            .into_iter()
            .filter(|&(s, p, o)| {
                (!sp || self.terms[s as usize] == self.terms[p as usize])
                    && (!so || self.terms[s as usize] == self.terms[o as usize])
                    && (!po || self.terms[p as usize] == self.terms[o as usize])
            })
            .map(|(s, p, o)| self.triple_of(s, p, o))
            .collect()
    }

    /// Match scanning one specific index linearly (test instrumentation
    /// for the cross-index coherence oracle).
    #[doc(hidden)]
    pub fn match_via_index(&self, pattern: &TriplePattern, index: IndexChoice) -> BTreeSet<Triple> {
        let triples: Vec<(u32, u32, u32)> = match index {
            IndexChoice::Spo => self.spo.iter().copied().collect(),
            IndexChoice::Pos => self.pos.iter().map(|&(p, o, s)| (s, p, o)).collect(),
            IndexChoice::Osp => self.osp.iter().map(|&(o, s, p)| (s, p, o)).collect(),
        };
        triples
            .into_iter()
            .map(|(s, p, o)| self.triple_of(s, p, o))
            .filter(|t| unifies(pattern, t))
            .collect()
    }
}

/// Which index to traverse in [`TripleStore::match_via_index`].
#[derive(Debug, Clone, Copy)]
pub enum IndexChoice {
    Spo,
    Pos,
    Osp,
}

/// Does `t` unify with `pattern` (including repeated-variable equality)?
pub fn unifies(pattern: &TriplePattern, t: &Triple) -> bool {
    let actual = [
        Term::Iri(t.subject.clone()),
        Term::Iri(t.predicate.clone()),
        t.object.clone(),
    ];
    let positions = [&pattern.subject, &pattern.predicate, &pattern.object];
    let mut bindings: BTreeMap<&Variable, &Term> = BTreeMap::new();
    for (pos, term) in positions.into_iter().zip(actual.iter()) {
        match pos {
            PatternTerm::Term(want) => {
                if want != term {
                    return false;
                }
            }
            PatternTerm::Var(v) => match bindings.get(v) {
                Some(&prev) if prev != term => return false,
                Some(_) => {}
                None => {
                    bindings.insert(v, term);
                }
            },
        }
    }
    true
}

/// Convenience: IRI pattern term.
pub fn pt_iri(i: Iri) -> PatternTerm {
    PatternTerm::Term(Term::Iri(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{vocab, Literal};

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(iri(s), iri(p), Term::iri(iri(o)))
    }

    fn patient_fixture() -> TripleStore {
        // 5 triples, 2 typed patients.
        let mut st = TripleStore::new();
        st.insert(t("http://d/p1", vocab::RDF_TYPE, "http://v#Patient"));
        st.insert(t("http://d/p2", vocab::RDF_TYPE, "http://v#Patient"));
        st.insert(t("http://d/w1", vocab::RDF_TYPE, "http://v#Ward"));
        st.insert(t("http://d/p1", "http://v#inWard", "http://d/w1"));
        st.insert(Triple::new(
            iri("http://d/p2"),
            iri("http://v#age"),
            Term::literal(Literal::string("44")),
        ));
        st
    }

    #[test]
    fn insert_is_idempotent() {
        let mut st = TripleStore::new();
        let x = t("http://s", "http://p", "http://o");
        assert!(st.insert(x.clone()));
        assert!(!st.insert(x));
        assert_eq!(st.len(), 1);
    }

    #[test]
    fn insert_n_distinct() {
        let mut st = TripleStore::new();
        for i in 0..7 {
            assert!(st.insert(t(&format!("http://s/{i}"), "http://p", "http://o")));
        }
        assert_eq!(st.len(), 7);
    }

    #[test]
    fn match_type_pattern_brute_force_oracle() {
        // Oracle: linear scan with `unifies` over all stored triples.
        let st = patient_fixture();
        let pattern = TriplePattern::new(
            PatternTerm::var("x"),
            pt_iri(iri(vocab::RDF_TYPE)),
            pt_iri(iri("http://v#Patient")),
        );
        let got = st.match_pattern(&pattern);
        let want: BTreeSet<Triple> = st.iter().filter(|t| unifies(&pattern, t)).collect();
        assert_eq!(got, want);
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn match_fully_bound_singleton() {
        let st = patient_fixture();
        let pattern = TriplePattern::new(
            pt_iri(iri("http://d/p1")),
            pt_iri(iri("http://v#inWard")),
            pt_iri(iri("http://d/w1")),
        );
        assert_eq!(st.match_pattern(&pattern).len(), 1);
    }

    #[test]
    fn match_all_variables_returns_entire_graph() {
        let st = patient_fixture();
        let pattern = TriplePattern::new(
            PatternTerm::var("s"),
            PatternTerm::var("p"),
            PatternTerm::var("o"),
        );
        assert_eq!(st.match_pattern(&pattern).len(), st.len());
    }

    #[test]
    fn match_absent_bound_term_is_empty() {
        let st = patient_fixture();
        let pattern = TriplePattern::new(
            pt_iri(iri("http://nowhere/x")),
            PatternTerm::var("p"),
            PatternTerm::var("o"),
        );
        assert!(st.match_pattern(&pattern).is_empty());
    }

    #[test]
    fn match_repeated_variable_requires_equal_terms() {
        let mut st = TripleStore::new();
        st.insert(t("http://a", "http://p", "http://a"));
        st.insert(t("http://a", "http://p", "http://b"));
        let pattern = TriplePattern::new(
            PatternTerm::var("x"),
            pt_iri(iri("http://p")),
            PatternTerm::var("x"),
        );
        let got = st.match_pattern(&pattern);
        assert_eq!(got.len(), 1);
        assert_eq!(got.iter().next().unwrap().object, Term::iri(iri("http://a")));
    }

    #[test]
    fn indexes_agree_on_random_stores() {
        // Deterministic pseudo-random insert sequence; all index
        // traversals must yield identical match sets.
        let mut st = TripleStore::new();
        let mut seed = 0x2545F491u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..120 {
            let s = format!("http://s/{}", next() % 9);
            let p = format!("http://p/{}", next() % 5);
            let o = format!("http://o/{}", next() % 11);
            st.insert(t(&s, &p, &o));
        }
        let patterns = [
            TriplePattern::new(PatternTerm::var("s"), PatternTerm::var("p"), PatternTerm::var("o")),
            TriplePattern::new(pt_iri(iri("http://s/3")), PatternTerm::var("p"), PatternTerm::var("o")),
            TriplePattern::new(PatternTerm::var("s"), pt_iri(iri("http://p/2")), PatternTerm::var("o")),
            TriplePattern::new(PatternTerm::var("s"), PatternTerm::var("p"), pt_iri(iri("http://o/7"))),
            TriplePattern::new(pt_iri(iri("http://s/1")), pt_iri(iri("http://p/0")), PatternTerm::var("o")),
        ];
        for pattern in &patterns {
            let fast = st.match_pattern(pattern);
            for idx in [IndexChoice::Spo, IndexChoice::Pos, IndexChoice::Osp] {
                assert_eq!(fast, st.match_via_index(pattern, idx));
            }
        }
    }

    #[test]
    #[should_panic(expected = "pattern predicate must be an IRI")]
    fn literal_predicate_is_rejected() {
        TriplePattern::new(
            PatternTerm::var("s"),
            PatternTerm::Term(Term::literal(Literal::string("no"))),
            PatternTerm::var("o"),
        );
    }
}
