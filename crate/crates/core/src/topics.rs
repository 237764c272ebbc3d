//! Entity-like topic vectors for users and items, and the diversity ordering.
//!
//! The default extractor is rule based: hashtags plus runs of capitalized
//! words. An annotation file (`scope,key,entity`) can replace it entirely.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::{normalize_url, ShareTable};
use crate::error::{Error, Result};
use crate::graph::{ItemId, UserId};
use crate::recommend::{tie_key, Factor, RankedList};
use crate::scalar::Scalar;

/// Sparse term-frequency vector; stored weights are positive.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TopicVector<T> {
    terms: BTreeMap<String, T>,
}

impl<T: Scalar> TopicVector<T> {
    pub fn new() -> Self {
        TopicVector { terms: BTreeMap::new() }
    }

    pub fn from_terms<S: Into<String>>(terms: impl IntoIterator<Item = (S, T)>) -> Self {
        let mut v = Self::new();
        for (t, w) in terms {
            v.add(t, w);
        }
        v
    }

    pub fn add(&mut self, term: impl Into<String>, weight: T) {
        if weight > T::zero() {
            *self.terms.entry(term.into()).or_insert_with(T::zero) += weight;
        }
    }

    pub fn extend(&mut self, other: &TopicVector<T>) {
        for (t, &w) in &other.terms {
            self.add(t.clone(), w);
        }
    }

    pub fn get(&self, term: &str) -> Option<T> {
        self.terms.get(term).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.terms.iter().map(|(t, &w)| (t.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm(&self) -> T {
        self.terms.values().map(|&w| w * w).sum::<T>().sqrt()
    }

    pub fn scaled(&self, factor: T) -> TopicVector<T> {
        TopicVector::from_terms(self.terms.iter().map(|(t, &w)| (t.clone(), w * factor)))
    }
}

/// Source of topic entities for a piece of text.
pub trait TopicExtractor: Send + Sync {
    fn entities(&self, text: &str) -> Vec<String>;
}

/// Hashtags (lowercased, `#` stripped) and maximal runs of capitalized words
/// (lowercased, joined by a space). A capitalized word that opens a sentence
/// only counts when the next word continues the run.
#[derive(Clone, Copy, Debug, Default)]
pub struct RuleBasedExtractor;

fn trim_word(s: &str) -> &str {
    s.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
        .trim_matches(|c: char| c == '\'' || c == '-')
}

impl TopicExtractor for RuleBasedExtractor {
    fn entities(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut run: Vec<String> = Vec::new();
        let mut run_opened_sentence = false;
        let flush = |run: &mut Vec<String>, opened: &mut bool, out: &mut Vec<String>| {
            if !(run.len() == 1 && *opened) && !run.is_empty() {
                out.push(run.join(" "));
            }
            run.clear();
            *opened = false;
        };
        let mut sentence_start = true;
        for raw in text.split_whitespace() {
            let tail = raw.trim_end_matches(['"', '\'', ')', ']', '’', '”']);
            let ends_sentence = tail.ends_with(['.', '!', '?']);
            let breaks_run = ends_sentence || tail.ends_with([',', ';', ':']);

            if let Some(tag) = raw.strip_prefix('#') {
                flush(&mut run, &mut run_opened_sentence, &mut out);
                let tag: String = tag.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
                if !tag.is_empty() {
                    out.push(tag.to_lowercase());
                }
            } else if raw.starts_with('@') || raw.contains("://") || raw.starts_with("www.") {
                flush(&mut run, &mut run_opened_sentence, &mut out);
            } else {
                let word = trim_word(raw);
                let capitalized = word.chars().next().is_some_and(char::is_uppercase);
                if capitalized {
                    if run.is_empty() {
                        run_opened_sentence = sentence_start;
                    }
                    run.push(word.to_lowercase());
                } else {
                    flush(&mut run, &mut run_opened_sentence, &mut out);
                }
            }
            if breaks_run {
                flush(&mut run, &mut run_opened_sentence, &mut out);
            }
            sentence_start = ends_sentence;
        }
        flush(&mut run, &mut run_opened_sentence, &mut out);
        out
    }
}

/// Topic vector of a set of texts under the default rules.
pub fn extract_topics<T: Scalar>(texts: &[&str]) -> TopicVector<T> {
    extract_with(&RuleBasedExtractor, texts)
}

pub fn extract_with<T: Scalar>(extractor: &dyn TopicExtractor, texts: &[&str]) -> TopicVector<T> {
    let mut v = TopicVector::new();
    for text in texts {
        for e in extractor.entities(text) {
            v.add(e, T::one());
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scope {
    User,
    Item,
}

impl Scope {
    fn parse(s: &str) -> Option<Scope> {
        match s {
            "user" => Some(Scope::User),
            "item" => Some(Scope::Item),
            _ => None,
        }
    }
}

/// Free text keyed by user or item, read from `scope,key,text`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TextCorpus {
    pub users: BTreeMap<UserId, Vec<String>>,
    pub items: BTreeMap<ItemId, Vec<String>>,
}

/// Entities keyed by user or item, read from `scope,key,entity`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Annotations {
    pub users: BTreeMap<UserId, Vec<String>>,
    pub items: BTreeMap<ItemId, Vec<String>>,
}

fn read_scoped(path: &Path, value_column: &str) -> Result<Vec<(Scope, String, String)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["scope", "key", value_column] {
        return Err(Error::Malformed {
            path: path.to_owned(),
            line: 1,
            message: format!("expected header `scope,key,{value_column}`"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let scope = Scope::parse(&rec[0]).ok_or_else(|| Error::Malformed {
            path: path.to_owned(),
            line,
            message: format!("scope `{}` is neither `user` nor `item`", &rec[0]),
        })?;
        let key = match scope {
            Scope::User => rec[1].to_owned(),
            Scope::Item => normalize_url(&rec[1]).map(|i| i.to_string()).unwrap_or_default(),
        };
        if key.is_empty() {
            return Err(Error::Malformed {
                path: path.to_owned(),
                line,
                message: "empty key".into(),
            });
        }
        rows.push((scope, key, rec[2].to_owned()));
    }
    Ok(rows)
}

impl TextCorpus {
    pub fn load(path: &Path) -> Result<Self> {
        let mut corpus = TextCorpus::default();
        for (scope, key, text) in read_scoped(path, "text")? {
            match scope {
                Scope::User => corpus.users.entry(key.into()).or_default().push(text),
                Scope::Item => corpus.items.entry(key.into()).or_default().push(text),
            }
        }
        Ok(corpus)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let err = |e| Error::csv(path, e);
        w.write_record(["scope", "key", "text"]).map_err(err)?;
        for (u, texts) in &self.users {
            for t in texts {
                w.write_record(["user", u.as_str(), t]).map_err(err)?;
            }
        }
        for (i, texts) in &self.items {
            for t in texts {
                w.write_record(["item", i.as_str(), t]).map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl Annotations {
    pub fn load(path: &Path) -> Result<Self> {
        let mut ann = Annotations::default();
        for (scope, key, entity) in read_scoped(path, "entity")? {
            match scope {
                Scope::User => ann.users.entry(key.into()).or_default().push(entity),
                Scope::Item => ann.items.entry(key.into()).or_default().push(entity),
            }
        }
        Ok(ann)
    }
}

/// Topic vectors for every user and item with any text or annotation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopicModel<T> {
    pub users: BTreeMap<UserId, TopicVector<T>>,
    pub items: BTreeMap<ItemId, TopicVector<T>>,
}

impl<T: Scalar> TopicModel<T> {
    pub fn user(&self, user: &str) -> Option<&TopicVector<T>> {
        self.users.get(user)
    }

    pub fn item(&self, item: &str) -> Option<&TopicVector<T>> {
        self.items.get(item)
    }
}

fn counted<T: Scalar>(entities: &[String]) -> TopicVector<T> {
    TopicVector::from_terms(entities.iter().map(|e| (e.clone(), T::one())))
}

/// Item vectors come from item text; user vectors from the user's own text
/// plus the vectors of every item they shared. With `annotations`, entities
/// are taken from the file and the extractor is not consulted.
pub fn build_topic_model<T: Scalar>(
    corpus: &TextCorpus,
    shares: &ShareTable,
    annotations: Option<&Annotations>,
    extractor: &dyn TopicExtractor,
) -> TopicModel<T> {
    let mut model = TopicModel::<T>::default();
    match annotations {
        Some(ann) => {
            for (item, ents) in &ann.items {
                model.items.insert(item.clone(), counted(ents));
            }
            for (user, ents) in &ann.users {
                model.users.insert(user.clone(), counted(ents));
            }
        }
        None => {
            for (item, texts) in &corpus.items {
                let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
                model.items.insert(item.clone(), extract_with(extractor, &refs));
            }
            for (user, texts) in &corpus.users {
                let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
                model.users.insert(user.clone(), extract_with(extractor, &refs));
            }
        }
    }
    let mut sharers: BTreeMap<&UserId, Vec<&ItemId>> = BTreeMap::new();
    for r in shares.records() {
        sharers.entry(&r.user).or_default().push(&r.item);
    }
    for (user, items) in sharers {
        let mut v = model.users.get(user).cloned().unwrap_or_default();
        for item in items {
            if let Some(tv) = model.items.get(item.as_str()) {
                v.extend(tv);
            }
        }
        if !v.is_empty() {
            model.users.insert(user.clone(), v);
        }
    }
    model
}

/// Cosine similarity, 0 when either vector is empty.
pub fn cosine_similarity<T: Scalar>(a: &TopicVector<T>, b: &TopicVector<T>) -> T {
    if a.is_empty() || b.is_empty() {
        return T::zero();
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: T = small
        .terms
        .iter()
        .filter_map(|(t, &w)| large.terms.get(t).map(|&v| w * v))
        .sum();
    let sim = dot / (a.norm() * b.norm());
    sim.max(T::zero()).min(T::one())
}

/// Items by ascending similarity to the user, ties by item id. An item with
/// no vector is treated as empty.
pub fn diversity_scores<T: Scalar>(user: &TopicVector<T>, items: &[(ItemId, TopicVector<T>)]) -> (RankedList, Vec<T>) {
    let mut scored: Vec<(&ItemId, T)> = items.iter().map(|(id, v)| (id, cosine_similarity(user, v))).collect();
    scored.sort_by(|a, b| tie_key(a.1).total_cmp(&tie_key(b.1)).then_with(|| a.0.cmp(b.0)));
    let sims = scored.iter().map(|s| s.1).collect();
    let list = RankedList::new(Factor::Diversity, scored.into_iter().map(|s| s.0.clone()).collect());
    (list, sims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(v: &TopicVector<f64>) -> Vec<(String, f64)> {
        v.iter().map(|(t, w)| (t.to_owned(), w)).collect()
    }

    #[test]
    fn hashtag_and_place() {
        let v = extract_topics::<f64>(&["#BeefBan is trending in Delhi"]);
        assert_eq!(terms(&v), vec![("beefban".into(), 1.0), ("delhi".into(), 1.0)]);
    }

    #[test]
    fn empty_text() {
        assert!(extract_topics::<f64>(&[""]).is_empty());
        assert!(extract_topics::<f64>(&[]).is_empty());
    }

    #[test]
    fn multiword_runs_and_sentence_openers() {
        let v = extract_topics::<f64>(&[
            "Thousands marched for Boris Nemtsov in Moscow. Police watched, Moscow stayed calm.",
        ]);
        assert_eq!(terms(&v), vec![("boris nemtsov".into(), 1.0), ("moscow".into(), 2.0)]);
        let v = extract_topics::<f64>(&["New York Times reports on #Baltimore, @cnn too"]);
        assert_eq!(
            terms(&v),
            vec![("baltimore".into(), 1.0), ("new york times".into(), 1.0)]
        );
    }

    #[test]
    fn annotations_bypass_rules() {
        let mut ann = Annotations::default();
        ann.items.insert("http://x.com/a".into(), vec!["boris nemtsov".into()]);
        let mut corpus = TextCorpus::default();
        corpus
            .items
            .insert("http://x.com/a".into(), vec!["Moscow Moscow".into()]);
        let m = build_topic_model::<f64>(&corpus, &ShareTable::new(), Some(&ann), &RuleBasedExtractor);
        assert_eq!(
            terms(m.item("http://x.com/a").unwrap()),
            vec![("boris nemtsov".into(), 1.0)]
        );
    }

    #[test]
    fn user_vector_includes_shared_items() {
        use crate::dataset::ShareRecord;
        let mut corpus = TextCorpus::default();
        corpus.items.insert("i".into(), vec!["about #Economy".into()]);
        corpus.users.insert("u".into(), vec!["hello from Paris".into()]);
        let shares = ShareTable::from_records([ShareRecord {
            user: "u".into(),
            item: "i".into(),
            tweet_id: "t".into(),
            retweet_count: 0,
            timestamp: 0,
        }]);
        let m = build_topic_model::<f64>(&corpus, &shares, None, &RuleBasedExtractor);
        let u = m.user("u").unwrap();
        assert_eq!(u.get("paris"), Some(1.0));
        assert_eq!(u.get("economy"), Some(1.0));
    }

    /// Cosine by explicit dense vectors over the joint vocabulary.
    fn dense_cosine(a: &[(&str, f64)], b: &[(&str, f64)]) -> f64 {
        let mut vocab: Vec<&str> = a.iter().chain(b).map(|p| p.0).collect();
        vocab.sort();
        vocab.dedup();
        let dense = |v: &[(&str, f64)]| -> Vec<f64> {
            vocab
                .iter()
                .map(|t| v.iter().filter(|p| p.0 == *t).map(|p| p.1).sum())
                .collect()
        };
        let (x, y) = (dense(a), dense(b));
        let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        dot / (x.iter().map(|p| p * p).sum::<f64>().sqrt() * y.iter().map(|q| q * q).sum::<f64>().sqrt())
    }

    #[test]
    fn cosine_against_dense_oracle() {
        let u = TopicVector::from_terms([("a", 1.0), ("b", 1.0)]);
        let i = TopicVector::from_terms([("a", 1.0)]);
        let expected = dense_cosine(&[("a", 1.0), ("b", 1.0)], &[("a", 1.0)]);
        assert!((expected - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((cosine_similarity(&u, &i) - expected).abs() < 1e-12);
        let u = TopicVector::from_terms([("a", 3.0), ("b", 1.0), ("c", 2.0)]);
        let i = TopicVector::from_terms([("c", 5.0), ("a", 1.0), ("d", 4.0)]);
        let expected = dense_cosine(
            &[("a", 3.0), ("b", 1.0), ("c", 2.0)],
            &[("c", 5.0), ("a", 1.0), ("d", 4.0)],
        );
        assert!((cosine_similarity(&u, &i) - expected).abs() < 1e-12);
    }

    #[test]
    fn diversity_orders_ascending_similarity() {
        let u: TopicVector<f64> = TopicVector::from_terms([("a", 1.0), ("b", 1.0)]);
        let items = vec![
            (ItemId::from("same"), u.clone()),
            (ItemId::from("half"), TopicVector::from_terms([("a", 1.0)])),
            (ItemId::from("other"), TopicVector::from_terms([("z", 1.0)])),
            (ItemId::from("blank"), TopicVector::new()),
        ];
        let (list, sims) = diversity_scores(&u, &items);
        let order: Vec<&str> = list.items().iter().map(|i| i.as_str()).collect();
        assert_eq!(order, ["blank", "other", "half", "same"]);
        assert_eq!(sims[0], 0.0);
        assert!((sims[3] - 1.0).abs() < 1e-12);
    }
}
