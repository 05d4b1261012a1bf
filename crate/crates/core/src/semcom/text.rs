//! Corpus cleaning and the token vocabulary.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Result, SemcomError};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const EOS: &str = "<eos>";
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
const RESERVED: [&str; 3] = [PAD, UNK, EOS];

pub const MIN_SENTENCE_TOKENS: usize = 3;
pub const MAX_SENTENCE_TOKENS: usize = 20;
pub const DEFAULT_MIN_COUNT: usize = 5;

/// Lowercases, strips every character that is neither alphanumeric nor
/// whitespace, collapses whitespace, and keeps sentences of 3 to 20 tokens.
pub fn preprocess_corpus<S: AsRef<str>>(raw_lines: &[S]) -> Vec<String> {
    raw_lines
        .iter()
        .filter_map(|line| {
            let cleaned: String = line
                .as_ref()
                .chars()
                .filter(|c| c.is_alphanumeric() || c.is_whitespace())
                .flat_map(char::to_lowercase)
                .collect();
            let tokens: Vec<&str> = cleaned.split_whitespace().collect();
            (MIN_SENTENCE_TOKENS..=MAX_SENTENCE_TOKENS)
                .contains(&tokens.len())
                .then(|| tokens.join(" "))
        })
        .collect()
}

/// Token to id bijection with reserved `<pad>`, `<unk>` and `<eos>` ids 0, 1, 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    /// Threshold used when the vocabulary was built; 0 when loaded from a file.
    pub min_count: usize,
}

impl Vocabulary {
    fn from_ordered(kept: Vec<String>, min_count: usize) -> Self {
        let tokens: Vec<String> = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(kept)
            .collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index, min_count }
    }

    /// A vocabulary over an explicit label list, in the given order, duplicates dropped.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut seen = std::collections::HashSet::new();
        let kept = labels
            .iter()
            .map(|s| s.as_ref().to_string())
            .filter(|s| !RESERVED.contains(&s.as_str()) && seen.insert(s.clone()))
            .collect();
        Self::from_ordered(kept, 1)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false: the reserved ids are present in every vocabulary.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Bits per id: `ceil(log2(len))`.
    pub fn bit_width(&self) -> usize {
        let n = self.tokens.len();
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }

    /// The id of `token`, or [`UNK_ID`] when it is not kept.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// The token for `id`, or `<unk>` when the id is out of range.
    pub fn token(&self, id: u32) -> &str {
        self.tokens.get(id as usize).map_or(UNK, String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// `token<TAB>id` lines in id order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{i}");
        }
        out
    }

    /// Parses `token<TAB>id` lines; ids must be dense from 0 with the reserved
    /// tokens first.
    pub fn from_file_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| SemcomError::Parse { line: i + 1, msg };
            let (tok, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| parse_err("expected token<TAB>id".into()))?;
            let id: u32 = id
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad id {id:?}")))?;
            if tok.is_empty() {
                return Err(parse_err("empty token".into()));
            }
            pairs.push((i + 1, tok.to_string(), id));
        }
        pairs.sort_by_key(|p| p.2);
        let mut seen = std::collections::HashSet::new();
        for (pos, (line, tok, id)) in pairs.iter().enumerate() {
            if *id as usize != pos {
                return Err(SemcomError::Parse { line: *line, msg: format!("ids must be dense from 0, found {id} at position {pos}") });
            }
            if pos < RESERVED.len() && tok != RESERVED[pos] {
                return Err(SemcomError::Parse { line: *line, msg: format!("id {pos} must be {}", RESERVED[pos]) });
            }
            if !seen.insert(tok.clone()) {
                return Err(SemcomError::Parse { line: *line, msg: format!("duplicate token {tok:?}") });
            }
        }
        if pairs.len() < RESERVED.len() {
            return Err(SemcomError::Parse { line: pairs.len() + 1, msg: "missing reserved tokens".into() });
        }
        let kept = pairs.into_iter().skip(RESERVED.len()).map(|p| p.1).collect();
        Ok(Self::from_ordered(kept, 0))
    }
}

/// Keeps tokens seen at least `min_count` times, ordered by descending count
/// with lexicographic tie-break.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[S], min_count: usize) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for line in corpus {
        for tok in line.as_ref().split_whitespace() {
            *counts.entry(tok).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(SemcomError::EmptyCorpus);
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_count && !RESERVED.contains(t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocabulary::from_ordered(
        kept.into_iter().map(|(t, _)| t.to_string()).collect(),
        min_count,
    ))
}

/// Reads a corpus file: one sentence per line.
pub fn load_corpus(path: &std::path::Path) -> std::io::Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::to_string)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preprocess_rules() {
        assert_eq!(preprocess_corpus(&["Hello, World! Again."]), vec!["hello world again"]);
        assert!(preprocess_corpus(&["two words"]).is_empty());
        let long = vec!["w"; 21].join(" ");
        assert!(preprocess_corpus(&[long]).is_empty());
        let twenty = vec!["w"; 20].join(" ");
        assert_eq!(preprocess_corpus(&[twenty.clone()]), vec![twenty]);
    }

    proptest! {
        #[test]
        fn preprocess_idempotent(lines in proptest::collection::vec(".{0,80}", 0..8)) {
            let once = preprocess_corpus(&lines);
            prop_assert_eq!(preprocess_corpus(&once), once.clone());
        }
    }

    #[test]
    fn vocabulary_threshold() {
        let corpus = vec!["the drone lands"; 5];
        let v = build_vocabulary(&corpus, 5).unwrap();
        for t in ["the", "drone", "lands"] {
            assert!(v.contains(t));
        }
        let mut c2: Vec<&str> = vec!["alpha beta gamma"; 5];
        c2.extend(vec!["rare beta gamma"; 4]);
        let v2 = build_vocabulary(&c2, 5).unwrap();
        assert_eq!(v2.id("rare"), UNK_ID);
        assert_eq!(build_vocabulary(&c2, 5).unwrap(), v2);
        assert_eq!(build_vocabulary::<&str>(&[], 5), Err(SemcomError::EmptyCorpus));
    }

    #[test]
    fn id_order_is_frequency_then_lexicographic() {
        let v = build_vocabulary(&["b a c c", "a b c d"], 1).unwrap();
        assert_eq!(&v.tokens()[3..], &["c", "a", "b", "d"]);
        assert_eq!(v.token(0), PAD);
        assert_eq!(v.token(999), UNK);
    }

    #[test]
    fn bit_width_rule() {
        let labels: Vec<String> = (0..1022).map(|i| format!("t{i}")).collect();
        assert_eq!(Vocabulary::from_labels(&labels[..1021]).len(), 1024);
        assert_eq!(Vocabulary::from_labels(&labels[..1021]).bit_width(), 10);
        assert_eq!(Vocabulary::from_labels(&labels).bit_width(), 11);
        assert_eq!(Vocabulary::from_labels::<&str>(&[]).bit_width(), 2);
    }

    #[test]
    fn file_round_trip() {
        let v = build_vocabulary(&["a b c", "a b"], 1).unwrap();
        let back = Vocabulary::from_file_str(&v.to_file_string()).unwrap();
        assert_eq!(back.tokens(), v.tokens());
        assert!(Vocabulary::from_file_str("<pad>\t0\n<unk>\t1\n<eos>\t2\nx\t4\n").is_err());
        assert!(Vocabulary::from_file_str("x\t0\n").is_err());
    }
}
