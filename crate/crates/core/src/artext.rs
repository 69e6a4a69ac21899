//! Arabic surface-form processing used before dictionary matching.
//!
//! The pipeline order is normalize, then stop-word removal, then light
//! stemming. The weak-letter [`skeleton`] is the loosest comparison form and
//! only backs the lowest-confidence match tier.

use std::collections::BTreeSet;

use thiserror::Error;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("normalization rules are not closed: `{output}` produced by one rule is consumed by another")]
    OpenRules { output: char },
}

/// Character substitutions plus a strip set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationTable {
    rules: Vec<(char, char)>,
    strip: BTreeSet<char>,
}

impl Default for NormalizationTable {
    fn default() -> Self {
        let rules = vec![('إ', 'ا'), ('أ', 'ا'), ('آ', 'ا'), ('ٱ', 'ا'), ('ة', 'ه'), ('ى', 'ي')];
        // Harakat, tanween, shadda, sukun, dagger alef, tatweel and underscore.
        let mut strip: BTreeSet<char> = ('\u{064B}'..='\u{0652}').collect();
        strip.extend(['\u{0670}', '\u{0640}', '_']);
        NormalizationTable { rules, strip }
    }
}

impl NormalizationTable {
    pub fn new(rules: Vec<(char, char)>, strip: BTreeSet<char>) -> Result<Self, ConfigError> {
        for &(_, out) in &rules {
            if strip.contains(&out) || rules.iter().any(|&(from, _)| from == out) {
                return Err(ConfigError::OpenRules { output: out });
            }
        }
        Ok(NormalizationTable { rules, strip })
    }

    pub fn normalize(&self, word: &str) -> String {
        word.chars()
            .filter(|c| !self.strip.contains(c))
            .map(|c| self.rules.iter().find(|&&(from, _)| from == c).map_or(c, |&(_, to)| to))
            .collect()
    }
}

/// Normalizes with the default table: hamza-carrying alefs to bare alef,
/// ta marbuta to ha, alef maqsura to ya, diacritics and tatweel dropped.
pub fn normalize(word: &str) -> String {
    thread_local! {
        static TABLE: NormalizationTable = NormalizationTable::default();
    }
    TABLE.with(|t| t.normalize(word))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWordList {
    words: BTreeSet<String>,
}

impl StopWordList {
    /// One word per line, `#` starts a comment. Entries are normalized on load.
    pub fn parse(text: &str) -> Self {
        let words = config_lines(text).map(|(_, w)| normalize(w)).filter(|w| !w.is_empty()).collect();
        StopWordList { words }
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Order-preserving removal of stop-words. Tokens are expected normalized.
pub fn strip_stopwords<S: AsRef<str>>(tokens: &[S], stop: &StopWordList) -> Vec<String> {
    tokens.iter().map(AsRef::as_ref).filter(|t| !stop.contains(t)).map(str::to_string).collect()
}

/// Yields `(line number, content)` for non-blank, non-comment lines.
pub(crate) fn config_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Light10-style affix tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemRules {
    prefixes: Vec<String>,
    suffixes: Vec<String>,
    min_stem_len: usize,
}

impl Default for StemRules {
    fn default() -> Self {
        StemRules::new(
            ["وال", "بال", "كال", "فال", "ال", "لل", "و"],
            ["ها", "ان", "ات", "ون", "ين", "ية", "ه", "ة", "ي"],
            3,
        )
    }
}

impl StemRules {
    pub fn new<P, S>(prefixes: P, suffixes: S, min_stem_len: usize) -> Self
    where
        P: IntoIterator,
        P::Item: Into<String>,
        S: IntoIterator,
        S::Item: Into<String>,
    {
        let mut prefixes: Vec<String> = prefixes.into_iter().map(Into::into).collect();
        let mut suffixes: Vec<String> = suffixes.into_iter().map(Into::into).collect();
        // Stable sort keeps the listed order among equal lengths.
        prefixes.sort_by_key(|p| std::cmp::Reverse(p.chars().count()));
        suffixes.sort_by_key(|s| std::cmp::Reverse(s.chars().count()));
        StemRules { prefixes, suffixes, min_stem_len }
    }

    /// Reads `prefix:...`, `suffix:...` and `min-stem:N` lines. A kind that
    /// appears in the file replaces the default list for that kind.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let defaults = StemRules::default();
        let (mut prefixes, mut suffixes) = (Vec::new(), Vec::new());
        let mut min = defaults.min_stem_len;
        for (line, l) in config_lines(text) {
            let Some((kind, value)) = l.split_once(':') else {
                return Err(ConfigError::Line { line, message: format!("expected `kind:value`, got `{l}`") });
            };
            let value = value.trim();
            match kind.trim() {
                "prefix" => prefixes.push(value.to_string()),
                "suffix" => suffixes.push(value.to_string()),
                "min-stem" => {
                    min = value
                        .parse()
                        .map_err(|_| ConfigError::Line { line, message: format!("`{value}` is not a length") })?
                }
                other => return Err(ConfigError::Line { line, message: format!("unknown rule kind `{other}`") }),
            }
        }
        if prefixes.is_empty() {
            prefixes = defaults.prefixes;
        }
        if suffixes.is_empty() {
            suffixes = defaults.suffixes;
        }
        Ok(StemRules::new(prefixes, suffixes, min))
    }

    pub fn min_stem_len(&self) -> usize {
        self.min_stem_len
    }

    /// Strips the longest matching prefix once, then the longest matching
    /// suffix once, each only when at least `min_stem_len` characters remain.
    pub fn stem(&self, word: &str) -> String {
        let mut w = word;
        if let Some(rest) = self
            .prefixes
            .iter()
            .filter_map(|p| w.strip_prefix(p.as_str()))
            .find(|rest| rest.chars().count() >= self.min_stem_len)
        {
            w = rest;
        }
        if let Some(rest) = self
            .suffixes
            .iter()
            .filter_map(|s| w.strip_suffix(s.as_str()))
            .find(|rest| rest.chars().count() >= self.min_stem_len)
        {
            w = rest;
        }
        w.to_string()
    }
}

pub fn light_stem(word: &str) -> String {
    thread_local! {
        static RULES: StemRules = StemRules::default();
    }
    RULES.with(|r| r.stem(word))
}

const WEAK_LETTERS: [char; 3] = ['ا', 'و', 'ي'];
const IMPERFECT_PREFIXES: [char; 3] = ['ي', 'ت', 'ن'];

/// Consonantal skeleton of a stemmed word.
///
/// A leading imperfect-verb prefix (ي/ت/ن) is dropped from words of four or
/// more letters, then every long vowel except the final letter is removed, so
/// يصيب, تصيب and يصاب all reduce to صب.
pub fn skeleton(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let body = match chars.first() {
        Some(c) if chars.len() >= 4 && IMPERFECT_PREFIXES.contains(c) => &chars[1..],
        _ => &chars[..],
    };
    let last = body.len().saturating_sub(1);
    body.iter().enumerate().filter(|&(i, c)| i == last || !WEAK_LETTERS.contains(c)).map(|(_, c)| *c).collect()
}

/// The configured normalize / stop-word / stem chain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextProcessor {
    pub normalization: NormalizationTable,
    pub stopwords: StopWordList,
    pub stems: StemRules,
}

impl TextProcessor {
    pub fn new(stopwords: StopWordList, stems: StemRules) -> Self {
        TextProcessor { normalization: NormalizationTable::default(), stopwords, stems }
    }

    pub fn bundled() -> Self {
        TextProcessor::new(StopWordList::bundled(), StemRules::default())
    }

    pub fn normalize(&self, word: &str) -> String {
        self.normalization.normalize(word)
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&self.normalize(word))
    }

    /// Splits raw phrase words on whitespace and `_`, normalizes them and
    /// drops stop-words. A phrase made only of stop-words is kept whole so
    /// that it stays matchable.
    pub fn content_words<S: AsRef<str>>(&self, words: &[S]) -> Vec<String> {
        let normalized: Vec<String> = words
            .iter()
            .flat_map(|w| w.as_ref().split(|c: char| c.is_whitespace() || c == '_'))
            .map(|w| self.normalize(w))
            .filter(|w| !w.is_empty())
            .collect();
        let content = strip_stopwords(&normalized, &self.stopwords);
        if content.is_empty() {
            normalized
        } else {
            content
        }
    }

    pub fn stem(&self, word: &str) -> String {
        self.stems.stem(word)
    }

    pub fn skeleton(&self, word: &str) -> String {
        skeleton(&self.stems.stem(word))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rule table applied by hand, character by character.
    fn hand_normalize(w: &str) -> String {
        let mut out = String::new();
        for c in w.chars() {
            match c {
                'إ' | 'أ' | 'آ' | 'ٱ' => out.push('ا'),
                'ة' => out.push('ه'),
                'ى' => out.push('ي'),
                '\u{064B}'..='\u{0652}' | '\u{0670}' | '\u{0640}' | '_' => {}
                other => out.push(other),
            }
        }
        out
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(hand_normalize("إصابة"), "اصابه");
        assert_eq!(normalize("إصابة"), "اصابه");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("مرض"), "مرض");
        assert_eq!(normalize("يصاب بـ"), "يصاب ب");
        assert_eq!(normalize("سمِّ"), "سم");
        assert_eq!(normalize("مستشفى_عام"), "مستشفيعام");
    }

    #[test]
    fn open_rule_tables_are_rejected() {
        let strip = BTreeSet::new();
        assert_eq!(
            NormalizationTable::new(vec![('أ', 'ا'), ('ا', 'ى')], strip),
            Err(ConfigError::OpenRules { output: 'ا' })
        );
    }

    #[test]
    fn stopwords() {
        let stop = StopWordList::parse("# relative pronouns\nالذي\nالتي # trailing\n\n");
        assert_eq!(stop.len(), 2);
        assert_eq!(strip_stopwords(&["الذي", "يسمي"], &stop), vec!["يسمي"]);
        assert!(strip_stopwords::<&str>(&[], &stop).is_empty());
        assert_eq!(strip_stopwords(&["مرض", "قلب"], &stop), vec!["مرض", "قلب"]);
    }

    #[test]
    fn bundled_stopwords_are_normalized() {
        let stop = StopWordList::bundled();
        assert!(stop.contains("الذي"));
        assert!(stop.contains("ب"));
        assert!(stop.contains("الي"));
        for w in stop.iter() {
            assert_eq!(normalize(w), w);
        }
    }

    #[test]
    fn stem_examples() {
        assert_eq!(light_stem("الامراض"), "امراض");
        assert_eq!(light_stem("مرض"), "مرض");
        assert_eq!(light_stem("المعديه"), "معدي");
        assert_eq!(light_stem("يصيبها"), "يصيب");
        assert_eq!(light_stem("الرئتين"), "رئت");
    }

    #[test]
    fn stem_respects_min_length() {
        // "ال" + two letters: stripping would leave fewer than three.
        assert_eq!(light_stem("الدم"), "الدم");
        assert_eq!(light_stem("وها"), "وها");
    }

    #[test]
    fn stem_rules_from_config() {
        let rules = StemRules::parse("prefix:ال\nsuffix:ات\nmin-stem:2\n").unwrap();
        assert_eq!(rules.stem("الحالات"), "حال");
        assert_eq!(rules.stem("والحالات"), "والحال");
        assert!(matches!(StemRules::parse("infix:x"), Err(ConfigError::Line { line: 1, .. })));
        assert!(matches!(StemRules::parse("\nmin-stem:x"), Err(ConfigError::Line { line: 2, .. })));
    }

    #[test]
    fn skeleton_examples() {
        assert_eq!(skeleton(&light_stem("يصيب")), skeleton(&light_stem("يصاب")));
        assert_eq!(skeleton(&light_stem("تصيب")), skeleton(&light_stem("يصاب")));
        assert_eq!(skeleton("مرض"), "مرض");
        // امراض: alef dropped by the character filter leaves مرض.
        assert_eq!(skeleton(&light_stem("الامراض")), "مرض");
        assert_eq!(skeleton(&light_stem("الامراض")), skeleton(&light_stem("مرض")));
        assert_eq!(skeleton(""), "");
    }

    #[test]
    fn content_words_drop_stopwords_unless_nothing_left() {
        let p = TextProcessor::bundled();
        assert_eq!(p.content_words(&["الذي", "يسمى"]), vec!["يسمي"]);
        assert_eq!(p.content_words(&["يصاب بـ"]), vec!["يصاب"]);
        assert_eq!(p.content_words(&["في"]), vec!["في"]);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn arabic_word() -> impl Strategy<Value = String> {
            let alphabet: Vec<char> =
                "ابتثجحخدذرزسشصضطظعغفقكلمنهويءآأإؤئةىـ_\u{064B}\u{064E}\u{0650}\u{0651}\u{0652}".chars().collect();
            proptest::collection::vec(proptest::sample::select(alphabet), 0..12).prop_map(|cs| cs.into_iter().collect())
        }

        fn is_subsequence(small: &str, big: &str) -> bool {
            let mut it = big.chars();
            small.chars().all(|c| it.by_ref().any(|b| b == c))
        }

        proptest! {
            #[test]
            fn normalize_is_idempotent(w in arabic_word()) {
                let once = normalize(&w);
                prop_assert_eq!(normalize(&once), once);
            }

            #[test]
            fn stem_keeps_min_length(w in arabic_word()) {
                let w = normalize(&w);
                let n = w.chars().count();
                prop_assert!(light_stem(&w).chars().count() >= n.min(3));
            }

            #[test]
            fn skeleton_is_subsequence(w in arabic_word()) {
                let w = light_stem(&normalize(&w));
                prop_assert!(is_subsequence(&skeleton(&w), &w));
            }

            #[test]
            fn stopword_removal_keeps_order(ws in proptest::collection::vec(arabic_word(), 0..8)) {
                let stop = StopWordList::bundled();
                let ws: Vec<String> = ws.iter().map(|w| normalize(w)).collect();
                let kept = strip_stopwords(&ws, &stop);
                let expected: Vec<String> = ws.iter().filter(|w| !stop.contains(w)).cloned().collect();
                prop_assert_eq!(kept, expected);
            }
        }
    }
}
