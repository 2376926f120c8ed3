//! Fixed word and phone lists.

/// Filled-pause tokens.
pub const FILLERS: [&str; 8] = ["uh", "um", "uhm", "er", "ah", "eh", "mm", "hmm"];

/// English stop words (the classic 127-entry NLTK list).
pub const STOP_WORDS: [&str; 127] = [
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
    "with", "about", "against", "between", "into", "through", "during", "before", "after",
    "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
    "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don",
    "should", "now",
];

/// ARPAbet vowel bases (stress digits stripped).
pub const ARPABET_VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

fn normalize(word: &str) -> String {
    word.trim()
        .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
        .to_lowercase()
}

pub fn is_filler(word: &str) -> bool {
    FILLERS.contains(&normalize(word).as_str())
}

pub fn is_stop_word(word: &str) -> bool {
    STOP_WORDS.contains(&normalize(word).as_str())
}

/// Splits an ARPAbet label into its base and optional stress digit.
pub fn split_stress(label: &str) -> (&str, Option<u8>) {
    let label = label.trim();
    match label.as_bytes().last() {
        Some(&d @ b'0'..=b'2') => (&label[..label.len() - 1], Some(d - b'0')),
        _ => (label, None),
    }
}

pub fn is_vowel_phone(label: &str) -> bool {
    let (base, _) = split_stress(label);
    ARPABET_VOWELS
        .iter()
        .any(|v| v.eq_ignore_ascii_case(base))
}

/// Primary or secondary stress.
pub fn is_stressed_phone(label: &str) -> bool {
    matches!(split_stress(label).1, Some(1) | Some(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn stop_list_is_unique() {
        let set: HashSet<_> = STOP_WORDS.iter().collect();
        assert_eq!(set.len(), 127);
    }

    #[test]
    fn stress_digits() {
        assert_eq!(split_stress("AE1"), ("AE", Some(1)));
        assert_eq!(split_stress("K"), ("K", None));
        assert!(is_vowel_phone("ah0"));
        assert!(!is_vowel_phone("HH"));
        assert!(is_stressed_phone("AW2"));
        assert!(!is_stressed_phone("AH0"));
    }

    #[test]
    fn filler_matching_ignores_case_and_punctuation() {
        assert!(is_filler("Um,"));
        assert!(!is_filler("umbrella"));
        assert!(is_stop_word("The"));
    }
}
