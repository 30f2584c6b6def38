//! Sentence normalization and token-overlap scoring used for correction matching.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Lowercases, drops punctuation and collapses whitespace.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else if ch.is_alphanumeric() {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.extend(ch.to_lowercase());
        }
    }
    out
}

pub fn tokens(s: &str) -> Vec<String> {
    normalize_text(s)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Whitespace-token count.
pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Multiset token F1 between two sentences after normalization.
pub fn token_f1(a: &str, b: &str) -> f64 {
    let ta = tokens(a);
    let tb = tokens(b);
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tb {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in &ta {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / ta.len() as f64;
    let r = common as f64 / tb.len() as f64;
    2.0 * p * r / (p + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("  You can stay below, 1250 ... so!"), "you can stay below 1250 so");
        assert_eq!(normalize_text("it's"), "its");
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    fn f1_values() {
        // 8 shared tokens, 8 vs 10 tokens: P = 1, R = 0.8, F1 = 16/18.
        let seg = "a b c d e f g h i j";
        let quote = "a b c d e f g h";
        assert!((token_f1(quote, seg) - 16.0 / 18.0).abs() < 1e-12);
        assert_eq!(token_f1("x y", "a b"), 0.0);
        assert!((token_f1("a a b", "a b b") - 2.0 / 3.0).abs() < 1e-12);
    }
}
