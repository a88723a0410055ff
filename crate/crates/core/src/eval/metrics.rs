//! SQuAD-style answer normalization with exact-match and token F1.

use std::collections::HashMap;

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Lowercase, drop punctuation, drop the articles "a", "an" and "the", and
/// collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lowered = s.to_lowercase();
    let no_punct: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    no_punct
        .split_whitespace()
        .filter(|w| !ARTICLES.contains(w))
        .collect::<Vec<_>>()
        .join(" ")
}

fn golds<'a>(gold: &'a str, aliases: &'a [String]) -> impl Iterator<Item = &'a str> {
    std::iter::once(gold).chain(aliases.iter().map(String::as_str))
}

pub fn exact_match(prediction: &str, gold: &str, aliases: &[String]) -> u8 {
    let p = normalize_answer(prediction);
    u8::from(golds(gold, aliases).any(|g| normalize_answer(g) == p))
}

fn token_f1(prediction: &str, gold: &str) -> f64 {
    let p = normalize_answer(prediction);
    let g = normalize_answer(gold);
    let p_tokens: Vec<&str> = p.split_whitespace().collect();
    let g_tokens: Vec<&str> = g.split_whitespace().collect();
    if p_tokens.is_empty() || g_tokens.is_empty() {
        return f64::from(u8::from(p_tokens.is_empty() && g_tokens.is_empty()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g_tokens {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p_tokens {
        if let Some(c) = counts.get_mut(t).filter(|c| **c > 0) {
            *c -= 1;
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p_tokens.len() as f64;
    let recall = common as f64 / g_tokens.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token F1 against the gold answer and each alias, keeping the best.
pub fn f1_score(prediction: &str, gold: &str, aliases: &[String]) -> f64 {
    golds(gold, aliases)
        .map(|g| token_f1(prediction, g))
        .fold(0.0, f64::max)
}
