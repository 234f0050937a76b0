//! Synthetic negation corpus for the ordering and timing tests.
//!
//! Each document carries two planted phrases over a shared modifier
//! pool: a bare one ("<modifier> good"/"<modifier> bad") and a negated
//! one ("not <modifier> bad"/"not <modifier> good"). Positive documents
//! pair bare-good with negated-bad; negative documents mirror them. By
//! construction every document contains exactly one "good", one "bad",
//! one "not", and two modifiers drawn from the same pool, so unigram
//! (and bigram) statistics are identical across classes and only the
//! negation trigrams decide the label.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Size of the modifier pool shared by the planted phrases.
pub const MODIFIERS: usize = 40;

pub struct CorpusSpec {
    pub docs: usize,
    /// Neutral filler words; 157 lands the vocabulary near 200, larger
    /// values scale it up without touching the label structure.
    pub fillers: usize,
    /// Smallest modifier index the planted phrases may use. 1 keeps
    /// modifier 0 out of every discriminative trigram.
    pub modifier_lo: usize,
    /// Sprinkle modifier 0 into filler slots so its unigram statistics
    /// are still trained when `modifier_lo` excludes it from phrases.
    pub inject_heldout_filler: bool,
    /// Force every planted phrase to use this modifier (the test side of
    /// the unseen-trigram check).
    pub fixed_modifier: Option<usize>,
    pub seed: u64,
}

pub fn modifier(i: usize) -> String {
    format!("mod{i}")
}

fn filler(i: usize) -> String {
    format!("fill{i}")
}

/// Every word the generator can emit, for pinning the vocabulary size.
pub fn all_words(fillers: usize) -> Vec<String> {
    let mut words: Vec<String> = (0..MODIFIERS).map(modifier).collect();
    words.extend((0..fillers).map(filler));
    words.extend(["good", "bad", "not"].map(str::to_string));
    words
}

/// Balanced labeled documents; label 1 is positive.
pub fn generate(spec: &CorpusSpec) -> Vec<(usize, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mods: Vec<String> = (spec.modifier_lo..MODIFIERS).map(modifier).collect();
    let fills: Vec<String> = (0..spec.fillers).map(filler).collect();
    (0..spec.docs)
        .map(|i| {
            let label = i % 2;
            let pick =
                |rng: &mut ChaCha8Rng| match spec.fixed_modifier {
                    Some(m) => modifier(m),
                    None => mods.choose(rng).unwrap().clone(),
                };
            let (bare_word, negated_word) = if label == 1 {
                ("good", "bad")
            } else {
                ("bad", "good")
            };
            let bare = vec![pick(&mut rng), bare_word.to_string()];
            let negated = vec!["not".to_string(), pick(&mut rng), negated_word.to_string()];
            let (first, second) = if rng.random::<bool>() {
                (bare, negated)
            } else {
                (negated, bare)
            };

            let mut fill_block = |tokens: &mut Vec<String>| {
                for _ in 0..3 {
                    tokens.push(fills.choose(&mut rng).unwrap().clone());
                }
            };
            let mut tokens = Vec::with_capacity(14);
            fill_block(&mut tokens);
            tokens.extend(first);
            fill_block(&mut tokens);
            tokens.extend(second);
            fill_block(&mut tokens);
            if spec.inject_heldout_filler && rng.random::<bool>() {
                // Overwrite one filler slot (never adjacent to good/bad,
                // which sit at the ends of the phrase slices).
                let slot = [0, 1, 2].choose(&mut rng).unwrap();
                tokens[*slot] = modifier(0);
            }
            (label, tokens)
        })
        .collect()
}

/// Independent label rule: the word two to the left of "good" decides.
/// Disagreement with the planted label would mean the generator leaked
/// a second pattern.
pub fn oracle_label(tokens: &[String]) -> usize {
    let pos = tokens.iter().position(|t| t == "good").expect("one good");
    let negated = pos >= 2 && tokens[pos - 2] == "not";
    usize::from(!negated)
}
