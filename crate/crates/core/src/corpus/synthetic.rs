//! Seeded template generator for the bundled mini-corpus.
//!
//! Sarcastic reviews are assembled from phrases that carry the surface cues
//! the feature extractor looks for (laughter, invocations, stacked
//! punctuation, shouting, elongation, direct address); plain reviews use
//! star-appropriate sentiment. Four simulated annotators each agree with the
//! template's intent with a fixed probability, so the resolved labels carry
//! some noise.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{Review, SarcasmLabel};
use crate::rng::{self, Rng};

pub const ANNOTATORS: [&str; 4] = ["ann1", "ann2", "ann3", "ann4"];

const ANNOTATOR_AGREEMENT: f64 = 0.85;

/// Probability that a generated review is written sarcastically, by star.
const SARCASM_RATE: [f64; 5] = [0.45, 0.3, 0.4, 0.25, 0.35];

const THINGS: &[&str] = &[
    "pasta", "burger", "pizza", "coffee", "service", "room", "tacos", "salad", "steak", "sushi",
    "waiter", "manager", "patio", "brunch", "fries",
];
const POSITIVE: &[&str] = &[
    "delicious",
    "friendly",
    "amazing",
    "fresh",
    "great",
    "lovely",
    "excellent",
    "tasty",
    "perfect",
    "wonderful",
    "cozy",
    "helpful",
];
const NEGATIVE: &[&str] = &[
    "cold",
    "rude",
    "bland",
    "dirty",
    "slow",
    "overpriced",
    "stale",
    "soggy",
    "terrible",
    "awful",
    "greasy",
    "noisy",
];
const OPENERS: &[&str] = &[
    "Oh wow", "Haha", "God", "Wow", "Yay", "Geez", "Lol", "Hahaha", "Ugh", "Oh",
];
const STACKED: &[&str] = &["!!", "??", "?!", "...", "!!!", "!?", "\u{2026}"];

fn pick<'a>(rng: &mut Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty pool")
}

fn elongate(word: &str) -> String {
    let mut out = String::new();
    let last = word.chars().last().unwrap_or('o');
    out.push_str(word);
    out.push(last);
    out.push(last);
    out
}

fn sarcastic_sentence(rng: &mut Rng) -> String {
    let thing = pick(rng, THINGS);
    let pos = pick(rng, POSITIVE);
    let neg = pick(rng, NEGATIVE);
    let punct = pick(rng, STACKED);
    let opener = pick(rng, OPENERS);
    match rng.gen_range(0..10) {
        0 => format!("{opener}! Thank you SO much for the {neg} {thing}{punct}"),
        1 => format!("We just LOVE waiting an hour for {neg} {thing}{punct}"),
        2 => format!("{} {pos} {thing}, said no one ever{punct}", elongate("So")),
        3 => format!("{opener}! Aren't you clever{punct}"),
        4 => format!("Because what we really wanted was {neg} {thing}{punct}"),
        5 => format!("Oh great, another {neg} {thing}. Totally worth it{punct}"),
        6 => format!("{opener}, you call this {thing}{punct}"),
        7 => format!("Best {thing} EVER{punct} if you like it {neg}"),
        8 => format!("{opener}! Our {pos} {thing} was {}{punct}", elongate(neg)),
        _ => format!("Literally the most {pos} {neg} {thing} we have had{punct}"),
    }
}

fn plain_sentence(rng: &mut Rng, stars: u8) -> String {
    let thing = pick(rng, THINGS);
    let pos = pick(rng, POSITIVE);
    let neg = pick(rng, NEGATIVE);
    let positive = match stars {
        1 | 2 => false,
        3 => rng.gen_bool(0.5),
        _ => true,
    };
    let word = if positive { pos } else { neg };
    match rng.gen_range(0..6) {
        0 => format!("The {thing} was {word}."),
        1 => format!("Our {thing} arrived {word} and the staff seemed {word}."),
        2 if positive => format!("Would recommend the {thing}, it was {word}!"),
        2 => format!("Would not order the {thing} again, it was {word}."),
        3 => format!("I thought the {thing} was {word} for the price."),
        4 => format!("My friend said the {thing} was {word}, and I agree."),
        _ => format!("The {thing} here is {word}, parking is easy."),
    }
}

fn review_text(rng: &mut Rng, stars: u8, sarcastic: bool) -> String {
    let n = rng.gen_range(1..=3);
    let mut parts = Vec::with_capacity(n + 1);
    for i in 0..n {
        let sarcastic_part = sarcastic && (i == 0 || rng.gen_bool(0.6));
        parts.push(if sarcastic_part {
            sarcastic_sentence(rng)
        } else {
            plain_sentence(rng, stars)
        });
    }
    if !sarcastic && rng.gen_bool(0.15) {
        // an occasional enthusiastic but sincere review
        parts.push("Wow!".to_owned());
    }
    parts.join(" ")
}

/// `per_star` reviews for each star rating plus four labels per review.
pub fn generate(per_star: usize, seed: u64) -> (Vec<Review>, Vec<SarcasmLabel>) {
    let mut reviews = Vec::with_capacity(per_star * 5);
    let mut labels = Vec::with_capacity(per_star * 5 * ANNOTATORS.len());
    for stars in 1..=5u8 {
        let mut rng = rng::seeded(rng::derive_seed(seed, u64::from(stars)));
        for i in 0..per_star {
            let sarcastic = rng.gen_bool(SARCASM_RATE[usize::from(stars - 1)]);
            let review_id = format!("mini-{stars}-{i:04}");
            let text = review_text(&mut rng, stars, sarcastic);
            for annotator in ANNOTATORS {
                let agrees = rng.gen_bool(ANNOTATOR_AGREEMENT);
                labels.push(SarcasmLabel {
                    review_id: review_id.clone(),
                    sarcastic: sarcastic == agrees,
                    annotator: annotator.to_owned(),
                });
            }
            reviews.push(Review {
                review_id,
                stars,
                text,
            });
        }
    }
    (reviews, labels)
}
