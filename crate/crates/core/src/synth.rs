//! Seeded generator of synthetic labeled Persian tweets.
//!
//! Each tweet mixes class-indicative keywords with label-neutral noise words
//! and a few keywords of other classes, then adds the clutter a real tweet carries: stopwords, digits, Latin words,
//! emoji, punctuation, hashtags and Arabic letter variants. The result is a
//! corpus with known signal for end-to-end checks of the whole pipeline.

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, Sentiment, TweetRecord};
use crate::rng::SeededRng;

pub const NEGATIVE_KEYWORDS: [&str; 13] = [
    "بد", "افتضاح", "غمگین", "ناراحت", "خشم", "شکست", "ضعیف", "فاجعه", "نگران", "متنفر",
    "ترسناک", "دروغ", "خسته",
];
pub const NEUTRAL_KEYWORDS: [&str; 13] = [
    "گزارش", "جلسه", "اعلام", "برنامه", "اطلاعیه", "خبر", "هفته", "بررسی", "سخنگو", "تاریخ",
    "نشست", "مصاحبه", "جدول",
];
pub const POSITIVE_KEYWORDS: [&str; 13] = [
    "عالی", "خوب", "شاد", "زیبا", "موفق", "عاشق", "خوشحال", "لذت", "ممنون", "امید", "دلنشین",
    "پیروز", "قشنگ",
];
/// Words drawn independently of the label.
pub const NOISE_WORDS: [&str; 14] = [
    "تهران", "مردم", "کشور", "توییتر", "دولت", "شهر", "بازار", "قیمت", "دلار", "فوتبال",
    "ماشین", "گوشی", "کتاب", "فیلم",
];
/// Search terms used as tweet tags.
pub const TAGS: [&str; 4] = ["قیمت_دلار", "انتخابات", "فوتبال", "کرونا"];

const FILLER_STOPWORDS: [&str; 8] = ["از", "به", "که", "این", "در", "با", "را", "هم"];
const LATIN: [&str; 4] = ["ok", "lol", "news", "RT"];
const EMOJI: [&str; 4] = ["😀", "😡", "🙂", "👍"];
const PUNCT: [&str; 5] = ["!", "!!", "؟", "...", "،"];

pub fn keywords(class: Sentiment) -> &'static [&'static str] {
    match class {
        Sentiment::Negative => &NEGATIVE_KEYWORDS,
        Sentiment::Neutral => &NEUTRAL_KEYWORDS,
        Sentiment::Positive => &POSITIVE_KEYWORDS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub per_class: usize,
    /// Probability that a content word is a noise word instead of a keyword.
    pub noise_rate: f64,
    /// Probability that a content word is a keyword of another class.
    pub cross_rate: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            per_class: 200,
            noise_rate: 0.2,
            cross_rate: 0.1,
            min_words: 4,
            max_words: 8,
            seed: 42,
        }
    }
}

fn pick<'a>(rng: &mut SeededRng, items: &[&'a str]) -> &'a str {
    items[rng.below(items.len())]
}

/// Swaps Persian yeh/kaf for their Arabic forms.
fn arabize(word: &str) -> String {
    word.chars()
        .map(|c| match c {
            'ی' => 'ي',
            'ک' => 'ك',
            other => other,
        })
        .collect()
}

/// Content words of one tweet: own-class keywords, stray keywords of other
/// classes and noise, in order. Every tweet holds at least one own-class keyword.
fn content_words(rng: &mut SeededRng, class: Sentiment, spec: &SynthSpec) -> Vec<&'static str> {
    let len = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
    let mut words: Vec<&'static str> = (0..len)
        .map(|_| {
            let u = rng.unit();
            if u < spec.noise_rate {
                pick(rng, &NOISE_WORDS)
            } else if u < spec.noise_rate + spec.cross_rate {
                let other = Sentiment::ALL[(class.code() + 1 + rng.below(2)) % 3];
                pick(rng, keywords(other))
            } else {
                pick(rng, keywords(class))
            }
        })
        .collect();
    if !words.iter().any(|w| keywords(class).contains(w)) {
        let slot = rng.below(words.len());
        words[slot] = pick(rng, keywords(class));
    }
    words
}

fn render(rng: &mut SeededRng, words: &[&str], tag: &str) -> String {
    let mut parts: Vec<String> = Vec::new();
    for w in words {
        if rng.unit() < 0.3 {
            parts.push(pick(rng, &FILLER_STOPWORDS).to_string());
        }
        let mut word = if rng.unit() < 0.15 { arabize(w) } else { w.to_string() };
        if rng.unit() < 0.1 {
            word.push_str(pick(rng, &PUNCT));
        }
        parts.push(word);
    }
    if rng.unit() < 0.3 {
        parts.push(format!("{}", rng.below(2000)));
    }
    if rng.unit() < 0.2 {
        parts.push("۱۴۰۲".to_string());
    }
    if rng.unit() < 0.2 {
        parts.insert(0, pick(rng, &LATIN).to_string());
    }
    if rng.unit() < 0.25 {
        parts.push(pick(rng, &EMOJI).to_string());
    }
    if rng.unit() < 0.5 {
        parts.push(format!("#{tag}"));
    }
    parts.join(" ")
}

/// `3 * per_class` records with ids `1..`, balanced over classes, in shuffled order.
pub fn generate(spec: &SynthSpec) -> LabeledCorpus {
    assert!(spec.min_words >= 1 && spec.min_words <= spec.max_words);
    let mut rng = SeededRng::new(spec.seed);
    let mut labels: Vec<Sentiment> = Sentiment::ALL
        .iter()
        .flat_map(|c| std::iter::repeat_n(*c, spec.per_class))
        .collect();
    rng.shuffle(&mut labels);
    let records = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let words = content_words(&mut rng, label, spec);
            let tag = pick(&mut rng, &TAGS);
            TweetRecord {
                id: i as u64 + 1,
                text: render(&mut rng, &words, tag),
                label,
                tag: Some(tag.to_string()),
            }
        })
        .collect();
    LabeledCorpus::new(records).expect("generated ids are unique and texts non-empty")
}
