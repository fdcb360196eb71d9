//! Utterance intent labeling.

use super::{CueError, SpeechIntent, SpeechLabel};

/// Anything that can label an utterance. The default is [`LexiconLabeler`];
/// an external model can be plugged in by implementing this trait.
pub trait SpeechLabeler {
    fn label(&self, utterance: &str, timestamp: f64) -> Result<SpeechIntent, CueError>;
}

const TIGHT_PHRASES: &[&str] = &[
    "closer",
    "closer look",
    "look closely",
    "close up",
    "closeup",
    "up close",
    "zoom in",
    "zoom",
    "pay more attention",
    "pay attention",
    "in detail",
    "magnify",
    "lean in",
];

const HIGH_PHRASES: &[&str] = &[
    "from the top",
    "from above",
    "from over",
    "top down",
    "topdown",
    "overhead",
    "higher",
    "high angle",
    "bird eye",
    "birds eye",
    "look down",
    "from a higher position",
    "from up high",
];

/// Crude lemmatizer: strips common inflection suffixes.
fn lemma(word: &str) -> String {
    let w = word.trim_matches('\'');
    let w = w.strip_suffix("'s").unwrap_or(w);
    for (suffix, min) in [("ing", 6), ("ed", 5)] {
        if w.len() >= min {
            if let Some(stem) = w.strip_suffix(suffix) {
                return stem.to_string();
            }
        }
    }
    if w.len() > 4 && w.ends_with('s') && !w.ends_with("ss") {
        return w[..w.len() - 1].to_string();
    }
    w.to_string()
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(lemma)
        .collect()
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Case-insensitive keyword cascade: the close-look lexicon wins over the
/// high-view lexicon; anything else is `Normal`.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconLabeler {
    tight: Vec<Vec<String>>,
    high: Vec<Vec<String>>,
}

impl Default for LexiconLabeler {
    fn default() -> Self {
        Self::new(TIGHT_PHRASES, HIGH_PHRASES)
    }
}

impl LexiconLabeler {
    pub fn new(tight: &[&str], high: &[&str]) -> Self {
        let prep = |list: &[&str]| list.iter().map(|p| tokens(p)).collect();
        Self {
            tight: prep(tight),
            high: prep(high),
        }
    }

    pub fn classify(&self, text: &str) -> SpeechLabel {
        let words = tokens(text);
        if self.tight.iter().any(|p| contains_phrase(&words, p)) {
            SpeechLabel::TightFraming
        } else if self.high.iter().any(|p| contains_phrase(&words, p)) {
            SpeechLabel::HighAngle
        } else {
            SpeechLabel::Normal
        }
    }
}

impl SpeechLabeler for LexiconLabeler {
    fn label(&self, utterance: &str, timestamp: f64) -> Result<SpeechIntent, CueError> {
        if utterance.trim().is_empty() {
            return Err(CueError::EmptyUtterance);
        }
        Ok(SpeechIntent {
            label: self.classify(utterance),
            source_text: utterance.to_string(),
            timestamp,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> SpeechLabel {
        LexiconLabeler::default().label(s, 0.0).unwrap().label
    }

    #[test]
    fn close_look_requests_tighten_framing() {
        assert_eq!(label("Zoom in on the gear please"), SpeechLabel::TightFraming);
        assert_eq!(label("LOOK CLOSELY at the edge"), SpeechLabel::TightFraming);
        assert_eq!(label("you should be looking closer here"), SpeechLabel::TightFraming);
    }

    #[test]
    fn high_view_requests_raise_the_angle() {
        assert_eq!(label("Here's the overhead view"), SpeechLabel::HighAngle);
        assert_eq!(label("a bird's-eye view helps"), SpeechLabel::HighAngle);
        assert_eq!(label("watch from above"), SpeechLabel::HighAngle);
    }

    #[test]
    fn everything_else_is_normal() {
        assert_eq!(label("Now I will glue these parts together"), SpeechLabel::Normal);
        assert_eq!(label("close the lid when done"), SpeechLabel::Normal);
        assert_eq!(label("stop the motor"), SpeechLabel::Normal);
    }

    #[test]
    fn tight_wins_over_high() {
        assert_eq!(label("zoom in from the top"), SpeechLabel::TightFraming);
    }

    #[test]
    fn empty_utterance_is_an_error() {
        assert_eq!(LexiconLabeler::default().label("  \n", 1.0), Err(CueError::EmptyUtterance));
    }

    #[test]
    fn lemmatizer_is_conservative() {
        assert_eq!(lemma("looking"), "look");
        assert_eq!(lemma("zoomed"), "zoom");
        assert_eq!(lemma("glass"), "glass");
        assert_eq!(lemma("higher"), "higher");
        assert_eq!(lemma("bird's"), "bird");
    }

    struct Abstain;

    impl SpeechLabeler for Abstain {
        fn label(&self, utterance: &str, timestamp: f64) -> Result<SpeechIntent, CueError> {
            Ok(SpeechIntent {
                label: SpeechLabel::None,
                source_text: utterance.into(),
                timestamp,
            })
        }
    }

    #[test]
    fn backends_are_pluggable() {
        let b: Box<dyn SpeechLabeler> = Box::new(Abstain);
        assert_eq!(b.label("zoom", 0.0).unwrap().label, SpeechLabel::None);
    }
}
