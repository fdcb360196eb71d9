//! Per-hand pointing debouncer.

use super::{CueError, Hand};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct HandState {
    pointing: bool,
    /// Consecutive classifications disagreeing with `pointing`.
    streak: usize,
    last: Option<f64>,
}

/// Flips a hand's pointing state only after `n` consecutive classifications
/// agree on the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct Debouncer {
    n: usize,
    hands: [HandState; 2],
}

impl Debouncer {
    pub fn new(n: usize) -> Self {
        Self {
            n: n.max(1),
            hands: [HandState::default(); 2],
        }
    }

    pub fn states(&self) -> [bool; 2] {
        [self.hands[0].pointing, self.hands[1].pointing]
    }

    /// Feeds one classification; returns the new state when it flips.
    pub fn update(&mut self, hand: Hand, pointing: bool, timestamp: f64) -> Result<Option<bool>, CueError> {
        let s = &mut self.hands[hand.index()];
        if let Some(last) = s.last {
            if timestamp < last {
                return Err(CueError::NonMonotoneTimestamp { last, got: timestamp });
            }
        }
        s.last = Some(timestamp);
        if pointing == s.pointing {
            s.streak = 0;
            return Ok(None);
        }
        s.streak += 1;
        if s.streak >= self.n {
            s.pointing = pointing;
            s.streak = 0;
            Ok(Some(pointing))
        } else {
            Ok(None)
        }
    }

    /// Sets the state directly; returns whether it changed.
    pub fn force(&mut self, hand: Hand, pointing: bool) -> bool {
        let s = &mut self.hands[hand.index()];
        s.streak = 0;
        if s.pointing == pointing {
            false
        } else {
            s.pointing = pointing;
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(seq: &str) -> Vec<bool> {
        let mut d = Debouncer::new(3);
        seq.chars()
            .enumerate()
            .filter_map(|(i, c)| d.update(Hand::Right, c == 'P', i as f64).unwrap())
            .collect()
    }

    #[test]
    fn three_agreeing_frames_flip() {
        assert_eq!(run("PPP"), vec![true]);
        assert_eq!(run("PP"), Vec::<bool>::new());
    }

    #[test]
    fn single_spurious_frame_is_ignored() {
        assert!(run("OOOPOOO").is_empty());
        assert_eq!(run("PPPPOPPP"), vec![true]);
    }

    #[test]
    fn start_then_end() {
        assert_eq!(run("PPPOOO"), vec![true, false]);
    }

    #[test]
    fn regressing_timestamp_is_rejected() {
        let mut d = Debouncer::new(3);
        d.update(Hand::Left, true, 1.0).unwrap();
        assert!(matches!(
            d.update(Hand::Left, true, 0.9),
            Err(CueError::NonMonotoneTimestamp { .. })
        ));
        // Hands are independent streams.
        d.update(Hand::Right, true, 0.5).unwrap();
    }

    proptest! {
        #[test]
        fn flips_alternate(seq in proptest::collection::vec(any::<bool>(), 0..300)) {
            let mut d = Debouncer::new(3);
            let flips: Vec<bool> = seq
                .iter()
                .enumerate()
                .filter_map(|(i, p)| d.update(Hand::Left, *p, i as f64).unwrap())
                .collect();
            for (k, f) in flips.iter().enumerate() {
                prop_assert_eq!(*f, k % 2 == 0);
            }
        }

        #[test]
        fn isolated_flips_never_emit(n in 3usize..200, at in proptest::collection::vec(0usize..200, 0..20)) {
            // Spikes separated by at least one agreeing frame never reach 3 in a row.
            let mut seq = vec![false; n];
            for i in at {
                if i < n && (i == 0 || !seq[i - 1]) && (i + 1 >= n || !seq[i + 1]) {
                    seq[i] = true;
                }
            }
            let mut d = Debouncer::new(3);
            for (i, p) in seq.iter().enumerate() {
                prop_assert_eq!(d.update(Hand::Right, *p, i as f64).unwrap(), None);
            }
        }
    }
}
