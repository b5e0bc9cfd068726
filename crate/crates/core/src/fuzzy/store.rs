use std::sync::{Arc, Mutex, RwLock};

use super::rule::{RuleBase, RuleEdit};
use super::Result;

/// Shared rule base with single-writer, many-reader swap semantics.
///
/// Readers take an `Arc` snapshot and evaluate against it; an edit builds a
/// complete new base off to the side and publishes it with one pointer swap.
#[derive(Debug)]
pub struct RuleStore {
    current: RwLock<Versioned>,
    writer: Mutex<()>,
}

#[derive(Debug, Clone)]
struct Versioned {
    version: u64,
    base: Arc<RuleBase>,
}

impl RuleStore {
    pub fn new(base: RuleBase) -> Self {
        RuleStore { current: RwLock::new(Versioned { version: 0, base: Arc::new(base) }), writer: Mutex::new(()) }
    }

    pub fn snapshot(&self) -> Arc<RuleBase> {
        self.current.read().expect("rule store poisoned").base.clone()
    }

    /// Snapshot together with the number of edits applied so far.
    pub fn versioned(&self) -> (u64, Arc<RuleBase>) {
        let v = self.current.read().expect("rule store poisoned");
        (v.version, v.base.clone())
    }

    pub fn apply(&self, edit: &RuleEdit) -> Result<u64> {
        let _w = self.writer.lock().expect("rule store poisoned");
        let base = self.snapshot();
        let next = base.apply_edit(edit)?;
        Ok(self.swap(next))
    }

    pub fn replace(&self, base: RuleBase) -> u64 {
        let _w = self.writer.lock().expect("rule store poisoned");
        self.swap(base)
    }

    fn swap(&self, base: RuleBase) -> u64 {
        let mut cur = self.current.write().expect("rule store poisoned");
        cur.version += 1;
        cur.base = Arc::new(base);
        cur.version
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{fuzzify, infer_decision, CrispInputSnapshot, RuleId, DEFAULT_THRESHOLD};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;
    use std::sync::Arc;
    use std::thread;

    #[test]
    fn readers_only_observe_whole_bases() {
        let store = Arc::new(RuleStore::new(RuleBase::bundled_default()));
        let toggles: [RuleId; 4] = [2, 6, 13, 16];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let edits: Vec<RuleEdit> = (0..1000)
            .map(|_| {
                let id = toggles[rng.random_range(0..toggles.len())];
                if rng.random_bool(0.5) {
                    RuleEdit::Disable { id }
                } else {
                    RuleEdit::Enable { id }
                }
            })
            .collect();

        // Expected enabled-set fingerprint after every prefix of the edit sequence.
        let mut expected = HashMap::new();
        let mut base = RuleBase::bundled_default();
        expected.insert(0u64, fingerprint(&base));
        for (i, e) in edits.iter().enumerate() {
            base = base.apply_edit(e).unwrap();
            expected.insert(i as u64 + 1, fingerprint(&base));
        }
        let expected = Arc::new(expected);

        let readers: Vec<_> = (0..4)
            .map(|k| {
                let store = store.clone();
                let expected = expected.clone();
                thread::spawn(move || {
                    let snap = CrispInputSnapshot::at(0.0).with("time", 9.0 + k as f64).with("danger_zone", 1.0);
                    for _ in 0..2000 {
                        let (version, base) = store.versioned();
                        assert_eq!(fingerprint(&base), expected[&version]);
                        let fz = fuzzify(&base, &snap).unwrap();
                        infer_decision(&base, &fz, DEFAULT_THRESHOLD).unwrap();
                    }
                })
            })
            .collect();
        for e in &edits {
            store.apply(e).unwrap();
        }
        for r in readers {
            r.join().unwrap();
        }
        assert_eq!(fingerprint(&store.snapshot()), expected[&1000]);
    }

    fn fingerprint(base: &RuleBase) -> Vec<(RuleId, bool)> {
        base.rules().map(|r| (r.id, r.enabled)).collect()
    }

    #[test]
    fn failed_edit_leaves_base_untouched() {
        let store = RuleStore::new(RuleBase::bundled_default());
        assert!(store.apply(&RuleEdit::Remove { id: 77 }).is_err());
        assert_eq!(store.versioned().0, 0);
        assert_eq!(*store.snapshot(), RuleBase::bundled_default());
    }
}
