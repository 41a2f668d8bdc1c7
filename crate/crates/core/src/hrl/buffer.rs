//! Bounded FIFO replay buffer with uniform sampling.

use std::collections::VecDeque;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, items: VecDeque::with_capacity(capacity) }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn extend<I: IntoIterator<Item = T>>(&mut self, items: I) {
        for item in items {
            self.push(item);
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, batch: usize, rng: &mut RngStream) -> Vec<T> {
        assert!(!self.items.is_empty(), "sampling an empty buffer");
        (0..batch).map(|_| self.items[rng.below(self.items.len())].clone()).collect()
    }
}

impl<T: Clone + Serialize + DeserializeOwned> ReplayBuffer<T> {
    /// Debug snapshot: a JSON manifest plus line-delimited transitions.
    pub fn snapshot(&self, dir: &Path, name: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = serde_json::json!({
            "kind": name,
            "capacity": self.capacity,
            "len": self.items.len(),
        });
        std::fs::write(dir.join(format!("{name}.manifest.json")), manifest.to_string())?;
        let mut lines = String::new();
        for item in &self.items {
            lines.push_str(
                &serde_json::to_string(item)
                    .map_err(|e| Error::Schema(format!("snapshot encode: {e}")))?,
            );
            lines.push('\n');
        }
        std::fs::write(dir.join(format!("{name}.jsonl")), lines)?;
        Ok(())
    }

    pub fn restore(dir: &Path, name: &str) -> Result<Self> {
        let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(
            dir.join(format!("{name}.manifest.json")),
        )?)
        .map_err(|e| Error::Schema(format!("snapshot manifest: {e}")))?;
        let capacity = manifest["capacity"]
            .as_u64()
            .ok_or_else(|| Error::Schema("snapshot manifest: capacity".into()))?
            as usize;
        let mut buf = Self::new(capacity);
        let text = std::fs::read_to_string(dir.join(format!("{name}.jsonl")))?;
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            buf.push(
                serde_json::from_str(line)
                    .map_err(|e| Error::Schema(format!("snapshot line: {e}")))?,
            );
        }
        Ok(buf)
    }
}
