use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BufferMode {
    Small,
    Large,
    /// Never evicts.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferSpec {
    pub mode: BufferMode,
    /// Required for small and large buffers; ignored for full ones.
    #[serde(default)]
    pub capacity: Option<usize>,
}

impl BufferSpec {
    pub fn full() -> Self {
        Self {
            mode: BufferMode::Full,
            capacity: None,
        }
    }

    pub fn small(capacity: usize) -> Self {
        Self {
            mode: BufferMode::Small,
            capacity: Some(capacity),
        }
    }

    pub fn large(capacity: usize) -> Self {
        Self {
            mode: BufferMode::Large,
            capacity: Some(capacity),
        }
    }

    /// Maximum stored count, `None` for unbounded.
    pub fn limit(&self) -> Result<Option<usize>> {
        match (self.mode, self.capacity) {
            (BufferMode::Full, _) => Ok(None),
            (_, Some(c)) if c > 0 => Ok(Some(c)),
            (mode, c) => Err(Error::Config(format!("{mode:?} buffer needs a positive capacity, got {c:?}"))),
        }
    }
}

impl Default for BufferSpec {
    fn default() -> Self {
        Self::full()
    }
}

/// Experience store. Bounded buffers evict oldest first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    spec: BufferSpec,
    limit: Option<usize>,
    items: VecDeque<T>,
    evicted: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(spec: BufferSpec) -> Result<Self> {
        Ok(Self {
            spec,
            limit: spec.limit()?,
            items: VecDeque::new(),
            evicted: 0,
        })
    }

    pub fn push(&mut self, item: T) {
        if let Some(limit) = self.limit {
            while self.items.len() >= limit {
                self.items.pop_front();
                self.evicted += 1;
            }
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

    /// Index 0 is the oldest stored item.
    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    pub fn evicted(&self) -> usize {
        self.evicted
    }

    pub fn spec(&self) -> BufferSpec {
        self.spec
    }
}
