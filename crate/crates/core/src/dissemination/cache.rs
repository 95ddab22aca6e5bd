use crate::content_embed::ContentId;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CacheError {
    #[error("item of {size} bytes exceeds cache capacity {capacity}")]
    TooLarge { size: u64, capacity: u64 },
}

/// Byte-bounded item store with least-recently-used eviction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderCache {
    pub provider: u32,
    capacity: u64,
    used: u64,
    // content -> (size, last use stamp)
    items: BTreeMap<ContentId, (u64, u64)>,
    clock: u64,
}

impl ProviderCache {
    pub fn new(provider: u32, capacity: u64) -> Self {
        Self {
            provider,
            capacity,
            used: 0,
            items: BTreeMap::new(),
            clock: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, c: ContentId) -> bool {
        self.items.contains_key(&c)
    }

    pub fn items(&self) -> impl Iterator<Item = ContentId> + '_ {
        self.items.keys().copied()
    }

    /// Marks `c` as used.
    pub fn touch(&mut self, c: ContentId) {
        self.clock += 1;
        if let Some(e) = self.items.get_mut(&c) {
            e.1 = self.clock;
        }
    }

    /// Stores `c`, evicting least recently used items until it fits.
    /// Returns the evicted items in eviction order.
    pub fn insert(&mut self, c: ContentId, size: u64) -> Result<Vec<ContentId>, CacheError> {
        if size > self.capacity {
            return Err(CacheError::TooLarge {
                size,
                capacity: self.capacity,
            });
        }
        if self.contains(c) {
            self.touch(c);
            return Ok(Vec::new());
        }
        let mut evicted = Vec::new();
        while self.used + size > self.capacity {
            let (&victim, _) = self
                .items
                .iter()
                .min_by_key(|(id, e)| (e.1, **id))
                .expect("cache non-empty while over capacity");
            let (vsize, _) = self.items.remove(&victim).unwrap();
            self.used -= vsize;
            evicted.push(victim);
        }
        self.clock += 1;
        self.items.insert(c, (size, self.clock));
        self.used += size;
        Ok(evicted)
    }
}
