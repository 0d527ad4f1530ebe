//! Small std-only synchronization helpers for the gateway: a counting
//! semaphore (concurrency bound) and per-key exclusion (single-flight).

use std::collections::HashSet;
use std::sync::{Condvar, Mutex};

pub struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> SemaphorePermit<'_> {
        let mut available = self.permits.lock().expect("semaphore lock");
        while *available == 0 {
            available = self.cv.wait(available).expect("semaphore wait");
        }
        *available -= 1;
        SemaphorePermit { sem: self }
    }
}

pub struct SemaphorePermit<'a> {
    sem: &'a Semaphore,
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        *self.sem.permits.lock().expect("semaphore lock") += 1;
        self.sem.cv.notify_one();
    }
}

/// Mutual exclusion per string key: concurrent identical cache keys wait on
/// each other so only one remote call is made.
pub struct KeyedLocks {
    inflight: Mutex<HashSet<String>>,
    cv: Condvar,
}

impl KeyedLocks {
    pub fn new() -> Self {
        KeyedLocks {
            inflight: Mutex::new(HashSet::new()),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self, key: &str) -> KeyPermit<'_> {
        let mut inflight = self.inflight.lock().expect("keyed lock");
        while inflight.contains(key) {
            inflight = self.cv.wait(inflight).expect("keyed wait");
        }
        inflight.insert(key.to_string());
        KeyPermit {
            locks: self,
            key: key.to_string(),
        }
    }
}

pub struct KeyPermit<'a> {
    locks: &'a KeyedLocks,
    key: String,
}

impl Drop for KeyPermit<'_> {
    fn drop(&mut self) {
        self.locks
            .inflight
            .lock()
            .expect("keyed lock")
            .remove(&self.key);
        self.locks.cv.notify_all();
    }
}
