//! Message accounting for the simulated cluster.
//!
//! Partitions share one address space, so "network" traffic is whatever a
//! partition does that would have to cross a machine boundary. Each such event
//! is tallied against the partition that initiated it.

use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Default)]
struct Tally {
    remote_loads: AtomicU64,
    remote_label_checks: AtomicU64,
    binding_exchanges: AtomicU64,
    result_fetches: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageCounts {
    pub remote_loads: u64,
    pub remote_label_checks: u64,
    pub binding_exchanges: u64,
    pub result_fetches: u64,
}

impl MessageCounts {
    pub fn total(&self) -> u64 {
        self.remote_loads + self.remote_label_checks + self.binding_exchanges + self.result_fetches
    }
}

impl std::ops::Add for MessageCounts {
    type Output = MessageCounts;

    fn add(self, rhs: Self) -> Self {
        MessageCounts {
            remote_loads: self.remote_loads + rhs.remote_loads,
            remote_label_checks: self.remote_label_checks + rhs.remote_label_checks,
            binding_exchanges: self.binding_exchanges + rhs.binding_exchanges,
            result_fetches: self.result_fetches + rhs.result_fetches,
        }
    }
}

#[derive(Debug)]
pub struct MessageBus {
    tallies: Vec<Tally>,
}

impl MessageBus {
    pub fn new(partitions: usize) -> Self {
        MessageBus {
            tallies: (0..partitions).map(|_| Tally::default()).collect(),
        }
    }

    pub fn partitions(&self) -> usize {
        self.tallies.len()
    }

    pub fn record_remote_load(&self, requester: usize) {
        self.tallies[requester].remote_loads.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_remote_label_check(&self, requester: usize) {
        self.tallies[requester]
            .remote_label_checks
            .fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_binding_exchange(&self, sender: usize, messages: u64) {
        self.tallies[sender]
            .binding_exchanges
            .fetch_add(messages, Ordering::Relaxed);
    }

    pub fn record_result_fetch(&self, requester: usize, messages: u64) {
        self.tallies[requester]
            .result_fetches
            .fetch_add(messages, Ordering::Relaxed);
    }

    pub fn counts(&self, partition: usize) -> MessageCounts {
        let t = &self.tallies[partition];
        MessageCounts {
            remote_loads: t.remote_loads.load(Ordering::Relaxed),
            remote_label_checks: t.remote_label_checks.load(Ordering::Relaxed),
            binding_exchanges: t.binding_exchanges.load(Ordering::Relaxed),
            result_fetches: t.result_fetches.load(Ordering::Relaxed),
        }
    }

    pub fn per_partition(&self) -> Vec<MessageCounts> {
        (0..self.tallies.len()).map(|k| self.counts(k)).collect()
    }

    pub fn totals(&self) -> MessageCounts {
        self.per_partition()
            .into_iter()
            .fold(MessageCounts::default(), |acc, c| acc + c)
    }

    pub fn reset(&self) {
        for t in &self.tallies {
            t.remote_loads.store(0, Ordering::Relaxed);
            t.remote_label_checks.store(0, Ordering::Relaxed);
            t.binding_exchanges.store(0, Ordering::Relaxed);
            t.result_fetches.store(0, Ordering::Relaxed);
        }
    }
}
