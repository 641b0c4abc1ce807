//! Global query rate limiter.
//!
//! Permits are spaced on a virtual schedule: each acquire of `n` reserves
//! the slot `max(now, next_free)` and pushes `next_free` forward by
//! `n / qps`. Any half-open window of one second therefore contains at most
//! `qps` permits, whatever the number of callers.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's epoch.
    fn now(&self) -> Duration;
    /// Blocks until `now() >= t`.
    fn sleep_until(&self, t: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    epoch: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            epoch: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.epoch.elapsed()
    }

    fn sleep_until(&self, t: Duration) {
        let now = self.now();
        if t > now {
            std::thread::sleep(t - now);
        }
    }
}

/// Virtual clock for tests: sleeping advances time instead of waiting.
#[derive(Debug, Default)]
pub struct ManualClock {
    nanos: AtomicU64,
}

impl ManualClock {
    pub fn new() -> Self {
        ManualClock::default()
    }

    pub fn advance(&self, d: Duration) {
        self.nanos.fetch_add(d.as_nanos() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
    }

    fn sleep_until(&self, t: Duration) {
        self.nanos.fetch_max(t.as_nanos() as u64, Ordering::SeqCst);
    }
}

/// When a granted permit may be used, on the limiter's clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Permit {
    pub at: Duration,
}

#[derive(Debug)]
pub struct RateLimiter<C: Clock = SystemClock> {
    clock: C,
    interval_nanos: f64,
    next_free_nanos: Mutex<f64>,
}

impl RateLimiter<SystemClock> {
    /// # Panics
    /// If `qps` is not a positive finite number.
    pub fn new(qps: f64) -> Self {
        RateLimiter::with_clock(qps, SystemClock::new())
    }
}

impl<C: Clock> RateLimiter<C> {
    pub fn with_clock(qps: f64, clock: C) -> Self {
        assert!(qps.is_finite() && qps > 0.0, "qps must be positive");
        RateLimiter {
            clock,
            interval_nanos: 1e9 / qps,
            next_free_nanos: Mutex::new(0.0),
        }
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }

    pub fn qps(&self) -> f64 {
        1e9 / self.interval_nanos
    }

    /// Blocks until `n` more operations fit under the rate.
    pub fn acquire(&self, n: u32) -> Permit {
        let n = n.max(1);
        let at = {
            let mut next = self.next_free_nanos.lock().expect("rate limiter poisoned");
            let now = self.clock.now().as_nanos() as f64;
            let at = next.max(now);
            *next = at + self.interval_nanos * f64::from(n);
            at
        };
        let at = Duration::from_nanos(at.ceil() as u64);
        self.clock.sleep_until(at);
        Permit { at }
    }
}

/// rate_limited_acquire(limiter, n)
pub fn rate_limited_acquire<C: Clock>(limiter: &RateLimiter<C>, n: u32) -> Permit {
    limiter.acquire(n)
}
