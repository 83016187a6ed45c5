//! Sliding-window request limiter with an injectable clock.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source used by the limiter and retry back-off.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// A clock whose `sleep` advances time instantly. Used in tests.
#[derive(Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

/// Allows at most `capacity` dispatches in any half-open window of length
/// `window`.
pub struct RateLimiter {
    clock: Arc<dyn Clock>,
    window: Duration,
    capacity: usize,
    history: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    /// Limiter for `per_second` requests per second. Rates below one become
    /// one request per `1/per_second` seconds.
    pub fn per_second(per_second: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(
            per_second.is_finite() && per_second > 0.0,
            "rate must be positive, got {per_second}"
        );
        let (capacity, window) = if per_second >= 1.0 {
            (per_second.floor() as usize, Duration::from_secs(1))
        } else {
            (1, Duration::from_secs_f64(1.0 / per_second))
        };
        Self {
            clock,
            window,
            capacity,
            history: Mutex::new(VecDeque::with_capacity(capacity)),
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Blocks until a request may be dispatched and returns the dispatch time.
    pub fn acquire(&self) -> Duration {
        loop {
            let wait = {
                let mut history = self.history.lock().unwrap();
                let now = self.clock.now();
                while history.front().is_some_and(|&t| t + self.window <= now) {
                    history.pop_front();
                }
                if history.len() < self.capacity {
                    history.push_back(now);
                    return now;
                }
                history[0] + self.window - now
            };
            self.clock.sleep(wait);
        }
    }
}
