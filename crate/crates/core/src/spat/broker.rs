use std::collections::VecDeque;
use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{broadcast_tick, encode_batch, Controller, SpatError, SpatMessage};

#[derive(Debug, Clone, Copy)]
pub struct BrokerOptions {
    /// Undelivered batches kept per subscriber before the oldest is dropped.
    pub queue_bound: usize,
}

impl Default for BrokerOptions {
    fn default() -> Self {
        BrokerOptions { queue_bound: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubscriberStats {
    pub id: u64,
    pub queued: usize,
    pub dropped: u64,
    pub sent: u64,
}

struct Slot {
    id: u64,
    queue: Mutex<VecDeque<Arc<[u8]>>>,
    ready: Condvar,
    dropped: AtomicU64,
    sent: AtomicU64,
    closed: AtomicBool,
}

impl Slot {
    fn push(&self, payload: Arc<[u8]>, bound: usize) {
        let mut q = self.queue.lock().expect("slot queue poisoned");
        q.push_back(payload);
        while q.len() > bound {
            q.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        self.ready.notify_one();
    }

    fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        let _guard = self.queue.lock().expect("slot queue poisoned");
        self.ready.notify_all();
    }

    fn writer(self: Arc<Self>, mut stream: TcpStream) {
        loop {
            let payload = {
                let mut q = self.queue.lock().expect("slot queue poisoned");
                loop {
                    if self.closed.load(Ordering::SeqCst) {
                        return;
                    }
                    if let Some(p) = q.pop_front() {
                        break p;
                    }
                    q = self.ready.wait(q).expect("slot queue poisoned");
                }
            };
            if let Err(e) = stream.write_all(&payload) {
                log::info!("subscriber {} disconnected: {e}", self.id);
                self.closed.store(true, Ordering::SeqCst);
                return;
            }
            self.sent.fetch_add(1, Ordering::Relaxed);
        }
    }
}

struct Shared {
    slots: Mutex<Vec<Arc<Slot>>>,
    shutdown: AtomicBool,
    next_id: AtomicU64,
    options: BrokerOptions,
}

/// TCP fan-out of SPaT batches to any number of subscribers.
///
/// Publishing never blocks on a subscriber: each one has a bounded queue
/// drained by its own writer, and overflow discards that subscriber's oldest
/// batch only.
pub struct Broker {
    shared: Arc<Shared>,
    addr: SocketAddr,
    acceptor: Option<JoinHandle<()>>,
}

impl Broker {
    pub fn bind(endpoint: &str, options: BrokerOptions) -> Result<Self, SpatError> {
        let listener = TcpListener::bind(endpoint).map_err(|source| SpatError::Bind {
            endpoint: endpoint.to_string(),
            source,
        })?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            slots: Mutex::new(Vec::new()),
            shutdown: AtomicBool::new(false),
            next_id: AtomicU64::new(0),
            options: BrokerOptions {
                queue_bound: options.queue_bound.max(1),
            },
        });
        let acceptor = {
            let shared = Arc::clone(&shared);
            thread::spawn(move || accept_loop(listener, shared))
        };
        Ok(Broker {
            shared,
            addr,
            acceptor: Some(acceptor),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Sends one batch (already framed) to every live subscriber.
    pub fn publish(&self, batch: &[SpatMessage]) {
        self.publish_bytes(encode_batch(batch).into())
    }

    pub fn publish_bytes(&self, payload: Arc<[u8]>) {
        let mut slots = self.shared.slots.lock().expect("slots poisoned");
        slots.retain(|s| !s.closed.load(Ordering::SeqCst));
        for slot in slots.iter() {
            slot.push(Arc::clone(&payload), self.shared.options.queue_bound);
        }
    }

    /// Publishes the controllers' state at scenario time `t_ms`.
    pub fn broadcast(&self, controllers: &[Controller], t_ms: u64) -> Vec<SpatMessage> {
        let batch = broadcast_tick(controllers, t_ms);
        self.publish(&batch);
        batch
    }

    pub fn subscriber_count(&self) -> usize {
        let slots = self.shared.slots.lock().expect("slots poisoned");
        slots.iter().filter(|s| !s.closed.load(Ordering::SeqCst)).count()
    }

    pub fn stats(&self) -> Vec<SubscriberStats> {
        let slots = self.shared.slots.lock().expect("slots poisoned");
        slots
            .iter()
            .map(|s| SubscriberStats {
                id: s.id,
                queued: s.queue.lock().map(|q| q.len()).unwrap_or(0),
                dropped: s.dropped.load(Ordering::Relaxed),
                sent: s.sent.load(Ordering::Relaxed),
            })
            .collect()
    }

    /// Blocks until at least `n` subscribers are connected or the timeout
    /// elapses.
    pub fn wait_for_subscribers(&self, n: usize, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        while Instant::now() < deadline {
            if self.subscriber_count() >= n {
                return true;
            }
            thread::sleep(Duration::from_millis(2));
        }
        self.subscriber_count() >= n
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        // unblock accept()
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
        for slot in self.shared.slots.lock().expect("slots poisoned").drain(..) {
            slot.close();
        }
    }
}

impl Drop for Broker {
    fn drop(&mut self) {
        self.stop();
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    for conn in listener.incoming() {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let _ = stream.set_nodelay(true);
        let slot = Arc::new(Slot {
            id: shared.next_id.fetch_add(1, Ordering::Relaxed),
            queue: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            dropped: AtomicU64::new(0),
            sent: AtomicU64::new(0),
            closed: AtomicBool::new(false),
        });
        log::info!("subscriber {} connected from {:?}", slot.id, stream.peer_addr().ok());
        shared
            .slots
            .lock()
            .expect("slots poisoned")
            .push(Arc::clone(&slot));
        thread::spawn(move || slot.writer(stream));
    }
}

/// A broker publishing on its own thread, one batch per simulated second.
pub struct ServeHandle {
    broker: Arc<Broker>,
    stop: Arc<AtomicBool>,
    ticker: Option<JoinHandle<()>>,
}

impl ServeHandle {
    pub fn broker(&self) -> &Broker {
        &self.broker
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.broker.local_addr()
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.ticker.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServeHandle {
    fn drop(&mut self) {
        self.halt();
    }
}

/// Binds `endpoint` and publishes `controllers` at every whole simulated
/// second starting from 0. `pace` is simulated seconds per wall second
/// (1.0 is real time). Stops after `duration_s` simulated seconds if given.
pub fn serve(
    endpoint: &str,
    controllers: Vec<Controller>,
    options: BrokerOptions,
    pace: f64,
    duration_s: Option<u64>,
) -> Result<ServeHandle, SpatError> {
    let broker = Arc::new(Broker::bind(endpoint, options)?);
    let stop = Arc::new(AtomicBool::new(false));
    let pace = if pace.is_finite() && pace > 0.0 { pace } else { 1.0 };
    let ticker = {
        let broker = Arc::clone(&broker);
        let stop = Arc::clone(&stop);
        thread::spawn(move || {
            let start = Instant::now();
            let mut second = 0u64;
            while !stop.load(Ordering::SeqCst) {
                if duration_s.is_some_and(|d| second > d) {
                    break;
                }
                let due = start + Duration::from_secs_f64(second as f64 / pace);
                let now = Instant::now();
                if due > now {
                    thread::sleep((due - now).min(Duration::from_millis(50)));
                    continue;
                }
                broker.broadcast(&controllers, second * 1000);
                second += 1;
            }
        })
    };
    Ok(ServeHandle {
        broker,
        stop,
        ticker: Some(ticker),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_oldest_when_over_bound() {
        let slot = Slot {
            id: 0,
            queue: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            dropped: AtomicU64::new(0),
            sent: AtomicU64::new(0),
            closed: AtomicBool::new(false),
        };
        for k in 0..5u8 {
            slot.push(Arc::from(vec![k]), 3);
        }
        let q = slot.queue.lock().unwrap();
        assert_eq!(q.iter().map(|p| p[0]).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(slot.dropped.load(Ordering::Relaxed), 2);
    }

    #[test]
    fn bind_failure_is_reported() {
        let b = Broker::bind("127.0.0.1:0", BrokerOptions::default()).unwrap();
        let taken = b.local_addr().to_string();
        assert!(matches!(
            Broker::bind(&taken, BrokerOptions::default()),
            Err(SpatError::Bind { .. })
        ));
    }
}
