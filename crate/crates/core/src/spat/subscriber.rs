use std::io::{BufRead, BufReader};
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, TryRecvError};
use std::thread;

use super::{ChannelModel, Delivered, LossyChannel, SpatError, SpatMessage};

enum Incoming {
    Message(SpatMessage),
    Malformed(String),
    Closed(Option<String>),
}

/// Result of draining the subscriber up to some time.
#[derive(Debug, Default)]
pub struct SubscriberPoll {
    pub delivered: Vec<Delivered>,
    /// Number of lines that failed to parse since the last poll.
    pub malformed: usize,
    /// The broker connection is gone and nothing remains in flight; the
    /// stream has ended and the consumer may reconnect.
    pub disconnected: bool,
}

/// Client side of the SPaT feed. Lines read from the broker pass through a
/// [`LossyChannel`], so what the consumer sees is what a truck behind the
/// modeled link would see.
pub struct SpatSubscriber {
    rx: Receiver<Incoming>,
    channel: LossyChannel,
    closed: bool,
    endpoint: String,
}

impl SpatSubscriber {
    pub fn connect(endpoint: &str, model: ChannelModel, seed: u64) -> Result<Self, SpatError> {
        let channel = LossyChannel::new(model, seed)?;
        let stream = TcpStream::connect(endpoint).map_err(|source| SpatError::Connect {
            endpoint: endpoint.to_string(),
            source,
        })?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let reader = BufReader::new(stream);
            for line in reader.lines() {
                let event = match line {
                    Ok(l) if l.trim().is_empty() => continue,
                    Ok(l) => match SpatMessage::from_line(&l) {
                        Ok(m) => Incoming::Message(m),
                        Err(_) => Incoming::Malformed(l),
                    },
                    Err(e) => {
                        let _ = tx.send(Incoming::Closed(Some(e.to_string())));
                        return;
                    }
                };
                if tx.send(event).is_err() {
                    return;
                }
            }
            let _ = tx.send(Incoming::Closed(None));
        });
        Ok(SpatSubscriber {
            rx,
            channel,
            closed: false,
            endpoint: endpoint.to_string(),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Feeds everything received so far into the link model and returns the
    /// messages that have arrived by `now_ms` (scenario time).
    pub fn poll(&mut self, now_ms: u64) -> SubscriberPoll {
        let mut malformed = 0;
        loop {
            match self.rx.try_recv() {
                Ok(Incoming::Message(m)) => self.channel.send(m),
                Ok(Incoming::Malformed(line)) => {
                    log::warn!("discarding malformed SPaT line: {line}");
                    malformed += 1;
                }
                Ok(Incoming::Closed(reason)) => {
                    if let Some(r) = reason {
                        log::warn!("SPaT stream from {} closed: {r}", self.endpoint);
                    }
                    self.closed = true;
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    self.closed = true;
                    break;
                }
            }
        }
        let delivered = self.channel.poll(now_ms);
        SubscriberPoll {
            delivered,
            malformed,
            disconnected: self.closed && self.channel.pending() == 0,
        }
    }

    /// Blocks until at least one raw line has been received or the stream
    /// closes. Useful for consumers that run on wall time.
    pub fn wait_for_traffic(&mut self, timeout: std::time::Duration) -> bool {
        match self.rx.recv_timeout(timeout) {
            Ok(Incoming::Message(m)) => {
                self.channel.send(m);
                true
            }
            Ok(Incoming::Malformed(_)) => true,
            Ok(Incoming::Closed(_)) => {
                self.closed = true;
                true
            }
            Err(_) => false,
        }
    }

    /// Blocks until `n` more messages have been read from the broker and fed
    /// into the link model. Lock-step consumers call this after every publish
    /// so that simulated time never runs ahead of the network.
    pub fn pump(&mut self, n: usize, timeout: std::time::Duration) -> Result<(), SpatError> {
        let deadline = std::time::Instant::now() + timeout;
        let mut got = 0;
        while got < n {
            let left = deadline.saturating_duration_since(std::time::Instant::now());
            match self.rx.recv_timeout(left) {
                Ok(Incoming::Message(m)) => {
                    self.channel.send(m);
                    got += 1;
                }
                Ok(Incoming::Malformed(line)) => {
                    return Err(SpatError::Malformed(line));
                }
                Ok(Incoming::Closed(_)) | Err(mpsc::RecvTimeoutError::Disconnected) => {
                    self.closed = true;
                    return Err(SpatError::Io(std::io::Error::new(
                        std::io::ErrorKind::UnexpectedEof,
                        format!("SPaT stream from {} closed", self.endpoint),
                    )));
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    return Err(SpatError::Io(std::io::Error::new(
                        std::io::ErrorKind::TimedOut,
                        format!("waited {timeout:?} for {n} SPaT messages, got {got}"),
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn channel(&self) -> &LossyChannel {
        &self.channel
    }
}
