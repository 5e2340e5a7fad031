//! A party's protocol session and the two-party runner used by tests,
//! benchmarks and the bindings.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dealer::{CorrelationSource, CorrelationUsage};
use crate::error::{Error, Result};
use crate::ring::FxpConfig;
use crate::transport::{Channel, TrafficSnapshot, TrafficStats};

/// Party 0 plays the model owner (server), party 1 the data owner (client).
pub const SERVER: u8 = 0;
pub const CLIENT: u8 = 1;

/// Invocation counters. Slot counts are per element, so a vectorized call
/// over `n` elements adds `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub mul_calls: u64,
    pub mul_slots: u64,
    pub matmul_calls: u64,
    pub gt_slots: u64,
    pub mux_slots: u64,
    pub b2a_slots: u64,
    pub trunc_exact_slots: u64,
    pub and_slots: u64,
}

impl OpCounters {
    pub fn since(&self, e: &OpCounters) -> OpCounters {
        OpCounters {
            mul_calls: self.mul_calls - e.mul_calls,
            mul_slots: self.mul_slots - e.mul_slots,
            matmul_calls: self.matmul_calls - e.matmul_calls,
            gt_slots: self.gt_slots - e.gt_slots,
            mux_slots: self.mux_slots - e.mux_slots,
            b2a_slots: self.b2a_slots - e.b2a_slots,
            trunc_exact_slots: self.trunc_exact_slots - e.trunc_exact_slots,
            and_slots: self.and_slots - e.and_slots,
        }
    }
}

/// One party's view of a running two-party session.
pub struct Party {
    id: u8,
    cfg: FxpConfig,
    pub(crate) chan: Channel,
    pub(crate) dealer: CorrelationSource,
    pub(crate) rng: ChaCha20Rng,
    pub(crate) counters: OpCounters,
    pub(crate) exact_trunc: bool,
}

impl Party {
    /// `dealer_seed` must agree between the parties; local randomness is
    /// derived from it and the party id.
    pub fn new(cfg: FxpConfig, chan: Channel, dealer_seed: u64) -> Self {
        let id = chan.party();
        let dealer = CorrelationSource::new(dealer_seed, id, cfg, chan.stats());
        let mut rng = ChaCha20Rng::seed_from_u64(dealer_seed ^ 0x5eed_0000_0000_0000);
        rng.set_stream(100 + id as u64);
        Party {
            id,
            cfg,
            chan,
            dealer,
            rng,
            counters: OpCounters::default(),
            exact_trunc: false,
        }
    }

    pub fn with_budget(mut self, budget: CorrelationUsage) -> Self {
        self.dealer = self.dealer.with_budget(budget);
        self
    }

    /// Routes every truncation through the exact mode, making
    /// reconstructions independent of share randomness.
    pub fn set_exact_truncation(&mut self, on: bool) {
        self.exact_trunc = on;
    }

    pub fn exact_truncation(&self) -> bool {
        self.exact_trunc
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn cfg(&self) -> FxpConfig {
        self.cfg
    }

    pub fn stats(&self) -> Arc<TrafficStats> {
        self.chan.stats()
    }

    pub fn traffic(&self) -> TrafficSnapshot {
        self.chan.stats().snapshot()
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    pub fn correlation_usage(&self) -> CorrelationUsage {
        self.dealer.usage()
    }

    pub fn transcript_digest(&self) -> [u8; 32] {
        self.chan.transcript_digest()
    }

    pub fn channel(&mut self) -> &mut Channel {
        &mut self.chan
    }

    /// Exchanges ring vectors with the peer in one round.
    pub(crate) fn exchange_ring(&mut self, vals: &[u64]) -> Result<Vec<u64>> {
        let bytes = self.cfg.pack(vals);
        let got = self.chan.exchange(&bytes)?;
        let out = self.cfg.unpack(&got)?;
        if out.len() != vals.len() {
            return Err(Error::Protocol(format!(
                "peer sent {} ring elements, expected {}",
                out.len(),
                vals.len()
            )));
        }
        Ok(out)
    }
}

/// Results of a two-party in-process run.
#[derive(Debug)]
pub struct PairRun<T> {
    pub outputs: [T; 2],
    pub traffic: [TrafficSnapshot; 2],
    pub counters: [OpCounters; 2],
    pub usage: [CorrelationUsage; 2],
    pub transcripts: [[u8; 32]; 2],
}

impl<T> PairRun<T> {
    /// Online bytes sent by both parties together.
    pub fn online_bytes(&self) -> u64 {
        self.traffic[0].online_bytes + self.traffic[1].online_bytes
    }

    pub fn offline_bytes(&self) -> u64 {
        self.traffic[0].offline_bytes + self.traffic[1].offline_bytes
    }

    pub fn rounds(&self) -> u64 {
        self.traffic[0].rounds.max(self.traffic[1].rounds)
    }
}

/// Runs the same party program on both ends of an in-process channel.
pub fn run_pair<T, F>(cfg: FxpConfig, seed: u64, program: F) -> Result<PairRun<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let (c0, c1) = Channel::pair();
    run_on_channels(cfg, seed, c0, c1, &program)
}

pub(crate) fn run_on_channels<T, F>(
    cfg: FxpConfig,
    seed: u64,
    c0: Channel,
    c1: Channel,
    program: &F,
) -> Result<PairRun<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let run = |c: Channel| -> Result<(T, TrafficSnapshot, OpCounters, CorrelationUsage, [u8; 32])> {
        let mut p = Party::new(cfg, c, seed);
        let out = program(&mut p)?;
        p.chan.flush()?;
        Ok((
            out,
            p.traffic(),
            p.counters,
            p.correlation_usage(),
            p.transcript_digest(),
        ))
    };
    let (r0, r1) = std::thread::scope(|s| {
        let h1 = s.spawn(|| run(c1));
        let r0 = run(c0);
        // a failing party drops its channel, so the peer errors out too
        let r1 = h1.join().map_err(|_| Error::Session("party 1 panicked".into()));
        (r0, r1)
    });
    let (o0, t0, k0, u0, d0) = r0?;
    let (o1, t1, k1, u1, d1) = r1??;
    Ok(PairRun {
        outputs: [o0, o1],
        traffic: [t0, t1],
        counters: [k0, k1],
        usage: [u0, u1],
        transcripts: [d0, d1],
    })
}

/// Same as [`run_pair`] but over a loopback TCP connection.
pub fn run_pair_tcp<T, F>(cfg: FxpConfig, seed: u64, program: F) -> Result<PairRun<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let (c0, c1) = std::thread::scope(|s| {
        let h = s.spawn(|| Channel::tcp_connect(addr, std::time::Duration::from_secs(10)));
        let c0 = Channel::tcp_accept(&listener);
        (c0, h.join().expect("connect thread"))
    });
    run_on_channels(cfg, seed, c0?, c1?, &program)
}
