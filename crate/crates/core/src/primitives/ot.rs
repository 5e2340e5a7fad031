//! OT-based products of a shared bit with a value: the building block of
//! MUX and B2A. Random OT from the dealer is derandomized with the usual
//! choice-bit correction; the sender then ships a single ring element per
//! instance.

use crate::dealer::{OtReceiverKeys, OtSenderKeys, RotHalf};
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{AShare, BShare};
use crate::ring::{pack_bits, unpack_bits, FxpConfig};

fn sender_keys(h: RotHalf) -> Result<OtSenderKeys> {
    match h {
        RotHalf::Sender(s) => Ok(s),
        RotHalf::Receiver(_) => Err(Error::Protocol("expected sender OT half".into())),
    }
}

fn receiver_keys(h: RotHalf) -> Result<OtReceiverKeys> {
    match h {
        RotHalf::Receiver(r) => Ok(r),
        RotHalf::Sender(_) => Err(Error::Protocol("expected receiver OT half".into())),
    }
}

/// Sender step: given the receiver's corrections `e`, returns the sender's
/// output share and the message `D`.
fn sender_step(cfg: &FxpConfig, keys: &OtSenderKeys, e: &[u8], vals: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let mut out = Vec::with_capacity(vals.len());
    let mut msg = Vec::with_capacity(vals.len());
    for i in 0..vals.len() {
        let (ke, kn) = if e[i] == 0 {
            (keys.k0[i], keys.k1[i])
        } else {
            (keys.k1[i], keys.k0[i])
        };
        out.push(cfg.neg(ke));
        msg.push(cfg.sub(cfg.sub(kn, ke), vals[i]));
    }
    (out, msg)
}

fn receiver_finish(cfg: &FxpConfig, keys: &OtReceiverKeys, bits: &[u8], d: &[u64]) -> Vec<u64> {
    (0..bits.len())
        .map(|i| {
            if bits[i] == 0 {
                keys.key[i]
            } else {
                cfg.sub(keys.key[i], d[i])
            }
        })
        .collect()
}

impl Party {
    /// Shares of `c_i * v_i` where `sender` holds the ring values `v` and the
    /// peer holds bits `c`. Consumes one random OT per slot.
    pub fn ot_product_one(
        &mut self,
        sender: u8,
        vals: Option<&[u64]>,
        bits: Option<&[u8]>,
        n: usize,
    ) -> Result<Vec<u64>> {
        let cfg = self.cfg();
        if n == 0 {
            return Ok(Vec::new());
        }
        let half = self.dealer.random_ot(sender, n)?;
        if self.id() == sender {
            let keys = sender_keys(half)?;
            let vals = vals.ok_or_else(|| Error::Protocol("sender values missing".into()))?;
            let e = unpack_bits(&self.chan.recv()?, n)?;
            let (out, msg) = sender_step(&cfg, &keys, &e, vals);
            self.chan.send(&cfg.pack(&msg))?;
            self.chan.flush()?;
            Ok(out)
        } else {
            let keys = receiver_keys(half)?;
            let bits = bits.ok_or_else(|| Error::Protocol("receiver bits missing".into()))?;
            let e: Vec<u8> = bits.iter().zip(&keys.choice).map(|(c, r)| c ^ r).collect();
            self.chan.send(&pack_bits(&e))?;
            self.chan.flush()?;
            let d = cfg.unpack(&self.chan.recv()?)?;
            if d.len() != n {
                return Err(Error::Protocol("OT correction length".into()));
            }
            Ok(receiver_finish(&cfg, &keys, bits, &d))
        }
    }

    /// Both directions at once: each party sends its own `vals` and receives
    /// on its own `bits`. Returns shares of `v_0 * c_1 + v_1 * c_0`. Two rounds.
    pub fn ot_product_both(&mut self, vals: &[u64], bits: &[u8]) -> Result<Vec<u64>> {
        let cfg = self.cfg();
        let n = vals.len();
        if bits.len() != n {
            return Err(Error::Shape("ot product operand lengths".into()));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        // direction 0 (party 0 sends) is always drawn first
        let h0 = self.dealer.random_ot(0, n)?;
        let h1 = self.dealer.random_ot(1, n)?;
        let (snd, rcv) = if self.id() == 0 {
            (sender_keys(h0)?, receiver_keys(h1)?)
        } else {
            (sender_keys(h1)?, receiver_keys(h0)?)
        };
        let e: Vec<u8> = bits.iter().zip(&rcv.choice).map(|(c, r)| c ^ r).collect();
        let peer_e = unpack_bits(&self.chan.exchange(&pack_bits(&e))?, n)?;
        let (mut out, msg) = sender_step(&cfg, &snd, &peer_e, vals);
        let d = self.exchange_ring(&msg)?;
        let recv_out = receiver_finish(&cfg, &rcv, bits, &d);
        for (o, r) in out.iter_mut().zip(recv_out) {
            *o = cfg.add(*o, r);
        }
        Ok(out)
    }

    /// Oblivious selection: shares of `a` where the shared bit is 1, else 0.
    pub fn mux(&mut self, c: &BShare, a: &AShare) -> Result<AShare> {
        if c.len() != a.len() {
            return Err(Error::Shape(format!("mux of {} bits and {} slots", c.len(), a.len())));
        }
        let cfg = self.cfg();
        // (c0 ^ c1) a = c0 a0 + c1 a1 + c1 (1 - 2 c0) a0 + c0 (1 - 2 c1) a1
        let vals: Vec<u64> = a
            .data
            .iter()
            .zip(&c.bits)
            .map(|(&v, &b)| if b == 0 { v } else { cfg.neg(v) })
            .collect();
        let cross = self.ot_product_both(&vals, &c.bits)?;
        let data = a
            .data
            .iter()
            .zip(&c.bits)
            .zip(cross)
            .map(|((&v, &b), x)| if b == 0 { x } else { cfg.add(x, v) })
            .collect();
        self.counters.mux_slots += c.len() as u64;
        Ok(AShare {
            party: a.party,
            rows: a.rows,
            cols: a.cols,
            data,
        })
    }

    /// Boolean-to-arithmetic conversion of shared bits: `c0 + c1 - 2 c0 c1`.
    pub fn b2a(&mut self, c: &BShare) -> Result<AShare> {
        let cfg = self.cfg();
        let n = c.len();
        let my: Vec<u64> = c.bits.iter().map(|&b| b as u64).collect();
        let prod = if self.id() == 0 {
            self.ot_product_one(0, Some(&my), None, n)?
        } else {
            self.ot_product_one(0, None, Some(&c.bits), n)?
        };
        let data = my
            .iter()
            .zip(prod)
            .map(|(&b, p)| cfg.sub(b, cfg.add(p, p)))
            .collect();
        self.counters.b2a_slots += n as u64;
        Ok(AShare::vector(c.party, data))
    }
}
