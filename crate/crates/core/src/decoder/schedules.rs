//! Per-member message update kernels for one iteration of each schedule.

use super::{c2v_from_product, clamp_llr, half_tanh, MemberMessages};
use crate::bits::BitBlock;
use crate::gf2::ParityCheckMatrix;

/// Writes into `out[k]` the product of `t[edges]` excluding position `k`.
fn excluded_products(t: &[f64], out: &mut Vec<f64>) {
    let d = t.len();
    out.clear();
    out.resize(d, 1.0);
    let mut acc = 1.0;
    for k in 0..d {
        out[k] = acc;
        acc *= t[k];
    }
    acc = 1.0;
    for k in (0..d).rev() {
        out[k] *= acc;
        acc *= t[k];
    }
}

/// Recomputes every c2v message of check `j`.
fn update_check(
    h: &ParityCheckMatrix,
    msgs: &mut MemberMessages,
    syndrome: &BitBlock,
    j: usize,
    scratch: &mut Vec<f64>,
) {
    let edges = h.row_edges(j);
    excluded_products(&msgs.half_tanh[edges.clone()], scratch);
    let z = syndrome.get(j);
    for (k, e) in edges.enumerate() {
        msgs.c2v[e] = c2v_from_product(scratch[k], z);
    }
}

/// Sets the v2c message on edge `e` to `total` minus that edge's own c2v,
/// where `total` is the channel value plus every incoming c2v of the variable
/// in this member.
#[inline]
fn set_v2c(msgs: &mut MemberMessages, total: f64, e: usize) {
    let v = clamp_llr(total - msgs.c2v[e]);
    msgs.v2c[e] = v;
    msgs.half_tanh[e] = half_tanh(v);
}

/// Refreshes every outgoing v2c message of variable `i`, optionally skipping
/// edge `skip`.
#[inline]
fn refresh_variable(
    h: &ParityCheckMatrix,
    msgs: &mut MemberMessages,
    channel: f64,
    i: usize,
    skip: Option<usize>,
) {
    let edges = h.col_edges(i);
    let total = channel + edges.iter().map(|&e| msgs.c2v[e]).sum::<f64>();
    for &e in edges {
        if Some(e) != skip {
            set_v2c(msgs, total, e);
        }
    }
}

/// All checks, then all variables.
pub(super) fn flooding(
    h: &ParityCheckMatrix,
    msgs: &mut MemberMessages,
    channel: &[f64],
    syndrome: &BitBlock,
    scratch: &mut Vec<f64>,
) {
    for j in 0..h.m() {
        update_check(h, msgs, syndrome, j, scratch);
    }
    for (i, &lp) in channel.iter().enumerate() {
        refresh_variable(h, msgs, lp, i, None);
    }
}

/// Product of `half_tanh` over the edges of one check, with exact zeros
/// counted separately so that a single edge can be divided out.
#[derive(Clone, Copy, Debug, Default)]
pub(super) struct CheckProduct {
    nonzero: f64,
    zeros: u32,
}

/// Below this magnitude the running product is recomputed directly rather
/// than divided, to avoid working with subnormal values.
const PRODUCT_FLOOR: f64 = 1e-250;

impl CheckProduct {
    fn compute(values: &[f64]) -> Self {
        let mut p = CheckProduct {
            nonzero: 1.0,
            zeros: 0,
        };
        for &t in values {
            if t == 0.0 {
                p.zeros += 1;
            } else {
                p.nonzero *= t;
            }
        }
        p
    }

    /// Product over every edge except the one holding `own`, or `None` when
    /// the division would be unreliable.
    fn excluding(&self, own: f64) -> Option<f64> {
        if own == 0.0 {
            Some(if self.zeros == 1 { self.nonzero } else { 0.0 })
        } else if self.zeros > 0 {
            Some(0.0)
        } else if self.nonzero.abs() < PRODUCT_FLOOR {
            None
        } else {
            Some(self.nonzero / own)
        }
    }

    /// Replaces factor `old` by `new`; `false` when a recompute is needed.
    fn replace(&mut self, old: f64, new: f64) -> bool {
        if old == 0.0 {
            self.zeros -= 1;
        } else {
            if self.nonzero.abs() < PRODUCT_FLOOR {
                return false;
            }
            self.nonzero /= old;
        }
        if new == 0.0 {
            self.zeros += 1;
        } else {
            self.nonzero *= new;
        }
        true
    }
}

/// Variable by variable: refresh the incoming c2v messages of a variable,
/// then its outgoing v2c messages.
///
/// Each check keeps a running product of its `half_tanh` values, so the
/// product excluding one edge costs a division instead of a pass over the row.
pub(super) fn shuffled(
    h: &ParityCheckMatrix,
    msgs: &mut MemberMessages,
    channel: &[f64],
    syndrome: &BitBlock,
    products: &mut Vec<CheckProduct>,
) {
    products.clear();
    products.extend((0..h.m()).map(|j| CheckProduct::compute(&msgs.half_tanh[h.row_edges(j)])));
    let direct = |msgs: &MemberMessages, j: usize, skip: usize| -> f64 {
        h.row_edges(j)
            .filter(|&o| o != skip)
            .map(|o| msgs.half_tanh[o])
            .product()
    };
    for (i, &lp) in channel.iter().enumerate() {
        for (&j, &e) in h.col(i).iter().zip(h.col_edges(i)) {
            let prod = products[j]
                .excluding(msgs.half_tanh[e])
                .unwrap_or_else(|| direct(msgs, j, e));
            msgs.c2v[e] = c2v_from_product(prod, syndrome.get(j));
        }
        let edges = h.col_edges(i);
        let total = lp + edges.iter().map(|&e| msgs.c2v[e]).sum::<f64>();
        for (&j, &e) in h.col(i).iter().zip(edges) {
            let old = msgs.half_tanh[e];
            set_v2c(msgs, total, e);
            if !products[j].replace(old, msgs.half_tanh[e]) {
                products[j] = CheckProduct::compute(&msgs.half_tanh[h.row_edges(j)]);
            }
        }
    }
}

/// Check by check: refresh the c2v messages of a check, with each variable's
/// v2c messages toward its other checks following immediately.
///
/// A v2c message is only read when its check is processed, so instead of
/// rewriting every other v2c of a variable after each check update, the
/// variable's running total (channel value plus current c2v messages) is kept
/// and the v2c is formed from it when the check is reached. The values read
/// are the ones the eager refresh would have stored.
pub(super) fn layered(
    h: &ParityCheckMatrix,
    msgs: &mut MemberMessages,
    channel: &[f64],
    syndrome: &BitBlock,
    scratch: &mut Vec<f64>,
    totals: &mut Vec<f64>,
) {
    totals.clear();
    totals.extend(
        channel
            .iter()
            .enumerate()
            .map(|(i, &lp)| lp + h.col_edges(i).iter().map(|&e| msgs.c2v[e]).sum::<f64>()),
    );
    for j in 0..h.m() {
        for e in h.row_edges(j) {
            set_v2c(msgs, totals[h.edge_var(e)], e);
        }
        let edges = h.row_edges(j);
        excluded_products(&msgs.half_tanh[edges.clone()], scratch);
        let z = syndrome.get(j);
        for (k, e) in edges.enumerate() {
            let new = c2v_from_product(scratch[k], z);
            totals[h.edge_var(e)] += new - msgs.c2v[e];
            msgs.c2v[e] = new;
        }
    }
    // Leave every v2c consistent with the final c2v messages.
    for i in 0..h.n() {
        for &e in h.col_edges(i) {
            set_v2c(msgs, totals[i], e);
        }
    }
}
