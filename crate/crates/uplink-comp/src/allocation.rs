//! Message structures, per-message powers, base-station assignments and the
//! enumeration grids that realize unions over power allocations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a superimposed message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageTag {
    /// The only message of a UE.
    Single,
    /// Decoded by the serving BS and kept there.
    DisKept,
    /// Decoded by the serving BS and forwarded as bits.
    DisForwarded,
    /// Decoded by the quantizing BS without cooperation.
    DascLocal,
    /// Decoded individually by both base stations.
    DascCommon,
    /// Jointly decoded at the central base station.
    DascJoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId {
    pub ue: usize,
    pub tag: MessageTag,
}

impl MessageId {
    pub fn new(ue: usize, tag: MessageTag) -> Self {
        Self { ue, tag }
    }
}

/// Transmit power of every message plus the per-UE cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub powers: BTreeMap<MessageId, f64>,
    pub p_max: Vec<f64>,
}

impl PowerAllocation {
    /// One message per UE at the given powers.
    pub fn single(p: &[f64], p_max: &[f64]) -> Self {
        let powers = p.iter().enumerate().map(|(k, &v)| (MessageId::new(k, MessageTag::Single), v)).collect();
        Self { powers, p_max: p_max.to_vec() }
    }

    /// Every UE transmits one message at its cap.
    pub fn full_power(p_max: &[f64]) -> Self {
        Self::single(p_max, p_max)
    }

    pub fn n_ue(&self) -> usize {
        self.p_max.len()
    }

    pub fn power(&self, id: MessageId) -> f64 {
        self.powers.get(&id).copied().unwrap_or(0.0)
    }

    pub fn get(&self, ue: usize, tag: MessageTag) -> f64 {
        self.power(MessageId::new(ue, tag))
    }

    /// Total power per UE, the diagonal of `P(F_all)`.
    pub fn totals(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_ue()];
        for (id, p) in &self.powers {
            if id.ue < t.len() {
                t[id.ue] += p;
            }
        }
        t
    }

    pub fn messages(&self) -> Vec<MessageId> {
        self.powers.keys().copied().collect()
    }

    /// Powers in message order; the key used for deterministic tie-breaking.
    pub fn vector(&self) -> Vec<f64> {
        self.powers.values().copied().collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.powers.iter().all(|(id, p)| *p >= 0.0 && id.ue < self.n_ue())
            && self.totals().iter().zip(&self.p_max).all(|(t, m)| *t <= *m * (1.0 + 1e-12))
    }

    /// Renames UEs: UE `k` of the result is UE `order[k]` of `self`.
    pub fn relabel(&self, order: &[usize]) -> Self {
        let inverse: Vec<usize> = (0..order.len()).map(|k| order.iter().position(|&o| o == k).unwrap()).collect();
        Self {
            powers: self.powers.iter().map(|(id, p)| (MessageId::new(inverse[id.ue], id.tag), *p)).collect(),
            p_max: order.iter().map(|&o| self.p_max[o]).collect(),
        }
    }
}

/// Diagonal of `P(F)`: per UE, the summed power of its messages inside `subset`.
pub fn subset_power_matrix(alloc: &PowerAllocation, subset: &[MessageId], k: usize) -> Vec<f64> {
    let mut d = vec![0.0; k];
    for id in subset {
        if id.ue < k {
            d[id.ue] += alloc.power(*id);
        }
    }
    d
}

/// Which base station serves each UE, plus an optional cooperation direction.
/// Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub a: Vec<usize>,
    pub direction: Option<usize>,
}

impl Assignment {
    pub fn new(a: Vec<usize>) -> Self {
        Self { a, direction: None }
    }

    pub fn with_direction(a: Vec<usize>, b: usize) -> Self {
        Self { a, direction: Some(b) }
    }

    /// True when every BS serves exactly one UE.
    pub fn is_bijection(&self, n_bs: usize) -> bool {
        self.a.len() == n_bs && (0..n_bs).all(|m| self.a.iter().filter(|&&x| x == m).count() == 1)
    }

    pub fn validate(&self, n_bs: usize, n_ue: usize) -> Result<()> {
        if self.a.len() != n_ue {
            return Err(Error::DimensionMismatch(format!("assignment has {} entries for {n_ue} UEs", self.a.len())));
        }
        if let Some(m) = self.a.iter().find(|&&m| m >= n_bs) {
            return Err(Error::InvalidConfig(format!("assignment names BS {m} of {n_bs}")));
        }
        if let Some(b) = self.direction {
            if b >= n_bs {
                return Err(Error::InvalidConfig(format!("direction names BS {b} of {n_bs}")));
            }
        }
        Ok(())
    }

    /// All `n_bs^n_ue` assignments in lexicographic order.
    pub fn all(n_bs: usize, n_ue: usize) -> Vec<Assignment> {
        let total = n_bs.pow(n_ue as u32);
        (0..total)
            .map(|mut idx| {
                let mut a = vec![0; n_ue];
                for slot in a.iter_mut().rev() {
                    *slot = idx % n_bs;
                    idx /= n_bs;
                }
                Assignment::new(a)
            })
            .collect()
    }
}

/// Per-BS partition of the message set into (decoded, not decoded).
pub fn decoded_message_sets(
    assign: &Assignment,
    messages: &[MessageId],
    n_bs: usize,
) -> Vec<(Vec<MessageId>, Vec<MessageId>)> {
    let decoders = |id: &MessageId| -> Vec<usize> {
        let home = assign.a[id.ue];
        match id.tag {
            MessageTag::Single | MessageTag::DisKept | MessageTag::DascLocal => vec![home],
            MessageTag::DisForwarded => match assign.direction {
                Some(b) => (0..n_bs).filter(|&m| m == home || m != b).collect(),
                None => vec![home],
            },
            MessageTag::DascCommon => (0..n_bs).collect(),
            MessageTag::DascJoint => match assign.direction {
                Some(b) => (0..n_bs).filter(|&m| m != b).collect(),
                None => vec![home],
            },
        }
    };
    (0..n_bs)
        .map(|m| {
            let (dec, not): (Vec<MessageId>, Vec<MessageId>) =
                messages.iter().partition(|id| decoders(id).contains(&m));
            (dec, not)
        })
        .collect()
}

/// Message layout a power grid is generated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    /// One message per UE.
    SingleMessage,
    /// UE 0 splits into kept and forwarded parts; with `spc` off only the corners are used.
    Dis { spc: bool },
    /// UE 0 has local, common and joint parts, UE 1 common and joint; `spc` off keeps only joint parts.
    Dasc { spc: bool },
}

impl SchemeKind {
    /// Message tags per UE, for `k` UEs.
    pub fn structure(&self, k: usize) -> Vec<Vec<MessageTag>> {
        use MessageTag::*;
        (0..k)
            .map(|ue| match (self, ue) {
                (SchemeKind::SingleMessage, _) => vec![Single],
                (SchemeKind::Dis { .. }, 0) => vec![DisKept, DisForwarded],
                (SchemeKind::Dis { .. }, _) => vec![Single],
                (SchemeKind::Dasc { spc: true }, 0) => vec![DascLocal, DascCommon, DascJoint],
                (SchemeKind::Dasc { spc: true }, _) => vec![DascCommon, DascJoint],
                (SchemeKind::Dasc { spc: false }, _) => vec![DascJoint],
            })
            .collect()
    }

    fn splits_enabled(&self) -> bool {
        match self {
            SchemeKind::SingleMessage => false,
            SchemeKind::Dis { spc } | SchemeKind::Dasc { spc } => *spc,
        }
    }
}

/// Compositions of `total` into `parts` nonnegative integers, lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Fractions of the cap assigned to each message of one UE.
fn ue_options(n_messages: usize, n_steps: usize, splits: bool) -> Vec<Vec<f64>> {
    let mut opts = vec![vec![0.0; n_messages]];
    if n_messages == 1 {
        opts.push(vec![1.0]);
    } else if splits {
        let den = (n_steps - 1) as f64;
        opts.extend(compositions(n_steps - 1, n_messages).into_iter().map(|c| c.iter().map(|&i| i as f64 / den).collect()));
    } else {
        for j in 0..n_messages {
            let mut v = vec![0.0; n_messages];
            v[j] = 1.0;
            opts.push(v);
        }
    }
    opts
}

/// Enumerates allocations: per UE, a uniform simplex grid over its messages at
/// full power plus the all-zero corner.
pub fn power_grid(n_steps: usize, scheme: SchemeKind, p_max: &[f64]) -> Result<Vec<PowerAllocation>> {
    if n_steps < 2 {
        return Err(Error::InvalidConfig(format!("power grid needs at least 2 steps, got {n_steps}")));
    }
    if p_max.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidConfig("p_max must be finite and nonnegative".into()));
    }
    let structure = scheme.structure(p_max.len());
    let per_ue: Vec<Vec<Vec<f64>>> =
        structure.iter().map(|tags| ue_options(tags.len(), n_steps, scheme.splits_enabled())).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_ue.len()];
    loop {
        let mut powers = BTreeMap::new();
        for (ue, tags) in structure.iter().enumerate() {
            for (t, tag) in tags.iter().enumerate() {
                powers.insert(MessageId::new(ue, *tag), per_ue[ue][idx[ue]][t] * p_max[ue]);
            }
        }
        out.push(PowerAllocation { powers, p_max: p_max.to_vec() });
        // odometer, last UE fastest
        let mut pos = per_ue.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < per_ue[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Lexicographic comparison of power vectors.
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    a.len() < b.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use MessageTag::*;

    #[test]
    fn subset_power_examples() {
        let a = PowerAllocation::single(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(subset_power_matrix(&a, &[], 2), vec![0.0, 0.0]);
        assert_eq!(subset_power_matrix(&a, &a.messages(), 2), vec![1.0, 1.0]);
        let mut powers = BTreeMap::new();
        powers.insert(MessageId::new(0, DisKept), 0.3);
        powers.insert(MessageId::new(0, DisForwarded), 0.7);
        powers.insert(MessageId::new(1, Single), 1.0);
        let d = PowerAllocation { powers, p_max: vec![1.0, 1.0] };
        assert_eq!(subset_power_matrix(&d, &[MessageId::new(0, DisForwarded)], 2), vec![0.7, 0.0]);
    }

    #[test]
    fn decoded_sets_examples() {
        let msgs = PowerAllocation::full_power(&[1.0, 1.0]).messages();
        let s = decoded_message_sets(&Assignment::new(vec![0, 1]), &msgs, 2);
        assert_eq!(s[0].0, vec![MessageId::new(0, Single)]);
        assert_eq!(s[1].0, vec![MessageId::new(1, Single)]);
        let s = decoded_message_sets(&Assignment::new(vec![0, 0]), &msgs, 2);
        assert_eq!(s[0].0.len(), 2);
        assert!(s[1].0.is_empty());
        let s = decoded_message_sets(&Assignment::new(vec![1, 0]), &msgs, 2);
        assert_eq!(s[1].0, vec![MessageId::new(0, Single)]);
        assert_eq!(s[0].0, vec![MessageId::new(1, Single)]);
    }

    #[test]
    fn partition_is_exact_for_small_systems() {
        let kinds = [SchemeKind::SingleMessage, SchemeKind::Dis { spc: true }, SchemeKind::Dasc { spc: true }];
        for m in 1..=3 {
            for k in 1..=3 {
                for kind in kinds {
                    let alloc = &power_grid(2, kind, &vec![1.0; k]).unwrap()[0];
                    let msgs = alloc.messages();
                    for mut assign in Assignment::all(m, k) {
                        for dir in std::iter::once(None).chain((0..m).map(Some)) {
                            assign.direction = dir;
                            for (dec, not) in decoded_message_sets(&assign, &msgs, m) {
                                assert_eq!(dec.len() + not.len(), msgs.len());
                                assert!(dec.iter().all(|d| !not.contains(d)));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_message_grid_is_full_power_and_zero() {
        for n in [2, 5, 9] {
            let g = power_grid(n, SchemeKind::SingleMessage, &[1.0, 1.0]).unwrap();
            assert_eq!(g.len(), 4);
            assert!(g.iter().any(|a| a.totals() == vec![1.0, 1.0]));
            assert!(g.iter().any(|a| a.totals() == vec![0.0, 0.0]));
        }
    }

    #[test]
    fn dis_three_step_splits() {
        let g = power_grid(3, SchemeKind::Dis { spc: true }, &[1.0, 1.0]).unwrap();
        let mut splits: Vec<(f64, f64)> = g
            .iter()
            .filter(|a| a.totals()[0] > 0.0)
            .map(|a| (a.get(0, DisKept), a.get(0, DisForwarded)))
            .collect();
        splits.sort_by(|x, y| x.partial_cmp(y).unwrap());
        splits.dedup();
        assert_eq!(splits, vec![(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(power_grid(9, SchemeKind::Dasc { spc: true }, &[1.0, 1.0]).unwrap().len(), 46 * 10);
        assert_eq!(power_grid(9, SchemeKind::Dis { spc: false }, &[1.0, 1.0]).unwrap().len(), 3 * 2);
        assert_eq!(power_grid(9, SchemeKind::Dasc { spc: false }, &[1.0, 1.0]).unwrap().len(), 4);
        assert!(power_grid(1, SchemeKind::SingleMessage, &[1.0]).is_err());
    }

    #[test]
    fn every_grid_point_respects_the_cap() {
        for kind in [SchemeKind::Dis { spc: true }, SchemeKind::Dasc { spc: true }] {
            for a in power_grid(7, kind, &[0.7, 1.3]).unwrap() {
                assert!(a.is_feasible());
            }
        }
    }

    #[test]
    fn relabel_round_trip() {
        let a = power_grid(3, SchemeKind::Dis { spc: true }, &[1.0, 2.0]).unwrap()[5].clone();
        let r = a.relabel(&[1, 0]);
        assert_eq!(r.p_max, vec![2.0, 1.0]);
        assert_eq!(r.relabel(&[1, 0]), a);
    }

    #[test]
    fn all_assignments_enumerated() {
        let all = Assignment::all(3, 2);
        assert_eq!(all.len(), 9);
        assert_eq!(all[0].a, vec![0, 0]);
        assert_eq!(all[5].a, vec![1, 2]);
    }
}
