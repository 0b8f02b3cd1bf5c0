use core::fmt;

use serde::{Deserialize, Serialize};

/// A delivery time-frame `[day, slot]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeFrame {
    pub day: u32,
    pub slot: u32,
}

impl TimeFrame {
    pub const fn new(day: u32, slot: u32) -> Self {
        Self { day, slot }
    }

    pub fn to_bytes(self) -> [u8; 8] {
        let mut out = [0u8; 8];
        out[..4].copy_from_slice(&self.day.to_be_bytes());
        out[4..].copy_from_slice(&self.slot.to_be_bytes());
        out
    }
}

impl fmt::Display for TimeFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.day, self.slot)
    }
}

/// Delivery epochs `0..=6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epoch(u8);

impl Epoch {
    /// Pending phase; premature disclosures may be reported.
    pub const PREMATURE_REPORTING: Epoch = Epoch(0);
    pub const LIGHTWEIGHT: Epoch = Epoch(1);
    pub const SWITCHING: Epoch = Epoch(2);
    pub const HEAVYWEIGHT: Epoch = Epoch(3);
    pub const ABSENT_FAKE_REPORTING: Epoch = Epoch(4);
    pub const SECOND_RECEIPT: Epoch = Epoch(5);
    pub const SETTLEMENT: Epoch = Epoch(6);

    pub const fn new(k: u8) -> Option<Epoch> {
        if k <= 6 {
            Some(Epoch(k))
        } else {
            None
        }
    }

    pub const fn index(self) -> u8 {
        self.0
    }

    /// Epochs reachable in one step.
    pub fn successors(self) -> &'static [Epoch] {
        match self.0 {
            0 => &[Epoch(1), Epoch(2)],
            1 => &[Epoch(2), Epoch(6)],
            2 => &[Epoch(3), Epoch(6)],
            3 => &[Epoch(4)],
            4 => &[Epoch(5)],
            5 => &[Epoch(6)],
            _ => &[],
        }
    }

    /// The successor entered when an epoch simply runs out of time, for the
    /// epochs that have one.
    pub fn timeout_successor(self) -> Option<Epoch> {
        match self.0 {
            3 => Some(Epoch(4)),
            4 => Some(Epoch(5)),
            5 => Some(Epoch(6)),
            _ => None,
        }
    }

    pub fn can_step_to(self, next: Epoch) -> bool {
        self.successors().contains(&next)
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch-{}", self.0)
    }
}

/// Whether `path` is a walk from epoch 0 to settlement along the epoch graph.
pub fn is_valid_epoch_path(path: &[Epoch]) -> bool {
    path.first() == Some(&Epoch::PREMATURE_REPORTING)
        && path.last() == Some(&Epoch::SETTLEMENT)
        && path.windows(2).all(|w| w[0].can_step_to(w[1]))
}

/// Ledger clock: the current time-frame, the epoch of the running service
/// (if any) and ticks spent in that epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    pub frame: TimeFrame,
    pub epoch: Option<Epoch>,
    pub tick: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_edges() {
        let e = |k| Epoch::new(k).unwrap();
        let edges = [(0, 1), (0, 2), (1, 2), (1, 6), (2, 3), (2, 6), (3, 4), (4, 5), (5, 6)];
        for a in 0..=6u8 {
            for b in 0..=6u8 {
                assert_eq!(e(a).can_step_to(e(b)), edges.contains(&(a, b)), "{a}->{b}");
            }
        }
        assert!(Epoch::new(7).is_none());
    }

    #[test]
    fn paths() {
        let p = |ks: &[u8]| ks.iter().map(|k| Epoch::new(*k).unwrap()).collect::<alloc::vec::Vec<_>>();
        assert!(is_valid_epoch_path(&p(&[0, 1, 6])));
        assert!(is_valid_epoch_path(&p(&[0, 2, 3, 4, 5, 6])));
        assert!(is_valid_epoch_path(&p(&[0, 1, 2, 6])));
        assert!(!is_valid_epoch_path(&p(&[0, 1, 3, 4, 5, 6])));
        assert!(!is_valid_epoch_path(&p(&[1, 6])));
        assert!(!is_valid_epoch_path(&p(&[0, 1])));
    }
}
