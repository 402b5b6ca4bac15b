//! Actuation delay: a command issued at step t with delay d becomes
//! executable at step t + d. Each step executes the most recently issued
//! executable command, or the no-op action when none is executable yet.

pub const MAX_DELAY: usize = 10;
pub const NOOP: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pending {
    issued: usize,
    ready: usize,
    action: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DelayBuffer {
    pending: Vec<Pending>,
    /// Issue time and action of the command currently being executed.
    current: Option<(usize, usize)>,
}

impl DelayBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.pending.clear();
        self.current = None;
    }

    /// Records `commanded` at step `t` and returns the action executed at `t`.
    pub fn execute(&mut self, t: usize, commanded: usize, delay: usize) -> usize {
        assert!(delay <= MAX_DELAY, "delay {delay} exceeds {MAX_DELAY}");
        self.pending.push(Pending { issued: t, ready: t + delay, action: commanded });
        // Ties among newly executable commands go to the latest issue time.
        for cmd in self.pending.iter().filter(|c| c.ready <= t) {
            if self.current.map_or(true, |(issued, _)| cmd.issued > issued) {
                self.current = Some((cmd.issued, cmd.action));
            }
        }
        let newest = self.current.map(|(issued, _)| issued);
        self.pending.retain(|c| c.ready > t && newest.map_or(true, |n| c.issued > n));
        self.current.map_or(NOOP, |(_, a)| a)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }
}

/// Functional form over a buffer.
pub fn delayed_action_execute(buffer: &mut DelayBuffer, t: usize, commanded: usize, delay: usize) -> usize {
    buffer.execute(t, commanded, delay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference: scan the full command history every step.
    fn reference(commands: &[(usize, usize)]) -> Vec<usize> {
        (0..commands.len())
            .map(|t| {
                (0..=t)
                    .filter(|&i| i + commands[i].1 <= t)
                    .max()
                    .map_or(NOOP, |i| commands[i].0)
            })
            .collect()
    }

    #[test]
    fn zero_delay_is_identity() {
        let mut buf = DelayBuffer::new();
        for (t, a) in [3, 1, 2, 0, 2].into_iter().enumerate() {
            assert_eq!(buf.execute(t, a, 0), a);
        }
    }

    #[test]
    fn fixed_delay_two() {
        let mut buf = DelayBuffer::new();
        let executed: Vec<usize> = [1, 2, 3, 1].into_iter().enumerate().map(|(t, a)| buf.execute(t, a, 2)).collect();
        assert_eq!(executed, vec![NOOP, NOOP, 1, 2]);
    }

    #[test]
    fn freshest_command_wins_ties() {
        let mut buf = DelayBuffer::new();
        assert_eq!(buf.execute(0, 1, 2), NOOP);
        assert_eq!(buf.execute(1, 2, 1), NOOP);
        // Both commands become executable at t = 2; the one issued at t = 1 wins.
        assert_eq!(buf.execute(2, 3, 5), 2);
        // The command issued at t = 0 is stale and never executes afterwards.
        assert_eq!(buf.execute(3, 3, 5), 2);
    }

    proptest! {
        #[test]
        fn matches_history_scan(cmds in proptest::collection::vec((0usize..4, 0usize..=MAX_DELAY), 1..60)) {
            let mut buf = DelayBuffer::new();
            let got: Vec<usize> = cmds.iter().enumerate().map(|(t, &(a, d))| buf.execute(t, a, d)).collect();
            prop_assert_eq!(got, reference(&cmds));
            prop_assert!(buf.pending_len() <= MAX_DELAY + 1);
        }
    }
}
