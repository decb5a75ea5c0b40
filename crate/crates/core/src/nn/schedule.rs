/// Cosine annealing with warm restarts, evaluated per optimizer step.
///
/// Cycle `i` lasts `round(first_cycle_steps · cycle_mult^i)` steps (at least
/// one). Within a cycle the rate falls from `lr_max` toward `lr_min` along
/// half a cosine and jumps back to `lr_max` at the next boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmRestartSchedule {
    pub lr_max: f64,
    pub lr_min: f64,
    pub first_cycle_steps: u64,
    pub cycle_mult: f64,
}

/// Position inside the schedule at some step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclePosition {
    pub cycle: u32,
    pub step_in_cycle: u64,
    pub cycle_len: u64,
}

impl WarmRestartSchedule {
    pub fn position(&self, step: u64) -> CyclePosition {
        let first = self.first_cycle_steps.max(1);
        if self.cycle_mult <= 1.0 {
            return CyclePosition {
                cycle: (step / first).min(u32::MAX as u64) as u32,
                step_in_cycle: step % first,
                cycle_len: first,
            };
        }
        let mut start = 0u64;
        let mut nominal = first as f64;
        let mut cycle = 0u32;
        loop {
            let len = (libm::round(nominal) as u64).max(1);
            if step < start.saturating_add(len) {
                return CyclePosition { cycle, step_in_cycle: step - start, cycle_len: len };
            }
            start += len;
            nominal *= self.cycle_mult;
            cycle += 1;
        }
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        let pos = self.position(step);
        if pos.step_in_cycle == 0 {
            return self.lr_max;
        }
        let frac = pos.step_in_cycle as f64 / pos.cycle_len as f64;
        self.lr_min + 0.5 * (self.lr_max - self.lr_min) * (1.0 + libm::cos(core::f64::consts::PI * frac))
    }

    /// Steps at which a new cycle begins, below `limit`.
    pub fn restart_steps(&self, limit: u64) -> alloc::vec::Vec<u64> {
        let mut out = alloc::vec::Vec::new();
        let mut step = 0;
        while step < limit {
            out.push(step);
            step += self.position(step).cycle_len;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(mult: f64) -> WarmRestartSchedule {
        WarmRestartSchedule { lr_max: 1e-3, lr_min: 1e-6, first_cycle_steps: 100, cycle_mult: mult }
    }

    #[test]
    fn boundaries_hit_lr_max() {
        let s = sched(2.0);
        assert_eq!(s.lr_at(0), 1e-3);
        assert_eq!(s.lr_at(100), 1e-3);
        assert_eq!(s.lr_at(300), 1e-3);
        assert_eq!(s.lr_at(700), 1e-3);
        assert_eq!(s.restart_steps(1600), alloc::vec![0, 100, 300, 700, 1500]);
        let flat = sched(1.0);
        assert_eq!(flat.restart_steps(350), alloc::vec![0, 100, 200, 300]);
    }

    #[test]
    fn midpoint_is_mean_rate() {
        let s = sched(2.0);
        let mid = 1e-6 + 0.5 * (1e-3 - 1e-6);
        assert!((s.lr_at(50) - mid).abs() < 1e-18);
        assert!((s.lr_at(200) - mid).abs() < 1e-18);
    }

    #[test]
    fn monotone_within_cycle() {
        let s = sched(2.0);
        let mut prev = s.lr_at(100);
        for step in 101..300 {
            let lr = s.lr_at(step);
            assert!(lr <= prev && lr > s.lr_min);
            prev = lr;
        }
    }
}
