use serde::Serialize;

use crate::gates::Circuit;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduledInstruction {
    pub index: usize,
    pub start: f64,
    pub duration: f64,
    /// Qutrits the instruction acts on (globals expanded).
    pub qutrits: Vec<usize>,
}

/// Serial schedule: one instruction at a time, in circuit order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduledCircuit {
    pub n: usize,
    pub slots: Vec<ScheduledInstruction>,
    /// Per qutrit, the `(start, end)` intervals during which it is not acted on.
    pub idle: Vec<Vec<(f64, f64)>>,
    pub total_duration: f64,
}

pub fn schedule(circuit: &Circuit) -> ScheduledCircuit {
    let n = circuit.n();
    let mut t = 0.0;
    let mut slots = Vec::with_capacity(circuit.len());
    let mut idle: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for (index, ins) in circuit.instructions().iter().enumerate() {
        let qutrits = ins.touched(n);
        let end = t + ins.duration_s;
        if ins.duration_s > 0.0 {
            for (q, iv) in idle.iter_mut().enumerate() {
                if qutrits.contains(&q) {
                    continue;
                }
                match iv.last_mut() {
                    Some(last) if last.1 == t => last.1 = end,
                    _ => iv.push((t, end)),
                }
            }
        }
        slots.push(ScheduledInstruction { index, start: t, duration: ins.duration_s, qutrits });
        t = end;
    }
    ScheduledCircuit { n, slots, idle, total_duration: t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposer::{qutrit_toffoli, ToffoliOptions};
    use crate::gates::{GateKind, HardwareProfile, Instruction};

    #[test]
    fn empty_and_virtual() {
        assert_eq!(schedule(&Circuit::new(3)).total_duration, 0.0);
        let c = Circuit::from_instructions(2, vec![Instruction::rz(1, 0.3, Some(0))]);
        assert_eq!(schedule(&c).total_duration, 0.0);
    }

    #[test]
    fn toffoli_duration_is_serial_sum() {
        let c = qutrit_toffoli(&ToffoliOptions::new(3)).unwrap();
        let s = schedule(&c);
        assert!((s.total_duration - c.total_duration()).abs() < 1e-15);
        let hw = HardwareProfile::default();
        let pulses: f64 = c.instructions().iter().filter(|i| i.kind == GateKind::R0j).map(|i| i.duration_s).sum();
        assert!((s.total_duration - 3.0 * hw.t_xx - pulses).abs() < 1e-12);
        for w in s.slots.windows(2) {
            assert!(w[1].start >= w[0].start);
        }
    }

    #[test]
    fn idle_intervals_tile_timeline() {
        let c = qutrit_toffoli(&ToffoliOptions::new(4)).unwrap();
        let s = schedule(&c);
        for q in 0..4 {
            let busy: f64 = s.slots.iter().filter(|x| x.qutrits.contains(&q)).map(|x| x.duration).sum();
            let idle: f64 = s.idle[q].iter().map(|(a, b)| b - a).sum();
            assert!((busy + idle - s.total_duration).abs() < 1e-12);
            for w in s.idle[q].windows(2) {
                assert!(w[0].1 <= w[1].0);
            }
        }
    }
}
