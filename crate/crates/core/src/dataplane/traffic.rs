use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Background load on a channel, expressed as buffer occupancy over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrossTraffic {
    None,
    ConstantOccupancy {
        bytes: u64,
    },
    /// Alternating busy/idle periods with uniformly drawn lengths; starts in
    /// a random phase of a random first period.
    OnOff {
        seed: u64,
        bytes: u64,
        on_ms: (f64, f64),
        off_ms: (f64, f64),
    },
    /// Explicit busy windows `(start_ms, end_ms, bytes)`; idle elsewhere.
    Windowed {
        windows: Vec<(f64, f64, u64)>,
    },
}

/// A [`CrossTraffic`] process with its lazily generated schedule.
#[derive(Debug, Clone)]
pub struct CrossTrafficState {
    process: CrossTraffic,
    rng: Option<ChaCha8Rng>,
    // (start, end) of generated busy periods, in order
    busy: Vec<(f64, f64)>,
    horizon: f64,
    next_on: bool,
}

impl CrossTrafficState {
    pub fn new(process: CrossTraffic) -> Self {
        let mut s = Self { rng: None, busy: Vec::new(), horizon: 0.0, next_on: false, process };
        if let CrossTraffic::OnOff { seed, on_ms, off_ms, .. } = &s.process {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let first_on = rng.gen_bool(0.5);
            let (lo, hi) = if first_on { *on_ms } else { *off_ms };
            let len = draw(&mut rng, lo, hi) * rng.gen_range(0.0..1.0);
            if first_on {
                s.busy.push((0.0, len));
            }
            s.horizon = len;
            s.next_on = !first_on;
            s.rng = Some(rng);
        }
        s
    }

    fn extend_to(&mut self, t: f64) {
        let CrossTraffic::OnOff { on_ms, off_ms, .. } = self.process else { return };
        let rng = self.rng.as_mut().expect("on/off state");
        while self.horizon <= t {
            let (lo, hi) = if self.next_on { on_ms } else { off_ms };
            let len = draw(rng, lo, hi);
            if self.next_on {
                self.busy.push((self.horizon, self.horizon + len));
            }
            self.horizon += len;
            self.next_on = !self.next_on;
        }
    }

    pub fn occupancy_bytes(&mut self, t: f64) -> u64 {
        match &self.process {
            CrossTraffic::None => 0,
            CrossTraffic::ConstantOccupancy { bytes } => *bytes,
            CrossTraffic::Windowed { windows } => windows.iter().filter(|w| w.0 <= t && t < w.1).map(|w| w.2).sum(),
            CrossTraffic::OnOff { bytes, .. } => {
                let bytes = *bytes;
                self.extend_to(t);
                let i = self.busy.partition_point(|p| p.1 <= t);
                if self.busy.get(i).is_some_and(|p| p.0 <= t) {
                    bytes
                } else {
                    0
                }
            }
        }
    }

    /// Whether the channel is free of cross traffic at `t`.
    pub fn is_idle(&mut self, t: f64) -> bool {
        self.occupancy_bytes(t) == 0
    }
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
    .max(1e-6)
}
