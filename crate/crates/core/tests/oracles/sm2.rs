//! The SM-2 recurrence in exact integer arithmetic, with easiness held in
//! hundredths.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sm2 {
    pub easiness_centi: i64,
    pub repetitions: u32,
    pub interval_days: i64,
}

impl Sm2 {
    pub fn new() -> Sm2 {
        Sm2 {
            easiness_centi: 250,
            repetitions: 0,
            interval_days: 0,
        }
    }

    pub fn step(self, grade: u8) -> Sm2 {
        let q = i64::from(grade);
        let (repetitions, interval_days) = if q >= 3 {
            let interval = match self.repetitions {
                0 => 1,
                1 => 5,
                _ => ((self.interval_days * self.easiness_centi + 99) / 100).max(1),
            };
            (self.repetitions + 1, interval)
        } else {
            (0, 1)
        };
        let miss = 5 - q;
        let easiness_centi = (self.easiness_centi + 10 - miss * (8 + 2 * miss)).max(130);
        Sm2 {
            easiness_centi,
            repetitions,
            interval_days,
        }
    }

    pub fn easiness(&self) -> f64 {
        self.easiness_centi as f64 / 100.0
    }
}
