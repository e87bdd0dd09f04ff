/// Learning rate that decays ×0.1 once the epoch loss has not improved for
/// `patience` consecutive epochs. A patience of 0 keeps the rate constant.
#[derive(Debug, Clone)]
pub(crate) struct Plateau {
    rate: f64,
    patience: usize,
    best: f64,
    stale: usize,
}

impl Plateau {
    pub(crate) fn new(rate: f64, patience: usize) -> Self {
        Self {
            rate,
            patience,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    pub(crate) fn rate(&self) -> f64 {
        self.rate
    }

    pub(crate) fn observe(&mut self, loss: f64) {
        if loss < self.best {
            self.best = loss;
            self.stale = 0;
            return;
        }
        self.stale += 1;
        if self.patience > 0 && self.stale >= self.patience {
            self.rate *= 0.1;
            self.stale = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decays_after_patience() {
        let mut p = Plateau::new(1.0, 2);
        p.observe(1.0);
        p.observe(1.0);
        assert_eq!(p.rate(), 1.0);
        p.observe(2.0);
        assert!((p.rate() - 0.1).abs() < 1e-15);
        p.observe(0.5);
        p.observe(0.6);
        assert!((p.rate() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_patience_is_constant() {
        let mut p = Plateau::new(0.5, 0);
        for _ in 0..10 {
            p.observe(3.0);
        }
        assert_eq!(p.rate(), 0.5);
    }
}
