use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `[start, end, increment, interval]`: the value grows from `start` by
/// `increment` every `interval` steps and is capped at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumAttr {
    pub start: u64,
    pub end: u64,
    pub increment: u64,
    pub interval: u64,
}

impl CurriculumAttr {
    pub const fn new(start: u64, end: u64, increment: u64, interval: u64) -> Self {
        CurriculumAttr {
            start,
            end,
            increment,
            interval,
        }
    }

    pub const fn fixed(value: u64) -> Self {
        CurriculumAttr::new(value, value, 0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 {
            return Err(Error::config("curriculum interval must be positive"));
        }
        if self.end < self.start {
            return Err(Error::config(format!(
                "curriculum end {} is below start {}",
                self.end, self.start
            )));
        }
        Ok(())
    }

    pub fn value(&self, step: u64) -> u64 {
        let grown = self
            .increment
            .saturating_mul(step / self.interval.max(1))
            .saturating_add(self.start);
        grown.min(self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub dims: CurriculumAttr,
    pub points: CurriculumAttr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<CurriculumAttr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumValues {
    pub d: u64,
    pub p: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<u64>,
}

impl CurriculumSchedule {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.points.validate()?;
        self.extra.as_ref().map_or(Ok(()), CurriculumAttr::validate)
    }

    pub fn value(&self, step: u64) -> CurriculumValues {
        CurriculumValues {
            d: self.dims.value(step),
            p: self.points.value(step),
            extra: self.extra.map(|a| a.value(step)),
        }
    }

    /// Dense, sparse and sign-vector regression.
    pub const fn linear() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::new(5, 20, 1, 2000),
            points: CurriculumAttr::new(10, 40, 2, 2000),
            extra: None,
        }
    }

    pub const fn low_rank() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::fixed(100),
            points: CurriculumAttr::fixed(114),
            extra: None,
        }
    }

    /// Fourier series; `extra` is the maximum frequency `N`.
    pub const fn fourier() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::fixed(1),
            points: CurriculumAttr::new(7, 43, 4, 2000),
            extra: Some(CurriculumAttr::new(1, 10, 1, 2000)),
        }
    }

    pub const fn fourier_mixture() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::fixed(1),
            points: CurriculumAttr::fixed(40),
            extra: Some(CurriculumAttr::fixed(10)),
        }
    }

    pub const fn gmm_p10() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::new(5, 10, 1, 2000),
            points: CurriculumAttr::new(5, 10, 1, 2000),
            extra: None,
        }
    }

    pub const fn gmm_p20() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::new(5, 10, 1, 2000),
            points: CurriculumAttr::new(10, 20, 2, 2000),
            extra: None,
        }
    }

    pub const fn monomials() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::fixed(20),
            points: CurriculumAttr::fixed(290),
            extra: None,
        }
    }

    pub const fn haar() -> Self {
        CurriculumSchedule {
            dims: CurriculumAttr::fixed(1),
            points: CurriculumAttr::fixed(32),
            extra: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_points_schedule() {
        let p = CurriculumSchedule::linear().points;
        assert_eq!(p.value(0), 10);
        assert_eq!(p.value(1999), 10);
        assert_eq!(p.value(2000), 12);
        assert_eq!(p.value(30000), 40);
    }

    #[test]
    fn fixed_schedule_is_constant() {
        let a = CurriculumAttr::fixed(32);
        assert!([0, 1, 10_000, u64::MAX].iter().all(|&t| a.value(t) == 32));
    }

    #[test]
    fn rejects_zero_interval() {
        assert!(CurriculumAttr::new(1, 2, 1, 0).validate().is_err());
        assert!(CurriculumAttr::new(3, 2, 1, 1).validate().is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_capped(start in 0u64..100, extra in 0u64..100, inc in 0u64..10,
                               interval in 1u64..5000, t1 in 0u64..1_000_000, dt in 0u64..1_000_000) {
            let a = CurriculumAttr::new(start, start + extra, inc, interval);
            prop_assert_eq!(a.value(0), start);
            prop_assert!(a.value(t1) <= a.end);
            prop_assert!(a.value(t1) <= a.value(t1 + dt));
        }
    }
}
