//! Spaced-repetition scheduling with expanding intervals (SM-2 family).

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModuleId, ReviewItemId};

pub const INITIAL_EASINESS: f64 = 2.5;
pub const MIN_EASINESS: f64 = 1.3;
/// Interval after the first successful review.
pub const FIRST_INTERVAL_DAYS: f64 = 1.0;
/// Interval after the second successful review.
pub const SECOND_INTERVAL_DAYS: f64 = 5.0;
/// Lowest grade that counts as recalled.
pub const PASSING_GRADE: u8 = 3;
pub const MAX_GRADE: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulerError {
    #[error("grade {0} is outside 0..=5")]
    GradeOutOfRange(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReviewItem {
    pub item_id: ReviewItemId,
    pub module_ref: ModuleId,
    pub easiness: f64,
    pub repetitions: u32,
    pub interval_days: f64,
    pub due_date: NaiveDate,
}

impl ReviewItem {
    /// A never-reviewed item, due on `due`.
    pub fn new(item_id: ReviewItemId, module_ref: ModuleId, due: NaiveDate) -> Self {
        ReviewItem {
            item_id,
            module_ref,
            easiness: INITIAL_EASINESS,
            repetitions: 0,
            interval_days: 0.0,
            due_date: due,
        }
    }
}

/// Applies one graded review taken on `today`.
pub fn review(item: &ReviewItem, grade: u8, today: NaiveDate) -> Result<ReviewItem, SchedulerError> {
    if grade > MAX_GRADE {
        return Err(SchedulerError::GradeOutOfRange(grade));
    }
    let (repetitions, interval_days) = if grade >= PASSING_GRADE {
        let repetitions = item.repetitions + 1;
        let interval = match repetitions {
            1 => FIRST_INTERVAL_DAYS,
            2 => SECOND_INTERVAL_DAYS,
            _ => whole_days_up(item.interval_days * item.easiness),
        };
        (repetitions, interval)
    } else {
        (0, FIRST_INTERVAL_DAYS)
    };

    let miss = f64::from(MAX_GRADE - grade);
    let easiness = (item.easiness + (0.1 - miss * (0.08 + miss * 0.02))).max(MIN_EASINESS);

    Ok(ReviewItem {
        item_id: item.item_id.clone(),
        module_ref: item.module_ref.clone(),
        easiness,
        repetitions,
        interval_days,
        due_date: today
            .checked_add_days(Days::new(interval_days as u64))
            .unwrap_or(NaiveDate::MAX),
    })
}

// Products like 5 × 2.6 land a hair above the whole number in binary
// floating point; those must not gain an extra day.
fn whole_days_up(days: f64) -> f64 {
    (days - 1e-9).ceil().max(1.0)
}

/// Items due on or before `today`, oldest due date first, ties by item id.
pub fn due_items(items: &[ReviewItem], today: NaiveDate) -> Vec<ReviewItem> {
    let mut due: Vec<ReviewItem> = items
        .iter()
        .filter(|i| i.due_date <= today)
        .cloned()
        .collect();
    due.sort_by(|a, b| (a.due_date, &a.item_id).cmp(&(b.due_date, &b.item_id)));
    due
}
