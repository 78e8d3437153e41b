use super::{calendar_year, Dataset};
use crate::{Error, Result};

/// Year-based partition. Each split is a list of contiguous runs so that
/// windowing a run never crosses into another split.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<Dataset>,
    pub val: Vec<Dataset>,
    pub test: Vec<Dataset>,
}

impl Splits {
    pub fn total_len(runs: &[Dataset]) -> usize {
        runs.iter().map(Dataset::len).sum()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    Train,
    Val,
    Test,
}

pub fn split_by_year(dataset: &Dataset, test_year: i32, val_year: i32) -> Result<Splits> {
    if test_year == val_year {
        return Err(Error::invalid(format!("test and validation year are both {test_year}")));
    }
    let years = dataset.years();
    if years.len() < 3 {
        return Err(Error::invalid(format!("year split needs at least 3 calendar years, dataset has {}", years.len())));
    }
    for y in [test_year, val_year] {
        if !years.contains(&y) {
            return Err(Error::invalid(format!("year {y} not in dataset (years {years:?})")));
        }
    }
    let part_of = |ts: i64| match calendar_year(ts) {
        y if y == test_year => Part::Test,
        y if y == val_year => Part::Val,
        _ => Part::Train,
    };

    let mut splits = Splits { train: vec![], val: vec![], test: vec![] };
    let recs = dataset.records();
    let mut start = 0;
    while start < recs.len() {
        let part = part_of(recs[start].timestamp);
        let mut end = start + 1;
        while end < recs.len() && part_of(recs[end].timestamp) == part {
            end += 1;
        }
        let run = dataset.slice(start, end);
        match part {
            Part::Train => splits.train.push(run),
            Part::Val => splits.val.push(run),
            Part::Test => splits.test.push(run),
        }
        start = end;
    }
    Ok(splits)
}
