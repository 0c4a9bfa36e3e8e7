//! Per-round run records and their CSV encoding.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Assortment;

pub const CSV_HEADER: &str = "run_id,t,assortment,chosen,reward,rhat,inst_pseudo_regret,\
cum_pseudo_regret,cum_realized_regret,restart,instance_order";

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: u64,
    pub t: usize,
    pub assortment: Assortment,
    /// 0-based; `None` is the no-purchase option.
    pub chosen: Option<usize>,
    pub reward: f64,
    /// Optimistic payoff estimate the learner reported for this round.
    pub rhat: f64,
    pub inst_pseudo_regret: f64,
    pub cum_pseudo_regret: f64,
    pub cum_realized_regret: f64,
    pub restart: bool,
    /// Order of the acting instance under the multi-scale scheduler.
    pub instance_order: Option<u32>,
}

impl RunRecord {
    /// One CSV line without the trailing newline. Items are 1-based and the
    /// no-purchase option is written as 0.
    pub fn csv_row(&self) -> String {
        let mut line = String::with_capacity(96);
        write!(
            line,
            "{},{},{},{},{},{},{},{},{},{},",
            self.run_id,
            self.t,
            self.assortment.to_external(),
            self.chosen.map_or(0, |j| j + 1),
            self.reward,
            self.rhat,
            self.inst_pseudo_regret,
            self.cum_pseudo_regret,
            self.cum_realized_regret,
            u8::from(self.restart),
        )
        .expect("writing to a String");
        if let Some(order) = self.instance_order {
            write!(line, "{order}").expect("writing to a String");
        }
        line
    }
}

pub fn write_csv(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in records {
            writeln!(out, "{}", r.csv_row())?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
