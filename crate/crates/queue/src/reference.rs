//! Published reference grids embedded at build time.

use crate::error::CliError;

const RATE_TABLE: &str = include_str!("../data/rate_table.csv");
const INTENSITY_TABLE: &str = include_str!("../data/intensity_table.csv");
const QUEUE_TABLE: &str = include_str!("../data/queue_table.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Rate,
    Intensity,
    MeanQueue,
}

/// One published cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefCell {
    pub sigma: f64,
    pub t: f64,
    pub value: f64,
}

impl Reference {
    pub fn tolerance(self) -> f64 {
        match self {
            Reference::Rate | Reference::Intensity => 1e-6,
            Reference::MeanQueue => 1e-4,
        }
    }

    fn source(self) -> &'static str {
        match self {
            Reference::Rate => RATE_TABLE,
            Reference::Intensity => INTENSITY_TABLE,
            Reference::MeanQueue => QUEUE_TABLE,
        }
    }

    pub fn cells(self) -> Vec<RefCell> {
        parse(self.source()).expect("embedded reference table is well formed")
    }

    /// Published value at `(σ, t)`, if the grid has it.
    pub fn lookup(self, sigma: f64, t: f64) -> Option<f64> {
        self.cells()
            .into_iter()
            .find(|c| (c.sigma - sigma).abs() < 1e-9 && (c.t - t).abs() < 1e-9)
            .map(|c| c.value)
    }
}

fn parse(text: &str) -> Result<Vec<RefCell>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<f64, CliError> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad reference row {record:?}")))
        };
        cells.push(RefCell {
            sigma: field(0)?,
            t: field(1)?,
            value: field(2)?,
        });
    }
    Ok(cells)
}
