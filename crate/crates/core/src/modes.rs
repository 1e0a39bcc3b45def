//! Transceivers and the (modulation format, FEC) transmission-mode catalog.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ModeError {
    #[error("cannot read mode table: {0}")]
    Io(#[from] std::io::Error),
    #[error("mode table: {0}")]
    Csv(#[from] csv::Error),
    #[error("mode table header must be `mf,fec,threshold_db,<baud>...`, got `{0}`")]
    Header(String),
    #[error("row {row}: bad value `{value}` in column `{column}`")]
    Value { row: usize, column: String, value: String },
    #[error("row {row}: bit-rate {gbps} Gbps outside 50..=375 or off the 12.5 Gbps step")]
    Bitrate { row: usize, gbps: f64 },
    #[error("at {baud} Gbaud thresholds do not increase strictly with bit-rate")]
    NonMonotone { baud: u32 },
    #[error("row {0} supports no baud-rate")]
    EmptyMode(usize),
    #[error("transceiver {baud} Gbaud does not fit in {slots} slots")]
    Transceiver { baud: f64, slots: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transceiver {
    pub baud_gbaud: f64,
    pub slots: usize,
}

impl Transceiver {
    pub fn new(baud_gbaud: f64, slots: usize) -> Self {
        Self { baud_gbaud, slots }
    }

    pub fn key(&self) -> u32 {
        self.baud_gbaud.round() as u32
    }

    pub fn validate(&self, f_grid: f64) -> Result<(), ModeError> {
        if self.slots == 0 || (self.slots as f64) * f_grid < self.baud_gbaud {
            return Err(ModeError::Transceiver {
                baud: self.baud_gbaud,
                slots: self.slots,
            });
        }
        Ok(())
    }
}

/// 16, 32 and 64 Gbaud on 2, 4 and 6 slots.
pub fn default_transceivers() -> Vec<Transceiver> {
    vec![
        Transceiver::new(16.0, 2),
        Transceiver::new(32.0, 4),
        Transceiver::new(64.0, 6),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMode {
    pub mf: String,
    pub fec: f64,
    pub threshold_db: f64,
    /// Gbaud → Gbps.
    pub bitrate_by_baud: BTreeMap<u32, f64>,
}

impl TransmissionMode {
    pub fn label(&self) -> String {
        format!("{}-{}", self.mf, self.fec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCatalog {
    pub modes: Vec<TransmissionMode>,
    /// Fixed penalty added to every threshold.
    pub penalty_db: f64,
}

fn valid_bitrate(g: f64) -> bool {
    (50.0..=375.0).contains(&g) && ((g / 12.5) - (g / 12.5).round()).abs() < 1e-9
}

impl ModeCatalog {
    pub fn from_csv_str(text: &str) -> Result<Self, ModeError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 4 || cols[0] != "mf" || cols[1] != "fec" || cols[2] != "threshold_db" {
            return Err(ModeError::Header(cols.join(",")));
        }
        let mut bauds = Vec::new();
        for c in &cols[3..] {
            bauds.push(c.parse::<u32>().map_err(|_| ModeError::Header(cols.join(",")))?);
        }
        let mut modes = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = row + 1;
            let num = |i: usize| -> Result<f64, ModeError> {
                rec.get(i).unwrap_or("").parse::<f64>().map_err(|_| ModeError::Value {
                    row,
                    column: cols[i].to_string(),
                    value: rec.get(i).unwrap_or("").to_string(),
                })
            };
            let mut bitrate_by_baud = BTreeMap::new();
            for (j, &baud) in bauds.iter().enumerate() {
                if rec.get(3 + j).unwrap_or("").is_empty() {
                    continue;
                }
                let g = num(3 + j)?;
                if !valid_bitrate(g) {
                    return Err(ModeError::Bitrate { row, gbps: g });
                }
                bitrate_by_baud.insert(baud, g);
            }
            if bitrate_by_baud.is_empty() {
                return Err(ModeError::EmptyMode(row));
            }
            modes.push(TransmissionMode {
                mf: rec.get(0).unwrap_or("").to_string(),
                fec: num(1)?,
                threshold_db: num(2)?,
                bitrate_by_baud,
            });
        }
        let cat = Self {
            modes,
            penalty_db: 0.0,
        };
        cat.validate()?;
        Ok(cat)
    }

    pub fn validate(&self) -> Result<(), ModeError> {
        let bauds: std::collections::BTreeSet<u32> = self
            .modes
            .iter()
            .flat_map(|m| m.bitrate_by_baud.keys().copied())
            .collect();
        for baud in bauds {
            let mut rows: Vec<(f64, f64)> = self
                .modes
                .iter()
                .filter_map(|m| m.bitrate_by_baud.get(&baud).map(|&g| (g, m.threshold_db)))
                .collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            if rows.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                return Err(ModeError::NonMonotone { baud });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModeError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Seven-row QPSK/16QAM/64QAM table shipped with the crate.
    pub fn default_table() -> Self {
        Self::from_csv_str(include_str!("../data/modes_default.csv")).expect("bundled table is valid")
    }

    /// The two modes of the 30-lightpath point-to-point example.
    pub fn two_mode_table() -> Self {
        Self::from_csv_str(include_str!("../data/modes_p2p.csv")).expect("bundled table is valid")
    }

    pub fn with_penalty(mut self, penalty_db: f64) -> Self {
        self.penalty_db = penalty_db;
        self
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Threshold including the fixed penalty, dB.
    pub fn threshold_db(&self, mode: usize) -> f64 {
        self.modes[mode].threshold_db + self.penalty_db
    }

    pub fn bitrate(&self, mode: usize, trx: &Transceiver) -> Option<f64> {
        self.modes[mode].bitrate_by_baud.get(&trx.key()).copied()
    }

    /// Modes usable at `trx` whose threshold fits `budget_db`, highest
    /// bit-rate first.
    pub fn feasible_modes(&self, budget_db: f64, trx: &Transceiver) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.modes.len())
            .filter(|&m| self.bitrate(m, trx).is_some() && self.threshold_db(m) <= budget_db)
            .collect();
        out.sort_by(|&a, &b| {
            self.bitrate(b, trx)
                .unwrap()
                .total_cmp(&self.bitrate(a, trx).unwrap())
                .then(a.cmp(&b))
        });
        out
    }

    pub fn best_mode(&self, budget_db: f64, trx: &Transceiver) -> Option<usize> {
        self.feasible_modes(budget_db, trx).first().copied()
    }

    pub fn label(&self, mode: usize) -> String {
        self.modes[mode].label()
    }
}

pub fn load_mode_table(path: impl AsRef<Path>) -> Result<ModeCatalog, ModeError> {
    ModeCatalog::load(path)
}

pub fn feasible_modes(budget_db: f64, catalog: &ModeCatalog, trx: &Transceiver) -> Vec<usize> {
    catalog.feasible_modes(budget_db, trx)
}
