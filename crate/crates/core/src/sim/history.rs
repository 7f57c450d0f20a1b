use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{LogFormatError, SimError};
use crate::model::HistoryPolicy;

/// One positive flow on one edge during one tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    /// Tick reached by the step that moved this amount (first step is 1).
    pub tick: u64,
    pub edge: String,
    pub substance: String,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub model_hash: String,
    pub seed: u64,
    pub start_tick: u64,
    pub steps: u64,
    pub history: HistoryPolicy,
}

/// Append-only record of state transitions, in nondecreasing tick order.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryLog {
    header: LogHeader,
    records: Vec<TransitionRecord>,
}

impl HistoryLog {
    pub fn new(header: LogHeader) -> Self {
        HistoryLog {
            header,
            records: Vec::new(),
        }
    }

    /// Builds a log from stored parts, checking tick order.
    pub fn from_parts(header: LogHeader, records: Vec<TransitionRecord>) -> Result<Self, SimError> {
        let mut log = HistoryLog::new(header);
        for r in records {
            log.append(r)?;
        }
        Ok(log)
    }

    pub fn append(&mut self, record: TransitionRecord) -> Result<(), SimError> {
        if let Some(last) = self.records.last() {
            if record.tick < last.tick {
                return Err(SimError::OutOfOrder {
                    tick: record.tick,
                    last: last.tick,
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn records(&self) -> &[TransitionRecord] {
        &self.records
    }

    /// Line-delimited JSON: the header object, then one object per record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, LogFormatError> {
        let mut header = None;
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let json = |e| LogFormatError::Json {
                line: i + 1,
                source: e,
            };
            if header.is_none() {
                header = Some(serde_json::from_str::<LogHeader>(&line).map_err(json)?);
            } else {
                records.push(serde_json::from_str::<TransitionRecord>(&line).map_err(json)?);
            }
        }
        let header = header.ok_or(LogFormatError::MissingHeader)?;
        Ok(HistoryLog::from_parts(header, records)?)
    }
}
