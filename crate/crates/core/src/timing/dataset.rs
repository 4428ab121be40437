use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

pub const TRAINING_CSV_HEADER: &str = "E,h,L,width,bitrate_kbps,preset,time_seconds";

/// One observed encode: segment features, rung, preset and wall time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    #[serde(rename = "E")]
    pub texture_energy: f64,
    #[serde(rename = "h")]
    pub temporal_energy: f64,
    #[serde(rename = "L")]
    pub luminescence: f64,
    pub width: u32,
    pub bitrate_kbps: f64,
    pub preset: u8,
    pub time_seconds: f64,
}

impl TrainingRow {
    pub fn feature_vector(&self) -> FeatureVector {
        FeatureVector::from_parts(
            self.texture_energy,
            self.temporal_energy,
            self.luminescence,
            f64::from(self.width),
            self.bitrate_kbps,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_seconds.is_finite() && self.time_seconds > 0.0) {
            return Err(Error::Dataset(format!(
                "observed time {} is not positive",
                self.time_seconds
            )));
        }
        if self.width == 0 || !(self.bitrate_kbps.is_finite() && self.bitrate_kbps > 0.0) {
            return Err(Error::Dataset("row with nonpositive width or bitrate".into()));
        }
        if ![self.texture_energy, self.temporal_energy, self.luminescence]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Dataset("row with non-finite features".into()));
        }
        Ok(())
    }
}

pub fn read_training_csv<R: Read>(input: R) -> Result<Vec<TrainingRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (line, rec) in reader.deserialize::<TrainingRow>().enumerate() {
        let row = rec?;
        row.validate()
            .map_err(|e| Error::Dataset(format!("row {}: {e}", line + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_training_csv<W: Write>(out: W, rows: &[TrainingRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_parse() {
        let rows = vec![TrainingRow {
            texture_energy: 12.5,
            temporal_energy: 3.0,
            luminescence: 0.4,
            width: 1080,
            bitrate_kbps: 4500.0,
            preset: 3,
            time_seconds: 1.25,
        }];
        let mut buf = Vec::new();
        write_training_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRAINING_CSV_HEADER);
        assert_eq!(read_training_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn rejects_nonpositive_time() {
        let text = format!("{TRAINING_CSV_HEADER}\n1,1,1,360,145,0,0\n");
        assert!(matches!(read_training_csv(text.as_bytes()), Err(Error::Dataset(_))));
    }
}
