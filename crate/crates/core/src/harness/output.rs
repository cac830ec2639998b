use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::MetricsRecord;
use crate::error::{Error, Result};

/// Column order of every metrics CSV.
pub const CSV_HEADER: &str =
    "episode,seed,agent,scheme,traffic,n_users,M,D_lo,D_hi,sigma2_dbm,mean_error,mean_reward,dnn_loss,cluster_time_s";

/// Writes rows with [`CSV_HEADER`]; a missing DNN loss is an empty field.
pub fn write_csv<W: Write>(rows: &[MetricsRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_path(rows: &[MetricsRecord], path: &Path) -> Result<()> {
    write_csv(rows, BufWriter::new(File::create(path)?))
}

/// Reads a metrics CSV, insisting on the exact header.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {:?}", header.join(","))));
    }
    reader.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json_path<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
