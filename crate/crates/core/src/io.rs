//! File formats: world JSON, labeled dataset CSV, scores-ledger CSV.

use std::io::{Read, Write};
use std::path::Path;

use crate::classifier::ScoreRecord;
use crate::diffusion::Observation;
use crate::error::{Error, Result};
use crate::world::GaussianWorld;

/// Serializes a world as `{"dim", "std", "means", "seed"}`.
pub fn world_to_json(world: &GaussianWorld) -> Result<String> {
    let mut s = serde_json::to_string_pretty(world)?;
    s.push('\n');
    Ok(s)
}

pub fn world_from_json(text: &str) -> Result<GaussianWorld> {
    let world: GaussianWorld = serde_json::from_str(text)?;
    world.validate()?;
    Ok(world)
}

pub fn read_world(path: impl AsRef<Path>) -> Result<GaussianWorld> {
    world_from_json(&std::fs::read_to_string(path)?)
}

/// Writes `label,f0,...,f{d-1}` followed by one row per example.
pub fn write_dataset<W: Write>(out: W, dim: usize, rows: &[(usize, Observation)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (label, obs) in rows {
        crate::error::check_dim(dim, obs.dim())?;
        let mut rec = vec![label.to_string()];
        rec.extend(obs.data.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A labeled dataset and its feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub rows: Vec<(usize, Observation)>,
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    let expected = std::iter::once("label".to_string()).chain((0..dim).map(|i| format!("f{i}")));
    if dim == 0 || !header.iter().zip(expected).all(|(h, e)| h == e) {
        return Err(Error::Parse(format!(
            "dataset header must be label,f0,...,f{{d-1}}; got {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse(format!("dataset row {}: {what}", i + 1));
        let label = rec[0].trim().parse::<usize>().map_err(|_| bad("label is not a nonnegative integer"))?;
        let data = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("feature is not a number")))
            .collect::<Result<Vec<_>>>()?;
        rows.push((label, Observation::new(data)?));
    }
    Ok(Dataset { dim, rows })
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?)
}

/// Streams scores-ledger rows: `example,round,t,w_t,class_id,sq_error`.
pub struct ScoresCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ScoresCsvWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["example", "round", "t", "w_t", "class_id", "sq_error"])?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, example: usize, records: &[ScoreRecord]) -> Result<()> {
        for r in records {
            self.inner.write_record([
                example.to_string(),
                r.round.to_string(),
                r.t.to_string(),
                r.w_t.to_string(),
                r.class_id.to_string(),
                r.sq_error.to_string(),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dataset_header_is_exact() {
        let rows = vec![(1, Observation::new(vec![0.5, -2.0]).unwrap())];
        let mut buf = Vec::new();
        write_dataset(&mut buf, 2, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "label,f0,f1\n1,0.5,-2\n");
        let back = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(back, Dataset { dim: 2, rows });
    }

    #[test]
    fn empty_dataset_keeps_header() {
        let mut buf = Vec::new();
        write_dataset(&mut buf, 3, &[]).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!((back.dim, back.rows.len()), (3, 0));
    }

    #[test]
    fn malformed_datasets() {
        assert!(read_dataset("y,f0\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset("label,f1\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset("label,f0\n-1,2\n".as_bytes()).is_err());
        assert!(read_dataset("label,f0\n1,abc\n".as_bytes()).is_err());
        assert!(read_dataset("label\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn world_json_schema() {
        let world = GaussianWorld::new(0.5, vec![vec![1.0, 2.0], vec![-1.0, 0.0]], 9).unwrap();
        let text = world_to_json(&world).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["std"], 0.5);
        assert_eq!(v["seed"], 9);
        assert_eq!(world_from_json(&text).unwrap(), world);
        assert!(world_from_json(r#"{"dim":1,"std":-1,"means":[[0],[1]],"seed":0}"#).is_err());
    }

    proptest! {
        #[test]
        fn dataset_round_trips(rows in prop::collection::vec(
            (0usize..50, prop::collection::vec(-1e6f64..1e6, 3)), 0..20)) {
            let rows: Vec<(usize, Observation)> =
                rows.into_iter().map(|(l, d)| (l, Observation::new(d).unwrap())).collect();
            let mut buf = Vec::new();
            write_dataset(&mut buf, 3, &rows).unwrap();
            prop_assert_eq!(read_dataset(buf.as_slice()).unwrap().rows, rows);
        }
    }
}
