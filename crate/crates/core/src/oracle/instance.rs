use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::job::{validate_stream, Job, ModelError};

pub const INSTANCE_HEADER: [&str; 5] = ["id", "arrival", "service", "deadline", "reward"];

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance header must be `id,arrival,service,deadline,reward`")]
    Header,
    #[error("line {line}: {source}")]
    Row { line: u64, source: csv::Error },
    #[error("line {line}: {source}")]
    Job { line: u64, source: ModelError },
    #[error(transparent)]
    Order(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: u64,
    arrival: f64,
    service: f64,
    deadline: f64,
    reward: f64,
}

/// Reads an instance: a header `id,arrival,service,deadline,reward` and one
/// job per line, in arrival order.
pub fn parse_instance(text: &str) -> Result<Vec<Job>, InstanceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers()?;
    if header.iter().ne(INSTANCE_HEADER) {
        return Err(InstanceError::Header);
    }
    let mut jobs = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|source| InstanceError::Row {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = jobs.len() as u64 + 2;
        let job = Job::new(row.id, row.arrival, row.service, row.deadline, row.reward)
            .map_err(|source| InstanceError::Job { line, source })?;
        jobs.push(job);
    }
    validate_stream(&jobs)?;
    Ok(jobs)
}

pub fn write_instance<W: Write>(jobs: &[Job], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(INSTANCE_HEADER)?;
    for j in jobs {
        w.serialize(Row {
            id: j.id.0,
            arrival: j.arrival,
            service: j.service,
            deadline: j.deadline,
            reward: j.reward,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_rows() {
        let jobs = parse_instance("id,arrival,service,deadline,reward\n1,0,1,2,4\n2, 0.5 ,1,2,10\n").unwrap();
        assert_eq!(jobs.len(), 2);
        assert_eq!(jobs[1].expiry, 2.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_instance("1,0,1,2,4\n"), Err(InstanceError::Header)));
        assert!(matches!(
            parse_instance("id,arrival,service,deadline,reward\n1,0,x,2,4\n"),
            Err(InstanceError::Row { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("id,arrival,service,deadline,reward\n1,0,0,2,4\n"),
            Err(InstanceError::Job { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("id,arrival,service,deadline,reward\n2,0,1,2,4\n1,1,1,2,4\n"),
            Err(InstanceError::Order(_))
        ));
        assert!(parse_instance("id,arrival,service,deadline,reward\n1,0,1,2\n").is_err());
        assert!(parse_instance("id,arrival,service,deadline,reward\n").unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn roundtrip(rows in proptest::collection::vec((0.0f64..5.0, 0.01f64..3.0, 0.01f64..9.0, 0.1f64..20.0), 0..12)) {
            let mut t = 0.0;
            let jobs: Vec<Job> = rows.iter().enumerate().map(|(i, (a, b, d, w))| {
                t += a;
                Job::new(i as u64 + 1, t, *b, *d, *w).unwrap()
            }).collect();
            let mut buf = Vec::new();
            write_instance(&jobs, &mut buf).unwrap();
            let back = parse_instance(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, jobs);
        }
    }
}
