//! Replica scheduling. Results come back ordered by replica index, so the
//! number of workers never changes the output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::error::{CliError, Result};

enum Outcome<T> {
    Done(T),
    Failed(kpzlab_core::Error),
    Panicked(String),
    Skipped,
}

/// Runs `job(i)` for `i in 0..count` on `workers` threads. After the first
/// failure the remaining queue is drained without running; the error of the
/// lowest failing replica is returned.
pub fn run_replicas<T, F>(workers: usize, count: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> kpzlab_core::Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let cancelled = AtomicBool::new(false);
    let outcomes: Vec<Outcome<T>> = pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                if cancelled.load(Ordering::Relaxed) {
                    return Outcome::Skipped;
                }
                let out = match catch_unwind(AssertUnwindSafe(|| job(i))) {
                    Ok(Ok(v)) => Outcome::Done(v),
                    Ok(Err(e)) => Outcome::Failed(e),
                    Err(payload) => Outcome::Panicked(panic_message(payload.as_ref())),
                };
                if !matches!(out, Outcome::Done(_)) {
                    cancelled.store(true, Ordering::Relaxed);
                }
                out
            })
            .collect()
    });
    let mut results = Vec::with_capacity(count);
    for (i, o) in outcomes.into_iter().enumerate() {
        let replica = i as u64;
        match o {
            Outcome::Done(v) => results.push(v),
            Outcome::Failed(source) => return Err(CliError::Replica { replica, source }),
            Outcome::Panicked(message) => return Err(CliError::WorkerPanic { replica, message }),
            Outcome::Skipped => {}
        }
    }
    if results.len() != count {
        return Err(CliError::Pool("queue drained without a recorded failure".into()));
    }
    Ok(results)
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kpzlab_core::RngStream;

    #[test]
    fn order_is_independent_of_workers() {
        let job = |i: u64| Ok(RngStream::new(5, i).normal());
        let one = run_replicas(1, 200, job).unwrap();
        let four = run_replicas(4, 200, job).unwrap();
        let sixteen = run_replicas(16, 200, job).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, sixteen);
    }

    #[test]
    fn failures_name_the_replica() {
        let e = run_replicas(1, 10, |i| {
            if i == 7 {
                Err(kpzlab_core::Error::DegenerateVariance)
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
        assert!(matches!(e, CliError::Replica { replica: 7, .. }));
    }

    #[test]
    fn panics_are_propagated_with_replica_id() {
        let e = run_replicas(2, 10, |i| if i == 3 { panic!("boom {i}") } else { Ok(i) }).unwrap_err();
        match e {
            CliError::WorkerPanic { replica, message } => {
                assert_eq!(replica, 3);
                assert_eq!(message, "boom 3");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn zero_replicas() {
        assert!(run_replicas(3, 0, Ok).unwrap().is_empty());
    }
}
