//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate is expressed as an indexed map whose
//! output is collected in index order, so results never depend on how the
//! work was scheduled. Without the `parallel` feature every policy runs on
//! the calling thread.

use std::num::NonZeroUsize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Plain iterator on the calling thread.
    Serial,
    /// Rayon's global pool.
    #[default]
    Auto,
    /// A dedicated pool capped at the given worker count.
    Threads(NonZeroUsize),
}

impl Parallelism {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads.and_then(NonZeroUsize::new) {
            Some(n) if n.get() == 1 => Parallelism::Serial,
            Some(n) => Parallelism::Threads(n),
            None => Parallelism::Auto,
        }
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, par: Parallelism, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match par {
        Parallelism::Serial => Ok((0..n).map(f).collect()),
        Parallelism::Auto => Ok((0..n).into_par_iter().map(f).collect()),
        Parallelism::Threads(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.get())
                .build()
                .map_err(|e| crate::Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _par: Parallelism, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    Ok((0..n).map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_every_policy() {
        let expected: Vec<usize> = (0..1000).map(|i| i * i).collect();
        for par in [
            Parallelism::Serial,
            Parallelism::Auto,
            Parallelism::from_threads(Some(3)),
        ] {
            assert_eq!(map_indexed(1000, par, |i| i * i).unwrap(), expected);
        }
    }

    #[test]
    fn thread_flag_mapping() {
        assert_eq!(Parallelism::from_threads(None), Parallelism::Auto);
        assert_eq!(Parallelism::from_threads(Some(0)), Parallelism::Auto);
        assert_eq!(Parallelism::from_threads(Some(1)), Parallelism::Serial);
        assert!(matches!(
            Parallelism::from_threads(Some(4)),
            Parallelism::Threads(n) if n.get() == 4
        ));
    }
}
