//! Execution strategy for the data-parallel loops of the crate.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] fans work
//! out over the rayon global pool. Without it every strategy runs
//! sequentially, so callers never need to branch on the feature themselves.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving fallible map; the first error in input order wins.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = Exec::Sequential.map(&xs, |x| x * x);
        let b = Exec::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_reports_first_error() {
        let xs: Vec<i32> = vec![1, 2, -3, 4, -5];
        let r = Exec::Parallel.try_map(&xs, |&x| if x < 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(-3));
    }
}
