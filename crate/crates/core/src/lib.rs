//! Likelihood estimators for the multivariate extreme-value logistic model,
//! their Fisher-information efficiencies and the simulation studies that
//! compare them.

pub mod error;
pub mod experiments;
pub mod fisher;
pub mod likelihoods;
pub mod margins;
pub mod model;
pub mod optimize;
pub mod quad;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use likelihoods::Estimator;
pub use model::LogisticParams;
pub use simulate::SeedSpec;

/// `(0..n).map(f)` in index order, spread over the rayon pool when the
/// `parallel` feature is on.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
