//! Replications spread over the rayon pool. Each replication owns its
//! random stream, and pooling follows replication order, so results match
//! the sequential [`psra_core::sim::replicate`] bit for bit.

use psra_core::sim::{pool, run_replication, Replication, SimConfig};
use psra_core::Result;
use rayon::prelude::*;

pub fn replicate(config: &SimConfig, n_reps: u64) -> Result<Replication> {
    if n_reps == 0 {
        return psra_core::sim::replicate(config, 0);
    }
    let runs = (0..n_reps)
        .into_par_iter()
        .map(|i| run_replication(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(runs))
}
