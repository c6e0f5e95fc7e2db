//! Batches of independent runs. With the `parallel` feature the batch is
//! spread over a rayon pool; without it the sequential path is used. Each
//! run owns all of its state, so both paths return identical results in
//! input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::protocol::{CollectOutcome, Deployment};
use crate::messages::{AccusationReport, SealedBody};
use crate::certs::ReasonCode;
use crate::sim::{simulate, Metrics, SimConfig, SimError};

pub fn run_many(cfgs: &[SimConfig]) -> Vec<Result<Metrics, SimError>> {
    #[cfg(feature = "parallel")]
    {
        cfgs.par_iter().map(run_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_many_sequential(cfgs)
    }
}

pub fn run_many_sequential(cfgs: &[SimConfig]) -> Vec<Result<Metrics, SimError>> {
    cfgs.iter().map(run_one).collect()
}

fn run_one(cfg: &SimConfig) -> Result<Metrics, SimError> {
    simulate(cfg).map(|o| o.metrics)
}

/// The base scenario repeated over a range of seeds.
pub fn seed_sweep(base: &SimConfig, seeds: impl IntoIterator<Item = u64>) -> Vec<SimConfig> {
    seeds
        .into_iter()
        .map(|seed| SimConfig { seed, ..base.clone() })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdPoint {
    pub present: usize,
    /// Distinct accusers at which the RSU forwarded; `None` if it never did.
    pub forwarded_at: Option<usize>,
}

/// Drives a real RSU with `present` heard vehicles accusing one extra,
/// silent vehicle, one accuser at a time, and reports when it forwarded.
pub fn accusation_threshold(present: usize) -> ThresholdPoint {
    let accused = 0u64;
    let accusers: Vec<u64> = (1..=present as u64).collect();
    let mut d = Deployment::simple(std::iter::once(accused).chain(accusers.iter().copied()), 60);
    let now = 20;
    for id in &accusers {
        d.rsu.observe_presence(*id, now);
    }
    let mut forwarded_at = None;
    for (i, id) in accusers.iter().enumerate() {
        let v = d.vehicle(*id);
        let vc = *v.valid_cert().expect("fresh vehicle holds a VC");
        let sealed = AccusationReport::build(
            d.env.crypto(),
            &v.keys().private_key,
            ReasonCode::BogusTrafficInformation,
            vc,
            now,
            accused,
        )
        .and_then(|r| r.seal(d.env.crypto(), &d.env.rsu_key))
        .expect("digest backend seals any accusation");
        if let CollectOutcome::Forward { .. } = d.rsu.collect(&d.env, &sealed, now) {
            forwarded_at = Some(i + 1);
            break;
        }
    }
    ThresholdPoint { present, forwarded_at }
}

pub fn threshold_sweep(sizes: impl IntoIterator<Item = usize>) -> Vec<ThresholdPoint> {
    let sizes: Vec<usize> = sizes.into_iter().collect();
    #[cfg(feature = "parallel")]
    {
        sizes.into_par_iter().map(accusation_threshold).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sizes.into_iter().map(accusation_threshold).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_paths_agree() {
        let base = SimConfig {
            duration_s: 25,
            ..SimConfig::canonical()
        };
        let cfgs = seed_sweep(&base, 1..4);
        assert_eq!(run_many(&cfgs), run_many_sequential(&cfgs));
    }

    #[test]
    fn single_vehicle_road_forwards_on_first_accusation() {
        assert_eq!(accusation_threshold(1).forwarded_at, Some(1));
    }
}
