//! Zone analysis: estimating how many ranked candidates are correct from a
//! sample of each rank band.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub size: usize,
    pub sampled: usize,
    pub correct_in_sample: usize,
    pub proportion: f64,
    /// `size × correct / sampled`, truncated.
    pub expected_correct: usize,
}

impl Zone {
    pub fn new(size: usize, sampled: usize, correct_in_sample: usize) -> Result<Zone> {
        if sampled == 0 || correct_in_sample > sampled || sampled > size {
            return Err(Error::Invalid(format!(
                "zone of size {size} cannot have {correct_in_sample} correct out of {sampled} sampled"
            )));
        }
        Ok(Zone {
            size,
            sampled,
            correct_in_sample,
            proportion: correct_in_sample as f64 / sampled as f64,
            expected_correct: size * correct_in_sample / sampled,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneReport {
    pub zones: Vec<Zone>,
    pub total_expected: usize,
    pub overall_rate: f64,
}

impl ZoneReport {
    pub fn from_zones(zones: Vec<Zone>) -> Result<ZoneReport> {
        let total_size: usize = zones.iter().map(|z| z.size).sum();
        if total_size == 0 {
            return Err(Error::NoCandidates);
        }
        let total_expected = zones.iter().map(|z| z.expected_correct).sum();
        Ok(ZoneReport {
            zones,
            total_expected,
            overall_rate: total_expected as f64 / total_size as f64,
        })
    }

    pub fn total_size(&self) -> usize {
        self.zones.iter().map(|z| z.size).sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("zone\tsize\tsampled\tcorrect\tproportion\texpected\n");
        for (i, z) in self.zones.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.2}\t{}\n",
                i + 1,
                z.size,
                z.sampled,
                z.correct_in_sample,
                z.proportion,
                z.expected_correct
            ));
        }
        out.push_str(&format!(
            "total\t{}\t\t\t\t{}\noverall\t{:.4}\n",
            self.total_size(),
            self.total_expected,
            self.overall_rate
        ));
        out
    }
}

/// Indices of `scores` from highest to lowest. Ties keep input order.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Rank bands of `⌈n / n_zones⌉` items; the last band takes the remainder.
/// Fewer than `n_zones` bands result when `n` is small.
pub fn equal_zones(n: usize, n_zones: usize) -> Vec<usize> {
    if n == 0 || n_zones == 0 {
        return Vec::new();
    }
    let width = n.div_ceil(n_zones);
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = width.min(left);
        sizes.push(s);
        left -= s;
    }
    sizes
}

fn bands(sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let r = start..start + s;
            start += s;
            r
        })
        .collect()
}

/// Ranks `candidates` by score, splits them into `n_zones` equal bands and
/// asks `oracle` about the top `sample_per_zone` items of each band.
pub fn zone_analysis<T>(
    candidates: &[(T, f64)],
    n_zones: usize,
    sample_per_zone: usize,
    oracle: impl FnMut(&T) -> bool,
) -> Result<ZoneReport> {
    let sizes = equal_zones(candidates.len(), n_zones);
    zone_analysis_with_sizes(candidates, &sizes, sample_per_zone, oracle)
}

/// Like [`zone_analysis`] with explicit band sizes, which must add up to the
/// number of candidates.
pub fn zone_analysis_with_sizes<T>(
    candidates: &[(T, f64)],
    sizes: &[usize],
    sample_per_zone: usize,
    mut oracle: impl FnMut(&T) -> bool,
) -> Result<ZoneReport> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if sizes.iter().sum::<usize>() != candidates.len() {
        return Err(Error::LengthMismatch(sizes.iter().sum(), candidates.len()));
    }
    if sample_per_zone == 0 || sizes.iter().any(|&s| s < sample_per_zone) {
        return Err(Error::Invalid(format!(
            "cannot sample {sample_per_zone} from every zone of sizes {sizes:?}"
        )));
    }
    let scores: Vec<f64> = candidates.iter().map(|(_, s)| *s).collect();
    let order = rank_by_score(&scores);
    let zones = bands(sizes)
        .into_iter()
        .map(|band| {
            let correct = order[band.start..band.start + sample_per_zone]
                .iter()
                .filter(|&&i| oracle(&candidates[i].0))
                .count();
            Zone::new(band.len(), sample_per_zone, correct)
        })
        .collect::<Result<Vec<_>>>()?;
    ZoneReport::from_zones(zones)
}

/// The published ten-zone example: 17,914 candidates, 100 checked per zone.
pub fn table5_fixture() -> ZoneReport {
    let mut sizes = vec![1800; 9];
    sizes.push(1714);
    let correct = [97, 88, 90, 81, 79, 70, 77, 69, 59, 59];
    let zones = sizes
        .into_iter()
        .zip(correct)
        .map(|(size, c)| Zone::new(size, 100, c).expect("fixture zones are valid"))
        .collect();
    ZoneReport::from_zones(zones).expect("fixture is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn table5_arithmetic() {
        let r = table5_fixture();
        let expected: Vec<usize> = r.zones.iter().map(|z| z.expected_correct).collect();
        assert_eq!(expected, [1746, 1584, 1620, 1458, 1422, 1260, 1386, 1242, 1062, 1011]);
        assert_eq!(r.total_size(), 17914);
        assert_eq!(r.total_expected, 13791);
        assert_eq!(format!("{:.4}", r.overall_rate), "0.7698");
    }

    #[test]
    fn all_correct() {
        let cands: Vec<(usize, f64)> = (0..95).map(|i| (i, i as f64)).collect();
        let r = zone_analysis(&cands, 10, 5, |_| true).unwrap();
        assert_eq!(r.overall_rate, 1.0);
        assert_eq!(r.zones.len(), 10);
        assert_eq!(r.zones.last().unwrap().size, 5);
    }

    #[test]
    fn errors() {
        let empty: Vec<((), f64)> = Vec::new();
        assert!(matches!(
            zone_analysis(&empty, 10, 1, |_| true),
            Err(Error::NoCandidates)
        ));
        let cands: Vec<((), f64)> = vec![((), 1.0); 12];
        assert!(zone_analysis(&cands, 10, 3, |_| true).is_err());
    }

    #[test]
    fn threshold_truth_gives_decreasing_proportions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cands: Vec<(f64, f64)> = (0..5000)
            .map(|_| {
                let s: f64 = rng.gen();
                (s, s)
            })
            .collect();
        // An item is correct with probability equal to its score.
        let mut judge = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let r = zone_analysis(&cands, 10, 200, |s| judge.gen::<f64>() < *s).unwrap();
        for w in r.zones.windows(2) {
            assert!(w[1].proportion <= w[0].proportion + 0.1, "{:?}", r.zones);
        }
        assert!(r.zones[0].proportion > r.zones[9].proportion);
    }

    proptest! {
        #[test]
        fn zones_partition_the_ranking(scores in prop::collection::vec(-1e3f64..1e3, 1..300), n_zones in 1usize..15) {
            let sizes = equal_zones(scores.len(), n_zones);
            prop_assert_eq!(sizes.iter().sum::<usize>(), scores.len());
            prop_assert!(sizes.len() <= n_zones);
            let order = rank_by_score(&scores);
            let concat: Vec<usize> = bands(&sizes).into_iter().flat_map(|b| order[b].to_vec()).collect();
            prop_assert_eq!(&concat, &order);
            for w in concat.windows(2) {
                prop_assert!(scores[w[0]] >= scores[w[1]]);
            }
        }
    }
}
