use crate::error::{Error, Result};

/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Entries with less mass than this are dropped and the rest renormalized.
pub const DROP_THRESHOLD: f64 = 1e-12;

/// A finite categorical distribution with a sorted, duplicate-free support
/// of strictly positive probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDistribution<K = usize> {
    support: Vec<(K, f64)>,
}

impl<K: Ord + Clone> CategoricalDistribution<K> {
    /// Builds a distribution from explicit probabilities.
    ///
    /// Rejects duplicate keys, negative or non-finite entries and totals that
    /// are more than [`MASS_TOLERANCE`] away from one.
    pub fn new(entries: Vec<(K, f64)>) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution("duplicate support entry".into()));
        }
        let total = checked_total(&entries)?;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Self::prune(entries)
    }

    /// Builds a distribution from unnormalized non-negative weights.
    /// Duplicate keys are merged.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
    {
        let mut entries: Vec<(K, f64)> = weights.into_iter().collect();
        checked_total(&entries)?;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(K, f64)> = Vec::with_capacity(entries.len());
        for (k, p) in entries {
            match merged.last_mut() {
                Some((last, q)) if *last == k => *q += p,
                _ => merged.push((k, p)),
            }
        }
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("no positive mass".into()));
        }
        for (_, p) in merged.iter_mut() {
            *p /= total;
        }
        Self::prune(merged)
    }

    /// All mass on `key`.
    pub fn point(key: K) -> Self {
        CategoricalDistribution {
            support: vec![(key, 1.0)],
        }
    }

    fn prune(mut entries: Vec<(K, f64)>) -> Result<Self> {
        entries.retain(|(_, p)| *p >= DROP_THRESHOLD);
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if entries.is_empty() || total <= 0.0 {
            return Err(Error::InvalidDistribution("no positive mass".into()));
        }
        // rounding-level drift is left alone so given probabilities stay exact
        if (total - 1.0).abs() > f64::EPSILON * entries.len() as f64 {
            for (_, p) in entries.iter_mut() {
                *p /= total;
            }
        }
        Ok(CategoricalDistribution { support: entries })
    }

    pub fn support(&self) -> &[(K, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> + '_ {
        self.support.iter().map(|(k, p)| (k, *p))
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> + '_ {
        self.support.iter().map(|(k, _)| k)
    }

    /// Probability of `key`, zero when it is outside the support.
    pub fn prob(&self, key: &K) -> f64 {
        self.support
            .binary_search_by(|(k, _)| k.cmp(key))
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    pub fn is_point(&self) -> bool {
        self.support.len() == 1
    }

    /// Product distribution over pairs: mass of `(a, b)` is `self(a) * other(b)`.
    pub fn product<L: Ord + Clone>(
        &self,
        other: &CategoricalDistribution<L>,
    ) -> CategoricalDistribution<(K, L)> {
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for (a, p) in &self.support {
            for (b, q) in &other.support {
                entries.push(((a.clone(), b.clone()), p * q));
            }
        }
        // both factors are sorted, so the nested loop is already lexicographic
        CategoricalDistribution::prune(entries)
            .expect("product of two distributions keeps positive mass")
    }

    /// Pushes the distribution through `f`, merging keys that collide.
    pub fn map_keys<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> L) -> CategoricalDistribution<L> {
        CategoricalDistribution::from_weights(self.support.iter().map(|(k, p)| (f(k), *p)))
            .expect("image of a distribution keeps positive mass")
    }

    /// Expectation of `f` under the distribution, summed in support order.
    pub fn expect(&self, mut f: impl FnMut(&K) -> f64) -> f64 {
        self.support.iter().map(|(k, p)| p * f(k)).sum()
    }
}

fn checked_total<K>(entries: &[(K, f64)]) -> Result<f64> {
    let mut total = 0.0;
    for (_, p) in entries {
        if !p.is_finite() || *p < 0.0 {
            return Err(Error::InvalidDistribution(format!("bad probability {p}")));
        }
        total += p;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_entries<K: Ord + Clone + std::fmt::Debug>(
        d: &CategoricalDistribution<K>,
        expected: &[(K, f64)],
    ) {
        assert_eq!(d.len(), expected.len(), "{d:?}");
        for (k, p) in expected {
            assert!((d.prob(k) - p).abs() < 1e-12, "{k:?}: {} vs {p}", d.prob(k));
        }
    }

    #[test]
    fn point_masses() {
        assert_entries(&CategoricalDistribution::point(3usize), &[(3, 1.0)]);
        assert_entries(&CategoricalDistribution::point(0usize), &[(0, 1.0)]);
        let prod = CategoricalDistribution::point('a').product(&CategoricalDistribution::point('b'));
        assert_entries(&prod, &[(('a', 'b'), 1.0)]);
    }

    #[test]
    fn product_with_point_factor() {
        let d1 = CategoricalDistribution::new(vec![('a', 0.5), ('b', 0.5)]).unwrap();
        let d2 = CategoricalDistribution::point('c');
        assert_entries(&d1.product(&d2), &[(('a', 'c'), 0.5), (('b', 'c'), 0.5)]);
    }

    #[test]
    fn product_of_fair_coins() {
        let d1 = CategoricalDistribution::new(vec![('a', 0.5), ('b', 0.5)]).unwrap();
        let d2 = CategoricalDistribution::new(vec![('c', 0.5), ('d', 0.5)]).unwrap();
        let p = d1.product(&d2);
        assert_entries(
            &p,
            &[
                (('a', 'c'), 0.25),
                (('a', 'd'), 0.25),
                (('b', 'c'), 0.25),
                (('b', 'd'), 0.25),
            ],
        );
    }

    #[test]
    fn product_direct_multiplication() {
        let d1 = CategoricalDistribution::new(vec![('a', 0.3), ('b', 0.7)]).unwrap();
        let d2 = CategoricalDistribution::new(vec![('c', 0.2), ('d', 0.8)]).unwrap();
        let p = d1.product(&d2);
        assert_entries(
            &p,
            &[
                (('a', 'c'), 0.06),
                (('a', 'd'), 0.24),
                (('b', 'c'), 0.14),
                (('b', 'd'), 0.56),
            ],
        );
        assert!((p.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CategoricalDistribution::new(vec![(0usize, 0.5), (0, 0.5)]).is_err());
        assert!(CategoricalDistribution::new(vec![(0usize, 0.5), (1, 0.4)]).is_err());
        assert!(CategoricalDistribution::new(vec![(0usize, -0.5), (1, 1.5)]).is_err());
        assert!(CategoricalDistribution::new(vec![(0usize, f64::NAN)]).is_err());
        assert!(CategoricalDistribution::<usize>::new(vec![]).is_err());
        assert!(CategoricalDistribution::<usize>::from_weights(vec![(1, 0.0)]).is_err());
    }

    #[test]
    fn tiny_entries_are_dropped() {
        let d = CategoricalDistribution::new(vec![(0usize, 1.0 - 1e-13), (1, 1e-13)]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.prob(&0), 1.0);
        assert_eq!(d.prob(&1), 0.0);
    }

    #[test]
    fn weights_merge_duplicates() {
        let d = CategoricalDistribution::from_weights(vec![(2usize, 1.0), (1, 2.0), (2, 1.0)]).unwrap();
        assert_entries(&d, &[(1, 0.5), (2, 0.5)]);
        let keys: Vec<_> = d.keys().copied().collect();
        assert_eq!(keys, vec![1, 2]);
    }
}
