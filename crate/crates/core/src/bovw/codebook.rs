use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descriptors::DescriptorKind;
use crate::error::{Error, Result};
use crate::scalar::Real;

const HEADER: &str = "# rphar codebook v1";

/// Visual words drawn at random from a descriptor pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T = f64> {
    words: Vec<T>,
    k: usize,
    dim: usize,
    kind: DescriptorKind,
    seed: u64,
}

impl<T: Real> Codebook<T> {
    pub fn from_words(words: Vec<Vec<T>>, kind: DescriptorKind, seed: u64) -> Result<Self> {
        let k = words.len();
        if k == 0 {
            return Err(Error::Empty("codebook has no words".into()));
        }
        let dim = words[0].len();
        let mut seen = HashSet::new();
        let mut flat = Vec::with_capacity(k * dim);
        for w in words {
            if w.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: w.len(),
                });
            }
            if !seen.insert(bit_key(&w)) {
                return Err(Error::NotDistinct {
                    distinct: seen.len(),
                    requested: k,
                });
            }
            flat.extend(w);
        }
        Ok(Self {
            words: flat,
            k,
            dim,
            kind,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn word(&self, j: usize) -> &[T] {
        &self.words[j * self.dim..(j + 1) * self.dim]
    }

    pub fn words(&self) -> impl Iterator<Item = &[T]> {
        self.words.chunks_exact(self.dim)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "k,dim,kind,seed");
        let _ = writeln!(out, "{},{},{},{}", self.k, self.dim, self.kind.name(), self.seed);
        for w in self.words() {
            let row: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::format("codebook", m);
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("missing version header".into()));
        }
        if lines.next() != Some("k,dim,kind,seed") {
            return Err(bad("missing field header".into()));
        }
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing metadata row".into()))?
            .split(',')
            .collect();
        if meta.len() != 4 {
            return Err(bad("metadata row needs 4 fields".into()));
        }
        let k: usize = meta[0].parse().map_err(|_| bad(format!("bad k {:?}", meta[0])))?;
        let dim: usize = meta[1].parse().map_err(|_| bad(format!("bad dim {:?}", meta[1])))?;
        let kind = DescriptorKind::parse(meta[2]).ok_or_else(|| bad(format!("bad kind {:?}", meta[2])))?;
        let seed: u64 = meta[3].parse().map_err(|_| bad(format!("bad seed {:?}", meta[3])))?;
        let words = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|v| v.parse::<T>().map_err(|_| bad(format!("bad value {v:?}"))))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if words.len() != k {
            return Err(bad(format!("expected {k} rows, found {}", words.len())));
        }
        let cb = Self::from_words(words, kind, seed)?;
        if cb.dim != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: cb.dim,
            });
        }
        Ok(cb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn bit_key<T: Real>(v: &[T]) -> Vec<u64> {
    // +0.0 and -0.0 are the same word
    v.iter().map(|x| (x.as_f64() + 0.0).to_bits()).collect()
}

/// Draws `k` distinct words uniformly without replacement from `pool`.
///
/// Indices are drawn by a seeded partial Fisher-Yates shuffle; a draw that
/// duplicates an already chosen word is discarded and drawing continues.
pub fn build_codebook<T: Real>(
    pool: &[&[T]],
    kind: DescriptorKind,
    k: usize,
    seed: u64,
) -> Result<Codebook<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("codebook size must be positive".into()));
    }
    if pool.len() < k {
        return Err(Error::PoolTooSmall {
            available: pool.len(),
            requested: k,
        });
    }
    let dim = pool[0].len();
    if let Some(bad) = pool.iter().find(|d| d.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: bad.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut seen = HashSet::with_capacity(k);
    let mut words = Vec::with_capacity(k);
    for i in 0..order.len() {
        let j = rng.random_range(i..order.len());
        order.swap(i, j);
        let candidate = pool[order[i]];
        if seen.insert(bit_key(candidate)) {
            words.push(candidate.to_vec());
            if words.len() == k {
                return Codebook::from_words(words, kind, seed);
            }
        }
    }
    Err(Error::NotDistinct {
        distinct: words.len(),
        requested: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pool(n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..dim).map(|d| ((i * 31 + d * 7) % 97) as f64 + i as f64 * 1e-3).collect())
            .collect()
    }

    fn refs(p: &[Vec<f64>]) -> Vec<&[f64]> {
        p.iter().map(|v| v.as_slice()).collect()
    }

    #[test]
    fn forced_selection_uses_whole_pool() {
        let p = pool(12, 5);
        let cb = build_codebook(&refs(&p), DescriptorKind::Sift, 12, 3).unwrap();
        let mut got: Vec<Vec<u64>> = cb.words().map(bit_key).collect();
        let mut want: Vec<Vec<u64>> = p.iter().map(|w| bit_key(w)).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn seeded_and_reproducible() {
        let p = pool(500, 8);
        let a = build_codebook(&refs(&p), DescriptorKind::Sift, 50, 9).unwrap();
        let b = build_codebook(&refs(&p), DescriptorKind::Sift, 50, 9).unwrap();
        let c = build_codebook(&refs(&p), DescriptorKind::Sift, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn large_pool_members_are_distinct() {
        let p: Vec<Vec<f64>> = (0..100_000).map(|i| vec![(i % 5000) as f64, (i / 5000) as f64]).collect();
        let cb = build_codebook(&refs(&p), DescriptorKind::Sift, 1000, 1).unwrap();
        let members: HashSet<Vec<u64>> = p.iter().map(|w| bit_key(w)).collect();
        let words: HashSet<Vec<u64>> = cb.words().map(bit_key).collect();
        assert_eq!(words.len(), 1000);
        assert!(words.is_subset(&members));
    }

    #[test]
    fn duplicates_are_redrawn_or_rejected() {
        let mut p = vec![vec![1.0, 2.0]; 50];
        p.push(vec![3.0, 4.0]);
        let cb = build_codebook(&refs(&p), DescriptorKind::Sift, 2, 0).unwrap();
        assert_eq!(cb.k(), 2);
        match build_codebook(&refs(&p), DescriptorKind::Sift, 3, 0) {
            Err(Error::NotDistinct { distinct, requested }) => assert_eq!((distinct, requested), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            build_codebook(&refs(&p[..2]), DescriptorKind::Sift, 3, 0),
            Err(Error::PoolTooSmall { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn csv_reload_is_bit_exact(values in prop::collection::vec(-1e6f64..1e6, 30), seed in any::<u64>()) {
            let words: Vec<Vec<f64>> = values.chunks(3).map(|c| c.to_vec()).collect();
            prop_assume!(words.iter().map(|w| bit_key(w)).collect::<HashSet<_>>().len() == words.len());
            let cb = Codebook::from_words(words, DescriptorKind::RgbHist, seed).unwrap();
            let back = Codebook::<f64>::from_csv(&cb.to_csv()).unwrap();
            prop_assert_eq!(back, cb);
        }
    }
}
