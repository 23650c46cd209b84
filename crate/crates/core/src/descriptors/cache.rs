//! On-disk cache of dense descriptor sets.
//!
//! One file per (sample, plot configuration, descriptor spec). The file name
//! is the SHA-256 of the textual key; the key itself is stored in the header
//! and compared on load, together with the format version, so any
//! configuration change misses the cache.
//!
//! Layout (little endian): magic `RPHD`, `u32` version, `u32` key length,
//! key bytes, `u32` width, `u32` height, `u32` dim, `u32` point count, then
//! `(u32 x, u32 y)` per point followed by `f64` values row by row.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{DescriptorSpec, LocalDescriptorSet};
use crate::error::{Error, Result};
use crate::image::RpVariant;
use crate::rp::RpConfig;
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"RPHD";
pub const CACHE_VERSION: u32 = 1;
/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "RPHAR_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct DescriptorCache {
    dir: PathBuf,
}

impl DescriptorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `$RPHAR_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).map(|d| Self::new(PathBuf::from(d)))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(sample_id: &str, variant: RpVariant, rp: &RpConfig, spec: &DescriptorSpec) -> String {
        format!(
            "v{CACHE_VERSION}|{sample_id}|{}|m={}|d={}|eps={:?}|pol={:?}|{}|stride={}|patch={}|bins={}",
            variant.name(),
            rp.m,
            rp.d,
            rp.epsilon,
            rp.polarity,
            spec.kind.name(),
            spec.grid.stride,
            spec.grid.patch,
            spec.hist_bins,
        )
    }

    fn path_for(&self, key: &str) -> PathBuf {
        let digest = Sha256::digest(key.as_bytes());
        let name: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{name}.rphd"))
    }

    /// Returns the cached set, or `None` on a miss or a stale/corrupt entry.
    pub fn load<T: Real>(&self, key: &str) -> Option<LocalDescriptorSet<T>> {
        let bytes = fs::read(self.path_for(key)).ok()?;
        decode(&bytes, key).ok()
    }

    pub fn store<T: Real>(&self, key: &str, set: &LocalDescriptorSet<T>) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(key);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode(key, set)).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

fn encode<T: Real>(key: &str, set: &LocalDescriptorSet<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + key.len() + set.values.len() * 8 + set.points.len() * 8);
    out.extend_from_slice(MAGIC);
    let put = |v: u32, out: &mut Vec<u8>| out.extend_from_slice(&v.to_le_bytes());
    put(CACHE_VERSION, &mut out);
    put(key.len() as u32, &mut out);
    out.extend_from_slice(key.as_bytes());
    put(set.image_size.0 as u32, &mut out);
    put(set.image_size.1 as u32, &mut out);
    put(set.dim as u32, &mut out);
    put(set.points.len() as u32, &mut out);
    for &(x, y) in &set.points {
        put(x as u32, &mut out);
        put(y as u32, &mut out);
    }
    for v in &set.values {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("descriptor cache", "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode<T: Real>(bytes: &[u8], key: &str) -> Result<LocalDescriptorSet<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("descriptor cache", "bad magic"));
    }
    if r.u32()? != CACHE_VERSION as usize {
        return Err(Error::format("descriptor cache", "version mismatch"));
    }
    let key_len = r.u32()?;
    if r.take(key_len)? != key.as_bytes() {
        return Err(Error::format("descriptor cache", "key mismatch"));
    }
    let kind_name = key.split('|').nth(7).unwrap_or_default();
    let kind = super::DescriptorKind::parse(kind_name)
        .ok_or_else(|| Error::format("descriptor cache", "unknown descriptor kind"))?;
    let (w, h, dim, n) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    let points = (0..n)
        .map(|_| Ok((r.u32()?, r.u32()?)))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..n * dim)
        .map(|_| r.f64().map(T::lit))
        .collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::format("descriptor cache", "trailing bytes"));
    }
    Ok(LocalDescriptorSet {
        image_size: (w, h),
        kind,
        dim,
        points,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::{extract, DescriptorKind};
    use crate::image::RpImage;

    #[test]
    fn store_load_and_invalidate() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DescriptorCache::new(dir.path());
        let img = RpImage::from_planes(
            30,
            30,
            vec![(0..900).map(|i| (i * 7 % 256) as u8).collect()],
            RpVariant::Gray,
        )
        .unwrap();
        let spec = DescriptorSpec::new(DescriptorKind::Sift);
        let rp = RpConfig::default();
        let set = extract::<f64>(&img, &spec).unwrap();
        let key = DescriptorCache::key("s1", RpVariant::Gray, &rp, &spec);
        assert!(cache.load::<f64>(&key).is_none());
        cache.store(&key, &set).unwrap();
        assert_eq!(cache.load::<f64>(&key).unwrap(), set);

        let other = RpConfig { m: 3, ..rp };
        let key2 = DescriptorCache::key("s1", RpVariant::Gray, &other, &spec);
        assert_ne!(key, key2);
        assert!(cache.load::<f64>(&key2).is_none());

        // corrupt entry is a miss, not an error
        let path = cache.path_for(&key);
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, bytes).unwrap();
        assert!(cache.load::<f64>(&key).is_none());
    }
}
