use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::quadrature::QuadratureSpec;

/// Bumping this orphans every existing entry.
pub const SCHEMA_VERSION: u32 = 1;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Canonical parameter string of a cached result; the file name is its SHA-256.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheKey {
    canonical: String,
}

impl CacheKey {
    /// `kind` separates record types sharing the same indices.
    pub fn new(kind: &str, xi: f64, k: i64, l: i64, l_trunc: usize, spec: &QuadratureSpec) -> Self {
        Self::with_version(kind, xi, k, l, l_trunc, spec, SCHEMA_VERSION)
    }

    pub fn with_version(
        kind: &str,
        xi: f64,
        k: i64,
        l: i64,
        l_trunc: usize,
        spec: &QuadratureSpec,
        version: u32,
    ) -> Self {
        CacheKey {
            canonical: format!(
                "xi={xi:.16e}|k={k}|l={l}|L={l_trunc}|tol={:e}/{:e}|ver={version}|kind={kind}",
                spec.rel_tol, spec.abs_tol
            ),
        }
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.canonical.as_bytes()))
    }
}

/// Directory of content-addressed entries. Writers publish by atomic rename,
/// so a reader sees either a complete entry or none; a damaged entry is a miss.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.digest())
    }

    pub fn get_bytes(&self, key: &CacheKey) -> Option<Vec<u8>> {
        let raw = fs::read(self.path_of(key)).ok()?;
        // layout: canonical key, payload digest, payload
        let mut parts = raw.splitn(3, |b| *b == b'\n');
        let stored_key = parts.next()?;
        let digest = parts.next()?;
        let payload = parts.next()?;
        (stored_key == key.canonical.as_bytes() && digest == hex(&Sha256::digest(payload)).as_bytes())
            .then(|| payload.to_vec())
    }

    pub fn put_bytes(&self, key: &CacheKey, payload: &[u8]) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(key.canonical.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.write_all(hex(&Sha256::digest(payload)).as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.write_all(payload)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_of(key)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        serde_json::from_slice(&self.get_bytes(key)?).ok()
    }

    pub fn put<T: Serialize>(&self, key: &CacheKey, value: &T) -> std::io::Result<()> {
        let bytes = serde_json::to_vec(value).map_err(std::io::Error::other)?;
        self.put_bytes(key, &bytes)
    }

    /// Cached value, or `compute()` stored on success. Failures to write the
    /// cache are not fatal to the computation.
    pub fn get_or_compute<T, E>(&self, key: &CacheKey, compute: impl FnOnce() -> Result<T, E>) -> Result<T, E>
    where
        T: Serialize + DeserializeOwned,
    {
        if let Some(v) = self.get(key) {
            return Ok(v);
        }
        let v = compute()?;
        let _ = self.put(key, &v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(ver: u32) -> CacheKey {
        CacheKey::with_version("numrange", 0.5, 3, 2, 0, &QuadratureSpec::default(), ver)
    }

    #[test]
    fn canonical_form() {
        let k = key(1);
        assert_eq!(
            k.canonical(),
            "xi=5.0000000000000000e-1|k=3|l=2|L=0|tol=1e-9/1e-12|ver=1|kind=numrange"
        );
        assert_eq!(k.digest().len(), 64);
        assert_eq!(k, key(1));
        assert_ne!(key(1).digest(), key(2).digest());
        let near = CacheKey::new("numrange", 0.5 + f64::EPSILON, 3, 2, 0, &QuadratureSpec::default());
        assert_ne!(near.digest(), k.digest());
    }

    #[test]
    fn put_get_roundtrip_and_version_bump() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::open(dir.path()).unwrap();
        let payload = b"{\"a\":1.0}\nwith newline";
        assert!(c.get_bytes(&key(1)).is_none());
        c.put_bytes(&key(1), payload).unwrap();
        assert_eq!(c.get_bytes(&key(1)).unwrap(), payload);
        assert!(c.get_bytes(&key(2)).is_none());
    }

    #[test]
    fn corrupt_entry_is_a_miss_and_is_overwritten() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::open(dir.path()).unwrap();
        c.put(&key(1), &vec![1.5f64, -2.0]).unwrap();
        let path = c.path_of(&key(1));
        let mut raw = fs::read(&path).unwrap();
        let n = raw.len();
        raw[n - 2] ^= 0x01;
        fs::write(&path, &raw).unwrap();
        assert!(c.get::<Vec<f64>>(&key(1)).is_none());
        fs::write(&path, b"garbage").unwrap();
        assert!(c.get::<Vec<f64>>(&key(1)).is_none());
        let v: Result<Vec<f64>, ()> = c.get_or_compute(&key(1), || Ok(vec![3.0]));
        assert_eq!(v.unwrap(), vec![3.0]);
        assert_eq!(c.get::<Vec<f64>>(&key(1)).unwrap(), vec![3.0]);
    }

    #[test]
    fn concurrent_writers_leave_one_valid_entry() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::open(dir.path()).unwrap();
        let payload: Vec<u8> = (0..200_000u32).map(|i| (i % 251) as u8).collect();
        for _ in 0..5 {
            std::thread::scope(|s| {
                for _ in 0..8 {
                    s.spawn(|| {
                        for _ in 0..10 {
                            c.put_bytes(&key(1), &payload).unwrap();
                            if let Some(got) = c.get_bytes(&key(1)) {
                                assert_eq!(got, payload);
                            }
                        }
                    });
                }
            });
        }
        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1, "temporary files left behind");
        assert_eq!(c.get_bytes(&key(1)).unwrap(), payload);
    }
}
