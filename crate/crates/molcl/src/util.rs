//! Shared plumbing: a platform-stable 64-bit hash, seed derivation, and
//! atomic file writes.

use std::io::Write;
use std::path::Path;

/// FNV-1a 64-bit offset basis.
pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
/// FNV-1a 64-bit prime.
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Incremental FNV-1a hasher over little-endian byte encodings.
///
/// `std::hash::DefaultHasher` is not guaranteed stable across compiler
/// releases, so everything that must hash identically across runs and
/// platforms (fingerprint identifiers, derived seeds, canonical ranks)
/// goes through this instead.
#[derive(Clone, Copy, Debug)]
pub struct StableHasher(u64);

impl StableHasher {
    pub fn new() -> Self {
        StableHasher(FNV_OFFSET)
    }

    pub fn write_u8(&mut self, v: u8) -> &mut Self {
        self.0 ^= v as u64;
        self.0 = self.0.wrapping_mul(FNV_PRIME);
        self
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        for b in v.to_le_bytes() {
            self.write_u8(b);
        }
        self
    }

    pub fn write_i64(&mut self, v: i64) -> &mut Self {
        self.write_u64(v as u64)
    }

    pub fn write_bool(&mut self, v: bool) -> &mut Self {
        self.write_u8(v as u8)
    }

    pub fn finish(&self) -> u64 {
        // splitmix64 finalizer spreads the low-entropy FNV state before
        // modular folding.
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

impl Default for StableHasher {
    fn default() -> Self {
        Self::new()
    }
}

/// Hashes a slice of u64 words.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = StableHasher::new();
    for &w in words {
        h.write_u64(w);
    }
    h.finish()
}

/// Derives an independent child seed from a parent seed and a context path.
///
/// Used wherever the spec of a sampling step names its seed inputs, e.g.
/// per-(molecule, view) augmentation seeds from a batch seed.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    let mut h = StableHasher::new();
    h.write_u64(parent);
    for &p in path {
        h.write_u64(p);
    }
    h.finish()
}

/// Writes `bytes` to `path` atomically: write a sibling temp file, then
/// rename over the target. Interrupted runs never leave truncated output.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = dir.join(format!(".{}.tmp-{}", file_name, std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
