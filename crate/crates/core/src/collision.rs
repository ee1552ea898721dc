//! Bulk sieving of ψ''(C_n) and the injectivity search.
//!
//! A collision is a pair m ≠ n with ψ''(C_m) = ψ''(C_n); none exist up to
//! 10⁶ and none are known. Keys are the exactly reduced fractions
//! ψ(C_n)/n² — equality is structural, never a floating hash, because a
//! false collision would "answer" an open question spuriously.
//!
//! The sieve is segmented: each segment factors all of its n by the base
//! primes ≤ √N (O(N log log N) division work overall) and assembles
//! ψ(C_n) from the prime-power formula. Values ride in u64 while
//! ψ(C_n) < n² fits (n ≤ 2³²−1) and are promoted to u128 automatically
//! beyond that, up to the documented cap n ≤ 2⁴² where every
//! intermediate p^{2α+1} still fits in u128.

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::factored::{factorize_u64, gcd_u128};
use crate::primes::primes_up_to;
use crate::psi::{psi_cyclic, psi_prime_power_u128};
use crate::ratio::ExactRatio;
use crate::Natural;

/// Largest N for which ψ(C_n) < n² fits in a u64 value array.
pub const FAST_PATH_MAX_N: u64 = u32::MAX as u64;

/// Hard cap on the sieve range: below 2⁴², every per-prime-power
/// intermediate p^{2α+1} ≤ n³ < 2¹²⁶ fits in u128.
pub const MAX_SIEVE_N: u64 = 1 << 42;

pub const DEFAULT_SEGMENT_LEN: u64 = 1 << 20;

/// One sieved value: n, ψ(C_n), and the reduced key ψ(C_n)/n².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SieveRecord {
    pub n: u64,
    pub psi: u128,
    pub key_num: u128,
    pub key_den: u128,
}

impl SieveRecord {
    pub fn key(&self) -> ExactRatio {
        ExactRatio::from_u128(self.key_num, self.key_den).expect("positive denominator")
    }
}

/// Segment value word: u64 on the fast path, u128 beyond.
trait PsiWord: Copy {
    fn one() -> Self;
    fn mul_by(&mut self, rhs: u128);
    fn to_u128(self) -> u128;
}

impl PsiWord for u64 {
    fn one() -> Self {
        1
    }
    fn mul_by(&mut self, rhs: u128) {
        debug_assert!(rhs <= u64::MAX as u128);
        *self *= rhs as u64;
    }
    fn to_u128(self) -> u128 {
        self as u128
    }
}

impl PsiWord for u128 {
    fn one() -> Self {
        1
    }
    fn mul_by(&mut self, rhs: u128) {
        *self *= rhs;
    }
    fn to_u128(self) -> u128 {
        self
    }
}

/// ψ(C_n) and reduced keys for every n in [lo, hi).
///
/// `base_primes` must contain every prime ≤ √(hi−1).
fn sieve_segment<W: PsiWord>(lo: u64, hi: u64, base_primes: &[u64]) -> Vec<SieveRecord> {
    debug_assert!(lo >= 2 && hi > lo);
    let len = (hi - lo) as usize;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut val: Vec<W> = vec![W::one(); len];

    for &p in base_primes {
        if p.saturating_mul(p) >= hi {
            break;
        }
        let mut m = lo.div_ceil(p) * p;
        while m < hi {
            let idx = (m - lo) as usize;
            let mut e = 0u32;
            while rem[idx].is_multiple_of(p) {
                rem[idx] /= p;
                e += 1;
            }
            val[idx].mul_by(psi_prime_power_u128(p as u128, e));
            m += p;
        }
    }

    let mut out = Vec::with_capacity(len);
    for idx in 0..len {
        let n = lo + idx as u64;
        let q = rem[idx];
        if q > 1 {
            // No factor ≤ √(hi−1) remains, so q is a prime appearing once:
            // ψ(C_q) = q² − q + 1.
            let q = q as u128;
            val[idx].mul_by(q * q - q + 1);
        }
        let psi = val[idx].to_u128();
        let n_sq = n as u128 * n as u128;
        let g = gcd_u128(psi, n_sq);
        out.push(SieveRecord {
            n,
            psi,
            key_num: psi / g,
            key_den: n_sq / g,
        });
    }
    out
}

fn check_sieve_bounds(n_max: u64) -> Result<()> {
    if n_max < 2 {
        return Err(Error::domain("sieve bound must be at least 2"));
    }
    if n_max > MAX_SIEVE_N {
        return Err(Error::resource(format!(
            "sieve bound {n_max} exceeds the supported cap {MAX_SIEVE_N} (u128 overflow guard)"
        )));
    }
    Ok(())
}

/// Records for an arbitrary window [lo, hi), 2 ≤ lo < hi ≤ cap+1.
/// Chooses the u64/u128 value path from the window's upper end.
pub fn psi_sieve_range(lo: u64, hi: u64) -> Result<Vec<SieveRecord>> {
    if lo < 2 || hi <= lo {
        return Err(Error::domain(format!("invalid sieve window [{lo}, {hi})")));
    }
    check_sieve_bounds(hi - 1)?;
    let base = primes_up_to((hi - 1).isqrt());
    if hi - 1 <= FAST_PATH_MAX_N {
        Ok(sieve_segment::<u64>(lo, hi, &base))
    } else {
        Ok(sieve_segment::<u128>(lo, hi, &base))
    }
}

/// Streaming iterator over SieveRecords for n = 2..=n_max, in order.
pub fn sieve_psi_cyclic(n_max: u64) -> Result<PsiSieveIter> {
    check_sieve_bounds(n_max)?;
    Ok(PsiSieveIter {
        base: primes_up_to(n_max.isqrt()),
        n_max,
        seg_len: DEFAULT_SEGMENT_LEN,
        next_lo: 2,
        buf: Vec::new().into_iter(),
    })
}

pub struct PsiSieveIter {
    base: Vec<u64>,
    n_max: u64,
    seg_len: u64,
    next_lo: u64,
    buf: std::vec::IntoIter<SieveRecord>,
}

impl Iterator for PsiSieveIter {
    type Item = SieveRecord;

    fn next(&mut self) -> Option<SieveRecord> {
        loop {
            if let Some(rec) = self.buf.next() {
                return Some(rec);
            }
            if self.next_lo > self.n_max {
                return None;
            }
            let hi = (self.next_lo + self.seg_len).min(self.n_max + 1);
            let records = if self.n_max <= FAST_PATH_MAX_N {
                sieve_segment::<u64>(self.next_lo, hi, &self.base)
            } else {
                sieve_segment::<u128>(self.next_lo, hi, &self.base)
            };
            self.next_lo = hi;
            self.buf = records.into_iter();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionMode {
    ExactMap,
    SortMerge,
}

impl fmt::Display for CollisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollisionMode::ExactMap => write!(f, "exact-map"),
            CollisionMode::SortMerge => write!(f, "sort-merge"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CollisionConfig {
    pub mode: CollisionMode,
    pub segment_len: u64,
    /// Worker threads for segment sieving; None uses the rayon default.
    pub threads: Option<usize>,
    /// Enables checkpointing (forces sort-merge: resumability needs the
    /// records on disk).
    pub checkpoint_dir: Option<PathBuf>,
    pub resume: bool,
    /// Exact-map mode spills to sorted on-disk runs past this many keys.
    pub spill_threshold: u64,
    /// Records per sorted run in sort-merge mode.
    pub run_len: u64,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self {
            mode: CollisionMode::ExactMap,
            segment_len: DEFAULT_SEGMENT_LEN,
            threads: None,
            checkpoint_dir: None,
            resume: false,
            spill_threshold: 64 << 20,
            run_len: 8 << 20,
        }
    }
}

/// A verified colliding pair m < n with the shared reduced key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollisionPair {
    pub m: u64,
    pub n: u64,
    pub key: ExactRatio,
}

#[derive(Clone, Debug)]
pub struct CollisionReport {
    pub n_max: u64,
    pub mode: CollisionMode,
    pub collisions: Vec<CollisionPair>,
    pub records_scanned: u64,
    pub elapsed_seconds: f64,
    pub resumed: bool,
}

impl CollisionReport {
    /// Stable JSON summary; timing and other machine-dependent fields are
    /// confined to the "meta" object.
    pub fn to_json(&self) -> Value {
        json!({
            "n_max": self.n_max,
            "mode": self.mode,
            "collision_count": self.collisions.len(),
            "collisions": self.collisions,
            "meta": {
                "elapsed_seconds": self.elapsed_seconds,
                "records_scanned": self.records_scanned,
                "resumed": self.resumed,
            },
        })
    }

    /// CSV pair list: one `m,n,num,den` line per collision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,num,den\n");
        for pair in &self.collisions {
            out.push_str(&format!(
                "{},{},{},{}\n",
                pair.m,
                pair.n,
                pair.key.numer(),
                pair.key.denom()
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Collision detection sinks
// ---------------------------------------------------------------------------

type Key = (u128, u128);

/// In-memory exact-map detector. Keeps the first n per key; later hits go
/// to a duplicate list. Spills everything into a sorted-run store if the
/// key count passes the configured threshold.
struct MapSink {
    map: HashMap<Key, u64>,
    dups: Vec<(Key, u64)>,
}

impl MapSink {
    fn new() -> Self {
        Self {
            map: HashMap::new(),
            dups: Vec::new(),
        }
    }

    fn push(&mut self, rec: &SieveRecord) {
        let key = (rec.key_num, rec.key_den);
        if let Some(_first) = self.map.get(&key) {
            self.dups.push((key, rec.n));
        } else {
            self.map.insert(key, rec.n);
        }
    }

    fn finish(self) -> Vec<CollisionPair> {
        let mut groups: HashMap<Key, Vec<u64>> = HashMap::new();
        for (key, n) in self.dups {
            groups
                .entry(key)
                .or_insert_with(|| vec![self.map[&key]])
                .push(n);
        }
        let mut pairs = Vec::new();
        for (key, mut ns) in groups {
            ns.sort_unstable();
            emit_pairs(&key, &ns, &mut pairs);
        }
        pairs.sort_unstable_by_key(|p| (p.m, p.n));
        pairs
    }
}

fn emit_pairs(key: &Key, ns: &[u64], out: &mut Vec<CollisionPair>) {
    for i in 0..ns.len() {
        for j in i + 1..ns.len() {
            out.push(CollisionPair {
                m: ns[i],
                n: ns[j],
                key: ExactRatio::from_u128(key.0, key.1).expect("positive denominator"),
            });
        }
    }
}

const RUN_MAGIC: &[u8; 8] = b"SOERUN1\0";
const RUN_RECORD_BYTES: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq)]
struct RunMeta {
    file_name: String,
    records: u64,
}

/// Sorted-run store for the external-memory path: fixed-width binary runs,
/// each sorted by (key, n), merged with a k-way heap at the end.
struct RunStore {
    dir: PathBuf,
    _owned: Option<tempfile::TempDir>,
    runs: Vec<RunMeta>,
    buf: Vec<(Key, u64)>,
    run_len: usize,
}

impl RunStore {
    fn in_dir(dir: PathBuf, run_len: usize) -> Self {
        Self {
            dir,
            _owned: None,
            runs: Vec::new(),
            buf: Vec::new(),
            run_len: run_len.max(1),
        }
    }

    fn in_temp(run_len: usize) -> Result<Self> {
        let tmp = tempfile::tempdir()?;
        Ok(Self {
            dir: tmp.path().to_path_buf(),
            _owned: Some(tmp),
            runs: Vec::new(),
            buf: Vec::new(),
            run_len: run_len.max(1),
        })
    }

    fn push(&mut self, rec: &SieveRecord) -> Result<()> {
        self.buf.push(((rec.key_num, rec.key_den), rec.n));
        if self.buf.len() >= self.run_len {
            self.flush_run()?;
        }
        Ok(())
    }

    fn flush_run(&mut self) -> Result<()> {
        if self.buf.is_empty() {
            return Ok(());
        }
        self.buf.sort_unstable();
        let file_name = format!("run_{:06}.bin", self.runs.len());
        let path = self.dir.join(&file_name);
        write_run_file(&path, &self.buf)
            .map_err(|e| Error::Checkpoint(format!("cannot write run {file_name}: {e}")))?;
        self.runs.push(RunMeta {
            file_name,
            records: self.buf.len() as u64,
        });
        self.buf.clear();
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<CollisionPair>> {
        self.flush_run()?;
        let mut readers = Vec::with_capacity(self.runs.len());
        for meta in &self.runs {
            readers.push(RunReader::open(&self.dir.join(&meta.file_name), meta.records)?);
        }
        merge_runs(readers)
    }
}

fn write_run_file(path: &Path, records: &[(Key, u64)]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(RUN_MAGIC)?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for &((num, den), n) in records {
        w.write_all(&num.to_le_bytes())?;
        w.write_all(&den.to_le_bytes())?;
        w.write_all(&n.to_le_bytes())?;
    }
    w.flush()
}

/// Decode a whole run file; the entry point the fuzz target drives.
pub fn parse_run_bytes(bytes: &[u8]) -> Result<Vec<SieveRecord>> {
    if bytes.len() < 16 || &bytes[..8] != RUN_MAGIC {
        return Err(Error::parse("bad run file magic"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[16..];
    let expected = (count as usize).checked_mul(RUN_RECORD_BYTES);
    if expected != Some(body.len()) {
        return Err(Error::parse(format!(
            "run file length mismatch: header says {count} records, body has {} bytes",
            body.len()
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    for chunk in body.chunks_exact(RUN_RECORD_BYTES) {
        let key_num = u128::from_le_bytes(chunk[0..16].try_into().unwrap());
        let key_den = u128::from_le_bytes(chunk[16..32].try_into().unwrap());
        let n = u64::from_le_bytes(chunk[32..40].try_into().unwrap());
        if key_den == 0 {
            return Err(Error::parse("run record with zero denominator"));
        }
        out.push(SieveRecord {
            n,
            psi: 0, // ψ is not stored in runs; keys are what collide
            key_num,
            key_den,
        });
    }
    Ok(out)
}

struct RunReader {
    reader: BufReader<File>,
    remaining: u64,
}

impl RunReader {
    fn open(path: &Path, expected_records: u64) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Checkpoint(format!("cannot open run {}: {e}", path.display())))?;
        let mut reader = BufReader::new(file);
        let mut header = [0u8; 16];
        reader
            .read_exact(&mut header)
            .map_err(|e| Error::Checkpoint(format!("short run header: {e}")))?;
        if &header[..8] != RUN_MAGIC {
            return Err(Error::Checkpoint(format!(
                "bad run magic in {}",
                path.display()
            )));
        }
        let count = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if count != expected_records {
            return Err(Error::Checkpoint(format!(
                "run {} has {count} records, manifest says {expected_records}",
                path.display()
            )));
        }
        Ok(Self {
            reader,
            remaining: count,
        })
    }

    fn next(&mut self) -> Result<Option<(Key, u64)>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let mut rec = [0u8; RUN_RECORD_BYTES];
        self.reader
            .read_exact(&mut rec)
            .map_err(|e| Error::Checkpoint(format!("short run record: {e}")))?;
        self.remaining -= 1;
        let num = u128::from_le_bytes(rec[0..16].try_into().unwrap());
        let den = u128::from_le_bytes(rec[16..32].try_into().unwrap());
        let n = u64::from_le_bytes(rec[32..40].try_into().unwrap());
        Ok(Some(((num, den), n)))
    }
}

fn merge_runs(mut readers: Vec<RunReader>) -> Result<Vec<CollisionPair>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut heap: BinaryHeap<Reverse<(Key, u64, usize)>> = BinaryHeap::new();
    for (idx, r) in readers.iter_mut().enumerate() {
        if let Some((key, n)) = r.next()? {
            heap.push(Reverse((key, n, idx)));
        }
    }

    let mut pairs = Vec::new();
    let mut current: Option<(Key, Vec<u64>)> = None;
    while let Some(Reverse((key, n, idx))) = heap.pop() {
        match &mut current {
            Some((k, ns)) if *k == key => ns.push(n),
            _ => {
                if let Some((k, ns)) = current.take() {
                    if ns.len() > 1 {
                        emit_pairs(&k, &ns, &mut pairs);
                    }
                }
                current = Some((key, vec![n]));
            }
        }
        if let Some(next) = readers[idx].next()? {
            heap.push(Reverse((next.0, next.1, idx)));
        }
    }
    if let Some((k, ns)) = current {
        if ns.len() > 1 {
            emit_pairs(&k, &ns, &mut pairs);
        }
    }
    pairs.sort_unstable_by_key(|p| (p.m, p.n));
    Ok(pairs)
}

enum Sink {
    Map(MapSink, u64),
    Runs(RunStore),
}

impl Sink {
    fn push(&mut self, rec: &SieveRecord, run_len: usize) -> Result<()> {
        match self {
            Sink::Map(map, spill_threshold) => {
                map.push(rec);
                if map.map.len() as u64 > *spill_threshold {
                    // Spill: rebuild the state as sorted runs and continue
                    // in external-memory mode.
                    let mut store = RunStore::in_temp(run_len)?;
                    let old = std::mem::replace(map, MapSink::new());
                    for (key, n) in old.map {
                        store.buf.push((key, n));
                        if store.buf.len() >= store.run_len {
                            store.flush_run()?;
                        }
                    }
                    for (key, n) in old.dups {
                        store.buf.push((key, n));
                        if store.buf.len() >= store.run_len {
                            store.flush_run()?;
                        }
                    }
                    *self = Sink::Runs(store);
                }
                Ok(())
            }
            Sink::Runs(store) => store.push(rec),
        }
    }

    fn finish(self) -> Result<Vec<CollisionPair>> {
        match self {
            Sink::Map(map, _) => Ok(map.finish()),
            Sink::Runs(store) => store.finish(),
        }
    }
}

/// Collision detection over an arbitrary record stream — used directly by
/// the harness self-test with injected duplicates, and by
/// [`find_collisions`] with sieve output.
pub fn detect_collisions<I>(records: I, mode: CollisionMode) -> Result<Vec<CollisionPair>>
where
    I: IntoIterator<Item = SieveRecord>,
{
    let config = CollisionConfig {
        mode,
        ..CollisionConfig::default()
    };
    let mut sink = make_sink(&config, None)?;
    for rec in records {
        sink.push(&rec, config.run_len as usize)?;
    }
    sink.finish()
}

fn make_sink(config: &CollisionConfig, dir: Option<PathBuf>) -> Result<Sink> {
    match config.mode {
        CollisionMode::ExactMap => Ok(Sink::Map(MapSink::new(), config.spill_threshold)),
        CollisionMode::SortMerge => match dir {
            Some(d) => Ok(Sink::Runs(RunStore::in_dir(d, config.run_len as usize))),
            None => Ok(Sink::Runs(RunStore::in_temp(config.run_len as usize)?)),
        },
    }
}

// ---------------------------------------------------------------------------
// Checkpoint manifest
// ---------------------------------------------------------------------------

pub const MANIFEST_FILE: &str = "manifest.txt";
const MANIFEST_HEADER: &str = "soe-collision-checkpoint v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointManifest {
    pub n_max: u64,
    pub segment_len: u64,
    /// Last n (inclusive) whose record has been flushed to a run.
    pub completed_through: u64,
    pub runs: Vec<(String, u64)>,
}

impl CheckpointManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MANIFEST_HEADER);
        out.push('\n');
        out.push_str(&format!("n_max {}\n", self.n_max));
        out.push_str(&format!("segment_len {}\n", self.segment_len));
        out.push_str(&format!("completed_through {}\n", self.completed_through));
        out.push_str(&format!("runs {}\n", self.runs.len()));
        for (i, (name, records)) in self.runs.iter().enumerate() {
            out.push_str(&format!("run {i} {name} {records}\n"));
        }
        out.push_str("end\n");
        out
    }
}

/// Parse a checkpoint manifest. Strict: exact header, fixed key order,
/// declared run count, and a final `end` sentinel against truncation.
pub fn parse_checkpoint_manifest(text: &str) -> Result<CheckpointManifest> {
    let mut lines = text.lines();
    let bad = |msg: &str| Error::parse(format!("checkpoint manifest: {msg}"));
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(bad("missing or unsupported version header"));
    }
    let mut field = |name: &str| -> Result<u64> {
        let line = lines.next().ok_or_else(|| bad("truncated"))?;
        let rest = line
            .strip_prefix(name)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| bad(&format!("expected `{name} <value>`")))?;
        rest.parse::<u64>()
            .map_err(|_| bad(&format!("invalid integer in `{name}` line")))
    };
    let n_max = field("n_max")?;
    let segment_len = field("segment_len")?;
    let completed_through = field("completed_through")?;
    let run_count = field("runs")?;
    if run_count > 1 << 32 {
        return Err(bad("implausible run count"));
    }
    let mut runs = Vec::with_capacity(run_count.min(1024) as usize);
    for i in 0..run_count {
        let line = lines.next().ok_or_else(|| bad("truncated run list"))?;
        let mut parts = line.split(' ');
        if parts.next() != Some("run") {
            return Err(bad("expected `run` line"));
        }
        let idx: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad run index"))?;
        if idx != i {
            return Err(bad("run indices out of order"));
        }
        let name = parts.next().ok_or_else(|| bad("missing run file name"))?;
        if name.contains(['/', '\\']) || name == ".." {
            return Err(bad("run file name must be a plain file name"));
        }
        let records: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad run record count"))?;
        if parts.next().is_some() {
            return Err(bad("trailing tokens on run line"));
        }
        runs.push((name.to_string(), records));
    }
    if lines.next() != Some("end") {
        return Err(bad("missing end sentinel"));
    }
    if lines.next().is_some() {
        return Err(bad("trailing content after end sentinel"));
    }
    if segment_len == 0 {
        return Err(bad("segment_len must be positive"));
    }
    Ok(CheckpointManifest {
        n_max,
        segment_len,
        completed_through,
        runs,
    })
}

fn write_manifest(dir: &Path, manifest: &CheckpointManifest) -> Result<()> {
    let tmp = dir.join("manifest.tmp");
    let final_path = dir.join(MANIFEST_FILE);
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(manifest.to_text().as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &final_path)
    };
    write().map_err(|e| {
        Error::Checkpoint(format!(
            "cannot write checkpoint manifest in {}: {e} (previous checkpoint left intact)",
            dir.display()
        ))
    })
}

// ---------------------------------------------------------------------------
// The search itself
// ---------------------------------------------------------------------------

/// Exhaustive collision search over ψ''(C_n) for 2 ≤ n ≤ n_max.
///
/// Both modes produce the identical, deterministic report; they differ
/// only in memory strategy. With a checkpoint directory the search
/// writes one sorted run per segment plus a manifest after each segment,
/// and `resume` continues an interrupted search from the last completed
/// segment.
pub fn find_collisions(n_max: u64, config: &CollisionConfig) -> Result<CollisionReport> {
    check_sieve_bounds(n_max)?;
    if config.segment_len == 0 {
        return Err(Error::domain("segment_len must be positive"));
    }
    let started = Instant::now();

    // Checkpointing requires the external-memory representation.
    let mode = if config.checkpoint_dir.is_some() {
        CollisionMode::SortMerge
    } else {
        config.mode
    };

    let mut start_n = 2u64;
    let mut resumed = false;
    let mut sink = match &config.checkpoint_dir {
        None => make_sink(&CollisionConfig { mode, ..config.clone() }, None)?,
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let manifest_path = dir.join(MANIFEST_FILE);
            if config.resume && manifest_path.exists() {
                let text = fs::read_to_string(&manifest_path)
                    .map_err(|e| Error::Checkpoint(format!("cannot read manifest: {e}")))?;
                let manifest = parse_checkpoint_manifest(&text)?;
                if manifest.n_max != n_max || manifest.segment_len != config.segment_len {
                    return Err(Error::Checkpoint(format!(
                        "checkpoint was taken with n_max {} / segment_len {}, \
                         requested {} / {}",
                        manifest.n_max, manifest.segment_len, n_max, config.segment_len
                    )));
                }
                let mut store = RunStore::in_dir(dir.clone(), config.run_len as usize);
                for (name, records) in &manifest.runs {
                    // Validate headers up front so a damaged run fails now,
                    // not mid-merge.
                    RunReader::open(&dir.join(name), *records)?;
                    store.runs.push(RunMeta {
                        file_name: name.clone(),
                        records: *records,
                    });
                }
                start_n = manifest.completed_through + 1;
                resumed = true;
                Sink::Runs(store)
            } else if manifest_path.exists() {
                return Err(Error::Checkpoint(format!(
                    "{} already exists; pass resume=true to continue or remove it",
                    manifest_path.display()
                )));
            } else {
                make_sink(
                    &CollisionConfig { mode, ..config.clone() },
                    Some(dir.clone()),
                )?
            }
        }
    };

    let base = primes_up_to(n_max.isqrt());
    let fast = n_max <= FAST_PATH_MAX_N;
    let run_len = config.run_len as usize;
    let mut records_scanned = start_n - 2;

    let segments: Vec<(u64, u64)> = {
        let mut v = Vec::new();
        let mut lo = start_n;
        while lo <= n_max {
            let hi = (lo + config.segment_len).min(n_max + 1);
            v.push((lo, hi));
            lo = hi;
        }
        v
    };

    let batch = config.threads.unwrap_or_else(rayon::current_num_threads).max(1);
    let run_batch = |chunk: &[(u64, u64)]| -> Vec<Vec<SieveRecord>> {
        use rayon::prelude::*;
        chunk
            .par_iter()
            .map(|&(lo, hi)| {
                if fast {
                    sieve_segment::<u64>(lo, hi, &base)
                } else {
                    sieve_segment::<u128>(lo, hi, &base)
                }
            })
            .collect()
    };

    let pool = match config.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::resource(format!("cannot build thread pool: {e}")))?,
        ),
        None => None,
    };

    for chunk in segments.chunks(batch) {
        let batch_records = match &pool {
            Some(p) => p.install(|| run_batch(chunk)),
            None => run_batch(chunk),
        };
        for (records, &(_lo, hi)) in batch_records.iter().zip(chunk) {
            for rec in records {
                sink.push(rec, run_len)?;
            }
            records_scanned += records.len() as u64;
            if let (Sink::Runs(store), Some(dir)) = (&mut sink, &config.checkpoint_dir) {
                store.flush_run()?;
                let manifest = CheckpointManifest {
                    n_max,
                    segment_len: config.segment_len,
                    completed_through: hi - 1,
                    runs: store
                        .runs
                        .iter()
                        .map(|r| (r.file_name.clone(), r.records))
                        .collect(),
                };
                write_manifest(dir, &manifest)?;
            }
        }
    }

    let collisions = sink.finish()?;
    verify_pairs(&collisions);

    Ok(CollisionReport {
        n_max,
        mode,
        collisions,
        records_scanned,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        resumed,
    })
}

/// Cross-check every reported pair in arbitrary precision through the
/// factorization route: ψ(C_m)·n² must equal ψ(C_n)·m². A failure here
/// is a sieve bug, never user input.
fn verify_pairs(pairs: &[CollisionPair]) {
    for pair in pairs {
        let psi_m = psi_cyclic(&factorize_u64(pair.m, None).expect("m ≥ 2"));
        let psi_n = psi_cyclic(&factorize_u64(pair.n, None).expect("n ≥ 2"));
        let m = Natural::from(pair.m);
        let n = Natural::from(pair.n);
        assert_eq!(
            psi_m * &n * &n,
            psi_n * &m * &m,
            "reported pair ({}, {}) fails the exact cross-check",
            pair.m,
            pair.n
        );
    }
}

// ---------------------------------------------------------------------------
// Key index for preimage queries
// ---------------------------------------------------------------------------

/// Exhaustive key → {n} index over a sieve snapshot, built once and
/// shared by many preimage queries (read-only afterwards).
pub struct PsiKeyIndex {
    n_max: u64,
    map: HashMap<Key, KeyHits>,
}

enum KeyHits {
    One(u64),
    Many(Vec<u64>),
}

impl PsiKeyIndex {
    pub fn build(n_max: u64) -> Result<Self> {
        let mut map: HashMap<Key, KeyHits> = HashMap::new();
        for rec in sieve_psi_cyclic(n_max)? {
            let key = (rec.key_num, rec.key_den);
            map.entry(key)
                .and_modify(|hits| match hits {
                    KeyHits::One(first) => *hits = KeyHits::Many(vec![*first, rec.n]),
                    KeyHits::Many(v) => v.push(rec.n),
                })
                .or_insert(KeyHits::One(rec.n));
        }
        Ok(Self { n_max, map })
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// All n ≤ n_max with ψ''(C_n) = q, in increasing order.
    pub fn lookup(&self, q: &ExactRatio) -> Vec<u64> {
        let num: u128 = match q.numer().try_into() {
            Ok(v) => v,
            Err(_) => return Vec::new(), // keys are bounded by n_max² < 2^128
        };
        let den: u128 = match q.denom().try_into() {
            Ok(v) => v,
            Err(_) => return Vec::new(),
        };
        match self.map.get(&(num, den)) {
            None => Vec::new(),
            Some(KeyHits::One(n)) => vec![*n],
            Some(KeyHits::Many(v)) => {
                let mut out = v.clone();
                out.sort_unstable();
                out
            }
        }
    }

    pub fn distinct_keys(&self) -> usize {
        self.map.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_for(n: u64) -> SieveRecord {
        psi_sieve_range(n, n + 1).unwrap().remove(0)
    }

    #[test]
    fn named_records() {
        let r2 = record_for(2);
        assert_eq!(r2.psi, 3);
        assert_eq!((r2.key_num, r2.key_den), (3, 4));
        let r4 = record_for(4);
        assert_eq!(r4.psi, 11);
        assert_eq!((r4.key_num, r4.key_den), (11, 16));
        let r6 = record_for(6);
        assert_eq!(r6.psi, 21);
        assert_eq!((r6.key_num, r6.key_den), (7, 12));
    }

    #[test]
    fn sieve_agrees_with_factorization_route() {
        let records: Vec<SieveRecord> = sieve_psi_cyclic(3_000).unwrap().collect();
        assert_eq!(records.len(), 2_999);
        for rec in &records {
            let expect = psi_cyclic(&factorize_u64(rec.n, None).unwrap());
            assert_eq!(Natural::from(rec.psi), expect, "ψ(C_{})", rec.n);
            let key = rec.key();
            assert_eq!(
                key,
                ExactRatio::new(expect, Natural::from(rec.n) * Natural::from(rec.n)).unwrap()
            );
        }
    }

    #[test]
    fn segment_boundaries_are_seamless() {
        // Same records whether sieved in one window or two.
        let whole = psi_sieve_range(2, 2_002).unwrap();
        let left = psi_sieve_range(2, 1_000).unwrap();
        let right = psi_sieve_range(1_000, 2_002).unwrap();
        let stitched: Vec<SieveRecord> = left.into_iter().chain(right).collect();
        assert_eq!(whole, stitched);
    }

    #[test]
    fn wide_path_matches_fast_path_at_the_boundary() {
        // Window straddling 2^32: the u64 fast path is valid below, the
        // u128 path everywhere; both must agree with big-integer evaluation.
        let lo = FAST_PATH_MAX_N - 4;
        let hi = FAST_PATH_MAX_N + 5;
        let base = primes_up_to((hi - 1).isqrt());
        let wide = sieve_segment::<u128>(lo, hi, &base);
        let fast = sieve_segment::<u64>(lo, FAST_PATH_MAX_N + 1, &base);
        for (w, f) in wide.iter().zip(&fast) {
            assert_eq!(w, f, "paths disagree at n = {}", w.n);
        }
        for rec in &wide {
            let expect = psi_cyclic(&factorize_u64(rec.n, None).unwrap());
            assert_eq!(Natural::from(rec.psi), expect, "ψ(C_{})", rec.n);
        }
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(matches!(find_collisions(1, &CollisionConfig::default()), Err(Error::Domain(_))));
        assert!(matches!(
            find_collisions(MAX_SIEVE_N + 1, &CollisionConfig::default()),
            Err(Error::Resource(_))
        ));
        assert!(sieve_psi_cyclic(1).is_err());
        assert!(psi_sieve_range(1, 10).is_err());
        assert!(psi_sieve_range(10, 10).is_err());
    }

    #[test]
    fn no_collisions_below_ten_thousand() {
        let report = find_collisions(10_000, &CollisionConfig::default()).unwrap();
        assert!(report.collisions.is_empty());
        assert_eq!(report.records_scanned, 9_999);
        assert_eq!(report.mode, CollisionMode::ExactMap);
    }

    #[test]
    fn modes_produce_identical_reports() {
        let map = find_collisions(20_000, &CollisionConfig::default()).unwrap();
        let merge = find_collisions(
            20_000,
            &CollisionConfig {
                mode: CollisionMode::SortMerge,
                run_len: 1_000, // force many runs
                ..CollisionConfig::default()
            },
        )
        .unwrap();
        assert_eq!(map.collisions, merge.collisions);
        assert_eq!(map.records_scanned, merge.records_scanned);
    }

    #[test]
    fn injected_duplicate_is_reported_exactly_once() {
        // Harness self-test: a synthetic duplicate key must surface as
        // exactly that pair, in both modes.
        let mut records: Vec<SieveRecord> = sieve_psi_cyclic(500).unwrap().collect();
        let mut fake = record_for(321);
        fake.n = 417; // pretend ψ''(C_417) collides with ψ''(C_321)
        records.push(fake);
        for mode in [CollisionMode::ExactMap, CollisionMode::SortMerge] {
            let pairs = detect_collisions(records.iter().copied(), mode).unwrap();
            assert_eq!(pairs.len(), 1, "{mode}");
            assert_eq!((pairs[0].m, pairs[0].n), (321, 417));
            assert_eq!(pairs[0].key, record_for(321).key());
        }
    }

    #[test]
    fn triple_collision_emits_all_three_pairs() {
        let mut records = vec![record_for(100)];
        for fake_n in [200, 300] {
            let mut fake = record_for(100);
            fake.n = fake_n;
            records.push(fake);
        }
        for mode in [CollisionMode::ExactMap, CollisionMode::SortMerge] {
            let pairs = detect_collisions(records.iter().copied(), mode).unwrap();
            let got: Vec<(u64, u64)> = pairs.iter().map(|p| (p.m, p.n)).collect();
            assert_eq!(got, vec![(100, 200), (100, 300), (200, 300)], "{mode}");
        }
    }

    #[test]
    fn spill_threshold_transitions_to_runs() {
        let config = CollisionConfig {
            spill_threshold: 100,
            run_len: 64,
            ..CollisionConfig::default()
        };
        let report = find_collisions(5_000, &config).unwrap();
        assert!(report.collisions.is_empty());
        let baseline = find_collisions(5_000, &CollisionConfig::default()).unwrap();
        assert_eq!(report.collisions, baseline.collisions);
    }

    #[test]
    fn checkpoint_resume_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let config = CollisionConfig {
            segment_len: 1_000,
            checkpoint_dir: Some(dir.path().to_path_buf()),
            ..CollisionConfig::default()
        };
        let full = find_collisions(7_337, &config).unwrap();
        assert_eq!(full.mode, CollisionMode::SortMerge);

        // The manifest on disk reflects the completed search.
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let manifest = parse_checkpoint_manifest(&text).unwrap();
        assert_eq!(manifest.n_max, 7_337);
        assert_eq!(manifest.completed_through, 7_337);

        // Simulate an interruption: rewrite the manifest as if only the
        // first four segments had completed, then resume.
        let truncated = CheckpointManifest {
            runs: manifest.runs[..4].to_vec(),
            completed_through: 2 + 4 * 1_000 - 1,
            ..manifest.clone()
        };
        fs::write(dir.path().join(MANIFEST_FILE), truncated.to_text()).unwrap();
        for (name, _) in &manifest.runs[4..] {
            fs::remove_file(dir.path().join(name)).unwrap();
        }
        let resumed = find_collisions(
            7_337,
            &CollisionConfig {
                resume: true,
                ..config.clone()
            },
        )
        .unwrap();
        assert!(resumed.resumed);
        assert_eq!(resumed.collisions, full.collisions);
        assert_eq!(resumed.records_scanned, full.records_scanned);

        // Mismatched parameters are refused.
        let err = find_collisions(
            9_999,
            &CollisionConfig {
                resume: true,
                ..config.clone()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)));

        // An existing checkpoint without resume=true is refused.
        let err = find_collisions(7_337, &config).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)));
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let baseline = find_collisions(50_000, &CollisionConfig::default()).unwrap();
        for threads in [1usize, 2, 4] {
            let config = CollisionConfig {
                threads: Some(threads),
                segment_len: 4_096,
                ..CollisionConfig::default()
            };
            let report = find_collisions(50_000, &config).unwrap();
            assert_eq!(report.collisions, baseline.collisions, "threads = {threads}");
            assert_eq!(report.records_scanned, baseline.records_scanned);
        }
    }

    #[test]
    fn checkpoint_write_failure_preserves_previous_state() {
        let dir = tempfile::tempdir().unwrap();
        let config = CollisionConfig {
            segment_len: 1_000,
            checkpoint_dir: Some(dir.path().to_path_buf()),
            ..CollisionConfig::default()
        };
        // Complete a run, then rewind the manifest to look interrupted
        // after two segments.
        let full = find_collisions(5_500, &config).unwrap();
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let manifest = parse_checkpoint_manifest(&text).unwrap();
        let rewound = CheckpointManifest {
            runs: manifest.runs[..2].to_vec(),
            completed_through: 2 + 2 * 1_000 - 1,
            ..manifest
        };
        fs::write(dir.path().join(MANIFEST_FILE), rewound.to_text()).unwrap();
        let manifest_before = rewound.to_text();

        // Sabotage the manifest tmp path: File::create fails against a
        // directory, so the first post-segment checkpoint write aborts.
        fs::create_dir(dir.path().join("manifest.tmp")).unwrap();
        let err = find_collisions(
            5_500,
            &CollisionConfig {
                resume: true,
                ..config.clone()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)), "{err}");

        // The interrupted-state manifest is untouched and still parses.
        let manifest_after = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest_before, manifest_after);

        // Remove the blocker: the search resumes to the full result.
        fs::remove_dir(dir.path().join("manifest.tmp")).unwrap();
        let resumed = find_collisions(
            5_500,
            &CollisionConfig {
                resume: true,
                ..config
            },
        )
        .unwrap();
        assert!(resumed.resumed);
        assert_eq!(resumed.collisions, full.collisions);
        assert_eq!(resumed.records_scanned, full.records_scanned);
    }

    #[test]
    fn manifest_parser_rejects_damage() {
        let good = CheckpointManifest {
            n_max: 100,
            segment_len: 10,
            completed_through: 41,
            runs: vec![("run_000000.bin".into(), 40u64)],
        }
        .to_text();
        assert!(parse_checkpoint_manifest(&good).is_ok());

        let cases = [
            "".to_string(),
            "bogus header\n".to_string(),
            good.replace("end\n", ""),                       // truncated
            good.replace("run 0 ", "run 1 "),                // index gap
            good.replace("n_max 100", "n_max ten"),          // bad integer
            good.replace("run_000000.bin", "../escape.bin"), // path traversal
            format!("{good}garbage\n"),                      // trailing junk
            good.replace("segment_len 10", "segment_len 0"),
        ];
        for text in &cases {
            assert!(
                parse_checkpoint_manifest(text).is_err(),
                "accepted:\n{text}"
            );
        }
    }

    #[test]
    fn run_file_round_trip_and_rejection() {
        let records: Vec<(Key, u64)> = vec![((3, 4), 2), ((7, 12), 6), ((11, 16), 4)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.bin");
        write_run_file(&path, &records).unwrap();
        let bytes = fs::read(&path).unwrap();
        let parsed = parse_run_bytes(&bytes).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!((parsed[1].key_num, parsed[1].key_den, parsed[1].n), (7, 12, 6));

        assert!(parse_run_bytes(b"short").is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] ^= 0xff;
        assert!(parse_run_bytes(&bad_magic).is_err());
        let mut bad_len = bytes.clone();
        bad_len.truncate(bytes.len() - 1);
        assert!(parse_run_bytes(&bad_len).is_err());
    }

    #[test]
    fn key_index_lookups() {
        let index = PsiKeyIndex::build(10_000).unwrap();
        assert_eq!(index.lookup(&ExactRatio::from_u64(7, 12).unwrap()), vec![6]);
        assert_eq!(index.lookup(&ExactRatio::from_u64(3, 4).unwrap()), vec![2]);
        assert_eq!(index.lookup(&ExactRatio::from_u64(79, 729).unwrap()), Vec::<u64>::new());
        assert_eq!(index.distinct_keys(), 9_999); // no collisions below 10^4
        let huge = ExactRatio::new(Natural::from(1u32), Natural::from(u128::MAX) * 2u32).unwrap();
        assert_eq!(index.lookup(&huge), Vec::<u64>::new());
    }

    #[test]
    fn psi_double_prime_three_quarters_only_at_two() {
        let mut hits = Vec::new();
        for rec in sieve_psi_cyclic(50_000).unwrap() {
            if rec.key_num == 3 && rec.key_den == 4 {
                hits.push(rec.n);
            }
        }
        assert_eq!(hits, vec![2]);
    }

    #[test]
    fn report_json_shape() {
        let report = find_collisions(100, &CollisionConfig::default()).unwrap();
        let v = report.to_json();
        assert_eq!(v["n_max"], 100);
        assert_eq!(v["collision_count"], 0);
        assert_eq!(v["mode"], "exact-map");
        assert!(v["meta"]["elapsed_seconds"].is_number());
        assert_eq!(report.to_csv(), "m,n,num,den\n");
    }
}
