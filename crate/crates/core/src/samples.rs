//! Binary sample matrices: N samples over {0,1}^n, bit-packed row-major.
//!
//! Two on-disk formats:
//! - text: header line `N n`, then N lines of n space-separated 0/1 tokens;
//! - packed binary: magic bytes `BPD1`, little-endian u32 N, u32 n, then
//!   row-major bit-packed rows, each row padded to a byte boundary. Bits are
//!   LSB-first within each byte: coordinate j lives in byte j/8, bit j%8.

use crate::error::{Error, Result};
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"BPD1";

/// N×n binary outcome matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMatrix {
    n_samples: usize,
    n_coords: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl SampleMatrix {
    pub fn zeros(n_samples: usize, n_coords: usize) -> Self {
        let words_per_row = n_coords.div_ceil(64).max(1);
        SampleMatrix {
            n_samples,
            n_coords,
            words_per_row,
            bits: vec![0; n_samples * words_per_row],
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.n_samples && col < self.n_coords);
        let w = self.bits[row * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.n_samples && col < self.n_coords);
        let w = &mut self.bits[row * self.words_per_row + col / 64];
        if value {
            *w |= 1 << (col % 64);
        } else {
            *w &= !(1 << (col % 64));
        }
    }

    #[inline]
    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// Visit the set-bit coordinates of one row in increasing order.
    #[inline]
    pub fn for_each_one<F: FnMut(usize)>(&self, row: usize, mut f: F) {
        for (wi, &word) in self.row_words(row).iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                f(wi * 64 + b);
                w &= w - 1;
            }
        }
    }

    pub fn row_ones(&self, row: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_one(row, |j| out.push(j));
        out
    }

    pub fn count_ones_in_row(&self, row: usize) -> usize {
        self.row_words(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Coordinatewise empirical means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.n_coords];
        for i in 0..self.n_samples {
            self.for_each_one(i, |j| counts[j] += 1);
        }
        let n = self.n_samples.max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    /// New matrix keeping the given columns, in order; optionally flipping a
    /// subset of them (given as indices into the original coordinate frame).
    pub fn select_columns(&self, keep: &[usize], flip: &[usize]) -> SampleMatrix {
        let flip_set: std::collections::HashSet<usize> = flip.iter().copied().collect();
        let mut out = SampleMatrix::zeros(self.n_samples, keep.len());
        for i in 0..self.n_samples {
            for (new_j, &old_j) in keep.iter().enumerate() {
                let mut v = self.get(i, old_j);
                if flip_set.contains(&old_j) {
                    v = !v;
                }
                out.set(i, new_j, v);
            }
        }
        out
    }

    pub fn overwrite_row(&mut self, row: usize, values: &[bool]) {
        assert_eq!(values.len(), self.n_coords);
        for (j, &v) in values.iter().enumerate() {
            self.set(row, j, v);
        }
    }

    // ---- text format ----

    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {}", self.n_samples, self.n_coords)?;
        let mut line = String::with_capacity(2 * self.n_coords);
        for i in 0..self.n_samples {
            line.clear();
            for j in 0..self.n_coords {
                if j > 0 {
                    line.push(' ');
                }
                line.push(if self.get(i, j) { '1' } else { '0' });
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<SampleMatrix> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut parts = header.split_whitespace();
        let n_samples: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format("expected header `N n`".into()))?;
        let n_coords: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format("expected header `N n`".into()))?;
        let mut out = SampleMatrix::zeros(n_samples, n_coords);
        let mut line = String::new();
        for i in 0..n_samples {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format(format!("expected {n_samples} rows, got {i}")));
            }
            let mut count = 0;
            for (j, tok) in line.split_whitespace().enumerate() {
                let v = match tok {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::Format(format!("row {i}: invalid token `{other}`")))
                    }
                };
                if j >= n_coords {
                    return Err(Error::Format(format!("row {i}: too many tokens")));
                }
                out.set(i, j, v);
                count += 1;
            }
            if count != n_coords {
                return Err(Error::Format(format!(
                    "row {i}: expected {n_coords} tokens, got {count}"
                )));
            }
        }
        Ok(out)
    }

    // ---- packed binary format ----

    pub fn write_packed<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n_samples as u32).to_le_bytes())?;
        w.write_all(&(self.n_coords as u32).to_le_bytes())?;
        let bytes_per_row = self.n_coords.div_ceil(8);
        let mut buf = vec![0u8; bytes_per_row];
        for i in 0..self.n_samples {
            buf.iter_mut().for_each(|b| *b = 0);
            self.for_each_one(i, |j| buf[j / 8] |= 1 << (j % 8));
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_packed<R: Read>(r: &mut R) -> Result<SampleMatrix> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic; not a BPD1 file".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let n_samples = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let n_coords = u32::from_le_bytes(u32buf) as usize;
        let bytes_per_row = n_coords.div_ceil(8);
        let mut out = SampleMatrix::zeros(n_samples, n_coords);
        let mut buf = vec![0u8; bytes_per_row];
        for i in 0..n_samples {
            r.read_exact(&mut buf)?;
            for j in 0..n_coords {
                if buf[j / 8] >> (j % 8) & 1 == 1 {
                    out.set(i, j, true);
                }
            }
        }
        Ok(out)
    }

    /// Draw `n_samples` i.i.d. rows from the product distribution with the
    /// given coordinate means. Shard k of 2^16 rows uses `seed.child(k)` and
    /// shards are filled in order, so the matrix is reproducible and shards
    /// may be generated in parallel.
    pub fn sample_bernoulli(means: &[f64], n_samples: usize, seed: crate::seeding::Seed) -> SampleMatrix {
        use rand::Rng;
        const SHARD: usize = 1 << 16;
        let mut out = SampleMatrix::zeros(n_samples, means.len());
        let n_shards = n_samples.div_ceil(SHARD);
        for shard in 0..n_shards {
            let start = shard * SHARD;
            let end = ((shard + 1) * SHARD).min(n_samples);
            let mut rng = seed.child(shard as u64).rng();
            for row in start..end {
                for (j, &p) in means.iter().enumerate() {
                    if rng.random::<f64>() < p {
                        out.set(row, j, true);
                    }
                }
            }
        }
        out
    }

    pub fn write_text_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_text(&mut w)
    }

    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<SampleMatrix> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            SampleMatrix::read_packed(&mut &bytes[..])
        } else {
            SampleMatrix::read_text(&mut &bytes[..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arbitrary_matrix() -> impl Strategy<Value = SampleMatrix> {
        (1usize..20, 1usize..70).prop_flat_map(|(rows, cols)| {
            proptest::collection::vec(proptest::bool::ANY, rows * cols).prop_map(
                move |bits| {
                    let mut m = SampleMatrix::zeros(rows, cols);
                    for (idx, b) in bits.into_iter().enumerate() {
                        m.set(idx / cols, idx % cols, b);
                    }
                    m
                },
            )
        })
    }

    proptest! {
        #[test]
        fn roundtrip_both_formats(m in arbitrary_matrix()) {
            let mut text = Vec::new();
            m.write_text(&mut text).unwrap();
            let back = SampleMatrix::read_text(&mut &text[..]).unwrap();
            prop_assert_eq!(&back, &m);

            let mut packed = Vec::new();
            m.write_packed(&mut packed).unwrap();
            let back = SampleMatrix::read_packed(&mut &packed[..]).unwrap();
            prop_assert_eq!(&back, &m);
        }
    }

    #[test]
    fn means_and_ones() {
        let mut m = SampleMatrix::zeros(4, 3);
        m.set(0, 0, true);
        m.set(1, 0, true);
        m.set(1, 2, true);
        assert_eq!(m.column_means(), vec![0.5, 0.0, 0.25]);
        assert_eq!(m.row_ones(1), vec![0, 2]);
        assert_eq!(m.count_ones_in_row(3), 0);
    }
}
