//! Bit-packed vectors and Gaussian elimination over GF(2).

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and_parity(&self, other: &BitVec) -> bool {
        self.words.iter().zip(&other.words).fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Bits at `positions`, in that order.
    pub fn gather(&self, positions: &[usize]) -> BitVec {
        let mut out = BitVec::zeros(positions.len());
        for (k, &p) in positions.iter().enumerate() {
            if self.get(p) {
                out.set(k, true);
            }
        }
        out
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }
}

/// Row-reduce in place and return the rank. Rows past the rank are zero
/// after the call, and the first `rank` rows are in echelon form.
pub fn row_reduce(rows: &mut [BitVec]) -> usize {
    let Some(width) = rows.first().map(|r| r.len()) else {
        return 0;
    };
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_assign(&pivot);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

pub fn rank(rows: &[BitVec]) -> usize {
    row_reduce(&mut rows.to_vec())
}

/// Basis of `{c : Σ c_i rows_i = 0}` as coefficient vectors of length `rows.len()`.
pub fn left_kernel(rows: &[BitVec]) -> Vec<BitVec> {
    let k = rows.len();
    let width = rows.first().map_or(0, |r| r.len());
    let mut aug: Vec<BitVec> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut tag = BitVec::zeros(k);
            tag.set(i, true);
            r.concat(&tag)
        })
        .collect();
    // eliminate only on the original columns
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..k).find(|&r| aug[r].get(col)) else {
            continue;
        };
        aug.swap(rank, p);
        let pivot = aug[rank].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_assign(&pivot);
            }
        }
        rank += 1;
    }
    let tags: Vec<usize> = (width..width + k).collect();
    aug[rank..].iter().map(|r| r.gather(&tags)).collect()
}
