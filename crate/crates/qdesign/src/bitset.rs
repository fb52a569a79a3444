//! Fixed-width bitsets over point indices, used as block fingerprints and
//! for fast set equality in the hot verification loops.

pub fn words_for(v: u32) -> usize {
    (v as usize + 63) / 64
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitBlock {
    words: Vec<u64>,
}

impl BitBlock {
    pub fn empty(v: u32) -> Self {
        BitBlock {
            words: vec![0; words_for(v)],
        }
    }

    pub fn from_words(words: Vec<u64>) -> Self {
        BitBlock { words }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn insert(&mut self, i: u32) {
        self.words[(i >> 6) as usize] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        self.words[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    pub fn len(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Set members in ascending order.
    pub fn members(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len() as usize);
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros();
                out.push((wi as u32) << 6 | b);
                w &= w - 1;
            }
        }
        out
    }
}

pub fn members_of(words: &[u64]) -> Vec<u32> {
    let mut out = Vec::new();
    for (wi, &w) in words.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros();
            out.push((wi as u32) << 6 | b);
            w &= w - 1;
        }
    }
    out
}
