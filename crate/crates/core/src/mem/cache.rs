use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ReplacementPolicy;

/// Picks the victim among fully valid ways: the lowest-indexed way whose
/// not-recently-used bit is set.
///
/// The touch protocol in [`nru_touch`] guarantees at least one set bit.
pub fn nru_victim(nru_bits: &[bool]) -> usize {
    nru_bits.iter().position(|&b| b).unwrap_or(0)
}

/// Clears the bit of the touched way; once every bit in the set would be
/// clear, all other ways are marked not-recently-used again.
pub fn nru_touch(nru_bits: &mut [bool], way: usize) {
    nru_bits[way] = false;
    if nru_bits.iter().all(|&b| !b) {
        for (i, bit) in nru_bits.iter_mut().enumerate() {
            *bit = i != way;
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Line {
    pub tag: u32,
    pub valid: bool,
    pub dirty: bool,
    /// Cycle the burst filling this line started (LLC only).
    pub fill_start: u64,
}

#[derive(Debug, Clone)]
enum Victims {
    Nru,
    Random(Box<ChaCha8Rng>),
}

/// Set-associative block store with data, dirty bits and NRU bits.
/// A direct-mapped cache is the one-way case.
#[derive(Debug, Clone)]
pub(crate) struct Cache {
    sets: u32,
    ways: usize,
    block_bytes: u32,
    block_shift: u32,
    lines: Vec<Line>,
    nru: Vec<bool>,
    data: Vec<u8>,
    victims: Victims,
}

impl Cache {
    pub fn new(sets: u32, ways: u32, block_bytes: u32, policy: ReplacementPolicy) -> Self {
        let n = (sets * ways) as usize;
        let victims = match policy {
            ReplacementPolicy::Nru => Victims::Nru,
            ReplacementPolicy::Random { seed } => Victims::Random(Box::new(ChaCha8Rng::seed_from_u64(seed))),
        };
        Cache {
            sets,
            ways: ways as usize,
            block_bytes,
            block_shift: block_bytes.trailing_zeros(),
            lines: vec![Line::default(); n],
            nru: vec![true; n],
            data: vec![0; n * block_bytes as usize],
            victims,
        }
    }

    pub fn block_bytes(&self) -> u32 {
        self.block_bytes
    }

    #[inline]
    pub fn block_addr(&self, addr: u32) -> u32 {
        addr & !(self.block_bytes - 1)
    }

    #[inline]
    pub fn locate(&self, addr: u32) -> (usize, u32) {
        let block = addr >> self.block_shift;
        ((block % self.sets) as usize, block / self.sets)
    }

    /// Address of the block held by `(set, way)`.
    pub fn addr_of(&self, set: usize, way: usize) -> u32 {
        let tag = self.lines[set * self.ways + way].tag;
        (tag * self.sets + set as u32) << self.block_shift
    }

    #[inline]
    pub fn find(&self, set: usize, tag: u32) -> Option<usize> {
        let base = set * self.ways;
        self.lines[base..base + self.ways]
            .iter()
            .position(|l| l.valid && l.tag == tag)
    }

    #[inline]
    pub fn line(&self, set: usize, way: usize) -> &Line {
        &self.lines[set * self.ways + way]
    }

    #[inline]
    pub fn line_mut(&mut self, set: usize, way: usize) -> &mut Line {
        &mut self.lines[set * self.ways + way]
    }

    pub fn nru_bits(&self, set: usize) -> &[bool] {
        &self.nru[set * self.ways..(set + 1) * self.ways]
    }

    #[inline]
    pub fn touch(&mut self, set: usize, way: usize) {
        let base = set * self.ways;
        nru_touch(&mut self.nru[base..base + self.ways], way);
    }

    /// An invalid way if there is one, otherwise the policy's choice.
    pub fn victim(&mut self, set: usize) -> usize {
        let base = set * self.ways;
        if let Some(w) = self.lines[base..base + self.ways].iter().position(|l| !l.valid) {
            return w;
        }
        match &mut self.victims {
            Victims::Nru => nru_victim(&self.nru[base..base + self.ways]),
            Victims::Random(rng) => rng.random_range(0..self.ways),
        }
    }

    #[inline]
    pub fn block(&self, set: usize, way: usize) -> &[u8] {
        let start = (set * self.ways + way) * self.block_bytes as usize;
        &self.data[start..start + self.block_bytes as usize]
    }

    #[inline]
    pub fn block_mut(&mut self, set: usize, way: usize) -> &mut [u8] {
        let start = (set * self.ways + way) * self.block_bytes as usize;
        &mut self.data[start..start + self.block_bytes as usize]
    }

    /// Every valid and dirty `(set, way)`.
    pub fn dirty_lines(&self) -> Vec<(usize, usize)> {
        (0..self.lines.len())
            .filter(|&i| self.lines[i].valid && self.lines[i].dirty)
            .map(|i| (i / self.ways, i % self.ways))
            .collect()
    }

    pub fn invalidate_all(&mut self) {
        self.lines.fill(Line::default());
        self.nru.fill(true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_fill_then_victim_is_way_zero() {
        // Oracle: hand-simulated bit vectors after each touch.
        let mut bits = vec![true; 4];
        nru_touch(&mut bits, 0);
        assert_eq!(bits, [false, true, true, true]);
        nru_touch(&mut bits, 1);
        nru_touch(&mut bits, 2);
        assert_eq!(bits, [false, false, false, true]);
        nru_touch(&mut bits, 3);
        assert_eq!(bits, [true, true, true, false]);
        assert_eq!(nru_victim(&bits), 0);
    }

    #[test]
    fn touched_way_is_never_victim() {
        let mut bits = vec![true; 4];
        for way in [2, 0, 3, 3, 1, 2, 0, 1, 1] {
            nru_touch(&mut bits, way);
            assert_ne!(nru_victim(&bits), way);
            assert!(bits.iter().any(|&b| b));
        }
    }

    #[test]
    fn single_way_set_always_evicts_way_zero() {
        let mut bits = vec![true];
        nru_touch(&mut bits, 0);
        assert_eq!(nru_victim(&bits), 0);
    }

    #[test]
    fn locate_and_addr_of_agree() {
        let mut c = Cache::new(32, 4, 32, ReplacementPolicy::Nru);
        let addr = 0x0001_2340;
        let (set, tag) = c.locate(addr);
        let way = c.victim(set);
        *c.line_mut(set, way) = Line { tag, valid: true, dirty: false, fill_start: 0 };
        assert_eq!(c.find(set, tag), Some(way));
        assert_eq!(c.addr_of(set, way), c.block_addr(addr));
    }
}
