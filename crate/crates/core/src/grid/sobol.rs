//! Unscrambled Sobol points with Joe–Kuo direction numbers
//! (`new-joe-kuo-6.21201`), dimensions 1 through 16.

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=16. Dimension 1 is the van der
/// Corput sequence in base 2.
const TABLE: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIM: usize = TABLE.len() + 1;

/// Largest supported term index.
pub const MAX_INDEX: u64 = (1u64 << BITS) - 1;

#[derive(Clone, Debug)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
}

impl Sobol {
    /// Panics if `dim` is zero or exceeds [`MAX_DIM`]; callers validate first.
    pub fn new(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        let directions = (0..dim).map(direction_numbers).collect();
        Sobol { directions }
    }

    /// Writes term `index` (1-based, so the all-zero origin is skipped) into
    /// `out`. Gray-code ordering makes this the same point that sequential
    /// generation would produce.
    pub fn point(&self, index: u64, out: &mut [f64]) {
        debug_assert!(index >= 1 && index <= MAX_INDEX);
        let gray = (index ^ (index >> 1)) as u32;
        for (v, slot) in self.directions.iter().zip(out.iter_mut()) {
            let mut x = 0u32;
            let mut bits = gray;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                x ^= v[k];
                bits &= bits - 1;
            }
            *slot = x as f64 / (1u64 << BITS) as f64;
        }
    }
}

fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = TABLE[dim_index - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let j = k - s;
        v[k] = v[j] ^ (v[j] >> s);
        for bit in 0..s - 1 {
            if (a >> bit) & 1 == 1 {
                v[k] ^= v[j + 1 + bit];
            }
        }
    }
    v
}
