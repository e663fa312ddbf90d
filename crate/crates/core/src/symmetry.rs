//! Discrete structure-preserving maps and their action on step hypergraphons.
//!
//! A [`StructureMap`] at resolution `m` carries, for every `S ∈ r([k])`, a table
//! `g_S` assigning a permutation of `[m]` to every lower fiber
//! `u : r_<(S) → [m]`. It acts on cells by
//!
//! ```text
//! (g·c)(S) = g_S(c|r_<(S))(c(S))
//! ```
//!
//! so coordinate `S` of the image only reads coordinates indexed by subsets of `S`,
//! and each fiber table is a bijection, which makes the action a bijection of the
//! cell set. Equivariance under `S_k` is not automatic; [`StructureMap::commute_check`]
//! verifies it.

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraphon::{Grid, StepHypergraphon, Violation};
use crate::perm;
use crate::subsets::SubsetIndex;

/// `commute_check` is exhaustive while `cells · k!` stays at or below this.
pub const COMMUTE_EXHAUSTIVE_LIMIT: u128 = 1_000_000;
/// Cells sampled by `commute_check` above the exhaustive limit.
pub const COMMUTE_SAMPLES: usize = 100_000;
const COMMUTE_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMap {
    k: usize,
    m: usize,
    /// `tables[pos][fiber]` is a 0-based permutation of `0..m`.
    tables: Vec<Vec<Vec<u32>>>,
    lowers: Vec<Vec<usize>>,
}

fn lowers_of(subsets: &SubsetIndex) -> Vec<Vec<usize>> {
    (0..subsets.len()).map(|p| subsets.lower_positions(p)).collect()
}

fn fiber_index(c: &[usize], lower: &[usize], m: usize) -> usize {
    lower.iter().fold(0, |acc, &p| acc * m + c[p])
}

fn decode_fiber(mut idx: usize, lower: &[usize], m: usize, c: &mut [usize]) {
    for &p in lower.iter().rev() {
        c[p] = idx % m;
        idx /= m;
    }
}

impl StructureMap {
    pub fn new(k: usize, m: usize, tables: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        let lowers = lowers_of(&grid.subsets);
        if tables.len() != grid.dims {
            return Err(Error::LengthMismatch {
                expected: grid.dims,
                got: tables.len(),
            });
        }
        for (pos, table) in tables.iter().enumerate() {
            let fibers = m.pow(lowers[pos].len() as u32);
            if table.len() != fibers {
                return Err(Error::LengthMismatch {
                    expected: fibers,
                    got: table.len(),
                });
            }
            for p in table {
                if p.len() != m || !perm::is_permutation(p) {
                    return Err(Error::InvalidPermutation(format!(
                        "fiber table entry {p:?} is not a permutation of {m} points"
                    )));
                }
            }
        }
        Ok(StructureMap { k, m, tables, lowers })
    }

    pub fn identity(k: usize, m: usize) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        let lowers = lowers_of(&grid.subsets);
        let id = perm::identity(m);
        let tables = lowers.iter().map(|l| vec![id.clone(); m.pow(l.len() as u32)]).collect();
        Ok(StructureMap { k, m, tables, lowers })
    }

    /// Applies `pi` to every singleton coordinate and `top[u]` to the top
    /// coordinate over lower fiber `u`; all other tables are the identity.
    pub fn level_one_and_top(k: usize, m: usize, pi: &[u32], top: Vec<Vec<u32>>) -> Result<Self> {
        let mut g = Self::identity(k, m)?;
        for i in 0..k {
            g.tables[i] = vec![pi.to_vec()];
        }
        let t = g.tables.len() - 1;
        if k == 1 {
            // The only coordinate is both a singleton and the top.
            let composed = perm::compose(&top[0], pi);
            g.tables[t] = vec![composed];
        } else {
            g.tables[t] = top;
        }
        Self::new(k, m, g.tables)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tables(&self) -> &[Vec<Vec<u32>>] {
        &self.tables
    }

    pub fn is_identity(&self) -> bool {
        self.tables
            .iter()
            .all(|t| t.iter().all(|p| p.iter().enumerate().all(|(i, &x)| i == x as usize)))
    }

    /// `g·c` on 0-based coordinates without bounds checks.
    pub fn act_into(&self, c: &[usize], out: &mut [usize]) {
        for (pos, table) in self.tables.iter().enumerate() {
            let f = fiber_index(c, &self.lowers[pos], self.m);
            out[pos] = table[f][c[pos]] as usize;
        }
    }

    /// `g·c` for a cell given in 0-based coordinates.
    pub fn act(&self, c: &[usize]) -> Result<Vec<usize>> {
        if c.len() != self.tables.len() {
            return Err(Error::LengthMismatch {
                expected: self.tables.len(),
                got: c.len(),
            });
        }
        if let Some(&x) = c.iter().find(|&&x| x >= self.m) {
            return Err(Error::ResolutionMismatch {
                left: self.m,
                right: x + 1,
            });
        }
        let mut out = vec![0; c.len()];
        self.act_into(c, &mut out);
        Ok(out)
    }

    /// The same map at resolution `m·factor`: each interval splits into `factor`
    /// sub-intervals that move rigidly with their parent.
    pub fn lift(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("lift factor must be at least 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let fine_m = self.m * factor;
        Grid::new(self.k, fine_m)?;
        let mut c = vec![0usize; self.tables.len()];
        let tables = self
            .tables
            .iter()
            .enumerate()
            .map(|(pos, table)| {
                let lower = &self.lowers[pos];
                let fibers = fine_m.pow(lower.len() as u32);
                (0..fibers)
                    .map(|f| {
                        decode_fiber(f, lower, fine_m, &mut c);
                        let coarse = lower.iter().fold(0, |acc, &p| acc * self.m + c[p] / factor);
                        let p = &table[coarse];
                        (0..fine_m)
                            .map(|j| (p[j / factor] as usize * factor + j % factor) as u32)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(StructureMap {
            k: self.k,
            m: fine_m,
            tables,
            lowers: self.lowers.clone(),
        })
    }

    pub fn lift_to(&self, m: usize) -> Result<Self> {
        if !m.is_multiple_of(self.m) {
            return Err(Error::ResolutionMismatch { left: self.m, right: m });
        }
        self.lift(m / self.m)
    }

    /// The inverse map. Coordinates are recovered in ascending subset order, so
    /// the lower fiber of the preimage is known before its top value is inverted.
    pub fn inverse(&self) -> Self {
        let m = self.m;
        let mut inv: Vec<Vec<Vec<u32>>> = Vec::with_capacity(self.tables.len());
        let mut d = vec![0usize; self.tables.len()];
        let mut c = vec![0usize; self.tables.len()];
        for (pos, table) in self.tables.iter().enumerate() {
            let lower = &self.lowers[pos];
            let fibers = m.pow(lower.len() as u32);
            let mut new_table = Vec::with_capacity(fibers);
            for v in 0..fibers {
                decode_fiber(v, lower, m, &mut d);
                for &lp in lower {
                    let fd = fiber_index(&d, &self.lowers[lp], m);
                    c[lp] = inv[lp][fd][d[lp]] as usize;
                }
                let fc = fiber_index(&c, lower, m);
                new_table.push(perm::inverse(&table[fc]));
            }
            inv.push(new_table);
        }
        StructureMap {
            k: self.k,
            m,
            tables: inv,
            lowers: self.lowers.clone(),
        }
    }

    /// `(self ∘ other)·c = self·(other·c)`; resolutions are aligned by lifting.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::ArityMismatch {
                left: self.k,
                right: other.k,
            });
        }
        let l = self.m.lcm(&other.m);
        let outer = self.lift_to(l)?;
        let inner = other.lift_to(l)?;
        let mut c = vec![0usize; self.tables.len()];
        let mut gc = vec![0usize; self.tables.len()];
        let tables = (0..self.tables.len())
            .map(|pos| {
                let lower = &self.lowers[pos];
                let fibers = l.pow(lower.len() as u32);
                (0..fibers)
                    .map(|u| {
                        decode_fiber(u, lower, l, &mut c);
                        for &lp in lower {
                            let f = fiber_index(&c, &self.lowers[lp], l);
                            gc[lp] = inner.tables[lp][f][c[lp]] as usize;
                        }
                        let u2 = fiber_index(&gc, lower, l);
                        perm::compose(&outer.tables[pos][u2], &inner.tables[pos][u])
                    })
                    .collect()
            })
            .collect();
        Ok(StructureMap {
            k: self.k,
            m: l,
            tables,
            lowers: self.lowers.clone(),
        })
    }

    /// `W^g = g⁻¹(W)`: cell `c` of the result is set iff `g·c` is set in `W`.
    /// Both sides are brought to the least common multiple of the resolutions.
    pub fn pullback(&self, w: &StepHypergraphon) -> Result<StepHypergraphon> {
        if self.k != w.k() {
            return Err(Error::ArityMismatch {
                left: self.k,
                right: w.k(),
            });
        }
        let l = self.m.lcm(&w.m());
        let g = self.lift_to(l)?;
        let w = w.refine_to(l)?;
        let grid = w.grid();
        let mut c = vec![0usize; grid.dims];
        let mut d = vec![0usize; grid.dims];
        let src = w.cells();
        let cells = (0..grid.cells)
            .map(|i| {
                grid.decode(i, &mut c);
                g.act_into(&c, &mut d);
                src[grid.encode(&d)]
            })
            .collect();
        StepHypergraphon::new(self.k, l, cells)
    }

    /// Verifies `σ̃(g·c) = g·(σ̃c)` for every `σ ∈ S_k`. Exhaustive up to
    /// [`COMMUTE_EXHAUSTIVE_LIMIT`] checks, otherwise [`COMMUTE_SAMPLES`] cells drawn
    /// from a fixed seed.
    pub fn commute_check(&self) -> std::result::Result<(), Violation> {
        let grid = Grid::new(self.k, self.m).expect("validated at construction");
        let actions: Vec<_> = grid.subsets.all_induced().into_iter().skip(1).collect();
        let work = grid.cells as u128 * perm::factorial(self.k);
        let cells: Box<dyn Iterator<Item = usize>> = if work <= COMMUTE_EXHAUSTIVE_LIMIT {
            Box::new(0..grid.cells)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(COMMUTE_SEED);
            let total = grid.cells;
            Box::new((0..COMMUTE_SAMPLES).map(move |_| rng.gen_range(0..total)))
        };
        let n = grid.dims;
        let (mut c, mut gc, mut sgc, mut sc, mut gsc) = (vec![0; n], vec![0; n], vec![0; n], vec![0; n], vec![0; n]);
        for i in cells {
            grid.decode(i, &mut c);
            self.act_into(&c, &mut gc);
            for (sigma, src) in &actions {
                for p in 0..n {
                    sgc[p] = gc[src[p]];
                    sc[p] = c[src[p]];
                }
                self.act_into(&sc, &mut gsc);
                if sgc != gsc {
                    return Err(Violation {
                        sigma: sigma.iter().map(|x| x + 1).collect(),
                        cell: c.iter().map(|x| x + 1).collect(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = StructureMapFile {
            k: self.k,
            m: self.m,
            tables: self
                .tables
                .iter()
                .map(|t| t.iter().map(|p| p.iter().map(|&x| x as usize + 1).collect()).collect())
                .collect(),
        };
        serde_json::to_string(&file).expect("structure map serialization") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: StructureMapFile = serde_json::from_str(s)?;
        let tables = file
            .tables
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|p| {
                        p.into_iter()
                            .map(|x| {
                                if x == 0 {
                                    Err(Error::Format("permutations are 1-based".into()))
                                } else {
                                    Ok(x as u32 - 1)
                                }
                            })
                            .collect::<Result<Vec<u32>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.k, file.m, tables)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureMapFile {
    k: usize,
    m: usize,
    tables: Vec<Vec<Vec<usize>>>,
}

/// The finite group of equivariant maps at resolution `m` generated by a common
/// permutation of all singleton coordinates and by top-level fiber tables that
/// are constant on `S_k`-orbits of lower fibers.
///
/// Elements are pairs `(π, T)`. The local index of an element is the mixed-radix
/// number whose least significant digit is the lexicographic rank of `π`,
/// followed by the rank of `T` on each lower-fiber orbit (orbits ordered by
/// their smallest fiber). Index 0 is the identity.
#[derive(Debug, Clone)]
pub struct DiscreteGroup {
    k: usize,
    m: usize,
    orbit_of: Vec<usize>,
    orbit_count: usize,
}

impl DiscreteGroup {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        let orbits = grid.lower_orbits();
        let mut orbit_of = vec![0usize; grid.lower_cells];
        for (o, members) in orbits.iter().enumerate() {
            for &u in members {
                orbit_of[u] = o;
            }
        }
        Ok(DiscreteGroup {
            k,
            m,
            orbit_of,
            orbit_count: orbits.len(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn orbit_count(&self) -> usize {
        self.orbit_count
    }

    pub fn orbit_of(&self) -> &[usize] {
        &self.orbit_of
    }

    /// `m!^{1 + #orbits}`, saturating.
    pub fn size(&self) -> u128 {
        let f = perm::factorial(self.m);
        (0..=self.orbit_count).fold(1u128, |acc, _| acc.saturating_mul(f))
    }

    /// Builds the element from `π` and one permutation per lower-fiber orbit.
    pub fn from_parts(&self, pi: &[u32], per_orbit: &[Vec<u32>]) -> Result<StructureMap> {
        let top = self.orbit_of.iter().map(|&o| per_orbit[o].clone()).collect();
        StructureMap::level_one_and_top(self.k, self.m, pi, top)
    }

    /// Decodes a local index into `(π, per-orbit tables)`.
    pub fn parts(&self, mut j: u128) -> (Vec<u32>, Vec<Vec<u32>>) {
        let f = perm::factorial(self.m);
        let pi = perm::unrank(self.m, j % f);
        j /= f;
        let per_orbit = (0..self.orbit_count)
            .map(|_| {
                let p = perm::unrank(self.m, j % f);
                j /= f;
                p
            })
            .collect();
        (pi, per_orbit)
    }

    pub fn element(&self, j: u128) -> Result<StructureMap> {
        if j >= self.size() {
            return Err(Error::InvalidArgument(format!(
                "group index {j} out of range at resolution {}",
                self.m
            )));
        }
        let (pi, per_orbit) = self.parts(j);
        self.from_parts(&pi, &per_orbit)
    }
}

/// The fixed enumeration `g_1, g_2, …`: the groups at resolutions `m = 1, 2, …`
/// concatenated in order, each starting with its identity.
#[derive(Debug, Clone)]
pub struct GroupEnumeration {
    k: usize,
    blocks: Vec<DiscreteGroup>,
}

impl GroupEnumeration {
    pub fn new(k: usize) -> Result<Self> {
        SubsetIndex::new(k)?;
        Ok(GroupEnumeration { k, blocks: Vec::new() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block(&mut self, m: usize) -> Result<&DiscreteGroup> {
        while self.blocks.len() < m {
            let next = DiscreteGroup::new(self.k, self.blocks.len() + 1)?;
            self.blocks.push(next);
        }
        Ok(&self.blocks[m - 1])
    }

    /// 1-based global index of the first element at resolution `m`.
    pub fn block_start(&mut self, m: usize) -> Result<u128> {
        let mut start = 1u128;
        for r in 1..m {
            start = start.saturating_add(self.block(r)?.size());
        }
        Ok(start)
    }

    /// Resolves a 1-based global index to `(resolution, local index)`.
    pub fn locate(&mut self, index: u128) -> Result<(usize, u128)> {
        if index == 0 {
            return Err(Error::InvalidArgument("group enumeration starts at 1".into()));
        }
        let mut rest = index - 1;
        let mut m = 1;
        loop {
            let size = self.block(m)?.size();
            if rest < size {
                return Ok((m, rest));
            }
            rest -= size;
            m += 1;
        }
    }

    pub fn element(&mut self, index: u128) -> Result<StructureMap> {
        let (m, j) = self.locate(index)?;
        self.block(m)?.element(j)
    }
}

/// The `index`-th (1-based) element of the fixed group enumeration.
pub fn enumerate_group(k: usize, index: u128) -> Result<StructureMap> {
    GroupEnumeration::new(k)?.element(index)
}
