//! Step hypergraphons at finite resolution.
//!
//! A [`StepHypergraphon`] of arity `k` and resolution `m` is a symmetric boolean
//! tensor over `[m]^{r([k])}`: cell `c` is a function from `r([k])` to `{0..m-1}`
//! and stands for the box `∏_S [c(S)/m, (c(S)+1)/m)` of the unit cube. Cells are
//! flattened row-major along the [`SubsetIndex`] order, so the top coordinate
//! `[k]` is the fastest-moving digit and every lower fiber owns a contiguous
//! column of `m` cells.

use std::fmt;

use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::FiniteHypergraph;
use crate::rational::{self, ratio, Rational};
use crate::subsets::SubsetIndex;

/// Upper limit on tensor sizes the crate will materialize.
pub const MAX_CELLS: u128 = 1 << 28;

/// Shape information shared by tensors of a given arity and resolution.
#[derive(Debug, Clone)]
pub struct Grid {
    pub k: usize,
    pub m: usize,
    pub subsets: SubsetIndex,
    pub dims: usize,
    pub cells: usize,
    pub lower_cells: usize,
}

impl Grid {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        let subsets = SubsetIndex::new(k)?;
        if m == 0 {
            return Err(Error::InvalidArgument("resolution must be at least 1".into()));
        }
        let dims = subsets.len();
        let cells = (m as u128).checked_pow(dims as u32).unwrap_or(u128::MAX);
        if cells > MAX_CELLS {
            return Err(Error::CapExceeded {
                what: "tensor size",
                cap: MAX_CELLS,
                detail: Some(format!("k={k}, m={m} needs {cells} cells")),
            });
        }
        let cells = cells as usize;
        Ok(Grid {
            k,
            m,
            subsets,
            dims,
            cells,
            lower_cells: cells / m,
        })
    }

    pub fn decode(&self, mut idx: usize, out: &mut [usize]) {
        for slot in out[..self.dims].iter_mut().rev() {
            *slot = idx % self.m;
            idx /= self.m;
        }
    }

    pub fn encode(&self, c: &[usize]) -> usize {
        c[..self.dims].iter().fold(0, |acc, &x| acc * self.m + x)
    }

    /// Flattened index of the lower fiber (the first `dims - 1` coordinates).
    pub fn encode_lower(&self, c: &[usize]) -> usize {
        c[..self.dims - 1].iter().fold(0, |acc, &x| acc * self.m + x)
    }

    pub fn decode_lower(&self, mut idx: usize, out: &mut [usize]) {
        for slot in out[..self.dims - 1].iter_mut().rev() {
            *slot = idx % self.m;
            idx /= self.m;
        }
    }

    /// The orbits of the `S_k` action on cells, each sorted ascending, listed
    /// by their smallest member.
    pub fn cell_orbits(&self) -> Vec<Vec<usize>> {
        orbits(
            self.cells,
            self.dims,
            &self.subsets.all_induced(),
            |i, buf| self.decode(i, buf),
            |c| self.encode(c),
        )
    }

    /// The orbits of the `S_k` action on lower fibers `[m]^{r_<([k])}`.
    pub fn lower_orbits(&self) -> Vec<Vec<usize>> {
        let lower = self.dims - 1;
        // σ̃ preserves r_<([k]) and fixes the top position, so the induced map
        // restricted to the first `lower` coordinates is the lower action.
        orbits(
            self.lower_cells,
            lower,
            &self.subsets.all_induced(),
            |i, buf| self.decode_lower(i, buf),
            |c| self.encode_lower(c),
        )
    }
}

fn orbits(
    count: usize,
    width: usize,
    actions: &[(Vec<usize>, Vec<usize>)],
    decode: impl Fn(usize, &mut [usize]),
    encode: impl Fn(&[usize]) -> usize,
) -> Vec<Vec<usize>> {
    let mut seen = vec![false; count];
    let mut out = Vec::new();
    let mut c = vec![0usize; width + 1];
    let mut d = vec![0usize; width + 1];
    for i in 0..count {
        if seen[i] {
            continue;
        }
        decode(i, &mut c);
        let mut orbit = Vec::new();
        for (_, src) in actions {
            for p in 0..width {
                d[p] = c[src[p]];
            }
            let j = encode(&d);
            if !seen[j] {
                seen[j] = true;
                orbit.push(j);
            }
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

/// A cell where symmetry fails, with the offending `σ` (1-based one-line notation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub sigma: Vec<usize>,
    pub cell: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sigma {:?} at cell {:?}", self.sigma, self.cell)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepHypergraphon {
    k: usize,
    m: usize,
    cells: Vec<bool>,
}

impl StepHypergraphon {
    pub fn new(k: usize, m: usize, cells: Vec<bool>) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        if cells.len() != grid.cells {
            return Err(Error::LengthMismatch {
                expected: grid.cells,
                got: cells.len(),
            });
        }
        Ok(StepHypergraphon { k, m, cells })
    }

    pub fn constant(k: usize, m: usize, value: bool) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        Ok(StepHypergraphon {
            k,
            m,
            cells: vec![value; grid.cells],
        })
    }

    pub fn zeros(k: usize, m: usize) -> Result<Self> {
        Self::constant(k, m, false)
    }

    pub fn ones(k: usize, m: usize) -> Result<Self> {
        Self::constant(k, m, true)
    }

    /// Cells whose top coordinate is below `threshold` are set; the set has
    /// measure `threshold / m` and depends on the top coordinate only.
    pub fn slab(k: usize, m: usize, threshold: usize) -> Result<Self> {
        if threshold > m {
            return Err(Error::InvalidArgument(format!(
                "slab threshold {threshold} exceeds resolution {m}"
            )));
        }
        Self::from_fn(k, m, |c| c[c.len() - 1] < threshold)
    }

    /// Builds a tensor from a predicate on 0-based cell coordinates.
    pub fn from_fn(k: usize, m: usize, mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        let mut c = vec![0usize; grid.dims];
        let cells = (0..grid.cells)
            .map(|i| {
                grid.decode(i, &mut c);
                f(&c)
            })
            .collect();
        Ok(StepHypergraphon { k, m, cells })
    }

    /// Step set induced by a finite hypergraph on vertex blocks: `m = |V(H)|`, and a
    /// cell is set iff its singleton coordinates are distinct and form an edge of `H`.
    pub fn from_hypergraph(h: &FiniteHypergraph) -> Result<Self> {
        let k = h.k();
        Self::from_fn(k, h.n(), |c| {
            let verts: Vec<usize> = c[..k].iter().map(|v| v + 1).collect();
            let mut sorted = verts.clone();
            sorted.sort_unstable();
            sorted.dedup();
            sorted.len() == k && h.has_edge(&sorted)
        })
    }

    /// Uniform random symmetric tensor: each cell orbit is set with probability `p`.
    pub fn random_symmetric<R: Rng + ?Sized>(k: usize, m: usize, p: f64, rng: &mut R) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        let mut cells = vec![false; grid.cells];
        for orbit in grid.cell_orbits() {
            let v = rng.gen_bool(p);
            for i in orbit {
                cells[i] = v;
            }
        }
        Ok(StepHypergraphon { k, m, cells })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.k, self.m).expect("validated at construction")
    }

    /// Value at 0-based cell coordinates.
    pub fn get(&self, c: &[usize]) -> bool {
        self.cells[self.grid().encode(c)]
    }

    pub fn ones_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// OR over each `S_k` orbit; the smallest symmetric superset.
    pub fn symmetrize_or(&self) -> Self {
        let grid = self.grid();
        let mut cells = self.cells.clone();
        for orbit in grid.cell_orbits() {
            let v = orbit.iter().any(|&i| self.cells[i]);
            for i in orbit {
                cells[i] = v;
            }
        }
        StepHypergraphon {
            k: self.k,
            m: self.m,
            cells,
        }
    }

    /// Checks `W(σ̃·c) = W(c)` for every `σ ∈ S_k` and every cell; reports the
    /// first failing cell (in flattened order) and the first `σ` failing there.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let grid = self.grid();
        let actions: Vec<_> = grid.subsets.all_induced().into_iter().skip(1).collect();
        let mut c = vec![0usize; grid.dims];
        let mut d = vec![0usize; grid.dims];
        for i in 0..grid.cells {
            grid.decode(i, &mut c);
            for (sigma, src) in &actions {
                for p in 0..grid.dims {
                    d[p] = c[src[p]];
                }
                if self.cells[grid.encode(&d)] != self.cells[i] {
                    return Err(Violation {
                        sigma: sigma.iter().map(|x| x + 1).collect(),
                        cell: c.iter().map(|x| x + 1).collect(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.validate().is_ok()
    }

    /// Lebesgue measure of the set.
    pub fn measure(&self) -> Rational {
        ratio(self.ones_count() as u128, self.cells.len() as u128)
    }

    /// Same set at resolution `m·factor`; every cell splits into
    /// `factor^{|r([k])|}` sub-cells with the parent's value.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor must be at least 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let coarse = self.grid();
        let fine = Grid::new(self.k, self.m * factor)?;
        let mut c = vec![0usize; fine.dims];
        let cells = (0..fine.cells)
            .map(|i| {
                fine.decode(i, &mut c);
                for x in c.iter_mut() {
                    *x /= factor;
                }
                self.cells[coarse.encode(&c)]
            })
            .collect();
        Ok(StepHypergraphon {
            k: self.k,
            m: self.m * factor,
            cells,
        })
    }

    pub fn refine_to(&self, m: usize) -> Result<Self> {
        if !m.is_multiple_of(self.m) {
            return Err(Error::ResolutionMismatch { left: self.m, right: m });
        }
        self.refine(m / self.m)
    }

    /// Number of set cells in every top column, indexed by lower fiber.
    pub fn column_counts(&self) -> Vec<u32> {
        self.cells
            .chunks(self.m)
            .map(|col| col.iter().filter(|&&b| b).count() as u32)
            .collect()
    }

    /// `Q(W)(u) = ∫ W(u, x_{[k]}) dx_{[k]}`: the fraction of the top column over `u` that is set.
    pub fn quotient_q(&self) -> LowerStepFunction {
        let values = self
            .column_counts()
            .into_iter()
            .map(|n| ratio(n as u128, self.m as u128))
            .collect();
        LowerStepFunction {
            k: self.k,
            m: self.m,
            values,
        }
    }

    pub fn to_json(&self) -> String {
        let file = HypergraphonFile {
            k: self.k,
            m: self.m,
            kind: Kind::Indicator,
            cells: Cells::Bits(self.cells.iter().map(|&b| b as u8).collect()),
        };
        serde_json::to_string(&file).expect("hypergraphon serialization") + "\n"
    }

    /// Parses an indicator file and checks length and symmetry.
    pub fn from_json(s: &str) -> Result<Self> {
        match AnyStep::from_json(s)? {
            AnyStep::Indicator(w) => Ok(w),
            AnyStep::Lower(_) => Err(Error::Format("expected kind \"indicator\"".into())),
        }
    }
}

/// `d_1(U, W)`: the measure of the symmetric difference, compared at the least
/// common multiple of the two resolutions.
pub fn distance_d1(u: &StepHypergraphon, w: &StepHypergraphon) -> Result<Rational> {
    let (diff, total) = differing_cells(u, w)?;
    Ok(ratio(diff as u128, total as u128))
}

/// `(differing cells, total cells)` at the common refinement.
pub fn differing_cells(u: &StepHypergraphon, w: &StepHypergraphon) -> Result<(usize, usize)> {
    if u.k != w.k {
        return Err(Error::ArityMismatch { left: u.k, right: w.k });
    }
    let l = u.m.lcm(&w.m);
    let uu = u.refine_to(l)?;
    let ww = w.refine_to(l)?;
    let diff = uu.cells.iter().zip(&ww.cells).filter(|(a, b)| a != b).count();
    Ok((diff, uu.cells.len()))
}

/// A `[0,1]`-valued step function on `[m]^{r_<([k])}`; the codomain of `Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerStepFunction {
    k: usize,
    m: usize,
    values: Vec<Rational>,
}

impl LowerStepFunction {
    pub fn new(k: usize, m: usize, values: Vec<Rational>) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        if values.len() != grid.lower_cells {
            return Err(Error::LengthMismatch {
                expected: grid.lower_cells,
                got: values.len(),
            });
        }
        if values.iter().any(|v| v < &rational::zero() || v > &rational::one()) {
            return Err(Error::InvalidArgument("values must lie in [0, 1]".into()));
        }
        Ok(LowerStepFunction { k, m, values })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn mean(&self) -> Rational {
        let sum: Rational = self.values.iter().sum();
        sum / Rational::from_integer(self.values.len().into())
    }

    /// `S_k`-symmetry under the induced action on `r_<([k])`.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let grid = Grid::new(self.k, self.m).expect("validated at construction");
        let lower = grid.dims - 1;
        let mut c = vec![0usize; grid.dims];
        let mut d = vec![0usize; grid.dims];
        let actions: Vec<_> = grid.subsets.all_induced().into_iter().skip(1).collect();
        for i in 0..grid.lower_cells {
            grid.decode_lower(i, &mut c);
            for (sigma, src) in &actions {
                for p in 0..lower {
                    d[p] = c[src[p]];
                }
                if self.values[grid.encode_lower(&d)] != self.values[i] {
                    return Err(Violation {
                        sigma: sigma.iter().map(|x| x + 1).collect(),
                        cell: c[..lower].iter().map(|x| x + 1).collect(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = HypergraphonFile {
            k: self.k,
            m: self.m,
            kind: Kind::Lower,
            cells: Cells::Ratios(self.values.iter().map(rational::format).collect()),
        };
        serde_json::to_string(&file).expect("lower function serialization") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        match AnyStep::from_json(s)? {
            AnyStep::Lower(q) => Ok(q),
            AnyStep::Indicator(_) => Err(Error::Format("expected kind \"lower\"".into())),
        }
    }
}

/// Either kind of hypergraphon file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyStep {
    Indicator(StepHypergraphon),
    Lower(LowerStepFunction),
}

impl AnyStep {
    pub fn from_json(s: &str) -> Result<Self> {
        let file: HypergraphonFile = serde_json::from_str(s)?;
        match (file.kind, file.cells) {
            (Kind::Indicator, Cells::Bits(bits)) => {
                if bits.iter().any(|&b| b > 1) {
                    return Err(Error::Format("indicator cells must be 0 or 1".into()));
                }
                let w = StepHypergraphon::new(file.k, file.m, bits.iter().map(|&b| b == 1).collect())?;
                w.validate()
                    .map_err(|v| Error::Format(format!("tensor is not symmetric: {v}")))?;
                Ok(AnyStep::Indicator(w))
            }
            (Kind::Lower, Cells::Ratios(vals)) => {
                let values = vals.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>()?;
                let q = LowerStepFunction::new(file.k, file.m, values)?;
                q.validate()
                    .map_err(|v| Error::Format(format!("lower function is not symmetric: {v}")))?;
                Ok(AnyStep::Lower(q))
            }
            (kind, _) => Err(Error::Format(format!("cell encoding does not match kind {kind:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Indicator,
    Lower,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Cells {
    Bits(Vec<u8>),
    Ratios(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypergraphonFile {
    k: usize,
    m: usize,
    kind: Kind,
    cells: Cells,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_k2() {
        let g = Grid::new(2, 2).unwrap();
        assert_eq!((g.dims, g.cells, g.lower_cells), (3, 8, 4));
        let mut c = [0usize; 3];
        g.decode(5, &mut c);
        assert_eq!(c, [1, 0, 1]);
        assert_eq!(g.encode(&c), 5);
        // 3 lower-fiber orbits ({11}, {22}, {12, 21}) times 2 top values.
        assert_eq!(g.cell_orbits().len(), 6);
        assert_eq!(g.lower_orbits().len(), 3);
    }

    #[test]
    fn validate_examples() {
        assert!(StepHypergraphon::zeros(2, 2).unwrap().validate().is_ok());
        let mut cells = vec![false; 8];
        // cell (1, 2, 1) in 1-based coordinates, flattened index 0*4 + 1*2 + 0 = 2.
        cells[2] = true;
        let w = StepHypergraphon::new(2, 2, cells).unwrap();
        let v = w.validate().unwrap_err();
        assert_eq!(v.sigma, vec![2, 1]);
        assert_eq!(v.cell, vec![1, 2, 1]);
        assert!(w.symmetrize_or().validate().is_ok());
        assert!(StepHypergraphon::new(2, 2, vec![false; 7]).is_err());
    }

    #[test]
    fn symmetrized_random_tensors_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..=3 {
            for m in 1..=3 {
                let cells = (0..Grid::new(k, m).unwrap().cells).map(|_| rng.gen_bool(0.3)).collect();
                let w = StepHypergraphon::new(k, m, cells).unwrap().symmetrize_or();
                assert!(w.validate().is_ok());
            }
        }
    }

    #[test]
    fn measure_examples() {
        assert_eq!(StepHypergraphon::ones(2, 3).unwrap().measure(), ratio(1, 1));
        assert_eq!(StepHypergraphon::zeros(3, 2).unwrap().measure(), ratio(0, 1));
        let w = StepHypergraphon::slab(2, 2, 1).unwrap();
        assert_eq!(w.ones_count(), 4);
        assert_eq!(w.measure(), ratio(1, 2));
    }

    #[test]
    fn refine_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = StepHypergraphon::random_symmetric(2, 2, 0.5, &mut rng).unwrap();
        assert_eq!(w.refine(1).unwrap(), w);
        for f in [2, 3] {
            let r = w.refine(f).unwrap();
            assert_eq!(r.measure(), w.measure());
            assert!(r.validate().is_ok());
        }
        assert_eq!(
            StepHypergraphon::ones(2, 1).unwrap().refine(2).unwrap(),
            StepHypergraphon::ones(2, 2).unwrap()
        );
        assert!(w.refine(0).is_err());
    }

    #[test]
    fn d1_examples() {
        let z = StepHypergraphon::zeros(2, 2).unwrap();
        let o = StepHypergraphon::ones(2, 2).unwrap();
        assert_eq!(distance_d1(&z, &z).unwrap(), ratio(0, 1));
        assert_eq!(distance_d1(&z, &o).unwrap(), ratio(1, 1));
        // m=2 tensor with 6 of 8 cells set against the m=1 all-ones tensor.
        let w = StepHypergraphon::from_fn(2, 2, |c| !(c[0] == 0 && c[1] == 0)).unwrap();
        assert_eq!(w.ones_count(), 6);
        let one1 = StepHypergraphon::ones(2, 1).unwrap();
        assert_eq!(distance_d1(&one1, &w).unwrap(), ratio(1, 4));
        let e = StepHypergraphon::zeros(3, 1).unwrap();
        assert!(distance_d1(&e, &z).is_err());
    }

    #[test]
    fn cross_resolution_lcm() {
        let a = StepHypergraphon::slab(2, 2, 1).unwrap();
        let b = StepHypergraphon::slab(2, 3, 1).unwrap();
        // Top coordinate in [0, 1/2) vs [0, 1/3): differ on the band [1/3, 1/2).
        assert_eq!(distance_d1(&a, &b).unwrap(), ratio(1, 6));
    }

    #[test]
    fn quotient_examples() {
        let q1 = StepHypergraphon::ones(3, 2).unwrap().quotient_q();
        assert!(q1.values().iter().all(|v| *v == rational::one()));
        let q0 = StepHypergraphon::zeros(2, 3).unwrap().quotient_q();
        assert!(q0.values().iter().all(|v| *v == rational::zero()));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let w = StepHypergraphon::random_symmetric(2, 3, 0.4, &mut rng).unwrap();
            let q = w.quotient_q();
            assert_eq!(q.mean(), w.measure());
            assert!(q.validate().is_ok());
        }
    }

    #[test]
    fn hypergraph_block_step() {
        let h = FiniteHypergraph::new(2, 3, [[1, 2], [2, 3]]).unwrap();
        let w = StepHypergraphon::from_hypergraph(&h).unwrap();
        assert!(w.validate().is_ok());
        // 4 ordered pairs forming an edge, times 3 top values each, out of 27.
        assert_eq!(w.measure(), ratio(4, 9));
    }

    #[test]
    fn file_roundtrip() {
        let w = StepHypergraphon::slab(2, 2, 1).unwrap();
        let s = w.to_json();
        assert_eq!(
            s,
            "{\"k\":2,\"m\":2,\"kind\":\"indicator\",\"cells\":[1,0,1,0,1,0,1,0]}\n"
        );
        assert_eq!(StepHypergraphon::from_json(&s).unwrap().to_json(), s);
        let q = w.quotient_q();
        let qs = q.to_json();
        assert_eq!(
            qs,
            "{\"k\":2,\"m\":2,\"kind\":\"lower\",\"cells\":[\"1/2\",\"1/2\",\"1/2\",\"1/2\"]}\n"
        );
        assert_eq!(LowerStepFunction::from_json(&qs).unwrap(), q);
        assert!(
            StepHypergraphon::from_json("{\"k\":2,\"m\":2,\"kind\":\"indicator\",\"cells\":[0,0,1,0,0,0,0,0]}")
                .is_err()
        );
        assert!(StepHypergraphon::from_json("{\"k\":2,\"m\":1,\"kind\":\"indicator\",\"cells\":[2]}").is_err());
        assert!(StepHypergraphon::from_json(&qs).is_err());
    }
}
