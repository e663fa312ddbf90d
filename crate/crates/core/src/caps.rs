//! Resource caps shared by the searches. Every cap turns into
//! [`Error::CapExceeded`](crate::Error::CapExceeded) when hit.

/// Limits for the δ_1 search, the selector and the transversal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    /// Largest dense-enumeration index `f_n` may scan.
    pub index: u128,
    /// Largest group-enumeration index `h_n` may scan.
    pub scan: u128,
    /// Largest `L!` the exhaustive δ_1 search accepts.
    pub max_permutations: u128,
    /// Work bound for exact densities.
    pub work: u128,
    /// Selector steps before the trace is reported incomplete.
    pub max_steps: usize,
    /// Largest universe a transversal or orbit count will enumerate.
    pub universe: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            index: 1_000_000,
            scan: 10_000_000,
            max_permutations: 1_000_000,
            work: crate::density::EXACT_WORK_BOUND,
            max_steps: 64,
            universe: 1 << 22,
        }
    }
}
