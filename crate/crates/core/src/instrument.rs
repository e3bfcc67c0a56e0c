//! Operation counters for the two expensive kernels: weighted-norm
//! evaluations and SO(3) projections.
//!
//! With `std` the tallies are per thread, so concurrent callers never see
//! each other's work; take a [`counts`] snapshot before and after a call and
//! subtract. Without `std` a single process-wide atomic tally is used; it wraps
//! at `usize::MAX`, so take differences with care on 32-bit targets.

use core::ops::{Add, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub norm_evals: u64,
    pub svd_projections: u64,
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            norm_evals: self.norm_evals - rhs.norm_evals,
            svd_projections: self.svd_projections - rhs.svd_projections,
        }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            norm_evals: self.norm_evals + rhs.norm_evals,
            svd_projections: self.svd_projections + rhs.svd_projections,
        }
    }
}

#[cfg(feature = "std")]
mod imp {
    use super::OpCounts;
    use std::cell::Cell;

    std::thread_local! {
        static NORMS: Cell<u64> = const { Cell::new(0) };
        static SVDS: Cell<u64> = const { Cell::new(0) };
    }

    pub fn bump_norm() {
        NORMS.with(|c| c.set(c.get() + 1));
    }

    pub fn bump_svd() {
        SVDS.with(|c| c.set(c.get() + 1));
    }

    pub fn counts() -> OpCounts {
        OpCounts {
            norm_evals: NORMS.with(Cell::get),
            svd_projections: SVDS.with(Cell::get),
        }
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    use super::OpCounts;
    // Pointer-width atomics are the widest available on every target.
    use core::sync::atomic::{AtomicUsize, Ordering};

    static NORMS: AtomicUsize = AtomicUsize::new(0);
    static SVDS: AtomicUsize = AtomicUsize::new(0);

    pub fn bump_norm() {
        NORMS.fetch_add(1, Ordering::Relaxed);
    }

    pub fn bump_svd() {
        SVDS.fetch_add(1, Ordering::Relaxed);
    }

    pub fn counts() -> OpCounts {
        OpCounts {
            norm_evals: NORMS.load(Ordering::Relaxed) as u64,
            svd_projections: SVDS.load(Ordering::Relaxed) as u64,
        }
    }
}

pub(crate) use imp::{bump_norm, bump_svd};

/// Current tally (this thread's, under `std`).
pub fn counts() -> OpCounts {
    imp::counts()
}

/// Runs `f` and returns its result together with the operations it performed.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCounts) {
    let before = counts();
    let out = f();
    (out, counts() - before)
}
