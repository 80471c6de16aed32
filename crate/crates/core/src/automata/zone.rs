//! Difference bound matrices (DBMs) representing clock zones.
//!
//! A zone over `n` clocks is an `(n+1) x (n+1)` matrix of bounds on clock
//! differences `x_i - x_j`, where index 0 is the constant-zero reference
//! clock. Algorithms follow Bengtsson & Yi, *Timed Automata: Semantics,
//! Algorithms and Tools* (canonicalisation is all-pairs shortest path,
//! emptiness shows up as a negative cycle on the diagonal).

use std::fmt;

/// An upper bound `< v` or `<= v` on a clock difference, or unbounded.
///
/// Bounds are packed into an `i64` as `value << 1 | bit`, with bit 1 for
/// weak (`<=`) and bit 0 for strict (`<`). The packing makes the natural
/// integer order coincide with bound tightness and keeps addition branch-free.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

const INF_RAW: i64 = i64::MAX;

impl Bound {
    pub const INF: Bound = Bound(INF_RAW);
    /// The bound `<= 0`.
    pub const ZERO: Bound = Bound(1);

    /// Weak bound `<= v`.
    pub fn le(v: i64) -> Bound {
        Bound((v << 1) | 1)
    }

    /// Strict bound `< v`.
    pub fn lt(v: i64) -> Bound {
        Bound(v << 1)
    }

    pub fn is_inf(self) -> bool {
        self.0 == INF_RAW
    }

    /// The numeric part of the bound. Meaningless for `INF`.
    pub fn value(self) -> i64 {
        self.0 >> 1
    }

    /// True if the bound is weak (`<=`).
    pub fn is_weak(self) -> bool {
        self.0 & 1 == 1
    }

    /// Bound addition: `(<= a) + (<= b) = <= a+b`, strict if either side is.
    pub fn add(self, other: Bound) -> Bound {
        if self.is_inf() || other.is_inf() {
            Bound::INF
        } else {
            Bound(self.0 + other.0 - ((self.0 & 1) | (other.0 & 1)))
        }
    }

    /// Negation used when flipping a constraint to the opposite matrix cell:
    /// the complement of `x - y <= v` is `y - x < -v`.
    pub fn negated(self) -> Bound {
        debug_assert!(!self.is_inf());
        if self.is_weak() {
            Bound::lt(-self.value())
        } else {
            Bound::le(-self.value())
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else if self.is_weak() {
            write!(f, "<={}", self.value())
        } else {
            write!(f, "<{}", self.value())
        }
    }
}

/// A single difference constraint `clock_i - clock_j {<,<=} v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClockConstraint {
    pub i: usize,
    pub j: usize,
    pub bound: Bound,
}

/// A convex clock zone in canonical (shortest-path-closed) form.
///
/// The `canonical` flag tracks whether the matrix is known closed; all public
/// constructors and operations keep it `true`. Empty zones are flagged by a
/// negative entry on `(0,0)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Zone {
    dim: usize,
    bounds: Vec<Bound>,
    canonical: bool,
}

impl Zone {
    /// Zone where every clock equals 0. `dim` includes the reference clock.
    pub fn zero(dim: usize) -> Zone {
        assert!(dim >= 1);
        Zone {
            dim,
            bounds: vec![Bound::ZERO; dim * dim],
            canonical: true,
        }
    }

    /// Unconstrained zone (all clocks >= 0).
    pub fn universe(dim: usize) -> Zone {
        assert!(dim >= 1);
        let mut z = Zone {
            dim,
            bounds: vec![Bound::INF; dim * dim],
            canonical: true,
        };
        for i in 0..dim {
            // x_0 - x_i <= 0 (clocks are nonnegative), diagonal <= 0.
            z.set(0, i, Bound::ZERO);
            z.set(i, i, Bound::ZERO);
        }
        z
    }

    /// Build from an explicit bound matrix; closes it immediately.
    pub fn from_bounds(dim: usize, bounds: Vec<Bound>) -> Zone {
        assert_eq!(bounds.len(), dim * dim);
        let mut z = Zone {
            dim,
            bounds,
            canonical: false,
        };
        z.canonicalize();
        z
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.bounds[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.bounds[i * self.dim + j] = b;
    }

    fn mark_empty(&mut self) {
        self.set(0, 0, Bound::lt(0));
        self.canonical = true;
    }

    pub fn is_empty(&self) -> bool {
        self.get(0, 0) < Bound::ZERO
    }

    /// Floyd-Warshall closure. Detects emptiness via a negative diagonal.
    pub fn canonicalize(&mut self) {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.get(i, k);
                if ik.is_inf() {
                    continue;
                }
                for j in 0..n {
                    let through = ik.add(self.get(k, j));
                    if through < self.get(i, j) {
                        self.set(i, j, through);
                    }
                }
            }
            if self.get(k, k) < Bound::ZERO {
                self.mark_empty();
                return;
            }
        }
        self.canonical = true;
    }

    /// Remove upper bounds on all individual clocks (time elapse / future).
    /// Preserves canonical form.
    pub fn delay(&mut self) {
        debug_assert!(self.canonical && !self.is_empty());
        for i in 1..self.dim {
            self.set(i, 0, Bound::INF);
        }
    }

    /// Intersect with one difference constraint, re-closing incrementally.
    /// Returns `false` (and marks the zone empty) if the result is empty.
    pub fn constrain(&mut self, c: ClockConstraint) -> bool {
        debug_assert!(c.i < self.dim && c.j < self.dim && c.i != c.j);
        if self.is_empty() {
            return false;
        }
        // Unsatisfiable against the opposite bound: D[j][i] + bound < 0.
        if self.get(c.j, c.i).add(c.bound) < Bound::ZERO {
            self.mark_empty();
            return false;
        }
        if c.bound < self.get(c.i, c.j) {
            self.set(c.i, c.j, c.bound);
            // Re-close only paths through the updated cell.
            let n = self.dim;
            for a in 0..n {
                for b in 0..n {
                    let via = self.get(a, c.i).add(c.bound).add(self.get(c.j, b));
                    if via < self.get(a, b) {
                        self.set(a, b, via);
                    }
                }
            }
        }
        true
    }

    /// Reset each clock in `clocks` to 0 (other clocks keep their relations).
    /// Preserves canonical form.
    pub fn reset(&mut self, clocks: &[usize]) {
        debug_assert!(self.canonical && !self.is_empty());
        for &x in clocks {
            debug_assert!(x >= 1 && x < self.dim);
            for j in 0..self.dim {
                self.set(x, j, self.get(0, j));
                self.set(j, x, self.get(j, 0));
            }
            self.set(x, 0, Bound::ZERO);
            self.set(0, x, Bound::ZERO);
            self.set(x, x, Bound::ZERO);
        }
    }

    /// Zone inclusion: every bound of `self` no looser than `other`'s.
    /// Both zones must be canonical for this test to be exact.
    pub fn is_subset_of(&self, other: &Zone) -> bool {
        debug_assert_eq!(self.dim, other.dim);
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        self.bounds
            .iter()
            .zip(other.bounds.iter())
            .all(|(a, b)| a <= b)
    }

    /// True if the integer clock valuation lies inside the zone.
    pub fn contains_point(&self, point: &[i64]) -> bool {
        debug_assert_eq!(point.len() + 1, self.dim);
        if self.is_empty() {
            return false;
        }
        let val = |i: usize| if i == 0 { 0 } else { point[i - 1] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = self.get(i, j);
                if b.is_inf() {
                    continue;
                }
                let diff = val(i) - val(j);
                let ok = if b.is_weak() {
                    diff <= b.value()
                } else {
                    diff < b.value()
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Debug for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "Zone(empty)");
        }
        writeln!(f, "Zone(dim={})", self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                write!(f, "{:?} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
