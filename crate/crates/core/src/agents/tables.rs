use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense `state x action` table of action values.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    n_states: usize,
    n_actions: usize,
    values: Vec<T>,
}

impl<T: Scalar> QTable<T> {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, values: vec![T::zero(); n_states * n_actions] }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.n_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: T) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max(&self, s: usize) -> T {
        self.row(s).iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// A visit sets the trace to 1.
    Replacing,
    /// A visit adds 1; only used to check the classical offline equivalence.
    Accumulating,
}

/// Eligibility traces, all zero at episode start.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable<T> {
    n_states: usize,
    n_actions: usize,
    kind: TraceKind,
    /// Entries that decay below this are dropped to exactly zero.
    floor: T,
    values: Vec<T>,
}

impl<T: Scalar> TraceTable<T> {
    pub fn new(n_states: usize, n_actions: usize, kind: TraceKind) -> Self {
        Self { n_states, n_actions, kind, floor: T::zero(), values: vec![T::zero(); n_states * n_actions] }
    }

    /// Cuts traces off after `n` decays by `decay` (the trace horizon).
    ///
    /// The floor sits at the geometric midpoint between the `n`th and
    /// `n+1`th decay so rounding cannot move the cutoff.
    pub fn with_horizon(mut self, n: u32, decay: T) -> Self {
        self.floor = decay.powi(n as i32) * decay.sqrt();
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.n_actions + a]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn decay(&mut self, factor: T) {
        for v in &mut self.values {
            if *v != T::zero() {
                *v *= factor;
                if *v < self.floor {
                    *v = T::zero();
                }
            }
        }
    }

    pub fn visit(&mut self, s: usize, a: usize) {
        let i = s * self.n_actions + a;
        self.values[i] = match self.kind {
            TraceKind::Replacing => T::one(),
            TraceKind::Accumulating => self.values[i] + T::one(),
        };
    }
}

const CHECKPOINT_MAGIC: &str = "noma-urllc-tabular";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Writes a Q-table and its traces as text.
///
/// ```text
/// noma-urllc-tabular 1
/// shape <states> <actions>
/// q <s> <Q(s,0)> ... <Q(s,A-1)>      one line per state
/// tau <s> <a> <value>                non-zero traces only
/// ```
pub fn write_checkpoint<T: Scalar, W: Write>(q: &QTable<T>, traces: &TraceTable<T>, mut w: W) -> Result<()> {
    writeln!(w, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}")?;
    writeln!(w, "shape {} {}", q.n_states, q.n_actions)?;
    for s in 0..q.n_states {
        write!(w, "q {s}")?;
        for v in q.row(s) {
            write!(w, " {}", v.as_f64())?;
        }
        writeln!(w)?;
    }
    for s in 0..traces.n_states {
        for a in 0..traces.n_actions {
            let v = traces.get(s, a);
            if v != T::zero() {
                writeln!(w, "tau {s} {a} {}", v.as_f64())?;
            }
        }
    }
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(r: R, kind: TraceKind) -> Result<(QTable<T>, TraceTable<T>)> {
    let bad = |line: usize, what: &str| Error::Checkpoint(format!("line {}: {what}", line + 1));
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Checkpoint("empty file".into()))?;
    let header = header?;
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        [magic, v] if *magic == CHECKPOINT_MAGIC => {
            if v.parse::<u32>().ok() != Some(CHECKPOINT_VERSION) {
                return Err(Error::Checkpoint(format!("unsupported version {v}")));
            }
        }
        _ => return Err(Error::Checkpoint(format!("not a tabular checkpoint: {header:?}"))),
    }
    let mut tables: Option<(QTable<T>, TraceTable<T>)> = None;
    for (i, line) in lines {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i, "bad number"));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(i, "bad index"));
        match fields.first().copied() {
            None => continue,
            Some("shape") if fields.len() == 3 => {
                let (ns, na) = (idx(fields[1])?, idx(fields[2])?);
                tables = Some((QTable::new(ns, na), TraceTable::new(ns, na, kind)));
            }
            Some("q") => {
                let (q, _) = tables.as_mut().ok_or_else(|| bad(i, "q before shape"))?;
                let s = idx(fields.get(1).ok_or_else(|| bad(i, "missing state"))?)?;
                if s >= q.n_states || fields.len() != q.n_actions + 2 {
                    return Err(bad(i, "q row does not match shape"));
                }
                for (a, f) in fields[2..].iter().enumerate() {
                    q.set(s, a, T::of(num(f)?));
                }
            }
            Some("tau") if fields.len() == 4 => {
                let (_, tr) = tables.as_mut().ok_or_else(|| bad(i, "tau before shape"))?;
                let (s, a) = (idx(fields[1])?, idx(fields[2])?);
                if s >= tr.n_states || a >= tr.n_actions {
                    return Err(bad(i, "trace index out of range"));
                }
                tr.values[s * tr.n_actions + a] = T::of(num(fields[3])?);
            }
            Some(other) => return Err(bad(i, &format!("unknown record {other:?}"))),
        }
    }
    tables.ok_or_else(|| Error::Checkpoint("missing shape record".into()))
}
