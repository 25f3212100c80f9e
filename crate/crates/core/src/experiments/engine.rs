//! Sample-parallel driver.
//!
//! Every sample derives its own key from the run seed and its index, so its
//! result does not depend on which worker runs it. Results come back in
//! sample order and every reduction afterwards is sequential, which keeps
//! reports bit-identical across thread counts.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::models::ModelSpec;
use crate::noise::{derive_seed, fill_column};
use crate::schemes::{SchemeKind, Stepper};

/// Worker count for the sample loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    /// Rayon's global pool.
    #[default]
    Auto,
    Fixed(usize),
}

impl Threads {
    fn install<R: Send>(self, f: impl FnOnce() -> R + Send) -> Result<R> {
        match self {
            Threads::Auto => Ok(f()),
            Threads::Fixed(0) => invalid("thread count must be positive"),
            Threads::Fixed(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Evaluate `f(0..count)` in parallel; results are returned in index order.
pub fn run_indexed<T, F>(count: usize, threads: Threads, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    threads.install(|| (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>())?
}

/// Resolutions driven by one fine path of `n_ref` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledLevels {
    n_ref: usize,
    levels: Vec<usize>,
    t_end: f64,
}

impl CoupledLevels {
    /// `n_ref` must be a power of two and every level a divisor of it.
    pub fn new(levels: &[usize], n_ref: usize, t_end: f64) -> Result<Self> {
        if !n_ref.is_power_of_two() {
            return invalid(format!("reference resolution must be a power of two, got {n_ref}"));
        }
        if levels.is_empty() {
            return invalid("need at least one resolution");
        }
        for &n in levels {
            if n == 0 || n_ref % n != 0 {
                return invalid(format!("N={n} does not divide N_ref={n_ref}"));
            }
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return invalid(format!("terminal time must be positive, got {t_end}"));
        }
        Ok(CoupledLevels {
            n_ref,
            levels: levels.to_vec(),
            t_end,
        })
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    fn depth(&self, n: usize) -> usize {
        (self.n_ref / n).trailing_zeros() as usize
    }
}

struct Workspace<'a> {
    reference: Stepper<'a>,
    // Indexed by depth: level j steps with h = T 2^j / n_ref.
    steppers: Vec<Option<Stepper<'a>>>,
    states: Vec<Vec<f64>>,
    slots: Vec<Vec<f64>>,
    filled: Vec<bool>,
    column: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(model: &'a ModelSpec, kind: SchemeKind, lv: &CoupledLevels) -> Result<Self> {
        let max_depth = lv.levels.iter().map(|&n| lv.depth(n)).max().unwrap_or(0);
        let m = model.modes();
        let mut steppers = Vec::with_capacity(max_depth + 1);
        for j in 0..=max_depth {
            let wanted = j > 0 && lv.levels.iter().any(|&n| lv.depth(n) == j);
            steppers.push(if wanted {
                Some(Stepper::new(model, kind, lv.t_end / (lv.n_ref >> j) as f64)?)
            } else {
                None
            });
        }
        Ok(Workspace {
            reference: Stepper::new(model, kind, lv.t_end / lv.n_ref as f64)?,
            steppers,
            states: vec![vec![0.0; m]; max_depth + 1],
            slots: vec![vec![0.0; m]; max_depth],
            filled: vec![false; max_depth],
            column: vec![0.0; m],
        })
    }

    // Terminal states by depth after one coupled run; depth 0 is the reference.
    fn run(&mut self, initial: &[f64], key: u64, n_ref: usize, scale: f64) {
        for s in self.states.iter_mut() {
            s.copy_from_slice(initial);
        }
        self.filled.fill(false);
        let max_depth = self.slots.len();
        for k in 0..n_ref {
            fill_column(key, k as u64, scale, &mut self.column);
            self.reference.step(&mut self.states[0], &self.column);
            // Pairwise pyramid: the sum at depth j+1 is (earlier + later) at depth j,
            // the same association as repeated coarsening by 2.
            let mut j = 0;
            while j < max_depth {
                if !self.filled[j] {
                    self.slots[j].copy_from_slice(&self.column);
                    self.filled[j] = true;
                    break;
                }
                for (c, s) in self.column.iter_mut().zip(&self.slots[j]) {
                    *c = *s + *c;
                }
                self.filled[j] = false;
                j += 1;
                if let Some(st) = self.steppers[j].as_mut() {
                    st.step(&mut self.states[j], &self.column);
                }
            }
        }
    }
}

/// Run `samples` coupled paths and map each to `f(reference, terminals)`.
///
/// Sample `s` uses the key `derive_seed(seed, s)`; its fine increments equal
/// `NoiseBundle::sample(M, n_ref, T, key)` and level `N` sees that bundle
/// coarsened by `n_ref / N`. `terminals` follows the order of `levels.levels()`.
pub fn coupled_map<T, F>(
    model: &ModelSpec,
    kind: SchemeKind,
    levels: &CoupledLevels,
    samples: usize,
    seed: u64,
    threads: Threads,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64], &[&[f64]]) -> T + Sync + Send,
{
    if !kind.is_stepping() {
        return invalid(format!("coupled estimation needs a stepping scheme, got {kind}"));
    }
    let rel = (levels.t_end - model.t_end()).abs() / model.t_end();
    if rel > 1e-12 {
        return invalid("resolution horizon does not match the model horizon");
    }
    // Validate once so per-sample workspace construction cannot fail.
    Workspace::new(model, kind, levels)?;
    let scale = (levels.t_end / levels.n_ref as f64).sqrt();
    let depths: Vec<usize> = levels.levels.iter().map(|&n| levels.depth(n)).collect();
    let initial = model.initial().to_vec();
    threads.install(|| {
        (0..samples)
            .into_par_iter()
            .map_init(
                || Workspace::new(model, kind, levels).expect("validated above"),
                |ws, s| {
                    ws.run(&initial, derive_seed(seed, s as u64), levels.n_ref, scale);
                    let terminals: Vec<&[f64]> = depths.iter().map(|&j| ws.states[j].as_slice()).collect();
                    f(&ws.states[0], &terminals)
                },
            )
            .collect()
    })
}
