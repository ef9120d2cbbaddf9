/// One iteration of a solver run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub fp_residual: f64,
    pub delta_k: f64,
    /// Analytic bound on the error injected by approximate proxes at this
    /// iteration (zero for exact proxes).
    pub eps_bound: f64,
}

/// Per-iteration record of a solver run. Rows are finite and strictly
/// ordered by `k`, starting at 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverTrace {
    rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { rows: Vec::with_capacity(n) }
    }

    /// Appends a row. Returns `false` (and records nothing) if the row is
    /// non-finite or out of order.
    pub fn push(&mut self, row: TraceRow) -> bool {
        let finite = row.objective.is_finite()
            && row.fp_residual.is_finite()
            && row.delta_k.is_finite()
            && row.eps_bound.is_finite();
        let ordered = match self.rows.last() {
            Some(last) => row.k > last.k,
            None => row.k >= 1,
        };
        if finite && ordered {
            self.rows.push(row);
            true
        } else {
            false
        }
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.rows.last().map(|r| r.objective)
    }

    /// Sum of `eps_bound` over all recorded iterations.
    pub fn eps_bound_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.eps_bound).sum()
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.objective)
    }

    /// True when every row is finite and `k` strictly increases from 1.
    pub fn is_well_formed(&self) -> bool {
        let mut prev = 0;
        self.rows.iter().all(|r| {
            let ok = r.k > prev
                && r.objective.is_finite()
                && r.fp_residual.is_finite()
                && r.delta_k.is_finite()
                && r.eps_bound.is_finite();
            prev = r.k;
            ok
        })
    }
}
