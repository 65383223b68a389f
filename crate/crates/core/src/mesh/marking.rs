use super::MeshError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkRule {
    Bulk(f64),
    Average,
    All,
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSet {
    pub cells: Vec<usize>,
    pub rule: MarkRule,
}

impl MarkedSet {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
}

fn check(indicators: &[f64]) -> Result<(), MeshError> {
    match indicators
        .iter()
        .position(|v| !(v.is_finite() && *v >= 0.0))
    {
        Some(i) => Err(MeshError::Marking(format!(
            "indicator {i} is {} (must be finite and non-negative)",
            indicators[i]
        ))),
        None => Ok(()),
    }
}

pub fn mark_all(n_cells: usize) -> MarkedSet {
    MarkedSet {
        cells: (0..n_cells).collect(),
        rule: MarkRule::All,
    }
}

/// Doerfler marking: the shortest prefix of cells, ordered by decreasing
/// indicator (ties by ascending index), whose sum reaches `theta` times the
/// total.
pub fn mark_bulk(indicators: &[f64], theta: f64) -> Result<MarkedSet, MeshError> {
    check(indicators)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(MeshError::Marking(format!(
            "theta = {theta} outside (0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    // summing in the same order as the prefix keeps theta = 1 exact
    let total: f64 = order.iter().map(|&i| indicators[i]).sum();
    let mut cells = Vec::new();
    if total > 0.0 {
        let goal = theta * total;
        let mut acc = 0.0;
        for &i in &order {
            acc += indicators[i];
            cells.push(i);
            if acc >= goal {
                break;
            }
        }
    }
    Ok(MarkedSet {
        cells,
        rule: MarkRule::Bulk(theta),
    })
}

/// Cells whose indicator strictly exceeds the mean.
pub fn mark_average(indicators: &[f64]) -> Result<MarkedSet, MeshError> {
    check(indicators)?;
    let mut cells = Vec::new();
    if !indicators.is_empty() {
        let mean = indicators.iter().sum::<f64>() / indicators.len() as f64;
        cells = (0..indicators.len())
            .filter(|&i| indicators[i] > mean)
            .collect();
    }
    Ok(MarkedSet {
        cells,
        rule: MarkRule::Average,
    })
}

/// Distributes per-cell values of a coarse mesh onto its refinement, each
/// parent's value split equally among its children.
pub fn transfer_indicators(parent: &[usize], values: &[f64]) -> Vec<f64> {
    let mut count = vec![0usize; values.len()];
    for &p in parent {
        count[p] += 1;
    }
    parent
        .iter()
        .map(|&p| values[p] / count[p] as f64)
        .collect()
}
