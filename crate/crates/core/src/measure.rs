//! Measurement design and simulation: the hub-sum probe, random closed-path
//! probes over hub supersets, direct per-hub-edge reads, and the hub
//! subtraction that turns the batch into a random binary sensing system over
//! the non-hub links.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, LineGraph, Network};
use crate::hub::{cds_certify, CdsVerdict, HubSet};

/// Per-link delay vector with a known sparse support of large entries.
#[derive(Clone, Debug)]
pub struct DelaySignal {
    values: Vec<f64>,
    support: Vec<EdgeId>,
}

impl DelaySignal {
    /// Builds a signal from raw values and a declared support. The support
    /// must be sorted, in range, and duplicate-free; values must be
    /// nonnegative.
    pub fn new(values: Vec<f64>, support: Vec<EdgeId>) -> Result<DelaySignal> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("delay {v} is not a nonnegative real")));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("support must be strictly ascending".into()));
        }
        if support.last().is_some_and(|&e| e >= values.len()) {
            return Err(Error::InvalidParameter("support index out of range".into()));
        }
        Ok(DelaySignal { values, support })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Edge ids carrying a large delay, ascending.
    pub fn support(&self) -> &[EdgeId] {
        &self.support
    }

    pub fn sparsity_k(&self) -> usize {
        self.support.len()
    }
}

/// Draws a delay signal of length `m` with sparsity rate `r`: a uniform
/// random support of `round(r * m)` links gets values in `[5(1-r), 5]`,
/// everything else is background in `[0, 0.001(1-r)]`.
pub fn gen_signal(m: usize, r: f64, seed: u64) -> Result<DelaySignal> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sparsity rate must lie in (0, 1), got {r}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("signal length must be positive".into()));
    }
    let k = (r * m as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Partial Fisher-Yates draw of a uniform k-subset.
    let mut ids: Vec<EdgeId> = (0..m).collect();
    for i in 0..k.min(m.saturating_sub(1)) {
        let j = rng.gen_range(i..m);
        ids.swap(i, j);
    }
    let mut support: Vec<EdgeId> = ids[..k].to_vec();
    support.sort_unstable();

    let lo = 5.0 * (1.0 - r);
    let noise_hi = 0.001 * (1.0 - r);
    let mut values = vec![0.0; m];
    for v in values.iter_mut() {
        *v = rng.gen_range(0.0..noise_hi);
    }
    for &e in &support {
        values[e] = rng.gen_range(lo..=5.0);
    }
    Ok(DelaySignal { values, support })
}

/// The measurement batch for one network epoch: one hub-sum row, `n_random`
/// random rows measuring `S ∪ C`, and one direct row per hub edge.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    hub: HubSet,
    edge_space: usize,
    non_hub: Vec<EdgeId>,
    rows: Vec<Vec<bool>>,
}

impl MeasurementPlan {
    pub fn hub(&self) -> &HubSet {
        &self.hub
    }

    /// Size of the edge-id space the plan was built over.
    pub fn edge_space(&self) -> usize {
        self.edge_space
    }

    /// Non-hub edge ids `T`, ascending; these are the matrix columns.
    pub fn non_hub(&self) -> &[EdgeId] {
        &self.non_hub
    }

    pub fn n_random(&self) -> usize {
        self.rows.len()
    }

    /// Indicator of row `i` over `non_hub()` order.
    pub fn row(&self, i: usize) -> &[bool] {
        &self.rows[i]
    }

    /// Total probes sent: random rows + the hub-sum row + one per hub edge.
    pub fn total_measurements(&self) -> usize {
        self.rows.len() + 1 + self.hub.len()
    }

    /// The measured line-graph node set of row `i`, i.e. `S_i ∪ C`.
    pub fn measured_set(&self, i: usize, lg: &LineGraph) -> Vec<usize> {
        let mut set: Vec<usize> = self.hub.nodes(lg);
        for (j, &t) in self.non_hub.iter().enumerate() {
            if self.rows[i][j] {
                set.push(lg.node_for_edge(t));
            }
        }
        set.sort_unstable();
        set
    }

    /// Asserts the connectivity constraint for every measured set: each
    /// random row's `S ∪ C`, the hub row `C`, and each direct singleton.
    pub fn verify_connectivity(&self, lg: &LineGraph) -> Result<()> {
        let hub_nodes = self.hub.nodes(lg);
        if !lg.is_connected_subset(&hub_nodes)? {
            return Err(Error::InvalidHub {
                witness: hub_nodes[0],
                reason: "hub row induces a disconnected set".into(),
            });
        }
        for i in 0..self.rows.len() {
            let set = self.measured_set(i, lg);
            if !lg.is_connected_subset(&set)? {
                return Err(Error::InvalidHub {
                    witness: set[0],
                    reason: format!("random row {i} induces a disconnected set"),
                });
            }
        }
        for &c in &hub_nodes {
            if !lg.is_connected_subset(&[c])? {
                return Err(Error::InvalidHub {
                    witness: c,
                    reason: "direct row induces a disconnected set".into(),
                });
            }
        }
        Ok(())
    }

    /// Random rows as 0/1 strings over sorted non-hub edge ids, one per line.
    pub fn rows_to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            for &b in row {
                out.push(if b { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Designs the measurement batch: every non-hub edge enters each random row
/// independently with probability 1/2. Domination by the hub guarantees each
/// measured superset stays connected; that guarantee is asserted, not
/// filtered for.
pub fn build_plan(
    g: &Network,
    lg: &LineGraph,
    hub: &HubSet,
    n_random: usize,
    seed: u64,
) -> Result<MeasurementPlan> {
    if n_random == 0 {
        return Err(Error::InvalidParameter("need at least one random row".into()));
    }
    if lg.node_count() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: lg.node_count(),
            what: "line graph node count".into(),
        });
    }
    match cds_certify(hub, lg) {
        CdsVerdict::Ok => {}
        CdsVerdict::Empty => {
            return Err(Error::InvalidHub { witness: 0, reason: "hub is empty".into() })
        }
        CdsVerdict::NotConnected { witness } => {
            return Err(Error::InvalidHub { witness, reason: "hub is not connected".into() })
        }
        CdsVerdict::NotDominated { witness } => {
            return Err(Error::InvalidHub { witness, reason: "hub does not dominate".into() })
        }
    }

    let non_hub: Vec<EdgeId> = (0..g.edge_count()).filter(|e| !hub.contains(*e)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<bool>> = (0..n_random)
        .map(|_| (0..non_hub.len()).map(|_| rng.gen_bool(0.5)).collect())
        .collect();

    let plan = MeasurementPlan { hub: hub.clone(), edge_space: g.edge_count(), non_hub, rows };
    plan.verify_connectivity(lg)?;
    Ok(plan)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Noiseless,
    /// Adds an independent `Uniform[0, eps)` term to every measurement.
    AdditiveUniform { eps: f64, seed: u64 },
}

/// All measured values for one signal under one plan.
#[derive(Clone, Debug)]
pub struct MeasurementVector {
    pub y_hub: f64,
    pub y_random: Vec<f64>,
    /// One entry per hub edge, in ascending hub edge id order.
    pub y_direct: Vec<f64>,
    pub noise: NoiseModel,
}

/// Simulates the probe batch: sums over measured sets plus optional noise.
pub fn measure(plan: &MeasurementPlan, x: &DelaySignal, noise: NoiseModel) -> Result<MeasurementVector> {
    if x.len() != plan.edge_space() {
        return Err(Error::DimensionMismatch {
            expected: plan.edge_space(),
            got: x.len(),
            what: "delay signal".into(),
        });
    }
    let values = x.values();
    let hub_sum: f64 = plan.hub.edges().map(|e| values[e]).sum();
    let mut y_random = Vec::with_capacity(plan.n_random());
    for row in &plan.rows {
        let s: f64 = row
            .iter()
            .zip(&plan.non_hub)
            .filter_map(|(&b, &t)| b.then(|| values[t]))
            .sum();
        y_random.push(hub_sum + s);
    }
    let mut y_hub = hub_sum;
    let mut y_direct: Vec<f64> = plan.hub.edges().map(|e| values[e]).collect();

    if let NoiseModel::AdditiveUniform { eps, seed } = noise {
        if eps < 0.0 {
            return Err(Error::InvalidParameter(format!("noise bound must be >= 0, got {eps}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        y_hub += rng.gen_range(0.0..eps.max(f64::MIN_POSITIVE));
        for y in y_random.iter_mut().chain(y_direct.iter_mut()) {
            *y += rng.gen_range(0.0..eps.max(f64::MIN_POSITIVE));
        }
    }
    Ok(MeasurementVector { y_hub, y_random, y_direct, noise })
}

/// Subtracts the hub sum from every random measurement, leaving the system
/// `rhs = A x_T` whose rows are the random-subset indicators over `T`.
pub fn effective_system(
    plan: &MeasurementPlan,
    y: &MeasurementVector,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if y.y_random.len() != plan.n_random() || y.y_direct.len() != plan.hub.len() {
        return Err(Error::DimensionMismatch {
            expected: plan.n_random(),
            got: y.y_random.len(),
            what: "measurement vector".into(),
        });
    }
    let rows = plan.n_random();
    let cols = plan.non_hub.len();
    let mut a = DMatrix::zeros(rows, cols);
    for (i, row) in plan.rows.iter().enumerate() {
        for (j, &b) in row.iter().enumerate() {
            if b {
                a[(i, j)] = 1.0;
            }
        }
    }
    let rhs = DVector::from_iterator(rows, y.y_random.iter().map(|&v| v - y.y_hub));
    Ok((a, rhs))
}

/// Right-hand side as one decimal per line, 12 significant digits.
pub fn rhs_to_csv(rhs: &DVector<f64>) -> String {
    let mut out = String::new();
    for v in rhs.iter() {
        let _ = writeln!(out, "{v:.11e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_ba, line_graph};
    use crate::hub::connect_matching;
    use crate::matching::max_matching;

    fn pipeline_graph(n: usize, d: usize, seed: u64) -> (Network, LineGraph, HubSet) {
        let g = generate_ba(n, d, seed).unwrap();
        let lg = line_graph(&g);
        let hub = connect_matching(&g, &max_matching(&g)).unwrap();
        (g, lg, hub)
    }

    #[test]
    fn signal_ranges_and_count() {
        let sig = gen_signal(100, 0.05, 11).unwrap();
        assert_eq!(sig.sparsity_k(), 5);
        for &e in sig.support() {
            assert!((4.75..=5.0).contains(&sig.values()[e]));
        }
        let max_noise = sig
            .values()
            .iter()
            .enumerate()
            .filter(|(e, _)| !sig.support().contains(e))
            .map(|(_, &v)| v)
            .fold(0.0f64, f64::max);
        assert!(max_noise < 0.00095);
    }

    #[test]
    fn signal_support_clears_noise_ceiling() {
        let sig = gen_signal(20, 0.35, 4).unwrap();
        assert_eq!(sig.sparsity_k(), 7);
        let min_support = sig.support().iter().map(|&e| sig.values()[e]).fold(f64::MAX, f64::min);
        assert!(min_support >= 3.25);
        assert!(min_support > 0.00065);
    }

    #[test]
    fn signal_is_deterministic() {
        let a = gen_signal(64, 0.2, 9).unwrap();
        let b = gen_signal(64, 0.2, 9).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.support(), b.support());
    }

    #[test]
    fn signal_rejects_bad_rate() {
        assert!(gen_signal(10, 0.0, 1).is_err());
        assert!(gen_signal(10, 1.0, 1).is_err());
        assert!(gen_signal(10, -0.3, 1).is_err());
    }

    #[test]
    fn plan_has_requested_rows_and_connected_sets() {
        let (g, lg, hub) = pipeline_graph(40, 4, 2);
        let plan = build_plan(&g, &lg, &hub, 1, 5).unwrap();
        assert_eq!(plan.n_random(), 1);
        let set = plan.measured_set(0, &lg);
        assert!(lg.is_connected_subset(&set).unwrap());
        assert_eq!(plan.total_measurements(), 1 + 1 + hub.len());
    }

    #[test]
    fn plan_rejects_uncertified_hub() {
        let (g, lg, _) = pipeline_graph(30, 4, 3);
        let bad = HubSet::from_text("origin matching_based\nhub_edges 0\nconnector_edges\n").unwrap();
        // A single edge rarely dominates the whole line graph at this size.
        assert!(matches!(
            build_plan(&g, &lg, &bad, 2, 1),
            Err(Error::InvalidHub { .. })
        ));
    }

    #[test]
    fn degenerate_all_hub_plan() {
        // Star: the single maximal matching edge dominates, but take the
        // full edge set as hub so T is empty.
        let mut g = Network::new(4);
        for v in 1..4 {
            g.add_edge(0, v).unwrap();
        }
        let lg = line_graph(&g);
        let hub =
            HubSet::from_text("origin matching_based\nhub_edges 0 1 2\nconnector_edges 1 2\n")
                .unwrap();
        let plan = build_plan(&g, &lg, &hub, 1, 7).unwrap();
        assert!(plan.non_hub().is_empty());
        let sig = gen_signal(3, 0.4, 1).unwrap();
        let y = measure(&plan, &sig, NoiseModel::Noiseless).unwrap();
        // Direct rows alone pin down every delay.
        for (slot, &e) in plan.hub().edges().collect::<Vec<_>>().iter().enumerate() {
            assert_eq!(y.y_direct[slot], sig.values()[e]);
        }
    }

    #[test]
    fn row_density_near_half() {
        let (g, lg, hub) = pipeline_graph(120, 10, 8);
        let plan = build_plan(&g, &lg, &hub, 40, 3).unwrap();
        let t = plan.non_hub().len();
        assert!(t >= 200, "want a wide T for the density check, got {t}");
        let ones: usize = (0..plan.n_random())
            .map(|i| plan.row(i).iter().filter(|&&b| b).count())
            .sum();
        let density = ones as f64 / (t * plan.n_random()) as f64;
        assert!((density - 0.5).abs() <= 0.05, "density {density}");
    }

    #[test]
    fn measure_zero_signal_is_zero() {
        let (g, lg, hub) = pipeline_graph(30, 4, 1);
        let plan = build_plan(&g, &lg, &hub, 3, 2).unwrap();
        let zero = DelaySignal { values: vec![0.0; g.edge_count()], support: vec![] };
        let y = measure(&plan, &zero, NoiseModel::Noiseless).unwrap();
        assert_eq!(y.y_hub, 0.0);
        assert!(y.y_random.iter().all(|&v| v == 0.0));
        assert!(y.y_direct.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hub_subtraction_arithmetic() {
        let (g, lg, hub) = pipeline_graph(30, 4, 6);
        let plan = build_plan(&g, &lg, &hub, 5, 9).unwrap();
        let sig = gen_signal(g.edge_count(), 0.1, 12).unwrap();
        let y = measure(&plan, &sig, NoiseModel::Noiseless).unwrap();
        let (a, rhs) = effective_system(&plan, &y).unwrap();
        // rhs must equal the subset sums, recomputed straight off the signal.
        for i in 0..plan.n_random() {
            let direct: f64 = plan
                .row(i)
                .iter()
                .zip(plan.non_hub())
                .filter_map(|(&b, &t)| b.then(|| sig.values()[t]))
                .sum();
            assert!((rhs[i] - direct).abs() <= 1e-9 * direct.abs().max(1.0));
            let via_matrix: f64 = (0..plan.non_hub().len())
                .map(|j| a[(i, j)] * sig.values()[plan.non_hub()[j]])
                .sum();
            assert!((rhs[i] - via_matrix).abs() <= 1e-9 * via_matrix.abs().max(1.0));
        }
    }

    #[test]
    fn measure_rejects_wrong_length() {
        let (g, lg, hub) = pipeline_graph(30, 4, 6);
        let plan = build_plan(&g, &lg, &hub, 2, 1).unwrap();
        let short = DelaySignal { values: vec![0.0; g.edge_count() - 1], support: vec![] };
        assert!(matches!(
            measure(&plan, &short, NoiseModel::Noiseless),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noise_is_bounded_and_deterministic() {
        let (g, lg, hub) = pipeline_graph(30, 4, 6);
        let plan = build_plan(&g, &lg, &hub, 4, 1).unwrap();
        let sig = gen_signal(g.edge_count(), 0.1, 2).unwrap();
        let clean = measure(&plan, &sig, NoiseModel::Noiseless).unwrap();
        let noisy1 = measure(&plan, &sig, NoiseModel::AdditiveUniform { eps: 0.5, seed: 3 }).unwrap();
        let noisy2 = measure(&plan, &sig, NoiseModel::AdditiveUniform { eps: 0.5, seed: 3 }).unwrap();
        assert_eq!(noisy1.y_random, noisy2.y_random);
        for (n, c) in noisy1.y_random.iter().zip(&clean.y_random) {
            let delta = n - c;
            assert!((0.0..0.5).contains(&delta));
        }
    }

    #[test]
    fn csv_formats() {
        let (g, lg, hub) = pipeline_graph(30, 4, 4);
        let plan = build_plan(&g, &lg, &hub, 2, 8).unwrap();
        let csv = plan.rows_to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].chars().all(|c| c == '0' || c == '1'));
        assert_eq!(lines[0].len(), plan.non_hub().len());

        let rhs = DVector::from_vec(vec![3.0, 0.125]);
        let text = rhs_to_csv(&rhs);
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains('e'));
    }
}
