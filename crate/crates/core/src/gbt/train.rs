use super::model::{logistic, TreeEnsemble, MARGIN_CLAMP};
use super::params::GbtParams;
use super::tree::{DefaultDir, TreeNode};
use super::GbtError;
use crate::matrix::FeatureMatrix;

/// Leaf weights are clamped to `±LEAF_CLAMP` before shrinkage.
pub const LEAF_CLAMP: f64 = 10.0;
/// A split is kept only if its gain exceeds this.
pub const GAIN_EPS: f64 = 1e-12;
/// Gains within this relative distance count as tied.
const TIE_REL: f64 = 1e-10;

/// Regularized split gain
/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| if h + lambda > 0.0 { g * g / (h + lambda) } else { 0.0 };
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

pub(crate) fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda > 0.0 {
        (-g / (h + lambda)).clamp(-LEAF_CLAMP, LEAF_CLAMP)
    } else {
        0.0
    }
}

/// `true` when `candidate` should replace `best` under the tolerant ordering.
pub(crate) fn beats(candidate: f64, best: f64) -> bool {
    candidate > best + TIE_REL * best.abs().max(1.0)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    default: DefaultDir,
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    params: &'a GbtParams,
    /// Per feature: observed rows sorted by (value, row).
    sorted: Vec<Vec<(f64, usize)>>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    in_node: Vec<bool>,
}

impl Grower<'_> {
    fn best_split(&mut self, rows: &[usize]) -> Option<Candidate> {
        let p = self.params;
        for &r in rows {
            self.in_node[r] = true;
        }
        let mut best: Option<Candidate> = None;
        for j in 0..self.x.n_cols() {
            let obs: Vec<(f64, usize)> = self.sorted[j].iter().copied().filter(|(_, r)| self.in_node[*r]).collect();
            if obs.len() < 2 {
                continue;
            }
            let (mut g_miss, mut h_miss, mut n_miss) = (0.0, 0.0, 0usize);
            for &r in rows {
                if self.x.get(r, j).is_none() {
                    g_miss += self.grad[r];
                    h_miss += self.hess[r];
                    n_miss += 1;
                }
            }
            let g_obs: f64 = obs.iter().map(|(_, r)| self.grad[*r]).sum();
            let h_obs: f64 = obs.iter().map(|(_, r)| self.hess[*r]).sum();
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..obs.len() - 1 {
                let (v, r) = obs[k];
                gl += self.grad[r];
                hl += self.hess[r];
                let next = obs[k + 1].0;
                if !(v < next) {
                    continue;
                }
                let mut threshold = 0.5 * (v + next);
                if !(threshold > v) {
                    threshold = next;
                }
                let (gr, hr) = (g_obs - gl, h_obs - hl);
                let dirs: &[DefaultDir] =
                    if n_miss > 0 { &[DefaultDir::Left, DefaultDir::Right] } else { &[DefaultDir::Left] };
                for &d in dirs {
                    let (gl2, hl2, gr2, hr2) = match d {
                        DefaultDir::Left => (gl + g_miss, hl + h_miss, gr, hr),
                        DefaultDir::Right => (gl, hl, gr + g_miss, hr + h_miss),
                    };
                    if hl2 < p.min_child_weight || hr2 < p.min_child_weight {
                        continue;
                    }
                    let gain = split_gain(gl2, hl2, gr2, hr2, p.lambda, p.gamma);
                    if best.is_none_or(|b| beats(gain, b.gain)) {
                        best = Some(Candidate { gain, feature: j, threshold, default: d });
                    }
                }
            }
        }
        for &r in rows {
            self.in_node[r] = false;
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> TreeNode {
        let g: f64 = rows.iter().map(|r| self.grad[*r]).sum();
        let h: f64 = rows.iter().map(|r| self.hess[*r]).sum();
        let leaf = TreeNode::Leaf { weight: leaf_weight(g, h, self.params.lambda) };
        if depth >= self.params.max_depth || rows.len() < 2 {
            return leaf;
        }
        let Some(c) = self.best_split(&rows) else {
            return leaf;
        };
        if !(c.gain > GAIN_EPS) {
            return leaf;
        }
        let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| match self.x.get(r, c.feature) {
            Some(v) => v < c.threshold,
            None => c.default == DefaultDir::Left,
        });
        TreeNode::Split {
            feature: c.feature,
            threshold: c.threshold,
            default: c.default,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }
}

fn log_loss(margins: &[f64], y: &[bool]) -> f64 {
    let n = margins.len() as f64;
    margins
        .iter()
        .zip(y)
        .map(|(m, &yi)| {
            let m = m.clamp(-MARGIN_CLAMP, MARGIN_CLAMP);
            // softplus(-m) for y=1, softplus(m) for y=0
            let z = if yi { -m } else { m };
            z.max(0.0) + (-z.abs()).exp().ln_1p()
        })
        .sum::<f64>()
        / n
}

pub fn train_gbt(x: &FeatureMatrix, y: &[bool], params: &GbtParams) -> Result<TreeEnsemble, GbtError> {
    train_gbt_traced(x, y, params).map(|(m, _)| m)
}

/// Trains and also returns the mean training log-loss before the first
/// round and after each round (`num_rounds + 1` entries).
pub fn train_gbt_traced(
    x: &FeatureMatrix,
    y: &[bool],
    params: &GbtParams,
) -> Result<(TreeEnsemble, Vec<f64>), GbtError> {
    params.validate()?;
    let n = x.n_rows();
    if y.len() != n {
        return Err(GbtError::LabelLength { labels: y.len(), rows: n });
    }
    if n < 2 {
        return Err(GbtError::TooFewRows(n));
    }
    if y.iter().all(|v| *v) || y.iter().all(|v| !*v) {
        return Err(GbtError::SingleClass);
    }
    let mut sorted = Vec::with_capacity(x.n_cols());
    for j in 0..x.n_cols() {
        let mut col: Vec<(f64, usize)> = Vec::with_capacity(n);
        for r in 0..n {
            if let Some(v) = x.get(r, j) {
                if !v.is_finite() {
                    return Err(GbtError::NonFinite(j));
                }
                col.push((v, r));
            }
        }
        col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        sorted.push(col);
    }

    let mut grower = Grower { x, params, sorted, grad: vec![0.0; n], hess: vec![0.0; n], in_node: vec![false; n] };
    let mut margins = vec![params.base_margin; n];
    let mut losses = vec![log_loss(&margins, y)];
    let mut trees = Vec::with_capacity(params.num_rounds);
    let rows: Vec<Vec<Option<f64>>> = x.rows();
    for _ in 0..params.num_rounds {
        for i in 0..n {
            let p = logistic(margins[i]);
            grower.grad[i] = p - if y[i] { 1.0 } else { 0.0 };
            grower.hess[i] = p * (1.0 - p);
        }
        let tree = grower.grow((0..n).collect(), 0);
        for (m, row) in margins.iter_mut().zip(&rows) {
            *m += params.learning_rate * tree.route(row).0;
        }
        losses.push(log_loss(&margins, y));
        trees.push(tree);
    }
    Ok((TreeEnsemble::new(trees, params.clone(), x), losses))
}
