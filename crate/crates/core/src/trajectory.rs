/// Per-step record of one algorithm run.
///
/// `observed` is what the learner saw (mean plus noise); `mean` is the
/// noiseless reward of the same action in the same history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub actions: Vec<usize>,
    pub observed: Vec<f64>,
    pub mean: Vec<f64>,
    /// 1-based episode (or epoch) index; 0 for algorithms without episodes.
    pub episode: Vec<u32>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            actions: Vec::with_capacity(n),
            observed: Vec::with_capacity(n),
            mean: Vec::with_capacity(n),
            episode: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, action: usize, observed: f64, mean: f64, episode: u32) {
        self.actions.push(action);
        self.observed.push(observed);
        self.mean.push(mean);
        self.episode.push(episode);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Mean of the noiseless rewards over steps `from..to` (0-based, half open).
    pub fn mean_reward_over(&self, from: usize, to: usize) -> f64 {
        let slice = &self.mean[from..to];
        slice.iter().sum::<f64>() / slice.len() as f64
    }

    /// Fraction of steps spent on each of `n_actions` actions.
    pub fn action_frequencies(&self, n_actions: usize) -> Vec<f64> {
        let mut freq = vec![0.0; n_actions];
        for &a in &self.actions {
            freq[a] += 1.0;
        }
        let n = self.len().max(1) as f64;
        freq.iter_mut().for_each(|f| *f /= n);
        freq
    }
}
