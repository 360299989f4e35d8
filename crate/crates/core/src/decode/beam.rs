use std::cmp::Ordering;

use crate::error::{Error, Result};

/// A left-to-right search problem. `expand` scores every continuation of a
/// state and returns the state advanced past its last token (for recurrent
/// models, the new hidden state); `push` appends one token to that advanced
/// state.
pub trait StepFn {
    type State: Clone;

    /// Log-probability of every next token (`-inf` if impossible) and the
    /// advanced state.
    fn expand(&self, state: &Self::State) -> Result<(Vec<f64>, Self::State)>;

    /// Append `token`; returns the new state and whether it is complete.
    fn push(&self, advanced: &Self::State, token: usize) -> Result<(Self::State, bool)>;
}

#[derive(Clone, Debug)]
pub struct Hypothesis<S> {
    pub tokens: Vec<usize>,
    /// Sum of the chosen tokens' log-probabilities.
    pub score: f64,
    pub state: S,
    pub finished: bool,
}

impl<S> Hypothesis<S> {
    fn rank_score(&self, length_normalise: bool) -> f64 {
        if length_normalise && !self.tokens.is_empty() {
            self.score / self.tokens.len() as f64
        } else {
            self.score
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamOptions {
    pub width: usize,
    /// Number of hypotheses to return.
    pub n_best: usize,
    pub max_steps: usize,
    pub length_normalise: bool,
}

fn by_score_desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Beam search in which finished hypotheses leave the beam for a k-best
/// list and the live beam shrinks accordingly. Stops when nothing is live,
/// the k-best list holds `width` items, or after `max_steps`. Returns the top
/// `n_best` finished hypotheses, padded with the best unfinished ones when
/// fewer than `n_best` completed.
///
/// Candidates are ranked by score, then parent rank, then token id, so
/// width 1 coincides with [`greedy`].
pub fn beam_search<F: StepFn>(f: &F, init: F::State, opts: &BeamOptions) -> Result<Vec<Hypothesis<F::State>>> {
    if opts.width == 0 || opts.n_best == 0 {
        return Err(Error::Config("beam width and n-best must be at least 1".into()));
    }
    if opts.max_steps == 0 {
        return Err(Error::Config("max steps must be at least 1".into()));
    }
    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        score: 0.0,
        state: init,
        finished: false,
    }];
    let mut kbest: Vec<Hypothesis<F::State>> = Vec::new();
    for _ in 0..opts.max_steps {
        if live.is_empty() || kbest.len() >= opts.width {
            break;
        }
        let mut advanced = Vec::with_capacity(live.len());
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (i, h) in live.iter().enumerate() {
            let (logp, adv) = f.expand(&h.state)?;
            for (tok, lp) in logp.iter().enumerate() {
                if *lp > f64::NEG_INFINITY {
                    cands.push((h.score + lp, i, tok));
                }
            }
            advanced.push(adv);
        }
        cands.sort_by(|a, b| by_score_desc(a.0, b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        cands.truncate(opts.width - kbest.len());
        let mut next = Vec::with_capacity(cands.len());
        for (score, parent, tok) in cands {
            let (state, finished) = f.push(&advanced[parent], tok)?;
            let mut tokens = live[parent].tokens.clone();
            tokens.push(tok);
            let h = Hypothesis {
                tokens,
                score,
                state,
                finished,
            };
            if finished {
                kbest.push(h);
            } else {
                next.push(h);
            }
        }
        live = next;
    }
    let ln = opts.length_normalise;
    kbest.sort_by(|a, b| by_score_desc(a.rank_score(ln), b.rank_score(ln)));
    if kbest.len() < opts.n_best {
        live.sort_by(|a, b| by_score_desc(a.rank_score(ln), b.rank_score(ln)));
        kbest.extend(live);
    }
    kbest.truncate(opts.n_best);
    Ok(kbest)
}

/// Pick the most probable token at every step (lowest id on ties).
pub fn greedy<F: StepFn>(f: &F, init: F::State, max_steps: usize) -> Result<Hypothesis<F::State>> {
    if max_steps == 0 {
        return Err(Error::Config("max steps must be at least 1".into()));
    }
    let mut h = Hypothesis {
        tokens: Vec::new(),
        score: 0.0,
        state: init,
        finished: false,
    };
    for _ in 0..max_steps {
        let (logp, adv) = f.expand(&h.state)?;
        let mut best: Option<(usize, f64)> = None;
        for (tok, lp) in logp.iter().enumerate() {
            if *lp > f64::NEG_INFINITY && best.is_none_or(|(_, b)| *lp > b) {
                best = Some((tok, *lp));
            }
        }
        let Some((tok, lp)) = best else { break };
        let (state, finished) = f.push(&adv, tok)?;
        h.tokens.push(tok);
        h.score += lp;
        h.state = state;
        h.finished = finished;
        if finished {
            break;
        }
    }
    Ok(h)
}
