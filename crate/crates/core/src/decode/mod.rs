//! Inference: constrained parse beam search, realisation per parse,
//! selection of the best parse/realisation pair, temperature sampling and
//! oracle-parse generation.

mod beam;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use beam::{beam_search, greedy, BeamOptions, Hypothesis, StepFn};

use crate::amr::{deanonymize, AnonTable};
use crate::error::{Error, Result};
use crate::model::{Architecture, CopyInfo, EncodedValues, Model, RecurrentState, BOS, EOS, UNK};
use crate::syntax::{delinearize, Action, ActionAutomaton, DEFAULT_MAX_DEPTH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_width: usize,
    /// Parses realised per input.
    pub n_parses: usize,
    pub max_syntax_steps: usize,
    pub max_word_steps: usize,
    pub temperature: f64,
    pub num_samples: usize,
    /// Rank finished hypotheses by per-token score.
    pub length_normalise: bool,
    /// Let the realisation emit the UNK symbol. When off, UNK is skipped
    /// during search and sampling; other tokens keep their model scores.
    pub allow_unk: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 2,
            n_parses: 2,
            max_syntax_steps: 512,
            max_word_steps: 256,
            temperature: 0.3,
            num_samples: 3,
            length_normalise: false,
            allow_unk: false,
        }
    }
}

impl DecodeConfig {
    /// Greedy pipeline decoding: one parse, width 1 for both models.
    pub fn greedy() -> Self {
        DecodeConfig {
            beam_width: 1,
            n_parses: 1,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 || self.n_parses == 0 || self.num_samples == 0 {
            return Err(Error::Config(
                "beam width, n_parses and num_samples must be at least 1".into(),
            ));
        }
        if self.max_syntax_steps == 0 || self.max_word_steps == 0 {
            return Err(Error::Config("max steps must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    fn automaton(&self) -> ActionAutomaton {
        ActionAutomaton::new(DEFAULT_MAX_DEPTH, self.max_syntax_steps)
    }
}

fn log_probs(p: &[f64]) -> Vec<f64> {
    p.iter()
        .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SyntaxState {
    rec: RecurrentState,
    prev: usize,
    automaton: ActionAutomaton,
}

/// Action-sequence search under the tree automaton.
pub struct SyntaxSearch<'a> {
    model: &'a Model,
    source: Option<&'a EncodedValues>,
}

impl<'a> SyntaxSearch<'a> {
    pub fn new(model: &'a Model, source: Option<&'a EncodedValues>) -> Self {
        SyntaxSearch { model, source }
    }

    pub fn initial(&self, automaton: ActionAutomaton) -> Result<SyntaxState> {
        Ok(SyntaxState {
            rec: self.model.syntax_initial(self.source)?,
            prev: BOS,
            automaton,
        })
    }

    /// Next-action distribution (impermissible actions have probability 0).
    pub fn distribution(&self, s: &SyntaxState) -> Result<(Vec<f64>, SyntaxState)> {
        let step = self.model.syntax_step(self.source, &s.rec, s.prev, &s.automaton)?;
        Ok((
            step.probs,
            SyntaxState {
                rec: step.state,
                prev: s.prev,
                automaton: s.automaton.clone(),
            },
        ))
    }
}

impl StepFn for SyntaxSearch<'_> {
    type State = SyntaxState;

    fn expand(&self, s: &SyntaxState) -> Result<(Vec<f64>, SyntaxState)> {
        let (p, adv) = self.distribution(s)?;
        Ok((log_probs(&p), adv))
    }

    fn push(&self, s: &SyntaxState, token: usize) -> Result<(SyntaxState, bool)> {
        let kind = self.model.action_kinds()[token]
            .ok_or_else(|| Error::Structure(format!("action id {token} has no action class")))?;
        let mut automaton = s.automaton.clone();
        automaton.apply(kind)?;
        let finished = automaton.is_finished();
        Ok((
            SyntaxState {
                rec: s.rec.clone(),
                prev: token,
                automaton,
            },
            finished,
        ))
    }
}

#[derive(Clone, Debug)]
pub struct LexState {
    rec: RecurrentState,
    prev: usize,
}

/// Word search in the extended vocabulary of one AMR; EOS ends a sentence.
pub struct LexSearch<'a> {
    model: &'a Model,
    amr: &'a EncodedValues,
    parse: Option<&'a EncodedValues>,
    copy: &'a CopyInfo,
    allow_unk: bool,
}

impl<'a> LexSearch<'a> {
    pub fn new(
        model: &'a Model,
        amr: &'a EncodedValues,
        parse: Option<&'a EncodedValues>,
        copy: &'a CopyInfo,
        allow_unk: bool,
    ) -> Self {
        LexSearch {
            model,
            amr,
            parse,
            copy,
            allow_unk,
        }
    }

    pub fn initial(&self) -> Result<LexState> {
        Ok(LexState {
            rec: self.model.lex_initial(self.amr)?,
            prev: BOS,
        })
    }

    /// Next-word probabilities; UNK is zeroed (not renormalised) unless allowed.
    pub fn distribution(&self, s: &LexState) -> Result<(Vec<f64>, LexState)> {
        let mut step = self
            .model
            .lex_step(self.amr, self.parse, self.copy, &s.rec, s.prev, None)?;
        if !self.allow_unk {
            step.probs[UNK] = 0.0;
        }
        Ok((
            step.probs,
            LexState {
                rec: step.state,
                prev: s.prev,
            },
        ))
    }
}

impl StepFn for LexSearch<'_> {
    type State = LexState;

    fn expand(&self, s: &LexState) -> Result<(Vec<f64>, LexState)> {
        let (p, adv) = self.distribution(s)?;
        Ok((log_probs(&p), adv))
    }

    fn push(&self, s: &LexState, token: usize) -> Result<(LexState, bool)> {
        // extended-vocabulary words are fed back as UNK
        let prev = if token < self.copy.vocab_size { token } else { UNK };
        Ok((
            LexState {
                rec: s.rec.clone(),
                prev,
            },
            token == EOS,
        ))
    }
}

/// One parse/realisation pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub parse: Vec<Action>,
    /// Realisation with placeholders, without EOS.
    pub tokens: Vec<String>,
    /// Deanonymized realisation.
    pub text: String,
    /// `log P(Y|X)`; zero for models without a syntax decoder.
    pub syn_score: f64,
    /// `log P(Z|X,Y)` (or `log P(Z|X)` without syntax).
    pub lex_score: f64,
    /// Position of the parse in the syntax beam.
    pub parse_rank: usize,
}

impl Candidate {
    pub fn joint_score(&self) -> f64 {
        self.syn_score + self.lex_score
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub tokens: Vec<String>,
    pub parse: Vec<Action>,
    pub joint_score: f64,
    /// Every pair, by joint score descending then parse rank.
    pub candidates: Vec<Candidate>,
    /// Log of the summed candidate probabilities; diagnostic only.
    pub log_sum_score: f64,
}

fn require(model: &Model, archs: &[Architecture], what: &str) -> Result<()> {
    if archs.contains(&model.arch()) {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{what} needs a {} model, got {}",
            join_names(archs),
            model.arch()
        )))
    }
}

fn join_names(archs: &[Architecture]) -> String {
    archs.iter().map(|a| a.name()).collect::<Vec<_>>().join(" or ")
}

fn encode_amr(model: &Model, amr_tokens: &[String]) -> Result<EncodedValues> {
    model.encode_amr(&model.vocab.amr.encode(amr_tokens))
}

fn realise(
    model: &Model,
    amr: &EncodedValues,
    parse: Option<&EncodedValues>,
    copy: &CopyInfo,
    cfg: &DecodeConfig,
) -> Result<(Vec<String>, f64)> {
    let search = LexSearch::new(model, amr, parse, copy, cfg.allow_unk);
    let opts = BeamOptions {
        width: cfg.beam_width,
        n_best: 1,
        max_steps: cfg.max_word_steps,
        length_normalise: cfg.length_normalise,
    };
    let best = beam_search(&search, search.initial()?, &opts)?.remove(0);
    let tokens = best
        .tokens
        .iter()
        .filter(|&&t| t != EOS)
        .map(|&t| model.word_token(copy, t).to_string())
        .collect();
    Ok((tokens, best.score))
}

fn candidate(parse: Vec<Action>, tokens: Vec<String>, table: &AnonTable, syn: f64, lex: f64, rank: usize) -> Candidate {
    let text = deanonymize(&tokens, table).0.join(" ");
    Candidate {
        parse,
        tokens,
        text,
        syn_score: syn,
        lex_score: lex,
        parse_rank: rank,
    }
}

fn finish(mut candidates: Vec<Candidate>) -> Generation {
    // stable: equal scores keep parse-rank order
    candidates.sort_by(|a, b| {
        b.joint_score()
            .partial_cmp(&a.joint_score())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let max = candidates[0].joint_score();
    let log_sum_score = max
        + candidates
            .iter()
            .map(|c| (c.joint_score() - max).exp())
            .sum::<f64>()
            .ln();
    let best = candidates[0].clone();
    Generation {
        joint_score: best.joint_score(),
        text: best.text,
        tokens: best.tokens,
        parse: best.parse,
        candidates,
        log_sum_score,
    }
}

/// Constrained beam search over parses for a model with a syntax decoder.
/// `text_tokens` is only read by text-to-parse models.
pub fn parse_beam(
    model: &Model,
    amr_tokens: &[String],
    text_tokens: &[String],
    cfg: &DecodeConfig,
    n_best: usize,
) -> Result<Vec<(Vec<Action>, f64)>> {
    cfg.validate()?;
    if !model.arch().has_syntax() {
        return Err(Error::Usage(format!("{} model has no syntax decoder", model.arch())));
    }
    let amr_ids = model.vocab.amr.encode(amr_tokens);
    let source = model.syntax_source(&amr_ids, &model.vocab.words.encode(text_tokens))?;
    let search = SyntaxSearch::new(model, source.as_ref());
    let opts = BeamOptions {
        width: cfg.beam_width,
        n_best,
        max_steps: cfg.max_syntax_steps,
        length_normalise: cfg.length_normalise,
    };
    beam_search(&search, search.initial(cfg.automaton())?, &opts)?
        .into_iter()
        .map(|h| Ok((model.vocab.decode_actions(&h.tokens)?, h.score)))
        .collect()
}

/// Best parse under the model (the first item of [`parse_beam`]).
pub fn predict_parse(
    model: &Model,
    amr_tokens: &[String],
    text_tokens: &[String],
    cfg: &DecodeConfig,
) -> Result<Vec<Action>> {
    Ok(parse_beam(model, amr_tokens, text_tokens, cfg, 1)?.remove(0).0)
}

/// Realise an AMR. Joint models decode `n_parses` parses, realise each and
/// keep the pair with the highest `log P(Y|X) + log P(Z|X,Y)`; the copy
/// baseline decodes words directly.
pub fn generate(model: &Model, amr_tokens: &[String], table: &AnonTable, cfg: &DecodeConfig) -> Result<Generation> {
    cfg.validate()?;
    require(model, &[Architecture::Joint, Architecture::BaselineCopy], "generation")?;
    let amr = encode_amr(model, amr_tokens)?;
    let copy = model.copy_info(amr_tokens);
    if model.arch() == Architecture::BaselineCopy {
        let (tokens, lex) = realise(model, &amr, None, &copy, cfg)?;
        return Ok(finish(vec![candidate(Vec::new(), tokens, table, 0.0, lex, 0)]));
    }
    let search = SyntaxSearch::new(model, Some(&amr));
    let opts = BeamOptions {
        width: cfg.beam_width,
        n_best: cfg.n_parses,
        max_steps: cfg.max_syntax_steps,
        length_normalise: cfg.length_normalise,
    };
    let parses = beam_search(&search, search.initial(cfg.automaton())?, &opts)?;
    let mut candidates = Vec::with_capacity(parses.len());
    for (rank, h) in parses.into_iter().enumerate() {
        let parse_enc = model.encode_parse(&h.tokens)?;
        let (tokens, lex) = realise(model, &amr, Some(&parse_enc), &copy, cfg)?;
        candidates.push(candidate(
            model.vocab.decode_actions(&h.tokens)?,
            tokens,
            table,
            h.score,
            lex,
            rank,
        ));
    }
    Ok(finish(candidates))
}

/// Realise an AMR conditioned on a given parse instead of a predicted one.
/// The syntax score is the parse's teacher-forced log-probability when
/// every action is in the vocabulary, otherwise zero.
pub fn generate_with_oracle_parse(
    model: &Model,
    amr_tokens: &[String],
    table: &AnonTable,
    parse: &[Action],
    cfg: &DecodeConfig,
) -> Result<Generation> {
    cfg.validate()?;
    require(model, &[Architecture::Joint], "oracle-parse generation")?;
    delinearize(parse)?;
    let ids = model.vocab.encode_actions(parse);
    let amr = encode_amr(model, amr_tokens)?;
    let copy = model.copy_info(amr_tokens);
    let parse_enc = model.encode_parse(&ids)?;
    let (tokens, lex) = realise(model, &amr, Some(&parse_enc), &copy, cfg)?;
    let syn = if ids.contains(&UNK) {
        0.0
    } else {
        parse_log_prob(model, Some(&amr), &ids, cfg)?
    };
    Ok(finish(vec![candidate(parse.to_vec(), tokens, table, syn, lex, 0)]))
}

fn parse_log_prob(model: &Model, source: Option<&EncodedValues>, ids: &[usize], cfg: &DecodeConfig) -> Result<f64> {
    let search = SyntaxSearch::new(model, source);
    let mut state = search.initial(cfg.automaton())?;
    let mut total = 0.0;
    for &id in ids {
        let (p, adv) = search.distribution(&state)?;
        total += p[id].ln();
        state = search.push(&adv, id)?.0;
    }
    Ok(total)
}

/// Draw an index from `probs` sharpened by `temperature`: weights
/// `p_i^(1/T)`, i.e. logits divided by T before the softmax. Zero entries
/// stay impossible.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], temperature: f64, rng: &mut R) -> Option<usize> {
    let logits: Vec<f64> = probs
        .iter()
        .map(|&p| {
            if p > 0.0 {
                p.ln() / temperature
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            if u < *w {
                return Some(i);
            }
            u -= w;
            last = Some(i);
        }
    }
    last
}

fn sample_sequence<F: StepFn, R: Rng + ?Sized>(
    f: &F,
    mut state: F::State,
    probs_of: impl Fn(&F, &F::State) -> Result<(Vec<f64>, F::State)>,
    temperature: f64,
    max_steps: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for _ in 0..max_steps {
        let (p, adv) = probs_of(f, &state)?;
        let Some(tok) = sample_index(&p, temperature, rng) else {
            break;
        };
        let (next, finished) = f.push(&adv, tok)?;
        out.push(tok);
        state = next;
        if finished {
            break;
        }
    }
    Ok(out)
}

/// Sample one action sequence from the syntax decoder. The automaton keeps
/// every sample a complete, well-formed tree.
pub fn sample_parse<R: Rng + ?Sized>(
    model: &Model,
    source: Option<&EncodedValues>,
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let search = SyntaxSearch::new(model, source);
    let init = search.initial(cfg.automaton())?;
    sample_sequence(
        &search,
        init,
        |s, st| s.distribution(st),
        cfg.temperature,
        cfg.max_syntax_steps,
        rng,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub parse: Vec<Action>,
    pub text: String,
    /// The same parse was sampled earlier for this input.
    pub duplicate: bool,
}

/// `num_samples` parses sampled at `temperature`, each realised with the
/// realisation beam. Duplicates are kept and flagged.
pub fn sample_diverse<R: Rng + ?Sized>(
    model: &Model,
    amr_tokens: &[String],
    table: &AnonTable,
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    cfg.validate()?;
    require(model, &[Architecture::Joint], "parse sampling")?;
    let amr = encode_amr(model, amr_tokens)?;
    let copy = model.copy_info(amr_tokens);
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut out = Vec::with_capacity(cfg.num_samples);
    for _ in 0..cfg.num_samples {
        let ids = sample_parse(model, Some(&amr), cfg, rng)?;
        let parse_enc = model.encode_parse(&ids)?;
        let (tokens, _) = realise(model, &amr, Some(&parse_enc), &copy, cfg)?;
        let duplicate = seen.contains(&ids);
        out.push(Sample {
            parse: model.vocab.decode_actions(&ids)?,
            text: deanonymize(&tokens, table).0.join(" "),
            duplicate,
        });
        seen.push(ids);
    }
    Ok(out)
}

/// `num_samples` realisations sampled word by word from the copy baseline.
pub fn sample_baseline<R: Rng + ?Sized>(
    model: &Model,
    amr_tokens: &[String],
    table: &AnonTable,
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<Vec<String>> {
    cfg.validate()?;
    require(model, &[Architecture::BaselineCopy], "baseline sampling")?;
    let amr = encode_amr(model, amr_tokens)?;
    let copy = model.copy_info(amr_tokens);
    let search = LexSearch::new(model, &amr, None, &copy, cfg.allow_unk);
    let mut out = Vec::with_capacity(cfg.num_samples);
    for _ in 0..cfg.num_samples {
        let ids = sample_sequence(
            &search,
            search.initial()?,
            |s, st| s.distribution(st),
            cfg.temperature,
            cfg.max_word_steps,
            rng,
        )?;
        let tokens: Vec<String> = ids
            .iter()
            .filter(|&&t| t != EOS)
            .map(|&t| model.word_token(&copy, t).to_string())
            .collect();
        out.push(deanonymize(&tokens, table).0.join(" "));
    }
    Ok(out)
}
