use super::actions::ActionKind;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 40;
pub const DEFAULT_MAX_ACTIONS: usize = 512;

/// Tracks the partial tree built by a syntax decoder and decides which
/// actions keep it completable into a well-formed tree.
///
/// Length budget: an OPEN is allowed only if the new constituent can still
/// receive a terminal and every open constituent can be closed within
/// `max_actions`; a TERMINAL only if all closes still fit. CLOSE needs at
/// least one child in the current constituent. Together these keep the
/// permissible set non-empty until the root closes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionAutomaton {
    children: Vec<usize>,
    steps: usize,
    finished: bool,
    max_depth: usize,
    max_actions: usize,
}

/// Which action classes are currently allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Permitted {
    pub open: bool,
    pub terminal: bool,
    pub close: bool,
}

impl Permitted {
    pub fn allows(&self, kind: ActionKind) -> bool {
        match kind {
            ActionKind::Open => self.open,
            ActionKind::Terminal => self.terminal,
            ActionKind::Close => self.close,
        }
    }
}

impl Default for ActionAutomaton {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_DEPTH, DEFAULT_MAX_ACTIONS)
    }
}

impl ActionAutomaton {
    pub fn new(max_depth: usize, max_actions: usize) -> Self {
        ActionAutomaton {
            children: Vec::new(),
            steps: 0,
            finished: false,
            max_depth: max_depth.max(1),
            max_actions: max_actions.max(3),
        }
    }

    pub fn depth(&self) -> usize {
        self.children.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn permitted(&self) -> Result<Permitted> {
        if self.finished {
            return Err(Error::Usage("automaton already finished".into()));
        }
        let depth = self.depth();
        let open = depth < self.max_depth && self.steps + depth + 3 <= self.max_actions;
        if depth == 0 {
            return Ok(Permitted {
                open,
                terminal: false,
                close: false,
            });
        }
        Ok(Permitted {
            open,
            terminal: self.steps + 1 + depth <= self.max_actions,
            close: self.children[depth - 1] > 0,
        })
    }

    /// Boolean mask over an action vocabulary; entries with no kind (reserved
    /// symbols) are never permitted.
    pub fn permissible_actions(&self, kinds: &[Option<ActionKind>]) -> Result<Vec<bool>> {
        let p = self.permitted()?;
        Ok(kinds.iter().map(|k| k.is_some_and(|k| p.allows(k))).collect())
    }

    pub fn apply(&mut self, kind: ActionKind) -> Result<()> {
        if !self.permitted()?.allows(kind) {
            return Err(Error::Structure(format!(
                "{kind:?} is not permitted at depth {} after {} actions",
                self.depth(),
                self.steps
            )));
        }
        self.steps += 1;
        match kind {
            ActionKind::Open => {
                if let Some(c) = self.children.last_mut() {
                    *c += 1;
                }
                self.children.push(0);
            }
            ActionKind::Terminal => {
                *self.children.last_mut().expect("terminal requires an open constituent") += 1;
            }
            ActionKind::Close => {
                self.children.pop();
                if self.children.is_empty() {
                    self.finished = true;
                }
            }
        }
        Ok(())
    }
}
