//! Policy action spaces: how raw policy outputs become controller selections.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composer::{CommandTarget, Selection, MAX_ROTATIONAL};
use crate::controllers::ControllerSpec;
use crate::geom::{RotVec, Vec3};

/// Controllers chosen per environment step.
pub const N_C: usize = 3;

/// Default upper bound on the combination table size.
pub const DEFAULT_COMBO_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpaceKind {
    /// Expanded MDP, previous choices merged into one binary vector.
    ExpSingle,
    /// Expanded MDP, one one-hot per previous slot.
    ExpMulti,
    /// One discrete action per ordered combination.
    Combo,
    /// Continuous priority score per controller, top three executed.
    Priority,
    /// A single controller per step.
    OneCtrlr,
    /// Direct end-effector delta poses.
    EeSpace,
}

impl ActionSpaceKind {
    pub const ALL: [ActionSpaceKind; 6] = [
        ActionSpaceKind::ExpSingle,
        ActionSpaceKind::ExpMulti,
        ActionSpaceKind::Combo,
        ActionSpaceKind::Priority,
        ActionSpaceKind::OneCtrlr,
        ActionSpaceKind::EeSpace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionSpaceKind::ExpSingle => "exp_single",
            ActionSpaceKind::ExpMulti => "exp_multi",
            ActionSpaceKind::Combo => "combo",
            ActionSpaceKind::Priority => "priority",
            ActionSpaceKind::OneCtrlr => "one_ctrlr",
            ActionSpaceKind::EeSpace => "ee_space",
        }
    }

    pub fn is_expanded(self) -> bool {
        matches!(self, ActionSpaceKind::ExpSingle | ActionSpaceKind::ExpMulti)
    }

    /// Decisions the policy makes per environment step.
    pub fn decisions_per_step(self) -> usize {
        if self.is_expanded() {
            N_C
        } else {
            1
        }
    }

    /// Extra observation entries encoding previous intermediate choices.
    pub fn extra_obs(self, n: usize) -> usize {
        match self {
            ActionSpaceKind::ExpSingle => n,
            ActionSpaceKind::ExpMulti => n * (N_C - 1),
            _ => 0,
        }
    }
}

impl fmt::Display for ActionSpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionSpaceError {
    #[error(
        "unknown action space `{0}` (expected one of exp_single, exp_multi, combo, priority, one_ctrlr, ee_space)"
    )]
    Unknown(String),
    #[error("combination table would have {size} entries, above the cap of {cap}; use an expanded action space")]
    ComboTooLarge { size: usize, cap: usize },
    #[error("catalog of {0} controllers is smaller than {N_C}")]
    CatalogTooSmall(usize),
}

impl FromStr for ActionSpaceKind {
    type Err = ActionSpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionSpaceKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| ActionSpaceError::Unknown(s.to_string()))
    }
}

/// Which catalog entries are rotation controllers, and which one is null.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogLayout {
    pub rotation: Vec<bool>,
    pub null: usize,
}

impl CatalogLayout {
    /// The null controller must be present and last.
    pub fn from_catalog(catalog: &[ControllerSpec]) -> Self {
        let null = catalog.len() - 1;
        assert!(catalog[null].is_null(), "catalog must end with the null controller");
        CatalogLayout { rotation: catalog.iter().map(|c| c.is_rotation()).collect(), null }
    }

    /// Layout with no rotation controllers and null last.
    pub fn plain(n: usize) -> Self {
        CatalogLayout { rotation: vec![false; n], null: n - 1 }
    }

    pub fn len(&self) -> usize {
        self.rotation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotation.is_empty()
    }

    fn rotations_in(&self, chosen: &[usize]) -> usize {
        chosen.iter().filter(|&&i| i != self.null && self.rotation[i]).count()
    }
}

/// Partial selection built during the intermediate steps of the expanded MDP.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SelectionBuffer {
    pub chosen: Vec<usize>,
}

impl SelectionBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn clear(&mut self) {
        self.chosen.clear();
    }
}

/// Previous-choice encoding appended to the observation. The null controller
/// (last index) encodes as all zeros.
pub fn encode_prev(kind: ActionSpaceKind, buffer: &SelectionBuffer, n: usize) -> Vec<f64> {
    let null = n - 1;
    match kind {
        ActionSpaceKind::ExpSingle => {
            let mut v = vec![0.0; n];
            for &i in buffer.chosen.iter().filter(|&&i| i != null) {
                v[i] = 1.0;
            }
            v
        }
        ActionSpaceKind::ExpMulti => {
            let mut v = vec![0.0; n * (N_C - 1)];
            for (slot, &i) in buffer.chosen.iter().take(N_C - 1).enumerate() {
                if i != null {
                    v[slot * n + i] = 1.0;
                }
            }
            v
        }
        _ => Vec::new(),
    }
}

/// Allowed actions at the next intermediate step: chosen non-null controllers
/// are disabled, and so are rotation controllers once two are chosen.
pub fn selection_mask(buffer: &SelectionBuffer, layout: &CatalogLayout) -> Vec<bool> {
    let rot_full = layout.rotations_in(&buffer.chosen) >= MAX_ROTATIONAL;
    (0..layout.len())
        .map(|i| i == layout.null || (!buffer.chosen.contains(&i) && !(rot_full && layout.rotation[i])))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expanded {
    /// More choices needed; the environment does not advance.
    Pending,
    Complete(Selection),
}

/// Appends one intermediate choice; after `N_C` choices returns the selection
/// in choice order (first choice = priority 0) and clears the buffer.
pub fn expanded_step(buffer: &mut SelectionBuffer, action: usize, layout: &CatalogLayout) -> Expanded {
    debug_assert!(selection_mask(buffer, layout)[action], "masked action {action}");
    buffer.chosen.push(action);
    if buffer.chosen.len() < N_C {
        return Expanded::Pending;
    }
    let sel = Selection::new(std::mem::take(&mut buffer.chosen));
    Expanded::Complete(sel)
}

fn enumerate(n: usize, null: usize, keep: impl Fn(&[usize]) -> bool) -> Vec<Selection> {
    let mut out = Vec::new();
    let mut t = [0usize; N_C];
    loop {
        let distinct = (0..N_C).all(|a| t[a] == null || (0..a).all(|b| t[b] != t[a]));
        if distinct && keep(&t) {
            out.push(Selection::new(t.to_vec()));
        }
        let mut k = N_C;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            t[k] += 1;
            if t[k] < n {
                break;
            }
            t[k] = 0;
        }
    }
}

fn table_size(n: usize) -> usize {
    // Distinct non-null entries with repeatable null: sum over null counts.
    let m = n.saturating_sub(1);
    let perm = |k: usize| (0..k).fold(1usize, |acc, i| acc.saturating_mul(m.saturating_sub(i)));
    let choose = [1usize, 3, 3, 1];
    (0..=N_C).map(|nulls| choose[nulls].saturating_mul(perm(N_C - nulls))).fold(0usize, |a, b| a.saturating_add(b))
}

/// All ordered `N_C`-tuples over `n` controllers (null = `n - 1`) with no
/// repeated non-null entry, in lexicographic order.
pub fn combo_table(n: usize, cap: usize) -> Result<Vec<Selection>, ActionSpaceError> {
    if n < N_C {
        return Err(ActionSpaceError::CatalogTooSmall(n));
    }
    let size = table_size(n);
    if size > cap {
        return Err(ActionSpaceError::ComboTooLarge { size, cap });
    }
    Ok(enumerate(n, n - 1, |_| true))
}

/// `combo_table` restricted to selections the composer accepts for this
/// catalog (at most two rotation controllers).
pub fn combo_table_for(layout: &CatalogLayout, cap: usize) -> Result<Vec<Selection>, ActionSpaceError> {
    let n = layout.len();
    if n < N_C {
        return Err(ActionSpaceError::CatalogTooSmall(n));
    }
    let size = table_size(n);
    if size > cap {
        return Err(ActionSpaceError::ComboTooLarge { size, cap });
    }
    Ok(enumerate(n, layout.null, |t| layout.rotations_in(t) <= MAX_ROTATIONAL))
}

/// Top `N_C` controllers by score, highest first, ties to the lower index.
/// With a layout, a third rotation controller is skipped in favour of the next
/// best entry.
pub fn priority_to_selection(scores: &[f64], layout: Option<&CatalogLayout>) -> Selection {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen = Vec::with_capacity(N_C);
    for i in order {
        if chosen.len() == N_C {
            break;
        }
        if let Some(l) = layout {
            if l.rotation[i] && l.rotations_in(&chosen) >= MAX_ROTATIONAL {
                continue;
            }
        }
        chosen.push(i);
    }
    Selection::new(chosen)
}

/// One-controller action space: the action is the controller index.
pub fn single_selection(action: usize) -> Selection {
    Selection::new(vec![action])
}

/// Scales a clamped `(dx, dy, dtheta)` action into a planar delta-pose target.
pub fn ee_action_to_target(action: &[f64; 3], limits: (f64, f64)) -> CommandTarget {
    let a = action.map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) });
    let (dx, dr) = limits;
    CommandTarget::from_delta(Vec3::new(a[0] * dx, a[1] * dx, 0.0), RotVec(Vec3::new(0.0, 0.0, a[2] * dr)))
}
