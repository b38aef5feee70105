//! Maps policy decisions onto environment commands for each action space.

use axcomp_core::actionspace::{
    combo_table_for, encode_prev, expanded_step, priority_to_selection, selection_mask, single_selection,
    ActionSpaceError, ActionSpaceKind, CatalogLayout, Expanded, SelectionBuffer,
};
use axcomp_core::composer::Selection;
use axcomp_core::controllers::ControllerSpec;
use axcomp_core::sim2d::Command;

use crate::policy::{Action, Head};

/// End-effector actions are `(dx, dy, dtheta)`.
pub const EE_DIM: usize = 3;

#[derive(Clone, Debug)]
pub struct ActionAdapter {
    pub kind: ActionSpaceKind,
    pub layout: CatalogLayout,
    combo: Vec<Selection>,
}

/// Result of feeding one decision to the adapter.
#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    /// An intermediate expanded-MDP choice; the environment does not move.
    Pending,
    Execute(Command),
}

impl ActionAdapter {
    pub fn new(kind: ActionSpaceKind, catalog: &[ControllerSpec], combo_cap: usize) -> Result<Self, ActionSpaceError> {
        let layout = CatalogLayout::from_catalog(catalog);
        let combo = if kind == ActionSpaceKind::Combo { combo_table_for(&layout, combo_cap)? } else { Vec::new() };
        Ok(ActionAdapter { kind, layout, combo })
    }

    pub fn catalog_len(&self) -> usize {
        self.layout.len()
    }

    pub fn head(&self) -> Head {
        let n = self.catalog_len();
        match self.kind {
            ActionSpaceKind::ExpSingle | ActionSpaceKind::ExpMulti | ActionSpaceKind::OneCtrlr => {
                Head::Discrete { actions: n }
            }
            ActionSpaceKind::Combo => Head::Discrete { actions: self.combo.len() },
            ActionSpaceKind::Priority => Head::Gaussian { dim: n },
            ActionSpaceKind::EeSpace => Head::Gaussian { dim: EE_DIM },
        }
    }

    pub fn obs_dim(&self, env_obs_dim: usize) -> usize {
        env_obs_dim + self.kind.extra_obs(self.catalog_len())
    }

    /// Environment observation plus the encoding of earlier choices.
    pub fn observe(&self, env_obs: &[f64], buffer: &SelectionBuffer) -> Vec<f64> {
        let mut o = env_obs.to_vec();
        if self.kind.is_expanded() {
            o.extend(encode_prev(self.kind, buffer, self.catalog_len()));
        }
        o
    }

    pub fn mask(&self, buffer: &SelectionBuffer) -> Option<Vec<bool>> {
        self.kind.is_expanded().then(|| selection_mask(buffer, &self.layout))
    }

    pub fn decide(&self, action: &Action, buffer: &mut SelectionBuffer) -> Decision {
        let select = |s: Selection| Decision::Execute(Command::Select(s));
        match (self.kind, action) {
            (ActionSpaceKind::ExpSingle | ActionSpaceKind::ExpMulti, Action::Discrete(a)) => {
                match expanded_step(buffer, *a, &self.layout) {
                    Expanded::Pending => Decision::Pending,
                    Expanded::Complete(s) => select(s),
                }
            }
            (ActionSpaceKind::Combo, Action::Discrete(a)) => select(self.combo[*a].clone()),
            (ActionSpaceKind::OneCtrlr, Action::Discrete(a)) => select(single_selection(*a)),
            (ActionSpaceKind::Priority, Action::Continuous(u)) => {
                let scores: Vec<f64> = u.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
                select(priority_to_selection(&scores, Some(&self.layout)))
            }
            (ActionSpaceKind::EeSpace, Action::Continuous(u)) => {
                Decision::Execute(Command::EndEffector([u[0], u[1], u[2]]))
            }
            (kind, a) => panic!("action {a:?} does not fit action space {kind}"),
        }
    }
}
