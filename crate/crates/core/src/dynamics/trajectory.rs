use serde::{Deserialize, Serialize};

use crate::model::JointAction;

/// One best-response step: `player` switched to `action` at time `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub tau: usize,
    pub player: usize,
    pub action: usize,
    pub welfare: f64,
    pub potential: f64,
}

/// Sequence of joint actions visited by a walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    initial: JointAction,
    steps: Vec<Step>,
}

impl Trajectory {
    pub(crate) fn new(initial: JointAction) -> Self {
        Trajectory {
            initial,
            steps: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn initial(&self) -> &JointAction {
        &self.initial
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Joint action after `tau` steps (`tau = 0` is the initial state).
    pub fn joint_at(&self, tau: usize) -> JointAction {
        let mut joint = self.initial.clone();
        for step in &self.steps[..tau] {
            joint.set(step.player, step.action);
        }
        joint
    }

    pub fn final_joint(&self) -> JointAction {
        self.joint_at(self.steps.len())
    }

    /// Welfare of the last state; zero for the empty trajectory.
    pub fn final_welfare(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.welfare)
    }

    /// One JSON record per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("steps serialize"));
            out.push('\n');
        }
        out
    }
}
