//! Problem files and the generators behind them.
//!
//! A problem file is TOML mirroring [`ProblemSpec`]; unknown keys are
//! rejected at every level, including inside `generator_params`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use sbb_core::belief::{BeliefState, MixtureBelief, Posterior, Transition};
use sbb_core::bounds::HyperState;
use sbb_core::mdp::FiniteMdp;
use sbb_core::rng::{Domain, Streams};
use sbb_core::space::{BamdpSpace, SearchSpace};
use sbb_core::Error;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Explicit,
    RandomMdp,
    TwoArmedBandit,
    Chain,
    FiniteMixture,
}

/// One component of a finite-support prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    pub weight: f64,
    /// Flattened `(s, a, s')` table.
    pub transition: Vec<f64>,
    /// Flattened `(s, a)` table of Bernoulli reward means.
    pub mean_reward: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n_states: usize,
    pub n_actions: usize,
    /// Flattened `(s, a, s')` Dirichlet counts; all ones when absent.
    #[serde(default)]
    pub prior_transition_counts: Option<Vec<f64>>,
    /// `[alpha, beta]` per `(s, a)`; `[1, 1]` when absent.
    #[serde(default)]
    pub prior_reward_params: Option<Vec<[f64; 2]>>,
    pub gamma: f64,
    pub generator: Generator,
    #[serde(default)]
    pub generator_params: toml::Table,
    #[serde(default)]
    pub true_mdp_seed: Option<u64>,
    #[serde(default)]
    pub finite_support: Option<Vec<SupportEntry>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RandomMdpParams {
    /// Mixture components to draw; 0 keeps the conjugate prior.
    components: usize,
    /// Transitions observed from state 0 under uniformly random actions
    /// before planning starts.
    observations: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChainParams {
    slip: f64,
    small_reward: f64,
    large_reward: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            slip: 0.2,
            small_reward: 0.2,
            large_reward: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BanditParams {
    /// True arm means, when regret against a known bandit is wanted.
    means: Option<[f64; 2]>,
}

/// The search space and root of a generated problem.
#[derive(Debug, Clone)]
pub enum Instance {
    Conjugate {
        space: BamdpSpace<BeliefState>,
        root: HyperState<BeliefState>,
    },
    Mixture {
        space: BamdpSpace<MixtureBelief>,
        root: HyperState<MixtureBelief>,
    },
}

/// Runs `$body` with `$space` and `$root` bound to the instance's space and
/// root, whatever the posterior type.
#[macro_export]
macro_rules! with_instance {
    ($instance:expr, |$space:ident, $root:ident| $body:expr) => {
        match $instance {
            $crate::problem::Instance::Conjugate {
                space: $space,
                root: $root,
            } => $body,
            $crate::problem::Instance::Mixture {
                space: $space,
                root: $root,
            } => $body,
        }
    };
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    /// The finite prior support, for mixture problems.
    pub support: Option<Vec<(FiniteMdp, f64)>>,
    /// The MDP the problem was generated from, when there is one.
    pub true_mdp: Option<FiniteMdp>,
}

impl Problem {
    pub fn discount(&self) -> f64 {
        with_instance!(&self.instance, |space, _root| space.discount())
    }

    pub fn value_range(&self) -> f64 {
        with_instance!(&self.instance, |space, _root| space.value_range())
    }

    pub fn n_actions(&self) -> usize {
        with_instance!(&self.instance, |space, root| space.n_actions(root))
    }

    pub fn branching_factor(&self) -> Result<usize> {
        Ok(with_instance!(&self.instance, |space, root| space.branching_factor(root))?)
    }

    pub fn root_state(&self) -> usize {
        with_instance!(&self.instance, |_space, root| root.state)
    }
}

impl ProblemSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(format!("problem file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem specs serialize")
    }

    fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        self.generator_params
            .clone()
            .try_into()
            .map_err(|e| validation(format!("generator_params for {:?}: {e}", self.generator)))
    }

    fn prior(&self) -> Result<BeliefState> {
        let (ns, na) = (self.n_states, self.n_actions);
        let counts = self
            .prior_transition_counts
            .clone()
            .unwrap_or_else(|| vec![1.0; ns * na * ns]);
        let params = match &self.prior_reward_params {
            Some(p) => p.iter().map(|&[a, b]| (a, b)).collect(),
            None => vec![(1.0, 1.0); ns * na],
        };
        Ok(BeliefState::from_parts(ns, na, counts, params)?)
    }

    fn require_shape(&self, ns: Option<usize>, na: Option<usize>) -> Result<()> {
        if ns.is_some_and(|n| n != self.n_states) || na.is_some_and(|n| n != self.n_actions) {
            return Err(validation(format!(
                "{:?} needs {} states and {} actions, file has {} and {}",
                self.generator,
                ns.map_or("any".into(), |n| n.to_string()),
                na.map_or("any".into(), |n| n.to_string()),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    fn reject_support(&self) -> Result<()> {
        if self.finite_support.is_some() {
            return Err(validation(format!(
                "finite_support is only used by the finite_mixture generator, not {:?}",
                self.generator
            )));
        }
        Ok(())
    }
}

fn validation(msg: String) -> HarnessError {
    HarnessError::Core(Error::Validation(msg))
}

/// Builds the root hyper-state, and the finite support when there is one.
/// Deterministic given the spec.
pub fn generate_problem(spec: &ProblemSpec) -> Result<Problem> {
    if spec.n_states == 0 || spec.n_actions == 0 {
        return Err(validation("need at least one state and one action".into()));
    }
    let (ns, na, gamma) = (spec.n_states, spec.n_actions, spec.gamma);
    match spec.generator {
        Generator::Explicit => {
            spec.params::<NoParams>()?;
            spec.reject_support()?;
            conjugate(spec, spec.prior()?, 0, None)
        }
        Generator::TwoArmedBandit => {
            let params: BanditParams = spec.params()?;
            spec.require_shape(Some(1), Some(2))?;
            spec.reject_support()?;
            let truth = params
                .means
                .map(|m| FiniteMdp::new(1, 2, vec![1.0, 1.0], m.to_vec(), gamma))
                .transpose()?;
            conjugate(spec, spec.prior()?, 0, truth)
        }
        Generator::Chain => {
            let params: ChainParams = spec.params()?;
            spec.require_shape(None, Some(2))?;
            spec.reject_support()?;
            if ns < 2 {
                return Err(validation("chain needs at least two states".into()));
            }
            let truth = chain_mdp(ns, &params, gamma)?;
            conjugate(spec, spec.prior()?, 0, Some(truth))
        }
        Generator::RandomMdp => {
            let params: RandomMdpParams = spec.params()?;
            spec.reject_support()?;
            let streams = Streams::new(spec.true_mdp_seed.unwrap_or(0));
            let draw =
                |i: u64| BeliefState::uniform(ns, na).sample_mdp(gamma, &mut streams.stream(Domain::Experiment, 0, i));
            if params.components > 0 {
                let components: Vec<FiniteMdp> = (0..params.components as u64).map(draw).collect();
                let weight = 1.0 / params.components as f64;
                let support: Vec<(FiniteMdp, f64)> = components.iter().map(|m| (m.clone(), weight)).collect();
                let truth = components[0].clone();
                let belief = MixtureBelief::new(components, vec![weight; params.components])?;
                return mixture(spec, belief, support, Some(truth));
            }
            let truth = draw(0);
            let mut belief = spec.prior()?;
            let mut rng = streams.stream(Domain::Experiment, 1, 0);
            let mut s = 0;
            for _ in 0..params.observations {
                let a = rng.random_range(0..na);
                let r = u8::from(rng.random::<f64>() < truth.reward(s, a));
                let u: f64 = rng.random();
                let row = truth.row(s, a);
                let mut acc = 0.0;
                let mut s_next = ns - 1;
                for (j, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        s_next = j;
                        break;
                    }
                }
                belief = belief.posterior_update(&Transition::new(s, a, r, s_next))?;
                s = s_next;
            }
            conjugate(spec, belief, s, Some(truth))
        }
        Generator::FiniteMixture => {
            spec.params::<NoParams>()?;
            let Some(entries) = &spec.finite_support else {
                return Err(validation("finite_mixture needs a finite_support list".into()));
            };
            let mut components = Vec::with_capacity(entries.len());
            for e in entries {
                components.push(FiniteMdp::new(
                    ns,
                    na,
                    e.transition.clone(),
                    e.mean_reward.clone(),
                    gamma,
                )?);
            }
            let weights: Vec<f64> = entries.iter().map(|e| e.weight).collect();
            let support = components.iter().cloned().zip(weights.iter().copied()).collect();
            let belief = MixtureBelief::new(components, weights)?;
            mixture(spec, belief, support, None)
        }
    }
}

fn conjugate(spec: &ProblemSpec, belief: BeliefState, state: usize, truth: Option<FiniteMdp>) -> Result<Problem> {
    let space = BamdpSpace::new(spec.n_states, spec.n_actions, spec.gamma)?;
    let root = HyperState::new(state, belief);
    space.check_root(&root)?;
    Ok(Problem {
        instance: Instance::Conjugate { space, root },
        support: None,
        true_mdp: truth,
    })
}

fn mixture(
    spec: &ProblemSpec,
    belief: MixtureBelief,
    support: Vec<(FiniteMdp, f64)>,
    truth: Option<FiniteMdp>,
) -> Result<Problem> {
    let space = BamdpSpace::new(spec.n_states, spec.n_actions, spec.gamma)?;
    let root = HyperState::new(0, belief);
    space.check_root(&root)?;
    debug_assert!(root.belief.support().is_some());
    Ok(Problem {
        instance: Instance::Mixture { space, root },
        support: Some(support),
        true_mdp: truth,
    })
}

/// Action 0 moves one state along the chain and action 1 returns to the
/// start; with probability `slip` the other action's move happens instead.
/// Action 0 at the last state pays `large_reward`, action 1 pays
/// `small_reward` everywhere.
fn chain_mdp(ns: usize, params: &ChainParams, gamma: f64) -> Result<FiniteMdp> {
    if !(0.0..=1.0).contains(&params.slip) {
        return Err(validation(format!("slip {} outside [0, 1]", params.slip)));
    }
    let mut transition = vec![0.0; ns * 2 * ns];
    let mut rewards = vec![0.0; ns * 2];
    for s in 0..ns {
        let forward = (s + 1).min(ns - 1);
        let row0 = &mut transition[(s * 2) * ns..(s * 2 + 1) * ns];
        row0[forward] += 1.0 - params.slip;
        row0[0] += params.slip;
        let row1 = &mut transition[(s * 2 + 1) * ns..(s * 2 + 2) * ns];
        row1[0] += 1.0 - params.slip;
        row1[forward] += params.slip;
        rewards[s * 2] = if s == ns - 1 { params.large_reward } else { 0.0 };
        rewards[s * 2 + 1] = params.small_reward;
    }
    Ok(FiniteMdp::new(ns, 2, transition, rewards, gamma)?)
}

/// A ready-made spec for the standard two-armed Bernoulli bandit.
pub fn two_armed_bandit(gamma: f64) -> ProblemSpec {
    ProblemSpec {
        n_states: 1,
        n_actions: 2,
        prior_transition_counts: None,
        prior_reward_params: None,
        gamma,
        generator: Generator::TwoArmedBandit,
        generator_params: toml::Table::new(),
        true_mdp_seed: None,
        finite_support: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sbb_core::bounds::exact_bounds;

    #[test]
    fn bandit_has_branching_four() {
        let p = generate_problem(&two_armed_bandit(0.9)).unwrap();
        assert_eq!(p.branching_factor().unwrap(), 4);
        assert_eq!(p.n_actions(), 2);
        assert!(p.support.is_none());
    }

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let text = "n_states = 1\nn_actions = 2\ngamma = 0.9\ngenerator = \"two_armed_bandit\"\n";
        let spec = ProblemSpec::from_toml(text).unwrap();
        assert_eq!(spec, two_armed_bandit(0.9));
        assert!(ProblemSpec::from_toml(&format!("{text}colour = 3\n")).is_err());
        let bad = format!("{text}[generator_params]\nmeens = [0.1, 0.2]\n");
        let spec = ProblemSpec::from_toml(&bad).unwrap();
        assert!(generate_problem(&spec).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let mut spec = two_armed_bandit(0.8);
        spec.prior_reward_params = Some(vec![[2.0, 1.0], [1.0, 3.0]]);
        spec.generator_params
            .insert("means".into(), toml::Value::Array(vec![0.3.into(), 0.6.into()]));
        assert_eq!(ProblemSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        let p = generate_problem(&spec).unwrap();
        assert_eq!(p.true_mdp.unwrap().rewards(), &[0.3, 0.6]);
    }

    #[test]
    fn one_component_mixture_has_collapsed_bounds() {
        let text = r#"
            n_states = 2
            n_actions = 1
            gamma = 0.5
            generator = "finite_mixture"
            [[finite_support]]
            weight = 1.0
            transition = [0.5, 0.5, 0.0, 1.0]
            mean_reward = [0.3, 0.9]
        "#;
        let p = generate_problem(&ProblemSpec::from_toml(text).unwrap()).unwrap();
        let support = p.support.unwrap();
        let (lower, upper) = exact_bounds(0, &support, 0.5).unwrap();
        assert!((lower - upper).abs() < 1e-12);
    }

    #[test]
    fn random_mdp_is_deterministic() {
        let text = "n_states = 3\nn_actions = 2\ngamma = 0.9\ngenerator = \"random_mdp\"\ntrue_mdp_seed = 4\n\
                    [generator_params]\nobservations = 25\n";
        let spec = ProblemSpec::from_toml(text).unwrap();
        let (a, b) = (generate_problem(&spec).unwrap(), generate_problem(&spec).unwrap());
        assert_eq!(a.true_mdp, b.true_mdp);
        match (&a.instance, &b.instance) {
            (Instance::Conjugate { root: x, .. }, Instance::Conjugate { root: y, .. }) => assert_eq!(x, y),
            _ => panic!("expected conjugate problems"),
        }
        let mut other = spec.clone();
        other.true_mdp_seed = Some(5);
        assert_ne!(generate_problem(&other).unwrap().true_mdp, a.true_mdp);
    }

    #[test]
    fn random_mixture_and_chain() {
        let text = "n_states = 2\nn_actions = 2\ngamma = 0.9\ngenerator = \"random_mdp\"\n\
                    [generator_params]\ncomponents = 3\n";
        let p = generate_problem(&ProblemSpec::from_toml(text).unwrap()).unwrap();
        assert_eq!(p.support.as_ref().unwrap().len(), 3);
        let text = "n_states = 4\nn_actions = 2\ngamma = 0.9\ngenerator = \"chain\"\n";
        let p = generate_problem(&ProblemSpec::from_toml(text).unwrap()).unwrap();
        let chain = p.true_mdp.unwrap();
        assert_eq!(chain.row(3, 0), &[0.2, 0.0, 0.0, 0.8]);
        assert_eq!(chain.reward(3, 0), 1.0);
    }

    #[test]
    fn generator_shape_errors() {
        let mut spec = two_armed_bandit(0.9);
        spec.n_states = 2;
        assert!(matches!(
            generate_problem(&spec),
            Err(HarnessError::Core(Error::Validation(_)))
        ));
        let text = "n_states = 1\nn_actions = 2\ngamma = 0.9\ngenerator = \"finite_mixture\"\n";
        assert!(generate_problem(&ProblemSpec::from_toml(text).unwrap()).is_err());
        let mut spec = two_armed_bandit(1.0);
        assert!(generate_problem(&spec).is_err());
        spec.gamma = 0.5;
        spec.prior_reward_params = Some(vec![[1.0, 1.0]]);
        assert!(generate_problem(&spec).is_err());
    }
}
