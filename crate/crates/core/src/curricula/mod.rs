//! Level scores, the prioritized level buffer and the curriculum schedulers.

mod buffer;
mod scheduler;
mod score;
mod sfl;

pub use buffer::{BufferEntry, BufferSummary, Prioritization, ScoredLevelBuffer, UpdateOutcome};
pub use scheduler::{BatchKind, BatchPlan, Method, RefreshInfo, Scheduler, SchedulerConfig, SflConfig};
pub use score::{env_values, learnability, score_l1, score_maxmc, score_pvl, ScoreFunction};
pub use sfl::{score_levels, sfl_collect, CollectSpec, ScoredLevel, SflCollection};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planted::{PlantedEnv, PlantedLevel, ScriptedPolicy};
    use crate::rng::stream;

    fn spec(n: usize, keep: usize, steps: usize) -> CollectSpec {
        CollectSpec {
            n_levels: n,
            rollout_steps: steps,
            keep,
            score: ScoreFunction::Learnability,
            solvable_only: false,
            chunk_envs: 7,
            gamma: 0.99,
        }
    }

    fn pool(ps: &[u16]) -> Vec<PlantedLevel> {
        ps.iter().enumerate().map(|(i, &p)| PlantedLevel { id: i as u64, p_milli: p }).collect()
    }

    #[test]
    fn half_rate_level_ranked_first() {
        let env = PlantedEnv::default();
        let levels = pool(&[0, 1000, 500, 1000, 0]);
        let got =
            score_levels(&env, &ScriptedPolicy { value: 0.0 }, levels, &spec(5, 2, 200), &mut stream(0, &[])).unwrap();
        assert_eq!(got.selected[0].level.p_milli, 500);
        assert!(got.selected[1].score == 0.0);
    }

    #[test]
    fn all_solved_gives_random_subset() {
        let env = PlantedEnv::default();
        let mut firsts = std::collections::HashSet::new();
        for seed in 0..20 {
            let got = score_levels(
                &env,
                &ScriptedPolicy { value: 0.0 },
                pool(&[1000; 6]),
                &spec(6, 3, 4),
                &mut stream(seed, &[]),
            )
            .unwrap();
            assert!(got.selected.iter().all(|s| s.score == 0.0));
            firsts.insert(got.selected[0].level.id);
        }
        assert!(firsts.len() > 1);
    }

    #[test]
    fn n_equals_k_keeps_everything() {
        let env = PlantedEnv::default();
        let got = sfl_collect(&env, &ScriptedPolicy { value: 0.0 }, &spec(9, 9, 3), &mut stream(2, &[])).unwrap();
        assert_eq!(got.selected.len(), 9);
    }

    #[test]
    fn zero_episode_levels_score_zero() {
        let env = PlantedEnv { episode_len: 50 };
        let got =
            score_levels(&env, &ScriptedPolicy { value: 0.0 }, pool(&[500]), &spec(1, 1, 10), &mut stream(0, &[]))
                .unwrap();
        assert_eq!(got.selected[0].score, 0.0);
        assert_eq!(got.selected[0].success, None);
    }

    #[test]
    fn bad_sizes_rejected() {
        let env = PlantedEnv::default();
        assert!(sfl_collect(&env, &ScriptedPolicy { value: 0.0 }, &spec(3, 4, 3), &mut stream(0, &[])).is_err());
        assert!(sfl_collect(&env, &ScriptedPolicy { value: 0.0 }, &spec(3, 0, 3), &mut stream(0, &[])).is_err());
    }
}
