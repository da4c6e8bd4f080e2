//! Orderings and observation sets for the simulated scenarios.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{HarnessError, Scenario, ScenarioConfig};
use crate::datamodel::ObservationSet;
use crate::poset::{build_group_ordering, build_total_ordering, build_tree_ordering, ElementId, PartialOrder};

/// One run's ordering over the cells it observes.
pub(crate) struct Layout {
    pub order: PartialOrder,
    pub omega: ObservationSet,
}

fn e(course: usize, slot: usize) -> ElementId {
    ElementId::new(course, slot)
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidSizing(msg.into())
}

/// Check sizes up front so a bad config fails before any run starts.
pub(crate) fn validate(cfg: &ScenarioConfig) -> Result<(), HarnessError> {
    let (d, n) = (cfg.d, cfg.n);
    if d == 0 || n == 0 {
        return Err(invalid("d and n must be positive"));
    }
    match cfg.scenario {
        Scenario::TreeTotal => {
            if d != 2 {
                return Err(invalid("tree_total needs d = 2"));
            }
            if !(n + 1).is_power_of_two() {
                return Err(invalid(format!("tree_total needs n = 2^(depth-1) - 1, got n = {n}")));
            }
        }
        Scenario::Tree3Level => {
            if d != 3 {
                return Err(invalid("tree_3level needs d = 3"));
            }
            if n % 7 != 0 {
                return Err(invalid(format!("tree_3level needs n divisible by 7, got n = {n}")));
            }
        }
        Scenario::UniformD2 => {
            if d != 2 {
                return Err(invalid("uniform_d2 needs d = 2"));
            }
            if !(cfg.fraction > 0.0 && cfg.fraction < 1.0) {
                return Err(invalid(format!("fraction must be in (0, 1), got {}", cfg.fraction)));
            }
        }
        Scenario::EqualGroups | Scenario::UnequalGroups => {
            if cfg.groups == 0 {
                return Err(invalid("groups must be positive"));
            }
            if cfg.scenario == Scenario::EqualGroups && n < cfg.groups {
                return Err(invalid(format!("equal_groups needs n >= groups ({})", cfg.groups)));
            }
        }
        Scenario::NonInterleaving | Scenario::Interleaving | Scenario::Binary => {}
    }
    Ok(())
}

/// Group ordering from per-course group counts, slots filled in group order.
fn group_layout(counts: &[Vec<usize>], groups: usize) -> Result<Layout, HarnessError> {
    let mut assign = Vec::new();
    let mut sizes = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        let mut slot = 0;
        for (k, &c) in row.iter().enumerate() {
            for _ in 0..c {
                assign.push((e(i, slot), k));
                slot += 1;
            }
        }
        sizes.push(slot);
    }
    Ok(Layout {
        order: build_group_ordering(&assign, groups)?,
        omega: ObservationSet::full(&sizes)?,
    })
}

pub(crate) fn build<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Layout, HarnessError> {
    let (d, n) = (cfg.d, cfg.n);
    match cfg.scenario {
        Scenario::NonInterleaving => {
            let ranked: Vec<_> = (0..d).flat_map(|i| (0..n).map(move |j| e(i, j))).collect();
            Ok(Layout {
                order: build_total_ordering(&ranked)?,
                omega: ObservationSet::full(&vec![n; d])?,
            })
        }
        Scenario::Interleaving => {
            let ranked: Vec<_> = (0..n).flat_map(|j| (0..d).map(move |i| e(i, j))).collect();
            Ok(Layout {
                order: build_total_ordering(&ranked)?,
                omega: ObservationSet::full(&vec![n; d])?,
            })
        }
        Scenario::Binary => {
            let low = (0.9 * n as f64).round() as usize;
            let counts: Vec<Vec<usize>> = (0..d)
                .map(|i| if i < d / 2 { vec![low, n - low] } else { vec![n - low, low] })
                .collect();
            group_layout(&counts, 2)
        }
        Scenario::UniformD2 => {
            let first = (cfg.fraction * n as f64).round() as usize;
            group_layout(&[vec![first, n - first], vec![n - first, first]], 2)
        }
        Scenario::EqualGroups => {
            // Sizes differ by at most one; the larger groups come first.
            let r = cfg.groups;
            let row: Vec<usize> = (0..r).map(|k| n / r + usize::from(k < n % r)).collect();
            group_layout(&vec![row; d], r)
        }
        Scenario::UnequalGroups => {
            // Ragged sizes in [n/2, n] and course-specific group mixtures, so
            // some groups can be missing from some courses.
            let r = cfg.groups;
            let lo = (n / 2).max(2).min(n);
            let counts: Vec<Vec<usize>> = (0..d)
                .map(|_| {
                    let size = rng.random_range(lo..=n);
                    let w: Vec<f64> = (0..r).map(|_| rng.random::<f64>().powi(2)).collect();
                    let total: f64 = w.iter().sum();
                    let mut row = vec![0; r];
                    for _ in 0..size {
                        let mut u = rng.random::<f64>() * total;
                        let mut k = 0;
                        while k + 1 < r && u >= w[k] {
                            u -= w[k];
                            k += 1;
                        }
                        row[k] += 1;
                    }
                    row
                })
                .collect();
            group_layout(&counts, r)
        }
        Scenario::TreeTotal => {
            // Complete binary tree of `depth` levels, one element per node,
            // last leaf removed. Inner nodes go to course 0, leaves to course 1.
            let nodes = 2 * n + 1;
            let inner = n;
            let parents: Vec<(usize, usize)> = (1..nodes - 1).map(|v| (v, (v - 1) / 2)).collect();
            let assign: Vec<_> = (0..nodes - 1)
                .map(|v| if v < inner { (e(0, v), v) } else { (e(1, v - inner), v) })
                .collect();
            Ok(Layout {
                order: build_tree_ordering(&assign, &parents)?,
                omega: ObservationSet::full(&[n, n])?,
            })
        }
        Scenario::Tree3Level => {
            // Seven nodes of k = 3m elements each (n = 7m). Per level the
            // course shares are fixed and node membership is shuffled:
            // level 1: course 0 takes all k; level 2: courses 0 and 1 take k
            // each; level 3: courses 0, 1, 2 take m, 4m, 7m.
            let m = n / 7;
            let k = 3 * m;
            let parents = [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2)];
            let mut next_slot = [0usize; 3];
            let mut assign = Vec::with_capacity(7 * k);
            let levels: [(&[usize], &[(usize, usize)]); 3] =
                [(&[0], &[(0, k)]), (&[1, 2], &[(0, k), (1, k)]), (&[3, 4, 5, 6], &[(0, m), (1, 4 * m), (2, 7 * m)])];
            for (nodes, shares) in levels {
                let mut slots: Vec<usize> = nodes.iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect();
                slots.shuffle(rng);
                let mut it = slots.into_iter();
                for &(course, count) in shares {
                    for node in it.by_ref().take(count) {
                        assign.push((e(course, next_slot[course]), node));
                        next_slot[course] += 1;
                    }
                }
            }
            Ok(Layout {
                order: build_tree_ordering(&assign, &parents)?,
                omega: ObservationSet::full(&[n, n, n])?,
            })
        }
    }
}
