//! Nature's side of the game: MNL choice sampling and parameter schedules.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assortment, AttractionVector, ItemCatalog, ParamSchedule};

/// One round's outcome. `chosen == None` is the no-purchase option.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceOutcome {
    pub chosen: Option<usize>,
    pub reward: f64,
}

impl ChoiceOutcome {
    pub const NO_PURCHASE: Self = Self {
        chosen: None,
        reward: 0.0,
    };

    /// 1-based item index, 0 for no-purchase.
    pub fn chosen_external(&self) -> usize {
        self.chosen.map_or(0, |j| j + 1)
    }
}

/// Inverse-CDF categorical draw over `S ∪ {0}` using one uniform variate.
pub fn sample_choice<R: Rng + ?Sized>(omega: &[f64], s: &Assortment, rng: &mut R) -> Option<usize> {
    let denom = 1.0 + s.items().iter().map(|&j| omega[j]).sum::<f64>();
    let u = rng.random::<f64>() * denom;
    let mut acc = 0.0;
    for &j in s.items() {
        acc += omega[j];
        if u < acc {
            return Some(j);
        }
    }
    None
}

fn standard_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // open interval keeps both logarithms finite
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

/// Gumbel-max draw: argmax over `S ∪ {0}` of `log ω_u + G_u` with `ω_0 = 1`
/// and `log 0 = −∞`.
pub fn sample_choice_gumbel<R: Rng + ?Sized>(omega: &[f64], s: &Assortment, rng: &mut R) -> Option<usize> {
    let mut best = standard_gumbel(rng);
    let mut choice = None;
    for &j in s.items() {
        let g = standard_gumbel(rng);
        if omega[j] <= 0.0 {
            continue;
        }
        let utility = omega[j].ln() + g;
        if utility > best {
            best = utility;
            choice = Some(j);
        }
    }
    choice
}

/// Samples round `t` of `schedule` for the offered assortment.
pub fn step<R: Rng + ?Sized>(
    schedule: &ParamSchedule,
    t: usize,
    s: &Assortment,
    catalog: &ItemCatalog,
    rng: &mut R,
) -> Result<ChoiceOutcome> {
    let omega = schedule.get(t)?;
    let chosen = sample_choice(omega, s, rng);
    Ok(ChoiceOutcome {
        chosen,
        reward: chosen.map_or(0.0, |j| catalog.payoff(j)),
    })
}

/// How to build a [`ParamSchedule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Stationary {
        omega: Vec<f64>,
    },
    /// `anchors[0]` holds until `breakpoints[0] − 1`, `anchors[i]` from
    /// `breakpoints[i − 1]` on.
    Piecewise {
        breakpoints: Vec<usize>,
        anchors: Vec<Vec<f64>>,
    },
    /// Linear interpolation from `from` at round 1 to `to` at round T,
    /// clamped to `[0, 1]`.
    Drift {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
}

fn check_vector(field: &str, v: &[f64], n_items: usize) -> Result<AttractionVector> {
    if v.len() != n_items {
        return Err(Error::config(
            field,
            format!("expected {n_items} entries, got {}", v.len()),
        ));
    }
    AttractionVector::new(v.to_vec()).map_err(|e| Error::config(field, e.to_string()))
}

pub fn make_schedule(spec: &ScheduleSpec, n_items: usize, horizon: usize) -> Result<ParamSchedule> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    match spec {
        ScheduleSpec::Stationary { omega } => {
            ParamSchedule::constant(check_vector("schedule.omega", omega, n_items)?, horizon)
        }
        ScheduleSpec::Piecewise { breakpoints, anchors } => {
            if anchors.len() != breakpoints.len() + 1 {
                return Err(Error::config(
                    "schedule.anchors",
                    format!(
                        "need one more anchor than breakpoints ({} breakpoints, {} anchors)",
                        breakpoints.len(),
                        anchors.len()
                    ),
                ));
            }
            if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(
                    "schedule.breakpoints",
                    "must be strictly increasing",
                ));
            }
            if let Some(b) = breakpoints.iter().find(|&&b| b < 1 || b > horizon) {
                return Err(Error::config(
                    "schedule.breakpoints",
                    format!("breakpoint {b} outside [1, {horizon}]"),
                ));
            }
            let anchors = anchors
                .iter()
                .enumerate()
                .map(|(i, a)| check_vector(&format!("schedule.anchors[{i}]"), a, n_items))
                .collect::<Result<Vec<_>>>()?;
            let values = (1..=horizon)
                .map(|t| anchors[breakpoints.partition_point(|&b| b <= t)].clone())
                .collect();
            ParamSchedule::new(values)
        }
        ScheduleSpec::Drift { from, to } => {
            for (field, v) in [("schedule.from", from), ("schedule.to", to)] {
                if v.len() != n_items {
                    return Err(Error::config(
                        field,
                        format!("expected {n_items} entries, got {}", v.len()),
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config(field, "entries must be finite"));
                }
            }
            let span = (horizon - 1).max(1) as f64;
            let values = (0..horizon)
                .map(|i| {
                    let frac = i as f64 / span;
                    let row = from
                        .iter()
                        .zip(to)
                        .map(|(a, b)| (a + (b - a) * frac).clamp(0.0, 1.0))
                        .collect();
                    AttractionVector::new(row).expect("clamped into range")
                })
                .collect();
            ParamSchedule::new(values)
        }
        ScheduleSpec::File { path } => {
            let file = ScheduleFile::load(path)?;
            if file.n_items != n_items {
                return Err(Error::config(
                    "schedule.path",
                    format!("file has {} items, catalog has {n_items}", file.n_items),
                ));
            }
            if file.horizon != horizon {
                return Err(Error::config(
                    "schedule.path",
                    format!(
                        "file horizon {} differs from configured horizon {horizon}",
                        file.horizon
                    ),
                ));
            }
            file.to_schedule()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    pub t: usize,
    pub omega: Vec<f64>,
}

/// On-disk schedule: ω is constant between consecutive breakpoints and the
/// first breakpoint is at `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub horizon: usize,
    pub n_items: usize,
    pub breakpoints: Vec<Breakpoint>,
}

impl ScheduleFile {
    pub fn from_schedule(schedule: &ParamSchedule) -> Self {
        let breakpoints = std::iter::once(1)
            .chain(schedule.change_points())
            .map(|t| Breakpoint {
                t,
                omega: schedule.omega(t).to_vec(),
            })
            .collect();
        Self {
            horizon: schedule.horizon(),
            n_items: schedule.n_items(),
            breakpoints,
        }
    }

    pub fn to_schedule(&self) -> Result<ParamSchedule> {
        let first = self
            .breakpoints
            .first()
            .ok_or_else(|| Error::config("breakpoints", "at least one breakpoint is required"))?;
        if first.t != 1 {
            return Err(Error::config(
                "breakpoints[0].t",
                "first breakpoint must be at t = 1",
            ));
        }
        if self.breakpoints.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(Error::config("breakpoints", "rounds must be strictly increasing"));
        }
        if let Some(b) = self.breakpoints.iter().find(|b| b.t > self.horizon) {
            return Err(Error::config(
                "breakpoints",
                format!("round {} beyond horizon {}", b.t, self.horizon),
            ));
        }
        let spec = ScheduleSpec::Piecewise {
            breakpoints: self.breakpoints[1..].iter().map(|b| b.t).collect(),
            anchors: self.breakpoints.iter().map(|b| b.omega.clone()).collect(),
        };
        make_schedule(&spec, self.n_items, self.horizon)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("schedule serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{choice_prob, variation_summary};
    use crate::rng::stream;
    use crate::stats::chi_square_sf;

    fn counts<F: FnMut() -> Option<usize>>(n: usize, draws: usize, mut f: F) -> Vec<u64> {
        let mut c = vec![0u64; n + 1];
        for _ in 0..draws {
            c[f().map_or(0, |j| j + 1)] += 1;
        }
        c
    }

    #[test]
    fn empty_assortment_never_purchases() {
        let mut rng = stream(1, "t", 0);
        for _ in 0..1000 {
            assert_eq!(sample_choice(&[0.9], &Assortment::empty(), &mut rng), None);
            assert_eq!(sample_choice_gumbel(&[0.9], &Assortment::empty(), &mut rng), None);
        }
    }

    #[test]
    fn zero_attraction_items_are_never_chosen_by_gumbel() {
        let mut rng = stream(1, "t", 0);
        let s = Assortment::from_sorted(vec![0, 1]);
        for _ in 0..10_000 {
            assert_eq!(sample_choice_gumbel(&[0.0, 0.0], &s, &mut rng), None);
        }
    }

    #[test]
    fn uniform_weights_give_uniform_choice() {
        let mut rng = stream(2, "t", 0);
        let s = Assortment::from_sorted(vec![0, 1, 2]);
        let draws = 100_000;
        let c = counts(3, draws, || sample_choice(&[1.0; 3], &s, &mut rng));
        for &x in &c {
            let p = x as f64 / draws as f64;
            assert!(
                (p - 0.25).abs() < 4.0 * (0.25 * 0.75 / draws as f64).sqrt(),
                "{c:?}"
            );
        }
    }

    #[test]
    fn gumbel_two_way_race_is_fair() {
        let mut rng = stream(3, "t", 0);
        let s = Assortment::from_sorted(vec![0]);
        let draws = 100_000;
        let c = counts(1, draws, || sample_choice_gumbel(&[1.0], &s, &mut rng));
        let p = c[1] as f64 / draws as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / draws as f64).sqrt());
    }

    #[test]
    fn inverse_cdf_frequencies_match_mnl() {
        let omega = [0.2, 0.4];
        let s = Assortment::from_sorted(vec![0, 1]);
        let expected = [
            choice_prob(&omega, &s, None).unwrap(),
            choice_prob(&omega, &s, Some(0)).unwrap(),
            choice_prob(&omega, &s, Some(1)).unwrap(),
        ];
        assert!((expected[0] - 0.625).abs() < 1e-15);
        let draws = 100_000;
        let mut rng = stream(4, "t", 0);
        let c = counts(2, draws, || sample_choice(&omega, &s, &mut rng));
        let stat: f64 = c
            .iter()
            .zip(expected)
            .map(|(&o, p)| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi_square_sf(stat, 2.0) > 1e-3, "stat {stat}");
    }

    #[test]
    fn step_rewards_follow_payoffs() {
        let cat = ItemCatalog::new(2, vec![0.7, 0.0]).unwrap();
        let sched = ParamSchedule::constant(AttractionVector::new(vec![1.0, 1.0]).unwrap(), 5).unwrap();
        let s = Assortment::from_sorted(vec![0, 1]);
        let mut rng = stream(5, "t", 0);
        for t in 1..=5 {
            let o = step(&sched, t, &s, &cat, &mut rng).unwrap();
            match o.chosen {
                Some(0) => assert_eq!(o.reward, 0.7),
                _ => assert_eq!(o.reward, 0.0),
            }
        }
        assert_eq!(
            step(&sched, 3, &Assortment::empty(), &cat, &mut rng).unwrap(),
            ChoiceOutcome::NO_PURCHASE
        );
        assert!(matches!(
            step(&sched, 0, &s, &cat, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            step(&sched, 6, &s, &cat, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn step_is_deterministic_given_the_seed() {
        let cat = ItemCatalog::uniform(3, 2).unwrap();
        let sched = ParamSchedule::constant(AttractionVector::new(vec![0.4, 0.6, 0.2]).unwrap(), 50).unwrap();
        let s = Assortment::from_sorted(vec![0, 2]);
        let run = |seed| {
            let mut rng = stream(seed, "env", 0);
            (1..=50)
                .map(|t| step(&sched, t, &s, &cat, &mut rng).unwrap().chosen)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn stationary_and_piecewise_schedules() {
        let st = make_schedule(
            &ScheduleSpec::Stationary {
                omega: vec![0.3, 0.3],
            },
            2,
            20,
        )
        .unwrap();
        let v = variation_summary(&st, 1);
        assert_eq!((v.switches, v.var_2k), (1, 0.0));

        let spec = ScheduleSpec::Piecewise {
            breakpoints: vec![5, 10, 15],
            anchors: vec![vec![0.1, 0.2], vec![0.3, 0.2], vec![0.3, 0.9], vec![0.0, 0.0]],
        };
        let pw = make_schedule(&spec, 2, 20).unwrap();
        assert_eq!(variation_summary(&pw, 1).switches, 4);
        assert_eq!(pw.omega(4).as_slice(), &[0.1, 0.2]);
        assert_eq!(pw.omega(5).as_slice(), &[0.3, 0.2]);
        assert_eq!(pw.omega(20).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn drift_variation_telescopes() {
        let (n, k, horizon) = (4, 2, 101);
        let spec = ScheduleSpec::Drift {
            from: vec![0.0; n],
            to: vec![1.0; n],
        };
        let s = make_schedule(&spec, n, horizon).unwrap();
        let v = variation_summary(&s, k);
        // closed form: min(N, 2K) coordinates each travel distance 1
        assert!((v.var_2k - n.min(2 * k) as f64).abs() < 1e-9, "{}", v.var_2k);
        assert_eq!(s.omega(horizon).as_slice(), &[1.0; 4]);
    }

    #[test]
    fn drift_clamps_out_of_range_endpoints() {
        let spec = ScheduleSpec::Drift {
            from: vec![-1.0],
            to: vec![2.0],
        };
        let s = make_schedule(&spec, 1, 4).unwrap();
        let col: Vec<f64> = s.iter().map(|w| w[0]).collect();
        assert_eq!(col, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn malformed_specs_name_the_field() {
        let bad = [
            (ScheduleSpec::Stationary { omega: vec![0.3] }, "schedule.omega"),
            (
                ScheduleSpec::Stationary {
                    omega: vec![0.3, 1.3],
                },
                "schedule.omega",
            ),
            (
                ScheduleSpec::Piecewise {
                    breakpoints: vec![5, 3],
                    anchors: vec![vec![0.1, 0.1]; 3],
                },
                "schedule.breakpoints",
            ),
            (
                ScheduleSpec::Piecewise {
                    breakpoints: vec![50],
                    anchors: vec![vec![0.1, 0.1]; 2],
                },
                "schedule.breakpoints",
            ),
            (
                ScheduleSpec::Piecewise {
                    breakpoints: vec![5],
                    anchors: vec![vec![0.1, 0.1]; 3],
                },
                "schedule.anchors",
            ),
            (
                ScheduleSpec::Drift {
                    from: vec![0.0, f64::NAN],
                    to: vec![0.0, 0.0],
                },
                "schedule.from",
            ),
        ];
        for (spec, field) in bad {
            match make_schedule(&spec, 2, 20) {
                Err(Error::Config { field: f, .. }) => assert!(f.starts_with(field), "{f} vs {field}"),
                other => panic!("expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn schedule_file_round_trip() {
        let spec = ScheduleSpec::Piecewise {
            breakpoints: vec![3, 7],
            anchors: vec![vec![0.1, 0.2], vec![0.5, 0.2], vec![0.5, 0.25]],
        };
        let s = make_schedule(&spec, 2, 10).unwrap();
        let file = ScheduleFile::from_schedule(&s);
        assert_eq!(
            file.breakpoints.iter().map(|b| b.t).collect::<Vec<_>>(),
            vec![1, 3, 7]
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        file.save(&path).unwrap();
        let back = make_schedule(&ScheduleSpec::File { path: path.clone() }, 2, 10).unwrap();
        assert_eq!(back, s);
        assert!(matches!(
            make_schedule(&ScheduleSpec::File { path: path.clone() }, 2, 11),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn schedule_file_must_start_at_round_one() {
        let file: ScheduleFile = serde_json::from_str(
            r#"{"horizon": 5, "n_items": 1, "breakpoints": [{"t": 2, "omega": [0.5]}]}"#,
        )
        .unwrap();
        assert!(matches!(file.to_schedule(), Err(Error::Config { .. })));
    }
}
