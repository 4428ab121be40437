mod common;

use caps::selector::{select_preset, target_time};
use caps::timing::PresetTimes;
use proptest::prelude::*;

fn times_strategy() -> impl Strategy<Value = PresetTimes> {
    (0u8..3, prop::collection::vec(0.01f64..20.0, 1..10))
        .prop_map(|(lo, ts)| ts.into_iter().enumerate().map(|(i, t)| (lo + i as u8, t)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn agrees_with_exhaustive_search(times in times_strategy(), target in 0.05f64..25.0) {
        let d = select_preset(&times, target).unwrap();
        prop_assert_eq!((d.preset, d.deadline_met), common::exhaustive_select(&times, target));
        prop_assert_eq!(d.predicted_time, times[&d.preset]);
        prop_assert_eq!(d.margin, target - d.predicted_time);
    }

    #[test]
    fn feasible_choice_never_exceeds_deadline(times in times_strategy(), target in 0.05f64..25.0) {
        let d = select_preset(&times, target).unwrap();
        if d.deadline_met {
            prop_assert!(d.predicted_time <= target);
            prop_assert!(times.values().all(|&t| t > target || t <= d.predicted_time));
        } else {
            prop_assert!(times.values().all(|&t| t > target));
            prop_assert_eq!(d.preset, *times.keys().next().unwrap());
        }
    }

    #[test]
    fn looser_deadline_never_picks_a_faster_preset_for_monotone_times(
        base in 0.05f64..1.0,
        growth in 1.05f64..2.5,
        t1 in 0.05f64..30.0,
        extra in 0.0f64..30.0,
    ) {
        let times: PresetTimes = (0..=8u8).map(|p| (p, base * growth.powi(i32::from(p)))).collect();
        let a = select_preset(&times, t1).unwrap();
        let b = select_preset(&times, t1 + extra).unwrap();
        prop_assert!(b.preset >= a.preset);
    }
}

#[test]
fn live_anchor() {
    let t = target_time(120, 24.0).unwrap();
    assert_eq!(t, 5.0);
    let times: PresetTimes = [0.8, 1.2, 1.9, 2.7, 3.4, 4.4, 4.9, 6.1, 7.7]
        .into_iter()
        .enumerate()
        .map(|(p, t)| (p as u8, t))
        .collect();
    let d = select_preset(&times, t).unwrap();
    assert_eq!((d.preset, d.deadline_met), (6, true));
}

#[test]
fn rejects_gaps_and_bad_times() {
    let gap: PresetTimes = [(0, 1.0), (2, 2.0)].into_iter().collect();
    assert!(select_preset(&gap, 5.0).is_err());
    let neg: PresetTimes = [(0, -1.0)].into_iter().collect();
    assert!(select_preset(&neg, 5.0).is_err());
    assert!(select_preset(&PresetTimes::new(), 5.0).is_err());
    let one: PresetTimes = [(0, 1.0)].into_iter().collect();
    assert!(select_preset(&one, 0.0).is_err());
}
