//! Semantic invariants of the robustness evaluators, checked against an
//! independent brute-force recursion and finite differences.

use planner_core::stl::{
    eval_agm, eval_agm_gradient, eval_robust, EvalError, Formula, Interval, Predicate, Signal,
    TimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHANNELS: [&str; 3] = ["s0", "s1", "s2"];

// ---------------------------------------------------------------------------
// Brute-force oracle: a direct transcription of the recursive semantics,
// independent of the production evaluator (no compilation, no memoization).
// ---------------------------------------------------------------------------

/// Evaluates robustness recursively; `None` when a window is empty. Every
/// intermediate robustness value is appended to `trace`.
fn brute(
    formula: &Formula<f64>,
    signal: &Signal<f64>,
    k: usize,
    trace: &mut Vec<f64>,
) -> Option<f64> {
    let value = match formula {
        Formula::Pred(p) => {
            let mut v = p.offset();
            for (name, w) in p.coefficients() {
                v += w * signal.channel(name).expect("known channel")[k];
            }
            Some(v)
        }
        Formula::Not(inner) => brute(inner, signal, k, trace).map(|v| -v),
        Formula::And(children) => children
            .iter()
            .map(|c| brute(c, signal, k, trace))
            .collect::<Option<Vec<_>>>()
            .map(|vs| vs.into_iter().fold(f64::INFINITY, f64::min)),
        Formula::Or(children) => children
            .iter()
            .map(|c| brute(c, signal, k, trace))
            .collect::<Option<Vec<_>>>()
            .map(|vs| vs.into_iter().fold(f64::NEG_INFINITY, f64::max)),
        Formula::Always(w, inner) => {
            let (lo, hi) = window(w, k, signal.grid())?;
            (lo..=hi)
                .map(|t| brute(inner, signal, t, trace))
                .collect::<Option<Vec<_>>>()
                .map(|vs| vs.into_iter().fold(f64::INFINITY, f64::min))
        }
        Formula::Eventually(w, inner) => {
            let (lo, hi) = window(w, k, signal.grid())?;
            (lo..=hi)
                .map(|t| brute(inner, signal, t, trace))
                .collect::<Option<Vec<_>>>()
                .map(|vs| vs.into_iter().fold(f64::NEG_INFINITY, f64::max))
        }
        Formula::Next(w, inner) => {
            let (lo, _) = window(w, k, signal.grid())?;
            brute(inner, signal, lo, trace)
        }
        Formula::Until(w, left, right) => {
            let (lo, hi) = window(w, k, signal.grid())?;
            let mut best: Option<f64> = None;
            for t in lo..=hi {
                let right_v = brute(right, signal, t, trace)?;
                let mut inner = right_v;
                for tt in k..=t {
                    inner = inner.min(brute(left, signal, tt, trace)?);
                }
                best = Some(match best {
                    None => inner,
                    Some(b) => b.max(inner),
                });
            }
            best
        }
    };
    if let Some(v) = value {
        trace.push(v);
    }
    value
}

/// Window rule restated from the definition: round to nearest sample with
/// ties toward the lower index, clip at the horizon, empty when fully
/// beyond it.
fn window(interval: &Interval, k: usize, grid: &TimeGrid) -> Option<(usize, usize)> {
    let to_samples =
        |seconds: f64| ((seconds / grid.sampling_period()) - 0.5).ceil().max(0.0) as usize;
    let lo = k + to_samples(interval.lower());
    let hi = k + to_samples(interval.upper());
    let last = grid.sample_count() - 1;
    if lo > last {
        None
    } else {
        Some((lo, hi.min(last)))
    }
}

// ---------------------------------------------------------------------------
// Random generators.
// ---------------------------------------------------------------------------

fn random_signal(rng: &mut ChaCha8Rng, samples: usize, period: f64) -> Signal<f64> {
    let grid = TimeGrid::new(period, samples).unwrap();
    let mut signal = Signal::new(grid);
    for name in CHANNELS {
        let values = (0..samples).map(|_| rng.gen_range(-2.0..2.0)).collect();
        signal.add_channel(name, values).unwrap();
    }
    signal
}

fn random_interval(rng: &mut ChaCha8Rng, period: f64) -> Interval {
    let lo = rng.gen_range(0..=3u32) as f64 * period;
    let width = rng.gen_range(0..=4u32) as f64 * period;
    Interval::new(lo, lo + width).unwrap()
}

fn random_predicate(rng: &mut ChaCha8Rng) -> Predicate<f64> {
    let mut pred = Predicate::constant(rng.gen_range(-1.0..1.0));
    for _ in 0..rng.gen_range(1..=2) {
        let channel = CHANNELS[rng.gen_range(0..CHANNELS.len())];
        let weight = rng.gen_range(0.3..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        pred = pred.plus_term(channel, weight);
    }
    pred
}

fn random_formula(rng: &mut ChaCha8Rng, depth: usize, period: f64, allow_not: bool) -> Formula<f64> {
    if depth == 0 {
        return Formula::pred(random_predicate(rng));
    }
    let choice = rng.gen_range(0..if allow_not { 8 } else { 7 });
    match choice {
        0 => Formula::pred(random_predicate(rng)),
        1 | 2 => {
            let n = rng.gen_range(2..=3);
            let children =
                (0..n).map(|_| random_formula(rng, depth - 1, period, allow_not)).collect();
            if choice == 1 {
                Formula::And(children)
            } else {
                Formula::Or(children)
            }
        }
        3 => Formula::always(
            random_interval(rng, period),
            random_formula(rng, depth - 1, period, allow_not),
        ),
        4 => Formula::eventually(
            random_interval(rng, period),
            random_formula(rng, depth - 1, period, allow_not),
        ),
        5 => Formula::next(
            random_interval(rng, period),
            random_formula(rng, depth - 1, period, allow_not),
        ),
        6 => Formula::until(
            random_interval(rng, period),
            random_formula(rng, depth - 1, period, allow_not),
            random_formula(rng, depth - 1, period, allow_not),
        ),
        _ => Formula::not(random_formula(rng, depth - 1, period, allow_not)),
    }
}

fn bump_nth_pred(formula: &Formula<f64>, target: usize, delta: f64) -> (Formula<f64>, usize) {
    fn walk(f: &Formula<f64>, target: usize, delta: f64, seen: &mut usize) -> Formula<f64> {
        match f {
            Formula::Pred(p) => {
                let index = *seen;
                *seen += 1;
                if index == target {
                    Formula::Pred(p.clone().plus_offset(delta))
                } else {
                    Formula::Pred(p.clone())
                }
            }
            Formula::Not(inner) => Formula::not(walk(inner, target, delta, seen)),
            Formula::And(children) => {
                Formula::And(children.iter().map(|c| walk(c, target, delta, seen)).collect())
            }
            Formula::Or(children) => {
                Formula::Or(children.iter().map(|c| walk(c, target, delta, seen)).collect())
            }
            Formula::Always(w, inner) => Formula::always(*w, walk(inner, target, delta, seen)),
            Formula::Eventually(w, inner) => {
                Formula::eventually(*w, walk(inner, target, delta, seen))
            }
            Formula::Next(w, inner) => Formula::next(*w, walk(inner, target, delta, seen)),
            Formula::Until(w, l, r) => Formula::until(
                *w,
                walk(l, target, delta, seen),
                walk(r, target, delta, seen),
            ),
        }
    }
    let mut seen = 0;
    let bumped = walk(formula, target, delta, &mut seen);
    (bumped, seen)
}

// ---------------------------------------------------------------------------
// Properties.
// ---------------------------------------------------------------------------

#[test]
fn exact_evaluator_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let period = 0.5;
    for case in 0..300 {
        let signal = random_signal(&mut rng, 64, period);
        let depth = rng.gen_range(1..=4);
        let formula = random_formula(&mut rng, depth, period, true);
        let k = if case % 3 == 0 { rng.gen_range(0..64) } else { 0 };
        let mut trace = Vec::new();
        match (brute(&formula, &signal, k, &mut trace), eval_robust(&formula, &signal, k)) {
            (Some(expected), Ok(actual)) => {
                assert_eq!(actual, expected, "case {case}: exact mismatch");
            }
            (None, Err(EvalError::EmptyWindow { .. })) => {}
            (oracle, production) => {
                panic!("case {case}: oracle {oracle:?} vs production {production:?}")
            }
        }
    }
}

#[test]
fn smooth_sign_agrees_with_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let period = 0.5;
    let mut checked = 0;
    for _ in 0..400 {
        let signal = random_signal(&mut rng, 64, period);
        let depth = rng.gen_range(1..=4);
        let formula = random_formula(&mut rng, depth, period, true);
        let mut trace = Vec::new();
        let Some(exact) = brute(&formula, &signal, 0, &mut trace) else { continue };
        if trace.iter().any(|v| v.abs() < 1e-9) {
            continue;
        }
        let smooth = eval_agm(&formula, &signal, 0).unwrap();
        assert_eq!(
            exact > 0.0,
            smooth > 0.0,
            "sign mismatch: exact {exact} vs smooth {smooth}"
        );
        checked += 1;
    }
    assert!(checked > 200, "sign-soundness exercised only {checked} cases");
}

#[test]
fn negation_flips_robustness() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let period = 0.5;
    for _ in 0..200 {
        let signal = random_signal(&mut rng, 32, period);
        let depth = rng.gen_range(1..=3);
        let formula = random_formula(&mut rng, depth, period, true);
        let negated = Formula::not(formula.clone());
        match (eval_robust(&formula, &signal, 0), eval_robust(&negated, &signal, 0)) {
            (Ok(v), Ok(nv)) => assert_eq!(nv, -v),
            (Err(_), Err(_)) => {}
            other => panic!("negation changed error behavior: {other:?}"),
        }
    }
}

#[test]
fn eventually_is_dual_of_always() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let period = 0.5;
    for _ in 0..200 {
        let signal = random_signal(&mut rng, 32, period);
        let depth = rng.gen_range(0..=2);
        let inner = random_formula(&mut rng, depth, period, true);
        let w = random_interval(&mut rng, period);
        let eventually = Formula::eventually(w, inner.clone());
        let dual = Formula::always(w, Formula::not(inner));
        match (eval_robust(&eventually, &signal, 0), eval_robust(&dual, &signal, 0)) {
            (Ok(a), Ok(b)) => assert_eq!(a, -b),
            (Err(_), Err(_)) => {}
            other => panic!("duality changed error behavior: {other:?}"),
        }
    }
}

#[test]
fn raising_a_positive_predicate_offset_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let period = 0.5;
    for _ in 0..200 {
        let signal = random_signal(&mut rng, 32, period);
        // Negation-normalized: no Not nodes, so every predicate is positive.
        let depth = rng.gen_range(1..=3);
        let formula = random_formula(&mut rng, depth, period, false);
        let (_, pred_count) = bump_nth_pred(&formula, usize::MAX, 0.0);
        let target = rng.gen_range(0..pred_count);
        let delta = rng.gen_range(0.01..1.0);
        let (bumped, _) = bump_nth_pred(&formula, target, delta);
        match (eval_robust(&formula, &signal, 0), eval_robust(&bumped, &signal, 0)) {
            (Ok(before), Ok(after)) => {
                assert!(
                    after >= before,
                    "offset increase decreased robustness: {before} -> {after}"
                );
            }
            (Err(_), Err(_)) => {}
            other => panic!("bump changed error behavior: {other:?}"),
        }
    }
}

#[test]
fn smooth_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let period = 0.5;
    let samples = 16;
    let mut checked = 0;
    while checked < 25 {
        let signal = random_signal(&mut rng, samples, period);
        let depth = rng.gen_range(1..=3);
        let formula = random_formula(&mut rng, depth, period, true);
        // Keep every sub-robustness away from zero so no aggregation branch
        // can flip between the two finite-difference probes.
        let mut trace = Vec::new();
        let Some(_) = brute(&formula, &signal, 0, &mut trace) else { continue };
        if trace.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        let wrt: Vec<(&str, usize)> = CHANNELS
            .iter()
            .flat_map(|&c| (0..samples).map(move |k| (c, k)))
            .collect();
        let gradient = eval_agm_gradient(&formula, &signal, 0, &wrt).unwrap();
        let h = 1e-6;
        for (coord, &(channel, k)) in wrt.iter().enumerate() {
            let perturbed = |delta: f64| {
                let shifted = signal.map(|ci, sample, v| {
                    if sample == k && CHANNELS[ci] == channel {
                        v + delta
                    } else {
                        v
                    }
                });
                eval_agm(&formula, &shifted, 0).unwrap()
            };
            let fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let scale = fd.abs().max(gradient[coord].abs());
            if scale < 1e-9 {
                continue;
            }
            let rel = (fd - gradient[coord]).abs() / scale;
            assert!(
                rel <= 1e-5,
                "gradient mismatch at {channel}[{k}]: {} vs {fd} (rel {rel})",
                gradient[coord]
            );
        }
        checked += 1;
    }
}
