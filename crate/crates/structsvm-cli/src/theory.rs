//! The `theory-check` command: named property suites with fixed seeds, one
//! verdict line each.

use crate::{CliError, TheoryArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use structsvm::hierarchy::{argmin_alpha_tree, alpha_objective, compute_alpha_rho, HierarchySpec};
use structsvm::hull::convex_hull_search;
use structsvm::loss::BiCriteriaLoss;
use structsvm::oracle::{EnumerationOracle, Lambda, LambdaSpace};
use structsvm::search::{angular_search_with, suboptimality_certificate, AngularOptions};

const SUITES: [&str; 6] = [
    "monotonicity",
    "k-bound",
    "angular-subopt",
    "hull-calls",
    "alpha-optimality",
    "invariance",
];

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> EnumerationOracle {
    EnumerationOracle::from_coords(
        &(0..n)
            .map(|_| (rng.gen_range(0.01..4.0), rng.gen_range(0.01..4.0)))
            .collect::<Vec<_>>(),
    )
}

fn brute_phi(o: &EnumerationOracle) -> f64 {
    o.points().iter().map(|p| p.phi()).fold(f64::MIN, f64::max)
}

fn suite_monotonicity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let o = random_points(&mut rng, 40);
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..20 {
            let lam = 0.05 * (i as f64 + 1.0) * rng.gen_range(0.9..1.1);
            let p = o.lambda_oracle(Lambda::Finite(lam)).point;
            if let Some((ph, pg)) = prev {
                if p.h > ph + 1e-9 || p.g < pg - 1e-9 {
                    return Err(format!("monotonicity violated at lambda {lam}"));
                }
            }
            prev = Some((p.h, p.g));
        }
    }
    Ok(())
}

fn suite_k_bound(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let o = random_points(&mut rng, 40);
        let star = brute_phi(&o);
        for _ in 0..20 {
            let lam = rng.gen_range(0.05..5.0);
            let ans = o.lambda_oracle(Lambda::Finite(lam));
            let bound = suboptimality_certificate(ans.oracle_value, lam).unwrap();
            if bound < star - 1e-9 {
                return Err(format!("K-bound {bound} below brute force {star}"));
            }
        }
    }
    Ok(())
}

fn suite_angular_subopt(seed: u64, iters: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let o = random_points(&mut rng, 100);
        let star = brute_phi(&o);
        let opts = AngularOptions {
            max_iters: iters,
            ..Default::default()
        };
        let (_, trace) = angular_search_with(&o, 1.0, &opts).map_err(|e| e.to_string())?;
        let v1 = trace.v1.ok_or("no first answer")?;
        for step in &trace.steps {
            if step.best_phi <= 0.0 || !v1.is_finite() {
                continue;
            }
            let bound = v1.powf(4.0 / (step.iteration as f64 + 1.0));
            if star / step.best_phi > bound * (1.0 + 1e-9) {
                return Err(format!(
                    "suboptimality bound broken at t={}",
                    step.iteration
                ));
            }
        }
    }
    Ok(())
}

fn suite_hull_calls(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slack = BiCriteriaLoss::slack_rescaling();
    for _ in 0..50 {
        // integer-g instances emulate chains of length m
        let m = 6;
        let n = rng.gen_range(20..200);
        let coords: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(-1.0..3.0), rng.gen_range(0..=m) as f64))
            .collect();
        let o = EnumerationOracle::from_coords(&coords);
        let (_, calls) = convex_hull_search(&o, &slack, None).map_err(|e| e.to_string())?;
        if calls > m + 2 {
            return Err(format!("hull used {calls} calls on integer-g range {m}"));
        }
    }
    Ok(())
}

fn suite_alpha_optimality(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..50 {
        let m = rng.gen_range(2..20);
        let mut parents = vec![Vec::new()];
        for n in 1..m {
            parents.push(vec![rng.gen_range(0..n)]);
        }
        let spec = HierarchySpec::from_parent_lists(parents).map_err(|e| e.to_string())?;
        let sq: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..4.0)).collect();
        let alpha = argmin_alpha_tree(&sq, &spec).map_err(|e| e.to_string())?;
        let obj = alpha_objective(&sq, &alpha);
        for _ in 0..200 {
            // random feasible candidate
            let mut cand: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..1.0)).collect();
            for _ in 0..100 {
                let mut ok = true;
                for &l in spec.leaves() {
                    let set = spec.up_closure(l);
                    let s: f64 = (0..m)
                        .filter(|&n| set >> n & 1 == 1)
                        .map(|n| cand[n])
                        .sum();
                    if s > 1.0 {
                        ok = false;
                        let f = 1.0 / s;
                        for n in 0..m {
                            if set >> n & 1 == 1 {
                                cand[n] *= f;
                            }
                        }
                    }
                }
                if ok {
                    break;
                }
            }
            if obj > alpha_objective(&sq, &cand) + 1e-9 {
                return Err("random feasible alpha beat the exact step".into());
            }
        }
    }
    Ok(())
}

fn suite_invariance(seed: u64) -> Result<(), String> {
    // merged α over a duplicated pair matches the original node at ρ → 1
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let m = rng.gen_range(3..12);
        let mut parents = vec![Vec::new()];
        for n in 1..m {
            parents.push(vec![rng.gen_range(0..n)]);
        }
        let spec = HierarchySpec::from_parent_lists(parents).map_err(|e| e.to_string())?;
        // only nodes that are not already duplicated with a neighbor: a
        // branching node whose parent also branches (or is absent) forms a
        // singleton membership class, so the merged pair is comparable
        let internal: Vec<usize> = (0..m)
            .filter(|&n| {
                spec.children(n).len() >= 2
                    && spec
                        .parents(n)
                        .iter()
                        .all(|&p| spec.children(p).len() >= 2)
            })
            .collect();
        if internal.is_empty() {
            continue;
        }
        let node = internal[rng.gen_range(0..internal.len())];
        let (dup, new_id) = spec.duplicate_node(node).map_err(|e| e.to_string())?;
        let orig = compute_alpha_rho(&spec, 1.01, None).map_err(|e| e.to_string())?;
        let both = compute_alpha_rho(&dup, 1.01, None).map_err(|e| e.to_string())?;
        let merged = both[node] + both[new_id];
        if (merged - orig[node]).abs() > 0.02 * orig[node].abs().max(1e-9) {
            return Err(format!(
                "merged alpha {merged} far from original {}",
                orig[node]
            ));
        }
    }
    Ok(())
}

pub fn cmd_theory_check(args: &TheoryArgs) -> Result<(), CliError> {
    let selected: Vec<&str> = match &args.suite {
        Some(name) => {
            if !SUITES.contains(&name.as_str()) {
                return Err(CliError::usage(format!("unknown suite {name}")));
            }
            vec![name.as_str()]
        }
        None => SUITES.to_vec(),
    };
    let mut ok = true;
    for suite in selected {
        let result = match suite {
            "monotonicity" => suite_monotonicity(args.seed),
            "k-bound" => suite_k_bound(args.seed),
            "angular-subopt" => suite_angular_subopt(args.seed, args.iters),
            "hull-calls" => suite_hull_calls(args.seed),
            "alpha-optimality" => suite_alpha_optimality(args.seed),
            "invariance" => suite_invariance(args.seed),
            _ => unreachable!(),
        };
        match result {
            Ok(()) => println!("{suite}: PASS"),
            Err(msg) => {
                ok = false;
                println!("{suite}: FAIL ({msg})");
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::config("one or more theory suites failed"))
    }
}
