//! Depth-first branch-and-bound over the per-hour charge/discharge indicator.

use std::time::Instant;

use super::model::{DispatchLp, HourVars, LpResult, Outcome};
use super::result::SolveStatus;
use super::SolveOptions;
use crate::error::{Error, Result};

struct Node {
    fixings: Vec<Option<bool>>,
    /// Objective of the parent relaxation, a valid lower bound for this node.
    bound: f64,
}

struct Incumbent {
    vars: HourVars,
    objective: f64,
}

fn cutoff(inc: &Option<Incumbent>, tol: f64) -> f64 {
    match inc {
        Some(i) => i.objective - tol * i.objective.abs() - 1e-12,
        None => f64::INFINITY,
    }
}

fn offer(inc: &mut Option<Incumbent>, vars: HourVars, objective: f64) {
    if inc.as_ref().is_none_or(|i| objective < i.objective) {
        *inc = Some(Incumbent { vars, objective });
    }
}

pub(crate) fn branch_and_bound(lp: &DispatchLp<'_>, options: &SolveOptions) -> Result<Outcome> {
    let start = Instant::now();
    let remaining = || options.time_limit_s - start.elapsed().as_secs_f64();
    let horizon = lp.horizon();
    let mu = lp.efficiency();
    let mut session = lp.session();
    let mut lp_solves = 0usize;
    let mut nodes = 0usize;
    let mut incumbent: Option<Incumbent> = None;
    let mut stack = vec![Node {
        fixings: vec![None; horizon],
        bound: f64::NEG_INFINITY,
    }];
    // smallest bound among nodes dropped unexplored by a limit
    let mut abandoned = f64::INFINITY;
    let mut root_bound = f64::NEG_INFINITY;

    while let Some(node) = stack.pop() {
        if node.bound >= cutoff(&incumbent, options.tolerance) {
            continue;
        }
        let left = remaining();
        if left <= 0.0 || nodes >= options.max_nodes {
            abandoned = abandoned.min(node.bound);
            abandoned = stack.iter().map(|n| n.bound).fold(abandoned, f64::min);
            stack.clear();
            break;
        }
        nodes += 1;
        lp_solves += 1;
        let (vars, objective) =
            match session.solve(&node.fixings, left, options.feasibility_tol)? {
                LpResult::Solved { vars, objective } => (vars, objective),
                LpResult::Infeasible if nodes == 1 => {
                    return Err(Error::Solver(
                        "internal error: dispatch relaxation infeasible".into(),
                    ))
                }
                LpResult::Infeasible => continue,
                LpResult::TimedOut => {
                    abandoned = stack.iter().map(|n| n.bound).fold(node.bound, f64::min);
                    stack.clear();
                    break;
                }
            };
        if nodes == 1 {
            root_bound = objective;
        }
        if objective >= cutoff(&incumbent, options.tolerance) {
            continue;
        }
        let Some((hour, _)) = vars.most_violating_hour(options.integrality_tol) else {
            offer(&mut incumbent, vars, objective);
            continue;
        };

        let (repaired, rounded) = vars.repaired(mu);
        let repaired_obj = lp.objective_of(&repaired);
        offer(&mut incumbent, repaired, repaired_obj);
        if nodes == 1 && remaining() > 0.0 {
            // polish the rounded point once with its indicators fixed
            lp_solves += 1;
            if let LpResult::Solved { vars, objective } =
                session.solve(&rounded, remaining(), options.feasibility_tol)?
            {
                if vars.most_violating_hour(options.integrality_tol).is_none() {
                    offer(&mut incumbent, vars, objective);
                }
            }
        }
        if objective >= cutoff(&incumbent, options.tolerance) {
            continue;
        }

        let charge = vars.solar_to_battery[hour] + vars.grid_to_battery[hour];
        let prefer_discharge = vars.battery_to_load[hour] >= charge;
        let mut other = node.fixings.clone();
        other[hour] = Some(!prefer_discharge);
        let mut preferred = node.fixings;
        preferred[hour] = Some(prefer_discharge);
        stack.push(Node {
            fixings: other,
            bound: objective,
        });
        stack.push(Node {
            fixings: preferred,
            bound: objective,
        });
    }

    let inc = incumbent.ok_or_else(|| {
        Error::Solver("time limit reached before a feasible dispatch was found".into())
    })?;
    let status = if abandoned < f64::INFINITY {
        let lower = abandoned.max(root_bound).min(inc.objective);
        let relative_gap = if inc.objective.abs() > 1e-12 {
            ((inc.objective - lower) / inc.objective.abs()).max(0.0)
        } else {
            0.0
        };
        if relative_gap <= options.tolerance {
            SolveStatus::ProvenOptimal
        } else {
            SolveStatus::Gap { relative_gap }
        }
    } else {
        SolveStatus::ProvenOptimal
    };
    log::debug!("branch-and-bound: {nodes} nodes, {lp_solves} LP solves, {status:?}");
    Ok(Outcome {
        vars: inc.vars,
        status,
        nodes,
        lp_solves,
    })
}
