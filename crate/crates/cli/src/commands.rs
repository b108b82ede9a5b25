use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use contagion::dynamics::{run_episode, seed_infection, EpidemicParams, HealthState, InitialInfection};
use contagion::exact::{exact_policy_eval, optimal_value};
use contagion::graph::{girvan_newman_trace, CentralityMeasure, Graph};
use contagion::harness::{analyze, write_outputs, ExperimentConfig, GraphSpec, PolicySpec};
use contagion::lp::{
    build_risk_matrices, precision_equalize, precision_optimal, preemptive_equalize, preemptive_optimal,
    MixedStrategy, SolvedStrategy,
};
use contagion::policy::TableEntry;
use contagion::rl::{
    evaluate_returns, learning_curve_csv, random_search, train_dqn, SearchBudget, SearchRanges, TrainConfig,
};
use contagion::rng::{episode_rng, mix_seed, seeded};
use contagion::{Error, Result};

use crate::sink::Sink;
use crate::{
    Cli, Command, ExactCommand, Format, GraphCommand, GraphKind, LpMode, LpObjective, Outcome, ParamArgs, RlCommand,
};

fn load_graph(arg: &str) -> Result<Graph> {
    arg.parse::<GraphSpec>()?.build(Path::new("."))
}

fn policy_for(spec: &str, graph: &Graph, params: &EpidemicParams) -> Result<Box<dyn contagion::policy::Policy>> {
    spec.parse::<PolicySpec>()?.build(graph, params, Path::new("."))
}

fn checked_params(args: &ParamArgs, graph: &Graph) -> Result<EpidemicParams> {
    let p = args.params();
    p.validate(graph.num_nodes())?;
    Ok(p)
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serialization is infallible")
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut sink = Sink::new(cli.out.clone())?;
    let summary = match &cli.command {
        Command::Graph(GraphCommand::Generate { kind, n, leaves, left, right, m, p_triad }) => {
            let need = |v: Option<usize>, flag: &str| {
                v.ok_or_else(|| Error::InvalidConfig(format!("{kind:?} needs --{flag}").to_lowercase()))
            };
            let spec = match kind {
                GraphKind::Chain => GraphSpec::Chain { n: need(*n, "n")? },
                GraphKind::Clique => GraphSpec::Clique { n: need(*n, "n")? },
                GraphKind::Cycle => GraphSpec::Cycle { n: need(*n, "n")? },
                GraphKind::Star => GraphSpec::Star { leaves: need(*leaves, "leaves")? },
                GraphKind::Barbell => GraphSpec::Barbell { left: need(*left, "left")?, right: need(*right, "right")? },
                GraphKind::ScaleFree => {
                    GraphSpec::ScaleFree { n: need(*n, "n")?, m: *m, p_triad: *p_triad, seed: cli.seed }
                }
                GraphKind::Karate => GraphSpec::Karate,
            };
            let g = spec.build(Path::new("."))?;
            sink.primary("graph.json", &g.to_json())?;
            json!({"num_nodes": g.num_nodes(), "num_edges": g.num_edges(), "spec": spec})
        }
        Command::Graph(GraphCommand::Inspect { graph }) => {
            let g = load_graph(graph)?;
            let mut histogram = BTreeMap::new();
            for v in 0..g.num_nodes() {
                *histogram.entry(g.degree(v)).or_insert(0usize) += 1;
            }
            let stats = json!({
                "num_nodes": g.num_nodes(),
                "num_edges": g.num_edges(),
                "components": g.num_components(),
                "degree_histogram": histogram,
            });
            let text = match cli.format {
                Format::Json => to_json(&stats),
                Format::Csv => {
                    let mut s = format!("{} nodes, {} edges\n{} connected component(s)\ndegree,count\n",
                        g.num_nodes(), g.num_edges(), g.num_components());
                    for (d, c) in &histogram {
                        let _ = writeln!(s, "{d},{c}");
                    }
                    s
                }
            };
            sink.primary("inspect.txt", &text)?;
            stats
        }
        Command::Simulate { graph, policy, params } => {
            let g = load_graph(graph)?;
            let p = checked_params(params, &g)?;
            let pol = policy_for(policy, &g, &p)?;
            let trace = run_episode(&g, &p, pol.as_ref(), &mut episode_rng(cli.seed, 0))?;
            match cli.format {
                Format::Json => sink.primary("trace.json", &trace.to_json())?,
                Format::Csv => {
                    let mut s = String::from("step,state,newly_infected,treated\n");
                    let _ = writeln!(s, "0,{},{},", trace.states[0], join(&trace.seeded));
                    for t in 1..trace.states.len() {
                        let _ = writeln!(
                            s,
                            "{t},{},{},{}",
                            trace.states[t],
                            join(&trace.newly_infected[t - 1]),
                            join(trace.allocations[t - 1].treated())
                        );
                    }
                    sink.primary("timeline.csv", &s)?;
                }
            }
            json!({"policy": pol.name(), "total_sick_days": trace.total_sick_days,
                   "epidemic_size": trace.epidemic_size(), "steps": trace.num_steps()})
        }
        Command::Exact(ExactCommand::Eval { graph, policy, params, guard }) => {
            let g = load_graph(graph)?;
            let p = checked_params(params, &g)?;
            let pol = policy_for(policy, &g, &p)?;
            let profile = exact_policy_eval(&g, &p, pol.as_ref(), *guard)?;
            match cli.format {
                Format::Json => sink.primary("risk.json", &to_json(&profile))?,
                Format::Csv => sink.primary("risk.csv", &profile.to_csv()?)?,
            }
            json!({"policy": pol.name(), "expected_sick_days": profile.expected_sick_days,
                   "mean_risk": profile.mean_risk()})
        }
        Command::Exact(ExactCommand::Optimal { graph, params, guard }) => {
            let g = load_graph(graph)?;
            let p = checked_params(params, &g)?;
            let mut vf = optimal_value(&g, &p, *guard)?;
            let total = vf.expected_sick_days();
            let starts: Vec<Vec<usize>> = match &p.initial_infection {
                InitialInfection::Explicit(s) => vec![s.clone()],
                InitialInfection::UniformRandomSingle => (0..g.num_nodes()).map(|v| vec![v]).collect(),
            };
            let mut rows = Vec::new();
            for seeds in starts {
                let mut state = HealthState::susceptible(g.num_nodes());
                seed_infection(&mut state, &p.clone().with_seeds(seeds.clone()), &mut seeded(0));
                let action = vf.best_action(&state, p.horizon, p.treatment_budget);
                let value = vf.value(&state, p.horizon, p.treatment_budget);
                rows.push((seeds, action, value));
            }
            match cli.format {
                Format::Json => {
                    let starts: Vec<_> = rows
                        .iter()
                        .map(|(s, a, v)| json!({"initial": s, "first_action": a, "future_sick_days": v}))
                        .collect();
                    sink.primary("optimal.json", &to_json(&json!({"expected_sick_days": total, "starts": starts})))?
                }
                Format::Csv => {
                    let mut s = String::from("initial,first_action,future_sick_days\n");
                    for (seeds, action, value) in &rows {
                        let slots = action.slots().iter().map(|a| a.map_or("none".into(), |v| v.to_string()));
                        let _ = writeln!(s, "{},{},{value}", join(seeds), join(slots));
                    }
                    println!("optimal expected sick days: {total}");
                    sink.primary("optimal.csv", &s)?;
                }
            }
            json!({"expected_sick_days": total, "states": vf.num_states()})
        }
        Command::Lp { objective, mode, graph, params, guard } => {
            let g = load_graph(graph)?;
            let p = checked_params(params, &g)?;
            let matrix = build_risk_matrices(&g, &p, *guard)?;
            let solved: Option<SolvedStrategy> = match (objective, mode) {
                (LpObjective::Optimal, LpMode::Preemptive) => {
                    let (k, risk) = preemptive_optimal(&matrix);
                    let mean_risk = risk.iter().sum::<f64>() / risk.len() as f64;
                    let weights = vec![TableEntry { treat: k, w: 1.0 }];
                    Some(SolvedStrategy { strategy: MixedStrategy::Preemptive { weights }, risk, mean_risk })
                }
                (LpObjective::Optimal, LpMode::Precision) => Some(precision_optimal(&matrix)),
                (LpObjective::Equalize, LpMode::Preemptive) => preemptive_equalize(&matrix)?.feasible(),
                (LpObjective::Equalize, LpMode::Precision) => precision_equalize(&matrix)?.feasible(),
            };
            let matrix_csv = match mode {
                LpMode::Preemptive => matrix.preemptive_csv()?,
                LpMode::Precision => matrix.precision_csv()?,
            };
            sink.file("matrix.csv", &matrix_csv)?;
            let Some(s) = solved else {
                println!("infeasible: no mixture of single treatments equalizes every node's risk");
                sink.finish(cli, json!({"status": "infeasible", "risk_source": matrix.source}))?;
                return Ok(Outcome::Infeasible);
            };
            match objective {
                LpObjective::Equalize => println!("feasible: common risk {} (spread {:.3e})", s.risk[0], s.spread()),
                LpObjective::Optimal => println!("optimal: mean risk {}", s.mean_risk),
            }
            sink.file("strategy.json", &s.strategy.to_json())?;
            sink.file("strategy.csv", &s.strategy.to_csv()?)?;
            match cli.format {
                Format::Json => sink.primary("risk.json", &to_json(&json!({"risk": s.risk, "mean_risk": s.mean_risk})))?,
                Format::Csv => sink.primary("risk.csv", &s.risk_csv()?)?,
            }
            json!({"status": "feasible", "mean_risk": s.mean_risk, "spread": s.spread(), "risk_source": matrix.source})
        }
        Command::Rl(RlCommand::Train {
            graph,
            params,
            config,
            published_preset,
            iterations,
            hidden,
            learning_rate,
            gamma,
            eval_episodes,
        }) => {
            let g = load_graph(graph)?;
            let p = checked_params(params, &g)?;
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?
                }
                None if *published_preset => TrainConfig::published_preset(),
                None => TrainConfig::default(),
            };
            cfg.seed = cli.seed;
            cfg.iterations = iterations.unwrap_or(cfg.iterations);
            cfg.hidden = hidden.unwrap_or(cfg.hidden);
            cfg.learning_rate = learning_rate.unwrap_or(cfg.learning_rate);
            cfg.gamma = gamma.unwrap_or(cfg.gamma);
            let agent = train_dqn(&g, &p, &cfg)?;
            let returns =
                evaluate_returns(&g, &p, &agent.policy, *eval_episodes, cfg.max_steps_per_episode, mix_seed(cli.seed, 1))?;
            let mean = returns.iter().sum::<f64>() / returns.len().max(1) as f64;
            println!("trained {} iterations; mean evaluation return {mean}", cfg.iterations);
            sink.file("weights.json", &agent.policy.network().to_json())?;
            sink.primary("learning_curve.csv", &learning_curve_csv(&agent.learning_curve)?)?;
            json!({"config": cfg, "mean_eval_return": mean, "gradient_steps": agent.gradient_steps})
        }
        Command::Rl(RlCommand::Search { graph, params, trials, eval_episodes, max_iterations }) => {
            let g = load_graph(graph)?;
            let p = checked_params(params, &g)?;
            let budget = SearchBudget { eval_episodes: *eval_episodes, max_iterations: Some(*max_iterations) };
            let ranked =
                random_search(&g, &p, &TrainConfig::default(), &SearchRanges::default(), *trials, &budget, cli.seed)?;
            match cli.format {
                Format::Json => sink.primary("search.json", &to_json(&ranked))?,
                Format::Csv => {
                    let mut s = String::from("rank,trial,gamma,hidden,learning_rate,iterations,iterations_run,mean_return\n");
                    for (rank, r) in ranked.iter().enumerate() {
                        let c = &r.config;
                        let _ = writeln!(
                            s,
                            "{rank},{},{},{},{},{},{},{}",
                            r.trial, c.gamma, c.hidden, c.learning_rate, c.iterations, r.iterations_run, r.mean_return
                        );
                    }
                    sink.primary("search.csv", &s)?;
                }
            }
            json!({"best": ranked.first()})
        }
        Command::Experiment { config, runs } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(r) = runs {
                cfg.runs = *r;
                cfg.validate()?;
            }
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let dir = match (&cli.out, &cfg.output) {
                (Some(out), _) => out.clone(),
                (None, Some(o)) => base.join(o),
                (None, None) => base.join("out"),
            };
            let analysis = analyze(&cfg, &base)?;
            write_outputs(&dir, &cfg, &analysis)?;
            let r = &analysis.report;
            println!(
                "{}: mean total sick days {:.4} (se {:.4}), median {} over {} runs; results in {}",
                r.policy,
                r.mean_total_sick_days,
                r.se_total_sick_days,
                r.median_total_sick_days,
                r.runs,
                dir.display()
            );
            return Ok(Outcome::Done);
        }
        Command::Communities { graph } => {
            let g = load_graph(graph)?;
            let trace = girvan_newman_trace(&g)?;
            match cli.format {
                Format::Json => sink.primary("communities.json", &to_json(&trace))?,
                Format::Csv => {
                    let mut s = String::from("node,community\n");
                    for (v, l) in trace.partition.labels.iter().enumerate() {
                        let _ = writeln!(s, "{v},{l}");
                    }
                    sink.primary("communities.csv", &s)?;
                }
            }
            json!({"k": trace.partition.k, "removed_edges": trace.removed.len(), "had_ties": trace.had_ties})
        }
        Command::Centrality { graph } => {
            let g = load_graph(graph)?;
            let scores = CentralityMeasure::ALL.iter().map(|m| m.compute(&g)).collect::<Result<Vec<_>>>()?;
            match cli.format {
                Format::Json => {
                    let by_name: BTreeMap<_, _> = scores.iter().map(|s| (s.measure.name(), &s.scores)).collect();
                    sink.primary("centrality.json", &to_json(&by_name))?
                }
                Format::Csv => {
                    let mut s = String::from("node,degree,betweenness,eigenvector\n");
                    for v in 0..g.num_nodes() {
                        let _ = writeln!(s, "{v},{},{},{}", scores[0].scores[v], scores[1].scores[v], scores[2].scores[v]);
                    }
                    sink.primary("centrality.csv", &s)?;
                }
            }
            json!({"num_nodes": g.num_nodes()})
        }
    };
    sink.finish(cli, summary)?;
    Ok(Outcome::Done)
}
