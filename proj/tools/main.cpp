#include <iostream>

#include <CLI11.hpp>

#include "cip/envs/envs.hpp"
#include "cip/numkit/runtime.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  using namespace cip::cli;
  cip::tune_allocator();

  CLI::App app{"Causal information prioritization: training, discovery and data tools"};
  app.require_subcommand(1);
  app.fallthrough();
  bool overwrite = false;
  std::string config_path;
  app.add_flag("--overwrite", overwrite, "Replace existing outputs");
  app.add_option("--config", config_path, "AgentConfig JSON document");

  // train
  TrainOptions train;
  std::string seeds = "0";
  auto* t = app.add_subcommand("train", "Train one agent per seed");
  t->add_option("--env", train.env, "Environment name")->capture_default_str();
  t->add_option("--seeds,--seed", seeds, "Seed list, e.g. 0,1,2 or 0-3")->capture_default_str();
  t->add_option("--out", train.out_dir, "Output directory")->required();
  t->add_option("--variant", train.variant, "cip | sac | no_aug | no_emp")->capture_default_str();
  t->add_flag("--baseline", train.baseline, "Baseline SAC (same as --variant sac)");
  t->add_option("--steps", train.total_steps, "Override total_steps");
  t->add_option("--jobs", train.jobs, "Seeds trained in parallel")->capture_default_str();
  t->add_flag("--quiet", train.quiet, "No per-seed summary lines");

  // discover
  DiscoverOptions disc;
  auto* d = app.add_subcommand("discover", "Fit reward causal matrices (JSONL) or a full SEM (CSV)");
  d->add_option("--in", disc.input, "Transitions .jsonl or data .csv")->required();
  d->add_option("--out", disc.out_path, "Matrices JSON")->required();
  d->add_option("--theta", disc.theta, "Uncontrollable threshold")->capture_default_str();
  d->add_option("--w-min", disc.w_min, "Action weight floor")->capture_default_str();
  d->add_option("--sample-size", disc.sample_size, "Minimum rows")->capture_default_str();
  d->add_flag("--allow-small", disc.allow_small, "Fit on fewer rows than --sample-size");

  // augment
  AugmentOptions aug;
  auto* a = app.add_subcommand("augment", "Counterfactual swaps over a transition file");
  a->add_option("--in", aug.input, "Transitions .jsonl")->required();
  a->add_option("--matrices", aug.matrices_path, "Matrices JSON from discover")->required();
  a->add_option("--out", aug.out_path, "Augmented .jsonl")->required();
  a->add_option("--theta", aug.theta, "Override the threshold stored with the matrices");
  a->add_option("--rate", aug.rate, "Fraction of transitions used as sources")->capture_default_str();
  a->add_option("--seed", aug.seed, "Partner draw seed")->capture_default_str();

  // semgen
  SemgenOptions sem;
  auto* s = app.add_subcommand("semgen", "Sample a linear SEM to CSV");
  s->add_option("--spec", sem.spec_path, "SEM JSON document");
  s->add_option("--random-p", sem.random_p, "Draw a random SEM with this many variables");
  s->add_option("--edge-prob", sem.edge_prob, "Edge probability for --random-p")->capture_default_str();
  s->add_option("--noise", sem.noise, "uniform | laplace | gaussian")->capture_default_str();
  s->add_option("--n", sem.n, "Rows")->capture_default_str();
  s->add_option("--seed", sem.seed, "Sampling seed")->capture_default_str();
  s->add_option("--out", sem.out_path, "Output CSV")->required();

  // eval
  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Normalized score and optimality gap per run");
  e->add_option("--metrics-dir,--in", ev.metrics_dir, "Directory of training outputs")->required();
  e->add_option("--env", ev.env, "Environment for metrics without a manifest");
  e->add_option("--out", ev.out_path, "Summary CSV (stdout when omitted)");
  e->add_option("--final-episodes", ev.final_episodes, "Episodes in the final-return window")
      ->capture_default_str();

  // collect
  CollectOptions col;
  auto* c = app.add_subcommand("collect", "Random-policy transitions to JSONL");
  c->add_option("--env", col.env, "Environment name")->capture_default_str();
  c->add_option("--n", col.n, "Transitions")->capture_default_str();
  c->add_option("--seed", col.seed, "Seed")->capture_default_str();
  c->add_option("--out", col.out_path, "Output .jsonl")->required();

  CLI11_PARSE(app, argc, argv);

  if (*t) {
    try {
      train.seeds = parse_seed_list(seeds);
    } catch (const std::exception& ex) {
      std::cerr << "error: " << ex.what() << "\n";
      return 1;
    }
    if (!config_path.empty()) train.config_path = config_path;
    train.overwrite = overwrite;
    return cmd_train(train, std::cout, std::cerr);
  }
  if (*d) {
    disc.overwrite = overwrite;
    return cmd_discover(disc, std::cout, std::cerr);
  }
  if (*a) {
    aug.overwrite = overwrite;
    return cmd_augment(aug, std::cout, std::cerr);
  }
  if (*s) {
    sem.overwrite = overwrite;
    return cmd_semgen(sem, std::cout, std::cerr);
  }
  if (*e) {
    ev.overwrite = overwrite;
    return cmd_eval(ev, std::cout, std::cerr);
  }
  col.overwrite = overwrite;
  return cmd_collect(col, std::cout, std::cerr);
}
