#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "laq/pipeline.hpp"

namespace {

struct Opts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;
  std::string out;
  std::string data;
  std::string pred;
  std::string checkpoint;
};

void add_common(CLI::App* cmd, Opts& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--set", o.sets, "override one config key (repeatable)");
  cmd->add_option("--seed", o.seed, "override the master seed");
}

laq::RunConfig build_config(const Opts& o) {
  std::vector<std::string> overrides = o.sets;
  if (!o.seed.empty()) overrides.push_back("seed=" + o.seed);
  return laq::RunConfig::load(o.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phantom-scale left-atrium segmentation and scar quantification pipeline"};
  app.require_subcommand(1);

  Opts gen_o, targets_o, train_o, predict_o, baseline_o, eval_o, ablate_o, beta_o;

  CLI::App* gen = app.add_subcommand("gen", "generate a phantom dataset");
  add_common(gen, gen_o);
  gen->add_option("--out", gen_o.out, "dataset output directory")->required();

  CLI::App* targets = app.add_subcommand("targets", "precompute per-case training targets");
  add_common(targets, targets_o);
  targets->add_option("--data", targets_o.data, "dataset directory")->required();

  CLI::App* train = app.add_subcommand("train", "train a network on the train split");
  add_common(train, train_o);
  train->add_option("--data", train_o.data, "dataset directory")->required();
  train->add_option("--out", train_o.out, "run output directory")->required();

  CLI::App* predict = app.add_subcommand("predict", "run a checkpoint over dataset cases");
  add_common(predict, predict_o);
  predict->add_option("--checkpoint", predict_o.checkpoint, "checkpoint file")->required();
  predict->add_option("--data", predict_o.data, "dataset directory")->required();
  predict->add_option("--out", predict_o.out, "prediction output directory")->required();

  CLI::App* baseline = app.add_subcommand("baseline", "run a classical scar baseline");
  add_common(baseline, baseline_o);
  baseline->add_option("--data", baseline_o.data, "dataset directory")->required();
  baseline->add_option("--out", baseline_o.out, "baseline output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "score predictions against gold labels");
  add_common(eval, eval_o);
  eval->add_option("--data", eval_o.data, "dataset directory")->required();
  eval->add_option("--pred", eval_o.pred, "prediction directory")->required();
  eval->add_option("--out", eval_o.out, "report output directory")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "train and score objective variants");
  add_common(ablate, ablate_o);
  ablate->add_option("--data", ablate_o.data, "dataset directory")->required();
  ablate->add_option("--out", ablate_o.out, "report output directory")->required();

  CLI::App* beta = app.add_subcommand("beta-study", "sweep the distance-map exponent");
  add_common(beta, beta_o);
  beta->add_option("--data", beta_o.data, "dataset directory")->required();
  beta->add_option("--out", beta_o.out, "report output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      laq::cmd_gen(build_config(gen_o), gen_o.out);
    } else if (targets->parsed()) {
      laq::cmd_targets(build_config(targets_o), targets_o.data);
    } else if (train->parsed()) {
      laq::cmd_train(build_config(train_o), train_o.data, train_o.out);
    } else if (predict->parsed()) {
      laq::cmd_predict(build_config(predict_o), predict_o.checkpoint, predict_o.data,
                       predict_o.out);
    } else if (baseline->parsed()) {
      laq::cmd_baseline(build_config(baseline_o), baseline_o.data, baseline_o.out);
    } else if (eval->parsed()) {
      laq::cmd_eval(build_config(eval_o), eval_o.data, eval_o.pred, eval_o.out);
    } else if (ablate->parsed()) {
      laq::cmd_ablate(build_config(ablate_o), ablate_o.data, ablate_o.out);
    } else if (beta->parsed()) {
      laq::cmd_beta_study(build_config(beta_o), beta_o.data, beta_o.out);
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
