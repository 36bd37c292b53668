#ifndef LAQ_PIPELINE_HPP
#define LAQ_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "laq/config.hpp"
#include "laq/metrics.hpp"
#include "laq/train.hpp"

namespace laq {

// Case directories (case_*) under a dataset root, lexicographically sorted.
// Throws when none are found.
std::vector<std::string> discover_cases(const std::string& dataset_dir);

PhantomCase load_case(const std::string& case_dir);

// Scores one case against gold. Null pointers skip the corresponding
// metrics. An unextractable predicted-cavity boundary (empty or full mask)
// degrades asd/hd to the grid diagonal instead of going absent, so sweep
// reports stay finite. Surface metrics always compare on the gold surface.
MetricReport score_case(const LabelMask* pred_la, const LabelMask* pred_scar,
                        const LabelMask& gold_la, const LabelMask& gold_scar, double d_max);

// Ablation variant: the paper-style name bound to the objectives it trains.
// Single-task variants train two networks, one per head.
struct VariantSpec {
  std::string name;
  std::optional<Objective> la;
  std::optional<Objective> scar;
  bool multi_task = false;
};

VariantSpec parse_variant(const std::string& name);

// Commands. Each throws std::exception subclasses with actionable messages;
// the CLI maps those to nonzero exit codes. All artifact directories receive
// a config.txt carrying the canonical config and its hash.
void cmd_gen(const RunConfig& cfg, const std::string& out_dir);
void cmd_targets(const RunConfig& cfg, const std::string& dataset_dir);
void cmd_train(const RunConfig& cfg, const std::string& dataset_dir, const std::string& out_dir);
void cmd_predict(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& dataset_dir, const std::string& out_dir);
void cmd_baseline(const RunConfig& cfg, const std::string& dataset_dir,
                  const std::string& out_dir);
void cmd_eval(const RunConfig& cfg, const std::string& dataset_dir, const std::string& pred_dir,
              const std::string& out_dir);
void cmd_ablate(const RunConfig& cfg, const std::string& dataset_dir, const std::string& out_dir);
void cmd_beta_study(const RunConfig& cfg, const std::string& dataset_dir,
                    const std::string& out_dir);

}  // namespace laq

#endif
