#ifndef LAQ_CONFIG_HPP
#define LAQ_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "laq/phantom.hpp"
#include "laq/train.hpp"

namespace laq {

// Every tunable of the pipeline in one place. Keys are dotted lowercase;
// unknown keys are rejected so typos cannot silently fall back to defaults.
struct RunConfig {
  std::uint64_t seed = 1;

  PhantomConfig phantom;
  long cases = 12;
  long train_cases = 8;

  int base_channels = 8;
  int levels = 2;

  TrainConfig train;

  double d_max = 5.0;  // mm, surface-projection cutoff

  std::string baseline_method = "otsu";  // otsu | mgmm
  std::string baseline_band = "wall";    // wall | attention
  int components = 3;
  int scar_components = 1;
  long em_max_iter = 200;
  double em_tol = 1e-8;
  double em_jitter = 0.0;

  std::string variants =
      "single-task-BCE,single-task-SE,single-task-Dice,MTL-BCE,MTL-SE,MTL-SESA";
  std::string sweep_seeds = "1,2,3";
  std::string betas = "0.5,1,2,3";
  std::string predict_split = "test";  // train | test | all

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // All keys in registry order, one key=value per line. This text is the
  // hashing domain, so it must stay canonical (doubles at full precision).
  std::string canonical_text() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;

  static std::vector<std::string> known_keys();

  // key=value lines; blank lines and lines starting with # are skipped.
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});
  static RunConfig from_overrides(const std::vector<std::string>& overrides);
};

// Splits "key=value" at the first '='; throws when '=' is absent.
std::pair<std::string, std::string> split_key_value(const std::string& line);

std::vector<std::string> split_list(const std::string& csv);
std::vector<double> parse_double_list(const std::string& csv);
std::vector<std::uint64_t> parse_seed_list(const std::string& csv);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace laq

#endif
