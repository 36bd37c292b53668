#include "laq/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace laq {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not a number: " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("config key " + key + ": trailing junk: " + v);
  return out;
}

long parse_long(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not an integer: " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("config key " + key + ": trailing junk: " + v);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not an unsigned integer: " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("config key " + key + ": trailing junk: " + v);
  return out;
}

// "n" means a cube; "a,b,c" sets each axis.
std::array<int, 3> parse_int3(const std::string& key, const std::string& v) {
  std::vector<std::string> parts = split_list(v);
  if (parts.size() == 1) {
    int n = static_cast<int>(parse_long(key, parts[0]));
    return {n, n, n};
  }
  if (parts.size() != 3)
    throw std::invalid_argument("config key " + key + ": want 1 or 3 values: " + v);
  return {static_cast<int>(parse_long(key, parts[0])), static_cast<int>(parse_long(key, parts[1])),
          static_cast<int>(parse_long(key, parts[2]))};
}

std::array<double, 3> parse_double3(const std::string& key, const std::string& v) {
  std::vector<std::string> parts = split_list(v);
  if (parts.size() == 1) {
    double d = parse_double(key, parts[0]);
    return {d, d, d};
  }
  if (parts.size() != 3)
    throw std::invalid_argument("config key " + key + ": want 1 or 3 values: " + v);
  return {parse_double(key, parts[0]), parse_double(key, parts[1]), parse_double(key, parts[2])};
}

std::string fmt_int3(const std::array<int, 3>& a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d,%d,%d", a[0], a[1], a[2]);
  return buf;
}

std::string fmt_double3(const std::array<double, 3>& a) {
  return fmt_double(a[0]) + "," + fmt_double(a[1]) + "," + fmt_double(a[2]);
}

struct Entry {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = [] {
    std::vector<Entry> e;
    auto add = [&e](const char* key, std::function<void(RunConfig&, const std::string&)> set,
                    std::function<std::string(const RunConfig&)> get) {
      e.push_back({key, std::move(set), std::move(get)});
    };
    auto dbl = [&add](const char* key, double RunConfig::* f) {
      add(key, [key, f](RunConfig& c, const std::string& v) { c.*f = parse_double(key, v); },
          [f](const RunConfig& c) { return fmt_double(c.*f); });
    };
    auto str = [&add](const char* key, std::string RunConfig::* f) {
      add(key, [f](RunConfig& c, const std::string& v) { c.*f = v; },
          [f](const RunConfig& c) { return c.*f; });
    };

    add("seed",
        [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
        [](const RunConfig& c) { return std::to_string(c.seed); });

    add("phantom.dims",
        [](RunConfig& c, const std::string& v) { c.phantom.dims = parse_int3("phantom.dims", v); },
        [](const RunConfig& c) { return fmt_int3(c.phantom.dims); });
    add("phantom.spacing",
        [](RunConfig& c, const std::string& v) {
          c.phantom.spacing = parse_double3("phantom.spacing", v);
        },
        [](const RunConfig& c) { return fmt_double3(c.phantom.spacing); });
    auto pdbl = [&add](const char* key, double PhantomConfig::* f) {
      add(key,
          [key, f](RunConfig& c, const std::string& v) { c.phantom.*f = parse_double(key, v); },
          [f](const RunConfig& c) { return fmt_double(c.phantom.*f); });
    };
    auto pint = [&add](const char* key, int PhantomConfig::* f) {
      add(key,
          [key, f](RunConfig& c, const std::string& v) {
            c.phantom.*f = static_cast<int>(parse_long(key, v));
          },
          [f](const RunConfig& c) { return std::to_string(c.phantom.*f); });
    };
    pdbl("phantom.radius_frac", &PhantomConfig::radius_frac);
    pdbl("phantom.radius_jitter", &PhantomConfig::radius_jitter);
    pdbl("phantom.perturb_amp", &PhantomConfig::perturb_amp);
    pint("phantom.wall_thickness", &PhantomConfig::wall_thickness);
    pint("phantom.min_scar_patches", &PhantomConfig::min_scar_patches);
    pint("phantom.max_scar_patches", &PhantomConfig::max_scar_patches);
    pdbl("phantom.scar_fraction_min", &PhantomConfig::scar_fraction_min);
    pdbl("phantom.scar_fraction_max", &PhantomConfig::scar_fraction_max);
    pdbl("phantom.mu_background", &PhantomConfig::mu_background);
    pdbl("phantom.mu_blood_pool", &PhantomConfig::mu_blood_pool);
    pdbl("phantom.mu_wall", &PhantomConfig::mu_wall);
    pdbl("phantom.contrast_k", &PhantomConfig::contrast_k);
    pdbl("phantom.contrast_sigma", &PhantomConfig::contrast_sigma);
    pint("phantom.max_confounders", &PhantomConfig::max_confounders);
    pdbl("phantom.mu_confounder", &PhantomConfig::mu_confounder);
    pint("phantom.confounder_margin", &PhantomConfig::confounder_margin);
    pdbl("phantom.noise_sigma", &PhantomConfig::noise_sigma);

    add("dataset.cases",
        [](RunConfig& c, const std::string& v) { c.cases = parse_long("dataset.cases", v); },
        [](const RunConfig& c) { return std::to_string(c.cases); });
    add("dataset.train_cases",
        [](RunConfig& c, const std::string& v) {
          c.train_cases = parse_long("dataset.train_cases", v);
        },
        [](const RunConfig& c) { return std::to_string(c.train_cases); });

    add("network.base_channels",
        [](RunConfig& c, const std::string& v) {
          c.base_channels = static_cast<int>(parse_long("network.base_channels", v));
        },
        [](const RunConfig& c) { return std::to_string(c.base_channels); });
    add("network.levels",
        [](RunConfig& c, const std::string& v) {
          c.levels = static_cast<int>(parse_long("network.levels", v));
        },
        [](const RunConfig& c) { return std::to_string(c.levels); });

    add("train.objective",
        [](RunConfig& c, const std::string& v) { c.train.objective = parse_objective(v); },
        [](const RunConfig& c) { return objective_name(c.train.objective); });
    auto tdbl = [&add](const char* key, double TrainConfig::* f) {
      add(key, [key, f](RunConfig& c, const std::string& v) { c.train.*f = parse_double(key, v); },
          [f](const RunConfig& c) { return fmt_double(c.train.*f); });
    };
    auto tlong = [&add](const char* key, long TrainConfig::* f) {
      add(key, [key, f](RunConfig& c, const std::string& v) { c.train.*f = parse_long(key, v); },
          [f](const RunConfig& c) { return std::to_string(c.train.*f); });
    };
    tlong("train.iterations", &TrainConfig::iterations);
    tdbl("train.lr0", &TrainConfig::lr0);
    tlong("train.lr_decay_every", &TrainConfig::lr_decay_every);
    tdbl("train.momentum", &TrainConfig::momentum);
    tdbl("train.weight_decay", &TrainConfig::weight_decay);
    add("train.lambda_la",
        [](RunConfig& c, const std::string& v) {
          c.train.lambda.la = parse_double("train.lambda_la", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.lambda.la); });
    add("train.lambda_scar",
        [](RunConfig& c, const std::string& v) {
          c.train.lambda.scar = parse_double("train.lambda_scar", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.lambda.scar); });
    add("train.lambda_m1",
        [](RunConfig& c, const std::string& v) {
          c.train.lambda.m1 = parse_double("train.lambda_m1", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.lambda.m1); });
    add("train.lambda_m2",
        [](RunConfig& c, const std::string& v) {
          c.train.lambda.m2 = parse_double("train.lambda_m2", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.lambda.m2); });
    tlong("train.lambda_every", &TrainConfig::lambda_every);
    tdbl("train.lambda_factor", &TrainConfig::lambda_factor);
    tdbl("train.beta", &TrainConfig::beta);
    add("train.attention_thickness",
        [](RunConfig& c, const std::string& v) {
          c.train.attention_thickness =
              static_cast<int>(parse_long("train.attention_thickness", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.attention_thickness); });

    dbl("project.d_max", &RunConfig::d_max);

    str("baseline.method", &RunConfig::baseline_method);
    str("baseline.band", &RunConfig::baseline_band);
    add("baseline.components",
        [](RunConfig& c, const std::string& v) {
          c.components = static_cast<int>(parse_long("baseline.components", v));
        },
        [](const RunConfig& c) { return std::to_string(c.components); });
    add("baseline.scar_components",
        [](RunConfig& c, const std::string& v) {
          c.scar_components = static_cast<int>(parse_long("baseline.scar_components", v));
        },
        [](const RunConfig& c) { return std::to_string(c.scar_components); });
    add("baseline.em_max_iter",
        [](RunConfig& c, const std::string& v) {
          c.em_max_iter = parse_long("baseline.em_max_iter", v);
        },
        [](const RunConfig& c) { return std::to_string(c.em_max_iter); });
    dbl("baseline.em_tol", &RunConfig::em_tol);
    dbl("baseline.em_jitter", &RunConfig::em_jitter);

    str("ablate.variants", &RunConfig::variants);
    str("ablate.seeds", &RunConfig::sweep_seeds);
    str("beta.values", &RunConfig::betas);
    str("predict.split", &RunConfig::predict_split);
    return e;
  }();
  return r;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Entry& e : registry()) {
    if (key == e.key) {
      e.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key: " + key);
}

std::string RunConfig::get(const std::string& key) const {
  for (const Entry& e : registry())
    if (key == e.key) return e.get(*this);
  throw std::invalid_argument("unknown config key: " + key);
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const Entry& e : registry()) {
    out += e.key;
    out += '=';
    out += e.get(*this);
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

std::string RunConfig::hash_hex() const {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : registry()) keys.push_back(e.key);
  return keys;
}

std::pair<std::string, std::string> split_key_value(const std::string& line) {
  std::size_t eq = line.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("expected key=value, got: " + line);
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      try {
        auto [k, v] = split_key_value(t);
        cfg.set(k, v);
      } catch (const std::exception& ex) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + ex.what());
      }
    }
  }
  for (const std::string& o : overrides) {
    auto [k, v] = split_key_value(o);
    cfg.set(k, v);
  }
  return cfg;
}

RunConfig RunConfig::from_overrides(const std::vector<std::string>& overrides) {
  return load("", overrides);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(csv);
  while (std::getline(ss, cur, ',')) {
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  for (const std::string& s : split_list(csv)) out.push_back(parse_double("list", s));
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  for (const std::string& s : split_list(csv)) out.push_back(parse_u64("list", s));
  return out;
}

}  // namespace laq
