#include "cmsnn/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "cmsnn/errors.hpp"
#include "cmsnn/rng.hpp"
#include "cmsnn/serialize.hpp"

namespace cmsnn {

std::string loss_kind_name(LossKind kind) {
  return kind == LossKind::spike_count ? "spike-count" : "per-step";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "spike-count") return LossKind::spike_count;
  if (name == "per-step") return LossKind::per_step;
  throw ContractError("unknown loss kind '" + name + "'");
}

std::vector<ModelSpec> ExperimentConfig::model_specs(int width) const {
  std::vector<ModelSpec> specs;
  const std::string prefix = "w" + std::to_string(width) + "-";
  for (const auto& fam : families) {
    if (fam == "cm") {
      auto it = genes.find(width);
      if (it == genes.end() || it->second.empty()) {
        throw ContractError("no gene counts configured for hidden width " +
                            std::to_string(width));
      }
      for (int g : it->second) {
        ModelSpec s;
        s.name = "cm-g" + std::to_string(g);
        s.id = prefix + s.name;
        s.family = ModelFamily::cm;
        s.hidden = width;
        s.genes = g;
        specs.push_back(s);
      }
    } else {
      ModelSpec s;
      s.name = fam;
      s.id = prefix + fam;
      s.family = family_from_name(fam);
      s.hidden = width;
      specs.push_back(s);
    }
  }
  return specs;
}

ExperimentConfig ExperimentConfig::smoke() {
  ExperimentConfig cfg;
  cfg.name = "smoke";
  cfg.hidden_widths = {8};
  cfg.genes = {{8, {2, 3, 4}}};
  cfg.data.train_size = 30;
  cfg.data.val_size = 9;
  cfg.data.test_size = 9;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 30;
  cfg.train.learning_rates = {0.03, 0.003};
  cfg.eval.n_chips = 2;
  return cfg;
}

namespace {

struct KeyValue {
  std::string value;
  int line = 0;
  bool consumed = false;
};

using Section = std::map<std::string, KeyValue>;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

class ConfigReader {
 public:
  explicit ConfigReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') fail(line_no, "unterminated section header");
        section = trim(t.substr(1, t.size() - 2));
        sections_.try_emplace(section);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) fail(line_no, "expected key = value");
      if (section.empty()) fail(line_no, "key outside any [section]");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      auto [it, inserted] = sections_[section].try_emplace(key, KeyValue{value, line_no, false});
      if (!inserted) fail(line_no, "duplicate key '" + key + "'");
    }
  }

  bool has(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key, const std::string& dflt) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return dflt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return dflt;
    k->second.consumed = true;
    return k->second.value;
  }

  double get_double(const std::string& section, const std::string& key, double dflt) {
    const std::string v = get(section, key, "");
    if (v.empty()) return dflt;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
      throw IoError("config: [" + section + "] " + key + ": bad number '" + v + "'");
    }
    return x;
  }

  long long get_int(const std::string& section, const std::string& key, long long dflt) {
    const std::string v = get(section, key, "");
    if (v.empty()) return dflt;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      throw IoError("config: [" + section + "] " + key + ": bad integer '" + v + "'");
    }
    return x;
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t dflt) {
    const std::string v = get(section, key, "");
    if (v.empty()) return dflt;
    char* end = nullptr;
    const std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      throw IoError("config: [" + section + "] " + key + ": bad integer '" + v + "'");
    }
    return x;
  }

  bool get_bool(const std::string& section, const std::string& key, bool dflt) {
    const std::string v = get(section, key, "");
    if (v.empty()) return dflt;
    if (v == "true") return true;
    if (v == "false") return false;
    throw IoError("config: [" + section + "] " + key + ": expected true/false, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& dflt) {
    const std::string v = get(section, key, "");
    if (v.empty()) return dflt;
    return split_list(v);
  }

  // every key must have been consumed; typos fail loudly
  void check_unknown(const std::vector<std::string>& known_sections) {
    for (const auto& [name, section] : sections_) {
      if (std::find(known_sections.begin(), known_sections.end(), name) ==
          known_sections.end()) {
        throw IoError("config: unknown section [" + name + "]");
      }
      for (const auto& [key, kv] : section) {
        if (!kv.consumed) {
          throw IoError("config: line " + std::to_string(kv.line) + ": unknown key '" + key +
                        "' in section [" + name + "]");
        }
      }
    }
  }

  std::vector<std::string> keys(const std::string& section) const {
    std::vector<std::string> out;
    auto s = sections_.find(section);
    if (s == sections_.end()) return out;
    for (const auto& [key, kv] : s->second) out.push_back(key);
    return out;
  }

 private:
  [[noreturn]] static void fail(int line, const std::string& what) {
    throw IoError("config: line " + std::to_string(line) + ": " + what);
  }
  std::map<std::string, Section> sections_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ConfigReader r(text);
  ExperimentConfig cfg;

  cfg.name = r.get("experiment", "name", cfg.name);
  {
    std::vector<std::string> dflt;
    for (int w : cfg.hidden_widths) dflt.push_back(std::to_string(w));
    cfg.hidden_widths.clear();
    for (const auto& s : r.get_list("experiment", "hidden_widths", dflt)) {
      cfg.hidden_widths.push_back(static_cast<int>(std::strtol(s.c_str(), nullptr, 10)));
    }
    if (cfg.hidden_widths.empty()) throw IoError("config: hidden_widths must be non-empty");
  }
  cfg.families = r.get_list("experiment", "models", cfg.families);
  for (const auto& f : cfg.families) {
    if (f != "cm") family_from_name(f);  // validates
  }
  // genes_<width> keys override the per-width defaults
  for (const auto& key : r.keys("experiment")) {
    if (key.rfind("genes_", 0) == 0) {
      const int width = static_cast<int>(std::strtol(key.c_str() + 6, nullptr, 10));
      std::vector<int> gs;
      for (const auto& s : r.get_list("experiment", key, {})) {
        gs.push_back(static_cast<int>(std::strtol(s.c_str(), nullptr, 10)));
      }
      cfg.genes[width] = gs;
    }
  }
  cfg.master_seed = r.get_u64("experiment", "master_seed", cfg.master_seed);

  cfg.data.train_size = static_cast<int>(r.get_int("data", "train_size", cfg.data.train_size));
  cfg.data.val_size = static_cast<int>(r.get_int("data", "val_size", cfg.data.val_size));
  cfg.data.test_size = static_cast<int>(r.get_int("data", "test_size", cfg.data.test_size));
  cfg.data.train_seed = r.get_u64("data", "train_seed", cfg.data.train_seed);
  cfg.data.val_seed = r.get_u64("data", "val_seed", cfg.data.val_seed);
  cfg.data.test_seed = r.get_u64("data", "test_seed", cfg.data.test_seed);
  cfg.data.balanced = r.get_bool("data", "balanced", cfg.data.balanced);

  cfg.train.epochs = static_cast<int>(r.get_int("train", "epochs", cfg.train.epochs));
  cfg.train.batch_size = static_cast<int>(r.get_int("train", "batch_size", cfg.train.batch_size));
  {
    std::vector<std::string> dflt;
    for (double lr : cfg.train.learning_rates) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", lr);
      dflt.push_back(buf);
    }
    cfg.train.learning_rates.clear();
    for (const auto& s : r.get_list("train", "learning_rates", dflt)) {
      cfg.train.learning_rates.push_back(std::strtod(s.c_str(), nullptr));
    }
  }
  cfg.train.t_steps = static_cast<int>(r.get_int("train", "t_steps", cfg.train.t_steps));
  cfg.train.beta = r.get_double("train", "beta", cfg.train.beta);
  cfg.train.delta_t = r.get_double("train", "delta_t", cfg.train.delta_t);
  cfg.train.u_thr = r.get_double("train", "u_thr", cfg.train.u_thr);
  cfg.train.r = r.get_double("train", "r", cfg.train.r);
  cfg.train.surrogate_slope =
      r.get_double("train", "surrogate_slope", cfg.train.surrogate_slope);
  cfg.train.adam_beta1 = r.get_double("train", "adam_beta1", cfg.train.adam_beta1);
  cfg.train.adam_beta2 = r.get_double("train", "adam_beta2", cfg.train.adam_beta2);
  cfg.train.adam_eps = r.get_double("train", "adam_eps", cfg.train.adam_eps);
  cfg.train.alpha_train = r.get_double("train", "alpha_train", cfg.train.alpha_train);
  cfg.train.loss = loss_kind_from_name(
      r.get("train", "loss", loss_kind_name(cfg.train.loss)));
  cfg.train.cache_encodings =
      r.get_bool("train", "cache_encodings", cfg.train.cache_encodings);
  cfg.train.noise_literal_mean =
      r.get_bool("train", "noise_literal_mean", cfg.train.noise_literal_mean);
  cfg.train.hw_aware_noisy_validation =
      r.get_bool("train", "hw_aware_noisy_validation", cfg.train.hw_aware_noisy_validation);

  cfg.eval.alpha = r.get_double("eval", "alpha", cfg.eval.alpha);
  cfg.eval.n_chips = static_cast<int>(r.get_int("eval", "n_chips", cfg.eval.n_chips));
  cfg.eval.freeze_encodings =
      r.get_bool("eval", "freeze_encodings", cfg.eval.freeze_encodings);
  cfg.eval.bonferroni_m =
      static_cast<int>(r.get_int("eval", "bonferroni_m", cfg.eval.bonferroni_m));

  r.check_unknown({"experiment", "data", "train", "eval"});
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };

  out << "[experiment]\n";
  out << "name = " << cfg.name << "\n";
  out << "hidden_widths = ";
  for (std::size_t i = 0; i < cfg.hidden_widths.size(); ++i) {
    out << (i ? ", " : "") << cfg.hidden_widths[i];
  }
  out << "\nmodels = ";
  for (std::size_t i = 0; i < cfg.families.size(); ++i) out << (i ? ", " : "") << cfg.families[i];
  out << "\n";
  for (const auto& [width, gs] : cfg.genes) {
    out << "genes_" << width << " = ";
    for (std::size_t i = 0; i < gs.size(); ++i) out << (i ? ", " : "") << gs[i];
    out << "\n";
  }
  out << "master_seed = " << cfg.master_seed << "\n\n";

  out << "[data]\n";
  out << "train_size = " << cfg.data.train_size << "\n";
  out << "val_size = " << cfg.data.val_size << "\n";
  out << "test_size = " << cfg.data.test_size << "\n";
  out << "train_seed = " << cfg.data.train_seed << "\n";
  out << "val_seed = " << cfg.data.val_seed << "\n";
  out << "test_seed = " << cfg.data.test_seed << "\n";
  out << "balanced = " << (cfg.data.balanced ? "true" : "false") << "\n\n";

  out << "[train]\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "learning_rates = ";
  for (std::size_t i = 0; i < cfg.train.learning_rates.size(); ++i) {
    out << (i ? ", " : "") << num(cfg.train.learning_rates[i]);
  }
  out << "\n";
  out << "t_steps = " << cfg.train.t_steps << "\n";
  out << "beta = " << num(cfg.train.beta) << "\n";
  out << "delta_t = " << num(cfg.train.delta_t) << "\n";
  out << "u_thr = " << num(cfg.train.u_thr) << "\n";
  out << "r = " << num(cfg.train.r) << "\n";
  out << "surrogate_slope = " << num(cfg.train.surrogate_slope) << "\n";
  out << "adam_beta1 = " << num(cfg.train.adam_beta1) << "\n";
  out << "adam_beta2 = " << num(cfg.train.adam_beta2) << "\n";
  out << "adam_eps = " << num(cfg.train.adam_eps) << "\n";
  out << "alpha_train = " << num(cfg.train.alpha_train) << "\n";
  out << "loss = " << loss_kind_name(cfg.train.loss) << "\n";
  out << "cache_encodings = " << (cfg.train.cache_encodings ? "true" : "false") << "\n";
  out << "noise_literal_mean = " << (cfg.train.noise_literal_mean ? "true" : "false") << "\n";
  out << "hw_aware_noisy_validation = "
      << (cfg.train.hw_aware_noisy_validation ? "true" : "false") << "\n\n";

  out << "[eval]\n";
  out << "alpha = " << num(cfg.eval.alpha) << "\n";
  out << "n_chips = " << cfg.eval.n_chips << "\n";
  out << "freeze_encodings = " << (cfg.eval.freeze_encodings ? "true" : "false") << "\n";
  out << "bonferroni_m = " << cfg.eval.bonferroni_m << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(serialize_config(cfg)); }

}  // namespace cmsnn
