#include "cmsnn/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmsnn/rng.hpp"

namespace cmsnn {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
  json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["v"] = std::vector<double>(t.data(), t.data() + t.size());
  return j;
}

Tensor tensor_from_json(const json& j, bool requires_grad) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto values = j.at("v").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != rows * cols) {
    throw IoError("tensor_from_json: value count does not match shape");
  }
  Tensor t = Tensor::zeros(rows, cols, requires_grad);
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path,
                const std::map<std::string, std::uint64_t>& seed_lineage) {
  json j;
  j["format"] = "cmsnn-model-v1";
  j["family"] = family_name(model.family);
  j["name"] = model.name;
  j["widths"] = model.widths;
  j["lif"] = {{"beta", model.lif.beta},
              {"r", model.lif.r},
              {"u_thr", model.lif.u_thr},
              {"delta_t", model.lif.delta_t}};
  j["surrogate_slope"] = model.surrogate_slope;
  j["alpha_train"] = model.alpha_train;
  j["noise_literal_mean"] = model.noise_literal_mean;
  if (model.family == ModelFamily::cm) {
    j["genome"] = {{"widths", model.genome.widths},
                   {"genes", model.genome.gene_count()},
                   {"x", std::vector<double>(model.genome.x.data(),
                                             model.genome.x.data() + model.genome.x.size())},
                   {"o", std::vector<double>(model.genome.o.data(),
                                             model.genome.o.data() + model.genome.o.size())},
                   {"init_seed", model.genome.init_seed}};
  } else {
    json ws = json::array();
    for (const auto& w : model.weights) ws.push_back(tensor_to_json(w));
    j["weights"] = ws;
  }
  if (!seed_lineage.empty()) j["seed_lineage"] = seed_lineage;
  write_text_file(path, j.dump(2) + "\n");
}

Model load_model(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  if (j.value("format", "") != "cmsnn-model-v1") {
    throw IoError("load_model: " + path.string() + " has an unknown format tag");
  }
  Model m;
  m.family = family_from_name(j.at("family").get<std::string>());
  m.name = j.value("name", family_name(m.family));
  m.widths = j.at("widths").get<std::vector<int>>();
  const auto& lif = j.at("lif");
  m.lif = LifParams{lif.at("beta").get<double>(), lif.at("r").get<double>(),
                    lif.at("u_thr").get<double>(), lif.at("delta_t").get<double>()};
  m.surrogate_slope = j.value("surrogate_slope", 25.0);
  m.alpha_train = j.value("alpha_train", 0.0);
  m.noise_literal_mean = j.value("noise_literal_mean", false);
  if (m.family == ModelFamily::cm) {
    const auto& g = j.at("genome");
    Genome genome;
    genome.widths = g.at("widths").get<std::vector<int>>();
    const int genes = g.at("genes").get<int>();
    int total = 0;
    for (int w : genome.widths) total += w;
    genome.x = Tensor::zeros(total, genes, true);
    genome.o = Tensor::zeros(genes, genes, true);
    const auto xs = g.at("x").get<std::vector<double>>();
    const auto os = g.at("o").get<std::vector<double>>();
    if (static_cast<int>(xs.size()) != genome.x.size() ||
        static_cast<int>(os.size()) != genome.o.size()) {
      throw IoError("load_model: genome matrices disagree with widths/genes");
    }
    std::copy(xs.begin(), xs.end(), genome.x.data());
    std::copy(os.begin(), os.end(), genome.o.data());
    genome.init_seed = g.value("init_seed", std::uint64_t{0});
    m.genome = std::move(genome);
  } else {
    for (const auto& wj : j.at("weights")) {
      m.weights.push_back(tensor_from_json(wj, /*requires_grad=*/true));
    }
  }
  return m;
}

void save_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_acc\n";
  char buf[96];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss,
                  e.val_accuracy);
    out << buf;
  }
  write_text_file(path, out.str());
}

std::vector<EpochStats> load_history_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,val_loss,val_acc") {
    throw IoError("load_history_csv: bad header in " + path.string());
  }
  std::vector<EpochStats> history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochStats e;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg", &e.epoch, &e.train_loss, &e.val_loss,
                    &e.val_accuracy) != 4) {
      throw IoError("load_history_csv: bad row '" + line + "' in " + path.string());
    }
    history.push_back(e);
  }
  return history;
}

void save_accuracies_csv(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                         const std::filesystem::path& path) {
  std::ostringstream out;
  out << "model,chip,accuracy\n";
  char buf[64];
  for (const auto& [model, accs] : rows) {
    for (std::size_t c = 0; c < accs.size(); ++c) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g\n", c, accs[c]);
      out << model << buf;
    }
  }
  write_text_file(path, out.str());
}

std::vector<std::pair<std::string, std::vector<double>>> load_accuracies_csv(
    const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "model,chip,accuracy") {
    throw IoError("load_accuracies_csv: bad header in " + path.string());
  }
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw IoError("load_accuracies_csv: bad row '" + line + "'");
    }
    const std::string model = line.substr(0, c1);
    const double acc = std::strtod(line.c_str() + c2 + 1, nullptr);
    if (rows.empty() || rows.back().first != model) rows.push_back({model, {}});
    rows.back().second.push_back(acc);
  }
  return rows;
}

namespace {

json report_to_json(const EvalReport& r) {
  json j;
  j["hidden"] = r.hidden;
  j["alpha"] = r.alpha;
  j["n_chips"] = r.n_chips;
  j["models"] = json::array();
  for (const auto& m : r.models) {
    json mj;
    mj["model"] = m.model;
    mj["hidden"] = m.hidden;
    mj["genes"] = m.genes;
    mj["accuracies"] = m.accuracies;
    mj["median"] = m.box.median;
    mj["q1"] = m.box.q1;
    mj["q3"] = m.box.q3;
    mj["whisker_lo"] = m.box.whisker_lo;
    mj["whisker_hi"] = m.box.whisker_hi;
    mj["outliers"] = m.box.outliers;
    if (m.clean_accuracy >= 0.0) mj["clean_accuracy"] = m.clean_accuracy;
    j["models"].push_back(mj);
  }
  j["tests"] = json::array();
  for (const auto& t : r.tests) {
    j["tests"].push_back({{"a", t.model_a},
                          {"b", t.model_b},
                          {"u", t.u_stat},
                          {"p_raw", t.p_raw},
                          {"p_adjusted", t.p_adjusted}});
  }
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.hidden = j.at("hidden").get<int>();
  r.alpha = j.at("alpha").get<double>();
  r.n_chips = j.at("n_chips").get<int>();
  for (const auto& mj : j.at("models")) {
    ModelSummary m;
    m.model = mj.at("model").get<std::string>();
    m.hidden = mj.value("hidden", r.hidden);
    m.genes = mj.value("genes", 0);
    m.accuracies = mj.at("accuracies").get<std::vector<double>>();
    m.box.median = mj.at("median").get<double>();
    m.box.q1 = mj.at("q1").get<double>();
    m.box.q3 = mj.at("q3").get<double>();
    m.box.whisker_lo = mj.at("whisker_lo").get<double>();
    m.box.whisker_hi = mj.at("whisker_hi").get<double>();
    m.box.outliers = mj.value("outliers", std::vector<double>{});
    m.clean_accuracy = mj.value("clean_accuracy", -1.0);
    r.models.push_back(std::move(m));
  }
  for (const auto& tj : j.at("tests")) {
    PairwiseTest t;
    t.model_a = tj.at("a").get<std::string>();
    t.model_b = tj.at("b").get<std::string>();
    t.u_stat = tj.at("u").get<double>();
    t.p_raw = tj.at("p_raw").get<double>();
    t.p_adjusted = tj.at("p_adjusted").get<double>();
    r.tests.push_back(std::move(t));
  }
  return r;
}

}  // namespace

void save_report_json(const std::vector<EvalReport>& groups, const std::filesystem::path& path) {
  json j;
  j["format"] = "cmsnn-report-v1";
  j["groups"] = json::array();
  for (const auto& g : groups) j["groups"].push_back(report_to_json(g));
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<EvalReport> load_report_json(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("load_report_json: " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "cmsnn-report-v1") {
    throw IoError("load_report_json: " + path.string() + " has an unknown format tag");
  }
  std::vector<EvalReport> groups;
  for (const auto& gj : j.at("groups")) groups.push_back(report_from_json(gj));
  return groups;
}

void save_box_geometry_csv(const std::vector<EvalReport>& groups,
                           const std::filesystem::path& path) {
  std::ostringstream out;
  out << "group,model,median,q1,q3,whisker_lo,whisker_hi,outliers\n";
  char buf[192];
  for (const auto& g : groups) {
    for (const auto& m : g.models) {
      std::snprintf(buf, sizeof buf, "w%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,", g.hidden,
                    m.model.c_str(), m.box.median, m.box.q1, m.box.q3, m.box.whisker_lo,
                    m.box.whisker_hi);
      out << buf;
      for (std::size_t i = 0; i < m.box.outliers.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? ";" : "", m.box.outliers[i]);
        out << buf;
      }
      out << '\n';
    }
  }
  write_text_file(path, out.str());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  return fnv1a(read_text_file(path));
}

}  // namespace cmsnn
