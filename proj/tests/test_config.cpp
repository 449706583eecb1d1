#include <doctest.h>

#include <filesystem>

#include "cmsnn/config.hpp"
#include "cmsnn/serialize.hpp"

using namespace cmsnn;

TEST_CASE("config defaults and round trip") {
  const ExperimentConfig cfg;
  SUBCASE("paper defaults") {
    CHECK(cfg.hidden_widths == std::vector<int>{32, 128});
    CHECK(cfg.genes.at(32) == std::vector<int>{4, 8, 16});
    CHECK(cfg.genes.at(128) == std::vector<int>{4, 16, 64});
    CHECK(cfg.train.epochs == 300);
    CHECK(cfg.train.batch_size == 512);
    CHECK(cfg.train.learning_rates == std::vector<double>{0.03, 0.003, 0.0003});
    CHECK(cfg.train.t_steps == 100);
    CHECK(cfg.train.beta == 0.9);
    CHECK(cfg.eval.alpha == 0.1);
    CHECK(cfg.eval.n_chips == 30);
    CHECK(cfg.data.train_size == 5000);
    // beta = 1 - dt/tau with tau = 10
    CHECK(cfg.train.lif().tau() == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("serialize -> parse is the identity") {
    const std::string text = serialize_config(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
  }
  SUBCASE("parsing an empty document yields the defaults") {
    const ExperimentConfig parsed = parse_config("");
    CHECK(serialize_config(parsed) == serialize_config(cfg));
  }
}

TEST_CASE("config parsing diagnostics") {
  SUBCASE("unknown key") {
    CHECK_THROWS_WITH_AS(parse_config("[train]\nepochz = 3\n"),
                         doctest::Contains("epochz"), IoError);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(parse_config("[training]\nepochs = 3\n"), IoError);
  }
  SUBCASE("bad boolean") {
    CHECK_THROWS_AS(parse_config("[data]\nbalanced = yes\n"), IoError);
  }
  SUBCASE("bad number") {
    CHECK_THROWS_AS(parse_config("[train]\nepochs = many\n"), IoError);
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(parse_config("[train]\nepochs = 1\nepochs = 2\n"), IoError);
  }
  SUBCASE("key outside a section") {
    CHECK_THROWS_AS(parse_config("epochs = 1\n"), IoError);
  }
  SUBCASE("values are applied") {
    const ExperimentConfig cfg = parse_config(
        "[experiment]\nhidden_widths = 32\ngenes_32 = 2, 4\nmaster_seed = 9\n"
        "[train]\nepochs = 5\nloss = per-step\n[eval]\nn_chips = 3\n");
    CHECK(cfg.hidden_widths == std::vector<int>{32});
    CHECK(cfg.genes.at(32) == std::vector<int>{2, 4});
    CHECK(cfg.master_seed == 9);
    CHECK(cfg.train.epochs == 5);
    CHECK(cfg.train.loss == LossKind::per_step);
    CHECK(cfg.eval.n_chips == 3);
  }
}

TEST_CASE("model specs") {
  const ExperimentConfig cfg;
  const auto specs = cfg.model_specs(128);
  REQUIRE(specs.size() == 5);
  CHECK(specs[0].id == "w128-mlp");
  CHECK(specs[1].id == "w128-mlp-hw-aware");
  CHECK(specs[2].id == "w128-cm-g4");
  CHECK(specs[3].id == "w128-cm-g16");
  CHECK(specs[4].id == "w128-cm-g64");
  CHECK(specs[4].genes == 64);
  CHECK(specs[4].family == ModelFamily::cm);
  CHECK(cfg.model_widths(128) == std::vector<int>{4, 128, 3});
}

TEST_CASE("smoke config is tiny") {
  const ExperimentConfig cfg = ExperimentConfig::smoke();
  CHECK(cfg.data.train_size == 30);
  CHECK(cfg.data.val_size == 9);
  CHECK(cfg.data.test_size == 9);
  CHECK(cfg.train.epochs == 1);
  CHECK(cfg.eval.n_chips == 2);
  CHECK(cfg.hidden_widths == std::vector<int>{8});
}

TEST_CASE("model checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cmsnn_test_ckpt";
  std::filesystem::create_directories(dir);
  SUBCASE("mlp") {
    Rng rng(1);
    const Model m = make_mlp("mlp", {4, 8, 3}, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
    save_model(m, dir / "mlp.json", {{"master", 7}});
    const Model back = load_model(dir / "mlp.json");
    CHECK(back.family == ModelFamily::mlp);
    CHECK(back.widths == m.widths);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      for (int i = 0; i < m.weights[l].size(); ++i) {
        CHECK(back.weights[l].data()[i] == m.weights[l].data()[i]);
      }
    }
  }
  SUBCASE("cm") {
    Rng rng(2);
    Model m = make_cm("cm-g4", {4, 6, 3}, 4, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
    m.genome.init_seed = 1234;
    save_model(m, dir / "cm.json");
    const Model back = load_model(dir / "cm.json");
    CHECK(back.family == ModelFamily::cm);
    CHECK(back.genome.widths == m.genome.widths);
    CHECK(back.genome.init_seed == 1234);
    for (int i = 0; i < m.genome.x.size(); ++i) {
      CHECK(back.genome.x.data()[i] == m.genome.x.data()[i]);
    }
  }
  SUBCASE("hw-aware keeps its training noise setting") {
    Rng rng(3);
    const Model m =
        make_mlp("mlp-hw-aware", {4, 8, 3}, LifParams{0.9, 1.0, 1.0, 1.0}, rng, true, 0.1);
    save_model(m, dir / "hw.json");
    const Model back = load_model(dir / "hw.json");
    CHECK(back.family == ModelFamily::mlp_hw_aware);
    CHECK(back.alpha_train == 0.1);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("history and accuracy tables round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cmsnn_test_tables";
  std::filesystem::create_directories(dir);
  SUBCASE("history csv") {
    std::vector<EpochStats> history{{0, 1.5, 1.2, 0.4}, {1, 1.1, 1.0, 0.55}};
    save_history_csv(history, dir / "history.csv");
    const auto back = load_history_csv(dir / "history.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[1].epoch == 1);
    CHECK(back[1].train_loss == 1.1);
    CHECK(back[1].val_accuracy == 0.55);
  }
  SUBCASE("accuracies csv") {
    const std::vector<std::pair<std::string, std::vector<double>>> rows{
        {"w32-mlp", {0.9, 0.85}}, {"w32-cm-g4", {0.95, 0.94}}};
    save_accuracies_csv(rows, dir / "acc.csv");
    const auto back = load_accuracies_csv(dir / "acc.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "w32-mlp");
    CHECK(back[0].second == std::vector<double>{0.9, 0.85});
    CHECK(back[1].second == std::vector<double>{0.95, 0.94});
  }
  SUBCASE("report json") {
    ModelSummary m;
    m.model = "mlp";
    m.hidden = 32;
    m.accuracies = {0.9, 0.8, 0.85};
    const EvalReport r = summarize({m}, 0.1, 3, 32);
    save_report_json({r}, dir / "report.json");
    const auto back = load_report_json(dir / "report.json");
    REQUIRE(back.size() == 1);
    CHECK(back[0].hidden == 32);
    CHECK(back[0].models[0].accuracies == m.accuracies);
    CHECK(back[0].models[0].box.median == 0.85);
  }
  SUBCASE("malformed report") {
    write_text_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_report_json(dir / "bad.json"), IoError);
  }
  std::filesystem::remove_all(dir);
}
