#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nero/errors.hpp"
#include "nero/harness/config.hpp"
#include "nero/harness/dataset.hpp"
#include "nero/harness/experiments.hpp"
#include "nero/harness/idx.hpp"
#include "nero/harness/run.hpp"

using namespace nero;
using json = nlohmann::json;

namespace {

/// 2-image 2x2 crafted IDX fixture with known byte values.
std::vector<std::uint8_t> image_fixture_bytes() {
  return {
      0x00, 0x00, 0x08, 0x03,              // magic 0x00000803
      0x00, 0x00, 0x00, 0x02,              // 2 images
      0x00, 0x00, 0x00, 0x02,              // 2 rows
      0x00, 0x00, 0x00, 0x02,              // 2 cols
      0,    51,   102,  153,               // image 0
      204,  255,  0,    255,               // image 1
  };
}

TrainConfig blobs_config() {
  TrainConfig cfg;
  cfg.model.depth = 2;
  cfg.model.input_dim = 8;
  cfg.model.hidden_dim = 8;
  cfg.model.output_dim = 4;
  cfg.dataset = BlobsSpec{4, 8, 128, 0.2};
  cfg.batch_size = 16;
  cfg.epochs = 2;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("idx: crafted fixture parses to exact tensor values") {
  const auto bytes = image_fixture_bytes();
  const IdxFile f = parse_idx(bytes);
  CHECK(f.magic == 0x00000803);
  CHECK(f.dims == std::vector<std::uint32_t>{2, 2, 2});
  const Tensor t = idx_images_to_tensor(f);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 4);
  CHECK(t.at(0, 0) == 0.0);
  CHECK(t.at(0, 1) == doctest::Approx(51.0 / 255.0).epsilon(1e-15));
  CHECK(t.at(0, 3) == doctest::Approx(153.0 / 255.0).epsilon(1e-15));
  CHECK(t.at(1, 1) == 1.0);
  CHECK(t.at(1, 3) == 1.0);
}

TEST_CASE("idx: serialize(parse(bytes)) == bytes") {
  const auto bytes = image_fixture_bytes();
  CHECK(serialize_idx(parse_idx(bytes)) == bytes);

  const std::vector<std::uint8_t> labels = {0x00, 0x00, 0x08, 0x01,
                                            0x00, 0x00, 0x00, 0x03,
                                            7,    2,    9};
  CHECK(serialize_idx(parse_idx(labels)) == labels);
  CHECK(idx_labels_to_vector(parse_idx(labels)) == std::vector<int>{7, 2, 9});
}

TEST_CASE("idx: wrong magic, truncation, empty file") {
  std::vector<std::uint8_t> bad = image_fixture_bytes();
  bad[3] = 0x02;  // magic 0x00000802
  CHECK_THROWS_AS(parse_idx(bad), DataError);
  CHECK_THROWS_WITH_AS(parse_idx(bad), doctest::Contains("0x00000802"),
                       DataError);

  auto truncated = image_fixture_bytes();
  truncated.pop_back();
  CHECK_THROWS_AS(parse_idx(truncated), DataError);

  auto extended = image_fixture_bytes();
  extended.push_back(0);
  CHECK_THROWS_AS(parse_idx(extended), DataError);

  const std::vector<std::uint8_t> empty;
  CHECK_THROWS_AS(parse_idx(empty), DataError);
}

TEST_CASE("blobs: sigma=0 points sit on the class means; deterministic") {
  Rng rng(3);
  const Dataset d = make_blobs(3, 5, 30, 0.0, rng);
  CHECK(d.count() == 30);
  for (std::size_t i = 0; i < d.count(); ++i) {
    const int c = d.labels[i];
    CHECK(c == static_cast<int>(i % 3));
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(d.inputs.at(i, j) == (static_cast<int>(j) == c ? 1.0 : 0.0));
  }

  Rng r1(9), r2(9);
  const Dataset a = make_blobs(2, 4, 50, 0.3, r1);
  const Dataset b = make_blobs(2, 4, 50, 0.3, r2);
  for (std::size_t i = 0; i < a.inputs.size(); ++i)
    CHECK(a.inputs[i] == b.inputs[i]);

  CHECK_THROWS_AS(make_blobs(1, 4, 10, 0.1, r1), ConfigError);
  CHECK_THROWS_AS(make_blobs(5, 4, 10, 0.1, r1), ConfigError);
}

TEST_CASE("config: json round trip preserves the hash") {
  TrainConfig cfg = blobs_config();
  cfg.schedule.decay = Schedule::Decay::per_epoch;
  cfg.schedule.factor = 0.9;
  const json j = train_config_to_json(cfg);
  const TrainConfig back = train_config_from_json(j);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(canonical_config_json(back) == canonical_config_json(cfg));
}

TEST_CASE("config: schema violations are config errors") {
  json j = train_config_to_json(blobs_config());
  {
    json bad = j;
    bad["schema_version"] = 2;
    CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  }
  {
    json bad = j;
    bad["optimizer"]["kind"] = "adagrad";
    CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  }
  {
    json bad = j;
    bad["optimizer"]["learning_rate"] = 0.1;  // unknown key
    CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  }
  {
    json bad = j;
    bad.erase("dataset");
    CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  }
  {
    json bad = j;
    bad["batch_size"] = 0;
    CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  }
}

TEST_CASE("train: one nero step decreases the fixture batch loss") {
  TrainConfig cfg = blobs_config();
  cfg.epochs = 1;
  const RunRecord rec = train(cfg);
  CHECK(rec.status == "ok");
  REQUIRE(rec.steps.size() >= 2);
  CHECK(rec.steps[1].train_loss < rec.steps[0].train_loss);
}

TEST_CASE("train: epochs=0 leaves only the initial evaluation") {
  TrainConfig cfg = blobs_config();
  cfg.epochs = 0;
  const RunRecord rec = train(cfg);
  CHECK(rec.status == "ok");
  CHECK(rec.steps.empty());
  CHECK(rec.evals.size() == 1);
  CHECK(rec.evals[0].epoch == 0);
}

TEST_CASE("train: identical config+seed reproduces records byte-for-byte") {
  TrainConfig cfg = blobs_config();
  const RunRecord a = train(cfg);
  const RunRecord b = train(cfg);
  CHECK(metrics_csv(a) == metrics_csv(b));
  json sa = summary_json(a);
  json sb = summary_json(b);
  sa.erase("wall_seconds");
  sb.erase("wall_seconds");
  CHECK(sa.dump() == sb.dump());
}

TEST_CASE("train: nero residual columns stay within 1e-9") {
  TrainConfig cfg = blobs_config();
  const RunRecord rec = train(cfg);
  CHECK_FALSE(rec.residual_columns.empty());
  for (const auto& s : rec.steps) {
    for (double r : s.res_mean) CHECK(r <= 1e-9);
    for (double r : s.res_norm) CHECK(r <= 1e-9);
  }
}

TEST_CASE("train: run outputs land on disk and the checkpoint reloads") {
  const std::string dir = "harness_run_outputs_test";
  TrainConfig cfg = blobs_config();
  cfg.epochs = 1;
  const RunRecord rec = train(cfg, dir);
  CHECK(std::filesystem::exists(dir + "/metrics.csv"));
  CHECK(std::filesystem::exists(dir + "/summary.json"));
  CHECK(std::filesystem::exists(dir + "/checkpoint.bin"));

  // metrics.csv begins with a JSON header carrying the config hash
  std::ifstream csv(dir + "/metrics.csv");
  std::string header_line;
  std::getline(csv, header_line);
  const json header = json::parse(header_line);
  CHECK(header.at("config_hash").get<std::string>() == rec.hash);
  CHECK(header.at("schema_version").get<int>() == 1);

  OptimizerState opt_state;
  const Model m = load_checkpoint_file(dir + "/checkpoint.bin", &opt_state);
  CHECK(opt_state.name == "nero");
  CHECK(opt_state.t == static_cast<std::int64_t>(rec.steps.size()));
  CHECK(m.step_counter == rec.steps.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("train: dataset/model width mismatch is a config error") {
  TrainConfig cfg = blobs_config();
  cfg.model.input_dim = 9;  // blobs dim is 8
  CHECK_THROWS_AS(train(cfg), ConfigError);
}

TEST_CASE("sgd at lr=1 diverges on the noisy fixture; grid survives it") {
  // 4-layer width-64 relu net on high-noise blobs: lr=1.0 blows past the
  // divergence cap within 5 epochs while small rates stay finite.
  TrainConfig cfg;
  cfg.model.depth = 4;
  cfg.model.input_dim = 64;
  cfg.model.hidden_dim = 64;
  cfg.model.output_dim = 4;
  cfg.dataset = BlobsSpec{4, 64, 512, 5.0};
  cfg.batch_size = 32;
  cfg.epochs = 5;
  cfg.seed = 7;
  cfg.optimizer = BaselineSpec{SgdConfig{1.0, 0.0}, false, false};

  const RunRecord rec = train(cfg);
  CHECK(rec.status == "failed");
  CHECK(rec.failed_at_step > 0);

  const GridResult grid = run_grid(cfg, {1e-4, 1e-2, 1.0}, 1, 2);
  REQUIRE(grid.cells.size() == 3);
  CHECK_FALSE(grid.cells[0].failed);
  CHECK_FALSE(grid.cells[1].failed);
  CHECK(grid.cells[2].failed);
  CHECK(grid.best_index >= 0);
  CHECK(grid.cells[static_cast<std::size_t>(grid.best_index)].lr != 1.0);
}

TEST_CASE("grid: single-element grid selects itself") {
  TrainConfig cfg = blobs_config();
  cfg.epochs = 1;
  const GridResult grid = run_grid(cfg, {0.01}, 1, 1);
  CHECK(grid.best_index == 0);
  CHECK(grid.cells[0].lr == 0.01);
  CHECK_FALSE(grid.cells[0].failed);
}

TEST_CASE("grid: repeats use distinct derived seeds, merge deterministically") {
  TrainConfig cfg = blobs_config();
  cfg.epochs = 1;
  const GridResult a = run_grid(cfg, {0.005, 0.05}, 2, 1);
  const GridResult b = run_grid(cfg, {0.005, 0.05}, 2, 2);
  CHECK(grid_csv(a) == grid_csv(b));  // parallelism never changes results
  // repeats run under distinct derived seeds
  CHECK(a.cells[0].runs[0].hash != a.cells[0].runs[1].hash);
}

TEST_CASE("ablation: 4 toggle pairs x repeats with summary rows") {
  TrainConfig cfg = blobs_config();
  cfg.epochs = 1;
  const std::vector<ConstraintToggle> toggles = {
      {true, true}, {true, false}, {false, true}, {false, false}};
  const AblationTable table = run_ablation(cfg, toggles, 3, 2);
  REQUIRE(table.cells.size() == 4);
  for (const auto& cell : table.cells) {
    CHECK(cell.runs.size() == 3);
    CHECK_FALSE(cell.failed);
    CHECK(cell.range_final_train_loss >= 0.0);
  }
  const std::string csv = ablation_csv(table);
  CHECK(csv.find("constrain_mean") == 0);

  const AblationTable single = run_ablation(cfg, {{true, true}}, 1, 1);
  CHECK(single.cells.size() == 1);

  TrainConfig sgd_cfg = cfg;
  sgd_cfg.optimizer = BaselineSpec{SgdConfig{0.1, 0.0}, false, false};
  CHECK_THROWS_AS(run_ablation(sgd_cfg, toggles, 1, 1), ConfigError);
}

TEST_CASE("ablation regression: both constraints win on the deep fixture") {
  // Seeded regression on a 16-layer width-32 net, where conditioning
  // dominates: the both-constraints cell reaches the lowest mean final
  // training loss of the four toggle cells. A fixture-specific ordering,
  // not a universal claim (shallow or very narrow nets behave
  // differently).
  TrainConfig cfg;
  cfg.model.depth = 16;
  cfg.model.input_dim = 64;
  cfg.model.hidden_dim = 32;
  cfg.model.output_dim = 8;
  cfg.dataset = BlobsSpec{8, 64, 1024, 0.5};
  cfg.batch_size = 32;
  cfg.epochs = 10;
  cfg.seed = 1;
  const std::vector<ConstraintToggle> toggles = {
      {true, true}, {true, false}, {false, true}, {false, false}};
  const AblationTable table = run_ablation(cfg, toggles, 3, 2);
  REQUIRE(table.cells.size() == 4);
  const double both = table.cells[0].mean_final_train_loss;
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK_FALSE(table.cells[i].failed);
    CHECK(both < table.cells[i].mean_final_train_loss);
  }
}

TEST_CASE("blobs fixture: nero trains a balanced single neuron to zero error") {
  // C=2 blobs in d=3 (the balanced constraint set in d=2 is a two-point
  // set, so d >= 3 is the smallest rotatable fixture). A single-neuron
  // sign classifier reaches zero training error within 200 steps.
  Rng data_rng(101);
  const Dataset d = make_blobs(2, 3, 100, 0.1, data_rng);

  MlpConfig mc;
  mc.depth = 1;
  mc.input_dim = 3;
  mc.output_dim = 1;
  mc.use_bias = false;
  Rng model_rng(140);
  Model model(mc, model_rng);

  NeroConfig ncfg;  // defaults eta=0.01, beta=0.999
  NeroOptimizer opt(model.groups(), ncfg);

  std::size_t steps_to_zero = 0;
  for (std::size_t step = 1; step <= 400; ++step) {
    if (model.evaluate(d.inputs, d.labels).error == 0.0) {
      steps_to_zero = step;
      break;
    }
    Graph g;
    auto h = model.forward(g, d.inputs);
    const int loss = model.loss(g, h, d.labels);
    g.backward(loss);
    model.collect_grads(g, h);
    opt.step(model.groups(), 1.0);
  }
  CHECK(steps_to_zero > 0);
  CHECK(steps_to_zero <= 200);
}
