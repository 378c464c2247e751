#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "dcrf/config.hpp"
#include "dcrf/errors.hpp"

using namespace dcrf;

namespace {

const char* kMinimal = R"({"labels": 3})";

const char* kFull = R"({
  "labels": 4,
  "unary": "convnet",
  "crf": {
    "enabled": true,
    "kernels": [
      {"kind": "spatial", "sigma": [3.0, 3.0], "weight": 0.05},
      {"kind": "bilateral", "sigma": [10.0, 10.0, 30.0, 30.0, 30.0], "weight": 0.01}
    ],
    "compatibility": "matrix",
    "compatibility_matrix": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1],
    "iterations": 7,
    "filter_mode": "brute",
    "sigma_grad": "brute",
    "normalize_filter": false
  },
  "optimizer": {"momentum": 0.8, "weight_decay": 0.001, "lr_top": 0.1, "lr_body": 0.01,
                "lr_crf": 0.001, "weight_decay_crf": true},
  "training": {"epochs": 3, "batch_size": 5, "seed": 42},
  "loss": "sum"
})";

RunConfig parse(const std::string& text) { return parse_run_config(text, "test"); }

}  // namespace

TEST_CASE("a minimal config fills every default") {
  RunConfig cfg = parse(kMinimal);
  CHECK(cfg.labels == 3);
  CHECK(cfg.unary == "linear");
  CHECK(cfg.crf.enabled);
  REQUIRE(cfg.crf.kernels.size() == 2);
  CHECK(cfg.crf.kernels[0].kind == FeatureKind::spatial);
  CHECK(cfg.crf.kernels[1].kind == FeatureKind::bilateral);
  CHECK(cfg.crf.compatibility == CompatMode::potts);
  CHECK(cfg.crf.iterations == 5);
  CHECK(cfg.crf.filter_mode == FilterMode::lattice);
  CHECK(cfg.crf.sigma_grad == SigmaGradMode::frozen);
  CHECK(!cfg.crf.normalize_filter);
  CHECK(cfg.optimizer.momentum == 0.9);
  CHECK(cfg.optimizer.weight_decay == 0.0005);
  CHECK(cfg.optimizer.lr_top == 0.01);
  CHECK(cfg.training.epochs == 10);
  CHECK(cfg.training.batch_size == 20);
  CHECK(cfg.training.seed == 1);
  CHECK(cfg.loss == LossNorm::mean);
}

TEST_CASE("a full config reads back every field") {
  RunConfig cfg = parse(kFull);
  CHECK(cfg.labels == 4);
  CHECK(cfg.unary == "convnet");
  REQUIRE(cfg.crf.kernels.size() == 2);
  CHECK(cfg.crf.kernels[0].sigma == std::vector<double>{3.0, 3.0});
  CHECK(cfg.crf.kernels[1].weight == 0.01);
  CHECK(cfg.crf.compatibility == CompatMode::matrix);
  CHECK(cfg.crf.compatibility_matrix.size() == 16);
  CHECK(cfg.crf.iterations == 7);
  CHECK(cfg.crf.filter_mode == FilterMode::brute);
  CHECK(cfg.crf.sigma_grad == SigmaGradMode::brute);
  CHECK(cfg.optimizer.weight_decay_crf);
  CHECK(cfg.optimizer.lr_crf == 0.001);
  CHECK(cfg.training.seed == 42);
  CHECK(cfg.loss == LossNorm::sum);
}

TEST_CASE("unknown keys are rejected at every nesting level") {
  CHECK_THROWS_WITH_AS(parse(R"({"labels": 3, "labelz": 1})"), doctest::Contains("unknown key 'labelz'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse(R"({"labels": 3, "crf": {"iters": 5}})"),
                       doctest::Contains("unknown key 'iters'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse(R"({"labels": 3, "crf": {"kernels": [{"kind": "spatial", "sigma": [1, 1], "w": 2}]}})"),
      doctest::Contains("unknown key 'w'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse(R"({"labels": 3, "optimizer": {"lr": 0.1}})"),
                       doctest::Contains("unknown key 'lr'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse(R"({"labels": 3, "training": {"epoch": 1}})"),
                       doctest::Contains("unknown key 'epoch'"), ConfigError);
}

TEST_CASE("malformed JSON and wrong value shapes fail loudly") {
  CHECK_THROWS_AS(parse("not json"), ConfigError);
  CHECK_THROWS_AS(parse("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": "three"})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "crf": {"kernels": 7}})"), ConfigError);
}

TEST_CASE("semantic validation rejects inconsistent settings") {
  CHECK_THROWS_AS(parse(R"({"labels": 1})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "unary": "mlp"})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "crf": {"iterations": -1}})"), ConfigError);
  CHECK_THROWS_AS(
      parse(R"({"labels": 3, "crf": {"kernels": [{"kind": "spatial", "sigma": [1.0], "weight": 1}]}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse(R"({"labels": 3, "crf": {"kernels": [{"kind": "spatial", "sigma": [1.0, -2.0], "weight": 1}]}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse(R"({"labels": 3, "crf": {"kernels": [{"kind": "cubic", "sigma": [1.0], "weight": 1}]}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse(R"({"labels": 3, "crf": {"compatibility": "matrix", "compatibility_matrix": [1, 2]}})"),
      ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "optimizer": {"momentum": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "optimizer": {"lr_top": -0.1}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "training": {"epochs": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "training": {"batch_size": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"labels": 3, "loss": "median"})"), ConfigError);
}

TEST_CASE("an explicitly empty kernel list falls back to the defaults") {
  RunConfig cfg = parse(R"({"labels": 3, "crf": {"kernels": []}})");
  REQUIRE(cfg.crf.kernels.size() == 2);
  CHECK(cfg.crf.kernels[0].kind == FeatureKind::spatial);
  CHECK(cfg.crf.kernels[1].kind == FeatureKind::bilateral);
  cfg.crf.kernels.clear();
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("at least one kernel"), ConfigError);
}

TEST_CASE("matrix compatibility without a matrix means identity") {
  RunConfig cfg = parse(R"({"labels": 3, "crf": {"compatibility": "matrix"}})");
  CHECK(cfg.crf.compatibility_matrix.empty());
  PairwiseModel model = cfg.make_pairwise();
  CHECK(model.compat.mode == CompatMode::matrix);
  for (int l = 0; l < 3; ++l)
    for (int l2 = 0; l2 < 3; ++l2) CHECK(model.compat(l, l2) == (l == l2 ? 1.0 : 0.0));
}

TEST_CASE("analytic bandwidth gradients require the brute filter without normalization") {
  CHECK_THROWS_WITH_AS(parse(R"({"labels": 3, "crf": {"sigma_grad": "brute"}})"),
                       doctest::Contains("brute filter"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse(R"({"labels": 3, "crf": {"sigma_grad": "brute", "filter_mode": "brute",
                                     "normalize_filter": true}})"),
      doctest::Contains("filter normalization"), ConfigError);
  CHECK_NOTHROW(parse(R"({"labels": 3, "crf": {"sigma_grad": "brute", "filter_mode": "brute"}})"));
  CHECK_NOTHROW(parse(R"({"labels": 3, "crf": {"sigma_grad": "finite_diff"}})"));
}

TEST_CASE("dump then parse is a fixed point") {
  RunConfig cfg = parse(kFull);
  const std::string dumped = dump_run_config(cfg);
  RunConfig back = parse_run_config(dumped, "dump");
  CHECK(dump_run_config(back) == dumped);
  CHECK(back.labels == cfg.labels);
  CHECK(back.crf.kernels[1].sigma == cfg.crf.kernels[1].sigma);
  CHECK(back.optimizer.lr_crf == cfg.optimizer.lr_crf);
  CHECK(back.training.seed == cfg.training.seed);
  CHECK(back.loss == cfg.loss);
}

TEST_CASE("configs load from disk with the path in error messages") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dcrf_cfg.json").string();
  {
    std::ofstream out(path);
    out << kMinimal;
  }
  RunConfig cfg = load_run_config(path);
  CHECK(cfg.labels == 3);
  CHECK_THROWS_AS(load_run_config(path + ".absent"), DataError);
}

TEST_CASE("the pairwise factory mirrors the kernel list") {
  RunConfig cfg = parse(kFull);
  PairwiseModel model = cfg.make_pairwise();
  REQUIRE(model.kernels.size() == 2);
  CHECK(model.kernels[0].weight == 0.05);
  CHECK(model.kernels[0].spec.kind == FeatureKind::spatial);
  CHECK(model.kernels[1].spec.sigma.size() == 5);
  CHECK(model.compat.mode == CompatMode::matrix);
  CHECK(model.compat.matrix.size() == 16);
}
