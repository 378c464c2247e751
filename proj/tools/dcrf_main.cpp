#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcrf/checkpoint.hpp"
#include "dcrf/config.hpp"
#include "dcrf/dataset.hpp"
#include "dcrf/errors.hpp"
#include "dcrf/filter.hpp"
#include "dcrf/gradcheck.hpp"
#include "dcrf/io_util.hpp"
#include "dcrf/metrics.hpp"
#include "dcrf/netpbm.hpp"
#include "dcrf/rng.hpp"
#include "dcrf/softmax.hpp"
#include "dcrf/trainer.hpp"

namespace fs = std::filesystem;
using namespace dcrf;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_train(const std::string& config_path, const std::string& train_path, const std::string& val_path,
              const std::string& out_dir, const std::string& resume, const std::string& stage) {
  RunConfig cfg = load_run_config(config_path);
  bool crf_active = cfg.crf.enabled;
  if (stage == "unary")
    crf_active = false;
  else if (stage == "joint")
    crf_active = true;
  else if (!stage.empty())
    throw ConfigError("--stage must be 'unary' or 'joint'");

  Manifest train = Manifest::load(train_path);
  std::optional<Manifest> val;
  if (!val_path.empty()) val = Manifest::load(val_path);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir);

  ModelState state = resume.empty() ? build_state(cfg) : resume_state(cfg, Checkpoint::load(resume));
  if (resume.empty()) standardize_linear(state, train);

  const std::string log_path = (fs::path(out_dir) / "train_log.csv").string();
  const std::string last_path = (fs::path(out_dir) / "last.ckpt").string();
  const std::string best_path = (fs::path(out_dir) / "best.ckpt").string();
  std::string log = "epoch,train_loss,val_loss,val_miou\n";

  if (cfg.training.epochs == 0) {
    state_to_checkpoint(state).save(last_path);
    write_file_atomic(log_path, log);
    std::printf("no epochs requested; wrote initial checkpoint to %s\n", last_path.c_str());
    return 0;
  }

  for (int epoch = 0; epoch < cfg.training.epochs; ++epoch) {
    const auto batches =
        make_batches(static_cast<int>(train.entries.size()), cfg.training.batch_size, cfg.training.seed, epoch);
    double loss_sum = 0.0;
    long samples = 0;
    for (const auto& batch_idx : batches) {
      std::vector<Sample> batch;
      batch.reserve(batch_idx.size());
      for (int idx : batch_idx) batch.push_back(load_sample(train.entries[idx]));
      StepOutcome so = train_step(batch, state, crf_active);
      if (!so.applied) std::fprintf(stderr, "epoch %d: %s\n", epoch, so.note.c_str());
      loss_sum += so.loss * static_cast<double>(batch.size());
      samples += static_cast<long>(batch.size());
    }
    const double train_loss = loss_sum / static_cast<double>(samples);
    state.epoch = epoch + 1;

    std::string val_loss_text, val_miou_text;
    if (val) {
      EvalOutcome ev = evaluate(*val, state, crf_active);
      val_loss_text = format_double(ev.mean_loss);
      val_miou_text = format_double(ev.miou);
      if (ev.miou > state.best_miou) {
        state.best_miou = ev.miou;
        state_to_checkpoint(state).save(best_path);
      }
    }
    log += std::to_string(epoch) + "," + format_double(train_loss) + "," + val_loss_text + "," + val_miou_text + "\n";
    write_file_atomic(log_path, log);
    state_to_checkpoint(state).save(last_path);
    std::printf("epoch %d: train_loss %.6f%s%s\n", epoch, train_loss, val ? " val_miou " : "",
                val ? val_miou_text.c_str() : "");
  }
  return 0;
}

int cmd_infer(const std::string& ckpt_path, const std::string& image_path, const std::string& out_prefix) {
  ModelState state = state_from_checkpoint(Checkpoint::load(ckpt_path));
  ImageU8 image = read_ppm(image_path);
  MarginalField q = predict_marginals(state, image, state.config.crf.enabled);
  LabelMap pred = argmax_labeling(q);

  LabelMap confidence(q.height, q.width);
  for (int i = 0; i < q.pixels(); ++i) {
    const auto row = q.pixel(i);
    double best = 0.0;
    for (double v : row) best = std::max(best, v);
    confidence.labels[i] = static_cast<int>(std::lround(255.0 * best));
  }

  ImageU8 overlay(q.height, q.width);
  for (int i = 0; i < q.pixels(); ++i) {
    const auto color = label_color(pred.labels[i]);
    for (int c = 0; c < 3; ++c)
      overlay.rgb[static_cast<std::size_t>(i) * 3 + c] =
          static_cast<std::uint8_t>((color[c] + image.rgb[static_cast<std::size_t>(i) * 3 + c]) / 2);
  }

  write_pgm(out_prefix + "_pred.pgm", pred);
  write_pgm(out_prefix + "_conf.pgm", confidence);
  write_ppm(out_prefix + "_overlay.ppm", overlay);
  std::printf("wrote %s_pred.pgm, %s_conf.pgm, %s_overlay.ppm\n", out_prefix.c_str(), out_prefix.c_str(),
              out_prefix.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& manifest_path, const std::string& out_csv) {
  ModelState state = state_from_checkpoint(Checkpoint::load(ckpt_path));
  Manifest manifest = Manifest::load(manifest_path);
  const LabelSpace labels{state.config.labels};
  ConfusionMatrix cm(state.config.labels);
  for (const auto& entry : manifest.entries) {
    Sample s = load_sample(entry);
    cm.accumulate(s.labels, argmax_labeling(predict_marginals(state, s.image, state.config.crf.enabled)), labels);
  }
  const auto iou = iou_per_class(cm);
  std::string csv = "class_id,class_name,iou\n";
  for (int c = 0; c < state.config.labels; ++c) {
    const std::string name = c == 0 ? "background" : "class_" + std::to_string(c);
    csv += std::to_string(c) + "," + name + "," + (std::isnan(iou[c]) ? "undefined" : format_double(iou[c])) + "\n";
  }
  csv += "mean,," + format_double(mean_iou(cm)) + "\n";
  std::fputs(csv.c_str(), stdout);
  if (!out_csv.empty()) write_file_atomic(out_csv, csv);
  return 0;
}

constexpr const char* kDefaultGradcheckConfig = R"json({
  "labels": 3,
  "unary": "convnet",
  "crf": {
    "enabled": true,
    "kernels": [
      {"kind": "spatial", "sigma": [2.5, 2.5], "weight": 1.0},
      {"kind": "bilateral", "sigma": [4.0, 4.0, 22.0, 22.0, 22.0], "weight": 1.0}
    ],
    "compatibility": "matrix",
    "iterations": 3,
    "filter_mode": "brute",
    "sigma_grad": "brute"
  },
  "training": {"seed": 7}
})json";

int cmd_gradcheck(const std::string& config_path, std::uint64_t seed, int size, int instances) {
  RunConfig cfg = config_path.empty() ? parse_run_config(kDefaultGradcheckConfig, "builtin gradcheck config")
                                      : load_run_config(config_path);
  GradCheckReport report = run_gradcheck(cfg, seed, size, instances);
  std::fputs(format_gradcheck(report).c_str(), stdout);
  return report.pass ? 0 : 3;
}

// One row per grid size; each timing covers plan build plus one apply so the
// scaling fit sees the full cost of a fresh filtering pass.
int cmd_bench_filter(const std::vector<int>& sizes, const std::string& out_csv) {
  std::string csv = "N,d,brute_ms,lattice_ms,rel_l2_error\n";
  const KernelSpec spec{FeatureKind::bilateral, {20.0, 20.0, 16.0, 16.0, 16.0}};
  for (int size : sizes) {
    if (size < 2) throw ConfigError("bench sizes must be at least 2");
    Rng rng(415 + static_cast<std::uint64_t>(size));
    ImageU8 image(size, size);
    for (auto& b : image.rgb) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    Field3 values(size, size, 4);
    for (auto& v : values.values) v = rng.uniform();
    FeatureField feats = build_features(image, FeatureKind::bilateral);

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    FilterPlan brute(feats, spec, FilterMode::brute);
    Field3 brute_out = brute.apply(values);
    auto t1 = clock::now();
    FilterPlan lattice(feats, spec, FilterMode::lattice);
    Field3 lattice_out = lattice.apply(values);
    auto t2 = clock::now();

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < brute_out.values.size(); ++i) {
      const double d = brute_out.values[i] - lattice_out.values[i];
      num += d * d;
      den += brute_out.values[i] * brute_out.values[i];
    }
    const double rel = std::sqrt(num / den);
    auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
    csv += std::to_string(size * size) + ",5," + format_double(ms(t0, t1)) + "," + format_double(ms(t1, t2)) +
           "," + format_double(rel) + "\n";
  }
  std::fputs(csv.c_str(), stdout);
  if (!out_csv.empty()) write_file_atomic(out_csv, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dense-CRF semantic segmentation: training, inference, and diagnostics"};
  app.require_subcommand(1);
  std::function<int()> action;

  auto* train = app.add_subcommand("train", "train a model, optionally in two stages");
  {
    auto opts = std::make_shared<std::tuple<std::string, std::string, std::string, std::string, std::string,
                                            std::string>>();
    train->add_option("--config", std::get<0>(*opts), "run config JSON")->required();
    train->add_option("--train", std::get<1>(*opts), "training manifest")->required();
    train->add_option("--val", std::get<2>(*opts), "validation manifest");
    train->add_option("--out", std::get<3>(*opts), "output directory")->required();
    train->add_option("--resume", std::get<4>(*opts), "checkpoint to resume parameters from");
    train->add_option("--stage", std::get<5>(*opts), "unary (CRF off) or joint (CRF on)");
    train->callback([opts, &action] {
      action = [opts] {
        return cmd_train(std::get<0>(*opts), std::get<1>(*opts), std::get<2>(*opts), std::get<3>(*opts),
                         std::get<4>(*opts), std::get<5>(*opts));
      };
    });
  }

  auto* infer = app.add_subcommand("infer", "predict labels for one image");
  {
    auto opts = std::make_shared<std::tuple<std::string, std::string, std::string>>();
    infer->add_option("--ckpt", std::get<0>(*opts), "checkpoint file")->required();
    infer->add_option("--image", std::get<1>(*opts), "input PPM")->required();
    infer->add_option("--out", std::get<2>(*opts), "output prefix")->required();
    infer->callback([opts, &action] {
      action = [opts] { return cmd_infer(std::get<0>(*opts), std::get<1>(*opts), std::get<2>(*opts)); };
    });
  }

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over a manifest");
  {
    auto opts = std::make_shared<std::tuple<std::string, std::string, std::string>>();
    eval->add_option("--ckpt", std::get<0>(*opts), "checkpoint file")->required();
    eval->add_option("--manifest", std::get<1>(*opts), "evaluation manifest")->required();
    eval->add_option("--out", std::get<2>(*opts), "also write the CSV here");
    eval->callback([opts, &action] {
      action = [opts] { return cmd_eval(std::get<0>(*opts), std::get<1>(*opts), std::get<2>(*opts)); };
    });
  }

  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic gradients against finite differences");
  {
    auto opts = std::make_shared<std::tuple<std::string, std::uint64_t, int, int>>("", 1, 8, 1);
    gradcheck->add_option("--config", std::get<0>(*opts), "run config JSON (default: built-in small instance)");
    gradcheck->add_option("--seed", std::get<1>(*opts), "instance seed");
    gradcheck->add_option("--size", std::get<2>(*opts), "square instance size");
    gradcheck->add_option("--instances", std::get<3>(*opts), "number of random instances");
    gradcheck->callback([opts, &action] {
      action = [opts] {
        return cmd_gradcheck(std::get<0>(*opts), std::get<1>(*opts), std::get<2>(*opts), std::get<3>(*opts));
      };
    });
  }

  auto* bench = app.add_subcommand("bench-filter", "time brute vs lattice filtering");
  {
    auto opts = std::make_shared<std::tuple<std::vector<int>, std::string>>();
    bench->add_option("sizes", std::get<0>(*opts), "square grid sizes")->expected(-1);
    bench->add_option("--out", std::get<1>(*opts), "also write the CSV here");
    bench->callback([opts, &action] {
      action = [opts] {
        auto sizes = std::get<0>(*opts);
        if (sizes.empty()) sizes = {64, 128, 192};
        return cmd_bench_filter(sizes, std::get<1>(*opts));
      };
    });
  }

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  {
    auto opts = std::make_shared<std::tuple<std::string, int, int, int, double, std::uint64_t>>("", 100, 64, 4, 25.0,
                                                                                                1);
    synth->add_option("--out", std::get<0>(*opts), "output directory")->required();
    synth->add_option("--count", std::get<1>(*opts), "sample count");
    synth->add_option("--size", std::get<2>(*opts), "square image size");
    synth->add_option("--labels", std::get<3>(*opts), "number of labels including background");
    synth->add_option("--noise", std::get<4>(*opts), "Gaussian pixel noise standard deviation");
    synth->add_option("--seed", std::get<5>(*opts), "dataset seed");
    synth->callback([opts, &action] {
      action = [opts] {
        synth_dataset(std::get<0>(*opts), std::get<1>(*opts), std::get<2>(*opts), std::get<3>(*opts),
                      std::get<4>(*opts), std::get<5>(*opts));
        std::printf("wrote %s/manifest.tsv\n", std::get<0>(*opts).c_str());
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
    return action ? action() : 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
