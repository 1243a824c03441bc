#include "bfseg/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "bfseg/checkpoint.hpp"
#include "bfseg/complexity.hpp"
#include "bfseg/errors.hpp"
#include "bfseg/io.hpp"
#include "bfseg/label_pyramid.hpp"
#include "bfseg/metrics.hpp"
#include "bfseg/training.hpp"

namespace bfseg::cli {
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("not a boolean: " + v);
}

ChannelProfile parse_profile(const std::string& text) {
  ChannelProfile p{};
  std::istringstream in(text);
  std::string item;
  std::size_t n = 0;
  while (std::getline(in, item, ',')) {
    if (n == p.size()) throw UsageError("--profile takes exactly four comma-separated integers");
    p[n++] = std::stoi(item);
  }
  if (n != p.size()) throw UsageError("--profile takes exactly four comma-separated integers");
  return p;
}

// Combined digest over a dataset split: sha256 of "relative-path sha256" lines in sorted order.
std::string dataset_digest(const fs::path& root) {
  std::vector<fs::path> files;
  for (const char* sub : {"images", "labels"}) {
    if (!fs::is_directory(root / sub)) continue;
    for (const auto& e : fs::directory_iterator(root / sub)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& f : files) {
    listing += fs::relative(f, root).generic_string() + " " + sha256_hex(read_file(f)) + "\n";
  }
  return sha256_hex(listing);
}

Image8 overlay_image(const Tensor& image, const LabelRaster& pred, const LabelRaster& truth) {
  Image8 rgb = tensor_to_image(image);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool t = truth.values[i] != 0;
    std::uint8_t* px = &rgb.pixels[i * 3];
    if (p && t) {
      px[0] = 0, px[1] = 255, px[2] = 0;
    } else if (!p && t) {
      px[0] = 0, px[1] = 0, px[2] = 255;
    } else if (p && !t) {
      px[0] = 255, px[1] = 0, px[2] = 0;
    }
  }
  return rgb;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path.parent_path() / (path.stem().string() + suffix);
  return out;
}

Tensor load_rgb(const fs::path& path) {
  const Image8 img = read_png(path, 3);
  if (img.height % kMaxStride != 0 || img.width % kMaxStride != 0) {
    throw DimensionError(fmt::format("{} is {}x{}; both sides must be divisible by 32 (resize or crop, e.g. to {}x{})",
                                     path.string(), img.height, img.width, img.height / kMaxStride * kMaxStride,
                                     img.width / kMaxStride * kMaxStride));
  }
  return image_to_tensor(img);
}

LabelRaster load_label(const fs::path& path) {
  const Image8 gray = read_png(path, 1);
  LabelRaster y(gray.height, gray.width);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) y.values[i] = gray.pixels[i] >= 128 ? 1 : 0;
  return y;
}

// --------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
  std::string out;
  std::string spec_file;
  SynthDatasetSpec spec;
};

void add_scene_options(CLI::App* sub, SynthDatasetSpec& spec) {
  sub->add_option("--size", spec.scene.size, "Patch side in pixels (multiple of 32)")->capture_default_str();
  sub->add_option("--min-buildings", spec.scene.min_buildings)->capture_default_str();
  sub->add_option("--max-buildings", spec.scene.max_buildings)->capture_default_str();
  sub->add_option("--min-size", spec.scene.min_building_size, "Minimum building side")->capture_default_str();
  sub->add_option("--max-size", spec.scene.max_building_size, "Maximum building side")->capture_default_str();
  sub->add_option("--noise", spec.scene.noise, "Gaussian pixel noise sigma")->capture_default_str();
  sub->add_option("--rotate", spec.scene.rotate, "Allow rotated buildings")->capture_default_str();
  sub->add_option("--roads", spec.scene.roads, "Road distractors per scene")->capture_default_str();
  sub->add_option("--seed", spec.scene.seed)->capture_default_str();
  sub->add_option("--train", spec.train_samples, "Training samples")->capture_default_str();
  sub->add_option("--val", spec.val_samples, "Validation samples")->capture_default_str();
  sub->add_option("--test", spec.test_samples, "Test samples")->capture_default_str();
}

void write_synth_dataset(const fs::path& root, const SynthDatasetSpec& spec) {
  auto split = [&](const char* name, int count, std::uint64_t stream) {
    if (count <= 0) return;
    SynthConfig cfg = spec.scene;
    cfg.seed = mix_seed(spec.scene.seed, stream);
    save_dataset(root / name, generate_dataset(cfg, count, name));
  };
  spec.scene.validate();
  split("train", spec.train_samples, 100);
  split("val", spec.val_samples, 200);
  split("test", spec.test_samples, 300);
  write_file_atomic(root / "synth.cfg", format_synth_spec(spec));
}

std::vector<Sample> synth_split(const SynthDatasetSpec& spec, const char* name, int count, std::uint64_t stream) {
  SynthConfig cfg = spec.scene;
  cfg.seed = mix_seed(spec.scene.seed, stream);
  return generate_dataset(cfg, count, name);
}

struct TrainArgs {
  std::string data;
  std::string synth_config;
  std::string mode = "lenient";
  std::string distill = "on";
  int epochs = 20;
  std::uint64_t seed = 0;
  std::string out;
  int batch_size = 8;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  int base_channels = 16;
  int width = 64;
  std::string activation = "relu";
  bool no_augment = false;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  if (a.data.empty() == a.synth_config.empty()) throw UsageError("train needs exactly one of --data or --synth-config");

  TrainConfig cfg;
  try {
    cfg.mode.deep = parse_deep_supervision(a.mode);
    cfg.mode.distill = parse_distillation(a.distill);
    cfg.mode.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.batch_size = a.batch_size;
  cfg.initial_lr = a.lr;
  cfg.optimizer.weight_decay = a.weight_decay;
  cfg.augment = !a.no_augment;
  cfg.model.encoder_base_channels = a.base_channels;
  cfg.model.decoder_width = a.width;
  cfg.model.activation = parse_activation(a.activation);
  cfg.model.seed = mix_seed(a.seed, 0);
  cfg.validate();

  const fs::path out_dir = a.out;
  fs::create_directories(out_dir);
  const std::string start = utc_now();

  std::vector<Sample> train_set;
  std::vector<Sample> val_set;
  std::string inputs;
  if (!a.data.empty()) {
    train_set = load_dataset(fs::path(a.data) / "train");
    val_set = load_dataset(fs::path(a.data) / "val");
    inputs = fmt::format("data={}\ndigest.train={}\ndigest.val={}\n", a.data, dataset_digest(fs::path(a.data) / "train"),
                         dataset_digest(fs::path(a.data) / "val"));
  } else {
    const std::string text = read_file(a.synth_config);
    const SynthDatasetSpec spec = parse_synth_spec(text);
    train_set = synth_split(spec, "train", spec.train_samples, 100);
    val_set = synth_split(spec, "val", spec.val_samples, 200);
    inputs = fmt::format("synth_config={}\ndigest.synth_config={}\n", a.synth_config, sha256_hex(text));
  }

  std::string manifest = fmt::format("# bfseg run manifest\nversion={}\ncommand=train\nstart={}\n", BFSEG_VERSION, start);
  manifest += fmt::format(
      "mode={}\ndistill={}\nepochs={}\nseed={}\nbatch_size={}\nlr={}\nlr_decay_factor={}\npatience={}\n"
      "weight_decay={}\nbeta1={}\nbeta2={}\nepsilon={}\naugment={}\nbase_channels={}\nwidth={}\nactivation={}\n"
      "model_seed={}\ntrain_samples={}\nval_samples={}\n",
      to_string(cfg.mode.deep), to_string(cfg.mode.distill), cfg.epochs, cfg.seed, cfg.batch_size, cfg.initial_lr,
      cfg.lr_decay_factor, cfg.patience_epochs, cfg.optimizer.weight_decay, cfg.optimizer.beta1, cfg.optimizer.beta2,
      cfg.optimizer.epsilon, cfg.augment ? 1 : 0, cfg.model.encoder_base_channels, cfg.model.decoder_width,
      to_string(cfg.model.activation), cfg.model.seed, train_set.size(), val_set.size());
  manifest += inputs;
  write_file_atomic(out_dir / "manifest.txt", manifest);

  std::string log;
  const TrainResult result = train(cfg, train_set, val_set, [&](const EpochRecord& rec) {
    log += format_epoch_record(rec) + "\n";
    write_file_atomic(out_dir / "train_log.txt", log);
    out << fmt::format("epoch {:>3}  lr {:.3g}  loss {:.4f}  val iou {:.2f}%{}\n", rec.epoch, rec.lr,
                       rec.train_loss.total, 100.0 * rec.val.iou, rec.improved ? "  *" : "");
  });
  if (log.empty()) write_file_atomic(out_dir / "train_log.txt", "");
  save_checkpoint(out_dir / "best.ckpt", result.best);
  save_checkpoint(out_dir / "last.ckpt", result.last);
  write_file_atomic(out_dir / "manifest.txt", manifest + fmt::format("end={}\n", utc_now()));
  out << fmt::format("best epoch {} written to {}\n", result.best.epoch, (out_dir / "best.ckpt").string());
  return kExitOk;
}

int run_eval(const std::string& ckpt_path, const std::string& data, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const EvalResult r = evaluate(ckpt, load_dataset(data));
  out << format_report(r.report);
  out << fmt::format("tp={}\ntn={}\nfp={}\nfn={}\n", r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn);
  return kExitOk;
}

int run_predict(const std::string& ckpt_path, const std::string& image_path, const std::string& out_path,
                const std::string& label_path, bool overlay, std::ostream& out) {
  if (overlay && label_path.empty()) throw UsageError("--overlay requires --label");
  const Model model = load_checkpoint(ckpt_path).to_model();
  const Tensor image = load_rgb(image_path);
  const PredictionPyramid preds = model.forward(image);
  const LabelRaster mask = binarize(preds.final_logits);

  write_png(out_path, label_to_image(mask));
  Image8 prob{image.width, image.height, 1, std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    prob.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * sigmoid(preds.final_logits.data[i])));
  }
  write_png(sibling(out_path, "_prob.png"), prob);
  out << "mask=" << out_path << "\n";

  if (!label_path.empty()) {
    const LabelRaster truth = load_label(label_path);
    if (!truth.same_shape(mask)) throw DimensionError("label size does not match image size");
    const auto counts = accumulate(mask, truth);
    out << format_report(compute_metrics(counts));
    if (overlay) {
      const fs::path path = sibling(out_path, "_overlay.png");
      write_png(path, overlay_image(image, mask, truth));
      out << "overlay=" << path.string() << "\n";
    }
  }
  return kExitOk;
}

int run_mask_pyramid(const std::string& label_path, const std::string& out_dir, std::ostream& out) {
  const MaskPyramid pyramid = build_mask_pyramid(load_label(label_path));
  for (const auto& level : pyramid.levels) {
    Image8 soft{level.soft.width, level.soft.height, 1, std::vector<std::uint8_t>(level.soft.size())};
    for (std::size_t i = 0; i < level.soft.size(); ++i) {
      soft.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * level.soft.value(i)));
    }
    Image8 mask{level.mask.width, level.mask.height, 1, std::vector<std::uint8_t>(level.mask.size())};
    std::size_t pure = 0;
    for (std::size_t i = 0; i < level.mask.size(); ++i) {
      mask.pixels[i] = level.mask.values[i] ? 255 : 0;
      pure += level.mask.values[i];
    }
    write_png(fs::path(out_dir) / fmt::format("ydown_s{}.png", level.stride), soft);
    write_png(fs::path(out_dir) / fmt::format("mask_s{}.png", level.stride), mask);
    out << fmt::format("stride={} size={}x{} pure={} hybrid={}\n", level.stride, level.soft.height, level.soft.width,
                       pure, level.mask.size() - pure);
  }
  return kExitOk;
}

int run_complexity(const std::string& profile_text, int size, int width, const std::string& decoder,
                   std::ostream& out) {
  ChannelProfile profile;
  try {
    profile = parse_profile(profile_text);
    validate_profile(profile);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--profile: ") + e.what());
  }
  if (decoder != "lightfpn" && decoder != "unet" && decoder != "both") {
    throw UsageError("--decoder must be lightfpn, unet or both");
  }
  std::uint64_t light_params = 0;
  std::uint64_t unet_params = 0;
  if (decoder != "unet") {
    const auto r = count_lightfpn(profile, width, size);
    light_params = r.total_params();
    out << format_complexity(r);
  }
  if (decoder != "lightfpn") {
    const auto r = count_unet_reference(profile, size);
    unet_params = r.total_params();
    if (decoder == "both") out << "\n";
    out << format_complexity(r);
  }
  if (decoder == "both") {
    out << fmt::format("\nparam_ratio_unet_over_lightfpn={:.3f}\n",
                       static_cast<double>(unet_params) / static_cast<double>(light_params));
  }
  return kExitOk;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key=value", lineno));
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

SynthDatasetSpec parse_synth_spec(const std::string& text) {
  SynthDatasetSpec spec;
  for (const auto& [key, value] : parse_key_values(text)) {
    auto& s = spec.scene;
    if (key == "size") s.size = std::stoi(value);
    else if (key == "min_buildings") s.min_buildings = std::stoi(value);
    else if (key == "max_buildings") s.max_buildings = std::stoi(value);
    else if (key == "min_building_size") s.min_building_size = std::stoi(value);
    else if (key == "max_building_size") s.max_building_size = std::stoi(value);
    else if (key == "noise") s.noise = std::stod(value);
    else if (key == "rotate") s.rotate = parse_bool(value);
    else if (key == "roads") s.roads = std::stoi(value);
    else if (key == "seed") s.seed = std::stoull(value);
    else if (key == "train_samples") spec.train_samples = std::stoi(value);
    else if (key == "val_samples") spec.val_samples = std::stoi(value);
    else if (key == "test_samples") spec.test_samples = std::stoi(value);
    else throw ConfigError("unknown synth config key '" + key + "'");
  }
  spec.scene.validate();
  return spec;
}

std::string format_synth_spec(const SynthDatasetSpec& spec) {
  const auto& s = spec.scene;
  return fmt::format(
      "size={}\nmin_buildings={}\nmax_buildings={}\nmin_building_size={}\nmax_building_size={}\nnoise={}\n"
      "rotate={}\nroads={}\nseed={}\ntrain_samples={}\nval_samples={}\ntest_samples={}\n",
      s.size, s.min_buildings, s.max_buildings, s.min_building_size, s.max_building_size, s.noise, s.rotate ? 1 : 0,
      s.roads, s.seed, spec.train_samples, spec.val_samples, spec.test_samples);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Building footprint segmentation toolkit", "bfseg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BFSEG_VERSION);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset (train/val/test splits)");
  synth_cmd->add_option("--out", synth.out, "Dataset root")->required();
  synth_cmd->add_option("--synth-config", synth.spec_file, "key=value recipe; flags override its values");
  add_scene_options(synth_cmd, synth.spec);

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoints, log and manifest");
  train_cmd->set_config("--config", "", "Flat key=value file with option defaults");
  train_cmd->add_option("--data", targs.data, "Dataset root with train/ and val/ splits");
  train_cmd->add_option("--synth-config", targs.synth_config, "Generate data from a synthetic recipe instead");
  train_cmd->add_option("--mode", targs.mode, "Deep supervision: none, ori or lenient")
      ->check(CLI::IsMember({"none", "ori", "lenient"}))
      ->capture_default_str();
  train_cmd->add_option("--distill", targs.distill, "Lenient self-distillation")
      ->check(CLI::IsMember({"off", "on"}))
      ->capture_default_str();
  train_cmd->add_option("--epochs", targs.epochs)->capture_default_str();
  train_cmd->add_option("--seed", targs.seed)->capture_default_str();
  train_cmd->add_option("--out", targs.out, "Output directory")->required();
  train_cmd->add_option("--batch-size", targs.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", targs.lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--weight-decay", targs.weight_decay)->capture_default_str();
  train_cmd->add_option("--base-channels", targs.base_channels, "Toy encoder base width")->capture_default_str();
  train_cmd->add_option("--width", targs.width, "Decoder width")->capture_default_str();
  train_cmd->add_option("--activation", targs.activation)
      ->check(CLI::IsMember({"relu", "silu", "identity"}))
      ->capture_default_str();
  train_cmd->add_flag("--no-augment", targs.no_augment, "Disable rotation/flip augmentation");

  std::string eval_ckpt, eval_data;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--ckpt", eval_ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "Split root with images/ and labels/")->required();

  std::string p_ckpt, p_image, p_out, p_label;
  bool p_overlay = false;
  auto* predict_cmd = app.add_subcommand("predict", "Predict a building mask for one image");
  predict_cmd->add_option("--ckpt", p_ckpt)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--image", p_image)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", p_out, "Mask PNG path; _prob.png and _overlay.png are written beside it")->required();
  predict_cmd->add_option("--label", p_label, "Ground truth for metrics and the agreement overlay")
      ->check(CLI::ExistingFile);
  predict_cmd->add_flag("--overlay", p_overlay, "Write TP green / FN blue / FP red overlay (needs --label)");

  std::string m_label, m_out;
  auto* mask_cmd = app.add_subcommand("mask-pyramid", "Export downsampled labels and purity masks");
  mask_cmd->add_option("--label", m_label)->required()->check(CLI::ExistingFile);
  mask_cmd->add_option("--out", m_out, "Output directory")->required();

  std::string c_profile = "96,192,384,768", c_decoder = "both";
  int c_size = 512, c_width = 64;
  auto* complexity_cmd = app.add_subcommand("complexity", "Analytic decoder parameter and FLOP counts");
  complexity_cmd->add_option("--profile", c_profile, "Encoder channels c3,c4,c5,c6")->capture_default_str();
  complexity_cmd->add_option("--size", c_size, "Square input size")->capture_default_str();
  complexity_cmd->add_option("--width", c_width, "LightFPN width")->capture_default_str();
  complexity_cmd->add_option("--decoder", c_decoder, "lightfpn, unet or both")->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("bfseg");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << BFSEG_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*synth_cmd) {
      if (!synth.spec_file.empty()) {
        // Re-parse so explicit flags override values from the recipe file.
        const SynthDatasetSpec from_file = parse_synth_spec(read_file(synth.spec_file));
        SynthDatasetSpec merged = from_file;
        auto pick = [&](const char* flag, auto& dst, const auto& src) {
          if (synth_cmd->count(flag) > 0) dst = src;
        };
        pick("--size", merged.scene.size, synth.spec.scene.size);
        pick("--min-buildings", merged.scene.min_buildings, synth.spec.scene.min_buildings);
        pick("--max-buildings", merged.scene.max_buildings, synth.spec.scene.max_buildings);
        pick("--min-size", merged.scene.min_building_size, synth.spec.scene.min_building_size);
        pick("--max-size", merged.scene.max_building_size, synth.spec.scene.max_building_size);
        pick("--noise", merged.scene.noise, synth.spec.scene.noise);
        pick("--rotate", merged.scene.rotate, synth.spec.scene.rotate);
        pick("--roads", merged.scene.roads, synth.spec.scene.roads);
        pick("--seed", merged.scene.seed, synth.spec.scene.seed);
        pick("--train", merged.train_samples, synth.spec.train_samples);
        pick("--val", merged.val_samples, synth.spec.val_samples);
        pick("--test", merged.test_samples, synth.spec.test_samples);
        synth.spec = merged;
      }
      write_synth_dataset(synth.out, synth.spec);
      out << fmt::format("wrote {} train / {} val / {} test samples to {}\n", synth.spec.train_samples,
                         synth.spec.val_samples, synth.spec.test_samples, synth.out);
      return kExitOk;
    }
    if (*train_cmd) return run_train(targs, out);
    if (*eval_cmd) return run_eval(eval_ckpt, eval_data, out);
    if (*predict_cmd) return run_predict(p_ckpt, p_image, p_out, p_label, p_overlay, out);
    if (*mask_cmd) return run_mask_pyramid(m_label, m_out, out);
    if (*complexity_cmd) return run_complexity(c_profile, c_size, c_width, c_decoder, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace bfseg::cli
