#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>

#include "bfseg/checkpoint.hpp"
#include "bfseg/complexity.hpp"
#include "bfseg/data.hpp"
#include "bfseg/errors.hpp"
#include "bfseg/label_pyramid.hpp"
#include "bfseg/losses.hpp"
#include "bfseg/metrics.hpp"
#include "bfseg/model.hpp"
#include "bfseg/training.hpp"

namespace py = pybind11;
using namespace bfseg;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

LabelRaster to_label(const U8& a) {
  if (a.ndim() != 2) throw DimensionError("label must be a 2-D array");
  LabelRaster y(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(y.values.data(), a.data(), y.values.size());
  return y;
}

U8 from_grid(const Grid<std::uint8_t>& g) {
  U8 out({g.height, g.width});
  std::memcpy(out.mutable_data(), g.values.data(), g.values.size());
  return out;
}

Tensor to_tensor(const F64& a) {
  if (a.ndim() != 3) throw DimensionError("expected a (C, H, W) array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(double));
  return t;
}

F64 from_tensor(const Tensor& t) {
  F64 out({t.channels, t.height, t.width});
  std::memcpy(out.mutable_data(), t.data.data(), t.data.size() * sizeof(double));
  return out;
}

// Single-channel tensors come back as (H, W).
F64 from_plane(const Tensor& t) {
  F64 out({t.height, t.width});
  std::memcpy(out.mutable_data(), t.data.data(), t.data.size() * sizeof(double));
  return out;
}

Tensor plane_to_tensor(const F64& a) {
  if (a.ndim() != 2) throw DimensionError("expected an (H, W) array");
  Tensor t(1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(double));
  return t;
}

F64 soft_to_array(const SoftLabel& s) { return from_plane(s.to_tensor()); }

SupervisionMode make_mode(const std::string& deep, const std::string& distill) {
  SupervisionMode m{parse_deep_supervision(deep), parse_distillation(distill)};
  m.validate();
  return m;
}

py::dict breakdown_dict(const LossBreakdown& b) {
  py::dict d;
  d["total"] = b.total;
  d["final_ce"] = b.final_ce;
  d["lenient"] = b.lenient_per_scale;
  d["distill"] = b.distill_per_scale;
  return d;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["iou"] = r.iou_defined ? py::object(py::float_(r.iou)) : py::none();
  d["precision"] = r.precision_defined ? py::object(py::float_(r.precision)) : py::none();
  d["recall"] = r.recall_defined ? py::object(py::float_(r.recall)) : py::none();
  d["f1"] = r.f1_defined ? py::object(py::float_(r.f1)) : py::none();
  return d;
}

py::dict counts_dict(const ConfusionCounts& c) {
  py::dict d;
  d["tp"] = c.tp;
  d["tn"] = c.tn;
  d["fp"] = c.fp;
  d["fn"] = c.fn;
  return d;
}

std::vector<Sample> to_samples(const py::list& items) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto pair = items[i].cast<py::tuple>();
    if (pair.size() != 2) throw ConfigError("samples must be (image, label) pairs");
    Sample s;
    s.image = to_tensor(pair[0].cast<F64>());
    s.label = to_label(pair[1].cast<U8>());
    s.id = "sample_" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

py::list cost_rows(const ComplexityReport& r) {
  py::list rows;
  for (const auto& l : r.layers) rows.append(py::make_tuple(l.name, l.params, l.mult_adds));
  return rows;
}

}  // namespace

PYBIND11_MODULE(_bfseg, m) {
  m.doc() = "C++ core of the bfseg building footprint segmentation toolkit";
  m.attr("__version__") = BFSEG_VERSION;
  m.attr("STRIDES") = py::make_tuple(4, 8, 16, 32);

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("downsample_label", [](const U8& y, int factor) { return soft_to_array(downsample_label(to_label(y), factor)); },
        py::arg("label"), py::arg("factor"), "Block-average a binary label by an integer factor.");
  m.def(
      "purity_mask",
      [](const F64& soft) {
        if (soft.ndim() != 2) throw DimensionError("expected an (H, W) array");
        Grid<double> g(static_cast<int>(soft.shape(0)), static_cast<int>(soft.shape(1)));
        std::memcpy(g.values.data(), soft.data(), g.values.size() * sizeof(double));
        return from_grid(purity_mask(g));
      },
      py::arg("soft"), "1 where a downsampled label is exactly 0 or 1, else 0.");
  m.def(
      "build_mask_pyramid",
      [](const U8& y) {
        const auto p = build_mask_pyramid(to_label(y));
        py::dict out;
        for (const auto& level : p.levels) out[py::int_(level.stride)] = py::make_tuple(soft_to_array(level.soft), from_grid(level.mask));
        return out;
      },
      py::arg("label"), "Map stride -> (soft label, purity mask) for strides 4, 8, 16 and 32.");
  m.def("block_average", [](const F64& x, int factor) { return from_tensor(block_average(to_tensor(x), factor)); },
        py::arg("x"), py::arg("factor"));

  py::class_<Model>(m, "Model")
      .def(py::init([](int base_channels, int width, const std::string& activation, std::uint64_t seed) {
             ModelConfig cfg;
             cfg.encoder_base_channels = base_channels;
             cfg.decoder_width = width;
             cfg.activation = parse_activation(activation);
             cfg.seed = seed;
             return Model(cfg);
           }),
           py::arg("base_channels") = 16, py::arg("width") = 64, py::arg("activation") = "relu", py::arg("seed") = 0)
      .def_static("load", [](const std::string& path) { return load_checkpoint(path).to_model(); }, py::arg("path"))
      .def(
          "save", [](const Model& model, const std::string& path) { save_checkpoint(path, Checkpoint::from_model(model)); },
          py::arg("path"))
      .def_property_readonly("parameter_count", [](const Model& model) { return model.parameters().scalar_count(); })
      .def_property_readonly("decoder_parameter_count", &Model::decoder_parameter_count)
      .def("parameter_names",
           [](const Model& model) {
             std::vector<std::string> names;
             for (const auto& p : model.parameters()) names.push_back(p.name);
             return names;
           })
      .def(
          "forward",
          [](const Model& model, const F64& image) {
            const auto p = model.forward(to_tensor(image));
            py::dict out;
            py::list stages;
            for (const auto& t : p.stage_logits) stages.append(from_plane(t));
            out["stage_logits"] = stages;
            out["final_logits"] = from_plane(p.final_logits);
            return out;
          },
          py::arg("image"), "Stage logits coarse to fine (strides 32, 16, 8, 4) and full-resolution logits.")
      .def(
          "predict", [](const Model& model, const F64& image) { return from_grid(binarize(model.forward(to_tensor(image)).final_logits)); },
          py::arg("image"))
      .def(
          "loss",
          [](const Model& model, const F64& image, const U8& label, const std::string& mode, const std::string& distill) {
            Sample s{to_tensor(image), to_label(label), "python"};
            return breakdown_dict(sample_gradients(model, s, make_mode(mode, distill)).loss);
          },
          py::arg("image"), py::arg("label"), py::arg("mode") = "lenient", py::arg("distill") = "on");

  m.def(
      "total_loss",
      [](const std::vector<F64>& stage_logits, const F64& final_logits, const U8& label, const std::string& mode,
         const std::string& distill) {
        if (stage_logits.size() != 4) throw DimensionError("expected four stage logit maps");
        PredictionPyramid p;
        for (int i = 0; i < 4; ++i) p.stage_logits[i] = plane_to_tensor(stage_logits[i]);
        p.final_logits = plane_to_tensor(final_logits);
        const LabelRaster y = to_label(label);
        return breakdown_dict(total_loss(p, build_mask_pyramid(y), y, make_mode(mode, distill)));
      },
      py::arg("stage_logits"), py::arg("final_logits"), py::arg("label"), py::arg("mode") = "lenient",
      py::arg("distill") = "on", "Objective for given logits; stage maps ordered coarse to fine.");

  m.def("binarize", [](const F64& logits) { return from_grid(binarize(plane_to_tensor(logits))); }, py::arg("logits"));
  m.def("confusion", [](const U8& pred, const U8& truth) { return counts_dict(accumulate(to_label(pred), to_label(truth))); },
        py::arg("pred"), py::arg("truth"));
  m.def(
      "compute_metrics",
      [](std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
        return report_dict(compute_metrics({tp, tn, fp, fn}));
      },
      py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"), "Undefined metrics are returned as None.");

  m.def("count_lightfpn", [](const ChannelProfile& p, int width, int size) { return cost_rows(count_lightfpn(p, width, size)); },
        py::arg("profile"), py::arg("width") = 64, py::arg("input_size") = 512,
        "Rows of (layer, params, multiply-accumulates).");
  m.def("count_unet_reference", [](const ChannelProfile& p, int size) { return cost_rows(count_unet_reference(p, size)); },
        py::arg("profile"), py::arg("input_size") = 512);

  m.def(
      "generate_scene",
      [](int size, std::uint64_t seed, int min_buildings, int max_buildings, int min_size, int max_size, double noise,
         bool rotate) {
        SynthConfig cfg;
        cfg.size = size;
        cfg.seed = seed;
        cfg.min_buildings = min_buildings;
        cfg.max_buildings = max_buildings;
        cfg.min_building_size = min_size;
        cfg.max_building_size = max_size;
        cfg.noise = noise;
        cfg.rotate = rotate;
        const Sample s = generate_scene(cfg);
        return py::make_tuple(from_tensor(s.image), from_grid(s.label));
      },
      py::arg("size") = 64, py::arg("seed") = 0, py::arg("min_buildings") = 3, py::arg("max_buildings") = 8,
      py::arg("min_size") = 4, py::arg("max_size") = 20, py::arg("noise") = 0.06, py::arg("rotate") = true,
      "Synthetic aerial patch: ((3, H, W) image, (H, W) label).");

  m.def(
      "train",
      [](Model& model, const py::list& train_set, const py::list& val_set, int epochs, int batch_size, double lr,
         const std::string& mode, const std::string& distill, bool augment, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.model = model.config();
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.initial_lr = lr;
        cfg.mode = make_mode(mode, distill);
        cfg.augment = augment;
        cfg.seed = seed;
        const auto tr = to_samples(train_set);
        const auto va = to_samples(val_set);
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train(cfg, tr, va);
        }
        model = result.best.to_model();
        py::list history;
        for (const auto& e : result.history.epochs) {
          py::dict d = breakdown_dict(e.train_loss);
          d["epoch"] = e.epoch;
          d["lr"] = e.lr;
          d["val"] = report_dict(e.val);
          history.append(d);
        }
        return history;
      },
      py::arg("model"), py::arg("train_set"), py::arg("val_set"), py::arg("epochs") = 20, py::arg("batch_size") = 8,
      py::arg("lr") = 1e-3, py::arg("mode") = "lenient", py::arg("distill") = "on", py::arg("augment") = true,
      py::arg("seed") = 0,
      "Train a freshly initialised network with the model's architecture and seed, then replace the model "
      "with the best-validation checkpoint. Returns the per-epoch history.");

  m.def(
      "evaluate",
      [](const Model& model, const py::list& samples) {
        const auto r = evaluate(model, to_samples(samples));
        py::dict d = report_dict(r.report);
        d["counts"] = counts_dict(r.counts);
        return d;
      },
      py::arg("model"), py::arg("samples"));
}
