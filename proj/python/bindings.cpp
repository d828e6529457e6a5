// Python bindings for the core operations: topology construction, tensor
// ops on numpy arrays, metrics, and the model with training/checkpointing.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swinoir/checkpoint.hpp"
#include "swinoir/enhance.hpp"
#include "swinoir/metrics.hpp"
#include "swinoir/model.hpp"
#include "swinoir/ops.hpp"
#include "swinoir/topology.hpp"
#include "swinoir/training.hpp"

namespace py = pybind11;
using namespace swinoir;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const DoubleArray& array) {
  std::vector<int> shape(static_cast<size_t>(array.ndim()));
  for (py::ssize_t i = 0; i < array.ndim(); ++i) {
    shape[static_cast<size_t>(i)] = static_cast<int>(array.shape(i));
  }
  std::vector<double> data(array.data(), array.data() + array.size());
  return Tensor::from_data(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Image image_from_array(const DoubleArray& array) {
  if (array.ndim() != 3) throw std::invalid_argument("expected an (H, W, C) array");
  return tensor_to_image(tensor_from_array(array));
}

py::array_t<double> array_from_image(const Image& img) {
  return array_from_tensor(image_to_tensor(img));
}

MetricConfig metric_config(double max_value, const std::string& mode, int shave,
                           const std::string& window) {
  MetricConfig cfg;
  cfg.max_value = max_value;
  cfg.channel_mode = mode == "rgb" ? ChannelMode::kRgbMean : ChannelMode::kLuminance;
  cfg.border_shave = shave;
  if (window == "gaussian") {
    cfg.window = SsimWindow::kGaussian;
    cfg.window_size = 11;
  }
  return cfg;
}

ModelConfig model_config(int blocks, int stls_per_block, int channels, int window,
                         int heads, int upscale, double mlp_ratio,
                         const std::string& connection) {
  ModelConfig cfg;
  cfg.blocks = blocks;
  cfg.stls_per_block = stls_per_block;
  cfg.channels = channels;
  cfg.window = window;
  cfg.heads = heads;
  cfg.upscale = upscale;
  cfg.mlp_ratio = mlp_ratio;
  cfg.connection = connection_kind_from_string(connection);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_swinoir, m) {
  m.doc() = "Windowed-attention super-resolution with interval dense connections";

  // --- topology -----------------------------------------------------------
  m.def("interval_dense_sources", &interval_dense_sources, py::arg("block"),
        py::arg("total_blocks"),
        "Source blocks consumed by `block` under the interval dense rule");
  m.def(
      "build_topology",
      [](int m_blocks) { return build_topology(m_blocks).sources; },
      py::arg("total_blocks"), "Interval dense source sets for every block");
  m.def(
      "skip_topology",
      [](int m_blocks) { return skip_topology(m_blocks).sources; },
      py::arg("total_blocks"), "Plain chain source sets for every block");
  m.def(
      "topology_dot",
      [](int m_blocks, const std::string& strategy) {
        return topology_to_dot(make_topology(connection_kind_from_string(strategy), m_blocks),
                               "connections");
      },
      py::arg("total_blocks"), py::arg("strategy") = "interval-dense");

  // --- tensor ops on numpy arrays ------------------------------------------
  m.def("matmul", [](const DoubleArray& a, const DoubleArray& b) {
    return array_from_tensor(matmul(tensor_from_array(a), tensor_from_array(b)));
  });
  m.def("softmax", [](const DoubleArray& x) {
    return array_from_tensor(softmax_lastdim(tensor_from_array(x)));
  });
  m.def(
      "layer_norm",
      [](const DoubleArray& x, const DoubleArray& gamma, const DoubleArray& beta,
         double eps) {
        return array_from_tensor(layer_norm(tensor_from_array(x), tensor_from_array(gamma),
                                            tensor_from_array(beta), eps));
      },
      py::arg("x"), py::arg("gamma"), py::arg("beta"), py::arg("eps") = 1e-5);
  m.def("gelu", [](const DoubleArray& x) {
    return array_from_tensor(gelu(tensor_from_array(x)));
  });
  m.def("conv2d", [](const DoubleArray& x, const DoubleArray& kernel, const DoubleArray& bias) {
    return array_from_tensor(
        conv2d(tensor_from_array(x), tensor_from_array(kernel), tensor_from_array(bias)));
  });
  m.def("pixel_shuffle", [](const DoubleArray& x, int r) {
    return array_from_tensor(pixel_shuffle(tensor_from_array(x), r));
  });
  m.def("pixel_unshuffle", [](const DoubleArray& x, int r) {
    return array_from_tensor(pixel_unshuffle(tensor_from_array(x), r));
  });
  m.def("window_partition", [](const DoubleArray& x, int window) {
    return array_from_tensor(window_partition(tensor_from_array(x), window));
  });
  m.def("window_merge", [](const DoubleArray& w, int window, int height, int width) {
    return array_from_tensor(window_merge(tensor_from_array(w), window, height, width));
  });

  // --- losses, metrics, schedule -------------------------------------------
  m.def("loss_l1", [](const DoubleArray& p, const DoubleArray& t) {
    return loss_l1(tensor_from_array(p), tensor_from_array(t)).item();
  });
  m.def(
      "loss_charbonnier",
      [](const DoubleArray& p, const DoubleArray& t, double eps) {
        return loss_charbonnier(tensor_from_array(p), tensor_from_array(t), eps).item();
      },
      py::arg("predicted"), py::arg("target"), py::arg("epsilon") = 1e-6);
  m.def(
      "psnr",
      [](const DoubleArray& x, const DoubleArray& y, double max_value,
         const std::string& mode, int shave) {
        return psnr(image_from_array(x), image_from_array(y),
                    metric_config(max_value, mode, shave, "uniform"));
      },
      py::arg("x"), py::arg("y"), py::arg("max_value") = 255.0,
      py::arg("mode") = "luminance", py::arg("shave") = 0);
  m.def(
      "ssim",
      [](const DoubleArray& x, const DoubleArray& y, double max_value,
         const std::string& mode, int shave, const std::string& window) {
        return ssim(image_from_array(x), image_from_array(y),
                    metric_config(max_value, mode, shave, window));
      },
      py::arg("x"), py::arg("y"), py::arg("max_value") = 255.0,
      py::arg("mode") = "luminance", py::arg("shave") = 0,
      py::arg("window") = "uniform");
  m.def(
      "lr_at_epoch",
      [](int epoch, double base_lr, const std::vector<int>& halving_epochs) {
        TrainConfig cfg;
        cfg.base_lr = base_lr;
        cfg.lr_halving_epochs = halving_epochs;
        return lr_at_epoch(epoch, cfg);
      },
      py::arg("epoch"), py::arg("base_lr") = 5e-4,
      py::arg("halving_epochs") = std::vector<int>{300, 600, 900});

  // --- image helpers --------------------------------------------------------
  m.def(
      "bicubic_resize",
      [](const DoubleArray& img, int height, int width) {
        return array_from_image(resize_bicubic(image_from_array(img), height, width));
      },
      py::arg("image"), py::arg("height"), py::arg("width"));
  m.def(
      "synthesize_lr",
      [](const DoubleArray& hr, int scale) {
        return array_from_image(synthesize_pair(image_from_array(hr), scale).lr);
      },
      py::arg("hr"), py::arg("scale"), "Bicubic low-resolution half of a training pair");

  // --- model ----------------------------------------------------------------
  py::class_<SwinOirModel>(m, "Model")
      .def(py::init([](int blocks, int stls_per_block, int channels, int window, int heads,
                       int upscale, double mlp_ratio, const std::string& connection,
                       uint64_t seed) {
             return SwinOirModel(model_config(blocks, stls_per_block, channels, window,
                                              heads, upscale, mlp_ratio, connection),
                                 seed);
           }),
           py::arg("blocks") = 4, py::arg("stls_per_block") = 4, py::arg("channels") = 60,
           py::arg("window") = 8, py::arg("heads") = 6, py::arg("upscale") = 2,
           py::arg("mlp_ratio") = 2.0, py::arg("connection") = "interval-dense",
           py::arg("seed") = 0)
      .def("forward",
           [](const SwinOirModel& model, const DoubleArray& image) {
             return array_from_tensor(model.forward(tensor_from_array(image)));
           },
           py::arg("image"), "Raw forward pass; H and W must be window multiples")
      .def("upscale",
           [](const SwinOirModel& model, const DoubleArray& image) {
             return array_from_image(upscale_image(model, image_from_array(image)));
           },
           py::arg("image"), "Pad, forward, crop and clamp an arbitrary-size image")
      .def("parameter_count", &SwinOirModel::parameter_count)
      .def("sources_of",
           [](const SwinOirModel& model, int block) {
             return model.topology().sources_of(block);
           },
           py::arg("block"))
      .def_property_readonly("upscale_factor",
                             [](const SwinOirModel& model) { return model.config().upscale; })
      .def_property_readonly("connection",
                             [](const SwinOirModel& model) {
                               return std::string(to_string(model.config().connection));
                             })
      .def("save", [](const SwinOirModel& model, const std::string& path) {
        save_checkpoint(model, path);
      })
      .def_static("load", [](const std::string& path) { return load_checkpoint(path); })
      .def("train_pair",
           [](SwinOirModel& model, const DoubleArray& lr_img, const DoubleArray& hr_img,
              int steps, double base_lr, uint64_t seed, const std::string& loss) {
             ImagePair pair;
             pair.lr = image_from_array(lr_img);
             pair.hr = image_from_array(hr_img);
             pair.scale = model.config().upscale;
             pair.degradation = "provided";
             TrainConfig cfg;
             cfg.epochs = 1;
             cfg.steps_per_epoch = steps;
             cfg.batch_size = 1;
             cfg.patch_size = pair.lr.height;
             cfg.base_lr = base_lr;
             cfg.lr_halving_epochs = {};
             cfg.seed = seed;
             cfg.loss = loss == "charbonnier" ? LossKind::kCharbonnier : LossKind::kL1;
             return train(model, {pair}, cfg).step_losses;
           },
           py::arg("lr_image"), py::arg("hr_image"), py::arg("steps") = 100,
           py::arg("base_lr") = 2e-3, py::arg("seed") = 0, py::arg("loss") = "l1",
           "Overfit on one aligned pair; returns the per-step loss series");
}
