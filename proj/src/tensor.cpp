#include "swinoir/tensor.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace swinoir {

namespace {

thread_local GradientTape* g_active_tape = nullptr;

long long checked_numel(const std::vector<int>& shape) {
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor dimensions must be positive, got " +
                       shape_to_string(shape));
    }
    n *= d;
  }
  return n;
}

}  // namespace

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  const long long n = checked_numel(shape);
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->shape = std::move(shape);
  t.node_->data.assign(static_cast<size_t>(n), 0.0);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.node_->data) v = value;
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  const long long n = checked_numel(shape);
  if (n != static_cast<long long>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  }
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->shape = std::move(shape);
  t.node_->data = std::move(data);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const std::vector<int>& Tensor::shape() const {
  if (!node_) throw std::logic_error("shape() on an undefined tensor");
  return node_->shape;
}

int Tensor::dim(int i) const {
  const auto& s = shape();
  if (i < 0) i += static_cast<int>(s.size());
  if (i < 0 || i >= static_cast<int>(s.size())) {
    throw std::out_of_range("dim index " + std::to_string(i) +
                            " out of range for shape " + shape_to_string(s));
  }
  return s[static_cast<size_t>(i)];
}

long long Tensor::numel() const {
  return static_cast<long long>(node_->data.size());
}

std::span<const double> Tensor::data() const {
  return {node_->data.data(), node_->data.size()};
}

double* Tensor::mutable_data() { return node_->data.data(); }

double Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() requires a single-element tensor, got " +
                                shape_to_string(shape()));
  }
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) { node_->requires_grad = value; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) {
    throw std::logic_error("tensor has no gradient; run backward first");
  }
  return {node_->grad.data(), node_->grad.size()};
}

double* Tensor::grad_data() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad.data();
}

void Tensor::accumulate_grad(std::span<const double> delta) {
  double* g = grad_data();
  for (size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::memset(node_->grad.data(), 0, node_->grad.size() * sizeof(double));
}

GradientTape::GradientTape() : previous_(g_active_tape) { g_active_tape = this; }

GradientTape::~GradientTape() { g_active_tape = previous_; }

GradientTape* GradientTape::active() { return g_active_tape; }

void GradientTape::record(TapeEntry entry) { entries_.push_back(std::move(entry)); }

void GradientTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward requires a scalar loss");
  }
  bool produced_here = false;
  for (const auto& e : entries_) {
    if (e.output.id() == loss.id()) {
      produced_here = true;
      break;
    }
  }
  if (!produced_here) {
    throw std::invalid_argument("backward: loss was not produced by this tape");
  }

  // Zero every op output first: intermediates from a previous replay must not
  // double-count. Leaves are never outputs, so their gradients accumulate
  // across backward calls as the contract requires.
  for (const TapeEntry& e : entries_) {
    Tensor out = e.output;
    out.zero_grad();
  }
  Tensor seed = loss;
  seed.grad_data()[0] = 1.0;
  for (size_t i = entries_.size(); i-- > 0;) {
    const TapeEntry& e = entries_[i];
    if (!e.output.has_grad()) continue;  // no downstream use of this value
    e.backward(e.inputs, e.output);
  }
}

void save_tensor(const Tensor& t, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "swinoir-tensor 1\n");
  std::fprintf(f, "%d", t.ndim());
  for (int d : t.shape()) std::fprintf(f, " %d", d);
  std::fprintf(f, "\n");
  for (double v : t.data()) std::fprintf(f, "%.17g\n", v);
  std::fclose(f);
}

Tensor load_tensor(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[32] = {};
  int version = 0;
  if (std::fscanf(f, "%31s %d", magic, &version) != 2 ||
      std::string(magic) != "swinoir-tensor" || version != 1) {
    std::fclose(f);
    throw std::runtime_error(path + " is not a swinoir tensor dump");
  }
  int ndim = 0;
  if (std::fscanf(f, "%d", &ndim) != 1 || ndim < 1 || ndim > 8) {
    std::fclose(f);
    throw std::runtime_error(path + ": bad tensor rank");
  }
  std::vector<int> shape(static_cast<size_t>(ndim));
  long long n = 1;
  for (int& d : shape) {
    if (std::fscanf(f, "%d", &d) != 1 || d <= 0) {
      std::fclose(f);
      throw std::runtime_error(path + ": bad tensor dimension");
    }
    n *= d;
  }
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) {
    if (std::fscanf(f, "%lg", &v) != 1) {
      std::fclose(f);
      throw std::runtime_error(path + ": truncated tensor data");
    }
  }
  std::fclose(f);
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace swinoir
