#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace swinoir {

// Thrown when operand shapes violate an operation's contract. The message
// always names the offending shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

std::string shape_to_string(const std::vector<int>& shape);

// Dense row-major tensor of doubles with an optional gradient slot.
// Copies are shallow: a Tensor is a shared handle to its storage, and data
// is treated as immutable once the tensor has been consumed by an op.
// The optimizer mutates parameter data in place between steps via
// mutable_data(), which is outside any recorded forward pass.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int ndim() const { return static_cast<int>(shape().size()); }
  int dim(int i) const;
  long long numel() const;

  std::span<const double> data() const;
  double* mutable_data();
  double item() const;  // value of a single-element tensor

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  double* grad_data();        // allocates (zeroed) if absent
  void accumulate_grad(std::span<const double> delta);
  void zero_grad();           // zeroes in place; keeps the buffer

  // Identity of the underlying storage; used to tell shared handles apart.
  const void* id() const { return node_.get(); }

 private:
  struct Node {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
  };

  std::shared_ptr<Node> node_;
};

// One recorded operation: which op produced which output from which inputs,
// plus the closure that maps the output gradient back onto the inputs.
struct TapeEntry {
  const char* op = "";
  std::vector<Tensor> inputs;
  Tensor output;
  std::function<void(const std::vector<Tensor>&, const Tensor&)> backward;
};

// Reverse-mode record of a forward pass. Ops append entries while a tape is
// active; backward() replays them in reverse, accumulating gradients
// additively into every tensor that requires them. A tape is confined to one
// logical training step and is not shared across threads.
class GradientTape {
 public:
  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  static GradientTape* active();

  void record(TapeEntry entry);
  size_t size() const { return entries_.size(); }
  const TapeEntry& entry(size_t i) const { return entries_[i]; }

  // Seeds d(loss)/d(loss) = 1 and replays the record in reverse.
  // loss must be a scalar produced by this tape.
  void backward(const Tensor& loss);

 private:
  std::vector<TapeEntry> entries_;
  GradientTape* previous_ = nullptr;
};

// Debug dump format: a small self-describing text file. Values are printed
// with 17 significant digits so doubles round-trip exactly.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

}  // namespace swinoir
