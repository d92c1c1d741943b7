#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace ssan {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
std::vector<int64_t> row_major_strides(const Shape& shape);

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Flat row-major f64 tensor. The value buffer is shared between reshape
// views; everything except the grad slot is immutable once constructed.
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<double>> store;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a backward pass touches it

  std::vector<double>& data() { return *store; }
  const std::vector<double>& data() const { return *store; }
  int64_t size() const { return static_cast<int64_t>(store->size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
};

TensorPtr make_tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
TensorPtr zeros(Shape shape, bool requires_grad = false);
TensorPtr full(Shape shape, double value, bool requires_grad = false);
TensorPtr uniform(Shape shape, double lo, double hi, std::mt19937_64& rng,
                  bool requires_grad = false);
TensorPtr clone(const TensorPtr& t);

bool all_finite(const Tensor& t);
void check_finite(const Tensor& t, const std::string& where);
void zero_grad(const std::vector<TensorPtr>& params);

// Reverse-mode tape. Ops append nodes in topological order (inputs are always
// tracked before the node that consumes them); backward walks the list once
// in reverse and accumulates per-tensor gradient buffers, so a tensor used in
// several places sums its contributions. One tape per training step; a tape
// is single-writer.
class Tape {
 public:
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& x, double factor);
  TensorPtr relu(const TensorPtr& x);
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr bmm(const TensorPtr& a, const TensorPtr& b);
  TensorPtr softmax_rows(const TensorPtr& m);
  TensorPtr reshape(const TensorPtr& x, Shape shape);
  TensorPtr permute(const TensorPtr& x, const std::vector<int>& axes);
  TensorPtr conv_pointwise(const TensorPtr& x, const TensorPtr& w,
                           const TensorPtr& bias = nullptr);
  TensorPtr conv_temporal(const TensorPtr& x, const TensorPtr& w,
                          const TensorPtr& bias = nullptr);
  TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                   int stride, int padding, int groups = 1);
  TensorPtr avgpool2d(const TensorPtr& x, int kernel, int stride);
  TensorPtr global_avgpool(const TensorPtr& x);
  TensorPtr mean_frames(const TensorPtr& x);
  TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias);
  TensorPtr sum_all(const TensorPtr& x);
  TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);

  // Seeds the output gradient (implicit 1.0 for scalars) and replays the tape
  // backward, visiting each recorded node exactly once. Gradients of tensors
  // with requires_grad are accumulated into their grad slot.
  void backward(const TensorPtr& output, const std::vector<double>* seed = nullptr);

  size_t num_nodes() const { return nodes_.size(); }
  size_t num_tracked() const { return tensors_.size(); }

 private:
  struct Node {
    const char* op;
    std::vector<int> inputs;
    int output;
    std::function<void()> back;
  };

  int track(const TensorPtr& t);
  int track_output(const TensorPtr& t);
  const std::vector<double>& gread(int id) const;
  std::vector<double>& gsink(int id);       // allocates and marks touched
  bool wants_grad(int id) const;

  std::vector<Node> nodes_;
  std::vector<TensorPtr> tensors_;
  std::unordered_map<const Tensor*, int> ids_;
  std::vector<std::vector<double>> grads_;
  std::vector<char> touched_;
  std::vector<char> from_op_;
};

}  // namespace ssan
