#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mgl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// One affine map x -> W x + b. W is rows = fan-out, cols = fan-in.
struct Layer {
  SparseMat weight;
  Vec bias;
};

// Structural budget of a network: the (L, p, kappa) triple of the network class.
struct NetworkMetrics {
  std::size_t depth = 0;     // number of affine layers
  std::size_t width = 0;     // max dimension over all W_i, b_i
  double weight_bound = 0;   // max |entry| over all W_i and b_i

  friend bool operator==(const NetworkMetrics&, const NetworkMetrics&) = default;
};

// Feedforward ReLU network W_L s(W_{L-1} ... s(W_1 x + b_1) ... ) + b_L.
// The output layer carries no activation. Immutable after construction, so
// evaluation is safe from any number of threads.
class ReluNetwork {
 public:
  explicit ReluNetwork(std::vector<Layer> layers);

  static ReluNetwork from_dense(const std::vector<std::pair<Mat, Vec>>& layers);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const NetworkMetrics& metrics() const noexcept { return metrics_; }

  Vec evaluate(const Vec& x) const;
  Vec evaluate(std::span<const double> x) const;
  // Rows of `points` are inputs; rows of the result are outputs.
  Mat evaluate_batch(const Mat& points) const;

 private:
  std::vector<Layer> layers_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  NetworkMetrics metrics_;
};

NetworkMetrics metrics(const ReluNetwork& net);

// Serial composition x -> second(first(x)). first's output layer and second's
// input layer are merged into one affine map, so depth = L_f + L_g - 1.
ReluNetwork compose(const ReluNetwork& first, const ReluNetwork& second);

// Stacks networks of equal depth. With share_input every component reads the
// same input vector; otherwise the input is the concatenation of the
// components' inputs. Output is always the concatenation of outputs.
ReluNetwork parallel(const std::vector<ReluNetwork>& nets, bool share_input);

// sigma(x) - sigma(-x) pairs chained to the requested depth (>= 2).
ReluNetwork identity_gadget(std::size_t dim, std::size_t depth);

// Depth-1 network computing W x + b.
ReluNetwork affine_net(const Mat& weight, const Vec& bias);

// Pads `net` with identity layers so that depth(result) == target_depth.
ReluNetwork pad_to_depth(const ReluNetwork& net, std::size_t target_depth);

// Replaces input `index` by the constant `value`, folding it into the first
// layer's bias. Input dimension drops by one.
ReluNetwork bind_input(const ReluNetwork& net, std::size_t index, double value);

// Removes hidden neurons whose incoming weights are all zero (their value is
// the constant sigma(b)) by folding them into the next layer's bias, and
// removes hidden neurons whose outgoing weights are all zero.
ReluNetwork prune_constant_neurons(const ReluNetwork& net);

// Structured-text document {input_dim, output_dim, layers:[{w,b}], metrics}.
// Reals are written with 17 significant digits.
std::string serialize(const ReluNetwork& net);
ReluNetwork deserialize(const std::string& text);

}  // namespace mgl
