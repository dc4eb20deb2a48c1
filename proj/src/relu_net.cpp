#include "mgl/relu_net.hpp"

#include "mgl/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace mgl {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMat to_sparse(const Mat& dense) {
  SparseMat s = dense.sparseView(0.0, 0.0);
  s.makeCompressed();
  return s;
}

SparseMat from_triplets(Eigen::Index rows, Eigen::Index cols,
                        const std::vector<Triplet>& trips) {
  SparseMat s(rows, cols);
  s.setFromTriplets(trips.begin(), trips.end());
  s.prune(0.0, 0.0);
  s.makeCompressed();
  return s;
}

NetworkMetrics compute_metrics(const std::vector<Layer>& layers,
                               std::size_t input_dim) {
  NetworkMetrics m;
  m.depth = layers.size();
  m.width = input_dim;
  for (const auto& layer : layers) {
    m.width = std::max<std::size_t>(m.width, static_cast<std::size_t>(layer.weight.rows()));
    m.width = std::max<std::size_t>(m.width, static_cast<std::size_t>(layer.weight.cols()));
    for (Eigen::Index k = 0; k < layer.weight.outerSize(); ++k)
      for (SparseMat::InnerIterator it(layer.weight, k); it; ++it)
        m.weight_bound = std::max(m.weight_bound, std::abs(it.value()));
    if (layer.bias.size() > 0)
      m.weight_bound = std::max(m.weight_bound, layer.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace

ReluNetwork::ReluNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), ErrorCode::kStructure, "network needs at least one layer");
  input_dim_ = static_cast<std::size_t>(layers_.front().weight.cols());
  require(input_dim_ > 0, ErrorCode::kShape, "network input dimension must be positive");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& layer = layers_[i];
    require(layer.bias.size() == layer.weight.rows(), ErrorCode::kShape,
            fmt::format("layer {}: bias length {} != weight rows {}", i,
                        layer.bias.size(), layer.weight.rows()));
    if (i > 0)
      require(layer.weight.cols() == layers_[i - 1].weight.rows(), ErrorCode::kShape,
              fmt::format("layer {}: weight columns {} != previous layer rows {}", i,
                          layer.weight.cols(), layers_[i - 1].weight.rows()));
    require(layer.weight.rows() > 0, ErrorCode::kShape,
            fmt::format("layer {} has no neurons", i));
    layer.weight.makeCompressed();
  }
  output_dim_ = static_cast<std::size_t>(layers_.back().weight.rows());
  metrics_ = compute_metrics(layers_, input_dim_);
}

ReluNetwork ReluNetwork::from_dense(const std::vector<std::pair<Mat, Vec>>& layers) {
  std::vector<Layer> out;
  out.reserve(layers.size());
  for (const auto& [w, b] : layers) out.push_back(Layer{to_sparse(w), b});
  return ReluNetwork(std::move(out));
}

Vec ReluNetwork::evaluate(const Vec& x) const {
  require(static_cast<std::size_t>(x.size()) == input_dim_, ErrorCode::kShape,
          fmt::format("input has length {}, network expects {}", x.size(), input_dim_));
  Vec h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vec next = layers_[i].weight * h + layers_[i].bias;
    if (i + 1 < layers_.size()) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

Vec ReluNetwork::evaluate(std::span<const double> x) const {
  return evaluate(Vec(Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()))));
}

Mat ReluNetwork::evaluate_batch(const Mat& points) const {
  require(static_cast<std::size_t>(points.cols()) == input_dim_, ErrorCode::kShape,
          fmt::format("batch has {} columns, network expects {}", points.cols(), input_dim_));
  Mat h = points.transpose();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Mat next = layers_[i].weight * h;
    next.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h.transpose();
}

NetworkMetrics metrics(const ReluNetwork& net) { return net.metrics(); }

ReluNetwork compose(const ReluNetwork& first, const ReluNetwork& second) {
  require(first.output_dim() == second.input_dim(), ErrorCode::kShape,
          fmt::format("compose: first outputs {} values, second expects {}",
                      first.output_dim(), second.input_dim()));
  const auto& a = first.layers();
  const auto& b = second.layers();
  std::vector<Layer> layers(a.begin(), a.end() - 1);
  const Layer& last = a.back();
  const Layer& head = b.front();
  Layer merged;
  merged.weight = (head.weight * last.weight).pruned(0.0, 0.0);
  merged.bias = head.weight * last.bias + head.bias;
  layers.push_back(std::move(merged));
  layers.insert(layers.end(), b.begin() + 1, b.end());
  return ReluNetwork(std::move(layers));
}

ReluNetwork parallel(const std::vector<ReluNetwork>& nets, bool share_input) {
  require(!nets.empty(), ErrorCode::kStructure, "parallel: no networks given");
  const std::size_t depth = nets.front().depth();
  for (const auto& n : nets) {
    require(n.depth() == depth, ErrorCode::kStructure,
            fmt::format("parallel: depths differ ({} vs {}); pad the shallower "
                        "networks with identity_gadget/pad_to_depth first",
                        n.depth(), depth));
    if (share_input)
      require(n.input_dim() == nets.front().input_dim(), ErrorCode::kShape,
              "parallel: shared input requires equal input dimensions");
  }
  std::vector<Layer> layers;
  layers.reserve(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& n : nets) rows += n.layers()[l].weight.rows();
    if (l == 0 && share_input) {
      cols = nets.front().layers()[0].weight.cols();
    } else {
      for (const auto& n : nets) cols += n.layers()[l].weight.cols();
    }
    std::vector<Triplet> trips;
    Vec bias(rows);
    Eigen::Index r0 = 0, c0 = 0;
    for (const auto& n : nets) {
      const Layer& src = n.layers()[l];
      for (Eigen::Index k = 0; k < src.weight.outerSize(); ++k)
        for (SparseMat::InnerIterator it(src.weight, k); it; ++it)
          trips.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
      bias.segment(r0, src.bias.size()) = src.bias;
      r0 += src.weight.rows();
      if (!(l == 0 && share_input)) c0 += src.weight.cols();
    }
    layers.push_back(Layer{from_triplets(rows, cols, trips), std::move(bias)});
  }
  return ReluNetwork(std::move(layers));
}

ReluNetwork identity_gadget(std::size_t dim, std::size_t depth) {
  require(dim >= 1, ErrorCode::kParameter, "identity_gadget: dim must be positive");
  require(depth >= 2, ErrorCode::kParameter,
          fmt::format("identity_gadget: depth must be >= 2 (got {})", depth));
  const auto n = static_cast<Eigen::Index>(dim);
  std::vector<Layer> layers;
  {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < n; ++i) {
      t.emplace_back(i, i, 1.0);
      t.emplace_back(n + i, i, -1.0);
    }
    layers.push_back(Layer{from_triplets(2 * n, n, t), Vec::Zero(2 * n)});
  }
  for (std::size_t l = 1; l + 1 < depth; ++l) {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < n; ++i) {
      t.emplace_back(i, i, 1.0);
      t.emplace_back(i, n + i, -1.0);
      t.emplace_back(n + i, i, -1.0);
      t.emplace_back(n + i, n + i, 1.0);
    }
    layers.push_back(Layer{from_triplets(2 * n, 2 * n, t), Vec::Zero(2 * n)});
  }
  {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < n; ++i) {
      t.emplace_back(i, i, 1.0);
      t.emplace_back(i, n + i, -1.0);
    }
    layers.push_back(Layer{from_triplets(n, 2 * n, t), Vec::Zero(n)});
  }
  return ReluNetwork(std::move(layers));
}

ReluNetwork affine_net(const Mat& weight, const Vec& bias) {
  return ReluNetwork::from_dense({{weight, bias}});
}

ReluNetwork pad_to_depth(const ReluNetwork& net, std::size_t target_depth) {
  require(target_depth >= net.depth(), ErrorCode::kStructure,
          fmt::format("pad_to_depth: network already has depth {} > {}", net.depth(),
                      target_depth));
  if (target_depth == net.depth()) return net;
  return compose(net, identity_gadget(net.output_dim(), target_depth - net.depth() + 1));
}

ReluNetwork bind_input(const ReluNetwork& net, std::size_t index, double value) {
  require(index < net.input_dim(), ErrorCode::kShape, "bind_input: index out of range");
  require(net.input_dim() >= 2, ErrorCode::kShape, "bind_input: cannot bind the only input");
  std::vector<Layer> layers = net.layers();
  Layer& first = layers.front();
  const auto col = static_cast<Eigen::Index>(index);
  std::vector<Triplet> t;
  for (Eigen::Index k = 0; k < first.weight.outerSize(); ++k)
    for (SparseMat::InnerIterator it(first.weight, k); it; ++it) {
      if (it.col() == col) {
        first.bias[it.row()] += it.value() * value;
      } else {
        t.emplace_back(it.row(), it.col() > col ? it.col() - 1 : it.col(), it.value());
      }
    }
  first.weight = from_triplets(first.weight.rows(), first.weight.cols() - 1, t);
  return ReluNetwork(std::move(layers));
}

ReluNetwork prune_constant_neurons(const ReluNetwork& net) {
  std::vector<Layer> layers = net.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Layer& cur = layers[l];
    Layer& nxt = layers[l + 1];
    const Eigen::Index rows = cur.weight.rows();
    // Column view of the next layer to detect unused neurons.
    Eigen::SparseMatrix<double, Eigen::ColMajor> nxt_cols = nxt.weight;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const bool constant = cur.weight.row(i).nonZeros() == 0;
      const bool unused = nxt_cols.col(i).nonZeros() == 0;
      if (constant) {
        const double c = std::max(0.0, cur.bias[i]);
        if (c != 0.0)
          for (Eigen::SparseMatrix<double, Eigen::ColMajor>::InnerIterator it(nxt_cols, i); it; ++it)
            nxt.bias[it.row()] += it.value() * c;
        continue;
      }
      if (unused) continue;
      keep.push_back(i);
    }
    if (static_cast<Eigen::Index>(keep.size()) == rows) continue;
    std::vector<Eigen::Index> remap(static_cast<std::size_t>(rows), -1);
    for (std::size_t k = 0; k < keep.size(); ++k)
      remap[static_cast<std::size_t>(keep[k])] = static_cast<Eigen::Index>(k);
    // A layer needs at least one neuron; an all-constant layer keeps one zero neuron.
    const auto kept = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(keep.size()));
    std::vector<Triplet> tc, tn;
    Vec bias = Vec::Zero(kept);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const Eigen::Index i = keep[k];
      bias[static_cast<Eigen::Index>(k)] = cur.bias[i];
      for (SparseMat::InnerIterator it(cur.weight, i); it; ++it)
        tc.emplace_back(static_cast<Eigen::Index>(k), it.col(), it.value());
    }
    for (Eigen::Index k = 0; k < nxt.weight.outerSize(); ++k)
      for (SparseMat::InnerIterator it(nxt.weight, k); it; ++it) {
        const Eigen::Index m = remap[static_cast<std::size_t>(it.col())];
        if (m >= 0) tn.emplace_back(it.row(), m, it.value());
      }
    cur.weight = from_triplets(kept, cur.weight.cols(), tc);
    cur.bias = bias;
    nxt.weight = from_triplets(nxt.weight.rows(), kept, tn);
  }
  return ReluNetwork(std::move(layers));
}

std::string serialize(const ReluNetwork& net) {
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  std::string out;
  out += fmt::format("{{\n  \"input_dim\": {},\n  \"output_dim\": {},\n  \"layers\": [", net.input_dim(),
                     net.output_dim());
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Mat w = Mat(layers[l].weight);
    out += l == 0 ? "\n" : ",\n";
    out += "    {\"w\": [";
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      out += r == 0 ? "[" : ", [";
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (c) out += ", ";
        out += num(w(r, c));
      }
      out += "]";
    }
    out += "], \"b\": [";
    for (Eigen::Index r = 0; r < layers[l].bias.size(); ++r) {
      if (r) out += ", ";
      out += num(layers[l].bias[r]);
    }
    out += "]}";
  }
  const auto& m = net.metrics();
  out += fmt::format("\n  ],\n  \"metrics\": {{\"depth\": {}, \"width\": {}, \"weight_bound\": {}}}\n}}\n",
                     m.depth, m.width, num(m.weight_bound));
  return out;
}

ReluNetwork deserialize(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("network document: {}", e.what()));
  }
  try {
    std::vector<Layer> layers;
    for (const auto& jl : doc.at("layers")) {
      const auto& jw = jl.at("w");
      const auto& jb = jl.at("b");
      const auto rows = static_cast<Eigen::Index>(jw.size());
      require(rows > 0, ErrorCode::kParse, "layer with empty weight matrix");
      const auto cols = static_cast<Eigen::Index>(jw.at(0).size());
      std::vector<Triplet> t;
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = jw.at(static_cast<std::size_t>(r));
        require(static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::kParse,
                "ragged weight matrix");
        for (Eigen::Index c = 0; c < cols; ++c) {
          const double v = row.at(static_cast<std::size_t>(c)).get<double>();
          if (v != 0.0) t.emplace_back(r, c, v);
        }
      }
      Vec b(static_cast<Eigen::Index>(jb.size()));
      for (std::size_t i = 0; i < jb.size(); ++i) b[static_cast<Eigen::Index>(i)] = jb[i].get<double>();
      layers.push_back(Layer{from_triplets(rows, cols, t), std::move(b)});
    }
    ReluNetwork net(std::move(layers));
    require(net.input_dim() == doc.at("input_dim").get<std::size_t>() &&
                net.output_dim() == doc.at("output_dim").get<std::size_t>(),
            ErrorCode::kShape, "network document: declared dimensions disagree with layers");
    if (doc.contains("metrics")) {
      const auto& jm = doc.at("metrics");
      NetworkMetrics declared{jm.at("depth").get<std::size_t>(), jm.at("width").get<std::size_t>(),
                              jm.at("weight_bound").get<double>()};
      require(declared == net.metrics(), ErrorCode::kParse,
              "network document: recorded metrics disagree with layer data");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("network document: {}", e.what()));
  }
}

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kStructure: return "structure";
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kResolution: return "resolution";
    case ErrorCode::kCapacity: return "capacity";
    case ErrorCode::kFit: return "fit";
    case ErrorCode::kScope: return "scope";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace mgl
