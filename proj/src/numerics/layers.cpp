// Copyright 2026 The CRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crl/numerics/layers.hpp"

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::nn {

void EncoderConfig::validate() const {
  if (channels.size() != 4 || strides.size() != 4) {
    throw ConfigError("encoder: exactly 4 blocks (channels, strides) required");
  }
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("encoder: kernel must be odd");
  for (std::size_t i = 0; i < 4; ++i) {
    if (channels[i] == 0 || groups == 0 || channels[i] % groups != 0) {
      throw ConfigError("encoder: channels must be positive multiples of groups");
    }
    if (strides[i] == 0) throw ConfigError("encoder: strides must be positive");
  }
}

ParamSet build_encoder(const EncoderConfig& config, Rng& rng) {
  config.validate();
  ParamSet params;
  std::size_t in = config.in_channels;
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t out = config.channels[b];
    const std::string id = std::to_string(b);
    const std::size_t fan_in = in * config.kernel * config.kernel;
    params.add("conv" + id + ".weight",
               kaiming_uniform({out, in, config.kernel, config.kernel}, fan_in, rng));
    params.add("conv" + id + ".bias", Tensor::zeros({out}));
    params.add("gn" + id + ".weight", Tensor::filled({out}, 1.0f));
    params.add("gn" + id + ".bias", Tensor::zeros({out}));
    in = out;
  }
  return params;
}

Tensor encode(const ParamSet& params, const EncoderConfig& config,
              const Tensor& batch) {
  if (batch.ndim() != 4 || batch.dim(1) != config.in_channels) {
    throw ShapeError("encode: expected [N, " + std::to_string(config.in_channels) +
                     ", H, W] batch, got " + to_string(batch.shape()));
  }
  // Large batches run in cache-sized chunks; samples are independent.
  constexpr std::size_t kChunk = 16;
  const std::size_t n = batch.dim(0);
  if (n > kChunk && !batch.requires_grad()) {
    const std::size_t per = batch.numel() / n;
    std::vector<Tensor> parts;
    for (std::size_t first = 0; first < n; first += kChunk) {
      const std::size_t count = std::min(kChunk, n - first);
      Shape shape = batch.shape();
      shape[0] = count;
      const auto src = batch.data().subspan(first * per, count * per);
      parts.push_back(encode(params, config, Tensor(shape, {src.begin(), src.end()})));
    }
    return concat_rows(parts);
  }
  Tensor h = batch;
  for (std::size_t b = 0; b < 4; ++b) {
    const std::string id = std::to_string(b);
    h = conv2d(h, params.at("conv" + id + ".weight"), params.at("conv" + id + ".bias"),
               config.strides[b], config.kernel / 2);
    h = group_norm(h, config.groups, params.at("gn" + id + ".weight"),
                   params.at("gn" + id + ".bias"));
    h = relu(h);
    h = b < 3 ? max_pool2(h) : global_avg_pool(h);
  }
  return h;
}

void add_gru(ParamSet& params, const std::string& prefix, std::size_t input,
             std::size_t hidden, Rng& rng) {
  params.add(prefix + ".weight_ih", kaiming_uniform({3 * hidden, input}, input, rng));
  // Orthogonal recurrent weights, one block per gate.
  Tensor whh = Tensor::zeros({3 * hidden, hidden});
  for (std::size_t gate = 0; gate < 3; ++gate) {
    Tensor block = orthogonal(hidden, hidden, rng);
    std::copy(block.data().begin(), block.data().end(),
              whh.data().begin() + gate * hidden * hidden);
  }
  params.add(prefix + ".weight_hh", std::move(whh));
  params.add(prefix + ".bias_ih", Tensor::zeros({3 * hidden}));
  params.add(prefix + ".bias_hh", Tensor::zeros({3 * hidden}));
}

Tensor gru_cell(const ParamSet& params, const std::string& prefix,
                const Tensor& x, const Tensor& h) {
  const Tensor& whh = params.at(prefix + ".weight_hh");
  const std::size_t hidden = whh.dim(1);
  if (h.ndim() != 2 || h.dim(1) != hidden || x.ndim() != 2 || h.dim(0) != x.dim(0)) {
    throw ShapeError("gru_cell: input " + to_string(x.shape()) + " / hidden " +
                     to_string(h.shape()) + " incompatible with hidden size " +
                     std::to_string(hidden));
  }
  Tensor gi = dense(x, params.at(prefix + ".weight_ih"), params.at(prefix + ".bias_ih"));
  Tensor gh = dense(h, whh, params.at(prefix + ".bias_hh"));
  Tensor r = sigmoid(add(slice_cols(gi, 0, hidden), slice_cols(gh, 0, hidden)));
  Tensor z = sigmoid(add(slice_cols(gi, hidden, hidden), slice_cols(gh, hidden, hidden)));
  Tensor n = tanh(add(slice_cols(gi, 2 * hidden, hidden),
                      mul(r, slice_cols(gh, 2 * hidden, hidden))));
  // h' = n + z * (h - n)
  return add(n, mul(z, sub(h, n)));
}

}  // namespace crl::nn
