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

#ifndef CRL_NUMERICS_LAYERS_HPP_
#define CRL_NUMERICS_LAYERS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/numerics/params.hpp"
#include "crl/numerics/tensor.hpp"

namespace crl::nn {

// Four conv -> group_norm -> relu -> pool blocks. Blocks 1-3 end in a 2x2 max
// pool; the last block ends in a global average pool whose output is the
// feature vector (the tap point reused by every downstream consumer).
struct EncoderConfig {
  std::size_t in_channels = 3;
  std::vector<std::size_t> channels = {8, 16, 32, 64};
  std::vector<std::size_t> strides = {2, 2, 1, 1};
  std::size_t kernel = 3;
  std::size_t groups = 4;

  std::size_t feature_dim() const { return channels.back(); }
  // Throws ConfigError for inconsistent settings.
  void validate() const;
};

ParamSet build_encoder(const EncoderConfig& config, Rng& rng);
// batch [N, C, H, W] -> features [N, D]
Tensor encode(const ParamSet& params, const EncoderConfig& config,
              const Tensor& batch);

// GRU cell with PyTorch gate layout (reset, update, new):
//   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
void add_gru(ParamSet& params, const std::string& prefix, std::size_t input,
             std::size_t hidden, Rng& rng);
Tensor gru_cell(const ParamSet& params, const std::string& prefix,
                const Tensor& x, const Tensor& h);

}  // namespace crl::nn

#endif  // CRL_NUMERICS_LAYERS_HPP_
