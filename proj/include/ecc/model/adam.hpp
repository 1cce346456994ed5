// Copyright 2026 The eccvol Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>

#include "ecc/errors.hpp"
#include "ecc/model/params.hpp"

namespace ecc::model {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ModelParams<Scalar> m, v;
  long step = 0;

  static AdamState zeros_like(const ModelParams<Scalar>& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

/// Bias-corrected Adam update. Throws NumericalError before touching any
/// parameter if a gradient is not finite.
template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads, AdamState<Scalar>& state, double lr,
               const AdamConfig& cfg = {}) {
  if (auto bad = grads.first_non_finite()) throw NumericalError("non-finite gradient in " + *bad);
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  ModelParams<Scalar>::zip(
      [&](const std::string&, auto& p, const auto& g, auto& m, auto& v) {
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
        p.array() -= static_cast<Scalar>(lr) * (m.array() / static_cast<Scalar>(c1)) /
                     ((v.array() / static_cast<Scalar>(c2)).sqrt() + static_cast<Scalar>(cfg.eps));
      },
      params, grads, state.m, state.v);
}

}  // namespace ecc::model
