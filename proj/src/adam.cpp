//------------------------------------------------------------------------------
//
//   Copyright 2026 The CASI Inpainting Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "casi/adam.hpp"

#include <cmath>

namespace casi {

AdamState::AdamState(AdamHyper hyper_, std::vector<Tensor> const &params)
  : hyper(hyper_)
{
  m.reserve(params.size());
  v.reserve(params.size());
  for (auto const &p : params)
  {
    m.emplace_back(p.shape(), 0.0);
    v.emplace_back(p.shape(), 0.0);
  }
}

void adam_step(std::vector<Tensor *> const &params, std::vector<Tensor const *> const &grads,
               AdamState &state)
{
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
  {
    throw DimensionError("adam_step: parameter, gradient and state counts differ", "params");
  }
  for (std::size_t i = 0; i < params.size(); ++i)
  {
    require_same_shape(params[i]->shape(), grads[i]->shape(), "adam_step gradient");
    require_same_shape(params[i]->shape(), state.m[i].shape(), "adam_step moment");
  }

  state.step += 1;
  auto const  &h     = state.hyper;
  double const t     = static_cast<double>(state.step);
  double const corr1 = 1.0 - std::pow(h.beta1, t);
  double const corr2 = 1.0 - std::pow(h.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i)
  {
    auto       p = params[i]->data();
    auto const g = grads[i]->data();
    auto       m = state.m[i].data();
    auto       v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j)
    {
      m[j]               = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j]               = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      double const m_hat = m[j] / corr1;
      double const v_hat = v[j] / corr2;
      p[j] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

}  // namespace casi
