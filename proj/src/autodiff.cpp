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

#include "casi/autodiff.hpp"

#include <algorithm>

namespace casi {

std::string_view op_name(OpKind kind)
{
  switch (kind)
  {
  case OpKind::Leaf:
    return "leaf";
  case OpKind::Conv2d:
    return "conv2d";
  case OpKind::TransposedConv2d:
    return "transposed_conv2d";
  case OpKind::BatchNorm2d:
    return "batchnorm2d";
  case OpKind::Relu:
    return "relu";
  case OpKind::LeakyRelu:
    return "leakyrelu";
  case OpKind::Sigmoid:
    return "sigmoid";
  case OpKind::Tanh:
    return "tanh";
  case OpKind::Linear:
    return "linear";
  case OpKind::Add:
    return "add";
  case OpKind::Sub:
    return "sub";
  case OpKind::Mul:
    return "mul";
  case OpKind::Scale:
    return "scale";
  case OpKind::AddScalar:
    return "add_scalar";
  case OpKind::Sum:
    return "sum";
  case OpKind::Log:
    return "log";
  case OpKind::Reshape:
    return "reshape";
  case OpKind::Crop:
    return "crop";
  case OpKind::Compose:
    return "compose";
  case OpKind::GlobalAvgPool:
    return "global_avg_pool";
  case OpKind::Softmax:
    return "softmax";
  case OpKind::CrossEntropy:
    return "cross_entropy";
  case OpKind::WeightedSquaredError:
    return "weighted_squared_error";
  }
  return "unknown";
}

Tensor const &Var::value() const
{
  return tape->value(id);
}

Var Tape::leaf(Tensor value, bool requires_grad)
{
  Node node;
  node.kind          = OpKind::Leaf;
  node.value         = std::move(value);
  node.requires_grad = requires_grad;
  node.is_leaf       = true;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward)
{
  Node node;
  node.kind    = kind;
  node.is_leaf = false;
  for (auto id : inputs)
  {
    if (id >= nodes_.size())
    {
      throw ContractError("tape record references a future id");
    }
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  node.inputs = std::move(inputs);
  node.value  = std::move(value);
  if (node.requires_grad)
  {
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor &Tape::grad_buffer(std::size_t id)
{
  auto &node = nodes_.at(id);
  if (!node.has_grad)
  {
    node.grad     = Tensor(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return node.grad;
}

Tensor Tape::gradient(Var v) const
{
  auto const &node = nodes_.at(v.id);
  if (node.has_grad)
  {
    return node.grad;
  }
  return Tensor(node.value.shape(), 0.0);
}

void Tape::run_backward(Var loss)
{
  if (loss.tape != this || loss.id >= nodes_.size())
  {
    throw ContractError("loss is not recorded on this tape");
  }
  if (nodes_[loss.id].value.size() != 1)
  {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_to_string(nodes_[loss.id].value.shape()));
  }
  for (auto &node : nodes_)
  {
    node.has_grad = false;
    node.grad     = Tensor();
  }
  grad_buffer(loss.id)[0] = 1.0;

  for (std::size_t i = loss.id + 1; i-- > 0;)
  {
    auto &node = nodes_[i];
    if (!node.has_grad || node.is_leaf || !node.backward)
    {
      continue;
    }
    // closures only touch buffers of earlier ids
    Tensor grad = std::move(node.grad);
    node.backward(*this, grad);
    node.grad = std::move(grad);
  }
}

std::map<std::size_t, Tensor> backward(Tape &tape, Var loss)
{
  tape.run_backward(loss);
  std::map<std::size_t, Tensor> grads;
  for (std::size_t id = 0; id < tape.size(); ++id)
  {
    if (tape.kind(id) == OpKind::Leaf && tape.requires_grad(id))
    {
      grads.emplace(id, tape.gradient(Var{&tape, id}));
    }
  }
  return grads;
}

}  // namespace casi
