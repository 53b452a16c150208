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

#include "casi/model.hpp"

#include <algorithm>

namespace casi {

std::string to_string(NetworkKind kind)
{
  switch (kind)
  {
  case NetworkKind::Generator:
    return "generator";
  case NetworkKind::Discriminator:
    return "discriminator";
  case NetworkKind::Classifier:
    return "classifier";
  }
  return "unknown";
}

std::string to_string(LayerKind kind)
{
  switch (kind)
  {
  case LayerKind::Conv:
    return "conv";
  case LayerKind::Deconv:
    return "deconv";
  case LayerKind::BatchNorm:
    return "batchnorm";
  case LayerKind::Relu:
    return "relu";
  case LayerKind::LeakyRelu:
    return "leakyrelu";
  case LayerKind::Sigmoid:
    return "sigmoid";
  case LayerKind::Tanh:
    return "tanh";
  case LayerKind::Linear:
    return "linear";
  case LayerKind::Flatten:
    return "flatten";
  case LayerKind::Unflatten:
    return "unflatten";
  case LayerKind::GlobalAvgPool:
    return "global_avg_pool";
  case LayerKind::Softmax:
    return "softmax";
  case LayerKind::Residual:
    return "residual";
  }
  return "unknown";
}

NetworkSpec NetworkSpec::generator(std::size_t base_channels)
{
  NetworkSpec s;
  s.kind          = NetworkKind::Generator;
  s.base_channels = base_channels;
  return s;
}

NetworkSpec NetworkSpec::discriminator(std::size_t base_channels, std::size_t height,
                                       std::size_t width)
{
  NetworkSpec s;
  s.kind          = NetworkKind::Discriminator;
  s.base_channels = base_channels;
  s.input_height  = height;
  s.input_width   = width;
  return s;
}

NetworkSpec NetworkSpec::classifier(std::size_t base_channels, std::size_t num_classes,
                                    std::size_t height, std::size_t width)
{
  NetworkSpec s;
  s.kind          = NetworkKind::Classifier;
  s.base_channels = base_channels;
  s.num_classes   = num_classes;
  s.input_height  = height;
  s.input_width   = width;
  return s;
}

void NetworkSpec::validate() const
{
  if (base_channels < 4)
  {
    throw ContractError("base_channels must be >= 4");
  }
  if (input_channels == 0)
  {
    throw ContractError("input_channels must be positive");
  }
  switch (kind)
  {
  case NetworkKind::Generator:
    if (with_fc_bottleneck &&
        (input_height == 0 || input_width == 0 || input_height % 8 || input_width % 8))
    {
      throw ContractError("fc bottleneck generator needs a declared input size divisible by 8");
    }
    break;
  case NetworkKind::Discriminator:
    if (input_height < 2 || input_width < 2 || input_height % 2 || input_width % 2)
    {
      throw ContractError("discriminator input size must be even and at least 2");
    }
    break;
  case NetworkKind::Classifier:
    if (num_classes < 2)
    {
      throw ContractError("classifier needs at least two classes");
    }
    if (input_height == 0 || input_width == 0 || input_height % 8 || input_width % 8)
    {
      throw ContractError("classifier input size must be divisible by 8");
    }
    break;
  }
}

std::size_t LayerStack::parameter_count() const
{
  std::size_t n = 0;
  for (auto const &p : params)
  {
    n += p.value.size();
  }
  return n;
}

std::size_t LayerStack::find_param(std::string const &name) const
{
  for (std::size_t i = 0; i < params.size(); ++i)
  {
    if (params[i].name == name)
    {
      return i;
    }
  }
  return kNoIndex;
}

std::vector<Tensor> LayerStack::parameter_values() const
{
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (auto const &p : params)
  {
    out.push_back(p.value);
  }
  return out;
}

std::vector<LayerDesc const *> LayerStack::block(std::string const &name) const
{
  std::vector<LayerDesc const *> out;
  for (auto const &l : layers)
  {
    if (l.block == name)
    {
      out.push_back(&l);
    }
  }
  return out;
}

std::size_t LayerStack::residual_block_count() const
{
  return static_cast<std::size_t>(std::count_if(
      layers.begin(), layers.end(), [](auto const &l) { return l.kind == LayerKind::Residual; }));
}

namespace {

constexpr double kInitStd = 0.02;

class Builder
{
public:
  Builder(LayerStack &net, SeededRng &rng)
    : net_(net)
    , rng_(rng)
  {}

  LayerDesc conv(std::string const &block, std::string const &name, std::size_t in,
                 std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad,
                 bool transposed = false)
  {
    LayerDesc d;
    d.kind         = transposed ? LayerKind::Deconv : LayerKind::Conv;
    d.block        = block;
    d.name         = name;
    d.in_channels  = in;
    d.out_channels = out;
    d.kernel       = kernel;
    d.stride       = stride;
    d.pad          = pad;
    Shape const ws = transposed ? Shape{in, out, kernel, kernel} : Shape{out, in, kernel, kernel};
    d.weight       = add_param(name + ".weight", Tensor::randn(ws, rng_, 0.0, kInitStd));
    d.bias         = add_param(name + ".bias", Tensor(Shape{out}, 0.0));
    return d;
  }

  LayerDesc batchnorm(std::string const &block, std::string const &name, std::size_t channels)
  {
    LayerDesc d;
    d.kind         = LayerKind::BatchNorm;
    d.block        = block;
    d.name         = name;
    d.in_channels  = channels;
    d.out_channels = channels;
    d.weight = add_param(name + ".gamma", Tensor::randn(Shape{channels}, rng_, 1.0, kInitStd));
    d.bias   = add_param(name + ".beta", Tensor(Shape{channels}, 0.0));
    d.stats  = net_.stats.size();
    net_.stats.emplace_back(channels);
    net_.stats_names.push_back(name);
    return d;
  }

  LayerDesc linear(std::string const &block, std::string const &name, std::size_t in,
                   std::size_t out)
  {
    LayerDesc d;
    d.kind         = LayerKind::Linear;
    d.block        = block;
    d.name         = name;
    d.in_channels  = in;
    d.out_channels = out;
    d.weight       = add_param(name + ".weight", Tensor::randn(Shape{in, out}, rng_, 0.0, kInitStd));
    d.bias         = add_param(name + ".bias", Tensor(Shape{out}, 0.0));
    return d;
  }

  static LayerDesc simple(LayerKind kind, std::string const &block, std::string const &name)
  {
    LayerDesc d;
    d.kind  = kind;
    d.block = block;
    d.name  = name;
    return d;
  }

  // conv (or deconv) + batchnorm + activation, appended to `out`
  void conv_unit(std::vector<LayerDesc> &out, std::string const &block, std::string const &name,
                 std::size_t in, std::size_t channels, std::size_t kernel, std::size_t stride,
                 LayerKind act, bool transposed = false)
  {
    out.push_back(conv(block, name, in, channels, kernel, stride, 1, transposed));
    out.push_back(batchnorm(block, name + ".bn", channels));
    out.push_back(simple(act, block, name + "." + to_string(act)));
  }

  // two 3x3 convs with batchnorm, ReLU between, identity skip, ReLU after add
  LayerDesc residual(std::string const &block, std::string const &name, std::size_t channels)
  {
    LayerDesc r = simple(LayerKind::Residual, block, name);
    r.in_channels  = channels;
    r.out_channels = channels;
    r.body.push_back(conv("body", name + ".conv1", channels, channels, 3, 1, 1));
    r.body.push_back(batchnorm("body", name + ".bn1", channels));
    r.body.push_back(simple(LayerKind::Relu, "body", name + ".relu1"));
    r.body.push_back(conv("body", name + ".conv2", channels, channels, 3, 1, 1));
    r.body.push_back(batchnorm("body", name + ".bn2", channels));
    return r;
  }

private:
  std::size_t add_param(std::string name, Tensor value)
  {
    net_.params.push_back(Parameter{std::move(name), std::move(value)});
    return net_.params.size() - 1;
  }

  LayerStack &net_;
  SeededRng  &rng_;
};

void build_generator(LayerStack &net, Builder &b)
{
  auto const       &spec = net.spec;
  std::size_t const cb   = spec.base_channels;
  auto             &L    = net.layers;

  // down-sampling: 4x4/s2 and 3x3/s1 alternate, starting and ending with 4x4
  b.conv_unit(L, "down", "down.conv1", spec.input_channels, cb, 4, 2, LayerKind::Relu);
  b.conv_unit(L, "down", "down.conv2", cb, cb, 3, 1, LayerKind::Relu);
  b.conv_unit(L, "down", "down.conv3", cb, 2 * cb, 4, 2, LayerKind::Relu);
  b.conv_unit(L, "down", "down.conv4", 2 * cb, 2 * cb, 3, 1, LayerKind::Relu);
  b.conv_unit(L, "down", "down.conv5", 2 * cb, 4 * cb, 4, 2, LayerKind::Relu);

  // flatting: conv(C) res(C) conv(C->2C) [fc pair] res(2C) conv(2C->C)
  std::size_t const c = 4 * cb;
  b.conv_unit(L, "flat", "flat.conv1", c, c, 3, 1, LayerKind::Relu);
  if (spec.with_residual)
  {
    L.push_back(b.residual("flat", "flat.res1", c));
  }
  b.conv_unit(L, "flat", "flat.conv2", c, 2 * c, 3, 1, LayerKind::Relu);
  if (spec.with_fc_bottleneck)
  {
    std::size_t const h    = spec.input_height / 8;
    std::size_t const w    = spec.input_width / 8;
    std::size_t const flat = 2 * c * h * w;
    L.push_back(Builder::simple(LayerKind::Flatten, "flat", "flat.flatten"));
    L.push_back(b.linear("flat", "flat.fc1", flat, spec.bottleneck_dim()));
    L.push_back(Builder::simple(LayerKind::Tanh, "flat", "flat.fc1.tanh"));
    L.push_back(b.linear("flat", "flat.fc2", spec.bottleneck_dim(), flat));
    LayerDesc un = Builder::simple(LayerKind::Unflatten, "flat", "flat.unflatten");
    un.unflatten = Shape{2 * c, h, w};
    L.push_back(std::move(un));
  }
  if (spec.with_residual)
  {
    L.push_back(b.residual("flat", "flat.res2", 2 * c));
  }
  b.conv_unit(L, "flat", "flat.conv3", 2 * c, c, 3, 1, LayerKind::Relu);

  // up-sampling: deconv 4x4/s2 and conv 3x3 alternate; 3x3 convs halve channels
  b.conv_unit(L, "up", "up.deconv1", c, c, 4, 2, LayerKind::Relu, true);
  b.conv_unit(L, "up", "up.conv1", c, c / 2, 3, 1, LayerKind::Relu);
  b.conv_unit(L, "up", "up.deconv2", c / 2, c / 2, 4, 2, LayerKind::Relu, true);
  b.conv_unit(L, "up", "up.conv2", c / 2, c / 4, 3, 1, LayerKind::Relu);
  b.conv_unit(L, "up", "up.deconv3", c / 4, c / 4, 4, 2, LayerKind::Relu, true);
  // last layer: RGB, no batchnorm, sigmoid
  L.push_back(b.conv("up", "up.conv3", c / 4, 3, 3, 1, 1));
  L.push_back(Builder::simple(LayerKind::Sigmoid, "up", "up.sigmoid"));
}

void build_discriminator(LayerStack &net, Builder &b)
{
  auto const &spec = net.spec;
  auto       &L    = net.layers;
  std::size_t h = spec.input_height, w = spec.input_width;
  std::size_t in = spec.input_channels, out = spec.base_channels;
  std::size_t idx = 1;
  // stride-2 4x4 convs while the map is larger than 5 and still halves evenly
  do
  {
    b.conv_unit(L, "down", "disc.conv" + std::to_string(idx++), in, out, 4, 2,
                LayerKind::LeakyRelu);
    h /= 2;
    w /= 2;
    in = out;
    out *= 2;
  } while (std::max(h, w) > 5 && h % 2 == 0 && w % 2 == 0);

  L.push_back(Builder::simple(LayerKind::Flatten, "head", "disc.flatten"));
  L.push_back(b.linear("head", "disc.fc", in * h * w, 1));
  L.push_back(Builder::simple(LayerKind::Sigmoid, "head", "disc.sigmoid"));
}

void build_classifier(LayerStack &net, Builder &b)
{
  auto const       &spec = net.spec;
  std::size_t const cb   = spec.base_channels;
  auto             &L    = net.layers;
  b.conv_unit(L, "down", "cls.conv1", spec.input_channels, cb, 4, 2, LayerKind::Relu);
  b.conv_unit(L, "down", "cls.conv2", cb, 2 * cb, 4, 2, LayerKind::Relu);
  b.conv_unit(L, "down", "cls.conv3", 2 * cb, 4 * cb, 4, 2, LayerKind::Relu);
  b.conv_unit(L, "down", "cls.conv4", 4 * cb, 8 * cb, 3, 1, LayerKind::Relu);
  L.push_back(Builder::simple(LayerKind::GlobalAvgPool, "head", "cls.pool"));
  net.feature_layers = L.size();
  L.push_back(b.linear("head", "cls.fc", 8 * cb, spec.num_classes));
  L.push_back(Builder::simple(LayerKind::Softmax, "head", "cls.softmax"));
}

void check_input(LayerStack const &net, Shape const &s)
{
  if (s.size() != 4)
  {
    throw ContractError("network input must be [N,C,H,W], got " + shape_to_string(s));
  }
  auto const &spec = net.spec;
  if (s[1] != spec.input_channels)
  {
    throw ContractError("network expects " + std::to_string(spec.input_channels) +
                        " input channels, got " + std::to_string(s[1]));
  }
  bool const fixed = spec.kind != NetworkKind::Generator || spec.with_fc_bottleneck;
  if (fixed && (s[2] != spec.input_height || s[3] != spec.input_width))
  {
    throw ContractError(to_string(spec.kind) + " expects a " + std::to_string(spec.input_height) +
                        "x" + std::to_string(spec.input_width) + " input, got " +
                        std::to_string(s[2]) + "x" + std::to_string(s[3]));
  }
  if (spec.kind == NetworkKind::Generator && (s[2] % 8 != 0 || s[3] % 8 != 0))
  {
    throw ContractError("generator input height and width must be divisible by 8, got " +
                        std::to_string(s[2]) + "x" + std::to_string(s[3]));
  }
}

Var run_layer(LayerStack &net, BoundParams const &bound, LayerDesc const &d, Var x, Mode mode)
{
  auto const p = [&](std::size_t i) { return bound.vars.at(i); };
  switch (d.kind)
  {
  case LayerKind::Conv:
    return ops::conv2d(x, p(d.weight), p(d.bias), d.stride, d.pad);
  case LayerKind::Deconv:
    return ops::transposed_conv2d(x, p(d.weight), p(d.bias), d.stride, d.pad);
  case LayerKind::BatchNorm:
    return ops::batchnorm2d(x, p(d.weight), p(d.bias), mode, net.stats.at(d.stats), net.batchnorm);
  case LayerKind::Relu:
    return ops::activation(Activation::Relu, x);
  case LayerKind::LeakyRelu:
    return ops::activation(Activation::LeakyRelu, x, kLeakySlope);
  case LayerKind::Sigmoid:
    return ops::activation(Activation::Sigmoid, x);
  case LayerKind::Tanh:
    return ops::activation(Activation::Tanh, x);
  case LayerKind::Linear:
    return ops::linear(x, p(d.weight), p(d.bias));
  case LayerKind::Flatten: {
    auto const &s = x.shape();
    return ops::reshape(x, Shape{s[0], shape_size(s) / s[0]});
  }
  case LayerKind::Unflatten: {
    Shape s{x.shape()[0]};
    s.insert(s.end(), d.unflatten.begin(), d.unflatten.end());
    return ops::reshape(x, s);
  }
  case LayerKind::GlobalAvgPool:
    return ops::global_avg_pool(x);
  case LayerKind::Softmax:
    return ops::softmax(x);
  case LayerKind::Residual: {
    Var y = x;
    for (auto const &inner : d.body)
    {
      y = run_layer(net, bound, inner, y, mode);
    }
    return ops::activation(Activation::Relu, ops::add(y, x));
  }
  }
  throw ContractError("unknown layer kind");
}

}  // namespace

LayerStack build_network(NetworkSpec const &spec, SeededRng &rng)
{
  spec.validate();
  LayerStack net;
  net.spec = spec;
  Builder b(net, rng);
  switch (spec.kind)
  {
  case NetworkKind::Generator:
    build_generator(net, b);
    break;
  case NetworkKind::Discriminator:
    build_discriminator(net, b);
    break;
  case NetworkKind::Classifier:
    build_classifier(net, b);
    break;
  }
  if (net.feature_layers == 0)
  {
    net.feature_layers = net.layers.size();
  }
  return net;
}

BoundParams bind(Tape &tape, LayerStack const &net, bool requires_grad)
{
  BoundParams bound;
  bound.vars.reserve(net.params.size());
  for (auto const &p : net.params)
  {
    bound.vars.push_back(tape.leaf(p.value, requires_grad));
  }
  return bound;
}

Var forward(LayerStack &net, BoundParams const &bound, Var input, Mode mode, std::size_t end_layer)
{
  check_input(net, input.shape());
  if (bound.vars.size() != net.params.size())
  {
    throw ContractError("bound parameters do not belong to this network");
  }
  std::size_t const end = std::min(end_layer, net.layers.size());
  Var               x   = input;
  for (std::size_t i = 0; i < end; ++i)
  {
    x = run_layer(net, bound, net.layers[i], x, mode);
  }
  return x;
}

Tensor forward(LayerStack &net, Tensor const &input, Mode mode)
{
  Tape tape;
  auto bound = bind(tape, net, false);
  Var  x     = tape.leaf(input);
  return forward(net, bound, x, mode).value();
}

std::pair<std::size_t, std::size_t> downsampled_size(LayerStack &generator, std::size_t height,
                                                     std::size_t width)
{
  if (generator.spec.kind != NetworkKind::Generator)
  {
    throw ContractError("downsampled_size needs a generator");
  }
  std::size_t end = 0;
  for (std::size_t i = 0; i < generator.layers.size(); ++i)
  {
    if (generator.layers[i].block == "down")
    {
      end = i + 1;
    }
  }
  Tape tape;
  auto bound = bind(tape, generator, false);
  Var  x     = tape.leaf(Tensor(Shape{1, generator.spec.input_channels, height, width}, 0.5));
  auto saved = generator.stats;
  Var  y     = forward(generator, bound, x, Mode::Eval, end);
  generator.stats = std::move(saved);
  return {y.shape()[2], y.shape()[3]};
}

Var feature_rows(LayerStack &classifier, BoundParams const &bound, Var images)
{
  if (classifier.spec.kind != NetworkKind::Classifier)
  {
    throw ContractError("feature extraction needs a classifier");
  }
  Var f = forward(classifier, bound, images, Mode::Eval, classifier.feature_layers);
  if (f.shape().size() != 2)
  {
    throw ContractError("classifier feature layer must produce [N,D] rows");
  }
  return f;
}

FeatureVector extract_feature(LayerStack &classifier, Tensor const &image)
{
  Tensor batch = image.ndim() == 3 ? image.reshaped(Shape{1, image.dim(0), image.dim(1), image.dim(2)})
                                   : image;
  if (batch.ndim() != 4 || batch.dim(0) != 1)
  {
    throw ContractError("extract_feature expects a single [3,H,W] image");
  }
  Tape tape;
  auto bound = bind(tape, classifier, false);
  Var  f     = feature_rows(classifier, bound, tape.leaf(batch));
  FeatureVector out;
  out.values.assign(f.value().data().begin(), f.value().data().end());
  out.channels = f.shape()[1];
  return out;
}

Tensor classify(LayerStack &classifier, Tensor const &images)
{
  if (classifier.spec.kind != NetworkKind::Classifier)
  {
    throw ContractError("classify needs a classifier");
  }
  return forward(classifier, images, Mode::Eval);
}

}  // namespace casi
