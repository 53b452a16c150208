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
#include "casi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace casi::ops {

namespace kp = kernels::parallel;

namespace {

Tape &common_tape(std::initializer_list<Var> vars)
{
  Tape *tape = vars.begin()->tape;
  for (auto const &v : vars)
  {
    if (v.tape == nullptr || v.tape != tape)
    {
      throw ContractError("operands are recorded on different tapes");
    }
  }
  return *tape;
}

void add_into(Tensor &dst, Tensor const &src)
{
  auto       d = dst.data();
  auto const s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    d[i] += s[i];
  }
}

void require_rank(Var v, std::size_t rank, std::string const &what)
{
  if (v.shape().size() != rank)
  {
    throw DimensionError(what + " expects rank " + std::to_string(rank) + ", got " +
                             shape_to_string(v.shape()),
                         "rank");
  }
}

void check_axis(std::size_t extent, std::size_t pad, std::size_t kernel, std::size_t stride,
                std::string const &what, std::string const &axis)
{
  if (stride == 0)
  {
    throw DimensionError(what + ": stride must be positive", "stride");
  }
  if (extent + 2 * pad < kernel)
  {
    throw DimensionError(what + ": kernel larger than padded input", axis);
  }
  if ((extent + 2 * pad - kernel) % stride != 0)
  {
    throw DimensionError(what + ": (" + axis + " + 2*pad - kernel) = " +
                             std::to_string(extent + 2 * pad - kernel) +
                             " is not divisible by stride " + std::to_string(stride),
                         axis);
  }
}

}  // namespace

Var conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t pad)
{
  Tape &tape = common_tape({input, weight, bias});
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  require_rank(bias, 1, "conv2d bias");
  auto const &is = input.shape();
  auto const &ws = weight.shape();
  if (ws[1] != is[1])
  {
    throw DimensionError("conv2d: weight expects " + std::to_string(ws[1]) +
                             " input channels, input has " + std::to_string(is[1]),
                         "C");
  }
  if (bias.shape()[0] != ws[0])
  {
    throw DimensionError("conv2d: bias length does not match output channels", "K");
  }
  check_axis(is[2], pad, ws[2], stride, "conv2d", "H");
  check_axis(is[3], pad, ws[3], stride, "conv2d", "W");

  kernels::ConvGeometry const g{is[0], is[1], is[2], is[3], ws[0], ws[2], ws[3], stride, pad};
  Tensor out(Shape{g.batch, g.out_channels, g.out_h(), g.out_w()});
  kp::conv2d_forward(g, input.value().data(), weight.value().data(), bias.value().data(),
                     out.data());

  return tape.record(OpKind::Conv2d, {input.id, weight.id, bias.id}, std::move(out),
                     [g, in = input.id, w = weight.id, b = bias.id](Tape &t, Tensor const &go) {
                       if (t.requires_grad(in))
                       {
                         Tensor gi(t.value(in).shape());
                         kp::conv2d_backward_input(g, go.data(), t.value(w).data(), gi.data());
                         add_into(t.grad_buffer(in), gi);
                       }
                       if (t.requires_grad(w) || t.requires_grad(b))
                       {
                         Tensor gw(t.value(w).shape());
                         Tensor gb(t.value(b).shape());
                         kp::conv2d_backward_weight(g, t.value(in).data(), go.data(), gw.data(),
                                                    gb.data());
                         if (t.requires_grad(w))
                         {
                           add_into(t.grad_buffer(w), gw);
                         }
                         if (t.requires_grad(b))
                         {
                           add_into(t.grad_buffer(b), gb);
                         }
                       }
                     });
}

Var transposed_conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t pad)
{
  Tape &tape = common_tape({input, weight, bias});
  require_rank(input, 4, "transposed_conv2d input");
  require_rank(weight, 4, "transposed_conv2d weight");
  require_rank(bias, 1, "transposed_conv2d bias");
  auto const &is = input.shape();
  auto const &ws = weight.shape();
  if (ws[0] != is[1])
  {
    throw DimensionError("transposed_conv2d: weight expects " + std::to_string(ws[0]) +
                             " input channels, input has " + std::to_string(is[1]),
                         "C");
  }
  if (bias.shape()[0] != ws[1])
  {
    throw DimensionError("transposed_conv2d: bias length does not match output channels", "K");
  }
  if (stride == 0)
  {
    throw DimensionError("transposed_conv2d: stride must be positive", "stride");
  }
  auto const out_extent = [&](std::size_t extent, std::size_t kernel, char const *axis) {
    std::size_t const full = (extent - 1) * stride + kernel;
    if (full <= 2 * pad)
    {
      throw DimensionError("transposed_conv2d: padding consumes the whole output", axis);
    }
    return full - 2 * pad;
  };
  std::size_t const oh = out_extent(is[2], ws[2], "H");
  std::size_t const ow = out_extent(is[3], ws[3], "W");

  // the dual convolution maps [N,K,oh,ow] -> [N,C,H,W] with the same weight
  kernels::ConvGeometry const g{is[0], ws[1], oh, ow, ws[0], ws[2], ws[3], stride, pad};
  Tensor                      out(Shape{is[0], ws[1], oh, ow});
  kp::conv2d_backward_input(g, input.value().data(), weight.value().data(), out.data());
  std::size_t const plane = oh * ow;
  auto const       &bv    = bias.value();
  for (std::size_t n = 0; n < is[0]; ++n)
  {
    for (std::size_t k = 0; k < ws[1]; ++k)
    {
      double *p = out.data().data() + (n * ws[1] + k) * plane;
      for (std::size_t i = 0; i < plane; ++i)
      {
        p[i] += bv[k];
      }
    }
  }

  return tape.record(
      OpKind::TransposedConv2d, {input.id, weight.id, bias.id}, std::move(out),
      [g, plane, in = input.id, w = weight.id, b = bias.id](Tape &t, Tensor const &go) {
        if (t.requires_grad(in))
        {
          Tensor gi(t.value(in).shape());
          kp::conv2d_forward(g, go.data(), t.value(w).data(), {}, gi.data());
          add_into(t.grad_buffer(in), gi);
        }
        if (t.requires_grad(w))
        {
          Tensor gw(t.value(w).shape());
          kp::conv2d_backward_weight(g, go.data(), t.value(in).data(), gw.data(), {});
          add_into(t.grad_buffer(w), gw);
        }
        if (t.requires_grad(b))
        {
          auto &gb = t.grad_buffer(b);
          for (std::size_t n = 0; n < g.batch; ++n)
          {
            for (std::size_t k = 0; k < g.in_channels; ++k)
            {
              double const *p   = go.data().data() + (n * g.in_channels + k) * plane;
              double        acc = 0.0;
              for (std::size_t i = 0; i < plane; ++i)
              {
                acc += p[i];
              }
              gb[k] += acc;
            }
          }
        }
      });
}

Var batchnorm2d(Var input, Var gamma, Var beta, Mode mode, RunningStats &stats,
                BatchNormOptions const &options)
{
  Tape &tape = common_tape({input, gamma, beta});
  require_rank(input, 4, "batchnorm2d input");
  auto const       &is    = input.shape();
  std::size_t const n_b   = is[0];
  std::size_t const ch    = is[1];
  std::size_t const plane = is[2] * is[3];
  std::size_t const count = n_b * plane;
  if (gamma.shape() != Shape{ch} || beta.shape() != Shape{ch})
  {
    throw DimensionError("batchnorm2d: gamma/beta must have one entry per channel", "C");
  }
  if (stats.mean.shape() != Shape{ch} || stats.var.shape() != Shape{ch})
  {
    throw DimensionError("batchnorm2d: running stats do not match channel count", "C");
  }

  auto const &x = input.value();
  auto const &gv = gamma.value();
  auto const &bv = beta.value();

  Tensor mean(Shape{ch});
  Tensor inv_std(Shape{ch});
  if (mode == Mode::Train)
  {
    for (std::size_t c = 0; c < ch; ++c)
    {
      double s = 0.0;
      for (std::size_t n = 0; n < n_b; ++n)
      {
        double const *p = x.data().data() + (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
        {
          s += p[i];
        }
      }
      double const mu = s / static_cast<double>(count);
      double       v  = 0.0;
      for (std::size_t n = 0; n < n_b; ++n)
      {
        double const *p = x.data().data() + (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
        {
          double const d = p[i] - mu;
          v += d * d;
        }
      }
      v /= static_cast<double>(count);
      mean[c]    = mu;
      inv_std[c] = 1.0 / std::sqrt(v + options.eps);
      stats.mean[c] = (1.0 - options.momentum) * stats.mean[c] + options.momentum * mu;
      stats.var[c]  = (1.0 - options.momentum) * stats.var[c] + options.momentum * v;
    }
  }
  else
  {
    for (std::size_t c = 0; c < ch; ++c)
    {
      mean[c]    = stats.mean[c];
      inv_std[c] = 1.0 / std::sqrt(stats.var[c] + options.eps);
    }
  }

  Tensor xhat(is);
  Tensor out(is);
  for (std::size_t n = 0; n < n_b; ++n)
  {
    for (std::size_t c = 0; c < ch; ++c)
    {
      std::size_t const base = (n * ch + c) * plane;
      for (std::size_t i = 0; i < plane; ++i)
      {
        double const h   = (x[base + i] - mean[c]) * inv_std[c];
        xhat[base + i]   = h;
        out[base + i]    = gv[c] * h + bv[c];
      }
    }
  }

  return tape.record(
      OpKind::BatchNorm2d, {input.id, gamma.id, beta.id}, std::move(out),
      [mode, n_b, ch, plane, count, xhat = std::move(xhat), inv_std = std::move(inv_std),
       in = input.id, gm = gamma.id, bt = beta.id](Tape &t, Tensor const &go) {
        auto const &gv = t.value(gm);
        Tensor      sum_go(Shape{ch}, 0.0);
        Tensor      sum_go_xhat(Shape{ch}, 0.0);
        for (std::size_t n = 0; n < n_b; ++n)
        {
          for (std::size_t c = 0; c < ch; ++c)
          {
            std::size_t const base = (n * ch + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
            {
              sum_go[c] += go[base + i];
              sum_go_xhat[c] += go[base + i] * xhat[base + i];
            }
          }
        }
        if (t.requires_grad(gm))
        {
          add_into(t.grad_buffer(gm), sum_go_xhat);
        }
        if (t.requires_grad(bt))
        {
          add_into(t.grad_buffer(bt), sum_go);
        }
        if (!t.requires_grad(in))
        {
          return;
        }
        auto             &gi = t.grad_buffer(in);
        double const      m  = static_cast<double>(count);
        for (std::size_t n = 0; n < n_b; ++n)
        {
          for (std::size_t c = 0; c < ch; ++c)
          {
            std::size_t const base = (n * ch + c) * plane;
            double const      k    = gv[c] * inv_std[c];
            for (std::size_t i = 0; i < plane; ++i)
            {
              if (mode == Mode::Train)
              {
                gi[base + i] +=
                    k * (go[base + i] - sum_go[c] / m - xhat[base + i] * sum_go_xhat[c] / m);
              }
              else
              {
                gi[base + i] += k * go[base + i];
              }
            }
          }
        }
      });
}

Var activation(Activation kind, Var x, double slope)
{
  Tape  &tape = common_tape({x});
  auto const &xv = x.value();
  Tensor out(xv.shape());
  OpKind op{};
  switch (kind)
  {
  case Activation::Relu:
    op = OpKind::Relu;
    for (std::size_t i = 0; i < xv.size(); ++i)
    {
      out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    }
    break;
  case Activation::LeakyRelu:
    op = OpKind::LeakyRelu;
    for (std::size_t i = 0; i < xv.size(); ++i)
    {
      out[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
    }
    break;
  case Activation::Sigmoid:
    op = OpKind::Sigmoid;
    for (std::size_t i = 0; i < xv.size(); ++i)
    {
      // split by sign so exp never overflows
      double const v = xv[i];
      if (v >= 0.0)
      {
        out[i] = 1.0 / (1.0 + std::exp(-v));
      }
      else
      {
        double const e = std::exp(v);
        out[i]         = e / (1.0 + e);
      }
    }
    break;
  case Activation::Tanh:
    op = OpKind::Tanh;
    for (std::size_t i = 0; i < xv.size(); ++i)
    {
      out[i] = std::tanh(xv[i]);
    }
    break;
  }

  std::size_t const out_id = tape.size();
  return tape.record(op, {x.id}, std::move(out),
                     [kind, slope, in = x.id, out_id](Tape &t, Tensor const &go) {
                       auto const &xv = t.value(in);
                       auto const &yv = t.value(out_id);
                       auto       &gi = t.grad_buffer(in);
                       for (std::size_t i = 0; i < go.size(); ++i)
                       {
                         double d = 0.0;
                         switch (kind)
                         {
                         case Activation::Relu:
                           d = xv[i] > 0.0 ? 1.0 : 0.0;
                           break;
                         case Activation::LeakyRelu:
                           d = xv[i] > 0.0 ? 1.0 : slope;
                           break;
                         case Activation::Sigmoid:
                           d = yv[i] * (1.0 - yv[i]);
                           break;
                         case Activation::Tanh:
                           d = 1.0 - yv[i] * yv[i];
                           break;
                         }
                         gi[i] += go[i] * d;
                       }
                     });
}

Var linear(Var x, Var w, Var b)
{
  Tape &tape = common_tape({x, w, b});
  require_rank(x, 2, "linear input");
  require_rank(w, 2, "linear weight");
  require_rank(b, 1, "linear bias");
  std::size_t const n = x.shape()[0];
  std::size_t const d = x.shape()[1];
  std::size_t const e = w.shape()[1];
  if (w.shape()[0] != d)
  {
    throw DimensionError("linear: input width " + std::to_string(d) + " vs weight rows " +
                             std::to_string(w.shape()[0]),
                         "D");
  }
  if (b.shape()[0] != e)
  {
    throw DimensionError("linear: bias length does not match output width", "E");
  }
  Tensor out(Shape{n, e});
  kp::matmul(n, d, e, x.value().data(), w.value().data(), out.data());
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = 0; j < e; ++j)
    {
      out[i * e + j] += b.value()[j];
    }
  }
  return tape.record(OpKind::Linear, {x.id, w.id, b.id}, std::move(out),
                     [n, d, e, xi = x.id, wi = w.id, bi = b.id](Tape &t, Tensor const &go) {
                       if (t.requires_grad(xi))
                       {
                         Tensor gx(Shape{n, d});
                         kp::matmul_a_bt(n, e, d, go.data(), t.value(wi).data(), gx.data());
                         add_into(t.grad_buffer(xi), gx);
                       }
                       if (t.requires_grad(wi))
                       {
                         Tensor gw(Shape{d, e});
                         kp::matmul_at_b(d, n, e, t.value(xi).data(), go.data(), gw.data());
                         add_into(t.grad_buffer(wi), gw);
                       }
                       if (t.requires_grad(bi))
                       {
                         auto &gb = t.grad_buffer(bi);
                         for (std::size_t i = 0; i < n; ++i)
                         {
                           for (std::size_t j = 0; j < e; ++j)
                           {
                             gb[j] += go[i * e + j];
                           }
                         }
                       }
                     });
}

namespace {

enum class Binary
{
  Add,
  Sub,
  Mul
};

Var binary(Binary op, Var a, Var b)
{
  Tape &tape = common_tape({a, b});
  require_same_shape(a.shape(), b.shape(), "elementwise operands");
  auto const &av = a.value();
  auto const &bv = b.value();
  Tensor      out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] = op == Binary::Add ? av[i] + bv[i] : op == Binary::Sub ? av[i] - bv[i] : av[i] * bv[i];
  }
  OpKind const kind = op == Binary::Add ? OpKind::Add : op == Binary::Sub ? OpKind::Sub : OpKind::Mul;
  return tape.record(kind, {a.id, b.id}, std::move(out),
                     [op, ai = a.id, bi = b.id](Tape &t, Tensor const &go) {
                       if (t.requires_grad(ai))
                       {
                         auto &ga = t.grad_buffer(ai);
                         for (std::size_t i = 0; i < go.size(); ++i)
                         {
                           ga[i] += op == Binary::Mul ? go[i] * t.value(bi)[i] : go[i];
                         }
                       }
                       if (t.requires_grad(bi))
                       {
                         auto &gb = t.grad_buffer(bi);
                         for (std::size_t i = 0; i < go.size(); ++i)
                         {
                           gb[i] += op == Binary::Add   ? go[i]
                                    : op == Binary::Sub ? -go[i]
                                                        : go[i] * t.value(ai)[i];
                         }
                       }
                     });
}

}  // namespace

Var add(Var a, Var b)
{
  return binary(Binary::Add, a, b);
}

Var sub(Var a, Var b)
{
  return binary(Binary::Sub, a, b);
}

Var mul(Var a, Var b)
{
  return binary(Binary::Mul, a, b);
}

Var scale(Var a, double factor)
{
  Tape  &tape = common_tape({a});
  Tensor out  = a.value();
  for (auto &v : out.data())
  {
    v *= factor;
  }
  return tape.record(OpKind::Scale, {a.id}, std::move(out),
                     [factor, ai = a.id](Tape &t, Tensor const &go) {
                       auto &ga = t.grad_buffer(ai);
                       for (std::size_t i = 0; i < go.size(); ++i)
                       {
                         ga[i] += factor * go[i];
                       }
                     });
}

Var add_scalar(Var a, double offset)
{
  Tape  &tape = common_tape({a});
  Tensor out  = a.value();
  for (auto &v : out.data())
  {
    v += offset;
  }
  return tape.record(OpKind::AddScalar, {a.id}, std::move(out),
                     [ai = a.id](Tape &t, Tensor const &go) { add_into(t.grad_buffer(ai), go); });
}

Var sum(Var a)
{
  Tape  &tape = common_tape({a});
  double s    = 0.0;
  for (double v : a.value().data())
  {
    s += v;
  }
  return tape.record(OpKind::Sum, {a.id}, Tensor(Shape{1}, s),
                     [ai = a.id](Tape &t, Tensor const &go) {
                       auto &ga = t.grad_buffer(ai);
                       for (auto &v : ga.data())
                       {
                         v += go[0];
                       }
                     });
}

Var mean(Var a)
{
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var log_clamped(Var a, double lo, double hi)
{
  Tape  &tape = common_tape({a});
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] = std::log(std::clamp(a.value()[i], lo, hi));
  }
  return tape.record(OpKind::Log, {a.id}, std::move(out),
                     [lo, hi, ai = a.id](Tape &t, Tensor const &go) {
                       auto const &av = t.value(ai);
                       auto       &ga = t.grad_buffer(ai);
                       for (std::size_t i = 0; i < go.size(); ++i)
                       {
                         if (av[i] > lo && av[i] < hi)
                         {
                           ga[i] += go[i] / av[i];
                         }
                       }
                     });
}

Var reshape(Var a, Shape shape)
{
  Tape  &tape = common_tape({a});
  Tensor out  = a.value().reshaped(std::move(shape));
  return tape.record(OpKind::Reshape, {a.id}, std::move(out),
                     [ai = a.id](Tape &t, Tensor const &go) {
                       auto &ga = t.grad_buffer(ai);
                       for (std::size_t i = 0; i < go.size(); ++i)
                       {
                         ga[i] += go[i];
                       }
                     });
}

Var crop(Var a, std::size_t top, std::size_t left, std::size_t height, std::size_t width)
{
  Tape &tape = common_tape({a});
  require_rank(a, 4, "crop input");
  auto const s = a.shape();
  if (height == 0 || top + height > s[2])
  {
    throw DimensionError("crop window exceeds input height", "H");
  }
  if (width == 0 || left + width > s[3])
  {
    throw DimensionError("crop window exceeds input width", "W");
  }
  Tensor      out(Shape{s[0], s[1], height, width});
  auto const &av = a.value();
  for (std::size_t n = 0; n < s[0]; ++n)
  {
    for (std::size_t c = 0; c < s[1]; ++c)
    {
      for (std::size_t h = 0; h < height; ++h)
      {
        for (std::size_t w = 0; w < width; ++w)
        {
          out.at(n, c, h, w) = av.at(n, c, top + h, left + w);
        }
      }
    }
  }
  return tape.record(OpKind::Crop, {a.id}, std::move(out),
                     [s, top, left, height, width, ai = a.id](Tape &t, Tensor const &go) {
                       auto &ga = t.grad_buffer(ai);
                       for (std::size_t n = 0; n < s[0]; ++n)
                       {
                         for (std::size_t c = 0; c < s[1]; ++c)
                         {
                           for (std::size_t h = 0; h < height; ++h)
                           {
                             for (std::size_t w = 0; w < width; ++w)
                             {
                               ga.at(n, c, top + h, left + w) += go.at(n, c, h, w);
                             }
                           }
                         }
                       }
                     });
}

Var compose(Var context, Var generated, Tensor const &mask)
{
  Tape &tape = common_tape({context, generated});
  require_rank(context, 4, "compose context");
  require_same_shape(context.shape(), generated.shape(), "compose operands");
  auto const s = context.shape();
  if (mask.shape() != Shape{s[2], s[3]})
  {
    throw DimensionError("compose: mask must be [H,W] matching the images", "H");
  }
  for (double m : mask.data())
  {
    if (m != 0.0 && m != 1.0)
    {
      throw ContractError("compose: mask must be binary");
    }
  }
  std::size_t const plane = s[2] * s[3];
  Tensor            out   = context.value();
  auto const       &gv    = generated.value();
  for (std::size_t nc = 0; nc < s[0] * s[1]; ++nc)
  {
    for (std::size_t i = 0; i < plane; ++i)
    {
      if (mask[i] == 1.0)
      {
        out[nc * plane + i] = gv[nc * plane + i];
      }
    }
  }
  return tape.record(OpKind::Compose, {context.id, generated.id}, std::move(out),
                     [mask, plane, ci = context.id, gi = generated.id](Tape &t, Tensor const &go) {
                       bool const need_c = t.requires_grad(ci);
                       bool const need_g = t.requires_grad(gi);
                       Tensor    *gc     = need_c ? &t.grad_buffer(ci) : nullptr;
                       Tensor    *gg     = need_g ? &t.grad_buffer(gi) : nullptr;
                       for (std::size_t j = 0; j < go.size(); ++j)
                       {
                         bool const missing = mask[j % plane] == 1.0;
                         if (missing && gg)
                         {
                           (*gg)[j] += go[j];
                         }
                         else if (!missing && gc)
                         {
                           (*gc)[j] += go[j];
                         }
                       }
                     });
}

Var global_avg_pool(Var a)
{
  Tape &tape = common_tape({a});
  require_rank(a, 4, "global_avg_pool input");
  auto const        s     = a.shape();
  std::size_t const plane = s[2] * s[3];
  Tensor            out(Shape{s[0], s[1]});
  for (std::size_t nc = 0; nc < s[0] * s[1]; ++nc)
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i)
    {
      acc += a.value()[nc * plane + i];
    }
    out[nc] = acc / static_cast<double>(plane);
  }
  return tape.record(OpKind::GlobalAvgPool, {a.id}, std::move(out),
                     [plane, ai = a.id](Tape &t, Tensor const &go) {
                       auto        &ga  = t.grad_buffer(ai);
                       double const inv = 1.0 / static_cast<double>(plane);
                       for (std::size_t nc = 0; nc < go.size(); ++nc)
                       {
                         for (std::size_t i = 0; i < plane; ++i)
                         {
                           ga[nc * plane + i] += go[nc] * inv;
                         }
                       }
                     });
}

namespace {

Tensor softmax_rows(Tensor const &logits)
{
  std::size_t const n = logits.dim(0);
  std::size_t const k = logits.dim(1);
  Tensor            out(logits.shape());
  for (std::size_t i = 0; i < n; ++i)
  {
    double m = logits[i * k];
    for (std::size_t j = 1; j < k; ++j)
    {
      m = std::max(m, logits[i * k + j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j)
    {
      out[i * k + j] = std::exp(logits[i * k + j] - m);
      z += out[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j)
    {
      out[i * k + j] /= z;
    }
  }
  return out;
}

}  // namespace

Var softmax(Var logits)
{
  Tape &tape = common_tape({logits});
  require_rank(logits, 2, "softmax input");
  Tensor            out    = softmax_rows(logits.value());
  std::size_t const out_id = tape.size();
  return tape.record(OpKind::Softmax, {logits.id}, std::move(out),
                     [out_id, li = logits.id](Tape &t, Tensor const &go) {
                       auto const       &y  = t.value(out_id);
                       auto             &gl = t.grad_buffer(li);
                       std::size_t const n  = y.dim(0);
                       std::size_t const k  = y.dim(1);
                       for (std::size_t i = 0; i < n; ++i)
                       {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < k; ++j)
                         {
                           dot += go[i * k + j] * y[i * k + j];
                         }
                         for (std::size_t j = 0; j < k; ++j)
                         {
                           gl[i * k + j] += y[i * k + j] * (go[i * k + j] - dot);
                         }
                       }
                     });
}

Var cross_entropy(Var logits, std::vector<std::size_t> const &labels)
{
  Tape &tape = common_tape({logits});
  require_rank(logits, 2, "cross_entropy input");
  std::size_t const n = logits.shape()[0];
  std::size_t const k = logits.shape()[1];
  if (labels.size() != n)
  {
    throw DimensionError("cross_entropy: one label per row required", "N");
  }
  Tensor probs = softmax_rows(logits.value());
  double loss  = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (labels[i] >= k)
    {
      throw ContractError("cross_entropy: label out of range");
    }
    loss -= std::log(std::max(probs[i * k + labels[i]], 1e-300));
  }
  loss /= static_cast<double>(n);
  return tape.record(OpKind::CrossEntropy, {logits.id}, Tensor(Shape{1}, loss),
                     [n, k, labels, probs = std::move(probs), li = logits.id](Tape &t,
                                                                               Tensor const &go) {
                       auto        &gl  = t.grad_buffer(li);
                       double const inv = go[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i)
                       {
                         for (std::size_t j = 0; j < k; ++j)
                         {
                           double const onehot = j == labels[i] ? 1.0 : 0.0;
                           gl[i * k + j] += inv * (probs[i * k + j] - onehot);
                         }
                       }
                     });
}

Var weighted_squared_error(Var a, Tensor const &target, Tensor const &weights, double normaliser)
{
  Tape &tape = common_tape({a});
  require_rank(a, 4, "weighted_squared_error input");
  require_same_shape(a.shape(), target.shape(), "weighted_squared_error target");
  auto const s = a.shape();
  if (weights.shape() != Shape{s[2], s[3]})
  {
    throw DimensionError("weighted_squared_error: weights must be [H,W]", "H");
  }
  if (!(normaliser > 0.0))
  {
    throw ContractError("weighted_squared_error: normaliser must be positive");
  }
  std::size_t const plane = s[2] * s[3];
  double            acc   = 0.0;
  auto const       &av    = a.value();
  for (std::size_t j = 0; j < av.size(); ++j)
  {
    double const w = weights[j % plane];
    if (w == 0.0)
    {
      continue;
    }
    double const d = av[j] - target[j];
    acc += w * d * d;
  }
  return tape.record(
      OpKind::WeightedSquaredError, {a.id}, Tensor(Shape{1}, acc / normaliser),
      [target, weights, normaliser, plane, ai = a.id](Tape &t, Tensor const &go) {
        auto const  &av = t.value(ai);
        auto        &ga = t.grad_buffer(ai);
        double const f  = 2.0 * go[0] / normaliser;
        for (std::size_t j = 0; j < av.size(); ++j)
        {
          double const w = weights[j % plane];
          if (w != 0.0)
          {
            ga[j] += f * w * (av[j] - target[j]);
          }
        }
      });
}

}  // namespace casi::ops
