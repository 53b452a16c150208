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

#include "casi/trainer.hpp"

#include "casi/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace casi {

std::string to_string(Variant v)
{
  switch (v)
  {
  case Variant::Casi:
    return "casi";
  case Variant::CasiMinus:
    return "casi-minus";
  case Variant::CasiFc:
    return "casi-fc";
  }
  return "unknown";
}

Variant parse_variant(std::string const &text)
{
  for (auto v : {Variant::Casi, Variant::CasiMinus, Variant::CasiFc})
  {
    if (to_string(v) == text)
    {
      return v;
    }
  }
  throw ContractError("unknown variant '" + text + "' (expected casi, casi-minus or casi-fc)");
}

namespace {

std::string number(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t parse_size(std::string const &key, std::string const &value)
{
  std::size_t used = 0;
  try
  {
    if (value.empty() || value[0] == '-')
    {
      throw std::invalid_argument(value);
    }
    auto const v = std::stoull(value, &used);
    if (used == value.size())
    {
      return static_cast<std::size_t>(v);
    }
  }
  catch (std::exception const &)
  {
  }
  throw ContractError("config key '" + key + "' needs a non-negative integer, got '" + value + "'");
}

double parse_double(std::string const &key, std::string const &value)
{
  std::size_t used = 0;
  try
  {
    double const v = std::stod(value, &used);
    if (used == value.size() && std::isfinite(v))
    {
      return v;
    }
  }
  catch (std::exception const &)
  {
  }
  throw ContractError("config key '" + key + "' needs a number, got '" + value + "'");
}

std::map<std::string, std::string> config_map(TrainConfig const &c)
{
  return {
      {"adam.beta1", number(c.adam.beta1)},
      {"adam.beta2", number(c.adam.beta2)},
      {"adam.epsilon", number(c.adam.epsilon)},
      {"adam.lr", number(c.adam.learning_rate)},
      {"base_channels", std::to_string(c.base_channels)},
      {"batch", std::to_string(c.batch_size)},
      {"checkpoint_interval", std::to_string(c.checkpoint_interval)},
      {"classifier", c.classifier},
      {"diters", std::to_string(c.d_iters)},
      {"iters", std::to_string(c.max_iterations)},
      {"lambda_adv", number(c.weights.adversarial)},
      {"lambda_per", number(c.weights.perceptual)},
      {"manifest", c.manifest},
      {"overlap", std::to_string(c.overlap)},
      {"seed", std::to_string(c.seed)},
      {"size", std::to_string(c.image_size)},
      {"variant", to_string(c.variant)},
  };
}

std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
  {
    return {};
  }
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

void TrainConfig::validate() const
{
  if (d_iters < 1)
  {
    throw ContractError("d_iters must be at least 1");
  }
  if (batch_size < 1)
  {
    throw ContractError("batch size must be at least 1");
  }
  if (image_size == 0 || image_size % 8 != 0)
  {
    throw ContractError("image size must be a positive multiple of 8");
  }
  if (base_channels < 4)
  {
    throw ContractError("base_channels must be at least 4");
  }
  weights.validate();
  make_center_mask(image_size, image_size, overlap);
}

NetworkSpec TrainConfig::generator_spec() const
{
  NetworkSpec s        = NetworkSpec::generator(base_channels);
  s.with_residual      = variant != Variant::CasiMinus;
  s.with_fc_bottleneck = variant == Variant::CasiFc;
  if (s.with_fc_bottleneck)
  {
    s.input_height = image_size;
    s.input_width  = image_size;
  }
  return s;
}

NetworkSpec TrainConfig::discriminator_spec() const
{
  MaskSpec const m = mask();
  return NetworkSpec::discriminator(base_channels, m.predicted.height, m.predicted.width);
}

MaskSpec TrainConfig::mask() const
{
  return make_center_mask(image_size, image_size, overlap);
}

std::string TrainConfig::canonical() const
{
  std::string out;
  for (auto const &[k, v] : config_map(*this))
  {
    out += k + "=" + v + "\n";
  }
  return out;
}

std::uint64_t TrainConfig::fingerprint() const
{
  static std::set<std::string> const excluded{"iters", "checkpoint_interval", "manifest", "classifier"};
  std::string                        text;
  for (auto const &[k, v] : config_map(*this))
  {
    if (!excluded.contains(k))
    {
      text += k + "=" + v + "\n";
    }
  }
  return fnv1a64(text);
}

void set_config_value(TrainConfig &cfg, std::string const &key, std::string const &value)
{
  if (key == "adam.beta1")
    cfg.adam.beta1 = parse_double(key, value);
  else if (key == "adam.beta2")
    cfg.adam.beta2 = parse_double(key, value);
  else if (key == "adam.epsilon")
    cfg.adam.epsilon = parse_double(key, value);
  else if (key == "adam.lr")
    cfg.adam.learning_rate = parse_double(key, value);
  else if (key == "base_channels")
    cfg.base_channels = parse_size(key, value);
  else if (key == "batch")
    cfg.batch_size = parse_size(key, value);
  else if (key == "checkpoint_interval")
    cfg.checkpoint_interval = parse_size(key, value);
  else if (key == "classifier")
    cfg.classifier = value;
  else if (key == "diters")
    cfg.d_iters = parse_size(key, value);
  else if (key == "iters")
    cfg.max_iterations = parse_size(key, value);
  else if (key == "lambda_adv" || key == "lambda_per")
  {
    double const v   = parse_double(key, value);
    double const adv = key == "lambda_adv" ? v : cfg.weights.adversarial;
    double const per = key == "lambda_per" ? v : cfg.weights.perceptual;
    cfg.weights      = LossWeights{1.0 - adv - per, adv, per};
  }
  else if (key == "manifest")
    cfg.manifest = value;
  else if (key == "overlap")
    cfg.overlap = parse_size(key, value);
  else if (key == "seed")
    cfg.seed = parse_size(key, value);
  else if (key == "size")
    cfg.image_size = parse_size(key, value);
  else if (key == "variant")
    cfg.variant = parse_variant(value);
  else
    throw ContractError("unknown config key '" + key + "'");
}

TrainConfig parse_config(std::string const &text, TrainConfig base)
{
  std::istringstream in(text);
  std::string        raw;
  std::size_t        line_no = 0;
  while (std::getline(in, raw))
  {
    ++line_no;
    std::string const line = trim(raw);
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string::npos)
    {
      throw ContractError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainState init_training(TrainConfig const &config, std::optional<LayerStack> classifier)
{
  config.validate();
  if (config.weights.perceptual > 0.0 && !classifier)
  {
    throw ContractError("lambda_per > 0 needs a pretrained classifier");
  }
  if (classifier && (classifier->spec.input_height != config.image_size ||
                     classifier->spec.input_width != config.image_size))
  {
    throw ContractError("classifier input size does not match the training image size");
  }
  TrainState s{.config        = config,
               .iteration     = 0,
               .generator     = {},
               .discriminator = {},
               .adam_g        = {},
               .adam_d        = {},
               .rng           = SeededRng(config.seed),
               .classifier    = std::move(classifier)};
  s.generator     = build_network(config.generator_spec(), s.rng);
  s.discriminator = build_network(config.discriminator_spec(), s.rng);
  s.adam_g        = AdamState(config.adam, s.generator.parameter_values());
  s.adam_d        = AdamState(config.adam, s.discriminator.parameter_values());
  return s;
}

namespace {

void store_network(Checkpoint &ck, std::string const &prefix, LayerStack const &net)
{
  for (auto const &p : net.params)
  {
    ck.tensors.emplace_back(prefix + p.name, p.value);
  }
  for (std::size_t i = 0; i < net.stats.size(); ++i)
  {
    ck.tensors.emplace_back(prefix + "stats/" + net.stats_names[i] + ".mean", net.stats[i].mean);
    ck.tensors.emplace_back(prefix + "stats/" + net.stats_names[i] + ".var", net.stats[i].var);
  }
}

void assign(Tensor &dst, Tensor const &src, std::string const &name)
{
  if (dst.shape() != src.shape())
  {
    throw FormatError(FormatError::Kind::Malformed, "checkpoint tensor '" + name + "' has shape " +
                                                        shape_to_string(src.shape()) + ", expected " +
                                                        shape_to_string(dst.shape()));
  }
  dst = src;
}

void restore_network(Checkpoint const &ck, std::string const &prefix, LayerStack &net)
{
  for (auto &p : net.params)
  {
    assign(p.value, ck.tensor(prefix + p.name), prefix + p.name);
  }
  for (std::size_t i = 0; i < net.stats.size(); ++i)
  {
    std::string const base = prefix + "stats/" + net.stats_names[i];
    assign(net.stats[i].mean, ck.tensor(base + ".mean"), base + ".mean");
    assign(net.stats[i].var, ck.tensor(base + ".var"), base + ".var");
  }
}

void store_adam(Checkpoint &ck, std::string const &prefix, AdamState const &adam, LayerStack const &net)
{
  ck.tensors.emplace_back(prefix + "step", Tensor(Shape{1}, static_cast<double>(adam.step)));
  for (std::size_t i = 0; i < net.params.size(); ++i)
  {
    ck.tensors.emplace_back(prefix + "m/" + net.params[i].name, adam.m[i]);
    ck.tensors.emplace_back(prefix + "v/" + net.params[i].name, adam.v[i]);
  }
}

void restore_adam(Checkpoint const &ck, std::string const &prefix, AdamState &adam, LayerStack const &net)
{
  adam.step = static_cast<std::uint64_t>(ck.tensor(prefix + "step")[0]);
  for (std::size_t i = 0; i < net.params.size(); ++i)
  {
    assign(adam.m[i], ck.tensor(prefix + "m/" + net.params[i].name), prefix + "m/" + net.params[i].name);
    assign(adam.v[i], ck.tensor(prefix + "v/" + net.params[i].name), prefix + "v/" + net.params[i].name);
  }
}

constexpr char const *kClassifierProbe = "cls/cls.conv1.weight";

}  // namespace

Checkpoint to_checkpoint(TrainState const &state)
{
  Checkpoint ck;
  ck.fingerprint = state.config.fingerprint();
  ck.iteration   = state.iteration;
  ck.rng_seed    = state.rng.seed();
  ck.rng_state   = state.rng.state();
  ck.config      = state.config.canonical();
  store_network(ck, "g/", state.generator);
  store_network(ck, "d/", state.discriminator);
  store_adam(ck, "adam_g/", state.adam_g, state.generator);
  store_adam(ck, "adam_d/", state.adam_d, state.discriminator);
  if (state.classifier)
  {
    store_network(ck, "cls/", *state.classifier);
  }
  return ck;
}

TrainState from_checkpoint(Checkpoint const &ck, std::optional<TrainConfig> const &expected)
{
  TrainConfig const cfg = parse_config(ck.config);
  if (cfg.fingerprint() != ck.fingerprint)
  {
    throw FormatError(FormatError::Kind::FingerprintMismatch, "checkpoint config does not match its fingerprint");
  }
  if (expected && expected->fingerprint() != ck.fingerprint)
  {
    throw FormatError(FormatError::Kind::FingerprintMismatch,
                      "checkpoint was written for a different configuration");
  }
  std::optional<LayerStack> classifier;
  if (ck.has(kClassifierProbe))
  {
    classifier = classifier_from_checkpoint(ck);
  }
  TrainConfig run_cfg = cfg;
  if (expected)
  {
    run_cfg = *expected;
  }
  TrainState s = init_training(run_cfg, std::move(classifier));
  s.iteration  = ck.iteration;
  s.rng        = SeededRng(ck.rng_seed);
  s.rng.set_state(ck.rng_state);
  restore_network(ck, "g/", s.generator);
  restore_network(ck, "d/", s.discriminator);
  restore_adam(ck, "adam_g/", s.adam_g, s.generator);
  restore_adam(ck, "adam_d/", s.adam_d, s.discriminator);
  return s;
}

namespace {

std::vector<Tensor *> param_ptrs(LayerStack &net)
{
  std::vector<Tensor *> out;
  for (auto &p : net.params)
  {
    out.push_back(&p.value);
  }
  return out;
}

void apply_gradients(Tape &tape, BoundParams const &bound, LayerStack &net, AdamState &adam)
{
  std::vector<Tensor> grads;
  grads.reserve(bound.vars.size());
  for (auto const &v : bound.vars)
  {
    grads.push_back(tape.gradient(v));
  }
  std::vector<Tensor const *> gp;
  for (auto const &g : grads)
  {
    gp.push_back(&g);
  }
  adam_step(param_ptrs(net), gp, adam);
}

double squared_grad_norm(Tape &tape, Var loss, BoundParams const &bound)
{
  tape.run_backward(loss);
  double acc = 0.0;
  for (auto const &v : bound.vars)
  {
    Tensor const grad = tape.gradient(v);
    for (double g : grad.data())
    {
      acc += g * g;
    }
  }
  return acc;
}

Var crop_region(Var x, Region const &r)
{
  return ops::crop(x, r.top, r.left, r.height, r.width);
}

struct Batch
{
  Tensor x;       ///< ground truth [N,3,H,W]
  Tensor filled;  ///< mean-filled generator input
};

Batch sample_batch(TrainState &s, std::vector<Image> const &images, MaskSpec const &mask)
{
  std::vector<Image> picked;
  picked.reserve(s.config.batch_size);
  for (std::size_t i = 0; i < s.config.batch_size; ++i)
  {
    picked.push_back(images[s.rng.below(images.size())]);
  }
  Batch b;
  b.x      = stack(picked);
  b.filled = mean_fill(b.x, mask.mask);
  return b;
}

void discriminator_update(TrainState &s, std::vector<Image> const &images, MaskSpec const &mask)
{
  Batch const  b = sample_batch(s, images, mask);
  Tape         tape;
  BoundParams  gb = bind(tape, s.generator, false);
  Var const    g  = forward(s.generator, gb, tape.leaf(b.filled), Mode::Train);
  Tensor const z  = compose(b.x, g.value(), mask.mask);

  BoundParams db     = bind(tape, s.discriminator, true);
  Var const   d_real = forward(s.discriminator, db, crop_region(tape.leaf(b.x), mask.predicted), Mode::Train);
  Var const   d_fake = forward(s.discriminator, db, crop_region(tape.leaf(z), mask.predicted), Mode::Train);
  Var const   loss   = loss::discriminator(d_real, d_fake);
  tape.run_backward(loss);
  apply_gradients(tape, db, s.discriminator, s.adam_d);
}

LossReport generator_update(TrainState &s, std::vector<Image> const &images, MaskSpec const &mask,
                            std::optional<std::array<double, 3>> *norms)
{
  Batch const b = sample_batch(s, images, mask);
  Tape        tape;
  BoundParams gb = bind(tape, s.generator, true);
  Var const   g  = forward(s.generator, gb, tape.leaf(b.filled), Mode::Train);
  Var const   x  = tape.leaf(b.x);
  Var const   z  = ops::compose(x, g, mask.mask);

  Var const   pixel = loss::pixel_l2(g, b.x, mask);
  BoundParams db    = bind(tape, s.discriminator, false);
  Var const   d_fake = forward(s.discriminator, db, crop_region(z, mask.predicted), Mode::Train);
  Var const   adv    = loss::generator_adversarial(d_fake);
  Var         per    = tape.leaf(Tensor(Shape{1}, 0.0));
  if (s.classifier)
  {
    BoundParams cb = bind(tape, *s.classifier, false);
    Var const   fx = feature_rows(*s.classifier, cb, x);
    Var const   fz = feature_rows(*s.classifier, cb, z);
    per            = loss::perceptual(fx, fz);
  }
  auto const &w        = s.config.weights;
  Var const   t_pixel  = ops::scale(pixel, w.pixel);
  Var const   t_adv    = ops::scale(adv, w.adversarial);
  Var const   t_per    = ops::scale(per, w.perceptual);
  Var const   joint    = ops::add(ops::add(t_pixel, t_adv), t_per);

  if (norms)
  {
    *norms = std::array<double, 3>{squared_grad_norm(tape, t_pixel, gb), squared_grad_norm(tape, t_adv, gb),
                                   squared_grad_norm(tape, t_per, gb)};
  }
  tape.run_backward(joint);
  apply_gradients(tape, gb, s.generator, s.adam_g);
  return {pixel.value()[0], adv.value()[0], per.value()[0], joint.value()[0]};
}

}  // namespace

std::vector<LossRecord> train_casi(TrainState &state, std::vector<Image> const &images, TrainHooks const &hooks)
{
  auto const &cfg = state.config;
  cfg.validate();
  if (images.empty())
  {
    throw ContractError("training set is empty");
  }
  if (cfg.weights.perceptual > 0.0 && !state.classifier)
  {
    throw ContractError("lambda_per > 0 needs a pretrained classifier");
  }
  for (auto const &img : images)
  {
    if (img.channels != 3 || img.height != cfg.image_size || img.width != cfg.image_size)
    {
      throw ContractError("training images must be RGB " + std::to_string(cfg.image_size) + "x" +
                          std::to_string(cfg.image_size));
    }
  }
  MaskSpec const      mask = cfg.mask();
  std::uint64_t const end  = hooks.stop_at ? std::min<std::uint64_t>(hooks.stop_at, cfg.max_iterations)
                                           : cfg.max_iterations;
  std::vector<LossRecord> records;
  while (state.iteration < end)
  {
    std::uint64_t const it = state.iteration + 1;
    for (std::size_t d = 0; d < cfg.d_iters; ++d)
    {
      discriminator_update(state, images, mask);
      if (hooks.on_update)
      {
        hooks.on_update(UpdateEvent{it, UpdateTarget::Discriminator, std::nullopt});
      }
    }
    std::optional<std::array<double, 3>> norms;
    LossReport const report = generator_update(state, images, mask, hooks.decompose_gradients ? &norms : nullptr);
    state.iteration         = it;
    if (hooks.on_update)
    {
      hooks.on_update(UpdateEvent{it, UpdateTarget::Generator, norms});
    }
    records.push_back({it, report});
    if (hooks.checkpoint_path && cfg.checkpoint_interval > 0 && it % cfg.checkpoint_interval == 0)
    {
      save_checkpoint(to_checkpoint(state), *hooks.checkpoint_path);
    }
  }
  if (hooks.checkpoint_path)
  {
    save_checkpoint(to_checkpoint(state), *hooks.checkpoint_path);
  }
  return records;
}

std::string loss_csv(std::vector<LossRecord> const &records)
{
  std::string out = "iteration,l_pix,l_adv,l_per,l_inp\n";
  for (auto const &r : records)
  {
    out += std::to_string(r.iteration) + "," + number(r.losses.pixel) + "," + number(r.losses.adversarial) +
           "," + number(r.losses.perceptual) + "," + number(r.losses.joint) + "\n";
  }
  return out;
}

std::vector<Image> inpaint_batch(LayerStack &generator, std::vector<Image> const &images,
                                 std::vector<Tensor> const &masks)
{
  if (images.size() != masks.size())
  {
    throw ContractError("inpaint_batch: one mask per image required");
  }
  std::vector<Image> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i)
  {
    Image const &img = images[i];
    if (img.height % 8 != 0 || img.width % 8 != 0)
    {
      throw ContractError("inpaint_batch: image " + std::to_string(i) + " is " + std::to_string(img.height) +
                          "x" + std::to_string(img.width) + ", dims must be divisible by 8");
    }
    Tensor const x      = img.to_tensor().reshaped(Shape{1, img.channels, img.height, img.width});
    Tensor const filled = mean_fill(x, masks[i]);
    Tensor const g      = forward(generator, filled, Mode::Eval);
    out.push_back(Image::from_tensor(compose(x, g, masks[i])));
  }
  return out;
}

std::string PretrainConfig::canonical() const
{
  return "adam.beta1=" + number(adam.beta1) + "\nadam.beta2=" + number(adam.beta2) +
         "\nadam.epsilon=" + number(adam.epsilon) + "\nadam.lr=" + number(adam.learning_rate) +
         "\nbase_channels=" + std::to_string(base_channels) + "\nbatch=" + std::to_string(batch_size) +
         "\naugment=" + (augment ? "1" : "0") + "\nepochs=" + std::to_string(epochs) + "\nseed=" + std::to_string(seed) + "\n";
}

namespace {

std::vector<std::size_t> argmax_rows(Tensor const &probs)
{
  std::vector<std::size_t> out;
  std::size_t const        k = probs.dim(1);
  for (std::size_t n = 0; n < probs.dim(0); ++n)
  {
    auto const row = probs.data().subspan(n * k, k);
    out.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

template <typename Fn>
void for_chunks(std::vector<Image> const &images, Fn &&fn)
{
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < images.size(); start += kChunk)
  {
    std::size_t const  stop = std::min(images.size(), start + kChunk);
    std::vector<Image> part(images.begin() + static_cast<std::ptrdiff_t>(start),
                            images.begin() + static_cast<std::ptrdiff_t>(stop));
    fn(start, stack(part));
  }
}

// label-preserving: optional horizontal/vertical flips and a channel permutation
Image augment(Image const &img, SeededRng &rng)
{
  static constexpr std::array<std::array<std::size_t, 3>, 6> kPerms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  bool const  flip_x = rng.below(2) == 1;
  bool const  flip_y = rng.below(2) == 1;
  auto const &perm   = kPerms[rng.below(img.channels == 3 ? 6 : 1)];
  Image       out(img.channels, img.height, img.width);
  for (std::size_t c = 0; c < img.channels; ++c)
  {
    std::size_t const src_c = img.channels == 3 ? perm[c] : c;
    for (std::size_t y = 0; y < img.height; ++y)
    {
      std::size_t const sy = flip_y ? img.height - 1 - y : y;
      for (std::size_t x = 0; x < img.width; ++x)
      {
        out.at(c, y, x) = img.at(src_c, sy, flip_x ? img.width - 1 - x : x);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> label_probabilities(LayerStack &classifier, std::vector<Image> const &images,
                                        std::vector<std::size_t> const &labels)
{
  if (images.size() != labels.size())
  {
    throw ContractError("one label per image required");
  }
  std::vector<double> out(images.size());
  for_chunks(images, [&](std::size_t start, Tensor const &batch) {
    Tensor const      probs = classify(classifier, batch);
    std::size_t const k     = probs.dim(1);
    for (std::size_t n = 0; n < probs.dim(0); ++n)
    {
      out[start + n] = probs[n * k + labels[start + n]];
    }
  });
  return out;
}

double accuracy(LayerStack &classifier, std::vector<Image> const &images, std::vector<std::size_t> const &labels)
{
  if (images.empty())
  {
    return 0.0;
  }
  std::size_t correct = 0;
  for_chunks(images, [&](std::size_t start, Tensor const &batch) {
    auto const pred = argmax_rows(classify(classifier, batch));
    for (std::size_t n = 0; n < pred.size(); ++n)
    {
      correct += pred[n] == labels[start + n] ? 1 : 0;
    }
  });
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

PretrainResult pretrain_classifier(std::vector<Image> const &train, std::vector<std::size_t> const &train_labels,
                                   std::vector<Image> const &test, std::vector<std::size_t> const &test_labels,
                                   PretrainConfig const &cfg)
{
  if (train.empty() || train.size() != train_labels.size() || test.size() != test_labels.size())
  {
    throw ContractError("pretrain: need one label per image and a non-empty training set");
  }
  std::set<std::size_t> const classes(train_labels.begin(), train_labels.end());
  if (classes.size() < 2)
  {
    throw ContractError("pretrain: dataset has fewer than two classes");
  }
  std::size_t const num_classes = *classes.rbegin() + 1;
  SeededRng         rng(cfg.seed);
  PretrainResult    result;
  result.classifier =
      build_network(NetworkSpec::classifier(cfg.base_channels, num_classes, train[0].height, train[0].width), rng);
  LayerStack &net = result.classifier;
  AdamState   adam(cfg.adam, net.parameter_values());

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
  {
    for (std::size_t i = 0; i < order.size(); ++i)
    {
      order[i] = i;
    }
    for (std::size_t i = order.size(); i > 1; --i)
    {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double      loss_sum = 0.0;
    std::size_t batches  = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size)
    {
      std::size_t const        stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Image>       imgs;
      std::vector<std::size_t> labels;
      for (std::size_t i = start; i < stop; ++i)
      {
        imgs.push_back(cfg.augment ? augment(train[order[i]], rng) : train[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }
      Tape        tape;
      BoundParams bound  = bind(tape, net, true);
      Var const   logits = forward(net, bound, tape.leaf(stack(imgs)), Mode::Train, net.layers.size() - 1);
      Var const   loss   = ops::cross_entropy(logits, labels);
      tape.run_backward(loss);
      apply_gradients(tape, bound, net, adam);
      loss_sum += loss.value()[0];
      ++batches;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }
  // replace the lagging running averages with statistics of the whole training set
  BatchNormOptions const saved = net.batchnorm;
  net.batchnorm.momentum       = 1.0;
  forward(net, stack(train), Mode::Train);
  net.batchnorm = saved;
  result.train_accuracy = accuracy(net, train, train_labels);
  result.test_accuracy  = accuracy(net, test, test_labels);
  return result;
}

Checkpoint classifier_checkpoint(LayerStack const &classifier, std::string const &config)
{
  Checkpoint ck;
  ck.config      = config + "size=" + std::to_string(classifier.spec.input_height) + "\n";
  ck.fingerprint = fnv1a64(ck.config);
  store_network(ck, "cls/", classifier);
  return ck;
}

LayerStack classifier_from_checkpoint(Checkpoint const &ck)
{
  Tensor const &conv1 = ck.tensor(kClassifierProbe);
  Tensor const &fc    = ck.tensor("cls/cls.fc.weight");
  if (conv1.ndim() != 4 || fc.ndim() != 2)
  {
    throw FormatError(FormatError::Kind::Malformed, "classifier tensors have unexpected rank");
  }
  // input size is not recoverable from a global-pooled network; read it from the config
  std::size_t       size = 0;
  std::istringstream in(ck.config);
  std::string        line;
  while (std::getline(in, line))
  {
    if (line.rfind("size=", 0) == 0)
    {
      size = parse_size("size", line.substr(5));
    }
  }
  if (size == 0)
  {
    throw FormatError(FormatError::Kind::Malformed, "classifier checkpoint does not record its input size");
  }
  SeededRng  rng(0);
  LayerStack net = build_network(NetworkSpec::classifier(conv1.dim(0), fc.dim(1), size, size), rng);
  restore_network(ck, "cls/", net);
  return net;
}

}  // namespace casi
