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

#include "cli.hpp"

#include "casi/data_io.hpp"
#include "casi/gradcheck.hpp"
#include "casi/kernels.hpp"
#include "casi/metrics.hpp"
#include "casi/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace casi::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

void write_text(fs::path const &path, std::string const &text)
{
  write_file_atomic(path, std::span(reinterpret_cast<std::uint8_t const *>(text.data()), text.size()));
}

std::string read_text(fs::path const &path)
{
  auto const bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

// `--config FILE` lines become `--key=value` arguments placed before the
// command-line flags, so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
  if (args.empty())
  {
    return args;
  }
  std::vector<std::string> from_file;
  std::vector<std::string> rest{args.front()};
  for (std::size_t i = 1; i < args.size(); ++i)
  {
    std::string path;
    if (args[i] == "--config")
    {
      if (i + 1 >= args.size())
      {
        throw UsageError("--config needs a file argument");
      }
      path = args[++i];
    }
    else if (args[i].rfind("--config=", 0) == 0)
    {
      path = args[i].substr(9);
    }
    else
    {
      rest.push_back(args[i]);
      continue;
    }
    std::istringstream in(read_text(path));
    std::string        line;
    while (std::getline(in, line))
    {
      auto const b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#')
      {
        continue;
      }
      line           = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
      auto const eq  = line.find('=');
      if (eq == std::string::npos)
      {
        throw UsageError("config file " + path + ": expected key=value, got '" + line + "'");
      }
      std::string key = line.substr(0, eq);
      key.erase(key.find_last_not_of(" \t") + 1);
      std::replace(key.begin(), key.end(), '_', '-');
      std::string value = line.substr(eq + 1);
      value.erase(0, value.find_first_not_of(" \t"));
      from_file.push_back("--" + key + "=" + value);
    }
  }
  std::set<std::string> given;
  for (std::size_t i = 1; i < rest.size(); ++i)
  {
    if (rest[i].rfind("--", 0) == 0)
    {
      given.insert(rest[i].substr(0, rest[i].find('=')));
    }
  }
  std::vector<std::string> out{rest.front()};
  for (auto const &entry : from_file)
  {
    if (!given.contains(entry.substr(0, entry.find('='))))
    {
      out.push_back(entry);
    }
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

// Effective options of a subcommand as sorted key=value lines.
std::string echo_config(CLI::App const &sub)
{
  std::map<std::string, std::string> kv;
  for (CLI::Option const *opt : sub.get_options())
  {
    std::string const name = opt->get_single_name();
    if (name == "help" || name == "h" || name == "config" || name.empty())
    {
      continue;
    }
    std::string value;
    if (opt->count() > 0)
    {
      auto const &res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i)
      {
        value += (i ? "," : "") + res[i];
      }
      if (opt->get_type_size() == 0 && value.empty())
      {
        value = "true";
      }
    }
    else
    {
      value = opt->get_type_size() == 0 ? "false" : opt->get_default_str();
    }
    kv[name] = value;
  }
  std::string out = "# " + sub.get_name() + "\n";
  for (auto const &[k, v] : kv)
  {
    out += k + "=" + v + "\n";
  }
  return out;
}

std::vector<std::size_t> labels_of(Manifest const &m)
{
  std::vector<std::size_t> out;
  for (auto const &e : m.entries)
  {
    out.push_back(e.label);
  }
  return out;
}

std::vector<Tensor> masks_for(std::vector<Image> const &images, std::string const &mask_path)
{
  std::vector<Tensor> out;
  std::optional<Tensor> shared;
  if (!mask_path.empty())
  {
    shared = read_mask(mask_path);
  }
  for (auto const &img : images)
  {
    if (shared)
    {
      if (shared->dim(0) != img.height || shared->dim(1) != img.width)
      {
        throw ContractError("mask " + mask_path + " does not match image size " + std::to_string(img.height) +
                            "x" + std::to_string(img.width));
      }
      out.push_back(*shared);
    }
    else
    {
      out.push_back(make_center_mask(img.height, img.width, 0).mask);
    }
  }
  return out;
}

void write_results(Manifest const &manifest, std::vector<Image> const &images, fs::path const &out_dir)
{
  Manifest copy = manifest;
  copy.root     = out_dir;
  for (std::size_t i = 0; i < images.size(); ++i)
  {
    write_image(images[i], out_dir / manifest.entries[i].path);
  }
  save_manifest(copy, out_dir / "results.txt");
}

std::string fixed(double v, int digits)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Options
{
  // shared
  std::uint64_t seed{0};
  int           threads{1};
  std::string   out;
  // data
  std::size_t size{32};
  std::size_t per_class{16};
  std::size_t test_per_class{4};
  std::string manifest;
  std::string test_manifest;
  std::string train_manifest;
  std::string mask;
  // pretrain
  std::size_t epochs{20};
  std::size_t pretrain_batch{16};
  double      pretrain_lr{1e-3};
  std::size_t base_channels{16};
  // train
  TrainConfig train;
  double      lambda_adv{0.001};
  double      lambda_per{0.2};
  std::string variant{"casi"};
  std::string classifier;
  std::string resume;
  // inpaint / baseline / eval
  std::string checkpoint;
  std::string method{"mean"};
  std::string results;
  std::string probs;
  bool        full_image{false};
  // gradcheck
  std::size_t seeds{10};
  double      tolerance{1e-4};
};

int cmd_synth(Options const &o, std::ostream &out)
{
  SynthConfig cfg;
  cfg.images_per_class = o.per_class;
  cfg.test_per_class   = o.test_per_class;
  cfg.image_size       = o.size;
  cfg.seed             = o.seed;
  SynthDataset const ds = synth_dataset(cfg, o.out);
  out << "wrote " << ds.train.size() << " train and " << ds.test.size() << " test images to " << o.out << "\n";
  return kExitOk;
}

int cmd_pretrain(Options const &o, std::ostream &out)
{
  Manifest const     train  = load_manifest(o.manifest);
  auto const         images = load_images(train);
  Manifest           test;
  std::vector<Image> test_images;
  if (!o.test_manifest.empty())
  {
    test        = load_manifest(o.test_manifest);
    test_images = load_images(test);
  }
  PretrainConfig cfg;
  cfg.epochs            = o.epochs;
  cfg.batch_size        = o.pretrain_batch;
  cfg.base_channels     = o.base_channels;
  cfg.adam.learning_rate = o.pretrain_lr;
  cfg.seed              = o.seed;
  PretrainResult r = pretrain_classifier(images, labels_of(train), test_images, labels_of(test), cfg);
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
  {
    out << "epoch " << e + 1 << " loss " << fixed(r.epoch_loss[e], 6) << "\n";
  }
  out << "train_accuracy=" << fixed(r.train_accuracy, 4) << "\n";
  if (!test_images.empty())
  {
    out << "test_accuracy=" << fixed(r.test_accuracy, 4) << "\n";
  }
  save_checkpoint(classifier_checkpoint(r.classifier, cfg.canonical()), o.out);
  return kExitOk;
}

int cmd_train(Options const &o, std::ostream &out)
{
  TrainConfig cfg     = o.train;
  cfg.weights         = LossWeights::with(o.lambda_adv, o.lambda_per);
  cfg.variant         = parse_variant(o.variant);
  cfg.seed            = o.seed;
  cfg.image_size      = o.size;
  cfg.base_channels   = o.base_channels;
  cfg.manifest        = o.manifest;
  cfg.classifier      = o.classifier;
  out << "# effective training config\n" << cfg.canonical();

  Manifest const train  = load_manifest(o.manifest);
  auto const     images = load_images(train);

  TrainState state = [&] {
    if (!o.resume.empty())
    {
      return from_checkpoint(load_checkpoint(o.resume, cfg.fingerprint()), cfg);
    }
    std::optional<LayerStack> cls;
    if (!o.classifier.empty())
    {
      cls = classifier_from_checkpoint(load_checkpoint(o.classifier));
    }
    return init_training(cfg, std::move(cls));
  }();

  fs::path const dir(o.out);
  fs::create_directories(dir);
  write_text(dir / "config.txt", cfg.canonical());
  TrainHooks hooks;
  hooks.checkpoint_path = dir / "checkpoint.ckpt";
  auto const records    = train_casi(state, images, hooks);
  write_text(dir / "losses.csv", loss_csv(records));
  if (!records.empty())
  {
    auto const &first = records.front().losses;
    auto const &last  = records.back().losses;
    out << "l_inp first=" << fixed(first.joint, 6) << " last=" << fixed(last.joint, 6) << "\n";
  }
  out << "checkpoint " << hooks.checkpoint_path->string() << " at iteration " << state.iteration << "\n";
  return kExitOk;
}

int cmd_inpaint(Options const &o, std::ostream &out)
{
  TrainState     state    = from_checkpoint(load_checkpoint(o.checkpoint));
  Manifest const manifest = load_manifest(o.manifest);
  auto const     images   = load_images(manifest);
  auto const     masks    = masks_for(images, o.mask);
  auto const     results  = inpaint_batch(state.generator, images, masks);
  write_results(manifest, results, o.out);
  out << "inpainted " << results.size() << " images into " << o.out << "\n";
  return kExitOk;
}

int cmd_baseline(Options const &o, std::ostream &out)
{
  Manifest const     manifest = load_manifest(o.manifest);
  auto const         images   = load_images(manifest);
  auto const         masks    = masks_for(images, o.mask);
  std::vector<Image> results;
  if (o.method == "mean")
  {
    for (std::size_t i = 0; i < images.size(); ++i)
    {
      results.push_back(mean_fill(images[i], masks[i]));
    }
  }
  else
  {
    if (o.train_manifest.empty())
    {
      throw UsageError("baseline --method nn needs --train-manifest");
    }
    auto const training = load_images(load_manifest(o.train_manifest));
    for (std::size_t i = 0; i < images.size(); ++i)
    {
      results.push_back(nn_inpaint(images[i], masks[i], training).composite);
    }
  }
  write_results(manifest, results, o.out);
  out << o.method << " baseline wrote " << results.size() << " images into " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(Options const &o, std::string const &config, std::ostream &out)
{
  Manifest const           truth = load_manifest(o.manifest);
  auto const               x     = load_images(truth);
  std::vector<Image>       z;
  std::vector<std::string> ids;
  for (auto const &e : truth.entries)
  {
    z.push_back(read_image(fs::path(o.results) / e.path));
    ids.push_back(e.path);
  }
  auto const masks = masks_for(x, o.mask);

  std::optional<std::vector<ClassifierProbs>> probs;
  if (!o.probs.empty())
  {
    auto const                             external = read_probs_csv(o.probs);
    std::map<std::string, ClassifierProbs> by_id;
    for (auto const &p : external)
    {
      by_id[p.sample_id] = p;
    }
    probs.emplace();
    for (auto const &id : ids)
    {
      auto const it = by_id.find(id);
      if (it == by_id.end())
      {
        throw Error("probabilities file has no row for sample " + id);
      }
      probs->push_back(it->second);
    }
  }
  else if (!o.classifier.empty())
  {
    LayerStack cls    = classifier_from_checkpoint(load_checkpoint(o.classifier));
    auto const labels = labels_of(truth);
    auto const px     = label_probabilities(cls, x, labels);
    auto const pz     = label_probabilities(cls, z, labels);
    probs.emplace();
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
      probs->push_back({ids[i], px[i], pz[i], ProbSource::BuiltIn});
    }
  }

  EvalOptions opts;
  opts.full_image = o.full_image;
  opts.threads    = static_cast<std::size_t>(std::max(1, o.threads));
  MetricReport const report = evaluate(ids, x, z, masks, probs, opts);
  fs::path const     dir(o.out);
  write_text(dir / "report.csv", report_csv(report));
  write_text(dir / "report.json", report_json(report, config));
  auto const &m = report.mean;
  out << "mean l1=" << fixed(m.l1_percent, 4) << "% l2=" << fixed(m.l2_percent, 4) << "% psnr=" << fixed(m.psnr_db, 4)
      << "dB ssim=" << fixed(m.ssim, 6) << " fsim=" << fixed(m.fsim, 6) << " fsimc=" << fixed(m.fsimc, 6)
      << " lemse=" << fixed(m.lemse, 6) << " lemae=" << fixed(m.lemae, 6);
  if (report.has_sme)
  {
    out << " sme=" << fixed(m.sme, 6);
  }
  out << "\n";
  return kExitOk;
}

int cmd_gradcheck(Options const &o, std::ostream &out)
{
  auto const reports = run_gradient_suite(o.seed, o.seeds, o.tolerance);
  bool       ok      = true;
  char       line[160];
  std::snprintf(line, sizeof line, "%-26s %14s %10s %s\n", "op", "max_rel_error", "tolerance", "status");
  out << line;
  for (auto const &r : reports)
  {
    std::snprintf(line, sizeof line, "%-26s %14.3e %10.1e %s\n", to_string(r.op).c_str(), r.max_rel_error,
                  r.tolerance, r.passed ? "ok" : "FAIL");
    out << line;
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(std::vector<std::string> const &raw_args, std::ostream &out, std::ostream &err)
{
  Options o;
  CLI::App app{"Context-aware semantic inpainting"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string       config_file;

  auto *synth = app.add_subcommand("synth-data", "Write the toy labelled dataset");
  synth->add_option("--out", o.out, "Dataset root directory")->required();
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--size", o.size, "Image side length (multiple of 8)")->capture_default_str();
  synth->add_option("--per-class", o.per_class, "Training images per class")->capture_default_str();
  synth->add_option("--test-per-class", o.test_per_class, "Held-out images per class")->capture_default_str();

  auto *pretrain = app.add_subcommand("pretrain", "Train the feature classifier");
  pretrain->add_option("--manifest", o.manifest, "Training manifest")->required();
  pretrain->add_option("--test-manifest", o.test_manifest, "Held-out manifest");
  pretrain->add_option("--out", o.out, "Classifier checkpoint path")->required();
  pretrain->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  pretrain->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  pretrain->add_option("--batch", o.pretrain_batch, "Batch size")->capture_default_str();
  pretrain->add_option("--lr", o.pretrain_lr, "Adam learning rate")->capture_default_str();
  pretrain->add_option("--base-channels", o.base_channels, "Base channel count")->capture_default_str();
  pretrain->add_option("--threads", o.threads, "Kernel threads")->capture_default_str();

  auto *train = app.add_subcommand("train", "Adversarial inpainting training");
  train->add_option("--manifest", o.manifest, "Training manifest")->required();
  train->add_option("--classifier", o.classifier, "Classifier checkpoint (needed when lambda-per > 0)");
  train->add_option("--out", o.out, "Output directory")->required();
  train->add_option("--resume", o.resume, "Checkpoint to continue from");
  train->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  train->add_option("--size", o.size, "Image side length")->capture_default_str();
  train->add_option("--overlap", o.train.overlap, "Overlap ring width in pixels")->capture_default_str();
  train->add_option("--lambda-adv", o.lambda_adv, "Adversarial loss weight")->capture_default_str();
  train->add_option("--lambda-per", o.lambda_per, "Perceptual loss weight")->capture_default_str();
  train->add_option("--diters", o.train.d_iters, "Discriminator updates per iteration")->capture_default_str();
  train->add_option("--iters", o.train.max_iterations, "Total iterations")->capture_default_str();
  train->add_option("--batch", o.train.batch_size, "Batch size")->capture_default_str();
  train->add_option("--variant", o.variant, "casi, casi-minus or casi-fc")
      ->check(CLI::IsMember({"casi", "casi-minus", "casi-fc"}))
      ->capture_default_str();
  train->add_option("--base-channels", o.base_channels, "Base channel count")->capture_default_str();
  train->add_option("--lr", o.train.adam.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--checkpoint-interval", o.train.checkpoint_interval, "Iterations between checkpoints")
      ->capture_default_str();
  train->add_option("--threads", o.threads, "Kernel threads")->capture_default_str();

  auto *inpaint = app.add_subcommand("inpaint", "Fill holes with a trained generator");
  inpaint->add_option("--checkpoint", o.checkpoint, "Training checkpoint")->required();
  inpaint->add_option("--manifest", o.manifest, "Images to inpaint")->required();
  inpaint->add_option("--mask", o.mask, "PGM mask (default: centred half-size hole)");
  inpaint->add_option("--out", o.out, "Output directory")->required();
  inpaint->add_option("--threads", o.threads, "Kernel threads")->capture_default_str();

  auto *baseline = app.add_subcommand("baseline", "Mean-fill or nearest-neighbour baselines");
  baseline->add_option("--method", o.method, "mean or nn")->check(CLI::IsMember({"mean", "nn"}))->capture_default_str();
  baseline->add_option("--manifest", o.manifest, "Images to complete")->required();
  baseline->add_option("--train-manifest", o.train_manifest, "Exemplar pool for nn");
  baseline->add_option("--mask", o.mask, "PGM mask (default: centred half-size hole)");
  baseline->add_option("--out", o.out, "Output directory")->required();

  auto *eval = app.add_subcommand("eval", "Metric report for a results directory");
  eval->add_option("--manifest", o.manifest, "Ground-truth manifest")->required();
  eval->add_option("--results", o.results, "Directory with composites at the manifest paths")->required();
  eval->add_option("--mask", o.mask, "PGM mask (default: centred half-size hole)");
  eval->add_option("--probs", o.probs, "External CSV sample_id,p_x,p_z");
  eval->add_option("--classifier", o.classifier, "Classifier checkpoint for SME");
  eval->add_option("--out", o.out, "Report directory")->required();
  eval->add_option("--threads", o.threads, "Parallel images")->capture_default_str();
  eval->add_flag("--full-image", o.full_image, "Pixel errors over the whole composite");

  auto *grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad->add_option("--seed", o.seed, "First seed")->capture_default_str();
  grad->add_option("--seeds", o.seeds, "Number of seeds")->capture_default_str();
  grad->add_option("--tol", o.tolerance, "Relative tolerance")->capture_default_str();
  grad->add_option("--threads", o.threads, "Kernel threads")->capture_default_str();

  for (auto *sub : {synth, pretrain, train, inpaint, baseline, eval, grad})
  {
    // accepted here so it shows in --help; expand_config consumes it first
    sub->add_option("--config", config_file, "key=value file; command-line flags take precedence");
  }

  std::vector<std::string> args;
  try
  {
    args = expand_config(raw_args);
  }
  catch (UsageError const &e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (std::exception const &e)
  {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  std::reverse(args.begin(), args.end());
  try
  {
    app.parse(args);
  }
  catch (CLI::CallForHelp const &)
  {
    out << app.help();
    return kExitOk;
  }
  catch (CLI::ParseError const &e)
  {
    std::ostringstream msg;
    app.exit(e, msg, msg);
    err << msg.str();
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  CLI::App *sub = app.get_subcommands().front();
  kernels::set_thread_count(std::max(1, o.threads));
  std::string const config = echo_config(*sub);
  if (sub != train)
  {
    out << config;
  }
  try
  {
    if (sub == synth)
      return cmd_synth(o, out);
    if (sub == pretrain)
      return cmd_pretrain(o, out);
    if (sub == train)
      return cmd_train(o, out);
    if (sub == inpaint)
      return cmd_inpaint(o, out);
    if (sub == baseline)
      return cmd_baseline(o, out);
    if (sub == eval)
      return cmd_eval(o, config, out);
    return cmd_gradcheck(o, out);
  }
  catch (UsageError const &e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (std::exception const &e)
  {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace casi::cli
