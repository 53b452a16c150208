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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;
using casi::cli::run;

namespace {

struct Result
{
  int         code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> const &args)
{
  std::ostringstream out, err;
  int const          code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test
{
protected:
  void SetUp() override
  {
    auto const *info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() /
            ("casi_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override
  {
    fs::remove_all(root_);
  }

  std::string path(std::string const &rel) const
  {
    return (root_ / rel).string();
  }

  void make_data(std::string const &name, std::string const &seed = "3")
  {
    ASSERT_EQ(call({"synth-data", "--out", path(name), "--size", "16", "--per-class", "2",
                    "--test-per-class", "1", "--seed", seed})
                  .code,
              0);
  }

  std::vector<std::string> train_args(std::string const &out, std::string const &iters) const
  {
    return {"train", "--manifest", path("data/train.txt"), "--out", path(out), "--size", "16",
            "--base-channels", "4", "--batch", "2", "--overlap", "2", "--lambda-per", "0",
            "--iters", iters, "--seed", "4"};
  }

  fs::path root_;
};

std::string slurp(fs::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(fs::path const &dir)
{
  std::map<std::string, std::string> files;
  for (auto const &e : fs::recursive_directory_iterator(dir))
  {
    if (e.is_regular_file())
    {
      files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
  }
  return files;
}

}  // namespace

TEST_F(CliTest, UsageErrorsExitWithTwo)
{
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"eval", "--frobnicate"}).code, 2);
  EXPECT_EQ(call({"train", "--out", path("x")}).code, 2);
  EXPECT_EQ(call({"train", "--manifest", "m", "--out", "o", "--variant", "casi-plus"}).code, 2);
  EXPECT_EQ(call({"synth-data", "--out", path("x"), "--config"}).code, 2);
  EXPECT_EQ(call({"--help"}).code, 0);
}

TEST_F(CliTest, MissingFilesExitWithOne)
{
  auto const r = call({"eval", "--manifest", path("nope.txt"), "--results", path(""), "--out", path("e")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nope.txt"), std::string::npos);
  EXPECT_EQ(call({"inpaint", "--checkpoint", path("none.ckpt"), "--manifest", path("m.txt"), "--out",
                  path("o")})
                .code,
            1);
}

TEST_F(CliTest, EveryRunEchoesItsConfig)
{
  auto const r = call({"synth-data", "--out", path("d"), "--size", "16", "--per-class", "1",
                       "--test-per-class", "1", "--seed", "8"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("# synth-data\n", 0), 0u);
  EXPECT_NE(r.out.find("\nseed=8\n"), std::string::npos);
  EXPECT_NE(r.out.find("\nsize=16\n"), std::string::npos);
}

TEST_F(CliTest, ConfigFileLosesToFlags)
{
  std::ofstream(path("c.txt")) << "# toy\nseed = 9\nper_class=1\ntest-per-class=1\nsize=16\n";
  auto const r = call({"synth-data", "--config", path("c.txt"), "--out", path("d"), "--seed", "3"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\nseed=3\n"), std::string::npos);
  EXPECT_NE(r.out.find("\nper-class=1\n"), std::string::npos);

  std::ofstream(path("bad.txt")) << "seed\n";
  EXPECT_EQ(call({"synth-data", "--config", path("bad.txt"), "--out", path("d")}).code, 2);
  EXPECT_EQ(call({"synth-data", "--config", path("missing.txt"), "--out", path("d")}).code, 1);
}

TEST_F(CliTest, SynthDataIsDeterministic)
{
  make_data("a");
  make_data("b");
  make_data("c", "4");
  EXPECT_EQ(tree(path("a")), tree(path("b")));
  EXPECT_NE(tree(path("a")), tree(path("c")));
}

TEST_F(CliTest, EvalOfGroundTruthIsIdentity)
{
  make_data("data");
  ASSERT_EQ(call({"eval", "--manifest", path("data/test.txt"), "--results", path("data"), "--out",
                  path("ev")})
                .code,
            0);
  std::istringstream csv(slurp(path("ev/report.csv")));
  std::string        line;
  std::getline(csv, line);
  EXPECT_EQ(line, "sample_id,l1_percent,l2_percent,psnr_db,ssim,fsim,fsimc,lemse,lemae,sme");
  std::vector<std::string> ids;
  while (std::getline(csv, line))
  {
    ids.push_back(line.substr(0, line.find(',')));
    if (ids.back() != "mean")
    {
      EXPECT_EQ(line.substr(line.find(',')), ",0,0,99,1,1,1,0,0,") << line;
    }
  }
  std::vector<std::string> const expect{"test/circle/0.ppm", "test/square/0.ppm", "test/stripes/0.ppm",
                                        "test/gradient/0.ppm", "mean"};
  EXPECT_EQ(ids, expect);
  EXPECT_TRUE(fs::exists(path("ev/report.json")));
}

TEST_F(CliTest, TrainingAndInferenceAreDeterministic)
{
  make_data("data");
  ASSERT_EQ(call(train_args("t1", "2")).code, 0);
  ASSERT_EQ(call(train_args("t2", "2")).code, 0);
  EXPECT_EQ(tree(path("t1")), tree(path("t2")));

  for (std::string const out : {"r1", "r2"})
  {
    ASSERT_EQ(call({"inpaint", "--checkpoint", path("t1/checkpoint.ckpt"), "--manifest",
                    path("data/test.txt"), "--out", path(out)})
                  .code,
              0);
  }
  EXPECT_EQ(tree(path("r1")), tree(path("r2")));

  for (std::string const out : {"b1", "b2"})
  {
    ASSERT_EQ(call({"baseline", "--method", "nn", "--manifest", path("data/test.txt"), "--train-manifest",
                    path("data/train.txt"), "--out", path(out)})
                  .code,
              0);
  }
  EXPECT_EQ(tree(path("b1")), tree(path("b2")));
  EXPECT_EQ(call({"baseline", "--method", "nn", "--manifest", path("data/test.txt"), "--out", path("b3")}).code,
            2);
}

TEST_F(CliTest, ResumedTrainingMatchesUninterrupted)
{
  make_data("data");
  ASSERT_EQ(call(train_args("full", "4")).code, 0);
  ASSERT_EQ(call(train_args("part", "2")).code, 0);
  auto args = train_args("part", "4");
  args.insert(args.end(), {"--resume", path("part/checkpoint.ckpt")});
  ASSERT_EQ(call(args).code, 0);
  EXPECT_EQ(slurp(path("full/checkpoint.ckpt")), slurp(path("part/checkpoint.ckpt")));

  auto other = train_args("other", "4");
  other.insert(other.end(), {"--resume", path("part/checkpoint.ckpt"), "--lambda-adv", "0.01"});
  EXPECT_EQ(call(other).code, 1);
}

TEST_F(CliTest, GradcheckReportsEveryOp)
{
  auto const r = call({"gradcheck", "--seeds", "1"});
  EXPECT_EQ(r.code, 0);
  for (char const *op : {"conv2d", "transposed_conv2d", "batchnorm2d", "linear", "pixel_l2_loss"})
  {
    EXPECT_NE(r.out.find(op), std::string::npos) << op;
  }
  EXPECT_EQ(r.out.find(" FAIL"), std::string::npos);
}
