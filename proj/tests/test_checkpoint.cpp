#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vkd/checkpoint.hpp"
#include "vkd/model.hpp"
#include "vkd/optim.hpp"
#include "vkd/rng.hpp"

using namespace vkd;

namespace {

std::filesystem::path temp_file(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("checkpoint round-trips a model bit-exactly") {
  auto m = make_model("tinyconv", 0, 12, 42);
  // dirty the running statistics so they are not at defaults
  Rng rng(1);
  Tensor4 imgs(4, 3, 16, 16);
  for (auto& v : imgs.v) v = rng.uniform();
  auto raw = m.embed(imgs, RunMode::train);
  m.head(raw, RunMode::train);
  m.norm_mean = {0.41, 0.52, 0.63};
  m.norm_std = {0.21, 0.22, 0.23};

  const auto path = temp_file("vkd_ckpt_test.bin");
  auto ck = model_to_checkpoint(m, "teacher", "cfg123");
  ck.save(path);

  auto loaded_ck = Checkpoint::load(path);
  REQUIRE(loaded_ck.meta_at("stage") == "teacher");
  REQUIRE(loaded_ck.meta_at("config_hash") == "cfg123");
  REQUIRE(loaded_ck.meta_at("arch") == "tinyconv");

  auto m2 = model_from_checkpoint(loaded_ck);
  REQUIRE(m2.param_hash() == m.param_hash());
  REQUIRE(m2.norm_mean == m.norm_mean);
  REQUIRE(m2.norm_std == m.norm_std);

  // and the forward pass agrees bitwise
  auto a = m.embed(imgs, RunMode::eval);
  auto b = m2.embed(imgs, RunMode::eval);
  REQUIRE(a.v == b.v);

  // saving the reloaded model reproduces the file byte-for-byte
  const auto path2 = temp_file("vkd_ckpt_test2.bin");
  model_to_checkpoint(m2, "teacher", "cfg123").save(path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  REQUIRE(s1 == s2);
  REQUIRE(!s1.empty());
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoint rejects junk") {
  const auto path = temp_file("vkd_ckpt_junk.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint at all";
  }
  REQUIRE_THROWS_AS(Checkpoint::load(path), FormatError);
  REQUIRE_THROWS_AS(Checkpoint::load("/nonexistent/nope.bin"), IoError);

  // truncation mid-tensor
  auto m = make_model("microconv", 0, 3, 1);
  auto ck = model_to_checkpoint(m, "teacher", "x");
  ck.save(path);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full / 2);
  REQUIRE_THROWS_AS(Checkpoint::load(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("adam takes sane steps and serializes its moments") {
  // minimize f(x) = sum x_i^2 from x = (5, -3)
  std::vector<double> x{5.0, -3.0};
  std::vector<double> g(2, 0.0);
  std::vector<NamedParam> params{{"x", &x, &g}};

  Adam opt;
  for (int it = 0; it < 400; ++it) {
    g[0] = 2 * x[0];
    g[1] = 2 * x[1];
    opt.step(params, 0.05);
  }
  REQUIRE(std::abs(x[0]) < 1e-2);
  REQUIRE(std::abs(x[1]) < 1e-2);
  REQUIRE(opt.steps() == 400);

  // serialize moments, continue two copies in lockstep
  Checkpoint ck;
  opt.write_to(ck);
  ck.tensors["x"] = x;

  Adam opt2;
  opt2.read_from(ck);
  std::vector<double> x2 = ck.tensor("x");
  std::vector<double> g2(2, 0.0);
  std::vector<NamedParam> params2{{"x", &x2, &g2}};
  REQUIRE(opt2.steps() == 400);

  for (int it = 0; it < 10; ++it) {
    g[0] = 2 * x[0];
    g[1] = 2 * x[1];
    opt.step(params, 0.05);
    g2[0] = 2 * x2[0];
    g2[1] = 2 * x2[1];
    opt2.step(params2, 0.05);
  }
  REQUIRE(x == x2);  // bitwise: resume must not perturb the trajectory
}
