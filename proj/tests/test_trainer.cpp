#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "pcar/adam.hpp"
#include "pcar/checkpoint.hpp"
#include "pcar/random.hpp"
#include "pcar/text_io.hpp"
#include "pcar/trainer.hpp"
#include "support/synthetic.hpp"

using namespace pcar;
namespace pt = pcar::testing;

namespace {

// A voxel plate pair: clean plate plus per-point +1 jitter along z on half
// the points. Small enough that a tiny net can overfit quickly.
PatchPair plate_pair(std::uint64_t seed, std::size_t n = 36) {
  Rng rng(seed);
  std::vector<Vec3> clean;
  std::unordered_map<Coord3, bool, Coord3Hash> seen;
  while (clean.size() < n) {
    Coord3 c{int(rng.uniform_int(0, 5)), int(rng.uniform_int(0, 5)), 2};
    if (seen.emplace(c, true).second) {
      clean.push_back({double(c.x), double(c.y), double(c.z)});
    }
  }
  std::vector<Vec3> noisy = clean;
  for (std::size_t i = 0; i < noisy.size(); i += 2) noisy[i].z += 1.0;

  PatchPair pair;
  pair.noisy = pt::make_patch(noisy, {0, 0, 0}, 6.0);
  pair.clean = pt::make_patch(clean, {0, 0, 0}, 6.0);
  return pair;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), std::streamsize(bytes.size()));
}

NetConfig tiny_config(HeadMode mode = HeadMode::OneHot) {
  NetConfig cfg;
  cfg.depth = 1;
  cfg.base_channels = 4;
  cfg.head_mode = mode;
  cfg.train.lr = 5e-3;
  cfg.train.steps = 200;
  cfg.train.batch = 1;
  cfg.train.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("adam_step matches the textbook update") {
  std::vector<Tensor> params(2);
  params[0] = {"a", {2}, {1.0, -2.0}};
  params[1] = {"b", {1, 2}, {0.5, 0.0}};
  AdamState state = make_adam_state(params);

  // independent reference state
  std::vector<std::vector<double>> rm{{0, 0}, {0, 0}}, rv{{0, 0}, {0, 0}};
  std::vector<std::vector<double>> rp{{1.0, -2.0}, {0.5, 0.0}};

  Rng rng(555);
  const double lr = 0.01;
  for (int t = 1; t <= 5; ++t) {
    std::vector<std::vector<double>> grads{{rng.normal(), rng.normal()},
                                           {rng.normal(), rng.normal()}};
    adam_step(params, grads, state, lr);

    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double g = grads[i][j];
        rm[i][j] = 0.9 * rm[i][j] + 0.1 * g;
        rv[i][j] = 0.999 * rv[i][j] + 0.001 * g * g;
        const double mhat = rm[i][j] / (1.0 - std::pow(0.9, t));
        const double vhat = rv[i][j] / (1.0 - std::pow(0.999, t));
        rp[i][j] -= lr * mhat / (std::sqrt(vhat) + 1e-8);
        CHECK(params[i].data[j] == doctest::Approx(rp[i][j]).epsilon(1e-12));
      }
    }
  }
  CHECK(state.t == 5);

  std::vector<std::vector<double>> bad{{1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(adam_step(params, bad, state, lr), std::invalid_argument);
  std::vector<std::vector<double>> wrong_count{{1.0, 2.0}};
  CHECK_THROWS_AS(adam_step(params, wrong_count, state, lr), std::invalid_argument);
}

TEST_CASE("first adam step moves each parameter by about lr") {
  std::vector<Tensor> params(1);
  params[0] = {"p", {3}, {0.0, 10.0, -5.0}};
  AdamState state = make_adam_state(params);
  const std::vector<std::vector<double>> grads{{0.3, -40.0, 1e-3}};
  adam_step(params, grads, state, 0.1);
  // bias-corrected first step: p -= lr * g / (|g| + eps)
  CHECK(params[0].data[0] == doctest::Approx(0.0 - 0.1).epsilon(1e-6));
  CHECK(params[0].data[1] == doctest::Approx(10.0 + 0.1).epsilon(1e-6));
  CHECK(params[0].data[2] == doctest::Approx(-5.0 - 0.1).epsilon(1e-4));
}

TEST_CASE("training overfits a single pair") {
  const PatchPair pair = plate_pair(71);
  Network net(tiny_config());
  const TrainResult r = train(net, std::vector<PatchPair>{pair});
  REQUIRE(r.losses.size() == 200);
  for (const double l : r.losses) CHECK(std::isfinite(l));
  CHECK(r.losses.back() <= 0.5 * r.losses.front());
}

TEST_CASE("training is deterministic") {
  const PatchPair pair = plate_pair(72);
  NetConfig cfg = tiny_config();
  cfg.train.steps = 40;

  Network a(cfg);
  Network b(cfg);
  const TrainResult ra = train(a, std::vector<PatchPair>{pair});
  const TrainResult rb = train(b, std::vector<PatchPair>{pair});
  CHECK(ra.losses == rb.losses);  // bit-identical
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].data == b.parameters()[i].data);
  }

  const auto dir = pt::scratch_dir("trainer_determinism");
  save_checkpoint(dir / "a.ckpt", a);
  save_checkpoint(dir / "b.ckpt", b);
  CHECK(read_bytes(dir / "a.ckpt") == read_bytes(dir / "b.ckpt"));
}

TEST_CASE("zero steps leave the initialization untouched") {
  NetConfig cfg = tiny_config();
  cfg.train.steps = 0;
  Network net(cfg);
  const Network fresh(cfg);
  const TrainResult r = train(net, std::vector<PatchPair>{plate_pair(73)});
  CHECK(r.losses.empty());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    CHECK(net.parameters()[i].data == fresh.parameters()[i].data);
  }
}

TEST_CASE("batched training consumes pairs round-robin and stays deterministic") {
  std::vector<PatchPair> pairs{plate_pair(74), plate_pair(75), plate_pair(76)};
  NetConfig cfg = tiny_config();
  cfg.train.steps = 15;
  cfg.train.batch = 2;

  Network a(cfg);
  Network b(cfg);
  const TrainResult ra = train(a, pairs);
  const TrainResult rb = train(b, pairs);
  REQUIRE(ra.losses.size() == 15);
  CHECK(ra.losses == rb.losses);
  for (const double l : ra.losses) CHECK(std::isfinite(l));
}

TEST_CASE("training aborts with the step number on non-finite loss") {
  std::vector<PatchPair> pairs{plate_pair(77)};
  NetConfig cfg = tiny_config(HeadMode::Soft);
  cfg.train.steps = 5;
  Network net(cfg);
  for (Tensor& p : net.parameters()) {
    if (p.name == "head.b") p.data[0] = std::numeric_limits<double>::quiet_NaN();
  }
  CHECK_THROWS_WITH_AS(train(net, pairs), doctest::Contains("step"),
                       std::runtime_error);
}

TEST_CASE("train validates its inputs") {
  NetConfig cfg = tiny_config();
  Network net(cfg);
  CHECK_THROWS_AS(train(net, std::span<const PatchPair>{}), std::invalid_argument);

  NetConfig bad = cfg;
  bad.train.lr = 0.0;
  Network net2(bad);
  CHECK_THROWS_AS(train(net2, std::vector<PatchPair>{plate_pair(78)}),
                  std::invalid_argument);
}

TEST_CASE("loss CSV lists one step per row") {
  const auto dir = pt::scratch_dir("loss_csv");
  const std::vector<double> losses{2.5, 1.25, 0.75};
  write_loss_csv(dir / "loss.csv", losses);
  CHECK(read_text_file(dir / "loss.csv") == "step,loss\n0,2.5\n1,1.25\n2,0.75\n");
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

TEST_CASE("checkpoints round trip the network exactly") {
  const auto dir = pt::scratch_dir("ckpt_roundtrip");
  NetConfig cfg;
  cfg.depth = 2;
  cfg.base_channels = 4;
  cfg.head_mode = HeadMode::Soft;
  cfg.train.lr = 2.5e-4;
  cfg.train.steps = 321;
  cfg.train.batch = 3;
  cfg.train.seed = 99;
  const Network net(cfg);

  save_checkpoint(dir / "net.ckpt", net);
  const Network back = load_checkpoint(dir / "net.ckpt");

  CHECK(back.config().depth == cfg.depth);
  CHECK(back.config().base_channels == cfg.base_channels);
  CHECK(back.config().head_mode == cfg.head_mode);
  CHECK(back.config().train.lr == cfg.train.lr);
  CHECK(back.config().train.steps == cfg.train.steps);
  CHECK(back.config().train.batch == cfg.train.batch);
  CHECK(back.config().train.seed == cfg.train.seed);

  REQUIRE(back.parameters().size() == net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    CHECK(back.parameters()[i].name == net.parameters()[i].name);
    CHECK(back.parameters()[i].shape == net.parameters()[i].shape);
    CHECK(back.parameters()[i].data == net.parameters()[i].data);
  }

  // loaded network behaves identically
  Rng rng(1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) {
    pts.push_back({double(rng.uniform_int(0, 5)), double(rng.uniform_int(0, 5)),
                   double(rng.uniform_int(0, 5))});
  }
  const Patch patch = pt::make_patch(std::move(pts), {0, 0, 0}, 6.0);
  const Patch a = infer(net, patch);
  const Patch b = infer(back, patch);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.positions[i] == b.positions[i]);
}

TEST_CASE("checkpoint loading rejects corruption") {
  const auto dir = pt::scratch_dir("ckpt_corrupt");
  const Network net(tiny_config());
  save_checkpoint(dir / "good.ckpt", net);
  const std::string good = read_bytes(dir / "good.ckpt");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), std::runtime_error);
  }
  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    write_bytes(dir / "bad.ckpt", bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "bad.ckpt"),
                         doctest::Contains("magic"), std::runtime_error);
  }
  SUBCASE("unsupported version") {
    std::string bad = good;
    bad[8] = char(0xFF);
    write_bytes(dir / "ver.ckpt", bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "ver.ckpt"),
                         doctest::Contains("version"), std::runtime_error);
  }
  SUBCASE("truncated payload") {
    write_bytes(dir / "trunc.ckpt", good.substr(0, good.size() - 9));
    CHECK_THROWS_AS(load_checkpoint(dir / "trunc.ckpt"), std::runtime_error);
  }
  SUBCASE("trailing garbage") {
    write_bytes(dir / "extra.ckpt", good + "zzz");
    CHECK_THROWS_AS(load_checkpoint(dir / "extra.ckpt"), std::runtime_error);
  }
  SUBCASE("tensor name flipped") {
    std::string bad = good;
    const auto at = bad.find("stem.w");
    REQUIRE(at != std::string::npos);
    bad[at] = 't';
    write_bytes(dir / "name.ckpt", bad);
    CHECK_THROWS_AS(load_checkpoint(dir / "name.ckpt"), std::runtime_error);
  }
}

TEST_CASE("saving twice produces byte-identical files") {
  const auto dir = pt::scratch_dir("ckpt_stable");
  const Network net(tiny_config());
  save_checkpoint(dir / "one.ckpt", net);
  save_checkpoint(dir / "two.ckpt", net);
  CHECK(read_bytes(dir / "one.ckpt") == read_bytes(dir / "two.ckpt"));
}
