#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "emphi/common.hpp"
#include "emphi/nn.hpp"

using namespace emphi;
using ad::Mat;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "emphi-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("param store keeps creation order and rejects duplicates") {
  nn::ParamStore store;
  store.create("b", 2, 3);
  store.create("a", 1, 4);
  CHECK(store.tensor_count() == 2);
  CHECK(store.total_parameters() == 10);
  CHECK(store.all()[0]->name == "b");
  CHECK(store.all()[1]->name == "a");
  CHECK(&store.by_name("a") == store.all()[1]);
  CHECK_THROWS_AS(store.create("a", 1, 1), EmphiError);
  CHECK_THROWS_AS(store.by_name("missing"), EmphiError);

  store.by_name("a").grad.setOnes();
  store.zero_grads();
  CHECK(store.by_name("a").grad.isZero());
}

TEST_CASE("initialization is deterministic and treats rows-1 tensors as biases") {
  nn::ParamStore s1, s2;
  s1.create("w", 4, 4);
  s1.create("bias", 1, 4);
  s2.create("w", 4, 4);
  s2.create("bias", 1, 4);
  RngStream r1(42), r2(42);
  nn::init_params(s1.all(), r1);
  nn::init_params(s2.all(), r2);
  CHECK(s1.by_name("w").value == s2.by_name("w").value);
  CHECK(s1.by_name("bias").value.isZero());
  CHECK_FALSE(s1.by_name("w").value.isZero());

  RngStream r3(43);
  nn::init_params(s2.all(), r3);
  CHECK_FALSE(s1.by_name("w").value == s2.by_name("w").value);
}

TEST_CASE("tensor files round-trip and validate names and shapes") {
  nn::ParamStore store;
  store.create("w", 3, 2);
  store.create("b", 1, 2);
  RngStream rng(7);
  nn::init_params(store.all(), rng);
  store.by_name("b").value << 0.25, -0.5;

  auto path = temp_file("tensors.bin");
  nn::save_tensors(path, store.all());

  nn::ParamStore other;
  other.create("w", 3, 2);
  other.create("b", 1, 2);
  nn::load_tensors(path, other.all());
  CHECK(other.by_name("w").value == store.by_name("w").value);
  CHECK(other.by_name("b").value == store.by_name("b").value);

  nn::ParamStore wrong_shape;
  wrong_shape.create("w", 2, 3);
  wrong_shape.create("b", 1, 2);
  CHECK_THROWS_AS(nn::load_tensors(path, wrong_shape.all()), EmphiError);

  nn::ParamStore wrong_name;
  wrong_name.create("w2", 3, 2);
  wrong_name.create("b", 1, 2);
  CHECK_THROWS_AS(nn::load_tensors(path, wrong_name.all()), EmphiError);
}

TEST_CASE("linear applies xW + b rowwise") {
  nn::ParamStore store;
  nn::Linear lin(store, "lin", 3, 2);
  lin.W->value << 1, 0, 0, 1, 1, 1;
  lin.b->value << 0.5, -0.5;

  ad::Graph g;
  Mat x(2, 3);
  x << 1, 2, 3, 0, 1, 0;
  const Mat& y = g.value(lin.apply(g, g.input(x)));
  CHECK(y(0, 0) == doctest::Approx(1 + 3 + 0.5));
  CHECK(y(0, 1) == doctest::Approx(2 + 3 - 0.5));
  CHECK(y(1, 0) == doctest::Approx(0.5));
  CHECK(y(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("ffn2 is relu between two affine maps") {
  nn::ParamStore store;
  nn::Ffn2 ffn(store, "ffn", 1, 2, 1);
  ffn.l1.W->value << 1.0, -1.0;
  ffn.l1.b->value << 0.0, 0.0;
  ffn.l2.W->value << 1.0, 1.0;
  ffn.l2.b->value << 0.25;

  ad::Graph g;
  Mat x(2, 1);
  x << 2.0, -3.0;
  const Mat& y = g.value(ffn.apply(g, g.input(x)));
  CHECK(y(0, 0) == doctest::Approx(2.0 + 0.25));   // relu(2) + relu(-2) + b
  CHECK(y(1, 0) == doctest::Approx(3.0 + 0.25));   // relu(-3) + relu(3) + b
}

TEST_CASE("gru step matches a scalar hand computation") {
  nn::ParamStore store;
  nn::GruCell cell(store, "gru", 1, 1);
  cell.Wr->value << 0.5;
  cell.Wz->value << -0.3;
  cell.Wn->value << 0.8;
  cell.Ur->value << 0.2;
  cell.Uz->value << 0.4;
  cell.Un->value << -0.6;
  cell.br->value << 0.1;
  cell.bz->value << -0.2;
  cell.bn->value << 0.05;

  double x = 0.7, h = -0.4;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double r = sig(x * 0.5 + h * 0.2 + 0.1);
  double z = sig(x * -0.3 + h * 0.4 - 0.2);
  double n = std::tanh(x * 0.8 + r * h * -0.6 + 0.05);
  double expect = z * h + (1.0 - z) * n;

  ad::Graph g;
  Mat xm(1, 1), hm(1, 1);
  xm << x;
  hm << h;
  const Mat& out = g.value(cell.step(g, g.input(xm), g.input(hm)));
  CHECK(out(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("masked gru step freezes masked rows exactly") {
  nn::ParamStore store;
  nn::GruCell cell(store, "gru", 2, 3);
  RngStream rng(5);
  nn::init_params(store.all(), rng);

  ad::Graph g;
  Mat x(2, 2);
  x << 0.3, -0.2, 1.0, 0.4;
  Mat h(2, 3);
  h << 0.1, 0.2, 0.3, -0.1, -0.2, -0.3;
  Mat mask(2, 1);
  mask << 1.0, 0.0;

  ad::Var stepped = cell.step(g, g.input(x), g.input(h));
  ad::Var masked = cell.masked_step(g, g.input(x), g.input(h), g.input(mask));
  CHECK(g.value(masked).row(0) == g.value(stepped).row(0));
  CHECK(g.value(masked).row(1) == h.row(1));
}

TEST_CASE("adam descends a quadratic and clips huge gradients") {
  nn::ParamStore store;
  ad::Tensor& t = store.create("x", 1, 1);
  t.value << 5.0;

  nn::Adam opt(store.all(), 0.1);
  for (int i = 0; i < 200; ++i) {
    store.zero_grads();
    t.grad << 2.0 * t.value(0, 0);
    opt.step();
  }
  CHECK(std::abs(t.value(0, 0)) < 1e-2);
  CHECK(opt.steps_taken() == 200);

  // With clip_norm 5, a gradient of 1e6 acts like 5, so the first update
  // cannot exceed the learning rate by much.
  nn::ParamStore store2;
  ad::Tensor& u = store2.create("x", 1, 1);
  u.value << 1.0;
  nn::Adam opt2(store2.all(), 0.1, 5.0);
  u.grad << 1e6;
  opt2.step();
  CHECK(std::abs(u.value(0, 0) - 1.0) < 0.11);
}

TEST_CASE("adam learning rate can be rescheduled") {
  nn::ParamStore store;
  ad::Tensor& t = store.create("x", 1, 1);
  nn::Adam opt(store.all(), 0.5);
  CHECK(opt.lr() == 0.5);
  opt.set_lr(0.25);
  CHECK(opt.lr() == 0.25);
}

TEST_CASE("argmax_row breaks ties toward the lower index") {
  Mat m(2, 4);
  m << 0.1, 0.7, 0.7, 0.2, 0.9, 0.1, 0.1, 0.9;
  CHECK(nn::argmax_row(m, 0) == 1);
  CHECK(nn::argmax_row(m, 1) == 0);
}
