#include "afe/config.hpp"
#include "testing.hpp"

#include <doctest.h>

#include <fstream>

using namespace afe;

TEST_CASE("an empty file yields the defaults") {
  const auto c = parse_config("");
  CHECK(c.sample_rate == 22050);
  CHECK(c.window_seconds == 7.0);
  CHECK(c.features.frames.frame_length == 2048);
  CHECK(c.features.frames.hop == 512);
  CHECK(c.select.variance_threshold == 0.02);
  CHECK(c.select.chi2_k == 60);
  CHECK(c.select.kde_overlap == 0.75);
  CHECK(c.select.spearman_threshold == 0.08);
  CHECK(c.test_fraction == 0.15);
  CHECK(c.stop_epochs == std::vector<int>{140, 200, 300});
  CHECK_FALSE(c.seed.has_value());
  CHECK_THROWS_AS(c.require_seed(), ConfigError);
  const auto t = c.nn_config(9);
  CHECK(t.max_epochs == 300);
  CHECK(t.batch_size == 16);
  CHECK(t.seed == 9);
}

TEST_CASE("the shipped configuration parses to the defaults") {
  const auto c = load_config(std::filesystem::path(AFE_SOURCE_DIR) / "config" / "afe.ini");
  const RunConfig d;
  CHECK(c.sample_rate == d.sample_rate);
  CHECK(c.select.chi2_k == d.select.chi2_k);
  CHECK(c.shrink.span_fraction == d.shrink.span_fraction);
  CHECK(c.stop_epochs == d.stop_epochs);
  CHECK(c.require_seed() == 1);
  CHECK(c.out_dir == std::filesystem::path(AFE_SOURCE_DIR) / "config" / "../out");
}

TEST_CASE("values and paths") {
  const auto c = parse_config(
      "[paths]\nmanifest = data/m.tsv\nout = /tmp/x\n[select]\nchi2_k = 10\n[nn]\nstop_epochs = 5, 10 ,20\n"
      "[run]\nseed = 42\n",
      "/base");
  CHECK(c.manifest == std::filesystem::path("/base/data/m.tsv"));
  CHECK(c.out_dir == std::filesystem::path("/tmp/x"));
  CHECK(c.select.chi2_k == 10);
  CHECK(c.stop_epochs == std::vector<int>{5, 10, 20});
  CHECK(c.require_seed() == 42);
}

TEST_CASE("bad configurations are config errors") {
  for (const char* text : {
           "[select]\nchi2_k = ten\n",
           "[select]\nbogus = 1\n",
           "[nowhere]\nx = 1\n",
           "[frames]\nwindow = hamming\n",
           "[split]\ntest_fraction = 1.5\n",
           "[nn]\nstop_epochs = 10, 20\n",
           "[nn]\nstop_epochs = 20, 10, 30\n",
           "[nn]\nstop_epochs = 10,,20\n",
           "[cv]\nk = 1\n",
           "[cv]\npoints = 4\n",
           "[audio]\nwindow_seconds = 0.05\n",
           "[run]\nseed = -3\n",
           "[select\n",
       }) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/afe.ini"), ConfigError);
}

TEST_CASE("config errors carry exit code 2") {
  try {
    parse_config("[cv]\nk = 1\n");
  } catch (const Error& e) {
    CHECK(e.exit_code() == 2);
  }
}
